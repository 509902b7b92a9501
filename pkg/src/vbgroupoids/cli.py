"""Command-line interface: check, construct, certify, compute, descend, generate.

Reports stream as JSON lines on stdout so long verification suites can be
monitored; the final line is a summary with the exit status.  Exit codes:
0 = all checks passed, 1 = a mathematical check failed, 2 = input or usage
error.  Identical inputs and seeds produce byte-identical output; wall-clock
timing is printed to stderr only when --timings is given.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from fractions import Fraction
from pathlib import Path

from . import io as vio
from .cohomology import hvb_equals_hlin, induced_map_vb, ruth_complex, ruth_vs_dual_vb
from .descent import (
    DescentProblem,
    PartitionOfUnity,
    descend_map,
    descend_pipeline,
    make_descent_problem,
    uniform_partition,
)
from .generators import (
    acyclic_ruth,
    base_groupoids,
    make_map_descent_fixture,
    make_object_descent_fixture,
    named_reps,
    rank_drop_fixture,
    random_gauge,
    ruth_suite,
    seed_ruths,
)
from .groupoid import FiniteGroupoid, GroupoidMap, is_morita, validate_groupoid, validate_map
from .linalg import betti_numbers, complex_cohomology
from .report import InvalidStructureError
from .ruth import TwoTermRuth, check_ruth, dual_ruth
from .vb import (
    VBGroupoid,
    VBMap,
    check_vbgroupoid,
    check_vbmap,
    choose_cleavage,
    dual_vb,
    grothendieck,
    is_vb_morita,
    split,
)

import random


def _emit(obj: dict) -> None:
    sys.stdout.write(json.dumps(obj, sort_keys=True) + "\n")


def _int_env(name: str, default: int) -> int:
    val = os.environ.get(name)
    if val is None:
        return default
    try:
        return int(val)
    except ValueError:
        raise SystemExit(2)


def _write_out(out_dir: str, filename: str, objects: dict) -> str:
    path = Path(out_dir)
    path.mkdir(parents=True, exist_ok=True)
    target = path / filename
    target.write_text(vio.dumps_instance(objects), encoding="utf-8")
    return str(target)


def _load(path: str) -> vio.Instance:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise vio.ParseError(f"cannot read {path}: {e}") from None
    return vio.loads_instance(text)


def _groupoid_name(inst: vio.Instance, obj) -> str:
    for name, val in inst.objects.items():
        if val is obj:
            return name
    return "base"


def cmd_check(args) -> int:
    inst = _load(args.file)
    names = args.names.split(",") if args.names else sorted(inst.objects)
    failed = 0
    for name in names:
        obj = inst.get(name)
        kind = inst.kinds[name]
        if kind == "groupoid":
            rep = validate_groupoid(obj)
        elif kind == "groupoid_map":
            rep = validate_map(obj)
        elif kind == "ruth":
            rep = check_ruth(obj)
        elif kind == "vbgroupoid":
            rep = check_vbgroupoid(obj)
        elif kind == "vbmap":
            rep = check_vbmap(obj)
        else:
            _emit({"event": "check", "name": name, "type": kind, "ok": True, "note": "no checker"})
            continue
        _emit(
            {
                "event": "check",
                "name": name,
                "type": kind,
                "ok": rep.ok,
                "violations": rep.to_json(),
            }
        )
        if not rep.ok:
            failed += 1
    return 1 if failed else 0


def cmd_groth(args) -> int:
    inst = _load(args.file)
    r = inst.get(args.name, "ruth")
    v = grothendieck(r)
    base_name = _groupoid_name(inst, r.base)
    _emit({"event": "groth", "name": args.name, "gamma_dims": list(v.gamma_dims)})
    if args.out:
        path = _write_out(
            args.out,
            f"groth-{args.name}.json",
            {
                base_name: vio.groupoid_to_json(r.base),
                f"{args.name}.groth": vio.vbgroupoid_to_json(v, base_name),
            },
        )
        _emit({"event": "written", "path": path})
    return 0


def cmd_split(args) -> int:
    inst = _load(args.file)
    v = inst.get(args.name, "vbgroupoid")
    r, iso = split(v, choose_cleavage(v))
    base_name = _groupoid_name(inst, v.base)
    _emit(
        {
            "event": "split",
            "name": args.name,
            "e_dims": list(r.e_dims),
            "c_dims": list(r.c_dims),
            "iso_ok": check_vbmap(iso).ok,
        }
    )
    if args.out:
        path = _write_out(
            args.out,
            f"split-{args.name}.json",
            {
                base_name: vio.groupoid_to_json(v.base),
                f"{args.name}.split": vio.ruth_to_json(r, base_name),
            },
        )
        _emit({"event": "written", "path": path})
    return 0


def cmd_morita(args) -> int:
    inst = _load(args.file)
    obj = inst.get(args.name)
    kind = inst.kinds[args.name]
    if kind == "groupoid_map":
        cert = is_morita(obj)
        _emit(
            {
                "event": "morita",
                "name": args.name,
                "ok": cert.ok,
                "orbit_bijective": cert.orbit_bijective,
                "isotropy_iso": list(cert.isotropy_iso),
                "fully_faithful": cert.fully_faithful,
                "essentially_surjective": cert.essentially_surjective,
                "criteria_agree": cert.criteria_agree,
            }
        )
        return 0 if cert.ok else 1
    if kind == "vbmap":
        cert = is_vb_morita(obj)
        _emit(
            {
                "event": "vb-morita",
                "name": args.name,
                "ok": cert.ok,
                "base_ok": cert.base.ok,
                "fibers": [
                    {"object": x, "ok": c.ok, "degrees": {str(p): list(v) for p, v in c.degrees.items()}}
                    for x, c in enumerate(cert.fibers)
                ],
            }
        )
        return 0 if cert.ok else 1
    raise vio.ParseError(f"morita: object {args.name!r} is neither a groupoid map nor a VB-map")


def cmd_dual(args) -> int:
    inst = _load(args.file)
    obj = inst.get(args.name)
    kind = inst.kinds[args.name]
    if kind == "ruth":
        d = dual_ruth(obj)
        base_name = _groupoid_name(inst, obj.base)
        _emit({"event": "dual", "name": args.name, "e_dims": list(d.e_dims), "c_dims": list(d.c_dims)})
        if args.out:
            path = _write_out(
                args.out,
                f"dual-{args.name}.json",
                {
                    base_name: vio.groupoid_to_json(obj.base),
                    f"{args.name}.dual": vio.ruth_to_json(d, base_name),
                },
            )
            _emit({"event": "written", "path": path})
        return 0
    if kind == "vbgroupoid":
        d = dual_vb(obj)
        base_name = _groupoid_name(inst, obj.base)
        _emit({"event": "dual", "name": args.name, "gamma_dims": list(d.gamma_dims)})
        if args.out:
            path = _write_out(
                args.out,
                f"dual-{args.name}.json",
                {
                    base_name: vio.groupoid_to_json(obj.base),
                    f"{args.name}.dual": vio.vbgroupoid_to_json(d, base_name),
                },
            )
            _emit({"event": "written", "path": path})
        return 0
    raise vio.ParseError(f"dual: object {args.name!r} is neither a ruth nor a VB-groupoid")


def cmd_cohomology(args) -> int:
    inst = _load(args.file)
    obj = inst.get(args.name)
    kind = inst.kinds[args.name]
    p_max = args.pmax
    if kind == "ruth":
        rc = ruth_complex(obj, p_max)
        betti = betti_numbers(rc.complex)
        _emit(
            {
                "event": "cohomology",
                "name": args.name,
                "kind": "ruth",
                "degrees": [
                    {"p": p, "dim": rc.complex.dim(p), "dim_H": betti[p]} for p in range(-1, p_max)
                ],
            }
        )
        shift = ruth_vs_dual_vb(obj, p_max)
        _emit(
            {
                "event": "shift-isomorphism",
                "name": args.name,
                "degrees": list(shift.degrees),
                "ruth_dims": list(shift.ruth_dims),
                "vb_dims": list(shift.vb_dims),
                "ok": shift.ok,
            }
        )
        return 0 if shift.ok else 1
    if kind == "vbgroupoid":
        rep = hvb_equals_hlin(obj, p_max)
        _emit(
            {
                "event": "cohomology",
                "name": args.name,
                "kind": "vbgroupoid",
                "degrees": [
                    {
                        "p": p,
                        "dim_lin": rep.dims_lin[p],
                        "dim_vb": rep.dims_vb[p] if p < len(rep.dims_vb) else None,
                        "dim_H_lin": rep.h_lin[p] if p < len(rep.h_lin) else None,
                        "dim_H_vb": rep.h_vb[p] if p < len(rep.h_vb) else None,
                    }
                    for p in range(p_max)
                ],
                "verdicts": {
                    "equal_dims": rep.h_lin == rep.h_vb,
                    "inclusion_iso": rep.inclusion_iso,
                    "homotopy_identity": rep.homotopy_identity,
                    "zero_last_identity": rep.zero_last_identity,
                    "filtration_quasi_iso": rep.filtration_quasi_iso,
                },
            }
        )
        return 0 if rep.ok else 1
    if kind == "vbmap":
        rep = induced_map_vb(obj, p_max)
        _emit(
            {
                "event": "induced-map",
                "name": args.name,
                "chain_map_ok": rep.chain_map_ok,
                "preserves_projectable": rep.preserves_projectable,
                "h_vb_source": list(rep.h_vb_source),
                "h_vb_target": list(rep.h_vb_target),
                "ranks": list(rep.ranks),
                "is_isomorphism": rep.is_isomorphism,
            }
        )
        return 0 if rep.chain_map_ok and rep.preserves_projectable else 1
    raise vio.ParseError(f"cohomology: unsupported object type {kind!r}")


def cmd_descend(args) -> int:
    inst = _load(args.file)
    base, sets = inst.get(args.cover, "cover")
    partition = inst.get(args.partition, "partition") if args.partition else None
    problem = make_descent_problem(base, [list(s) for s in sets], partition)
    if args.map:
        psi = inst.get(args.map, "vbmap")
        gamma = inst.get(args.gamma, "vbgroupoid")
        gamma_prime = inst.get(args.gamma_prime, "vbgroupoid")
        result = descend_map(problem, gamma, gamma_prime, psi)
        _emit(
            {
                "event": "descend-map",
                "map": args.map,
                "beta_nonzero": sorted(k for k, b in result.beta.items() if not b.is_zero),
                "descended_ok": check_vbmap(result.phi).ok,
            }
        )
        if args.out:
            base_name = _groupoid_name(inst, base)
            path = _write_out(
                args.out,
                f"descend-{args.map}.json",
                {
                    base_name: vio.groupoid_to_json(base),
                    args.gamma: vio.vbgroupoid_to_json(gamma, base_name),
                    args.gamma_prime: vio.vbgroupoid_to_json(gamma_prime, base_name),
                    f"{args.map}.descended": vio.vbmap_to_json(result.phi, args.gamma, args.gamma_prime),
                },
            )
            _emit({"event": "written", "path": path})
        return 0
    if args.object:
        v = inst.get(args.object, "vbgroupoid")
        result = descend_pipeline(v, problem)
        _emit(
            {
                "event": "descend-object",
                "object": args.object,
                "omega_dims": list(result.stabilization.omega.e_dims),
                "descended_e_dims": list(result.descended.e_dims),
                "comparison_invertible": result.comparison.is_invertible,
            }
        )
        if args.out:
            base_name = _groupoid_name(inst, base)
            path = _write_out(
                args.out,
                f"descend-{args.object}.json",
                {
                    base_name: vio.groupoid_to_json(base),
                    f"{args.object}.descended": vio.vbgroupoid_to_json(result.descended, base_name),
                },
            )
            _emit({"event": "written", "path": path})
        return 0
    raise vio.ParseError("descend: need --map (with --gamma/--gamma-prime) or --object")


def _gen_objects(recipe: str, seed: int) -> dict[str, dict]:
    rng = random.Random(seed)
    parts = recipe.split(":")
    kind = parts[0]
    base_name = parts[1] if len(parts) > 1 else "z2"
    zoo = base_groupoids()
    if kind in ("honest", "gauge", "acyclic", "sum"):
        if base_name not in zoo:
            raise vio.ParseError(f"gen: unknown base {base_name!r}")
        g = zoo[base_name]
        out = {base_name: vio.groupoid_to_json(g)}
        seeds = seed_ruths(base_name, g)
        if kind == "honest":
            for i, r in enumerate(named_reps(base_name, g)):
                out[f"rep{i}"] = vio.ruth_to_json(r, base_name)
        elif kind == "acyclic":
            out["acyclic0"] = vio.ruth_to_json(acyclic_ruth(named_reps(base_name, g)[0]), base_name)
        elif kind == "sum":
            from .ruth import direct_sum

            reps = named_reps(base_name, g)
            out["sum0"] = vio.ruth_to_json(direct_sum(reps[0], acyclic_ruth(reps[0])), base_name)
        else:
            base_r = seeds[seed % len(seeds)]
            gauged, _ = random_gauge(base_r, rng)
            out["gauged0"] = vio.ruth_to_json(gauged, base_name)
        return out
    if kind == "cech-pullback":
        fx = make_map_descent_fixture(seed, base_name if base_name in zoo else "z2", 0)
        g = fx.problem.base
        gu = fx.problem.gu
        return {
            "base": vio.groupoid_to_json(g),
            "cover": {"type": "cover", "base": "base", "sets": [list(s) for s in fx.problem.cech.cover]},
            "gu": vio.groupoid_to_json(gu),
            "gamma": vio.vbgroupoid_to_json(fx.gamma, "base"),
            "gamma_prime": vio.vbgroupoid_to_json(fx.gamma_prime, "base"),
            "psi": vio.vbmap_to_json(fx.psi, "gamma.pulled", "gamma_prime.pulled"),
            "gamma.pulled": vio.vbgroupoid_to_json(fx.psi.source, "gu"),
            "gamma_prime.pulled": vio.vbgroupoid_to_json(fx.psi.target, "gu"),
        }
    if kind == "perturbed-pullback":
        problem, v = make_object_descent_fixture(seed, base_name if base_name in zoo else "pt", 1)
        return {
            "base": vio.groupoid_to_json(problem.base),
            "cover": {"type": "cover", "base": "base", "sets": [list(s) for s in problem.cech.cover]},
            "gu": vio.groupoid_to_json(problem.gu),
            "object": vio.vbgroupoid_to_json(v, "gu"),
        }
    if kind == "rank-drop":
        problem, v = rank_drop_fixture(seed)
        return {
            "base": vio.groupoid_to_json(problem.base),
            "cover": {"type": "cover", "base": "base", "sets": [list(s) for s in problem.cech.cover]},
            "gu": vio.groupoid_to_json(problem.gu),
            "object": vio.vbgroupoid_to_json(v, "gu"),
        }
    raise vio.ParseError(f"gen: unknown recipe {recipe!r}")


def cmd_gen(args) -> int:
    objects = _gen_objects(args.recipe, args.seed)
    text = vio.dumps_instance(objects)
    # every emitted object must load and validate
    vio.loads_instance(text)
    if args.out:
        path = Path(args.out)
        if path.suffix != ".json":
            path.mkdir(parents=True, exist_ok=True)
            path = path / f"gen-{args.recipe.replace(':', '-')}-{args.seed}.json"
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")
        _emit({"event": "written", "path": str(path)})
    else:
        sys.stdout.write(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "--pmax", type=int, default=_int_env("VBG_PMAX", 3), help="max cochain degree (default 3)"
    )
    common.add_argument("--seed", type=int, default=_int_env("VBG_SEED", 0))
    common.add_argument("--out", default=os.environ.get("VBG_OUT"))
    common.add_argument(
        "--jobs",
        type=int,
        default=_int_env("VBG_JOBS", 1),
        help="accepted for interface parity; execution is sequential",
    )
    common.add_argument("--timings", action="store_true", help="print elapsed time to stderr")
    p = argparse.ArgumentParser(prog="vbg", description=__doc__, parents=[common])
    sub = p.add_subparsers(dest="command", required=True)

    def add(name: str, help_text: str):
        return sub.add_parser(name, help=help_text, parents=[common])

    c = add("check", "validate named objects in an instance file")
    c.add_argument("file")
    c.add_argument("--names", help="comma-separated object names (default: all)")
    c.set_defaults(func=cmd_check)

    c = add("groth", "Grothendieck construction of a ruth")
    c.add_argument("file")
    c.add_argument("name")
    c.set_defaults(func=cmd_groth)

    c = add("split", "split a VB-groupoid along the canonical cleavage")
    c.add_argument("file")
    c.add_argument("name")
    c.set_defaults(func=cmd_split)

    c = add("morita", "Morita / VB-Morita certification")
    c.add_argument("file")
    c.add_argument("name")
    c.set_defaults(func=cmd_morita)

    c = add("dual", "dual ruth or dual VB-groupoid")
    c.add_argument("file")
    c.add_argument("name")
    c.set_defaults(func=cmd_dual)

    c = add("cohomology", "cohomology tables and verdicts")
    c.add_argument("file")
    c.add_argument("name")
    c.set_defaults(func=cmd_cohomology)

    c = add("descend", "Cech descent of maps or objects")
    c.add_argument("file")
    c.add_argument("--cover", required=True)
    c.add_argument("--partition")
    c.add_argument("--map")
    c.add_argument("--gamma")
    c.add_argument("--gamma-prime", dest="gamma_prime")
    c.add_argument("--object")
    c.set_defaults(func=cmd_descend)

    c = add("gen", "generate a deterministic instance file")
    c.add_argument("--recipe", required=True)
    c.set_defaults(func=cmd_gen)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    start = time.monotonic()
    try:
        code = args.func(args)
    except vio.ParseError as e:
        _emit({"event": "error", "kind": "parse", "message": str(e)})
        code = 2
    except InvalidStructureError as e:
        _emit({"event": "error", "kind": "invalid-structure", "message": str(e)})
        code = 1
    except ValueError as e:
        _emit({"event": "error", "kind": "value", "message": str(e)})
        code = 1
    _emit({"event": "summary", "command": args.command, "exit": code, "ok": code == 0})
    if args.timings:
        sys.stderr.write(f"elapsed: {time.monotonic() - start:.3f}s\n")
    return code


if __name__ == "__main__":
    sys.exit(main())
