"""JSON serialization of instances.

One self-describing container per file::

    {"format": 1, "objects": {name: {"type": ..., ...}}}

Rationals serialize as strings like ``-3/7`` (denominator omitted when 1),
matrices as row-major nested arrays of such strings.  Ruths omit unit-arrow
entries (implied identity/zero).  Object and arrow ids are the contiguous
integers 0..n-1.  Loading validates every object before use unless disabled.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Optional

from .descent import PartitionOfUnity
from .groupoid import FiniteGroupoid, GroupoidMap, make_groupoid, validate_groupoid, validate_map
from .linalg import Matrix
from .report import InvalidStructureError, Report
from .ruth import TwoTermRuth, check_ruth, make_ruth
from .vb import VBGroupoid, VBMap, check_vbgroupoid, check_vbmap

FORMAT_VERSION = 1


class ParseError(ValueError):
    """Malformed instance data or unresolved references (CLI exit code 2)."""


def frac_to_str(x: Fraction) -> str:
    return str(x)


def frac_from_str(s: str) -> Fraction:
    try:
        return Fraction(s)
    except (ValueError, ZeroDivisionError) as e:
        raise ParseError(f"bad rational {s!r}: {e}") from None


def matrix_to_json(m: Matrix) -> list[list[str]]:
    return [[frac_to_str(x) for x in row] for row in m.data]


def matrix_from_json(data: Any, rows: int, cols: int, where: str = "") -> Matrix:
    if not isinstance(data, list) or len(data) != rows:
        raise ParseError(f"{where}: expected {rows} matrix rows")
    try:
        out = Matrix.from_rows([[frac_from_str(x) for x in row] for row in data], cols=cols)
    except (TypeError, ValueError) as e:
        raise ParseError(f"{where}: {e}") from None
    if out.cols != cols and rows > 0:
        raise ParseError(f"{where}: expected {cols} matrix columns")
    if rows == 0:
        return Matrix.zeros(0, cols)
    return out


def groupoid_to_json(g: FiniteGroupoid) -> dict:
    return {
        "type": "groupoid",
        "objects": list(range(g.n_objects)),
        "arrows": [{"id": a, "src": g.src[a], "tgt": g.tgt[a]} for a in range(g.n_arrows)],
        "compose": [[g1, g2, g.comp[(g1, g2)]] for (g1, g2) in sorted(g.comp)],
        "unit": [[x, g.unit[x]] for x in range(g.n_objects)],
        "inverse": [[a, g.inv[a]] for a in range(g.n_arrows)],
    }


def groupoid_from_json(data: dict, where: str = "groupoid") -> FiniteGroupoid:
    objs = data.get("objects")
    arrows = data.get("arrows")
    if objs != list(range(len(objs or []))):
        raise ParseError(f"{where}: object ids must be 0..n-1 in order")
    ids = [a.get("id") for a in arrows]
    if ids != list(range(len(arrows))):
        raise ParseError(f"{where}: arrow ids must be 0..m-1 in order")
    n, m = len(objs), len(arrows)
    unit = [-1] * n
    for x, u in data.get("unit", []):
        unit[x] = u
    inv = [-1] * m
    for a, b in data.get("inverse", []):
        inv[a] = b
    comp = {(g1, g2): g12 for g1, g2, g12 in data.get("compose", [])}
    try:
        return make_groupoid(n, [(a["src"], a["tgt"]) for a in arrows], comp, unit, inv)
    except (KeyError, IndexError, TypeError) as e:
        raise ParseError(f"{where}: {e}") from None


def groupoid_map_to_json(f: GroupoidMap, dom: str, cod: str) -> dict:
    return {
        "type": "groupoid_map",
        "dom": dom,
        "cod": cod,
        "object_map": [[x, f.obj_map[x]] for x in range(f.dom.n_objects)],
        "arrow_map": [[a, f.arr_map[a]] for a in range(f.dom.n_arrows)],
    }


def _pairs_to_table(pairs: Any, size: int, where: str) -> tuple[int, ...]:
    table = [-1] * size
    for p in pairs:
        table[p[0]] = p[1]
    if any(v < 0 for v in table):
        raise ParseError(f"{where}: incomplete id-pair table")
    return tuple(table)


def ruth_to_json(r: TwoTermRuth, base: str) -> dict:
    g = r.base
    out: dict[str, Any] = {
        "type": "ruth",
        "base": base,
        "E": {str(x): r.e_dims[x] for x in range(g.n_objects)},
        "C": {str(x): r.c_dims[x] for x in range(g.n_objects)},
        "anchor": {str(x): matrix_to_json(r.anchor[x]) for x in range(g.n_objects)},
        "rhoE": {str(a): matrix_to_json(r.rho_e[a]) for a in range(g.n_arrows) if not g.is_unit(a)},
        "rhoC": {str(a): matrix_to_json(r.rho_c[a]) for a in range(g.n_arrows) if not g.is_unit(a)},
        "gamma": {
            f"{g1},{g2}": matrix_to_json(r.gamma[(g1, g2)])
            for (g1, g2) in sorted(r.gamma)
            if not (g.is_unit(g1) or g.is_unit(g2))
        },
    }
    return out


def ruth_from_json(data: dict, base: FiniteGroupoid, where: str = "ruth") -> TwoTermRuth:
    g = base
    try:
        e = tuple(int(data["E"][str(x)]) for x in range(g.n_objects))
        c = tuple(int(data["C"][str(x)]) for x in range(g.n_objects))
    except KeyError as k:
        raise ParseError(f"{where}: missing dimension entry {k}") from None
    anchor = {
        x: matrix_from_json(data.get("anchor", {}).get(str(x), []), e[x], c[x], f"{where}.anchor[{x}]")
        for x in range(g.n_objects)
        if str(x) in data.get("anchor", {})
    }
    rho_e = {
        a: matrix_from_json(m, e[g.tgt[a]], e[g.src[a]], f"{where}.rhoE[{a}]")
        for a, m in ((int(k), v) for k, v in data.get("rhoE", {}).items())
    }
    rho_c = {
        a: matrix_from_json(m, c[g.tgt[a]], c[g.src[a]], f"{where}.rhoC[{a}]")
        for a, m in ((int(k), v) for k, v in data.get("rhoC", {}).items())
    }
    gamma = {}
    for key, m in data.get("gamma", {}).items():
        g1s, g2s = key.split(",")
        g1, g2 = int(g1s), int(g2s)
        gamma[(g1, g2)] = matrix_from_json(m, c[g.tgt[g1]], e[g.src[g2]], f"{where}.gamma[{key}]")
    return make_ruth(g, e, c, anchor=anchor, rho_e=rho_e, rho_c=rho_c, gamma=gamma)


def vbgroupoid_to_json(v: VBGroupoid, base: str) -> dict:
    g = v.base
    return {
        "type": "vbgroupoid",
        "base": base,
        "E": {str(x): v.e_dims[x] for x in range(g.n_objects)},
        "Gamma": {str(a): v.gamma_dims[a] for a in range(g.n_arrows)},
        "s": {str(a): matrix_to_json(v.s_maps[a]) for a in range(g.n_arrows)},
        "t": {str(a): matrix_to_json(v.t_maps[a]) for a in range(g.n_arrows)},
        "u": {str(x): matrix_to_json(v.u_maps[x]) for x in range(g.n_objects)},
        "m": {f"{g1},{g2}": matrix_to_json(v.m_maps[(g1, g2)]) for (g1, g2) in sorted(v.m_maps)},
    }


def vbgroupoid_from_json(data: dict, base: FiniteGroupoid, where: str = "vbgroupoid") -> VBGroupoid:
    g = base
    try:
        e = tuple(int(data["E"][str(x)]) for x in range(g.n_objects))
        gd = tuple(int(data["Gamma"][str(a)]) for a in range(g.n_arrows))
    except KeyError as k:
        raise ParseError(f"{where}: missing dimension entry {k}") from None
    s_maps = tuple(
        matrix_from_json(data["s"][str(a)], e[g.src[a]], gd[a], f"{where}.s[{a}]") for a in range(g.n_arrows)
    )
    t_maps = tuple(
        matrix_from_json(data["t"][str(a)], e[g.tgt[a]], gd[a], f"{where}.t[{a}]") for a in range(g.n_arrows)
    )
    u_maps = tuple(
        matrix_from_json(data["u"][str(x)], gd[g.unit[x]], e[x], f"{where}.u[{x}]")
        for x in range(g.n_objects)
    )
    m_maps = {}
    for g1, g2 in g.pairs:
        key = f"{g1},{g2}"
        if key not in data.get("m", {}):
            raise ParseError(f"{where}: missing multiplication entry {key}")
        g12 = g.compose(g1, g2)
        m_maps[(g1, g2)] = matrix_from_json(
            data["m"][key], gd[g12], gd[g1] + gd[g2], f"{where}.m[{key}]"
        )
    return VBGroupoid(
        base=g, e_dims=e, gamma_dims=gd, s_maps=s_maps, t_maps=t_maps, u_maps=u_maps, m_maps=m_maps
    )


def vbmap_to_json(f: VBMap, source: str, target: str) -> dict:
    g = f.source.base
    return {
        "type": "vbmap",
        "source": source,
        "target": target,
        "base_map": {
            "object_map": [[x, f.base_map.obj_map[x]] for x in range(g.n_objects)],
            "arrow_map": [[a, f.base_map.arr_map[a]] for a in range(g.n_arrows)],
        },
        "obj": {str(x): matrix_to_json(f.obj_maps[x]) for x in range(g.n_objects)},
        "arr": {str(a): matrix_to_json(f.arr_maps[a]) for a in range(g.n_arrows)},
    }


def vbmap_from_json(data: dict, source: VBGroupoid, target: VBGroupoid, where: str = "vbmap") -> VBMap:
    g = source.base
    bm_data = data.get("base_map", {})
    obj_map = _pairs_to_table(bm_data.get("object_map", []), g.n_objects, f"{where}.base_map")
    arr_map = _pairs_to_table(bm_data.get("arrow_map", []), g.n_arrows, f"{where}.base_map")
    bm = GroupoidMap(g, target.base, obj_map, arr_map)
    obj_maps = tuple(
        matrix_from_json(
            data["obj"][str(x)], target.e_dims[obj_map[x]], source.e_dims[x], f"{where}.obj[{x}]"
        )
        for x in range(g.n_objects)
    )
    arr_maps = tuple(
        matrix_from_json(
            data["arr"][str(a)], target.gamma_dims[arr_map[a]], source.gamma_dims[a], f"{where}.arr[{a}]"
        )
        for a in range(g.n_arrows)
    )
    return VBMap(source=source, target=target, base_map=bm, obj_maps=obj_maps, arr_maps=arr_maps)


def partition_to_json(p: PartitionOfUnity, cover: str) -> dict:
    return {
        "type": "partition",
        "cover": cover,
        "weights": {f"{i},{x}": frac_to_str(w) for (i, x), w in sorted(p.weights.items())},
    }


# -- instance files -----------------------------------------------------------------


@dataclass
class Instance:
    """A loaded instance file: named, validated objects with resolved references."""

    objects: dict[str, Any]
    kinds: dict[str, str]
    raw: dict

    def get(self, name: str, kind: Optional[str] = None):
        if name not in self.objects:
            raise ParseError(f"unresolved reference {name!r}")
        if kind is not None and self.kinds[name] != kind:
            raise ParseError(f"object {name!r} has type {self.kinds[name]}, wanted {kind}")
        return self.objects[name]


def dumps_instance(objects: dict[str, dict]) -> str:
    payload = {"format": FORMAT_VERSION, "objects": objects}
    return json.dumps(payload, sort_keys=True, indent=1) + "\n"


def loads_instance(text: str, validate: bool = True) -> Instance:
    try:
        payload = json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(f"not valid JSON: {e}") from None
    if not isinstance(payload, dict) or payload.get("format") != FORMAT_VERSION:
        raise ParseError(f"missing or unsupported format version (want {FORMAT_VERSION})")
    raw = payload.get("objects")
    if not isinstance(raw, dict):
        raise ParseError("missing objects table")
    inst = Instance(objects={}, kinds={}, raw=raw)
    pending = dict(raw)
    progress = True
    while pending and progress:
        progress = False
        for name in sorted(pending):
            data = pending[name]
            kind = data.get("type")
            try:
                obj = _load_one(inst, name, kind, data, validate)
            except ParseError as e:
                if "unresolved reference" in str(e):
                    continue
                raise
            inst.objects[name] = obj
            inst.kinds[name] = kind
            del pending[name]
            progress = True
    if pending:
        raise ParseError(f"unresolvable references among: {sorted(pending)}")
    return inst


def _load_one(inst: Instance, name: str, kind: str, data: dict, validate: bool):
    if kind == "groupoid":
        g = groupoid_from_json(data, name)
        if validate:
            validate_groupoid(g).require(f"{name}: invalid groupoid")
        return g
    if kind == "groupoid_map":
        dom = inst.get(data.get("dom", ""), "groupoid")
        cod = inst.get(data.get("cod", ""), "groupoid")
        f = GroupoidMap(
            dom,
            cod,
            _pairs_to_table(data.get("object_map", []), dom.n_objects, name),
            _pairs_to_table(data.get("arrow_map", []), dom.n_arrows, name),
        )
        if validate:
            validate_map(f).require(f"{name}: invalid groupoid map")
        return f
    if kind == "ruth":
        base = inst.get(data.get("base", ""), "groupoid")
        r = ruth_from_json(data, base, name)
        if validate:
            check_ruth(r).require(f"{name}: invalid ruth")
        return r
    if kind == "vbgroupoid":
        base = inst.get(data.get("base", ""), "groupoid")
        v = vbgroupoid_from_json(data, base, name)
        if validate:
            check_vbgroupoid(v).require(f"{name}: invalid VB-groupoid")
        return v
    if kind == "vbmap":
        source = inst.get(data.get("source", ""), "vbgroupoid")
        target = inst.get(data.get("target", ""), "vbgroupoid")
        f = vbmap_from_json(data, source, target, name)
        if validate:
            check_vbmap(f).require(f"{name}: invalid VB-map")
        return f
    if kind == "cover":
        base = inst.get(data.get("base", ""), "groupoid")
        sets = data.get("sets")
        if not isinstance(sets, list):
            raise ParseError(f"{name}: cover needs a list of sets")
        return (base, tuple(tuple(sorted(set(s))) for s in sets))
    if kind == "partition":
        base, sets = inst.get(data.get("cover", ""), "cover")
        weights = {}
        for key, w in data.get("weights", {}).items():
            i, x = key.split(",")
            weights[(int(i), int(x))] = frac_from_str(w)
        p = PartitionOfUnity(cover=sets, weights=weights)
        if validate:
            p.validate(base.n_objects).require(f"{name}: invalid partition")
        return p
    raise ParseError(f"{name}: unknown type {kind!r}")
