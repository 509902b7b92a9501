"""Serialization round trips and the instance-file format."""

import random

import pytest

from vbgroupoids import io as vio
from vbgroupoids.generators import named_reps, random_gauge, seed_ruths
from vbgroupoids.groupoid import cyclic_groupoid, pair_groupoid
from vbgroupoids.linalg import Matrix
from vbgroupoids.ruth import make_ruth
from vbgroupoids.vb import grothendieck, grothendieck_map, identity_vbmap


def test_rational_strings():
    from fractions import Fraction

    assert vio.frac_to_str(Fraction(-3, 7)) == "-3/7"
    assert vio.frac_to_str(Fraction(0)) == "0"
    assert vio.frac_to_str(Fraction(5)) == "5"
    assert vio.frac_from_str("-3/7") == Fraction(-3, 7)
    with pytest.raises(vio.ParseError):
        vio.frac_from_str("1/0")


def test_groupoid_round_trip():
    g = pair_groupoid(2)
    data = vio.groupoid_to_json(g)
    g2 = vio.groupoid_from_json(data)
    assert g2 == g


def test_ruth_round_trip_with_unit_omission():
    z2 = cyclic_groupoid(2)
    rng = random.Random(0)
    r, _ = random_gauge(seed_ruths("z2", z2)[-2], rng)
    data = vio.ruth_to_json(r, "z2")
    assert "0" not in data["rhoE"]  # unit arrow omitted
    r2 = vio.ruth_from_json(data, z2)
    assert r2 == r


def test_vbgroupoid_and_vbmap_round_trip():
    z2 = cyclic_groupoid(2)
    rng = random.Random(1)
    r, mor = random_gauge(seed_ruths("z2", z2)[-2], rng)
    v = grothendieck(r)
    data = vio.vbgroupoid_to_json(v, "z2")
    assert vio.vbgroupoid_from_json(data, z2) == v
    f = grothendieck_map(mor)
    fdata = vio.vbmap_to_json(f, "a", "b")
    f2 = vio.vbmap_from_json(fdata, f.source, f.target)
    assert f2 == f


def test_instance_file_round_trip_and_validation():
    z2 = cyclic_groupoid(2)
    sign = make_ruth(z2, (1,), (0,), rho_e={1: Matrix.from_rows([[-1]])})
    text = vio.dumps_instance(
        {"z2": vio.groupoid_to_json(z2), "sign": vio.ruth_to_json(sign, "z2")}
    )
    inst = vio.loads_instance(text)
    assert inst.get("sign", "ruth") == sign


def test_instance_unresolved_reference():
    text = vio.dumps_instance({"r": {"type": "ruth", "base": "missing", "E": {}, "C": {}}})
    with pytest.raises(vio.ParseError, match="unresolvable"):
        vio.loads_instance(text)


def test_instance_bad_format_version():
    with pytest.raises(vio.ParseError, match="format"):
        vio.loads_instance('{"format": 99, "objects": {}}')


def test_instance_validation_catches_corruption():
    z2 = cyclic_groupoid(2)
    sign = make_ruth(z2, (1,), (0,), rho_e={1: Matrix.from_rows([[-1]])})
    data = vio.ruth_to_json(sign, "z2")
    data["rhoE"]["1"] = [["2"]]  # breaks multiplicativity: 2*2 != 1
    text = vio.dumps_instance({"z2": vio.groupoid_to_json(z2), "sign": data})
    from vbgroupoids.report import InvalidStructureError

    with pytest.raises(InvalidStructureError):
        vio.loads_instance(text)


def test_dumps_deterministic():
    z2 = cyclic_groupoid(2)
    a = vio.dumps_instance({"z2": vio.groupoid_to_json(z2)})
    b = vio.dumps_instance({"z2": vio.groupoid_to_json(cyclic_groupoid(2))})
    assert a == b
