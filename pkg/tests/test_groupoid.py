"""Finite groupoids: axioms, Morita criterion, nerves, squares, covers."""

import pytest

from vbgroupoids.groupoid import (
    GroupoidMap,
    arrow_groupoid,
    cech_groupoid,
    compose_maps,
    cyclic_groupoid,
    disjoint_union,
    identity_map,
    is_morita,
    make_groupoid,
    nerve,
    orbits_and_isotropy,
    pair_groupoid,
    point_groupoid,
    validate_groupoid,
    validate_map,
)


def test_point_and_z2_valid():
    assert validate_groupoid(point_groupoid()).ok
    assert validate_groupoid(cyclic_groupoid(2)).ok
    assert validate_groupoid(pair_groupoid(2)).ok
    assert validate_groupoid(disjoint_union(point_groupoid(), cyclic_groupoid(2))).ok


def test_broken_inverse_reported_with_witness():
    # z2 with tau^2 redefined to tau breaks the inverse law at tau
    z2 = cyclic_groupoid(2)
    comp = dict(z2.comp)
    comp[(1, 1)] = 1
    bad = make_groupoid(1, [(0, 0), (0, 0)], comp, [0], [0, 1])
    rep = validate_groupoid(bad)
    assert not rep.ok
    assert any(v.check == "inverse-law" and 1 in v.witness for v in rep.violations)


def test_orbits_and_isotropy():
    orbits, iso = orbits_and_isotropy(pair_groupoid(2))
    assert orbits == ((0, 1),)
    assert all(len(i) == 1 for i in iso)
    orbits, iso = orbits_and_isotropy(cyclic_groupoid(2))
    assert orbits == ((0,),)
    assert len(iso[0]) == 2
    orbits, _ = orbits_and_isotropy(disjoint_union(point_groupoid(), cyclic_groupoid(2)))
    assert len(orbits) == 2


def _collapse_to_point(g):
    pt = point_groupoid()
    return GroupoidMap(g, pt, (0,) * g.n_objects, (0,) * g.n_arrows)


def test_morita_examples():
    assert is_morita(_collapse_to_point(pair_groupoid(2))).ok
    assert not is_morita(_collapse_to_point(cyclic_groupoid(2))).ok
    assert is_morita(identity_map(cyclic_groupoid(3))).ok


def test_morita_criteria_agree_across_zoo():
    maps = [
        _collapse_to_point(pair_groupoid(2)),
        _collapse_to_point(cyclic_groupoid(2)),
        identity_map(pair_groupoid(3)),
        identity_map(disjoint_union(point_groupoid(), cyclic_groupoid(2))),
    ]
    # inclusion of the point into z2 (not essentially different orbit-wise, isotropy fails)
    z2 = cyclic_groupoid(2)
    maps.append(GroupoidMap(point_groupoid(), z2, (0,), (0,)))
    # inclusion of a point into pair(2): fully faithful and essentially surjective
    p2 = pair_groupoid(2)
    maps.append(GroupoidMap(point_groupoid(), p2, (0,), (p2.unit[0],)))
    for f in maps:
        assert validate_map(f).ok
        cert = is_morita(f)
        assert cert.criteria_agree
    assert is_morita(maps[-1]).ok


def test_nerve_counts():
    assert len(nerve(point_groupoid(), 3).strings[3]) == 1
    assert len(nerve(cyclic_groupoid(2), 2).strings[2]) == 4
    assert len(nerve(pair_groupoid(2), 2).strings[2]) == 8


def test_nerve_simplicial_identities():
    for g in (cyclic_groupoid(2), pair_groupoid(2)):
        nv = nerve(g, 3)
        for p in (2, 3):
            for i in range(p + 1):
                for j in range(i + 1, p + 1):
                    lhs = [nv.face(p - 1, i)[k] for k in nv.face(p, j)]
                    rhs = [nv.face(p - 1, j - 1)[k] for k in nv.face(p, i)]
                    assert lhs == rhs, (p, i, j)


def test_arrow_groupoid_point():
    ag = arrow_groupoid(point_groupoid())
    assert ag.gi.n_objects == 1 and ag.gi.n_arrows == 1


def test_arrow_groupoid_z2():
    ag = arrow_groupoid(cyclic_groupoid(2))
    assert ag.gi.n_objects == 2
    assert ag.gi.n_arrows == 8
    # sigma mu = tau mu = id holds by construction; re-check equality of maps
    g = cyclic_groupoid(2)
    assert compose_maps(ag.sigma, ag.mu) == identity_map(g)
    assert compose_maps(ag.tau, ag.mu) == identity_map(g)
    assert is_morita(ag.sigma).ok and is_morita(ag.tau).ok


def test_cech_double_cover_of_point_is_pair():
    cech = cech_groupoid(point_groupoid(), [[0], [0]])
    assert cech.gu.n_objects == 2
    assert cech.gu.n_arrows == 4
    assert is_morita(cech.pi).ok
    orbits, iso = orbits_and_isotropy(cech.gu)
    assert orbits == ((0, 1),)
    assert all(len(i) == 1 for i in iso)


def test_cech_single_set_cover_is_identity():
    g = cyclic_groupoid(2)
    cech = cech_groupoid(g, [[0]])
    assert cech.gu.n_objects == g.n_objects
    assert cech.gu.n_arrows == g.n_arrows
    assert is_morita(cech.pi).ok


def test_cech_double_cover_of_z2():
    cech = cech_groupoid(cyclic_groupoid(2), [[0], [0]])
    assert cech.gu.n_objects == 2
    assert cech.gu.n_arrows == 8
    assert is_morita(cech.pi).ok
    assert len(cech.kernel_arrows) == 4


def test_cech_rejects_non_cover():
    with pytest.raises(ValueError, match="not a cover"):
        cech_groupoid(pair_groupoid(2), [[0]])


def test_cech_morita_for_overlapping_cover():
    g = pair_groupoid(2)
    cech = cech_groupoid(g, [[0], [0, 1]])
    assert is_morita(cech.pi).ok
