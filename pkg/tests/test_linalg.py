"""Exact linear algebra: frozen examples, properties, and the quasi-iso oracle."""

from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from vbgroupoids.linalg import (
    CochainComplex,
    Matrix,
    Subspace,
    betti_numbers,
    chain_map_is_quasi_iso,
    complement_space,
    complex_cohomology,
    image_space,
    intersection_spaces,
    kernel_space,
    quotient_reps,
    solve_linear,
    subspace_calc,
    sum_spaces,
)

F = Fraction


def M(rows):
    return Matrix.from_rows(rows)


# -- rref ---------------------------------------------------------------------


def test_rref_identity():
    r, piv = Matrix.identity(2).rref()
    assert r == Matrix.identity(2)
    assert piv == (0, 1)


def test_rref_rank_one():
    r, piv = M([[1, 2], [2, 4]]).rref()
    assert r == M([[1, 2], [0, 0]])
    assert piv == (0,)


def test_rref_fractional():
    # hand Gaussian elimination: rows are parallel, leading entry normalizes
    r, piv = M([["1/2", "1/3"], ["1/4", "1/6"]]).rref()
    assert r == M([[1, "2/3"], [0, 0]])
    assert piv == (0,)


def test_rref_rejects_floats():
    with pytest.raises(TypeError):
        Matrix.from_rows([[0.5]])


# -- solve ---------------------------------------------------------------------


def test_solve_identity():
    assert solve_linear(Matrix.identity(2), [3, 5]) == (F(3), F(5))


def test_solve_pivot_convention():
    assert solve_linear(M([[1, 1]]), [2]) == (F(2), F(0))


def test_solve_inconsistent():
    assert solve_linear(M([[1], [1]]), [1, 2]) is None


# -- subspace calculus ------------------------------------------------------------


def test_kernel_of_zero_map():
    s = subspace_calc("kernel", Matrix.zeros(2, 2))
    assert s.dim == 2


def test_image_of_injection():
    s = subspace_calc("image", M([[1], [0]]))
    assert s == Subspace.from_spanning(M([[1], [0]]))
    assert s.dim == 1


def test_intersection_trivial():
    a = Subspace.from_spanning(M([[1], [0]]))
    b = Subspace.from_spanning(M([[1], [1]]))
    assert subspace_calc("intersection", a, b).dim == 0


def test_sum_and_complement():
    a = Subspace.from_spanning(M([[1], [1]]))
    c = complement_space(a)
    assert Matrix.hstack([a.basis, c.basis]).rank() == 2
    assert sum_spaces([a, c]).dim == 2
    assert quotient_reps(a).dim == 1


@settings(max_examples=40, deadline=None)
@given(
    st.integers(0, 4),
    st.integers(0, 4),
    st.data(),
)
def test_rank_nullity_exact(rows, cols, data):
    entries = [
        [F(data.draw(st.integers(-3, 3))) for _ in range(cols)] for _ in range(rows)
    ]
    m = Matrix.from_rows(entries, cols=cols)
    assert m.rank() + m.kernel().cols == cols
    # complement of the image has complementary dimension
    im = image_space(m)
    comp = complement_space(im)
    assert im.dim + comp.dim == rows
    if rows:
        assert Matrix.hstack([im.basis, comp.basis]).rank() == rows


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 4), st.data())
def test_kernel_vectors_annihilate(n, data):
    m = Matrix.from_rows(
        [[F(data.draw(st.integers(-3, 3))) for _ in range(n)] for _ in range(n)], cols=n
    )
    k = m.kernel()
    assert (m * k).is_zero


# -- cochain complexes -------------------------------------------------------------


def test_acyclic_two_term():
    c = CochainComplex(0, 1, (1, 1), (Matrix.identity(1),))
    assert betti_numbers(c) == {0: 0, 1: 0}


def test_zero_differential():
    c = CochainComplex(0, 1, (1, 1), (Matrix.zeros(1, 1),))
    assert betti_numbers(c) == {0: 1, 1: 1}


def test_rank_count_by_hand():
    c = CochainComplex(0, 1, (2, 1), (M([[1, 1]]),))
    assert betti_numbers(c) == {0: 1, 1: 0}


def test_dd_nonzero_reports_degree():
    c = CochainComplex(0, 2, (1, 1, 1), (Matrix.identity(1), Matrix.identity(1)))
    with pytest.raises(ValueError, match="degree 0"):
        complex_cohomology(c)


def test_euler_characteristic_matches_cohomology():
    c = CochainComplex(0, 2, (2, 3, 1), (M([[1, 0], [0, 0], [0, 0]]), M([[0, 1, 0]])))
    assert not c.validate()
    h = betti_numbers(c)
    assert sum((-1) ** p * h[p] for p in h) == c.euler_characteristic()


# -- quasi-isomorphism, checked against a brute-force oracle ----------------------------


def _oracle_quasi_iso(c, cp, f):
    """Independent rank-based test: equal dims, induced injective and surjective."""
    lo, hi = min(c.p_min, cp.p_min), max(c.p_max, cp.p_max)
    for p in range(lo, hi + 1):
        ker = c.differential(p).kernel()
        kerp = cp.differential(p).kernel()
        im = c.differential(p - 1)
        imp = cp.differential(p - 1)
        # dim H = dim ker - rank(d^{p-1}) since the image sits inside the kernel
        h_dim = ker.cols - im.rank()
        hp_dim = kerp.cols - imp.rank()
        if h_dim != hp_dim:
            return False
        fmat = f.get(p, Matrix.zeros(cp.dim(p), c.dim(p)))
        fk = fmat * ker
        # surjectivity of the induced map
        if Matrix.hstack([imp, fk]).rank() != Matrix.hstack([imp, kerp]).rank():
            return False
        # injectivity: kernel cocycles mapping into im' must be coboundaries
        if ker.cols:
            joint = Matrix.hstack([fk, -imp]).kernel()
            coeffs = joint.take_rows(range(ker.cols))
            cocycles = ker * coeffs
            for j in range(cocycles.cols):
                if im.solve(cocycles.col(j)) is None:
                    return False
    return True


def _random_complex(rng, dims):
    diffs = []
    prev = None
    for i in range(len(dims) - 1):
        if prev is None:
            d = Matrix.from_rows(
                [[F(rng.randint(-2, 2)) for _ in range(dims[i])] for _ in range(dims[i + 1])],
                cols=dims[i],
            )
        else:
            # compose with a projection annihilating the previous image
            k = prev.transpose().kernel()  # functionals vanishing on im(prev)
            r = Matrix.from_rows(
                [[F(rng.randint(-2, 2)) for _ in range(k.cols)] for _ in range(dims[i + 1])],
                cols=k.cols,
            )
            d = r * k.transpose()
        diffs.append(d)
        prev = d
    return CochainComplex(0, len(dims) - 1, tuple(dims), tuple(diffs))


def test_quasi_iso_agrees_with_oracle():
    import random

    rng = random.Random(11)
    agree = 0
    for trial in range(25):
        dims1 = [rng.randint(0, 2) for _ in range(3)]
        dims2 = [rng.randint(0, 2) for _ in range(3)]
        if sum(dims1) + sum(dims2) > 12:
            continue
        c = _random_complex(rng, dims1)
        cp = _random_complex(rng, dims2)
        # solve the chain-map conditions, then pick a random solution
        unknown_shapes = [(dims2[p], dims1[p]) for p in range(3)]
        offsets = [0]
        for r, cdim in unknown_shapes:
            offsets.append(offsets[-1] + r * cdim)
        rows = []
        for p in range(2):
            d = c.differential(p)
            dp = cp.differential(p)
            for i in range(dims2[p + 1]):
                for j in range(dims1[p]):
                    row = [F(0)] * offsets[-1]
                    for k in range(dims1[p + 1]):
                        row[offsets[p + 1] + i * dims1[p + 1] + k] += d.data[k][j]
                    for k in range(dims2[p]):
                        row[offsets[p] + k * dims1[p] + j] -= dp.data[i][k]
                    rows.append(row)
        system = (
            Matrix.from_rows(rows, cols=offsets[-1]) if rows else Matrix.zeros(0, offsets[-1])
        )
        sols = system.kernel()
        coeff = [F(rng.randint(-2, 2)) for _ in range(sols.cols)]
        flat = sols.apply(coeff) if sols.cols else tuple(F(0) for _ in range(offsets[-1]))
        f = {}
        for p in range(3):
            r, cdim = unknown_shapes[p]
            f[p] = Matrix.from_rows(
                [[flat[offsets[p] + i * cdim + j] for j in range(cdim)] for i in range(r)],
                cols=cdim,
            )
        cert = chain_map_is_quasi_iso(c, cp, f)
        assert cert.ok == _oracle_quasi_iso(c, cp, f)
        agree += 1
    assert agree >= 15


def test_chain_map_violation_raises():
    c = CochainComplex(0, 1, (1, 1), (Matrix.identity(1),))
    cp = CochainComplex(0, 1, (1, 1), (Matrix.zeros(1, 1),))
    with pytest.raises(ValueError, match="chain map"):
        chain_map_is_quasi_iso(c, cp, {0: Matrix.identity(1), 1: Matrix.identity(1)})


def test_quasi_iso_examples():
    acyclic = CochainComplex(0, 1, (1, 1), (Matrix.identity(1),))
    zero = CochainComplex(0, 1, (0, 0), (Matrix.zeros(0, 0),))
    stalled = CochainComplex(0, 1, (1, 1), (Matrix.zeros(1, 1),))
    ident = chain_map_is_quasi_iso(acyclic, acyclic, {0: Matrix.identity(1), 1: Matrix.identity(1)})
    assert ident.ok
    collapse = chain_map_is_quasi_iso(
        acyclic, zero, {0: Matrix.zeros(0, 1), 1: Matrix.zeros(0, 1)}
    )
    assert collapse.ok
    dead = chain_map_is_quasi_iso(stalled, zero, {0: Matrix.zeros(0, 1), 1: Matrix.zeros(0, 1)})
    assert not dead.ok
