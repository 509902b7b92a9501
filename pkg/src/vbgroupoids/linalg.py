"""Exact rational linear algebra substrate.

Dense matrices over Q (``fractions.Fraction`` entries), subspaces with
canonical bases, and finite cochain complexes with exact cohomology.  Every
higher-level check in the package reduces to operations here.

Two conventions make all downstream output bit-reproducible:

* reduced row-echelon form uses the "first nonzero row" pivot rule, and all
  derived bases (kernels, solutions, complements) follow the rref free/pivot
  column convention;
* :class:`Subspace` always stores the unique reduced column-echelon basis,
  so equal subspaces compare equal field-by-field.

No floating point is used anywhere.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import gcd, lcm
from typing import Iterable, Optional, Sequence

Vec = tuple[Fraction, ...]

ZERO = Fraction(0)
ONE = Fraction(1)


def frac(x) -> Fraction:
    """Coerce ints, strings like ``-3/7``, and Fractions; floats are rejected."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x)
    raise TypeError(f"not an exact rational: {x!r}")


def vec(xs: Iterable) -> Vec:
    return tuple(frac(x) for x in xs)


def zero_vec(n: int) -> Vec:
    return (ZERO,) * n


class Matrix:
    """Immutable dense matrix over Q, row-major."""

    __slots__ = ("rows", "cols", "data")

    def __init__(self, rows: int, cols: int, data: tuple[tuple[Fraction, ...], ...]):
        if len(data) != rows or any(len(r) != cols for r in data):
            raise ValueError(f"bad shape: want {rows}x{cols}")
        self.rows = rows
        self.cols = cols
        self.data = data

    # -- constructors -------------------------------------------------------

    @staticmethod
    def from_rows(rows: Sequence[Sequence], cols: Optional[int] = None) -> "Matrix":
        data = tuple(tuple(frac(x) for x in r) for r in rows)
        if data:
            cols = len(data[0])
        elif cols is None:
            cols = 0
        return Matrix(len(data), cols, data)

    @staticmethod
    def from_cols(cols: Sequence[Sequence], rows: Optional[int] = None) -> "Matrix":
        if not cols:
            return Matrix(rows or 0, 0, tuple(() for _ in range(rows or 0)))
        n = len(cols[0])
        data = tuple(tuple(frac(c[i]) for c in cols) for i in range(n))
        return Matrix(n, len(cols), data)

    @staticmethod
    def zeros(rows: int, cols: int) -> "Matrix":
        return Matrix(rows, cols, tuple((ZERO,) * cols for _ in range(rows)))

    @staticmethod
    def identity(n: int) -> "Matrix":
        return Matrix(n, n, tuple(tuple(ONE if i == j else ZERO for j in range(n)) for i in range(n)))

    @staticmethod
    def hstack(blocks: Sequence["Matrix"]) -> "Matrix":
        blocks = [b for b in blocks]
        if not blocks:
            return Matrix.zeros(0, 0)
        rows = blocks[0].rows
        if any(b.rows != rows for b in blocks):
            raise ValueError("hstack: row mismatch")
        data = tuple(tuple(x for b in blocks for x in b.data[i]) for i in range(rows))
        return Matrix(rows, sum(b.cols for b in blocks), data)

    @staticmethod
    def vstack(blocks: Sequence["Matrix"]) -> "Matrix":
        blocks = [b for b in blocks]
        if not blocks:
            return Matrix.zeros(0, 0)
        cols = blocks[0].cols
        if any(b.cols != cols for b in blocks):
            raise ValueError("vstack: col mismatch")
        data = tuple(row for b in blocks for row in b.data)
        return Matrix(sum(b.rows for b in blocks), cols, data)

    @staticmethod
    def block_diag(blocks: Sequence["Matrix"]) -> "Matrix":
        rows = sum(b.rows for b in blocks)
        cols = sum(b.cols for b in blocks)
        out = [[ZERO] * cols for _ in range(rows)]
        r0 = c0 = 0
        for b in blocks:
            for i in range(b.rows):
                out[r0 + i][c0 : c0 + b.cols] = list(b.data[i])
            r0 += b.rows
            c0 += b.cols
        return Matrix(rows, cols, tuple(tuple(r) for r in out))

    @staticmethod
    def block(grid: Sequence[Sequence["Matrix"]]) -> "Matrix":
        return Matrix.vstack([Matrix.hstack(row) for row in grid])

    # -- basics -------------------------------------------------------------

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Matrix)
            and self.rows == other.rows
            and self.cols == other.cols
            and self.data == other.data
        )

    def __hash__(self) -> int:
        return hash((self.rows, self.cols, self.data))

    def __repr__(self) -> str:
        return f"Matrix({self.rows}x{self.cols})"

    def __getitem__(self, rc: tuple[int, int]) -> Fraction:
        return self.data[rc[0]][rc[1]]

    def row(self, i: int) -> Vec:
        return self.data[i]

    def col(self, j: int) -> Vec:
        return tuple(self.data[i][j] for i in range(self.rows))

    @property
    def is_zero(self) -> bool:
        return all(x == 0 for r in self.data for x in r)

    def __add__(self, other: "Matrix") -> "Matrix":
        if (self.rows, self.cols) != (other.rows, other.cols):
            raise ValueError("add: shape mismatch")
        return Matrix(
            self.rows,
            self.cols,
            tuple(tuple(a + b for a, b in zip(r1, r2)) for r1, r2 in zip(self.data, other.data)),
        )

    def __sub__(self, other: "Matrix") -> "Matrix":
        return self + (-other)

    def __neg__(self) -> "Matrix":
        return Matrix(self.rows, self.cols, tuple(tuple(-x for x in r) for r in self.data))

    def scale(self, c) -> "Matrix":
        c = frac(c)
        return Matrix(self.rows, self.cols, tuple(tuple(c * x for x in r) for r in self.data))

    def __mul__(self, other: "Matrix") -> "Matrix":
        if self.cols != other.rows:
            raise ValueError(f"mul: {self.rows}x{self.cols} by {other.rows}x{other.cols}")
        # Skip zero entries: structure matrices downstream are mostly sparse.
        bdata = other.data
        out = []
        for i in range(self.rows):
            acc = [ZERO] * other.cols
            arow = self.data[i]
            for k in range(self.cols):
                a = arow[k]
                if a:
                    brow = bdata[k]
                    for j in range(other.cols):
                        b = brow[j]
                        if b:
                            acc[j] += a * b
                    # a == 1 fast path not worth special-casing with Fractions
            out.append(tuple(acc))
        return Matrix(self.rows, other.cols, tuple(out))

    def apply(self, v: Sequence) -> Vec:
        v = vec(v)
        if len(v) != self.cols:
            raise ValueError("apply: length mismatch")
        out = []
        for i in range(self.rows):
            s = ZERO
            row = self.data[i]
            for k in range(self.cols):
                if row[k] and v[k]:
                    s += row[k] * v[k]
            out.append(s)
        return tuple(out)

    def transpose(self) -> "Matrix":
        return Matrix(
            self.cols, self.rows, tuple(tuple(self.data[i][j] for i in range(self.rows)) for j in range(self.cols))
        )

    def take_cols(self, idx: Sequence[int]) -> "Matrix":
        return Matrix(self.rows, len(idx), tuple(tuple(r[j] for j in idx) for r in self.data))

    def take_rows(self, idx: Sequence[int]) -> "Matrix":
        return Matrix(len(idx), self.cols, tuple(self.data[i] for i in idx))

    def to_lists(self) -> list[list[Fraction]]:
        return [list(r) for r in self.data]

    # -- elimination --------------------------------------------------------

    def _int_rows(self) -> list[list[int]]:
        out = []
        for r in self.data:
            d = 1
            for x in r:
                d = lcm(d, x.denominator)
            out.append([int(x * d) for x in r])
        return out

    def rref(self) -> tuple["Matrix", tuple[int, ...]]:
        """Reduced row-echelon form and pivot columns (exact, deterministic).

        Elimination runs on integer-scaled rows with gcd normalization, which
        is much faster than Fraction arithmetic; the unique RREF is recovered
        at the end by normalizing pivot rows.
        """
        m, n = self.rows, self.cols
        work = self._int_rows()
        piv_cols: list[int] = []
        r = 0
        for c in range(n):
            p = -1
            for i in range(r, m):
                if work[i][c]:
                    p = i
                    break
            if p < 0:
                continue
            work[r], work[p] = work[p], work[r]
            prow = work[r]
            pval = prow[c]
            for i in range(m):
                if i == r:
                    continue
                v = work[i][c]
                if not v:
                    continue
                row = work[i]
                for j in range(n):
                    row[j] = row[j] * pval - prow[j] * v
                g = 0
                for x in row:
                    if x:
                        g = gcd(g, abs(x))
                if g > 1:
                    for j in range(n):
                        row[j] //= g
            piv_cols.append(c)
            r += 1
            if r == m:
                break
        data = []
        for i in range(m):
            if i < len(piv_cols):
                lead = work[i][piv_cols[i]]
                data.append(tuple(Fraction(x, lead) for x in work[i]))
            else:
                data.append((ZERO,) * n)
        return Matrix(m, n, tuple(data)), tuple(piv_cols)

    def rank(self) -> int:
        return len(self.rref()[1])

    def kernel(self) -> "Matrix":
        """Null-space basis as columns (rref free-variable convention)."""
        R, piv = self.rref()
        pivset = set(piv)
        free = [c for c in range(self.cols) if c not in pivset]
        cols = []
        for f in free:
            v = [ZERO] * self.cols
            v[f] = ONE
            for r, c in enumerate(piv):
                v[c] = -R.data[r][f]
            cols.append(v)
        return Matrix.from_cols(cols, rows=self.cols)

    def solve(self, b: Sequence) -> Optional[Vec]:
        """One solution of ``self @ x = b`` (free variables 0), or None."""
        b = vec(b)
        if len(b) != self.rows:
            raise ValueError("solve: length mismatch")
        aug = Matrix.hstack([self, Matrix.from_cols([b], rows=self.rows)])
        R, piv = aug.rref()
        if piv and piv[-1] == self.cols:
            return None
        x = [ZERO] * self.cols
        for r, c in enumerate(piv):
            x[c] = R.data[r][self.cols]
        return tuple(x)

    def solve_matrix(self, B: "Matrix") -> Optional["Matrix"]:
        """Solve ``self @ X = B`` column by column; None if any is inconsistent."""
        cols = []
        for j in range(B.cols):
            x = self.solve(B.col(j))
            if x is None:
                return None
            cols.append(x)
        return Matrix.from_cols(cols, rows=self.cols)

    @property
    def is_invertible(self) -> bool:
        return self.rows == self.cols and self.rank() == self.rows

    def inverse(self) -> "Matrix":
        if self.rows != self.cols:
            raise ValueError("inverse: not square")
        n = self.rows
        R, piv = Matrix.hstack([self, Matrix.identity(n)]).rref()
        if piv[:n] != tuple(range(n)):
            raise ValueError("inverse: singular matrix")
        return R.take_cols(range(n, 2 * n))


# -- subspaces ---------------------------------------------------------------


@dataclass(frozen=True)
class Subspace:
    """A subspace of Q^ambient, stored with its canonical reduced basis.

    The basis matrix has the subspace's unique reduced column-echelon basis as
    columns, so two equal subspaces are equal dataclasses.
    """

    ambient: int
    basis: Matrix

    @staticmethod
    def from_spanning(m: Matrix) -> "Subspace":
        R, piv = m.transpose().rref()
        cols = [R.row(i) for i in range(len(piv))]
        return Subspace(m.rows, Matrix.from_cols(cols, rows=m.rows))

    @staticmethod
    def full(n: int) -> "Subspace":
        return Subspace(n, Matrix.identity(n))

    @staticmethod
    def zero(n: int) -> "Subspace":
        return Subspace(n, Matrix.zeros(n, 0))

    @property
    def dim(self) -> int:
        return self.basis.cols

    def contains(self, v: Sequence) -> bool:
        return self.basis.solve(v) is not None

    def contains_space(self, other: "Subspace") -> bool:
        return all(self.contains(other.basis.col(j)) for j in range(other.basis.cols))

    def coords(self, v: Sequence) -> Vec:
        x = self.basis.solve(v)
        if x is None:
            raise ValueError("vector not in subspace")
        return x

    def coords_matrix(self, m: Matrix) -> Matrix:
        """Express the columns of ``m`` in this subspace's basis."""
        x = self.basis.solve_matrix(m)
        if x is None:
            raise ValueError("columns not contained in subspace")
        return x


def kernel_space(m: Matrix) -> Subspace:
    return Subspace.from_spanning(m.kernel())


def image_space(m: Matrix) -> Subspace:
    return Subspace.from_spanning(m)


def sum_spaces(spaces: Sequence[Subspace]) -> Subspace:
    if not spaces:
        raise ValueError("sum of no spaces")
    n = spaces[0].ambient
    if any(s.ambient != n for s in spaces):
        raise ValueError("ambient mismatch")
    return Subspace.from_spanning(Matrix.hstack([s.basis for s in spaces]))


def intersection_spaces(a: Subspace, b: Subspace) -> Subspace:
    if a.ambient != b.ambient:
        raise ValueError("ambient mismatch")
    if a.dim == 0 or b.dim == 0:
        return Subspace.zero(a.ambient)
    ker = Matrix.hstack([a.basis, -b.basis]).kernel()
    part = a.basis * ker.take_rows(range(a.dim))
    return Subspace.from_spanning(part)


def complement_space(s: Subspace) -> Subspace:
    """Standard-basis completion: S + result = Q^n, S intersect result = 0."""
    aug = Matrix.hstack([s.basis, Matrix.identity(s.ambient)])
    _, piv = aug.rref()
    extra = [c - s.dim for c in piv if c >= s.dim]
    cols = []
    for e in extra:
        v = [ZERO] * s.ambient
        v[e] = ONE
        cols.append(v)
    return Subspace(s.ambient, Matrix.from_cols(cols, rows=s.ambient))


def quotient_reps(s: Subspace) -> Subspace:
    """Coset representatives completing ``s`` to its ambient space."""
    return complement_space(s)


def preimage_space(f: Matrix, s: Subspace) -> Subspace:
    """{v : f(v) in s} as a subspace of the domain."""
    if f.rows != s.ambient:
        raise ValueError("ambient mismatch")
    if s.dim == 0:
        return kernel_space(f)
    ker = Matrix.hstack([f, -s.basis]).kernel()
    return Subspace.from_spanning(ker.take_rows(range(f.cols)))


def subspace_calc(mode: str, *args):
    """Mode-dispatched subspace calculus (kernel|image|intersection|sum|complement|quotient_reps)."""
    if mode == "kernel":
        return kernel_space(*args)
    if mode == "image":
        return image_space(*args)
    if mode == "intersection":
        return intersection_spaces(*args)
    if mode == "sum":
        return sum_spaces(list(args))
    if mode == "complement":
        return complement_space(*args)
    if mode == "quotient_reps":
        return quotient_reps(*args)
    raise ValueError(f"unknown mode {mode!r}")


def solve_linear(a: Matrix, b: Sequence) -> Optional[Vec]:
    """Deterministic solution of a x = b, or None when inconsistent."""
    return a.solve(b)


# -- cochain complexes -------------------------------------------------------


@dataclass(frozen=True)
class CochainComplex:
    """Finite complex of Q-vector spaces; zero outside [p_min, p_max].

    ``diffs[i]`` maps degree ``p_min + i`` to ``p_min + i + 1`` and must
    compose to zero with its successor.
    """

    p_min: int
    p_max: int
    dims: tuple[int, ...]
    diffs: tuple[Matrix, ...]

    def __post_init__(self):
        n = self.p_max - self.p_min + 1
        if len(self.dims) != n or len(self.diffs) != n - 1:
            raise ValueError("complex: length mismatch")
        for i, d in enumerate(self.diffs):
            if d.cols != self.dims[i] or d.rows != self.dims[i + 1]:
                raise ValueError(f"complex: differential {self.p_min + i} has wrong shape")

    def degrees(self) -> range:
        return range(self.p_min, self.p_max + 1)

    def dim(self, p: int) -> int:
        if p < self.p_min or p > self.p_max:
            return 0
        return self.dims[p - self.p_min]

    def differential(self, p: int) -> Matrix:
        """d^p as a matrix; zero map outside the stored range."""
        if self.p_min <= p < self.p_max:
            return self.diffs[p - self.p_min]
        return Matrix.zeros(self.dim(p + 1), self.dim(p))

    def validate(self) -> list[int]:
        """Degrees p with d^{p+1} d^p != 0 (empty list means valid)."""
        bad = []
        for p in range(self.p_min, self.p_max - 1):
            if not (self.differential(p + 1) * self.differential(p)).is_zero:
                bad.append(p)
        return bad

    def euler_characteristic(self) -> int:
        return sum((-1) ** p * self.dim(p) for p in self.degrees())


@dataclass(frozen=True)
class CohomologyDegree:
    dim: int
    representatives: Matrix  # columns: kernel vectors completing the image


def complex_cohomology(c: CochainComplex) -> dict[int, CohomologyDegree]:
    """Per-degree cohomology with deterministic representatives.

    Raises ValueError naming the first offending degree if d o d != 0.
    """
    bad = c.validate()
    if bad:
        raise ValueError(f"not a complex: d o d != 0 at degree {bad[0]}")
    out: dict[int, CohomologyDegree] = {}
    for p in c.degrees():
        ker = c.differential(p).kernel()
        im = c.differential(p - 1)
        aug = Matrix.hstack([im, ker])
        _, piv = aug.rref()
        reps_idx = [j - im.cols for j in piv if j >= im.cols]
        reps = ker.take_cols(reps_idx)
        out[p] = CohomologyDegree(dim=reps.cols, representatives=reps)
    return out


def betti_numbers(c: CochainComplex) -> dict[int, int]:
    return {p: h.dim for p, h in complex_cohomology(c).items()}


@dataclass(frozen=True)
class QuasiIsoCertificate:
    ok: bool
    degrees: dict[int, tuple[int, int, int]]  # p -> (dim H_p source, dim H_p target, induced rank)


def chain_map_is_quasi_iso(
    c: CochainComplex, cp: CochainComplex, f: dict[int, Matrix]
) -> QuasiIsoCertificate:
    """Whether f induces isomorphisms on all cohomology, with per-degree ranks.

    ``f[p]`` maps degree p of ``c`` to degree p of ``cp``; missing degrees are
    zero maps.  Raises ValueError if f fails to commute with differentials.
    """

    def fmat(p: int) -> Matrix:
        m = f.get(p)
        return m if m is not None else Matrix.zeros(cp.dim(p), c.dim(p))

    lo, hi = min(c.p_min, cp.p_min), max(c.p_max, cp.p_max)
    for p in range(lo, hi):
        lhs = fmat(p + 1) * c.differential(p)
        rhs = cp.differential(p) * fmat(p)
        if lhs != rhs:
            raise ValueError(f"not a chain map at degree {p}")
    h = complex_cohomology(c)
    hp = complex_cohomology(cp)
    degrees: dict[int, tuple[int, int, int]] = {}
    ok = True
    for p in range(lo, hi + 1):
        d1 = h[p].dim if p in h else 0
        d2 = hp[p].dim if p in hp else 0
        rank = 0
        if d1 and d2:
            reps = fmat(p) * h[p].representatives
            # coordinates of images modulo the image of d'^{p-1}
            basis = Matrix.hstack([cp.differential(p - 1), hp[p].representatives])
            coords = basis.solve_matrix(reps)
            if coords is None:
                raise AssertionError("image representative not a cocycle")
            induced = coords.take_rows(range(cp.differential(p - 1).cols, basis.cols))
            rank = induced.rank()
        elif d1 and not d2:
            rank = 0
        if not (d1 == d2 == rank):
            ok = False
        degrees[p] = (d1, d2, rank)
    return QuasiIsoCertificate(ok=ok, degrees=degrees)


def two_term_complex(anchor: Matrix) -> CochainComplex:
    """The complex (C -> E) in degrees 0, 1 for a core anchor C -> E."""
    return CochainComplex(0, 1, (anchor.cols, anchor.rows), (anchor,))
