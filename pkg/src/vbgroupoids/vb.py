"""VB-groupoids as linear-groupoid presentations over a finite groupoid.

A :class:`VBGroupoid` assigns a fiber E_x to every object and Gamma_g to every
arrow, with linear source/target/unit/multiplication matrices.  The
multiplication m_{g,h} is stored as a full matrix on Gamma_g (+) Gamma_h whose
restriction to the fibered product Fib(g,h) = {(v,w) : s v = t w} is the
semantic product; all checks restrict to computed Fib bases.  Inversion is not
stored: it is recovered on demand by solving v w = unit(t v), t w = s v.

The module implements the Grothendieck construction and its inverse
(splitting along a cleavage), the correspondence for maps, VB-Morita
certification (Morita base + fiberwise core quasi-isomorphism), duals,
the arrow VB-groupoid, twists by core-valued data, quasi-inverses of
VB-Morita maps, and stable decomposition.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

from .groupoid import (
    ArrowGroupoid,
    FiniteGroupoid,
    GroupoidMap,
    arrow_groupoid,
    compose_maps,
    identity_map,
    is_morita,
    MoritaCertificate,
    validate_map,
)
from .linalg import (
    Matrix,
    QuasiIsoCertificate,
    Subspace,
    chain_map_is_quasi_iso,
    complement_space,
    intersection_spaces,
    kernel_space,
    preimage_space,
    two_term_complex,
)
from .report import InvalidStructureError, Report
from .ruth import (
    Bundle,
    RuthMorphism,
    TwoTermRuth,
    check_ruth,
    check_ruth_morphism,
    dual_morphism,
    dual_ruth,
)


class NotVBMoritaError(ValueError):
    """Raised when an operation requires a certified VB-Morita map."""


@dataclass(frozen=True, eq=False)
class VBGroupoid:
    base: FiniteGroupoid
    e_dims: Bundle
    gamma_dims: tuple[int, ...]  # fiber dim per arrow
    s_maps: tuple[Matrix, ...]  # per arrow: Gamma_g -> E_{src g}
    t_maps: tuple[Matrix, ...]  # per arrow: Gamma_g -> E_{tgt g}
    u_maps: tuple[Matrix, ...]  # per object: E_x -> Gamma_{unit x}
    m_maps: dict[tuple[int, int], Matrix]  # per composable pair, full matrix

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, VBGroupoid)
            and self.base == other.base
            and self.e_dims == other.e_dims
            and self.gamma_dims == other.gamma_dims
            and self.s_maps == other.s_maps
            and self.t_maps == other.t_maps
            and self.u_maps == other.u_maps
            and self.m_maps == other.m_maps
        )

    def __hash__(self):
        return hash((self.e_dims, self.gamma_dims))

    def mult_blocks(self, g: int, h: int) -> tuple[Matrix, Matrix]:
        """Column blocks (M1, M2) of the full multiplication on Gamma_g (+) Gamma_h."""
        m = self.m_maps[(g, h)]
        dg = self.gamma_dims[g]
        return m.take_cols(range(dg)), m.take_cols(range(dg, m.cols))

    def mult_of(self, g: int, h: int, a: Matrix, b: Matrix) -> Matrix:
        """Full-matrix product of two column families over g and h.

        Valid wherever the pairs are composable; callers are responsible for
        only reading entries whose inputs satisfy s a = t b.
        """
        m1, m2 = self.mult_blocks(g, h)
        return m1 * a + m2 * b

    def fib_basis(self, g: int, h: int) -> Matrix:
        """Basis of Fib(g, h) as columns in Gamma_g (+) Gamma_h."""
        return Matrix.hstack([self.s_maps[g], -self.t_maps[h]]).kernel()

    def fib_string_basis(self, arrows: Sequence[int]) -> Matrix:
        """Basis of the p-fold fibered product along a composable string."""
        p = len(arrows)
        dims = [self.gamma_dims[a] for a in arrows]
        total = sum(dims)
        if p == 0:
            raise ValueError("empty string")
        if p == 1:
            return Matrix.identity(dims[0])
        rows = []
        off = [0]
        for d in dims:
            off.append(off[-1] + d)
        for i in range(p - 1):
            blocks = []
            for j in range(p):
                if j == i:
                    blocks.append(self.s_maps[arrows[i]])
                elif j == i + 1:
                    blocks.append(-self.t_maps[arrows[i + 1]])
                else:
                    blocks.append(Matrix.zeros(self.s_maps[arrows[i]].rows, dims[j]))
            rows.append(Matrix.hstack(blocks))
        return Matrix.vstack(rows).kernel() if rows else Matrix.identity(total)

    def inverse_matrix(self, g: int) -> Matrix:
        """The linear inversion Gamma_g -> Gamma_{g inv}, solved from the axioms."""
        base = self.base
        gi = base.inv[g]
        m1, m2 = self.mult_blocks(g, gi)
        # unknown w per basis vector v:  m(v, w) = u(t v)  and  t(w) = s(v)
        a = Matrix.vstack([m2, self.t_maps[gi]])
        cols = []
        ut = self.u_maps[base.tgt[g]] * self.t_maps[g]
        for k in range(self.gamma_dims[g]):
            v = tuple(1 if i == k else 0 for i in range(self.gamma_dims[g]))
            rhs = tuple(ut.apply(v)) + tuple(self.s_maps[g].apply(v))
            lhs_shift = m1.apply(v)
            b = tuple(x - y for x, y in zip(rhs[: m2.rows], lhs_shift)) + rhs[m2.rows :]
            w = a.solve(b)
            if w is None:
                raise InvalidStructureError(f"no inverse for basis vector {k} over arrow {g}", Report())
            cols.append(w)
        return Matrix.from_cols(cols, rows=self.gamma_dims[gi])


@dataclass(frozen=True)
class CoreData:
    """Core bundle of a VB-groupoid: kernel bases of s at units, with anchors."""

    basis: tuple[Matrix, ...]  # per object: Gamma_{unit x} x c_x
    anchor: tuple[Matrix, ...]  # per object: C_x -> E_x in the kernel basis

    @property
    def dims(self) -> Bundle:
        return tuple(k.cols for k in self.basis)


def core(v: VBGroupoid) -> CoreData:
    basis = []
    anchor = []
    for x in range(v.base.n_objects):
        u = v.base.unit[x]
        k = v.s_maps[u].kernel()
        basis.append(k)
        anchor.append(v.t_maps[u] * k)
    return CoreData(basis=tuple(basis), anchor=tuple(anchor))


def is_acyclic(v: VBGroupoid) -> bool:
    """Whether the core anchor is a fiberwise isomorphism."""
    return all(a.is_invertible for a in core(v).anchor)


def check_vbgroupoid(v: VBGroupoid) -> Report:
    rep = Report()
    g = v.base
    if len(v.e_dims) != g.n_objects or len(v.gamma_dims) != g.n_arrows:
        rep.add("dims", (), "tables sized wrong")
        return rep
    for a in range(g.n_arrows):
        if (v.s_maps[a].rows, v.s_maps[a].cols) != (v.e_dims[g.src[a]], v.gamma_dims[a]):
            rep.add("s-shape", (a,))
        if (v.t_maps[a].rows, v.t_maps[a].cols) != (v.e_dims[g.tgt[a]], v.gamma_dims[a]):
            rep.add("t-shape", (a,))
    for x in range(g.n_objects):
        if (v.u_maps[x].rows, v.u_maps[x].cols) != (v.gamma_dims[g.unit[x]], v.e_dims[x]):
            rep.add("u-shape", (x,))
    if set(v.m_maps) != set(g.pairs):
        rep.add("m-domain", ())
    else:
        for (g1, g2), m in v.m_maps.items():
            g12 = g.compose(g1, g2)
            if (m.rows, m.cols) != (v.gamma_dims[g12], v.gamma_dims[g1] + v.gamma_dims[g2]):
                rep.add("m-shape", (g1, g2))
    if not rep.ok:
        return rep
    for a in range(g.n_arrows):
        if v.s_maps[a].rank() != v.e_dims[g.src[a]]:
            rep.add("s-surjective", (a,))
        if v.t_maps[a].rank() != v.e_dims[g.tgt[a]]:
            rep.add("t-surjective", (a,))
    for x in range(g.n_objects):
        u = g.unit[x]
        if v.s_maps[u] * v.u_maps[x] != Matrix.identity(v.e_dims[x]):
            rep.add("unit-section-s", (x,))
        if v.t_maps[u] * v.u_maps[x] != Matrix.identity(v.e_dims[x]):
            rep.add("unit-section-t", (x,))
    for g1, g2 in g.pairs:
        g12 = g.compose(g1, g2)
        fib = v.fib_basis(g1, g2)
        a = fib.take_rows(range(v.gamma_dims[g1]))
        b = fib.take_rows(range(v.gamma_dims[g1], fib.rows))
        prod = v.mult_of(g1, g2, a, b)
        if v.s_maps[g12] * prod != v.s_maps[g2] * b:
            rep.add("mult-source", (g1, g2))
        if v.t_maps[g12] * prod != v.t_maps[g1] * a:
            rep.add("mult-target", (g1, g2))
    for a in range(g.n_arrows):
        d = v.gamma_dims[a]
        ut = v.u_maps[g.tgt[a]] * v.t_maps[a]
        us = v.u_maps[g.src[a]] * v.s_maps[a]
        if v.mult_of(g.unit[g.tgt[a]], a, ut, Matrix.identity(d)) != Matrix.identity(d):
            rep.add("unit-law-left", (a,))
        if v.mult_of(a, g.unit[g.src[a]], Matrix.identity(d), us) != Matrix.identity(d):
            rep.add("unit-law-right", (a,))
    for g1, g2, g3 in g.triples():
        fib = v.fib_string_basis((g1, g2, g3))
        d1, d2, d3 = (v.gamma_dims[x] for x in (g1, g2, g3))
        a = fib.take_rows(range(d1))
        b = fib.take_rows(range(d1, d1 + d2))
        c = fib.take_rows(range(d1 + d2, d1 + d2 + d3))
        left = v.mult_of(g.compose(g1, g2), g3, v.mult_of(g1, g2, a, b), c)
        right = v.mult_of(g1, g.compose(g2, g3), a, v.mult_of(g2, g3, b, c))
        if left != right:
            rep.add("associativity", (g1, g2, g3))
    for a in range(g.n_arrows):
        try:
            inv = v.inverse_matrix(a)
        except InvalidStructureError:
            rep.add("inverse-missing", (a,))
            continue
        d = v.gamma_dims[a]
        lhs = v.mult_of(g.inv[a], a, inv, Matrix.identity(d))
        if lhs != v.u_maps[g.src[a]] * v.s_maps[a]:
            rep.add("inverse-law", (a,), "inv(v) v != unit(s v)")
    return rep


# -- basic constructions -------------------------------------------------------


def zero_vb(base: FiniteGroupoid) -> VBGroupoid:
    return VBGroupoid(
        base=base,
        e_dims=(0,) * base.n_objects,
        gamma_dims=(0,) * base.n_arrows,
        s_maps=tuple(Matrix.zeros(0, 0) for _ in range(base.n_arrows)),
        t_maps=tuple(Matrix.zeros(0, 0) for _ in range(base.n_arrows)),
        u_maps=tuple(Matrix.zeros(0, 0) for _ in range(base.n_objects)),
        m_maps={p: Matrix.zeros(0, 0) for p in base.pairs},
    )


def acyclic_vb(base: FiniteGroupoid, e_dims: Sequence[int]) -> VBGroupoid:
    """The acyclic VB-groupoid on a bundle: one arrow (e', e) over every g."""
    e = tuple(e_dims)
    gdims = tuple(e[base.tgt[a]] + e[base.src[a]] for a in range(base.n_arrows))
    s_maps = []
    t_maps = []
    for a in range(base.n_arrows):
        et, es = e[base.tgt[a]], e[base.src[a]]
        s_maps.append(Matrix.hstack([Matrix.zeros(es, et), Matrix.identity(es)]))
        t_maps.append(Matrix.hstack([Matrix.identity(et), Matrix.zeros(et, es)]))
    u_maps = tuple(Matrix.vstack([Matrix.identity(e[x]), Matrix.identity(e[x])]) for x in range(base.n_objects))
    m_maps = {}
    for g1, g2 in base.pairs:
        e3 = e[base.tgt[g1]]
        e2 = e[base.src[g1]]
        e2b = e[base.tgt[g2]]
        e1 = e[base.src[g2]]
        m_maps[(g1, g2)] = Matrix.block(
            [
                [Matrix.identity(e3), Matrix.zeros(e3, e2), Matrix.zeros(e3, e2b), Matrix.zeros(e3, e1)],
                [Matrix.zeros(e1, e3), Matrix.zeros(e1, e2), Matrix.zeros(e1, e2b), Matrix.identity(e1)],
            ]
        )
    out = VBGroupoid(
        base=base, e_dims=e, gamma_dims=gdims, s_maps=tuple(s_maps), t_maps=tuple(t_maps), u_maps=u_maps, m_maps=m_maps
    )
    check_vbgroupoid(out).require("acyclic_vb: output invalid")
    return out


def direct_sum_vb(v1: VBGroupoid, v2: VBGroupoid) -> VBGroupoid:
    if v1.base != v2.base:
        raise ValueError("direct_sum_vb: different bases")
    g = v1.base

    def interleave(m1: Matrix, m2: Matrix) -> Matrix:
        return Matrix.block_diag([m1, m2])

    m_maps = {}
    for g1, g2 in g.pairs:
        a1, b1 = v1.mult_blocks(g1, g2)
        a2, b2 = v2.mult_blocks(g1, g2)
        r1, r2 = a1.rows, a2.rows
        m_maps[(g1, g2)] = Matrix.block(
            [
                [a1, Matrix.zeros(r1, a2.cols), b1, Matrix.zeros(r1, b2.cols)],
                [Matrix.zeros(r2, a1.cols), a2, Matrix.zeros(r2, b1.cols), b2],
            ]
        )
    return VBGroupoid(
        base=g,
        e_dims=tuple(a + b for a, b in zip(v1.e_dims, v2.e_dims)),
        gamma_dims=tuple(a + b for a, b in zip(v1.gamma_dims, v2.gamma_dims)),
        s_maps=tuple(interleave(v1.s_maps[a], v2.s_maps[a]) for a in range(g.n_arrows)),
        t_maps=tuple(interleave(v1.t_maps[a], v2.t_maps[a]) for a in range(g.n_arrows)),
        u_maps=tuple(interleave(v1.u_maps[x], v2.u_maps[x]) for x in range(g.n_objects)),
        m_maps=m_maps,
    )


# -- the Grothendieck construction ----------------------------------------------


def grothendieck(r: TwoTermRuth) -> VBGroupoid:
    """Semi-direct product VB-groupoid of a ruth: Gamma_g = C_{tgt g} (+) E_{src g}.

    Structure maps: s(c,e) = e, t(c,e) = anchor(c) + rho_e(e), u(e) = (0,e),
    (c1,e1)(c2,e2) = (c1 + rho_c_{g1} c2 - gamma_{g1,g2} e2, e2).
    """
    check_ruth(r).require("grothendieck: invalid ruth")
    g = r.base
    gdims = tuple(r.c_dims[g.tgt[a]] + r.e_dims[g.src[a]] for a in range(g.n_arrows))
    s_maps = []
    t_maps = []
    for a in range(g.n_arrows):
        c, e = r.c_dims[g.tgt[a]], r.e_dims[g.src[a]]
        s_maps.append(Matrix.hstack([Matrix.zeros(e, c), Matrix.identity(e)]))
        t_maps.append(Matrix.hstack([r.anchor[g.tgt[a]], r.rho_e[a]]))
    u_maps = tuple(
        Matrix.vstack([Matrix.zeros(r.c_dims[x], r.e_dims[x]), Matrix.identity(r.e_dims[x])])
        for x in range(g.n_objects)
    )
    m_maps = {}
    for g1, g2 in g.pairs:
        ct = r.c_dims[g.tgt[g1]]
        e1 = r.e_dims[g.src[g1]]
        ch = r.c_dims[g.tgt[g2]]
        e2 = r.e_dims[g.src[g2]]
        m_maps[(g1, g2)] = Matrix.block(
            [
                [Matrix.identity(ct), Matrix.zeros(ct, e1), r.rho_c[g1], -r.gamma[(g1, g2)]],
                [Matrix.zeros(e2, ct), Matrix.zeros(e2, e1), Matrix.zeros(e2, ch), Matrix.identity(e2)],
            ]
        )
    out = VBGroupoid(
        base=g,
        e_dims=r.e_dims,
        gamma_dims=gdims,
        s_maps=tuple(s_maps),
        t_maps=tuple(t_maps),
        u_maps=u_maps,
        m_maps=m_maps,
    )
    check_vbgroupoid(out).require("grothendieck: output invalid")
    return out


@dataclass(frozen=True)
class Cleavage:
    """A unital linear section of the source: s_g sigma_g = id, sigma at units = u."""

    sigma: tuple[Matrix, ...]  # per arrow: E_{src g} -> Gamma_g


def check_cleavage(v: VBGroupoid, c: Cleavage) -> Report:
    rep = Report()
    g = v.base
    for a in range(g.n_arrows):
        sg = c.sigma[a]
        if (sg.rows, sg.cols) != (v.gamma_dims[a], v.e_dims[g.src[a]]):
            rep.add("shape", (a,))
            continue
        if v.s_maps[a] * sg != Matrix.identity(v.e_dims[g.src[a]]):
            rep.add("section", (a,))
    for x in range(g.n_objects):
        if c.sigma[g.unit[x]] != v.u_maps[x]:
            rep.add("unital", (x,))
    return rep


def choose_cleavage(v: VBGroupoid) -> Cleavage:
    """Deterministic unital cleavage: canonical right inverse of each s_g."""
    g = v.base
    sigma = []
    for a in range(g.n_arrows):
        rinv = v.s_maps[a].solve_matrix(Matrix.identity(v.e_dims[g.src[a]]))
        if rinv is None:
            raise InvalidStructureError(f"choose_cleavage: s not surjective at arrow {a}", Report())
        sigma.append(rinv)
    sigma = [v.u_maps[x] if g.is_unit(a) else sigma[a] for a, x in ((a, g.src[a]) for a in range(g.n_arrows))]
    c = Cleavage(sigma=tuple(sigma))
    check_cleavage(v, c).require("choose_cleavage: output invalid")
    return c


def split(v: VBGroupoid, cleavage: Optional[Cleavage] = None) -> tuple[TwoTermRuth, "VBMap"]:
    """Break a VB-groupoid into a ruth along a cleavage.

    rho_e = t sigma; rho_c is the conjugation sigma(g, anchor c) . c . 0_{g inv};
    gamma is the vertical defect of sigma against multiplication.  Returns the
    ruth together with the isomorphism v -> grothendieck(ruth) sending an
    arrow to (vertical part, source).  Output is validated on every call.
    """
    if cleavage is None:
        cleavage = choose_cleavage(v)
    check_cleavage(v, cleavage).require("split: invalid cleavage")
    g = v.base
    cd = core(v)
    rho_e = tuple(v.t_maps[a] * cleavage.sigma[a] for a in range(g.n_arrows))
    rho_c = []
    for a in range(g.n_arrows):
        x = g.src[a]
        first = v.mult_of(a, g.unit[x], cleavage.sigma[a] * cd.anchor[x], cd.basis[x])
        m1, _ = v.mult_blocks(a, g.inv[a])
        res = m1 * first
        coords = cd.basis[g.tgt[a]].solve_matrix(res)
        if coords is None:
            raise InvalidStructureError(f"split: rho_c not core-valued at arrow {a}", Report())
        rho_c.append(coords)
    gamma = {}
    for g1, g2 in g.pairs:
        g12 = g.compose(g1, g2)
        y = g.tgt[g1]
        p1 = v.mult_of(g1, g2, cleavage.sigma[g1] * rho_e[g2], cleavage.sigma[g2])
        inv_lift = v.inverse_matrix(g12) * cleavage.sigma[g12]
        p2 = v.mult_of(g12, g.inv[g12], p1, inv_lift)
        defect = p2 - v.u_maps[y] * rho_e[g12]
        coords = cd.basis[y].solve_matrix(defect)
        if coords is None:
            raise InvalidStructureError(f"split: curvature not core-valued at pair {(g1, g2)}", Report())
        gamma[(g1, g2)] = -coords
    r = TwoTermRuth(
        base=g,
        e_dims=v.e_dims,
        c_dims=cd.dims,
        anchor=cd.anchor,
        rho_e=rho_e,
        rho_c=tuple(rho_c),
        gamma=gamma,
    )
    check_ruth(r).require("split: extracted ruth invalid")
    target = grothendieck(r)
    arr = []
    for a in range(g.n_arrows):
        y = g.tgt[a]
        m1, m2 = v.mult_blocks(a, g.inv[a])
        vert = (
            m1
            + m2 * (v.inverse_matrix(a) * cleavage.sigma[a] * v.s_maps[a])
            - v.u_maps[y] * rho_e[a] * v.s_maps[a]
        )
        coords = cd.basis[y].solve_matrix(vert)
        if coords is None:
            raise InvalidStructureError(f"split: vertical part not core-valued at arrow {a}", Report())
        arr.append(Matrix.vstack([coords, v.s_maps[a]]))
    iso = VBMap(
        source=v,
        target=target,
        base_map=identity_map(g),
        obj_maps=tuple(Matrix.identity(d) for d in v.e_dims),
        arr_maps=tuple(arr),
    )
    check_vbmap(iso).require("split: comparison map invalid")
    for a in range(g.n_arrows):
        if not iso.arr_maps[a].is_invertible:
            raise InvalidStructureError(f"split: comparison not invertible at arrow {a}", Report())
    return r, iso


# -- VB-maps --------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class VBMap:
    source: VBGroupoid
    target: VBGroupoid
    base_map: GroupoidMap
    obj_maps: tuple[Matrix, ...]  # per source object
    arr_maps: tuple[Matrix, ...]  # per source arrow

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, VBMap)
            and self.source == other.source
            and self.target == other.target
            and self.base_map == other.base_map
            and self.obj_maps == other.obj_maps
            and self.arr_maps == other.arr_maps
        )

    def __hash__(self):
        return hash((self.obj_maps, self.arr_maps))

    @property
    def is_invertible(self) -> bool:
        bm = self.base_map
        if sorted(bm.obj_map) != list(range(bm.cod.n_objects)) or sorted(bm.arr_map) != list(
            range(bm.cod.n_arrows)
        ):
            return False
        return all(m.is_invertible for m in self.obj_maps) and all(m.is_invertible for m in self.arr_maps)


def check_vbmap(f: VBMap) -> Report:
    rep = Report()
    rep.extend(validate_map(f.base_map))
    if not rep.ok:
        return rep
    if f.base_map.dom != f.source.base or f.base_map.cod != f.target.base:
        rep.add("base", (), "base map endpoints do not match")
        return rep
    v, w = f.source, f.target
    bm = f.base_map
    g = v.base
    for x in range(g.n_objects):
        m = f.obj_maps[x]
        if (m.rows, m.cols) != (w.e_dims[bm.obj_map[x]], v.e_dims[x]):
            rep.add("obj-shape", (x,))
    for a in range(g.n_arrows):
        m = f.arr_maps[a]
        if (m.rows, m.cols) != (w.gamma_dims[bm.arr_map[a]], v.gamma_dims[a]):
            rep.add("arr-shape", (a,))
    if not rep.ok:
        return rep
    for a in range(g.n_arrows):
        fa = bm.arr_map[a]
        if w.s_maps[fa] * f.arr_maps[a] != f.obj_maps[g.src[a]] * v.s_maps[a]:
            rep.add("source-compat", (a,))
        if w.t_maps[fa] * f.arr_maps[a] != f.obj_maps[g.tgt[a]] * v.t_maps[a]:
            rep.add("target-compat", (a,))
    for x in range(g.n_objects):
        if f.arr_maps[g.unit[x]] * v.u_maps[x] != w.u_maps[bm.obj_map[x]] * f.obj_maps[x]:
            rep.add("unit-compat", (x,))
    for g1, g2 in g.pairs:
        g12 = g.compose(g1, g2)
        fib = v.fib_basis(g1, g2)
        a = fib.take_rows(range(v.gamma_dims[g1]))
        b = fib.take_rows(range(v.gamma_dims[g1], fib.rows))
        lhs = f.arr_maps[g12] * v.mult_of(g1, g2, a, b)
        rhs = w.mult_of(bm.arr_map[g1], bm.arr_map[g2], f.arr_maps[g1] * a, f.arr_maps[g2] * b)
        if lhs != rhs:
            rep.add("mult-compat", (g1, g2))
    return rep


def identity_vbmap(v: VBGroupoid) -> VBMap:
    return VBMap(
        source=v,
        target=v,
        base_map=identity_map(v.base),
        obj_maps=tuple(Matrix.identity(d) for d in v.e_dims),
        arr_maps=tuple(Matrix.identity(d) for d in v.gamma_dims),
    )


def compose_vbmap(f2: VBMap, f1: VBMap) -> VBMap:
    if f1.target != f2.source:
        raise ValueError("compose_vbmap: endpoints do not match")
    bm = compose_maps(f2.base_map, f1.base_map)
    g = f1.source.base
    return VBMap(
        source=f1.source,
        target=f2.target,
        base_map=bm,
        obj_maps=tuple(f2.obj_maps[f1.base_map.obj_map[x]] * f1.obj_maps[x] for x in range(g.n_objects)),
        arr_maps=tuple(f2.arr_maps[f1.base_map.arr_map[a]] * f1.arr_maps[a] for a in range(g.n_arrows)),
    )


def inverse_vbmap(f: VBMap) -> VBMap:
    if not f.is_invertible:
        raise ValueError("inverse_vbmap: map not invertible")
    bm = f.base_map
    obj_inv = {bm.obj_map[x]: x for x in range(bm.dom.n_objects)}
    arr_inv = {bm.arr_map[a]: a for a in range(bm.dom.n_arrows)}
    base_inv = GroupoidMap(
        bm.cod,
        bm.dom,
        tuple(obj_inv[y] for y in range(bm.cod.n_objects)),
        tuple(arr_inv[b] for b in range(bm.cod.n_arrows)),
    )
    out = VBMap(
        source=f.target,
        target=f.source,
        base_map=base_inv,
        obj_maps=tuple(f.obj_maps[obj_inv[y]].inverse() for y in range(bm.cod.n_objects)),
        arr_maps=tuple(f.arr_maps[arr_inv[b]].inverse() for b in range(bm.cod.n_arrows)),
    )
    check_vbmap(out).require("inverse_vbmap: inverse not a VB-map")
    return out


def zero_projection(v: VBGroupoid) -> VBMap:
    """The projection of v onto the zero VB-groupoid over the same base."""
    z = zero_vb(v.base)
    return VBMap(
        source=v,
        target=z,
        base_map=identity_map(v.base),
        obj_maps=tuple(Matrix.zeros(0, d) for d in v.e_dims),
        arr_maps=tuple(Matrix.zeros(0, d) for d in v.gamma_dims),
    )


def sum_projection_vb(v1: VBGroupoid, v2: VBGroupoid, side: int = 0) -> VBMap:
    s = direct_sum_vb(v1, v2)
    vi = (v1, v2)[side]
    g = v1.base

    def prj(small: int, total: int, offset: int) -> Matrix:
        return Matrix.hstack(
            [Matrix.zeros(small, offset), Matrix.identity(small), Matrix.zeros(small, total - offset - small)]
        )

    return VBMap(
        source=s,
        target=vi,
        base_map=identity_map(g),
        obj_maps=tuple(
            prj(vi.e_dims[x], s.e_dims[x], 0 if side == 0 else v1.e_dims[x]) for x in range(g.n_objects)
        ),
        arr_maps=tuple(
            prj(vi.gamma_dims[a], s.gamma_dims[a], 0 if side == 0 else v1.gamma_dims[a])
            for a in range(g.n_arrows)
        ),
    )


def sum_inclusion_vb(v1: VBGroupoid, v2: VBGroupoid, side: int = 0) -> VBMap:
    s = direct_sum_vb(v1, v2)
    vi = (v1, v2)[side]
    g = v1.base

    def inc(small: int, total: int, offset: int) -> Matrix:
        return Matrix.vstack(
            [Matrix.zeros(offset, small), Matrix.identity(small), Matrix.zeros(total - offset - small, small)]
        )

    return VBMap(
        source=vi,
        target=s,
        base_map=identity_map(g),
        obj_maps=tuple(
            inc(vi.e_dims[x], s.e_dims[x], 0 if side == 0 else v1.e_dims[x]) for x in range(g.n_objects)
        ),
        arr_maps=tuple(
            inc(vi.gamma_dims[a], s.gamma_dims[a], 0 if side == 0 else v1.gamma_dims[a])
            for a in range(g.n_arrows)
        ),
    )


# -- the map correspondence ------------------------------------------------------


def grothendieck_map(m: RuthMorphism) -> VBMap:
    """VB-map between Grothendieck constructions: (c,e) -> (phi_c c + mu e, phi_e e)."""
    check_ruth_morphism(m).require("grothendieck_map: invalid morphism")
    g = m.source.base
    v = grothendieck(m.source)
    w = grothendieck(m.target)
    arr = []
    for a in range(g.n_arrows):
        y, x = g.tgt[a], g.src[a]
        arr.append(Matrix.block([[m.phi_c[y], m.mu[a]], [Matrix.zeros(m.target.e_dims[x], m.source.c_dims[y]), m.phi_e[x]]]))
    out = VBMap(
        source=v, target=w, base_map=identity_map(g), obj_maps=tuple(m.phi_e), arr_maps=tuple(arr)
    )
    check_vbmap(out).require("grothendieck_map: output invalid")
    return out


def split_map(
    f: VBMap,
    cleav_src: Optional[Cleavage] = None,
    cleav_tgt: Optional[Cleavage] = None,
) -> RuthMorphism:
    """Extract the ruth morphism of an identity-base VB-map via cleavages.

    With canonical (Grothendieck) endpoints this is the exact inverse of
    grothendieck_map; in general both endpoints are first split.
    """
    if f.base_map != identity_map(f.source.base):
        raise ValueError("split_map: base map must be the identity")
    r_src, iso_src = split(f.source, cleav_src)
    r_tgt, iso_tgt = split(f.target, cleav_tgt)
    canon = compose_vbmap(compose_vbmap(iso_tgt, f), inverse_vbmap(iso_src))
    g = f.source.base
    phi_e = tuple(canon.obj_maps)
    phi_c = []
    for x in range(g.n_objects):
        c = r_src.c_dims[x]
        phi_c.append(canon.arr_maps[g.unit[x]].take_rows(range(r_tgt.c_dims[x])).take_cols(range(c)))
    mu = []
    for a in range(g.n_arrows):
        ct = r_tgt.c_dims[g.tgt[a]]
        cs = r_src.c_dims[g.tgt[a]]
        mu.append(canon.arr_maps[a].take_rows(range(ct)).take_cols(range(cs, canon.arr_maps[a].cols)))
    out = RuthMorphism(source=r_src, target=r_tgt, phi_e=phi_e, phi_c=tuple(phi_c), mu=tuple(mu))
    check_ruth_morphism(out).require("split_map: extracted morphism invalid")
    return out


def base_change(f: GroupoidMap, v: VBGroupoid) -> tuple[VBGroupoid, VBMap]:
    """Reindex fibers along a functor into the base; returns (pullback, canonical map)."""
    validate_map(f).require("base_change: invalid functor")
    if f.cod != v.base:
        raise ValueError("base_change: functor does not land in the base groupoid")
    d = f.dom
    out = VBGroupoid(
        base=d,
        e_dims=tuple(v.e_dims[f.obj_map[x]] for x in range(d.n_objects)),
        gamma_dims=tuple(v.gamma_dims[f.arr_map[a]] for a in range(d.n_arrows)),
        s_maps=tuple(v.s_maps[f.arr_map[a]] for a in range(d.n_arrows)),
        t_maps=tuple(v.t_maps[f.arr_map[a]] for a in range(d.n_arrows)),
        u_maps=tuple(v.u_maps[f.obj_map[x]] for x in range(d.n_objects)),
        m_maps={(g1, g2): v.m_maps[(f.arr_map[g1], f.arr_map[g2])] for (g1, g2) in d.pairs},
    )
    check_vbgroupoid(out).require("base_change: output invalid")
    canonical = VBMap(
        source=out,
        target=v,
        base_map=f,
        obj_maps=tuple(Matrix.identity(out.e_dims[x]) for x in range(d.n_objects)),
        arr_maps=tuple(Matrix.identity(out.gamma_dims[a]) for a in range(d.n_arrows)),
    )
    check_vbmap(canonical).require("base_change: canonical map invalid")
    return out, canonical


# -- VB-Morita certification ------------------------------------------------------


@dataclass(frozen=True)
class VBMoritaCertificate:
    ok: bool
    base: MoritaCertificate
    fibers: tuple[QuasiIsoCertificate, ...]  # per source object


def core_map(f: VBMap, cd_src: CoreData, cd_tgt: CoreData, x: int) -> Matrix:
    """The induced map C_x -> C'_{f x} in the kernel bases."""
    g = f.source.base
    y = f.base_map.obj_map[x]
    img = f.arr_maps[g.unit[x]] * cd_src.basis[x]
    coords = cd_tgt.basis[y].solve_matrix(img)
    if coords is None:
        raise InvalidStructureError(f"core_map: image not in core at object {x}", Report())
    return coords


def is_vb_morita(f: VBMap) -> VBMoritaCertificate:
    """Morita on the base plus quasi-isomorphism on every fiberwise core complex."""
    check_vbmap(f).require("is_vb_morita: invalid VB-map")
    base_cert = is_morita(f.base_map)
    cd_src = core(f.source)
    cd_tgt = core(f.target)
    fibers = []
    ok = base_cert.ok
    for x in range(f.source.base.n_objects):
        y = f.base_map.obj_map[x]
        cert = chain_map_is_quasi_iso(
            two_term_complex(cd_src.anchor[x]),
            two_term_complex(cd_tgt.anchor[y]),
            {0: core_map(f, cd_src, cd_tgt, x), 1: f.obj_maps[x]},
        )
        fibers.append(cert)
        ok = ok and cert.ok
    return VBMoritaCertificate(ok=ok, base=base_cert, fibers=tuple(fibers))


# -- duality ----------------------------------------------------------------------


def dual_vb(v: VBGroupoid) -> VBGroupoid:
    """Dual VB-groupoid, realized through the canonical split and the dual ruth."""
    r, _ = split(v, choose_cleavage(v))
    return grothendieck(dual_ruth(r))


def dual_vbmap(f: VBMap) -> VBMap:
    """Dual of an identity-base VB-map, in the canonical split coordinates."""
    if f.base_map != identity_map(f.source.base):
        raise ValueError("dual_vbmap: base map must be the identity")
    return grothendieck_map(dual_morphism(split_map(f)))


# -- isomorphisms of maps, twisting ------------------------------------------------


@dataclass(frozen=True)
class VBMapIso:
    """alpha: phi => psi for VB-maps with a common base map.

    alpha_x: E'_x -> Gamma_{unit(phi0 x)} with s alpha = phi0, t alpha = psi0,
    and psi(v) alpha(s v) = alpha(t v) phi(v) for all arrows v.
    """

    phi: VBMap
    psi: VBMap
    alpha: tuple[Matrix, ...]  # per source-base object


def check_vbmap_iso(iso: VBMapIso) -> Report:
    rep = Report()
    phi, psi = iso.phi, iso.psi
    if phi.source != psi.source or phi.target != psi.target:
        rep.add("endpoints", (), "phi and psi must be parallel")
        return rep
    if phi.base_map != psi.base_map:
        rep.add("base", (), "phi and psi must share the base map")
        return rep
    v, w = phi.source, phi.target
    g = v.base
    bm = phi.base_map
    for x in range(g.n_objects):
        ux = w.base.unit[bm.obj_map[x]]
        a = iso.alpha[x]
        if (a.rows, a.cols) != (w.gamma_dims[ux], v.e_dims[x]):
            rep.add("alpha-shape", (x,))
            continue
        if w.s_maps[ux] * a != phi.obj_maps[x]:
            rep.add("alpha-source", (x,))
        if w.t_maps[ux] * a != psi.obj_maps[x]:
            rep.add("alpha-target", (x,))
    if not rep.ok:
        return rep
    for a in range(g.n_arrows):
        fa = bm.arr_map[a]
        x, y = g.src[a], g.tgt[a]
        lhs = w.mult_of(fa, w.base.unit[bm.obj_map[x]], psi.arr_maps[a], iso.alpha[x] * v.s_maps[a])
        rhs = w.mult_of(w.base.unit[bm.obj_map[y]], fa, iso.alpha[y] * v.t_maps[a], phi.arr_maps[a])
        if lhs != rhs:
            rep.add("naturality", (a,))
    return rep


def trivial_iso(f: VBMap) -> VBMapIso:
    """The unit isomorphism f => f."""
    g = f.source.base
    alpha = tuple(
        f.target.u_maps[f.base_map.obj_map[x]] * f.obj_maps[x] for x in range(g.n_objects)
    )
    return VBMapIso(phi=f, psi=f, alpha=alpha)


def twist(f: VBMap, alpha: Sequence[Matrix]) -> tuple[VBMap, VBMapIso]:
    """Twist an identity-base VB-map by core-valued data alpha_x: E_x -> C'_x.

    Returns the twisted map f^alpha and the witnessing isomorphism f => f^alpha.
    """
    if f.base_map != identity_map(f.source.base):
        raise ValueError("twist: base map must be the identity")
    v, w = f.source, f.target
    g = v.base
    cd = core(w)
    lifted = tuple(
        cd.basis[x] * alpha[x] + w.u_maps[x] * f.obj_maps[x] for x in range(g.n_objects)
    )
    obj = tuple(f.obj_maps[x] + cd.anchor[x] * alpha[x] for x in range(g.n_objects))
    arr = []
    for a in range(g.n_arrows):
        x, y = g.src[a], g.tgt[a]
        uy, ux = g.unit[y], g.unit[x]
        first = w.mult_of(uy, a, lifted[y] * v.t_maps[a], f.arr_maps[a])
        inv_l = w.inverse_matrix(ux) * (lifted[x] * v.s_maps[a])
        arr.append(w.mult_of(a, ux, first, inv_l))
    out = VBMap(source=v, target=w, base_map=f.base_map, obj_maps=obj, arr_maps=tuple(arr))
    check_vbmap(out).require("twist: twisted map invalid")
    iso = VBMapIso(phi=f, psi=out, alpha=lifted)
    check_vbmap_iso(iso).require("twist: witnessing isomorphism invalid")
    return out, iso


def find_vbmap_iso(phi: VBMap, psi: VBMap) -> Optional[VBMapIso]:
    """Solve the linear isomorphism conditions for alpha: phi => psi.

    Returns the rref-deterministic solution, or None when the maps are not
    isomorphic.  Both maps must be parallel with the same base map.
    """
    if phi.source != psi.source or phi.target != psi.target or phi.base_map != psi.base_map:
        raise ValueError("find_vbmap_iso: maps not parallel")
    v, w = phi.source, phi.target
    g = v.base
    bm = phi.base_map
    shapes = []
    offsets = [0]
    for x in range(g.n_objects):
        ux = w.base.unit[bm.obj_map[x]]
        shapes.append((w.gamma_dims[ux], v.e_dims[x]))
        offsets.append(offsets[-1] + shapes[-1][0] * shapes[-1][1])
    n_unknowns = offsets[-1]

    rows: list[list] = []
    rhs: list = []

    def var(x: int, i: int, j: int) -> int:
        return offsets[x] + i * shapes[x][1] + j

    def add_linear(coeffs: dict[int, object], value) -> None:
        row = [0] * n_unknowns
        for k, c in coeffs.items():
            row[k] = c
        rows.append(row)
        rhs.append(value)

    for x in range(g.n_objects):
        ux = w.base.unit[bm.obj_map[x]]
        rcount, ccount = shapes[x]
        for mat, target_mat in ((w.s_maps[ux], phi.obj_maps[x]), (w.t_maps[ux], psi.obj_maps[x])):
            for i in range(mat.rows):
                for j in range(ccount):
                    coeffs = {var(x, k, j): mat.data[i][k] for k in range(rcount) if mat.data[i][k]}
                    add_linear(coeffs, target_mat.data[i][j])
    for a in range(g.n_arrows):
        fa = bm.arr_map[a]
        x, y = g.src[a], g.tgt[a]
        ux = w.base.unit[bm.obj_map[x]]
        uy = w.base.unit[bm.obj_map[y]]
        l1, l2 = w.mult_blocks(fa, ux)
        r1, r2 = w.mult_blocks(uy, fa)
        lconst = l1 * psi.arr_maps[a]
        rconst = r2 * phi.arr_maps[a]
        sv = v.s_maps[a]
        tv = v.t_maps[a]
        for i in range(lconst.rows):
            for j in range(v.gamma_dims[a]):
                coeffs: dict[int, object] = {}
                for k in range(shapes[x][0]):
                    if l2.data[i][k]:
                        for l in range(shapes[x][1]):
                            if sv.data[l][j]:
                                key = var(x, k, l)
                                coeffs[key] = coeffs.get(key, 0) + l2.data[i][k] * sv.data[l][j]
                for k in range(shapes[y][0]):
                    if r1.data[i][k]:
                        for l in range(shapes[y][1]):
                            if tv.data[l][j]:
                                key = var(y, k, l)
                                coeffs[key] = coeffs.get(key, 0) - r1.data[i][k] * tv.data[l][j]
                add_linear(coeffs, rconst.data[i][j] - lconst.data[i][j])
    system = Matrix.from_rows(rows, cols=n_unknowns) if rows else Matrix.zeros(0, n_unknowns)
    sol = system.solve(rhs)
    if sol is None:
        return None
    alpha = []
    for x in range(g.n_objects):
        rcount, ccount = shapes[x]
        alpha.append(
            Matrix.from_rows(
                [[sol[var(x, i, j)] for j in range(ccount)] for i in range(rcount)], cols=ccount
            )
        )
    iso = VBMapIso(phi=phi, psi=psi, alpha=tuple(alpha))
    check_vbmap_iso(iso).require("find_vbmap_iso: solved data fails the checker")
    return iso


# -- sub-VB-groupoids ---------------------------------------------------------------


def sub_vbgroupoid(
    v: VBGroupoid, obj_spaces: Sequence[Subspace], arr_spaces: Sequence[Subspace]
) -> tuple[VBGroupoid, VBMap]:
    """Present closed sub-bundles as a VB-groupoid in their own coordinates.

    The multiplication on the sub is the semantic product on the sub-fibered
    product, extended by zero along the canonical complement.
    """
    g = v.base
    o_basis = [s.basis for s in obj_spaces]
    a_basis = [s.basis for s in arr_spaces]
    e_dims = tuple(b.cols for b in o_basis)
    gdims = tuple(b.cols for b in a_basis)

    def coords(basis: Matrix, m: Matrix, what: str) -> Matrix:
        c = basis.solve_matrix(m)
        if c is None:
            raise InvalidStructureError(f"sub_vbgroupoid: {what} leaves the subspace", Report())
        return c

    s_maps = tuple(
        coords(o_basis[g.src[a]], v.s_maps[a] * a_basis[a], f"s at {a}") for a in range(g.n_arrows)
    )
    t_maps = tuple(
        coords(o_basis[g.tgt[a]], v.t_maps[a] * a_basis[a], f"t at {a}") for a in range(g.n_arrows)
    )
    u_maps = tuple(
        coords(a_basis[g.unit[x]], v.u_maps[x] * o_basis[x], f"u at {x}") for x in range(g.n_objects)
    )
    m_maps = {}
    for g1, g2 in g.pairs:
        g12 = g.compose(g1, g2)
        sub_fib = Matrix.hstack([s_maps[g1], -t_maps[g2]]).kernel()
        d1 = gdims[g1]
        a = a_basis[g1] * sub_fib.take_rows(range(d1))
        b = a_basis[g2] * sub_fib.take_rows(range(d1, sub_fib.rows))
        prod = coords(a_basis[g12], v.mult_of(g1, g2, a, b), f"m at {(g1, g2)}")
        comp = complement_space(Subspace.from_spanning(sub_fib))
        basis_full = Matrix.hstack([sub_fib, comp.basis])
        if not basis_full.is_invertible:
            raise InvalidStructureError("sub_vbgroupoid: fib complement degenerate", Report())
        ext = Matrix.hstack([prod, Matrix.zeros(prod.rows, comp.dim)])
        m_maps[(g1, g2)] = ext * basis_full.inverse()
    out = VBGroupoid(
        base=g, e_dims=e_dims, gamma_dims=gdims, s_maps=s_maps, t_maps=t_maps, u_maps=u_maps, m_maps=m_maps
    )
    check_vbgroupoid(out).require("sub_vbgroupoid: output invalid")
    incl = VBMap(
        source=out,
        target=v,
        base_map=identity_map(g),
        obj_maps=tuple(o_basis),
        arr_maps=tuple(a_basis),
    )
    check_vbmap(incl).require("sub_vbgroupoid: inclusion invalid")
    return out, incl


# -- arrow VB-groupoid ---------------------------------------------------------------


@dataclass(frozen=True)
class ArrowVB:
    vb: VBGroupoid
    sigma: VBMap
    tau: VBMap
    mu: VBMap
    universal_iso: VBMapIso


def arrow_vb(v: VBGroupoid) -> ArrowVB:
    """The VB-groupoid of squares of v, over the same base.

    Objects are vertical arrows (core (+) unit coordinates); the arrow fiber
    over g is C_{tgt g} (+) Gamma_g (+) C_{src g}.  sigma / tau evaluate a
    square at its source / target vertical arrow; they are isomorphic through
    the identity object map and this isomorphism is universal.
    """
    g = v.base
    cd = core(v)
    cdim = cd.dims
    e_dims = tuple(cdim[x] + v.e_dims[x] for x in range(g.n_objects))
    gdims = tuple(cdim[g.tgt[a]] + v.gamma_dims[a] + cdim[g.src[a]] for a in range(g.n_arrows))
    s_maps = []
    t_maps = []
    for a in range(g.n_arrows):
        ct, cs = cdim[g.tgt[a]], cdim[g.src[a]]
        d = v.gamma_dims[a]
        es, et = v.e_dims[g.src[a]], v.e_dims[g.tgt[a]]
        s_maps.append(
            Matrix.block(
                [
                    [Matrix.zeros(cs, ct), Matrix.zeros(cs, d), Matrix.identity(cs)],
                    [Matrix.zeros(es, ct), v.s_maps[a], Matrix.zeros(es, cs)],
                ]
            )
        )
        t_maps.append(
            Matrix.block(
                [
                    [Matrix.identity(ct), Matrix.zeros(ct, d), Matrix.zeros(ct, cs)],
                    [Matrix.zeros(et, ct), v.t_maps[a], Matrix.zeros(et, cs)],
                ]
            )
        )
    u_maps = []
    for x in range(g.n_objects):
        c, e = cdim[x], v.e_dims[x]
        u_maps.append(
            Matrix.block(
                [
                    [Matrix.identity(c), Matrix.zeros(c, e)],
                    [Matrix.zeros(v.gamma_dims[g.unit[x]], c), v.u_maps[x]],
                    [Matrix.identity(c), Matrix.zeros(c, e)],
                ]
            )
        )
    m_maps = {}
    for g1, g2 in g.pairs:
        ct1, cs1 = cdim[g.tgt[g1]], cdim[g.src[g1]]
        ct2, cs2 = cdim[g.tgt[g2]], cdim[g.src[g2]]
        d1, d2 = v.gamma_dims[g1], v.gamma_dims[g2]
        m1, m2 = v.mult_blocks(g1, g2)
        dm = m1.rows
        m_maps[(g1, g2)] = Matrix.block(
            [
                [
                    Matrix.identity(ct1),
                    Matrix.zeros(ct1, d1),
                    Matrix.zeros(ct1, cs1),
                    Matrix.zeros(ct1, ct2),
                    Matrix.zeros(ct1, d2),
                    Matrix.zeros(ct1, cs2),
                ],
                [Matrix.zeros(dm, ct1), m1, Matrix.zeros(dm, cs1), Matrix.zeros(dm, ct2), m2, Matrix.zeros(dm, cs2)],
                [
                    Matrix.zeros(cs2, ct1),
                    Matrix.zeros(cs2, d1),
                    Matrix.zeros(cs2, cs1),
                    Matrix.zeros(cs2, ct2),
                    Matrix.zeros(cs2, d2),
                    Matrix.identity(cs2),
                ],
            ]
        )
    vb = VBGroupoid(
        base=g,
        e_dims=e_dims,
        gamma_dims=gdims,
        s_maps=tuple(s_maps),
        t_maps=tuple(t_maps),
        u_maps=tuple(u_maps),
        m_maps=m_maps,
    )
    check_vbgroupoid(vb).require("arrow_vb: output invalid")
    # core of the squares object identifies with C (+) C -> C (+) E, (c',c) -> (c', anchor c)
    cd_i = core(vb)
    for x in range(g.n_objects):
        c, e = cdim[x], v.e_dims[x]
        inj = Matrix.block(
            [
                [Matrix.identity(c), Matrix.zeros(c, c)],
                [Matrix.zeros(v.gamma_dims[g.unit[x]], c), cd.basis[x]],
                [Matrix.zeros(c, c), Matrix.zeros(c, c)],
            ]
        )
        if Subspace.from_spanning(cd_i.basis[x]) != Subspace.from_spanning(inj):
            raise InvalidStructureError(f"arrow_vb: core mismatch at object {x}", Report())
        expected = Matrix.block(
            [
                [Matrix.identity(c), Matrix.zeros(c, c)],
                [Matrix.zeros(e, c), cd.anchor[x]],
            ]
        )
        ux = g.unit[x]
        if vb.t_maps[ux] * inj != expected:
            raise InvalidStructureError(f"arrow_vb: core anchor mismatch at object {x}", Report())
    sigma = VBMap(
        source=vb,
        target=v,
        base_map=identity_map(g),
        obj_maps=tuple(
            Matrix.hstack([Matrix.zeros(v.e_dims[x], cdim[x]), Matrix.identity(v.e_dims[x])])
            for x in range(g.n_objects)
        ),
        arr_maps=tuple(
            Matrix.hstack(
                [
                    Matrix.zeros(v.gamma_dims[a], cdim[g.tgt[a]]),
                    Matrix.identity(v.gamma_dims[a]),
                    Matrix.zeros(v.gamma_dims[a], cdim[g.src[a]]),
                ]
            )
            for a in range(g.n_arrows)
        ),
    )
    tau_obj = tuple(
        Matrix.hstack([cd.anchor[x], Matrix.identity(v.e_dims[x])]) for x in range(g.n_objects)
    )
    tau_arr = []
    for a in range(g.n_arrows):
        x, y = g.src[a], g.tgt[a]
        ct, cs = cdim[y], cdim[x]
        d = v.gamma_dims[a]
        wprime = Matrix.hstack([cd.basis[y], v.u_maps[y] * v.t_maps[a], Matrix.zeros(v.gamma_dims[g.unit[y]], cs)])
        wsrc = Matrix.hstack([Matrix.zeros(v.gamma_dims[g.unit[x]], ct), v.u_maps[x] * v.s_maps[a], cd.basis[x]])
        vproj = Matrix.hstack([Matrix.zeros(d, ct), Matrix.identity(d), Matrix.zeros(d, cs)])
        first = v.mult_of(g.unit[y], a, wprime, vproj)
        tau_arr.append(v.mult_of(a, g.unit[x], first, v.inverse_matrix(g.unit[x]) * wsrc))
    tau = VBMap(
        source=vb, target=v, base_map=identity_map(g), obj_maps=tau_obj, arr_maps=tuple(tau_arr)
    )
    mu = VBMap(
        source=v,
        target=vb,
        base_map=identity_map(g),
        obj_maps=tuple(
            Matrix.vstack([Matrix.zeros(cdim[x], v.e_dims[x]), Matrix.identity(v.e_dims[x])])
            for x in range(g.n_objects)
        ),
        arr_maps=tuple(
            Matrix.vstack(
                [
                    Matrix.zeros(cdim[g.tgt[a]], v.gamma_dims[a]),
                    Matrix.identity(v.gamma_dims[a]),
                    Matrix.zeros(cdim[g.src[a]], v.gamma_dims[a]),
                ]
            )
            for a in range(g.n_arrows)
        ),
    )
    for name, f in (("sigma", sigma), ("tau", tau), ("mu", mu)):
        check_vbmap(f).require(f"arrow_vb: {name} invalid")
    if compose_vbmap(sigma, mu) != identity_vbmap(v) or compose_vbmap(tau, mu) != identity_vbmap(v):
        raise InvalidStructureError("arrow_vb: sigma mu = tau mu = id fails", Report())
    alpha = tuple(Matrix.hstack([cd.basis[x], v.u_maps[x]]) for x in range(g.n_objects))
    universal = VBMapIso(phi=sigma, psi=tau, alpha=alpha)
    check_vbmap_iso(universal).require("arrow_vb: universal isomorphism invalid")
    return ArrowVB(vb=vb, sigma=sigma, tau=tau, mu=mu, universal_iso=universal)


# -- cleavages as maps over the arrow groupoid -----------------------------------------


@dataclass(frozen=True)
class CleavageMap:
    arrow_data: ArrowGroupoid
    sigma_star: VBGroupoid
    tau_star: VBGroupoid
    rho: VBMap  # sigma* v -> tau* v over the arrow groupoid


def cleavage_to_vbmap(v: VBGroupoid, c: Cleavage) -> CleavageMap:
    """Encode a unital cleavage as the conjugation map sigma* v -> tau* v.

    Over a square (g', h, g) the map sends w over hg to
    Sigma(g', t w) . w . Sigma(g, s w)^{-1}; pulling back along the identity
    squares gives the identity, and the cleavage is recovered by evaluating
    at (g, id, id) on unit vectors.
    """
    check_cleavage(v, c).require("cleavage_to_vbmap: invalid cleavage")
    g = v.base
    ag = arrow_groupoid(g)
    sigma_star, _ = base_change(ag.sigma, v)
    tau_star, _ = base_change(ag.tau, v)
    obj_maps = tuple(v.t_maps[a] * c.sigma[a] for a in range(g.n_arrows))
    arr_maps = []
    for (gp, h, gg) in ag.triples:
        top = g.compose(h, gg)
        first = v.mult_of(gp, top, c.sigma[gp] * v.t_maps[top], Matrix.identity(v.gamma_dims[top]))
        inv_l = v.inverse_matrix(gg) * (c.sigma[gg] * v.s_maps[top])
        arr_maps.append(v.mult_of(g.compose(gp, g.compose(h, gg)), g.inv[gg], first, inv_l))
    rho = VBMap(
        source=sigma_star,
        target=tau_star,
        base_map=identity_map(ag.gi),
        obj_maps=obj_maps,
        arr_maps=tuple(arr_maps),
    )
    check_vbmap(rho).require("cleavage_to_vbmap: rho invalid")
    # mu* rho = id and the inverse correspondence recovers the cleavage
    for a in range(g.n_arrows):
        k = ag.mu.arr_map[a]
        if rho.arr_maps[k] != Matrix.identity(v.gamma_dims[a]):
            raise InvalidStructureError(f"cleavage_to_vbmap: mu* rho != id at arrow {a}", Report())
    tindex = {t: i for i, t in enumerate(ag.triples)}
    for a in range(g.n_arrows):
        x = g.src[a]
        k = tindex[(a, g.unit[x], g.unit[x])]
        if rho.arr_maps[k] * v.u_maps[x] != c.sigma[a]:
            raise InvalidStructureError(f"cleavage_to_vbmap: recovery fails at arrow {a}", Report())
    return CleavageMap(arrow_data=ag, sigma_star=sigma_star, tau_star=tau_star, rho=rho)


# -- quasi-inverses and stable decomposition -------------------------------------------


@dataclass(frozen=True)
class _Factorization:
    path: VBGroupoid  # P = source x_target (squares of target)
    incl: VBMap  # source -> P, an equivalence
    proj: VBMap  # P -> source, retraction of incl
    fib: VBMap  # P -> target, the fibration factor
    h0: tuple[Subspace, ...]
    h1: tuple[Subspace, ...]
    k0: tuple[Subspace, ...]
    k1: tuple[Subspace, ...]
    section: VBMap  # target -> P, inverse of fib on the complement H


def _canonical_factorization(f: VBMap) -> _Factorization:
    v1, v2 = f.source, f.target
    g = v1.base
    cd2 = core(v2)
    c2 = cd2.dims
    e_dims = tuple(v1.e_dims[x] + c2[x] for x in range(g.n_objects))
    gdims = tuple(v1.gamma_dims[a] + c2[g.tgt[a]] + c2[g.src[a]] for a in range(g.n_arrows))
    s_maps = []
    t_maps = []
    for a in range(g.n_arrows):
        x, y = g.src[a], g.tgt[a]
        d = v1.gamma_dims[a]
        s_maps.append(
            Matrix.block(
                [
                    [v1.s_maps[a], Matrix.zeros(v1.e_dims[x], c2[y]), Matrix.zeros(v1.e_dims[x], c2[x])],
                    [Matrix.zeros(c2[x], d), Matrix.zeros(c2[x], c2[y]), Matrix.identity(c2[x])],
                ]
            )
        )
        t_maps.append(
            Matrix.block(
                [
                    [v1.t_maps[a], Matrix.zeros(v1.e_dims[y], c2[y]), Matrix.zeros(v1.e_dims[y], c2[x])],
                    [Matrix.zeros(c2[y], d), Matrix.identity(c2[y]), Matrix.zeros(c2[y], c2[x])],
                ]
            )
        )
    u_maps = []
    for x in range(g.n_objects):
        u_maps.append(
            Matrix.block(
                [
                    [v1.u_maps[x], Matrix.zeros(v1.gamma_dims[g.unit[x]], c2[x])],
                    [Matrix.zeros(c2[x], v1.e_dims[x]), Matrix.identity(c2[x])],
                    [Matrix.zeros(c2[x], v1.e_dims[x]), Matrix.identity(c2[x])],
                ]
            )
        )
    m_maps = {}
    for g1, g2 in g.pairs:
        m1, m2 = v1.mult_blocks(g1, g2)
        ct = c2[g.tgt[g1]]
        cm = c2[g.src[g1]]
        ct2 = c2[g.tgt[g2]]
        cs = c2[g.src[g2]]
        dm = m1.rows
        d1, d2 = v1.gamma_dims[g1], v1.gamma_dims[g2]
        m_maps[(g1, g2)] = Matrix.block(
            [
                [m1, Matrix.zeros(dm, ct), Matrix.zeros(dm, cm), m2, Matrix.zeros(dm, ct2), Matrix.zeros(dm, cs)],
                [
                    Matrix.zeros(ct, d1),
                    Matrix.identity(ct),
                    Matrix.zeros(ct, cm),
                    Matrix.zeros(ct, d2),
                    Matrix.zeros(ct, ct2),
                    Matrix.zeros(ct, cs),
                ],
                [
                    Matrix.zeros(cs, d1),
                    Matrix.zeros(cs, ct),
                    Matrix.zeros(cs, cm),
                    Matrix.zeros(cs, d2),
                    Matrix.zeros(cs, ct2),
                    Matrix.identity(cs),
                ],
            ]
        )
    path = VBGroupoid(
        base=g,
        e_dims=e_dims,
        gamma_dims=gdims,
        s_maps=tuple(s_maps),
        t_maps=tuple(t_maps),
        u_maps=tuple(u_maps),
        m_maps=m_maps,
    )
    check_vbgroupoid(path).require("canonical factorization: path object invalid")
    incl = VBMap(
        source=v1,
        target=path,
        base_map=identity_map(g),
        obj_maps=tuple(
            Matrix.vstack([Matrix.identity(v1.e_dims[x]), Matrix.zeros(c2[x], v1.e_dims[x])])
            for x in range(g.n_objects)
        ),
        arr_maps=tuple(
            Matrix.vstack(
                [
                    Matrix.identity(v1.gamma_dims[a]),
                    Matrix.zeros(c2[g.tgt[a]] + c2[g.src[a]], v1.gamma_dims[a]),
                ]
            )
            for a in range(g.n_arrows)
        ),
    )
    proj = VBMap(
        source=path,
        target=v1,
        base_map=identity_map(g),
        obj_maps=tuple(
            Matrix.hstack([Matrix.identity(v1.e_dims[x]), Matrix.zeros(v1.e_dims[x], c2[x])])
            for x in range(g.n_objects)
        ),
        arr_maps=tuple(
            Matrix.hstack(
                [
                    Matrix.identity(v1.gamma_dims[a]),
                    Matrix.zeros(v1.gamma_dims[a], c2[g.tgt[a]] + c2[g.src[a]]),
                ]
            )
            for a in range(g.n_arrows)
        ),
    )
    fib_obj = tuple(
        Matrix.hstack([f.obj_maps[x], cd2.anchor[x]]) for x in range(g.n_objects)
    )
    fib_arr = []
    for a in range(g.n_arrows):
        x, y = g.src[a], g.tgt[a]
        d = v1.gamma_dims[a]
        phi_a = f.arr_maps[a]
        a_mat = Matrix.hstack(
            [v2.u_maps[y] * v2.t_maps[a] * phi_a, cd2.basis[y], Matrix.zeros(v2.gamma_dims[g.unit[y]], c2[x])]
        )
        b_mat = Matrix.hstack(
            [v2.u_maps[x] * v2.s_maps[a] * phi_a, Matrix.zeros(v2.gamma_dims[g.unit[x]], c2[y]), cd2.basis[x]]
        )
        phi_proj = Matrix.hstack([phi_a, Matrix.zeros(v2.gamma_dims[a], c2[y] + c2[x])])
        first = v2.mult_of(g.unit[y], a, a_mat, phi_proj)
        fib_arr.append(v2.mult_of(a, g.unit[x], first, v2.inverse_matrix(g.unit[x]) * b_mat))
    fib = VBMap(
        source=path, target=v2, base_map=identity_map(g), obj_maps=fib_obj, arr_maps=tuple(fib_arr)
    )
    for name, m in (("incl", incl), ("proj", proj), ("fib", fib)):
        check_vbmap(m).require(f"canonical factorization: {name} invalid")
    if compose_vbmap(fib, incl) != f:
        raise InvalidStructureError("canonical factorization: fib incl != f", Report())
    k0 = tuple(kernel_space(fib.obj_maps[x]) for x in range(g.n_objects))
    k1 = tuple(kernel_space(fib.arr_maps[a]) for a in range(g.n_arrows))
    for x in range(g.n_objects):
        if fib.obj_maps[x].rank() != v2.e_dims[x]:
            raise NotVBMoritaError(f"fibration factor not surjective on objects at {x}")
    for a in range(g.n_arrows):
        if fib.arr_maps[a].rank() != v2.gamma_dims[a]:
            raise NotVBMoritaError(f"fibration factor not surjective on arrows at {a}")
    h0 = tuple(complement_space(k0[x]) for x in range(g.n_objects))
    h1 = []
    for a in range(g.n_arrows):
        x, y = g.src[a], g.tgt[a]
        h1.append(
            intersection_spaces(
                preimage_space(path.s_maps[a], h0[x]), preimage_space(path.t_maps[a], h0[y])
            )
        )
    sec_obj = []
    for x in range(g.n_objects):
        t0 = fib.obj_maps[x] * h0[x].basis
        if not t0.is_invertible:
            raise NotVBMoritaError(f"complement not transverse on objects at {x}")
        sec_obj.append(h0[x].basis * t0.inverse())
    sec_arr = []
    for a in range(g.n_arrows):
        t1 = fib.arr_maps[a] * h1[a].basis
        if not t1.is_invertible:
            raise NotVBMoritaError(f"complement not transverse on arrows at {a}")
        sec_arr.append(h1[a].basis * t1.inverse())
    section = VBMap(
        source=v2,
        target=path,
        base_map=identity_map(g),
        obj_maps=tuple(sec_obj),
        arr_maps=tuple(sec_arr),
    )
    check_vbmap(section).require("canonical factorization: section invalid")
    return _Factorization(
        path=path, incl=incl, proj=proj, fib=fib, h0=tuple(h0), h1=tuple(h1), k0=k0, k1=k1, section=section
    )


@dataclass(frozen=True)
class QuasiInverse:
    psi: VBMap
    iso_source: VBMapIso  # psi o phi => id on the source
    iso_target: VBMapIso  # phi o psi => id on the target


def quasi_inverse(f: VBMap) -> QuasiInverse:
    """A quasi-inverse of an identity-base VB-Morita map with checked isomorphisms."""
    if f.base_map != identity_map(f.source.base):
        raise ValueError("quasi_inverse: base map must be the identity")
    cert = is_vb_morita(f)
    if not cert.ok:
        raise NotVBMoritaError("quasi_inverse: map is not VB-Morita")
    if f.is_invertible:
        psi = inverse_vbmap(f)
        return QuasiInverse(
            psi=psi,
            iso_source=trivial_iso(identity_vbmap(f.source)),
            iso_target=trivial_iso(identity_vbmap(f.target)),
        )
    fact = _canonical_factorization(f)
    psi = compose_vbmap(fact.proj, fact.section)
    check_vbmap(psi).require("quasi_inverse: candidate invalid")
    iso1 = find_vbmap_iso(compose_vbmap(psi, f), identity_vbmap(f.source))
    iso2 = find_vbmap_iso(compose_vbmap(f, psi), identity_vbmap(f.target))
    if iso1 is None or iso2 is None:
        raise NotVBMoritaError("quasi_inverse: isomorphism solve failed (theorem violation)")
    return QuasiInverse(psi=psi, iso_source=iso1, iso_target=iso2)


@dataclass(frozen=True)
class StableDecomposition:
    omega: VBGroupoid  # acyclic, added on the target side
    omega_prime: VBGroupoid  # acyclic, added on the source side
    iso: VBMap  # invertible: source (+) omega_prime -> target (+) omega


def stable_decompose(f: VBMap) -> StableDecomposition:
    """Realize a VB-Morita map as an isomorphism after acyclic padding."""
    if f.base_map != identity_map(f.source.base):
        raise ValueError("stable_decompose: base map must be the identity")
    if not is_vb_morita(f).ok:
        raise NotVBMoritaError("stable_decompose: map is not VB-Morita")
    g = f.source.base
    if f.is_invertible:
        z = zero_vb(g)
        return StableDecomposition(omega=z, omega_prime=z, iso=f)
    fact = _canonical_factorization(f)
    omega, _ = sub_vbgroupoid(fact.path, list(fact.k0), list(fact.k1))
    kp0 = tuple(kernel_space(fact.proj.obj_maps[x]) for x in range(g.n_objects))
    kp1 = tuple(kernel_space(fact.proj.arr_maps[a]) for a in range(g.n_arrows))
    omega_prime, _ = sub_vbgroupoid(fact.path, list(kp0), list(kp1))
    if not is_acyclic(omega) or not is_acyclic(omega_prime):
        raise NotVBMoritaError("stable_decompose: kernel not acyclic (theorem violation)")
    f1 = VBMap(
        source=direct_sum_vb(f.source, omega_prime),
        target=fact.path,
        base_map=identity_map(g),
        obj_maps=tuple(
            Matrix.hstack([fact.incl.obj_maps[x], kp0[x].basis]) for x in range(g.n_objects)
        ),
        arr_maps=tuple(
            Matrix.hstack([fact.incl.arr_maps[a], kp1[a].basis]) for a in range(g.n_arrows)
        ),
    )
    f2 = VBMap(
        source=direct_sum_vb(f.target, omega),
        target=fact.path,
        base_map=identity_map(g),
        obj_maps=tuple(
            Matrix.hstack([fact.section.obj_maps[x], fact.k0[x].basis]) for x in range(g.n_objects)
        ),
        arr_maps=tuple(
            Matrix.hstack([fact.section.arr_maps[a], fact.k1[a].basis]) for a in range(g.n_arrows)
        ),
    )
    for name, m in (("f1", f1), ("f2", f2)):
        check_vbmap(m).require(f"stable_decompose: {name} invalid")
        if not m.is_invertible:
            raise NotVBMoritaError(f"stable_decompose: {name} not invertible")
    iso = compose_vbmap(inverse_vbmap(f2), f1)
    check_vbmap(iso).require("stable_decompose: composite invalid")
    return StableDecomposition(omega=omega, omega_prime=omega_prime, iso=iso)
