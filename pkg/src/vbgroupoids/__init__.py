"""Exact computations with VB-groupoids over finite groupoids.

Everything is carried out in exact rational arithmetic: 2-term
representations up to homotopy and their morphisms, the Grothendieck
construction and its inverse, VB-Morita certification, VB-cohomology with its
comparison to linear cohomology, and Cech descent of maps and objects.
"""

from .linalg import (
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
    preimage_space,
    quotient_reps,
    solve_linear,
    subspace_calc,
    sum_spaces,
)
from .groupoid import (
    ArrowGroupoid,
    CechGroupoid,
    FiniteGroupoid,
    GroupoidMap,
    MoritaCertificate,
    NerveStrings,
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
from .ruth import (
    RuthMorphism,
    TwoTermRuth,
    check_ruth,
    check_ruth_morphism,
    compose_ruth_morphisms,
    direct_sum,
    dual_morphism,
    dual_ruth,
    gauge_transform,
    identity_morphism,
    is_quasi_iso,
    make_ruth,
    pullback_ruth,
    zero_morphism,
    zero_ruth,
)
from .vb import (
    ArrowVB,
    Cleavage,
    NotVBMoritaError,
    QuasiInverse,
    StableDecomposition,
    VBGroupoid,
    VBMap,
    VBMapIso,
    VBMoritaCertificate,
    acyclic_vb,
    arrow_vb,
    base_change,
    check_cleavage,
    check_vbgroupoid,
    check_vbmap,
    check_vbmap_iso,
    choose_cleavage,
    cleavage_to_vbmap,
    compose_vbmap,
    core,
    direct_sum_vb,
    dual_vb,
    dual_vbmap,
    find_vbmap_iso,
    grothendieck,
    grothendieck_map,
    identity_vbmap,
    inverse_vbmap,
    is_acyclic,
    is_vb_morita,
    quasi_inverse,
    split,
    split_map,
    stable_decompose,
    sub_vbgroupoid,
    twist,
    zero_projection,
    zero_vb,
)
from .cohomology import (
    HvbHlinReport,
    InducedMapReport,
    LinComplex,
    RuthComplex,
    ShiftReport,
    VBSubcomplex,
    differentiable_complex,
    hvb_equals_hlin,
    induced_map_vb,
    lin_complex,
    ruth_complex,
    ruth_vs_dual_vb,
    vb_subcomplex,
)
from .descent import (
    DescentError,
    DescentProblem,
    DescentResult,
    PartitionOfUnity,
    descend_map,
    descend_object,
    descend_pipeline,
    flatten_cleavage,
    make_descent_problem,
    make_invertible,
    min_index_partition,
    symmetrize_cleavage,
    uniform_partition,
)
from .report import InvalidStructureError, Report, Violation

__version__ = "0.1.0"
