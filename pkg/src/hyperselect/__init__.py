"""Set-valued selection, subspace-ball duality, and block-algebra tools."""

from .norms import (
    DimensionMismatch,
    DiscFamily,
    EmptySet,
    NormSpec,
    OutsideUnitBall,
    SampledSet,
    SubspaceBall,
    UnsupportedNorm,
    dual_kind,
    dyadic_weights,
    eval_dual_norm,
    eval_norm,
    l1,
    l2,
    linf,
    make_probe_sequence,
    min_distance_oracle,
    probe_metric,
    probe_strong,
    probe_strong_star,
    probe_weak,
)
from .hyperspace import (
    WijsmanProbe,
    fatten_intersect,
    hausdorff_distance,
    hits_open_ball,
    make_wijsman_probe,
    pushforward,
    shape_report,
    wijsman_gap,
)
from .hulls import HullProjector, TooManyGenerators, reduce_generators
from .selection import (
    BallRestrictedValue,
    DiscreteDomain,
    FamilyMember,
    HullTarget,
    HullValue,
    IterationStall,
    NetTooCoarse,
    NotACover,
    OpenCover,
    PartitionOfUnity,
    SetValuedMap,
    approx_selection,
    build_partition_of_unity,
    bundled_maps,
    check_lower_continuity,
    dense_selection_family,
    density_audit,
    grid_domain_1d,
    grid_domain_2d,
    jump_map,
    michael_selection,
    restrict_value,
)
from .duality import (
    DualityMismatch,
    Subspace,
    annihilator,
    ball_section_points,
    convergence_gap,
    counterexample_ball,
    counterexample_limit_disc,
    counterexample_subspace,
    exact_support,
    is_subspace_ball,
    profile_from_set,
    quotient_distance,
    quotient_routes,
    reconstruct_ball,
    span_gap,
    subspace_from_spanning,
    support_function,
)
from .algebras import (
    CapExceeded,
    FormMismatch,
    FunctionalSpec,
    MatrixAlgebra,
    SubsetSeq,
    adjoint_modulus,
    algebra_laws_report,
    apply_functional,
    build_fS,
    diagonal_algebra,
    fS_ball_core,
    full_algebra,
    functional_norm_on_fS,
    generate_algebra,
    marechal_pseudometric,
    marechal_support,
    operator_norm,
    rotated_diagonal_algebra,
    sampled_support,
    scalar_algebra,
    trace_norm,
    unit_ball_sample,
)
from .borel import (
    CylinderUnion,
    DepthInsufficient,
    PrunedTree,
    TruncPoint,
    bundled_borel_instances,
    closed_complement_cylinders,
    increasing_hulls,
    pfin_census,
    pi3_reduce,
    sigma2_reduce,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
