"""Discs compatible with almost complex structures, and their analysis.

The package solves the two-point disc problem for continuous almost
complex structures by a Cauchy-Green fixed-point iteration, and provides
the surrounding toolkit: polar disc grids with Wirtinger calculus,
structure families and validation, plurisubharmonicity barriers and
tests, and boundary diagnostics (non-tangential limits, Schwarz bounds,
zero extraction, Blaschke sums, Riesz measures).
"""

from .discgrid import DiscGrid
from .cauchy import (
    SobolevSetting,
    apply_cauchy_green,
    default_setting,
    estimate_cp,
    lp_norm,
    sobolev_norm,
    wirtinger_derivatives,
)
from .structures import (
    AlmostComplexStructure,
    StructureError,
    constant_deficiency_structure,
    deficiency_at,
    deficiency_sup_norm,
    grid_sampled_structure,
    load_structure,
    normalize_at_origin,
    radial_lambda_structure,
    rescale_structure,
    standard_structure,
    translate_structure,
    validate_structure,
)
from .solver import (
    NonconvergenceError,
    PointsTooFarError,
    SolveConfig,
    SolveReport,
    affine_disc,
    outer_solve,
    residual_lp_norm,
    set_default_grid_shape,
    solve_disc_through,
)
from .psh import (
    ScalarFunction,
    check_psh_along_discs,
    chirka_scalar_function,
    cutoff_barrier,
    find_psh_threshold,
    is_subharmonic_on_disc,
    log_pole_barrier,
    loglog_barrier,
    mollify_structure,
    weak_laplacian_test,
)
from .boundary import (
    ConeSpec,
    RayTrace,
    RieszReport,
    blaschke_sum,
    cone_contains,
    extract_zeros,
    nontangential_limit,
    ray_trace,
    riesz_diagnostics,
    schwarz_bound_check,
    truncated_cone_region,
)

__version__ = "0.1.0"
