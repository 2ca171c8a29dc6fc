"""Pressure functions, critical exponents, and box-counting dimensions.

The package computes, at desk scale and with certified tails wherever the
generators allow it, three families of quantities and the identities tying
them together:

- thermodynamic pressure P(t) = log sum(length^t) of countable interval
  partitions, its critical exponent s_infinity, and Bowen roots of cylinder
  pressure brackets (`interval_partition`, `pressure`);
- box-counting dimensions of endpoint sets and sphere clouds, and the gap
  exponents sandwiching them (`boxdim`);
- hyperbolic geometry of H^n with its boundary metrics, Poincare series of
  parabolic groups, their critical exponents, and orbit counting
  (`hyperbolic`, `poincare`).

The `presdim` console script (module `cli`) drives everything from INI
configs and emits deterministic CSV/JSON artifacts.
"""

from .interval_partition import (
    BranchMap,
    CylinderWord,
    IntervalPartition,
    PartitionError,
    SeriesVerdict,
    build_partition,
    cylinder_derivative_sums,
    cylinder_words,
    make_branch_map,
    perturb_compactly,
    refine_partition,
    write_intervals_csv,
)
from .pressure import (
    BoundaryClassification,
    CriticalExponentEstimate,
    DistortionBounds,
    PressureSample,
    RootBracket,
    bowen_root,
    bowen_root_cylinder,
    bowen_root_linear,
    classify_s_infinity_behavior,
    distortion_constant,
    find_s_infinity,
    pressure_cylinder_bracket,
    pressure_linear,
    pressure_over_grid,
)
from .boxdim import (
    CoveringCount,
    DimensionEstimate,
    GapExponentEstimate,
    PointCloud,
    covering_count_line,
    covering_count_sphere,
    estimate_box_dimension,
    gap_exponent_bounds,
)
from .hyperbolic import (
    BALL,
    HALF_SPACE,
    BoundaryPoint,
    HyperbolicPoint,
    ParabolicGroupSpec,
    TriangleComparisonReport,
    ball_point,
    base_point,
    boundary_infinity,
    boundary_plane_point,
    boundary_sphere_point,
    bourdon_metric,
    busemann,
    comparison_triangle_check,
    distance,
    gromov_product,
    half_space_point,
    orbit_distance,
    parabolic_orbit,
    point_on_boundary_geodesic,
    spherical_metric,
    to_ball,
    to_half_space,
    translate,
)
from .poincare import (
    CountingFunction,
    DichotomyReport,
    PoincareSample,
    classify_tail,
    counting_exponent,
    critical_exponent,
    poincare_partial,
    verify_dichotomy,
)

__version__ = "1.0.0"
