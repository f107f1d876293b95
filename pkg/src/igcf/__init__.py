"""Inverse Gauss curvature flow of spacelike graphs over a hyperbolic cap.

The graph ``{u(x) x}`` over a geodesic cap of the unit hyperboloid in
Minkowski space is evolved through ``phi = log u`` with explicit
finite differences, and every a priori estimate of the flow is turned into
a runtime check.
"""

from .domain import HyperbolicCap, build_cap, verify_constant_curvature
from .symmetric import SingularMatrixError, SymMatrixField, sym2_algebra
from .covariant import Jet, ScalarField, apply_neumann_ghost, cov_gradient, cov_hessian, grad_norm_sq
from .geometry import (
    AdmissibilityError,
    GeometryBundle,
    NonConvex,
    NotSpacelike,
    embedding_oracle,
    gauss_curvature_phi,
    gauss_curvature_u,
    geometry_bundle,
    induced_metric,
    iota_matrix,
    linearization,
    rhs_Q,
    second_fundamental,
    tilt_v,
)
from .monitors import (
    MonitorSeries,
    comparison_check,
    curvature_consistency,
    estimate_report,
    neumann_residual,
    random_ordered_pair,
)
from .flow import (
    FlowConfig,
    FlowError,
    FlowState,
    InitialData,
    adaptive_dt,
    check_admissible,
    make_state,
    rescale_state,
    run_flow,
    step,
)
from .io import RunConfig, parse_config, read_series, write_series

__version__ = "0.1.0"
