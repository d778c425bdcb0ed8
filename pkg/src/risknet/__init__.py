"""Linear risk sharing on networks: sharing matrices, Sinkhorn scaling,
convex-order checks, closed-form variance laws and seeded simulation."""

from .analytics import (
    CovarianceModel,
    LambdaQuadratic,
    covariance_transform,
    equicorr_variance,
    hub_gap,
    incentive_derivatives,
    inverse_degree_bounds,
    lambda_quadratic_agent,
    lambda_star_spectral,
    lambda_star_trace,
    lambda_star_weighted,
    per_agent_variance_iid,
    rep_agent_variance,
    trace_variance_lambda,
)
from .graphs import (
    Graph,
    GraphSpec,
    equal_neighbor_matrix,
    generate,
    lazy_symmetric_matrix,
    naive_star_matrix,
    random_walk_matrix,
)
from .order import CxReport, DiscreteDist, cx_dominates, empirical_cx_check, hlp_transfer_matrix, majorizes, stop_loss
from .scaling import BvnDecomposition, SinkhornResult, bvn_decompose, has_total_support, reconstruct, sinkhorn
from .sim import LossModel, SimReport, TwoLayerReport, draw_losses, lambda_sweep, post_mix_sweep, simulate_fixed, simulate_two_layer
from .stochmat import (
    SharingMatrix,
    StochClass,
    apply,
    averaging_operator,
    classify,
    mix,
    permutation_matrix,
    row_norms_sq,
)

__version__ = "0.1.0"
