"""Square-root second-order mapping of Gaussian beliefs.

Propagates a Gaussian (mean, covariance square root) through a nonlinear
function using its Jacobian and Hessian, entirely in factored form: the
output covariance factor is assembled by orthogonal triangularization of
a block of square-root columns plus one rank-1 downdate, so it is
symmetric positive semidefinite by construction and loses markedly less
accuracy in low precision than forming the covariance densely.

The fourth-moment term is carried by a symmetric rank-R decomposition of
the scaled fourth-order identity tensor (exact for dimensions 1-3,
fitted by ALS above); a dense full-covariance route provides the
reference oracle; an experiment harness compares both routes across
binary32/binary64.
"""

from ._backend import backend_name, get_backend
from .cpd import (CpdFactors, cpd_als, cpd_analytic, factors_to_doc,
                  load_factors, save_factors, verify_cpd)
from .errors import (AsymmetricInput, DowndateBreaksDefiniteness,
                     FailedInvariant, IntegrationDiverged, MalformedFile,
                     MomentMapError, NoConvergence, NotPositiveDefinite,
                     OriginSingularity, UnsupportedDimension)
from .experiments import (DIFFERENCE_LABELS, ExperimentSpec, PrecisionReport,
                          oracle_suite, run_experiment)
from .linalg import (chol_downdate, cholesky, qr_r, resolve_precision,
                     triangularize_sqrt)
from .maps import (FullGaussian, GaussianSqrt, NoiseSqrt, SecondOrderModel,
                   map_first_order_sqrt, map_second_order_full,
                   map_second_order_sqrt, second_order_mean_correction)
from .models import (PolarModel, VdpConfig, VdpFlowResult, polar_model_at,
                     vdp_flow, vdp_input_sqrt, vdp_model_at)
from .tensors import (contract_hessian_quadratic, gaussian_fourth_central_moment,
                      identity_tensor4, symmetrize)

__version__ = "1.0.0"

__all__ = [
    "__version__",
    # backends
    "backend_name", "get_backend",
    # errors
    "MomentMapError", "NotPositiveDefinite", "AsymmetricInput",
    "DowndateBreaksDefiniteness", "UnsupportedDimension", "NoConvergence",
    "MalformedFile", "FailedInvariant", "OriginSingularity",
    "IntegrationDiverged",
    # linear algebra
    "cholesky", "chol_downdate", "qr_r", "triangularize_sqrt",
    "resolve_precision",
    # tensors
    "identity_tensor4", "symmetrize", "gaussian_fourth_central_moment",
    "contract_hessian_quadratic",
    # factor decompositions
    "CpdFactors", "cpd_analytic", "cpd_als", "verify_cpd",
    "factors_to_doc", "save_factors", "load_factors",
    # moment maps
    "GaussianSqrt", "SecondOrderModel", "NoiseSqrt", "FullGaussian",
    "map_first_order_sqrt", "map_second_order_full",
    "second_order_mean_correction", "map_second_order_sqrt",
    # models
    "PolarModel", "VdpConfig", "VdpFlowResult", "polar_model_at",
    "vdp_flow", "vdp_model_at", "vdp_input_sqrt",
    # experiments
    "ExperimentSpec", "PrecisionReport", "DIFFERENCE_LABELS",
    "run_experiment", "oracle_suite",
]
