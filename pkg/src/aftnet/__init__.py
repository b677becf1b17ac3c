"""Network-penalized Weibull accelerated failure time regression."""

from .evaluation import (MetricsReport, c_index, roc_auc, selection_metrics,
                         selection_roc)
from .exceptions import AFTNetError
from .network import (NetworkPrior, PenaltyConfig, build_laplacian,
                      penalty_value, smooth_penalty_gradient)
from .scale import ScaleFit, estimate_sigma
from .selection import (AFTNetFit, CvReport, LambdaGrid, cv_pl, fit_aftnet,
                        make_lambda_grid)
from .solver import (FitResult, SolutionPath, SolverOptions, fit_path,
                     prox_grad_fit, soft_threshold)
from .survival_model import (ModelParams, SurvivalDataset, gradient,
                             lipschitz_bound, neg_log_likelihood,
                             observed_information, standardized_residuals)
from .synthetic import ScenarioConfig, GroundTruth, simulate_scenario

__version__ = "0.1.0"
