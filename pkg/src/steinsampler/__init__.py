"""steinsampler: train parametric stochastic samplers (chiefly Langevin
dynamics with learnable per-step step sizes) to draw from unnormalized target
densities, by projecting Stein variational gradients onto the sampler
parameters."""

__version__ = "0.1.0"

from .amortize import (AffineSampler, SamplerModel, TrainConfig, TrainResult, train,
                       update_chain, update_full, update_linearized)
from .baselines import (COSINE, IDENTITY, SQUARE, ClassifyResult, ExactMixtureSource,
                        GridSearchResult, LangevinSource, MomentSpec, PowerDecaySchedule,
                        classify_eval, exact_moments, exact_moments_gmm, exact_moments_rbm,
                        grid_search_baseline, moment_mse, mse_table, power_decay_step,
                        rbm_mixture_components)
from .kernels import kernel_matrix, median_bandwidth, rbf_eval, rbf_grad_first
from .ksd import (KsdEstimate, amortized_ksd_update, kappa_grad_first, kappa_matrix,
                  kappa_p, ksd_grad_particles, ksd_u_statistic)
from .langevin import (ExecutionTape, LangevinSampler, SeedBundle, backprop,
                       draw_seed_bundle, forward, param_grad)
from .svgd import stein_gradient, stein_gradient_entropy, svgd_run
from .targets import (BayesLogReg, FixedTargetFamily, GaussBernoulliRBM,
                      GaussianMixture, GMMFamily, LogRegFamily, RBMFamily,
                      TargetDensity, TemperedTarget, draw_family_params,
                      gaussian_target)
from .util import DivergenceError

__all__ = [
    "__version__",
    "AffineSampler", "SamplerModel", "TrainConfig", "TrainResult", "train",
    "update_chain", "update_full", "update_linearized",
    "COSINE", "IDENTITY", "SQUARE", "ClassifyResult", "ExactMixtureSource",
    "GridSearchResult", "LangevinSource", "MomentSpec", "PowerDecaySchedule",
    "classify_eval", "exact_moments", "exact_moments_gmm", "exact_moments_rbm",
    "grid_search_baseline", "moment_mse", "mse_table", "power_decay_step",
    "rbm_mixture_components",
    "kernel_matrix", "median_bandwidth", "rbf_eval", "rbf_grad_first",
    "KsdEstimate", "amortized_ksd_update", "kappa_grad_first", "kappa_matrix",
    "kappa_p", "ksd_grad_particles", "ksd_u_statistic",
    "ExecutionTape", "LangevinSampler", "SeedBundle", "backprop",
    "draw_seed_bundle", "forward", "param_grad",
    "stein_gradient", "stein_gradient_entropy", "svgd_run",
    "BayesLogReg", "FixedTargetFamily", "GaussBernoulliRBM", "GaussianMixture",
    "GMMFamily", "LogRegFamily", "RBMFamily", "TargetDensity", "TemperedTarget",
    "draw_family_params", "gaussian_target",
    "DivergenceError",
]
