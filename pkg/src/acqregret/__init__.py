"""Global versus multi-started local acquisition optimization for GP-based BO."""

__version__ = "0.1.0"

from .acquisition import (Acquisition, AcquisitionKind, AcquisitionSpec, ZScore, acq_grad,
                          acq_value, z_score)
from .benchmarks import Benchmark, get_benchmark, list_benchmarks, observe
from .bo import BoConfig, History, run_bo
from .direct import Direct, DirectConfig, direct_maximize
from .domain import Domain
from .exceptions import (ConfigError, DomainError, IllConditionedModelError,
                         InvalidKernelError, RegistryError)
from .gp import GpModel, fit_gp, log_marginal_likelihood, make_gp, posterior, posterior_grad
from .kernels import Kernel, KernelFamily, kernel_eval, kernel_grad_x1
from .local_search import (LocalSearchConfig, OptResult, local_maximize, maximize_from_starts,
                           multi_start_maximize, multi_start_prefixes)
from .regret import (BasinStats, ExperimentConfig, RegretRecord, estimate_basins,
                     moving_average, run_regret_experiment, timing_table)

__all__ = [
    "Acquisition", "AcquisitionKind", "AcquisitionSpec", "ZScore", "acq_grad", "acq_value",
    "z_score", "Benchmark", "get_benchmark", "list_benchmarks", "observe", "BoConfig",
    "History", "run_bo", "Direct", "DirectConfig", "direct_maximize", "Domain", "ConfigError",
    "DomainError", "IllConditionedModelError", "InvalidKernelError", "RegistryError",
    "GpModel", "fit_gp", "log_marginal_likelihood", "make_gp", "posterior", "posterior_grad",
    "Kernel", "KernelFamily", "kernel_eval", "kernel_grad_x1", "LocalSearchConfig",
    "OptResult", "local_maximize", "maximize_from_starts", "multi_start_maximize", "multi_start_prefixes",
    "BasinStats", "ExperimentConfig", "RegretRecord", "estimate_basins", "moving_average",
    "run_regret_experiment", "timing_table", "__version__",
]
