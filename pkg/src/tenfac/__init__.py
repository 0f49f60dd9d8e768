"""Projected-PCA estimation of Tucker tensor factor models."""

from .errors import BenchmarkError, DomainError, ResourceError
from .estimation import (
    TfmFit, estimate_common_components, estimate_factors, fit, initial_loadings, iterative_loadings,
    projected_loadings, projected_loadings_star, reconstruct,
)
from .evaluation import BenchmarkReport, rolling_validate, run_benchmark
from .metrics import common_mse, loading_distance
from .ranks import RankEstimate, ie_er, pe_er
from .simulation import DgpConfig, PRESETS, SimulatedDataset, generate, simulate
from .tensor import LoadingSet, fold, kron, kron_excluding, linear_index, mode_product, unfold

__version__ = "0.1.0"
