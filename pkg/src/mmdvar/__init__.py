"""Unbiased squared MMD and its exactly unbiased finite-sample variance.

Two interchangeable estimation paths produce the same :class:`MmdReport`: a
quadratic matrix path for any kernel and dimension, and an ``O(N log N)``
sorted-accumulator path for univariate data under the Laplacian kernel.
"""

from .api import MEDIAN, PathChoice, estimate, estimate_mmd2, fast_eligible, resolve_kernel, select_path
from .errors import (
    BandwidthUndefinedError,
    ConfigError,
    IngestionError,
    InputError,
    InsufficientSampleError,
    MmdError,
    ReplicateError,
    UnsortedInputError,
    UnsupportedFamilyError,
)
from .exact import (
    EstimationPath,
    KernelMatrixStats,
    KernelSums,
    MmdReport,
    ProjectionVectors,
    SecondOrderMoments,
    empirical_projections,
    matrix_stats,
    mmd2_unbiased,
    mmd_components,
    second_order_moments,
    variance_full,
)
from .fast import (
    AccumulatorSet,
    CrossAccumulatorSet,
    cross_prefix_suffix,
    dump_accumulators,
    mmd2_fast,
    prefix_suffix,
    trissl,
    variance_fast,
)
from .harness import (
    ScenarioConfig,
    SweepResult,
    SweepRow,
    generate_scenario,
    monte_carlo_variance,
    scaling_benchmark,
    shift_sweep,
)
from .kernels import KernelFamily, KernelSpec, Sample, kernel_eval, kernel_matrix, median_heuristic, power_bandwidth

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
