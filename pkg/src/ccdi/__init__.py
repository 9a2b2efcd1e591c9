"""Plug-in estimation of the causal conditional directed information rate and
the UC/CC likelihood-ratio tests built on it."""

from .blocks import AlphabetSpec, BlockCounts, SeriesError, SymbolSeries, count_blocks
from .causality import (
    TestConfig,
    TestResult,
    ccdi_plugin,
    degrees_of_freedom,
    estimate_with_variance,
    loglik_ratio_oracle,
    normality_check,
    run_test,
    sigma2_batch_means,
)
from .chi2 import ChiSquare
from .experiments import rate_dichotomy_study, trajectory, validate_null
from .info import (
    JointPmf,
    conditional_entropy,
    conditional_mutual_information,
    entropy,
    mutual_information,
    relative_entropy,
)
from .markov import (
    MarkovModel,
    StructuralModel,
    benchmark_process,
    exact_ccdi_rate,
    load_model,
    simulate,
    stationary_block_pmf,
)
from .spikes import SpikeTrain, bin_spikes, concat_trials, scan_pairs, shift_series

__version__ = "0.1.0"
