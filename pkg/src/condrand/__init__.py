"""Randomization inference under restricted randomization.

Exact and Monte Carlo tools for conditional randomization tests following
Efron's biased coin design or complete randomization: exact count
distributions, direct sampling from conditional reference sets,
sequentially monitored tests with alpha-spending boundaries, and
randomization-based information fractions.
"""

from .bruteforce import (
    EnumeratedLaw,
    enumerate_law,
    exact_conditional_pvalue,
    exact_covariance,
    exact_statistic_distribution,
    oracle_conditional_pmf,
)
from .covariance import (
    ConditionalCovariance,
    InformationFraction,
    covariance_final,
    covariance_multilook,
    cross_moment_single,
    information_at_look,
    information_fraction,
    interpolate_scores,
    multilook_covariances,
    theta_single,
)
from .design import (
    DesignSpec,
    TreatmentSequence,
    assignment_probability,
    sequence_probability,
    simulate_unconditional,
)
from .distributions import (
    ConditionalKernel,
    ballot_coefficient,
    conditional_pmf,
    pmf_table,
    unconditional_pmf,
)
from .errors import (
    CondrandError,
    DegenerateScoresError,
    InfeasibleError,
    InsufficientAcceptancesError,
    UnderSampleError,
)
from .montecarlo import (
    PValueEstimate,
    estimate_pvalue_conditional,
    estimate_pvalue_rejection,
    estimate_pvalue_stratified,
    k_percentile,
    mc_sample_size,
    mc_sample_size_mse,
    negative_binomial_quantile,
)
from .monitoring import (
    BoundaryResult,
    MonitoringDecision,
    SpendingFunction,
    estimate_boundaries,
    incremental_alpha,
    nonparametric_quantile,
    sequential_decision,
    spend,
)
from .sampling import (
    ConditionalSampler,
    Look,
    LookSchedule,
    MultilookSampler,
    conditional_transition,
    multilook_transition,
    sample_conditional,
    sample_multilook,
)
from .scores import (
    ScoreVector,
    StratifiedData,
    Stratum,
    centered_scores,
    interim_statistic,
    linear_rank_statistic,
    stratified_statistic,
)
from .streams import substream

__version__ = "0.1.0"
