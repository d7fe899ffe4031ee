"""Locally private goodness-of-fit testing for discrete distributions."""

__version__ = "0.1.0"

from .distributions import (
    FamilySpec,
    ProbVector,
    descending_order,
    distance,
    l1_distance,
    l2_distance,
    make_family,
    normalize,
    sample,
    tail_mass,
)
from .privacy import (
    PrivacyParams,
    PrivateVectorRecord,
    Stage2Record,
    SupportSet,
    c_alpha,
    censor,
    laplace_draw,
    privatize_indicator_vector,
    privatize_stage2,
    privatize_tail_indicator,
    stage2_table,
    tau_of,
    verify_ldp_finite,
)
from .teststats import (
    TestReport,
    critical_values,
    run_test,
    run_test_interactive,
    run_test_noninteractive,
    select_B,
    statistic_D,
    statistic_S,
    statistic_T,
)
from .alternatives import (
    AlternativeSpec,
    mass_shift_alternative,
    paired_signs_alternative,
    random_direction_alternative,
)
from .rates import (
    RateBound,
    corollary_indices,
    lower_bound,
    table1_rate,
    upper_bound,
)
from .harness import (
    ExperimentConfig,
    IndeterminateRadiusError,
    RiskEstimate,
    SaturatedRadiusError,
    SeparationResult,
    calibrate_c,
    empirical_separation,
    estimate_risk,
    scaling_sweep,
    wilson_interval,
)

__all__ = [
    "__version__",
    "AlternativeSpec",
    "ExperimentConfig",
    "FamilySpec",
    "IndeterminateRadiusError",
    "PrivacyParams",
    "PrivateVectorRecord",
    "ProbVector",
    "RateBound",
    "RiskEstimate",
    "SaturatedRadiusError",
    "SeparationResult",
    "Stage2Record",
    "SupportSet",
    "TestReport",
    "c_alpha",
    "calibrate_c",
    "censor",
    "corollary_indices",
    "critical_values",
    "descending_order",
    "distance",
    "empirical_separation",
    "estimate_risk",
    "l1_distance",
    "l2_distance",
    "laplace_draw",
    "lower_bound",
    "make_family",
    "mass_shift_alternative",
    "normalize",
    "paired_signs_alternative",
    "privatize_indicator_vector",
    "privatize_stage2",
    "privatize_tail_indicator",
    "random_direction_alternative",
    "run_test",
    "run_test_interactive",
    "run_test_noninteractive",
    "sample",
    "scaling_sweep",
    "select_B",
    "stage2_table",
    "statistic_D",
    "statistic_S",
    "statistic_T",
    "table1_rate",
    "tail_mass",
    "tau_of",
    "upper_bound",
    "verify_ldp_finite",
    "wilson_interval",
]
