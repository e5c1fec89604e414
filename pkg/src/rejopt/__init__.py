"""Reject-option classification by l1-penalized risk minimization.

Fits linear discriminants over a finite dictionary with the generalized
hinge surrogate and a lasso-type penalty, classifies with a third "reject"
outcome, and ships an exact verification harness for the supporting theory
on finite-support distributions.
"""

from .losses import (
    CostModel,
    bayes_score,
    calibration_check,
    conditional_phi_risk,
    phi_d,
    phi_d_subdifferential,
    reject_loss,
)
from .model import (
    ClippedAffine,
    Coefficients,
    Dictionary,
    PointIndicator,
    RejectDecision,
    SignStump,
    Tabulated,
    classify,
    evaluate,
    l0_count,
    l1_norm,
)
from .risk import (
    Dataset,
    FiniteDistribution,
    RiskReport,
    bayes_phi_risk,
    bayes_reject_risk,
    empirical_phi_risk,
    empirical_reject_risk,
    excess_risks,
    population_phi_risk,
    population_reject_risk,
)
from .solver import (
    CapExceededError,
    SolveConfig,
    SolveResult,
    basic_inequality_check,
    lp_oracle,
    penalized_objective,
    solve,
    solve_on_support,
)
from .theory import (
    CoherenceReport,
    MarginParams,
    MeasureMu,
    TuningReport,
    coherence,
    concentration_tail,
    condition1_check,
    margin_constants,
    measure_mu,
    oracle_criterion,
    oracle_inequality_sides,
    oracle_search,
    rate_exponent,
    recommended_rn,
    rhat_lower_bound,
    rhat_mean_bound,
    verify_margin_condition,
)
from .experiments import (
    DictionarySpec,
    DistributionSpec,
    ExperimentRecord,
    ScenarioConfig,
    builtin_scenarios,
    cross_validate_rn,
    run_concentration_experiment,
    run_oracle_experiment,
    sample_dataset,
    synth_distribution,
)
from .reporting import emit_report, parse_records

__version__ = "0.1.0"

__all__ = [
    "CostModel",
    "bayes_score",
    "calibration_check",
    "conditional_phi_risk",
    "phi_d",
    "phi_d_subdifferential",
    "reject_loss",
    "ClippedAffine",
    "Coefficients",
    "Dictionary",
    "PointIndicator",
    "RejectDecision",
    "SignStump",
    "Tabulated",
    "classify",
    "evaluate",
    "l0_count",
    "l1_norm",
    "Dataset",
    "FiniteDistribution",
    "RiskReport",
    "bayes_phi_risk",
    "bayes_reject_risk",
    "empirical_phi_risk",
    "empirical_reject_risk",
    "excess_risks",
    "population_phi_risk",
    "population_reject_risk",
    "CapExceededError",
    "SolveConfig",
    "SolveResult",
    "basic_inequality_check",
    "lp_oracle",
    "penalized_objective",
    "solve",
    "solve_on_support",
    "CoherenceReport",
    "MarginParams",
    "MeasureMu",
    "TuningReport",
    "coherence",
    "concentration_tail",
    "condition1_check",
    "margin_constants",
    "measure_mu",
    "oracle_criterion",
    "oracle_inequality_sides",
    "oracle_search",
    "rate_exponent",
    "recommended_rn",
    "rhat_lower_bound",
    "rhat_mean_bound",
    "verify_margin_condition",
    "DictionarySpec",
    "DistributionSpec",
    "ExperimentRecord",
    "ScenarioConfig",
    "builtin_scenarios",
    "cross_validate_rn",
    "run_concentration_experiment",
    "run_oracle_experiment",
    "sample_dataset",
    "synth_distribution",
    "emit_report",
    "parse_records",
]
