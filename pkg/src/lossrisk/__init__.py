"""Loss-only risk statistics on finite scenario data.

The package evaluates regulator-style statistics that charge only the loss
part of the data, certifies their defining axioms by seeded property
checks, and realizes their dual side numerically: minimal penalties by
boxed conjugation, reconstruction from penalty tables, and the
zero-or-infinite coherence dichotomy.
"""

from lossrisk.axioms import AxiomId, AxiomReport, SamplerSpec, check_axiom, run_suite
from lossrisk.core import (
    CashAmount,
    ExtendedValue,
    PortfolioSample,
    WeightVector,
    cash_vector,
    leq,
    loss_part,
)
from lossrisk.duality import (
    ConjugationParams,
    DualityReport,
    PenaltyGrid,
    alpha_min,
    check_normalization_condition,
    classify_coherence,
    conjugate_on_grid,
    dual_reconstruct,
    dual_reconstruct_detail,
    dual_round_trip_report,
    weight_grid,
)
from lossrisk.statistics import (
    RiskStatistic,
    TransformRecord,
    cash_additive_lift,
    check_cash_loss_additivity,
    entropic_loss,
    gain_leaking,
    inverted_loss,
    penalized_statistic,
    regulator_version,
    sample_loss_shifts,
    weighted_loss,
    worst_scenario,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "PortfolioSample",
    "WeightVector",
    "ExtendedValue",
    "CashAmount",
    "loss_part",
    "cash_vector",
    "leq",
    "RiskStatistic",
    "TransformRecord",
    "weighted_loss",
    "worst_scenario",
    "penalized_statistic",
    "entropic_loss",
    "regulator_version",
    "cash_additive_lift",
    "check_cash_loss_additivity",
    "sample_loss_shifts",
    "gain_leaking",
    "inverted_loss",
    "PenaltyGrid",
    "ConjugationParams",
    "DualityReport",
    "weight_grid",
    "alpha_min",
    "conjugate_on_grid",
    "dual_reconstruct",
    "dual_reconstruct_detail",
    "dual_round_trip_report",
    "check_normalization_condition",
    "classify_coherence",
    "AxiomId",
    "SamplerSpec",
    "AxiomReport",
    "check_axiom",
    "run_suite",
]
