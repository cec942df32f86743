"""Cross-fitted ATT estimation for difference-in-differences with missing outcomes."""

from ._mardid import (
    Dataset,
    EstimateResult,
    MardidError,
    SimulationReport,
    estimate,
    fit_logistic,
    fit_ols,
    generate,
    simulate,
)

__all__ = [
    "Dataset",
    "EstimateResult",
    "MardidError",
    "SimulationReport",
    "estimate",
    "fit_logistic",
    "fit_ols",
    "generate",
    "simulate",
]
