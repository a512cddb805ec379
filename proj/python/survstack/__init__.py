"""Stacked conditional survival estimation.

Thin Python wrapper over the C++ core.  The heavy lifting (model fitting,
simplex-constrained weight estimation, IPCW metrics) lives in the compiled
``_survstack`` extension.
"""

from ._survstack import (
    Dataset,
    StackedModel,
    StepSurvivalCurve,
    SurvstackError,
    brier_ipcw,
    brier_uncensored,
    empirical_quantiles,
    event_time_grid,
    fit_stack,
    integrated_brier,
    km_censoring,
    km_event,
    load_stack,
    save_stack,
)

__all__ = [
    "Dataset",
    "StackedModel",
    "StepSurvivalCurve",
    "SurvstackError",
    "brier_ipcw",
    "brier_uncensored",
    "empirical_quantiles",
    "event_time_grid",
    "fit_stack",
    "integrated_brier",
    "km_censoring",
    "km_event",
    "load_stack",
    "save_stack",
]

__version__ = "0.1.0"
