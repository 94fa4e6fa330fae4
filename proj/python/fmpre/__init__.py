"""Finite mixtures of Poisson regressions with multinomial-logit gating.

Thin wrapper over the compiled core; arrays are numpy float64, matrices are
(rows x components) with the gating reference column fixed at zero.
"""

from ._core import (
    FitFailed,
    bic,
    fit,
    fit_all,
    observed_loglik,
    simulate,
    simulation_study,
    sqrt_mse,
)

__all__ = [
    "FitFailed",
    "bic",
    "fit",
    "fit_all",
    "observed_loglik",
    "simulate",
    "simulation_study",
    "sqrt_mse",
]
__version__ = "0.1.0"
