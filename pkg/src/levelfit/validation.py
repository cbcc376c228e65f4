"""Fit-quality metrics: KS distance, the two fit conditions, completion errors.

Condition 1 asks the fitted distribution to track the empirical one across
the observable range (0, M]; it is quantified by the Kolmogorov-Smirnov
distance of the partial sums and passes when D < delta (strict).  Condition
2 asks the fitted cumulative mass at the limit to approximate the observed
completion rate; it carries no hard threshold and is reported, not
enforced.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .distributions import NegBinParams, nb_pmf
from .errors import DegenerateCoefficientsError, ParameterError, UnfittableError
from .ingestion import EmpiricalLevelData

__all__ = [
    "ValidationReport",
    "CompletionComparison",
    "ks_distance",
    "check_condition1",
    "completion_check",
    "apply_correction",
    "validation_report",
    "reports_to_json",
]

DEFAULT_CONDITION1_DELTA = 0.05
# Cross-level linear trend between fitted and observed completion; shipped
# as documented defaults for report annotation only, never fitted in here.
DEFAULT_CORRECTION = (1.035, -0.104)


@dataclass(frozen=True)
class CompletionComparison:
    """Observed vs fitted completion rate for one level."""

    observed_completion: float
    fitted_completion: float
    relative_difference: float | None
    absolute_percentage_error: float | None


@dataclass(frozen=True)
class ValidationReport:
    level_id: str
    ks_distance: float
    condition1_pass: bool
    observed_completion: float
    fitted_completion: float
    relative_difference: float | None
    absolute_percentage_error: float | None
    corrected_completion: float | None = None

    def to_json_dict(self) -> dict:
        return {
            "level_id": self.level_id,
            "ks_distance": self.ks_distance,
            "condition1_pass": self.condition1_pass,
            "observed_completion": self.observed_completion,
            "fitted_completion": self.fitted_completion,
            "relative_difference": self.relative_difference,
            "absolute_percentage_error": self.absolute_percentage_error,
            "corrected_completion": self.corrected_completion,
        }


def ks_distance(level: EmpiricalLevelData, params: NegBinParams) -> float:
    """Kolmogorov-Smirnov distance over (0, M].

    D = max over m = 1..M of |sum_{m' <= m} (fhat(m') - f(m'))| with fhat
    normalized by total attempts.  Invariant under rescaling all counts.
    """
    if not level.histogram:
        raise UnfittableError(f"level {level.level_id!r} has an empty histogram")
    ms = np.arange(1, level.move_limit + 1)
    diff = level.frequencies() - nb_pmf(params, ms)
    return float(np.max(np.abs(np.cumsum(diff))))


def check_condition1(d: float, delta: float) -> bool:
    """Condition 1: D strictly below the threshold delta."""
    if not 0.0 <= d <= 1.0:
        raise ParameterError(f"D must lie in [0, 1], got {d!r}")
    if not 0.0 < delta < 1.0:
        raise ParameterError(f"delta must lie in (0, 1), got {delta!r}")
    return d < delta


def completion_check(level: EmpiricalLevelData, params: NegBinParams) -> CompletionComparison:
    """Condition 2 quantities: c = sum_{m=1..M} f(m) against observed c-hat.

    With zero observed completion the error metrics are undefined and come
    back as None.
    """
    ms = np.arange(1, level.move_limit + 1)
    fitted = float(np.sum(nb_pmf(params, ms)))
    observed = level.completion_rate
    if observed > 0:
        rel = (fitted - observed) / observed
        ape = abs(fitted / observed - 1.0)
    else:
        rel = None
        ape = None
    return CompletionComparison(
        observed_completion=observed,
        fitted_completion=fitted,
        relative_difference=rel,
        absolute_percentage_error=ape,
    )


def apply_correction(c: float, coefficients: tuple[float, float]) -> float:
    """Map a fitted completion onto the observed scale.

    The cross-level trend is c ~ alpha * c_obs + beta; inverting gives
    (c - beta) / alpha, clamped to [0, 1].
    """
    alpha, beta = coefficients
    if alpha == 0:
        raise DegenerateCoefficientsError("correction slope alpha must be non-zero")
    return float(min(1.0, max(0.0, (c - beta) / alpha)))


def validation_report(
    level: EmpiricalLevelData,
    params: NegBinParams,
    delta: float = DEFAULT_CONDITION1_DELTA,
    correction: tuple[float, float] | None = None,
) -> ValidationReport:
    """Full per-level report: D, Condition 1, completion comparison, correction."""
    d = ks_distance(level, params)
    comp = completion_check(level, params)
    corrected = (
        apply_correction(comp.fitted_completion, correction) if correction is not None else None
    )
    return ValidationReport(
        level_id=level.level_id,
        ks_distance=d,
        condition1_pass=check_condition1(d, delta),
        observed_completion=comp.observed_completion,
        fitted_completion=comp.fitted_completion,
        relative_difference=comp.relative_difference,
        absolute_percentage_error=comp.absolute_percentage_error,
        corrected_completion=corrected,
    )


def reports_to_json(reports: list[ValidationReport]) -> str:
    return json.dumps([r.to_json_dict() for r in reports], indent=2)
