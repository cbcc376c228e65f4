"""Cross-level structure on top of per-level fits.

Three regressions: variance-vs-mean of moves left (through the origin, the
overdispersion screen that motivates a negative binomial in the first
place), log(n) on p over the central cluster (the single-parameter
reparameterization), and fitted-vs-observed completion (the linear
correction).  Plus the cluster taxonomy of fitted parameters.

Note on conventions: the reparameterization formulas take the spread
parameter in the complementary convention theta = (1-p)/p, under which
p = 1/(1+theta).  The distributions module's own scale is p/(1-p); the two
map onto each other by p <-> 1-p.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Sequence

import numpy as np
from scipy import stats as scipy_stats

from .distributions import NegBinParams
from .errors import (
    DegenerateRegressorError,
    InsufficientDataError,
    ParameterError,
    UnfittableError,
)
from .fitting import FitResult
from .ingestion import EmpiricalLevelData

__all__ = [
    "MovesLeftStats",
    "RegressionResult",
    "ClusterLabel",
    "moves_left_stats",
    "mean_variance_regression",
    "loglinear_np_regression",
    "completion_correction_fit",
    "classify_cluster",
    "reparameterize_from_scale",
    "cluster_counts",
    "analytics_summary",
]

HIGH_N_THRESHOLD = 200.0


class ClusterLabel(str, Enum):
    CENTRAL = "central"
    P_BOUNDARY = "p_boundary"
    HIGH_N = "high_n"
    UNCLASSIFIED = "unclassified"


@dataclass(frozen=True)
class MovesLeftStats:
    """Mean and population variance of moves left over successful attempts."""

    level_id: str
    mean_left: float
    var_left: float
    sample_size: int


@dataclass(frozen=True)
class RegressionResult:
    kind: str  # mean_variance | loglinear_np | completion_correction
    coefficients: tuple[float, ...]
    r_squared: float
    p_value: float | None
    sample_size: int


def moves_left_stats(level: EmpiricalLevelData) -> MovesLeftStats:
    """Moves left at the end of successful attempts, from the histogram."""
    if not level.histogram:
        raise UnfittableError(f"level {level.level_id!r} has an empty histogram")
    left = np.array([level.move_limit - m for m in level.histogram], dtype=float)
    weights = np.array([level.histogram[m] for m in level.histogram], dtype=float)
    total = weights.sum()
    mean = float(np.sum(left * weights) / total)
    var = float(np.sum(weights * (left - mean) ** 2) / total)
    return MovesLeftStats(
        level_id=level.level_id,
        mean_left=mean,
        var_left=var,
        sample_size=int(total),
    )


def mean_variance_regression(stats: Sequence[MovesLeftStats]) -> RegressionResult:
    """Least squares of variance on mean with no intercept: sigma^2 ~ psi * mu.

    Levels with non-positive mean carry no information about the slope and
    are dropped.  R^2 is the uncentered version (1 - SS_res / sum y^2),
    which is the standard choice for through-origin fits; the p-value comes
    from the slope t statistic with N-1 degrees of freedom.
    """
    pts = sorted((s.mean_left, s.var_left) for s in stats if s.mean_left > 0)
    if len(pts) < 2:
        raise InsufficientDataError(
            f"need >= 2 levels with positive mean moves left, got {len(pts)}"
        )
    # sorting makes the reduction independent of input order, exactly
    x = np.array([p[0] for p in pts])
    y = np.array([p[1] for p in pts])
    psi = float(np.sum(x * y) / np.sum(x * x))
    resid = y - psi * x
    ss_res = float(np.sum(resid**2))
    ss_tot = float(np.sum(y**2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    dof = len(pts) - 1
    sigma2 = ss_res / dof if dof > 0 else 0.0
    se = math.sqrt(sigma2 / float(np.sum(x * x)))
    if se > 0:
        t = psi / se
        p_value = float(2.0 * scipy_stats.t.sf(abs(t), dof))
    else:
        p_value = 0.0
    return RegressionResult(
        kind="mean_variance",
        coefficients=(psi,),
        r_squared=r2,
        p_value=p_value,
        sample_size=len(pts),
    )


def _ols_line(x: np.ndarray, y: np.ndarray, kind: str) -> RegressionResult:
    """Ordinary least squares y = slope * x + intercept with centered R^2."""
    n = x.size
    sxx = float(np.sum((x - x.mean()) ** 2))
    if sxx == 0.0:
        raise DegenerateRegressorError(f"{kind}: regressor has no variation")
    slope = float(np.sum((x - x.mean()) * (y - y.mean())) / sxx)
    intercept = float(y.mean() - slope * x.mean())
    resid = y - (slope * x + intercept)
    ss_res = float(np.sum(resid**2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    dof = n - 2
    if dof > 0 and ss_res > 0:
        se = math.sqrt((ss_res / dof) / sxx)
        p_value = float(2.0 * scipy_stats.t.sf(abs(slope / se), dof))
    else:
        p_value = 0.0
    return RegressionResult(
        kind=kind,
        coefficients=(slope, intercept),
        r_squared=r2,
        p_value=p_value,
        sample_size=n,
    )


def classify_cluster(fit: FitResult | None) -> ClusterLabel:
    """Cluster taxonomy of fitted parameters.

    Boundary-of-p fits form their own cluster regardless of the parameter
    value (the defining feature is the fitting failure, and under the pmf
    convention used here the long-tail bound is p_high, the mirror image of
    p = 0.001 in the complementary convention).  Among the rest, n > 200 is
    the low-variance high-n cluster and everything else is central.
    """
    if fit is None:
        return ClusterLabel.UNCLASSIFIED
    if fit.boundary_hit & {"p_low", "p_high"}:
        return ClusterLabel.P_BOUNDARY
    if fit.params.n > HIGH_N_THRESHOLD:
        return ClusterLabel.HIGH_N
    return ClusterLabel.CENTRAL


def loglinear_np_regression(
    fits: Iterable[FitResult],
    central_only: bool = True,
) -> RegressionResult:
    """OLS of log(n) on p across levels: log(n) = a p + b.

    By default only converged central-cluster fits enter, since boundary
    and high-n fits sit off the trend by construction.
    """
    pts = sorted(
        (f.params.p, math.log(f.params.n))
        for f in fits
        if not central_only
        or (f.converged and classify_cluster(f) is ClusterLabel.CENTRAL)
    )
    if len(pts) < 2:
        raise InsufficientDataError(
            f"need >= 2 usable fits for the log-linear regression, got {len(pts)}"
        )
    x = np.array([p for p, _ in pts])
    y = np.array([ln for _, ln in pts])
    return _ols_line(x, y, "loglinear_np")


def completion_correction_fit(
    pairs: Sequence[tuple[float, float]],
) -> RegressionResult:
    """OLS of fitted completion on observed completion: c = alpha c_hat + beta."""
    if len(pairs) < 2:
        raise InsufficientDataError(f"need >= 2 completion pairs, got {len(pairs)}")
    ordered = sorted((float(obs), float(fit)) for obs, fit in pairs)
    x = np.array([obs for obs, _ in ordered])
    y = np.array([fit for _, fit in ordered])
    return _ols_line(x, y, "completion_correction")


def reparameterize_from_scale(scale: float, a: float, b: float) -> NegBinParams:
    """Rebuild (n, p) from a spread value and the log-linear coefficients.

    Takes theta in the complementary convention (theta = (1-p)/p), for which
    p = 1 / (1 + theta) and n = exp(a p + b).  Useful for driving a level
    family through the single spread parameter once (a, b) are calibrated.
    """
    if not (math.isfinite(scale) and scale > 0):
        raise ParameterError(f"scale must be a finite positive real, got {scale!r}")
    p = 1.0 / (1.0 + scale)
    try:
        n = math.exp(a * p + b)
    except OverflowError:
        n = math.inf
    if not (math.isfinite(n) and n > 0):
        raise ParameterError(f"reparameterized n = exp({a} * {p} + {b}) is out of domain")
    return NegBinParams(n=n, p=p)


def cluster_counts(fits: Iterable[FitResult]) -> dict[str, int]:
    counts = {label.value: 0 for label in ClusterLabel}
    for f in fits:
        counts[classify_cluster(f).value] += 1
    return counts


def analytics_summary(
    levels: Sequence[EmpiricalLevelData],
    fits: Sequence[FitResult],
) -> dict:
    """Assemble the cross-level analytics payload.

    Regressions that lack enough usable data come back as None rather than
    failing the whole summary.
    """
    by_id = {lv.level_id: lv for lv in levels}

    def _mean_variance():
        stats = [moves_left_stats(lv) for lv in levels if lv.histogram]
        try:
            r = mean_variance_regression(stats)
        except InsufficientDataError:
            return None
        return {"psi": r.coefficients[0], "r2": r.r_squared, "p_value": r.p_value}

    def _loglinear():
        try:
            r = loglinear_np_regression(fits)
        except (InsufficientDataError, DegenerateRegressorError):
            return None
        return {"a": r.coefficients[0], "b": r.coefficients[1], "r2": r.r_squared}

    def _correction():
        pairs = [
            (by_id[f.level_id].completion_rate, f.fitted_completion)
            for f in fits
            if f.converged and f.level_id in by_id and by_id[f.level_id].completion_rate > 0
        ]
        try:
            r = completion_correction_fit(pairs)
        except (InsufficientDataError, DegenerateRegressorError):
            return None
        return {"alpha": r.coefficients[0], "beta": r.coefficients[1], "r2": r.r_squared}

    counts = cluster_counts(fits)
    return {
        "mean_variance": _mean_variance(),
        "loglinear": _loglinear(),
        "correction": _correction(),
        "clusters": {
            "central": counts["central"],
            "p_boundary": counts["p_boundary"],
            "high_n": counts["high_n"],
        },
    }
