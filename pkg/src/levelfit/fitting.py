"""Bounded NLLS calibration with a KS-optimal initial-guess search.

For one level the objective is the plain (unweighted) sum of squared
differences between the empirical frequencies and the model pmf over
(0, M], minimized inside the box [1, 10M] x [0.001, 0.999].  Because a bad
starting point can strand the optimizer in a poor local minimum, the box is
covered by a grid of starts (log-spaced in n, linear in p), NLLS runs from
every start, and the winner is the candidate whose *result* has the
smallest KS distance against the data.  A fit counts as converged only if
no box bound is active at the solution; in practice the long-tail p bound
dominates the failures.

Internally the optimizer works in (log n, p): the n range spans four or
more decades and log conditioning keeps the trust region honest.  Bounds,
objective and results are all expressed in the original units.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from typing import Mapping

import numpy as np
from scipy.optimize import least_squares
from scipy.special import digamma, gammaln

from . import validation
from .distributions import Moments, NegBinParams, nb_moments, nb_pmf
from .errors import FitFailedError, NumericFitError, ParameterError, UnfittableError
from .ingestion import EmpiricalLevelData

__all__ = [
    "FitterConfig",
    "FitCandidate",
    "FitResult",
    "nlls_fit",
    "initial_guess_search",
    "fit_untruncated",
    "fitted_completion",
    "fit_to_json_dict",
    "fit_from_json_dict",
]

P_BOUNDS_DEFAULT = (0.001, 0.999)
UNTRUNCATED_RANGE_FACTOR = 10


@dataclass(frozen=True)
class FitterConfig:
    """Search box, grid resolution and optimizer stopping rules."""

    n_bounds: tuple[float, float]
    p_bounds: tuple[float, float] = P_BOUNDS_DEFAULT
    grid_n_points: int = 16
    grid_p_points: int = 16
    nlls_max_iterations: int = 200
    nlls_tolerance: float = 1e-10
    boundary_epsilon: float = 1e-6
    delta_condition1: float = 0.05

    def __post_init__(self):
        n_lo, n_hi = self.n_bounds
        p_lo, p_hi = self.p_bounds
        if not (0 < n_lo < n_hi):
            raise ParameterError(f"degenerate n bounds {self.n_bounds!r}")
        if not (0 < p_lo < p_hi < 1):
            raise ParameterError(f"degenerate p bounds {self.p_bounds!r}")
        if self.grid_n_points < 2 or self.grid_p_points < 2:
            raise ParameterError("grid must have at least 2 points per axis")
        if self.nlls_max_iterations < 1 or self.nlls_tolerance <= 0:
            raise ParameterError("invalid optimizer stopping rule")
        if self.boundary_epsilon <= 0:
            raise ParameterError("boundary_epsilon must be positive")

    @classmethod
    def for_move_limit(cls, move_limit: int, **overrides) -> "FitterConfig":
        """Default search space for a level: n in [1, 10M], p in [0.001, 0.999]."""
        return cls(n_bounds=(1.0, 10.0 * move_limit), **overrides)

    def grid_starts(self) -> list[NegBinParams]:
        """Initial guesses: log-spaced in n, linear in p, row-major in n."""
        ns = np.geomspace(self.n_bounds[0], self.n_bounds[1], self.grid_n_points)
        ps = np.linspace(self.p_bounds[0], self.p_bounds[1], self.grid_p_points)
        return [NegBinParams(float(n), float(p)) for n in ns for p in ps]


@dataclass(frozen=True)
class FitCandidate:
    """Outcome of a single NLLS run from one starting point."""

    params: NegBinParams
    objective: float
    boundary_hit: frozenset[str]


@dataclass(frozen=True)
class FitResult:
    """Calibrated parameters for one level plus derived descriptors."""

    level_id: str
    params: NegBinParams
    initial_guess: NegBinParams
    ks_distance: float
    fitted_completion: float
    converged: bool
    boundary_hit: frozenset[str]
    moments: Moments
    grid_starts_evaluated: int
    move_limit: int
    objective: float


def fitted_completion(params: NegBinParams, move_limit: int) -> float:
    """Model completion rate at the limit: sum of the pmf over (0, M]."""
    return float(np.sum(nb_pmf(params, np.arange(1, move_limit + 1))))


def _boundary_hits(params: NegBinParams, config: FitterConfig) -> frozenset[str]:
    """Box bounds active at the solution, within boundary_epsilon (scaled)."""
    eps = config.boundary_epsilon
    n_lo, n_hi = config.n_bounds
    p_lo, p_hi = config.p_bounds
    hits = set()
    if params.n - n_lo <= eps * max(1.0, n_lo):
        hits.add("n_low")
    if n_hi - params.n <= eps * max(1.0, n_hi):
        hits.add("n_high")
    if params.p - p_lo <= eps:
        hits.add("p_low")
    if p_hi - params.p <= eps:
        hits.add("p_high")
    return frozenset(hits)


def nlls_fit(
    level: EmpiricalLevelData,
    initial_guess: NegBinParams,
    config: FitterConfig,
) -> FitCandidate:
    """One bounded least-squares run from a given start.

    Minimizes sum over m = 1..M of (fhat(m) - f(m; n, p))^2 inside the box
    and reports any bound active at the solution.  Residuals are unweighted.
    """
    if not level.histogram:
        raise UnfittableError(f"level {level.level_id!r} has an empty histogram")
    n_lo, n_hi = config.n_bounds
    p_lo, p_hi = config.p_bounds
    if not (n_lo <= initial_guess.n <= n_hi and p_lo <= initial_guess.p <= p_hi):
        raise ParameterError(f"initial guess {initial_guess} lies outside the search box")

    ms = np.arange(1, level.move_limit + 1, dtype=float)
    fhat = level.frequencies()
    neg_log_mfact = -gammaln(ms + 1.0)  # start-independent piece of the log pmf

    def model(x: np.ndarray) -> np.ndarray:
        ln_n, p = x
        n = math.exp(ln_n)
        return np.exp(
            gammaln(ms + n)
            - math.lgamma(n)
            + neg_log_mfact
            + n * math.log1p(-p)
            + ms * math.log(p)
        )

    def residuals(x: np.ndarray) -> np.ndarray:
        return fhat - model(x)

    def jacobian(x: np.ndarray) -> np.ndarray:
        ln_n, p = x
        n = math.exp(ln_n)
        f = model(x)
        dlog_dn = digamma(ms + n) - digamma(n) + math.log1p(-p)
        dlog_dp = ms / p - n / (1.0 - p)
        jac = np.empty((ms.size, 2))
        jac[:, 0] = -f * dlog_dn * n  # chain rule for the log-n coordinate
        jac[:, 1] = -f * dlog_dp
        return jac

    x0 = np.array([math.log(initial_guess.n), initial_guess.p])
    try:
        res = least_squares(
            residuals,
            x0=x0,
            jac=jacobian,
            bounds=([math.log(n_lo), p_lo], [math.log(n_hi), p_hi]),
            method="trf",
            ftol=config.nlls_tolerance,
            xtol=1e-12,
            gtol=1e-12,
            max_nfev=config.nlls_max_iterations,
        )
    except ValueError as exc:
        raise NumericFitError(
            f"optimizer failed from start {initial_guess}: {exc}",
            diagnostics={"level_id": level.level_id, "start": initial_guess},
        )
    objective = float(2.0 * res.cost)  # least_squares reports 0.5 * sum r^2
    if not np.isfinite(objective):
        raise NumericFitError(
            "optimizer returned a non-finite objective",
            diagnostics={"level_id": level.level_id, "start": initial_guess, "x": res.x},
        )
    params = NegBinParams(
        n=float(min(n_hi, max(n_lo, math.exp(res.x[0])))),
        p=float(min(p_hi, max(p_lo, res.x[1]))),
    )
    return FitCandidate(
        params=params,
        objective=objective,
        boundary_hit=_boundary_hits(params, config),
    )


def initial_guess_search(
    level: EmpiricalLevelData,
    config: FitterConfig | None = None,
) -> FitResult:
    """Calibrate one level: NLLS from every grid start, keep the KS-best result.

    The winning start is recorded as initial_guess; ties in D break by lower
    objective, then lower n, so the result is deterministic.  Starts that
    fail numerically are skipped; if every start fails, FitFailedError.
    """
    if config is None:
        config = FitterConfig.for_move_limit(level.move_limit)
    if not level.histogram:
        raise UnfittableError(f"level {level.level_id!r} has an empty histogram")

    best: tuple[float, float, float] | None = None
    best_candidate: FitCandidate | None = None
    best_start: NegBinParams | None = None
    starts = config.grid_starts()
    evaluated = 0
    for start in starts:
        try:
            cand = nlls_fit(level, start, config)
        except NumericFitError:
            evaluated += 1
            continue
        evaluated += 1
        d = validation.ks_distance(level, cand.params)
        key = (d, cand.objective, cand.params.n)
        if best is None or key < best:
            best = key
            best_candidate = cand
            best_start = start
    if best_candidate is None or best_start is None:
        raise FitFailedError(
            f"all {len(starts)} starts failed numerically for level {level.level_id!r}"
        )
    return FitResult(
        level_id=level.level_id,
        params=best_candidate.params,
        initial_guess=best_start,
        ks_distance=best[0],
        fitted_completion=fitted_completion(best_candidate.params, level.move_limit),
        converged=not best_candidate.boundary_hit,
        boundary_hit=best_candidate.boundary_hit,
        moments=nb_moments(best_candidate.params),
        grid_starts_evaluated=evaluated,
        move_limit=level.move_limit,
        objective=best_candidate.objective,
    )


def fit_untruncated(
    full_histogram: Mapping[int, int],
    move_limit: int,
    config: FitterConfig | None = None,
    level_id: str = "untruncated",
) -> FitResult:
    """Fit uncensored data over (0, 10M] (e.g. move counts of playtest agents).

    The histogram is normalized by its own total (every run completes), the
    fitting range widens to ten times the nominal limit, and the reported
    fitted_completion still refers to the nominal limit.
    """
    if move_limit < 1:
        raise ParameterError(f"move_limit must be >= 1, got {move_limit}")
    full_range = UNTRUNCATED_RANGE_FACTOR * move_limit
    counts = {int(m): int(c) for m, c in full_histogram.items() if c}
    if not counts:
        raise UnfittableError("untruncated histogram is empty")
    bad = [m for m in counts if not (1 <= m <= full_range)]
    if bad:
        raise ParameterError(
            f"histogram mass at m={min(bad)} outside (0, {full_range}]"
        )
    total = sum(counts.values())
    pseudo = EmpiricalLevelData.from_counts(level_id, full_range, counts, total)
    if config is None:
        config = FitterConfig.for_move_limit(move_limit)
    result = initial_guess_search(pseudo, config)
    return replace(
        result,
        fitted_completion=fitted_completion(result.params, move_limit),
        move_limit=move_limit,
    )


def fit_to_json_dict(fit: FitResult) -> dict:
    """Wire layout of one fit record (D, parameters, descriptors)."""
    return {
        "level_id": fit.level_id,
        "n": fit.params.n,
        "p": fit.params.p,
        "D": fit.ks_distance,
        "fitted_completion": fit.fitted_completion,
        "converged": fit.converged,
        "boundary_hit": sorted(fit.boundary_hit),
        "mean": fit.moments.mean,
        "variance": fit.moments.variance,
        "scale": fit.moments.scale,
        "move_limit": fit.move_limit,
        "initial_guess": {"n": fit.initial_guess.n, "p": fit.initial_guess.p},
        "grid_starts_evaluated": fit.grid_starts_evaluated,
        "objective": fit.objective,
    }


def fit_from_json_dict(entry: Mapping) -> FitResult:
    """Rebuild a FitResult from its wire layout (tolerant of missing extras)."""
    params = NegBinParams(float(entry["n"]), float(entry["p"]))
    guess = entry.get("initial_guess")
    initial = (
        NegBinParams(float(guess["n"]), float(guess["p"])) if guess else params
    )
    return FitResult(
        level_id=str(entry["level_id"]),
        params=params,
        initial_guess=initial,
        ks_distance=float(entry["D"]),
        fitted_completion=float(entry["fitted_completion"]),
        converged=bool(entry["converged"]),
        boundary_hit=frozenset(entry.get("boundary_hit", [])),
        moments=nb_moments(params),
        grid_starts_evaluated=int(entry.get("grid_starts_evaluated", 0)),
        move_limit=int(entry["move_limit"]),
        objective=float(entry.get("objective", float("nan"))),
    )


def fits_to_json(fits: list[FitResult]) -> str:
    return json.dumps([fit_to_json_dict(f) for f in fits], indent=2)


def fits_from_json(source) -> list[FitResult]:
    """Load fit records from a path or an open file."""
    if isinstance(source, (str, bytes)) or hasattr(source, "__fspath__"):
        with open(source, "r", encoding="utf-8") as fh:
            payload = json.load(fh)
    else:
        payload = json.load(source)
    return [fit_from_json_dict(e) for e in payload]
