"""Exact negative-binomial probability kernel.

Everything here is anchored to one pmf:

    f(m) = C(m + n - 1, m) * (1 - p)^n * p^m,    m = 0, 1, 2, ...

with shape n > 0 (real-valued, generalized through the gamma function) and
p in (0, 1) as the base of the p^m factor.  Under this convention

    mean     = n * p / (1 - p)
    variance = n * p / (1 - p)^2
    scale    = p / (1 - p)            (spread parameter, theta)

Many references write the same family with the roles of p and 1-p swapped
(mean n*(1-p)/p, scale (1-p)/p).  Translate by substituting p <-> 1-p; the
symmetric point p = 0.5 is identical in both conventions.

All pmf evaluation happens in log space via log-gamma so that very large
shapes (n up to ten times a move limit) do not overflow.  Every function is
pure and safe for unrestricted concurrent use.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats
from scipy.special import betainc, gammaln

from .errors import ParameterError

__all__ = [
    "NegBinParams",
    "Moments",
    "nb_pmf",
    "nb_log_pmf",
    "nb_cdf",
    "nb_moments",
    "nb_quantile",
    "nb_sample",
    "nb_mode",
    "scale_from_p",
    "p_from_scale",
]


@dataclass(frozen=True)
class NegBinParams:
    """Parameter pair of the negative binomial model.

    Attributes:
        n: shape, any positive real.
        p: mixing probability in the open interval (0, 1); base of p^m.
    """

    n: float
    p: float

    def __post_init__(self):
        if not (math.isfinite(self.n) and self.n > 0):
            raise ParameterError(f"shape n must be a finite positive real, got {self.n!r}")
        if not (math.isfinite(self.p) and 0.0 < self.p < 1.0):
            raise ParameterError(f"p must lie strictly inside (0, 1), got {self.p!r}")


@dataclass(frozen=True)
class Moments:
    """Closed-form moments and the dimensionless spread (scale) parameter."""

    mean: float
    variance: float
    scale: float


def _as_counts(m) -> tuple[np.ndarray, bool]:
    """Validate m as non-negative integer(s); return (float array, was_scalar)."""
    arr = np.asarray(m)
    scalar = arr.ndim == 0
    if not np.issubdtype(arr.dtype, np.number):
        raise ParameterError(f"m must be numeric, got dtype {arr.dtype}")
    arr = arr.astype(float)
    if arr.size and (np.any(~np.isfinite(arr)) or np.any(arr < 0) or np.any(arr != np.floor(arr))):
        raise ParameterError("m must consist of non-negative integers")
    return arr, scalar


def nb_log_pmf(params: NegBinParams, m) -> float | np.ndarray:
    """log f(m), vectorized over m."""
    arr, scalar = _as_counts(m)
    n, p = params.n, params.p
    out = (
        gammaln(arr + n)
        - gammaln(arr + 1.0)
        - gammaln(n)
        + n * np.log1p(-p)
        + arr * np.log(p)
    )
    return float(out) if scalar else out


def nb_pmf(params: NegBinParams, m) -> float | np.ndarray:
    """Probability of completing in exactly m moves, f(m)."""
    out = np.exp(nb_log_pmf(params, m))
    return float(out) if np.ndim(m) == 0 else out


def nb_cdf(params: NegBinParams, m) -> float | np.ndarray:
    """Cumulative probability F(m) = sum_{m'=0..m} f(m').

    Evaluated through the regularized incomplete beta function, which equals
    the partial sum exactly, is non-decreasing in m and tends to 1.
    """
    arr, scalar = _as_counts(m)
    out = betainc(params.n, arr + 1.0, 1.0 - params.p)
    return float(out) if scalar else out


def nb_moments(params: NegBinParams) -> Moments:
    """Mean, variance and scale implied by the pmf."""
    n, p = params.n, params.p
    q = 1.0 - p
    return Moments(mean=n * p / q, variance=n * p / (q * q), scale=p / q)


def scale_from_p(p: float) -> float:
    """Spread parameter theta = p / (1 - p) for p in (0, 1)."""
    if not (math.isfinite(p) and 0.0 < p < 1.0):
        raise ParameterError(f"p must lie strictly inside (0, 1), got {p!r}")
    return p / (1.0 - p)


def p_from_scale(scale: float) -> float:
    """Inverse of scale_from_p: p = theta / (1 + theta) for theta > 0."""
    if not (math.isfinite(scale) and scale > 0.0):
        raise ParameterError(f"scale must be a finite positive real, got {scale!r}")
    return scale / (1.0 + scale)


def nb_quantile(params: NegBinParams, q: float) -> int:
    """Smallest m with F(m) >= q, for q in the open interval (0, 1)."""
    if not (math.isfinite(q) and 0.0 < q < 1.0):
        raise ParameterError(f"quantile level must lie inside (0, 1), got {q!r}")
    # scipy's ppf is a fast starting point; the scan below makes the
    # smallest-m guarantee independent of its rounding behaviour.
    m = int(stats.nbinom.ppf(q, params.n, 1.0 - params.p))
    while nb_cdf(params, m) < q:
        m += 1
    while m > 0 and nb_cdf(params, m - 1) >= q:
        m -= 1
    return m


def nb_sample(params: NegBinParams, seed: int, count: int) -> np.ndarray:
    """Draw `count` values from the pmf, deterministically for a given seed."""
    if count < 1:
        raise ParameterError(f"count must be a positive integer, got {count!r}")
    rng = np.random.default_rng(seed)
    # numpy parameterizes by the success probability of the complementary
    # convention, i.e. 1 - p under the pmf used here.
    return rng.negative_binomial(params.n, 1.0 - params.p, size=int(count))


def nb_mode(params: NegBinParams) -> int:
    """Argmax of the pmf: floor(p (n - 1) / (1 - p)) for n > 1, else 0."""
    n, p = params.n, params.p
    if n <= 1.0:
        return 0
    return int(math.floor(p * (n - 1.0) / (1.0 - p)))
