"""Predicted completion-rate changes under move-limit edits.

All predictions hold the fitted (n, p) fixed while the limit moves; player
behaviour near the limit may adapt in reality, so every payload carries an
explicit assumes_fixed_params flag.  One-move edits have exact pmf
increments: removing a move costs f(M) of completion mass, adding one gains
f(M+1), and beyond the pmf mode removal always dominates addition.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .distributions import nb_mode, nb_pmf
from .errors import InsufficientDataError, ParameterError, UnusableFitError
from .fitting import FitResult, fitted_completion
from .validation import apply_correction

__all__ = [
    "WhatIfQuery",
    "AsymmetryReport",
    "SensitivityGrid",
    "predict_completion",
    "whatif_response",
    "sensitivity_grid",
    "asymmetry_report",
]

SENSITIVITY_BIN_WIDTH = 0.02


@dataclass(frozen=True)
class WhatIfQuery:
    """A single move-limit edit request."""

    level_id: str
    delta: int
    apply_correction: bool = False
    correction: tuple[float, float] | None = None


@dataclass(frozen=True)
class AsymmetryReport:
    drop_one: float  # completion lost by removing one move, f(M)
    gain_one: float  # completion gained by adding one move, f(M+1)
    asymmetric: bool  # removal changes completion at least as much


@dataclass(frozen=True)
class SensitivityGrid:
    """Mean predicted completion change by baseline-completion bin and delta.

    Bins span `bin_width` of baseline completion; only populated bins are
    present.  cells maps (bin_index, delta) to the mean change and
    bin_counts gives the number of levels per bin.
    """

    bin_width: float
    bins: tuple[tuple[float, float], ...]
    deltas: tuple[int, ...]
    cells: dict[tuple[int, int], float]
    bin_counts: dict[int, int]

    def to_rows(self) -> list[dict]:
        """Plot-ready rows: one per populated (bin, delta) cell."""
        rows = []
        for (bin_idx, delta), change in sorted(self.cells.items()):
            lo = bin_idx * self.bin_width
            rows.append(
                {
                    "bin_low": round(lo, 10),
                    "bin_high": round(lo + self.bin_width, 10),
                    "delta": delta,
                    "mean_change": change,
                    "levels": self.bin_counts[bin_idx],
                }
            )
        return rows


def _require_usable(fit: FitResult) -> None:
    if not fit.converged:
        raise UnusableFitError(
            f"fit for level {fit.level_id!r} did not converge "
            f"(boundary: {sorted(fit.boundary_hit)})"
        )


def predict_completion(
    fit: FitResult,
    move_limit: int | None = None,
    delta: int = 0,
    correction: tuple[float, float] | None = None,
) -> float:
    """Completion rate at limit M + delta: sum of the fitted pmf over (0, M+delta].

    Non-decreasing in delta.  With correction coefficients the raw model
    value is mapped onto the observed-completion scale at the very end;
    corrected values never feed back into anything.
    """
    _require_usable(fit)
    m = fit.move_limit if move_limit is None else move_limit
    if m + delta < 1:
        raise ParameterError(f"edited limit {m}{delta:+d} must stay >= 1")
    raw = fitted_completion(fit.params, m + delta)
    return apply_correction(raw, correction) if correction is not None else raw


def whatif_response(
    fit: FitResult,
    delta: int,
    correction: tuple[float, float] | None = None,
) -> dict:
    """The what-if wire payload for one level and one delta."""
    baseline = predict_completion(fit, delta=0, correction=correction)
    predicted = predict_completion(fit, delta=delta, correction=correction)
    return {
        "level_id": fit.level_id,
        "delta": delta,
        "baseline": baseline,
        "predicted": predicted,
        "change": predicted - baseline,
        "corrected": correction is not None,
        "assumes_fixed_params": True,
    }


def sensitivity_grid(
    fits: Iterable[FitResult],
    deltas: Sequence[int],
    correction: tuple[float, float] | None = None,
    bin_width: float = SENSITIVITY_BIN_WIDTH,
) -> SensitivityGrid:
    """Mean completion change per (baseline bin, delta) over converged fits.

    Baselines (corrected when a correction is supplied) choose the bin; the
    cell value is the mean of predict(delta) - predict(0) over the bin.
    Deltas that would push a level's limit below one move skip that level.
    """
    usable = [f for f in fits if f.converged]
    if not usable:
        raise InsufficientDataError("sensitivity grid needs at least one converged fit")
    if not deltas:
        raise ParameterError("sensitivity grid needs at least one delta")
    changes: dict[tuple[int, int], list[float]] = {}
    bin_members: dict[int, set[str]] = {}
    for fit in usable:
        baseline = predict_completion(fit, delta=0, correction=correction)
        bin_idx = min(int(baseline / bin_width), int(round(1.0 / bin_width)) - 1)
        bin_members.setdefault(bin_idx, set()).add(fit.level_id)
        for delta in deltas:
            if fit.move_limit + delta < 1:
                continue
            predicted = predict_completion(fit, delta=delta, correction=correction)
            changes.setdefault((bin_idx, int(delta)), []).append(predicted - baseline)
    cells = {key: float(np.mean(vals)) for key, vals in changes.items()}
    bins = tuple(
        (idx * bin_width, (idx + 1) * bin_width) for idx in sorted(bin_members)
    )
    return SensitivityGrid(
        bin_width=bin_width,
        bins=bins,
        deltas=tuple(int(d) for d in deltas),
        cells=cells,
        bin_counts={idx: len(members) for idx, members in bin_members.items()},
    )


def asymmetry_report(fit: FitResult, move_limit: int | None = None) -> AsymmetryReport:
    """Compare the one-move removal and addition effects at the limit.

    drop_one = f(M) and gain_one = f(M+1); whenever M is at or beyond the
    pmf mode the pmf is non-increasing there, so removal dominates.  Below
    the mode the comparison can go the other way and is reported as found.
    """
    _require_usable(fit)
    m = fit.move_limit if move_limit is None else move_limit
    if m < 2:
        raise ParameterError(f"asymmetry needs a move limit of at least 2, got {m}")
    drop_one = float(nb_pmf(fit.params, m))
    gain_one = float(nb_pmf(fit.params, m + 1))
    return AsymmetryReport(
        drop_one=drop_one,
        gain_one=gain_one,
        asymmetric=drop_one >= gain_one,
    )


def pmf_mode(fit: FitResult) -> int:
    """Mode of the fitted pmf (exposed for M-vs-mode checks)."""
    return nb_mode(fit.params)
