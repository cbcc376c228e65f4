"""Read-mostly HTTP/JSON API over precomputed fits and level data.

Fits are loaded (or computed) once at startup; what-if predictions then run
in microseconds, well inside an interactive latency budget.  The optional
refit endpoint recomputes one level and swaps the whole per-level entry
atomically, so concurrent readers always observe one coherent fit, never a
mixture of old and new numbers.  Every value served is produced by the same
library calls the CLI uses, at full float precision.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field

import numpy as np
from fastapi import FastAPI, Query, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel, StrictBool, StrictInt

from .analytics import analytics_summary, classify_cluster
from .distributions import nb_pmf
from .errors import LevelfitError, ParameterError, UnusableFitError
from .fitting import FitResult, FitterConfig, fit_to_json_dict, initial_guess_search
from .ingestion import EmpiricalLevelData
from .whatif import whatif_response

__all__ = ["ApiState", "LevelEntry", "build_state", "create_app"]

CURVE_POINT_CAP = 100_000


@dataclass(frozen=True)
class LevelEntry:
    """Immutable snapshot of one level: data plus current fit."""

    data: EmpiricalLevelData
    fit: FitResult


@dataclass
class ApiState:
    levels: dict[str, LevelEntry]
    correction: tuple[float, float] | None
    grid: tuple[int, int]
    analytics: dict = field(default_factory=dict)
    refit_lock: threading.Lock = field(default_factory=threading.Lock)

    def refresh_analytics(self) -> None:
        entries = list(self.levels.values())
        self.analytics = analytics_summary(
            [e.data for e in entries], [e.fit for e in entries]
        )


def build_state(
    levels: list[EmpiricalLevelData],
    fits: list[FitResult],
    correction: tuple[float, float] | None = None,
    grid: tuple[int, int] = (16, 16),
) -> ApiState:
    by_id = {lv.level_id: lv for lv in levels}
    entries = {}
    for fit in fits:
        data = by_id.get(fit.level_id)
        if data is None:
            raise ParameterError(f"fit for level {fit.level_id!r} has no level data")
        entries[fit.level_id] = LevelEntry(data=data, fit=fit)
    state = ApiState(levels=entries, correction=correction, grid=grid)
    state.refresh_analytics()
    return state


class WhatIfBody(BaseModel):
    delta: StrictInt
    apply_correction: StrictBool = False


def _error(status: int, code: str) -> JSONResponse:
    return JSONResponse(status_code=status, content={"error": code})


def _level_summary(entry: LevelEntry) -> dict:
    fit = entry.fit
    return {
        "level_id": fit.level_id,
        "move_limit": entry.data.move_limit,
        "total_attempts": entry.data.total_attempts,
        "observed_completion": entry.data.completion_rate,
        "n": fit.params.n,
        "p": fit.params.p,
        "D": fit.ks_distance,
        "fitted_completion": fit.fitted_completion,
        "converged": fit.converged,
        "cluster": classify_cluster(fit).value,
    }


def create_app(state: ApiState, permissive_cors: bool = True) -> FastAPI:
    app = FastAPI(title="levelfit", version="0.1.0")
    if permissive_cors:
        from fastapi.middleware.cors import CORSMiddleware

        app.add_middleware(
            CORSMiddleware,
            allow_origins=["*"],
            allow_methods=["*"],
            allow_headers=["*"],
        )

    @app.exception_handler(RequestValidationError)
    async def _on_bad_body(request: Request, exc: RequestValidationError):
        return _error(400, "malformed_request")

    @app.get("/levels")
    def list_levels():
        return [
            _level_summary(entry)
            for _, entry in sorted(state.levels.items())
        ]

    @app.get("/levels/{level_id}")
    def level_detail(level_id: str):
        entry = state.levels.get(level_id)
        if entry is None:
            return _error(404, "unknown_level")
        total = entry.data.total_attempts
        return {
            **_level_summary(entry),
            "histogram": {str(m): c for m, c in sorted(entry.data.histogram.items())},
            # normalized frequencies let clients plot the fitting target
            # without doing any arithmetic of their own
            "frequencies": {
                str(m): c / total for m, c in sorted(entry.data.histogram.items())
            },
            "fit": fit_to_json_dict(entry.fit),
        }

    @app.get("/levels/{level_id}/curve")
    def level_curve(
        level_id: str,
        from_: int = Query(default=1, alias="from", ge=0),
        to: int | None = Query(default=None, ge=0),
    ):
        entry = state.levels.get(level_id)
        if entry is None:
            return _error(404, "unknown_level")
        hi = entry.data.move_limit if to is None else to
        if hi < from_ or (hi - from_) > CURVE_POINT_CAP:
            return _error(400, "invalid_range")
        ms = np.arange(from_, hi + 1)
        values = nb_pmf(entry.fit.params, ms)
        return {
            "level_id": level_id,
            "move_limit": entry.data.move_limit,
            "points": [{"m": int(m), "pmf": float(v)} for m, v in zip(ms, values)],
        }

    @app.post("/levels/{level_id}/whatif")
    def level_whatif(level_id: str, body: WhatIfBody):
        entry = state.levels.get(level_id)
        if entry is None:
            return _error(404, "unknown_level")
        correction = state.correction if body.apply_correction else None
        if body.apply_correction and correction is None:
            return _error(400, "no_correction_loaded")
        try:
            return whatif_response(entry.fit, body.delta, correction=correction)
        except UnusableFitError:
            return _error(409, "fit_not_converged")
        except ParameterError:
            return _error(400, "invalid_delta")

    @app.get("/analytics")
    def analytics():
        return state.analytics

    @app.post("/levels/{level_id}/refit")
    def refit(level_id: str):
        entry = state.levels.get(level_id)
        if entry is None:
            return _error(404, "unknown_level")
        config = FitterConfig.for_move_limit(
            entry.data.move_limit,
            grid_n_points=state.grid[0],
            grid_p_points=state.grid[1],
        )
        try:
            fit = initial_guess_search(entry.data, config)
        except LevelfitError:
            return _error(409, "refit_failed")
        with state.refit_lock:
            state.levels[level_id] = LevelEntry(data=entry.data, fit=fit)
            state.refresh_analytics()
        return fit_to_json_dict(fit)

    return app
