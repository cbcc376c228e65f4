"""Synthetic attempt telemetry with known ground truth.

Each player draws independent moves-to-complete values from a known
negative binomial until they pass the level or exhaust their attempt cap.
A draw above the move limit becomes a failure that consumed the whole
budget; draws of zero are redrawn (a level cannot be completed in zero
moves), which is why specs must keep f(0) negligible so the redraw does not
visibly shift the distribution being fitted.  Booster contamination
replaces an attempt with a flagged success landing within two moves of the
limit, mirroring how booster usage inflates the top of real histograms.

Two samplers coexist: a record-level one that emits full AttemptRecord
telemetry (drives the ingestion pipeline end to end) and an aggregated one
that produces the same per-attempt law directly as histogram counts,
cheaply enough for large oracle corpora.  Both are deterministic under
their seeds; they consume randomness differently, so their outputs are not
cross-identical.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .distributions import NegBinParams, nb_cdf, nb_pmf
from .errors import SpecError
from .ingestion import AttemptRecord, EmpiricalLevelData, write_attempts_csv

__all__ = [
    "MAX_ZERO_PMF",
    "LevelSpec",
    "CorpusSpec",
    "generate_level",
    "simulate_level_data",
    "oracle_completion_rate",
    "oracle_completion_from_params",
    "resolve_corpus",
    "generate_corpus",
    "truth_manifest",
    "load_corpus_spec",
]

MAX_ZERO_PMF = 1e-4


@dataclass(frozen=True)
class LevelSpec:
    """Ground truth and population settings for one synthetic level."""

    level_id: str
    params: NegBinParams
    move_limit: int
    num_players: int
    max_attempts_per_player: int = 1
    booster_contamination_rate: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.move_limit < 1:
            raise SpecError(f"move_limit must be >= 1, got {self.move_limit}")
        if self.num_players < 1:
            raise SpecError(f"num_players must be >= 1, got {self.num_players}")
        if self.max_attempts_per_player < 1:
            raise SpecError("max_attempts_per_player must be >= 1")
        if not (0.0 <= self.booster_contamination_rate < 1.0):
            raise SpecError("booster_contamination_rate must lie in [0, 1)")
        f0 = nb_pmf(self.params, 0)
        if f0 > MAX_ZERO_PMF:
            raise SpecError(
                f"pmf(0) = {f0:.3g} exceeds {MAX_ZERO_PMF}; zero-move redraws would "
                "visibly distort the distribution"
            )


@dataclass(frozen=True)
class CorpusSpec:
    """A batch of level specs, optionally with planted cross-level structure."""

    levels: tuple[LevelSpec, ...]
    shared_p: float | None = None
    planted_loglinear: tuple[float, float, float] | None = None  # (a, b, noise sigma)


def oracle_completion_from_params(params: NegBinParams, move_limit: int) -> float:
    """Per-attempt success probability: (F(M) - f(0)) / (1 - f(0)).

    The conditioning on m >= 1 matches the generator's zero-redraw rule.
    """
    f0 = nb_pmf(params, 0)
    return float((nb_cdf(params, move_limit) - f0) / (1.0 - f0))


def oracle_completion_rate(spec: LevelSpec) -> float:
    """Analytic completion rate of a synthetic level."""
    return oracle_completion_from_params(spec.params, spec.move_limit)


def _draw_moves(rng: np.random.Generator, params: NegBinParams, count: int) -> np.ndarray:
    """Draw `count` values from the pmf conditioned on m >= 1."""
    draws = rng.negative_binomial(params.n, 1.0 - params.p, size=count)
    while True:
        zeros = draws == 0
        if not zeros.any():
            return draws
        draws[zeros] = rng.negative_binomial(params.n, 1.0 - params.p, size=int(zeros.sum()))


def generate_level(spec: LevelSpec) -> list[AttemptRecord]:
    """Full telemetry for one level, ordered by player then attempt index."""
    rng = np.random.default_rng(spec.seed)
    m_limit = spec.move_limit
    rate = spec.booster_contamination_rate
    booster_low = max(1, m_limit - 2)

    active = np.arange(spec.num_players)
    players: list[np.ndarray] = []
    attempts: list[np.ndarray] = []
    moves: list[np.ndarray] = []
    success: list[np.ndarray] = []
    booster: list[np.ndarray] = []
    for attempt_idx in range(1, spec.max_attempts_per_player + 1):
        if active.size == 0:
            break
        k = active.size
        is_booster = (
            rng.random(k) < rate if rate > 0 else np.zeros(k, dtype=bool)
        )
        n_normal = int((~is_booster).sum())
        draws = _draw_moves(rng, spec.params, n_normal) if n_normal else np.empty(0, int)
        n_boost = k - n_normal
        boost_moves = (
            rng.integers(booster_low, m_limit + 1, size=n_boost)
            if n_boost
            else np.empty(0, int)
        )

        attempt_moves = np.empty(k, dtype=np.int64)
        attempt_moves[~is_booster] = np.minimum(draws, m_limit)
        attempt_moves[is_booster] = boost_moves
        attempt_success = np.ones(k, dtype=bool)
        attempt_success[~is_booster] = draws <= m_limit

        players.append(active)
        attempts.append(np.full(k, attempt_idx))
        moves.append(attempt_moves)
        success.append(attempt_success)
        booster.append(is_booster)
        active = active[~attempt_success]

    player_arr = np.concatenate(players) if players else np.empty(0, int)
    order = np.lexsort((np.concatenate(attempts), player_arr)) if players else []
    attempt_arr = np.concatenate(attempts) if players else np.empty(0, int)
    moves_arr = np.concatenate(moves) if players else np.empty(0, int)
    success_arr = np.concatenate(success) if players else np.empty(0, bool)
    booster_arr = np.concatenate(booster) if players else np.empty(0, bool)
    width = len(str(max(spec.num_players - 1, 1)))
    return [
        AttemptRecord(
            level_id=spec.level_id,
            player_id=f"p{player_arr[i]:0{width}d}",
            attempt_index=int(attempt_arr[i]),
            moves_used=int(moves_arr[i]),
            success=bool(success_arr[i]),
            aborted=False,
            used_booster=bool(booster_arr[i]),
            used_extra_moves=False,
        )
        for i in order
    ]


def simulate_level_data(spec: LevelSpec) -> EmpiricalLevelData:
    """Aggregated clean telemetry for one level (fast path, no contamination).

    Plays the same retry process as generate_level but draws whole rounds at
    once as multinomials over (success at m = 1..M, failure).
    """
    if spec.booster_contamination_rate != 0.0:
        raise SpecError("the aggregated sampler only supports contamination-free specs")
    probs = nb_pmf(spec.params, np.arange(0, spec.move_limit + 1))
    f0 = probs[0]
    success_cells = probs[1:] / (1.0 - f0)
    cells = np.append(success_cells, max(0.0, 1.0 - success_cells.sum()))

    rng = np.random.default_rng(spec.seed)
    histogram = np.zeros(spec.move_limit, dtype=np.int64)
    total_attempts = 0
    still_failing = spec.num_players
    for _ in range(spec.max_attempts_per_player):
        if still_failing == 0:
            break
        outcome = rng.multinomial(still_failing, cells)
        histogram += outcome[:-1]
        total_attempts += still_failing
        still_failing = int(outcome[-1])
    counts = {m + 1: int(c) for m, c in enumerate(histogram) if c}
    return EmpiricalLevelData.from_counts(
        spec.level_id, spec.move_limit, counts, total_attempts
    )


def resolve_corpus(spec: CorpusSpec) -> list[LevelSpec]:
    """Apply shared-p and planted log-linear structure to the level specs.

    shared_p overrides every level's p; planted_loglinear (a, b, sigma)
    then rewrites n = exp(a p + b + eps) with per-level Gaussian noise drawn
    from a stream independent of the telemetry stream.  The planted
    parameters must stay inside the default fitter box for their level.
    """
    levels = []
    planted = spec.shared_p is not None or spec.planted_loglinear is not None
    for lv in spec.levels:
        params = lv.params
        if spec.shared_p is not None:
            params = NegBinParams(n=params.n, p=spec.shared_p)
        if spec.planted_loglinear is not None:
            a, b, sigma = spec.planted_loglinear
            noise_rng = np.random.default_rng([lv.seed, 0x70A17])
            eps = float(noise_rng.normal(0.0, sigma)) if sigma > 0 else 0.0
            params = NegBinParams(n=math.exp(a * params.p + b + eps), p=params.p)
        # plain truth specs may sit outside the box on purpose (boundary
        # stress levels); only planted structure must stay fittable
        if planted and (
            not (1.0 <= params.n <= 10.0 * lv.move_limit)
            or not (0.001 <= params.p <= 0.999)
        ):
            raise SpecError(
                f"planted parameters {params} for level {lv.level_id!r} leave the "
                f"fitter box [1, {10 * lv.move_limit}] x [0.001, 0.999]"
            )
        levels.append(replace(lv, params=params))
    return levels


def truth_manifest(levels: Sequence[LevelSpec]) -> dict:
    return {
        "levels": [
            {
                "level_id": lv.level_id,
                "n": lv.params.n,
                "p": lv.params.p,
                "move_limit": lv.move_limit,
                "oracle_completion": oracle_completion_rate(lv),
            }
            for lv in levels
        ]
    }


def generate_corpus(
    spec: CorpusSpec,
    attempts_path,
    manifest_path=None,
    format: str = "csv",
) -> dict:
    """Write corpus telemetry plus its truth manifest; returns the manifest.

    format "csv" emits row-level telemetry through the record sampler;
    "json" emits aggregated clean histograms through the fast sampler (only
    available for contamination-free corpora).
    """
    levels = resolve_corpus(spec)
    if format == "csv":

        def _rows():
            for lv in levels:
                yield from generate_level(lv)

        write_attempts_csv(_rows(), attempts_path)
    elif format == "json":
        data = [simulate_level_data(lv).to_json_dict() for lv in levels]
        with open(attempts_path, "w", encoding="utf-8") as fh:
            json.dump(data, fh, indent=2)
            fh.write("\n")
    else:
        raise SpecError(f"unknown corpus format {format!r}")
    manifest = truth_manifest(levels)
    if manifest_path is not None:
        with open(manifest_path, "w", encoding="utf-8") as fh:
            json.dump(manifest, fh, indent=2)
            fh.write("\n")
    return manifest


def load_corpus_spec(source, base_seed: int | None = None) -> CorpusSpec:
    """Read a corpus spec JSON file.

    Layout: {"levels": [{"level_id", "n", "p", "move_limit", "num_players",
    "max_attempts_per_player"?, "booster_contamination_rate"?, "seed"?}],
    "shared_p"?, "planted_loglinear": {"a", "b", "sigma"}?}.  Levels without
    a seed get distinct substreams derived from base_seed.
    """
    if isinstance(source, (str, bytes)) or hasattr(source, "__fspath__"):
        with open(source, "r", encoding="utf-8") as fh:
            payload = json.load(fh)
    else:
        payload = json.load(source)
    seeds = np.random.SeedSequence(base_seed or 0).generate_state(len(payload["levels"]))
    levels = []
    for i, entry in enumerate(payload["levels"]):
        levels.append(
            LevelSpec(
                level_id=str(entry["level_id"]),
                params=NegBinParams(float(entry["n"]), float(entry["p"])),
                move_limit=int(entry["move_limit"]),
                num_players=int(entry["num_players"]),
                max_attempts_per_player=int(entry.get("max_attempts_per_player", 1)),
                booster_contamination_rate=float(
                    entry.get("booster_contamination_rate", 0.0)
                ),
                seed=int(entry["seed"]) if "seed" in entry else int(seeds[i]),
            )
        )
    planted = payload.get("planted_loglinear")
    return CorpusSpec(
        levels=tuple(levels),
        shared_p=payload.get("shared_p"),
        planted_loglinear=(
            (float(planted["a"]), float(planted["b"]), float(planted.get("sigma", 0.0)))
            if planted
            else None
        ),
    )
