"""Session fixtures: the oracle corpora shared across the acceptance suite."""

from __future__ import annotations

import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pytest

from levelfit.cli import main as cli_main
from levelfit.distributions import NegBinParams, nb_quantile
from levelfit.fitting import FitResult, fits_from_json, initial_guess_search
from levelfit.ingestion import EmpiricalLevelData, load_histogram_json
from levelfit.synthgen import (
    MAX_ZERO_PMF,
    CorpusSpec,
    LevelSpec,
    generate_corpus,
    simulate_level_data,
)

RECOVERY_SEED = 20260809
RECOVERY_LEVELS = 200
RECOVERY_ATTEMPTS = 200_000
RAMP_SEED = 424242
RAMP_LEVELS = 50
MIN_MOVES_SD = 6.5  # keeps the corpus in the regime of the ~2% one-move heuristic


def draw_recovery_specs(
    count: int,
    master_seed: int,
    num_players: int = RECOVERY_ATTEMPTS,
    contamination: float = 0.0,
    prefix: str = "R",
) -> list[LevelSpec]:
    """Truth in n [5, 60], p [0.2, 0.8]; M at the 40th-90th truth percentile.

    Two feasibility screens shape the draw inside those ranges: pmf(0) must
    stay below the generator bound, and the moves standard deviation must
    not be so small that single-move edits swing completion by far more
    than real levels do.
    """
    rng = np.random.default_rng(master_seed)
    specs: list[LevelSpec] = []
    while len(specs) < count:
        p = float(rng.uniform(0.2, 0.8))
        n_lo = max(5.0, math.log(MAX_ZERO_PMF) / math.log1p(-p))
        if n_lo > 60.0:
            continue
        n = float(rng.uniform(n_lo, 60.0))
        if math.sqrt(n * p) / (1.0 - p) < MIN_MOVES_SD:
            continue
        params = NegBinParams(n, p)
        move_limit = nb_quantile(params, float(rng.uniform(0.4, 0.9)))
        specs.append(
            LevelSpec(
                level_id=f"{prefix}{len(specs):03d}",
                params=params,
                move_limit=move_limit,
                num_players=num_players,
                max_attempts_per_player=1,
                booster_contamination_rate=contamination,
                seed=int(rng.integers(0, 2**31)),
            )
        )
    return specs


def draw_ramp_specs(count: int, master_seed: int) -> list[LevelSpec]:
    """Nearly flat rising histograms: truth mean at least five move limits.

    The truth tail parameter sits beyond the fitter's p box, which is what
    defines this stress family; the observable window shows only a slowly
    increasing ramp.
    """
    rng = np.random.default_rng(master_seed)
    specs = []
    for i in range(count):
        n = float(rng.uniform(1.2, 1.6))
        tail = float(rng.uniform(1.0e-4, 2.5e-4))  # 1 - p, below the box floor
        params = NegBinParams(n, 1.0 - tail)
        move_limit = 25
        assert params.n * params.p / (1 - params.p) >= 5 * move_limit
        specs.append(
            LevelSpec(
                level_id=f"ramp{i:02d}",
                params=params,
                move_limit=move_limit,
                num_players=500_000,
                max_attempts_per_player=1,
                seed=int(rng.integers(0, 2**31)),
            )
        )
    return specs


@dataclass(frozen=True)
class RecoveryCorpus:
    specs: dict[str, LevelSpec]
    levels: dict[str, EmpiricalLevelData]
    truth: dict[str, dict]
    fits: dict[str, FitResult]
    histograms_path: Path
    fits_path: Path
    fit_wall_seconds: float


@pytest.fixture(scope="session")
def recovery_corpus(tmp_path_factory) -> RecoveryCorpus:
    """200-level oracle corpus, fitted once through the CLI."""
    root = tmp_path_factory.mktemp("recovery")
    specs = draw_recovery_specs(RECOVERY_LEVELS, RECOVERY_SEED)
    histograms = root / "histograms.json"
    truth_path = root / "truth.json"
    generate_corpus(CorpusSpec(levels=tuple(specs)), histograms, truth_path, format="json")

    fits_path = root / "fits.json"
    started = time.time()
    code = cli_main(
        [
            "fit",
            "--input",
            str(histograms),
            "--out",
            str(fits_path),
            "--grid",
            "16x16",
            "--jobs",
            str(os.cpu_count() or 1),
        ]
    )
    wall = time.time() - started
    assert code == 0, "recovery corpus fit must succeed for the acceptance suite"

    levels = {lv.level_id: lv for lv in load_histogram_json(histograms)}
    fits = {f.level_id: f for f in fits_from_json(fits_path)}
    truth = {
        e["level_id"]: e for e in json.loads(truth_path.read_text())["levels"]
    }
    return RecoveryCorpus(
        specs={s.level_id: s for s in specs},
        levels=levels,
        truth=truth,
        fits=fits,
        histograms_path=histograms,
        fits_path=fits_path,
        fit_wall_seconds=wall,
    )


@pytest.fixture(scope="session")
def ramp_fits() -> list[FitResult]:
    """Fits of the 50 boundary-stress levels."""
    specs = draw_ramp_specs(RAMP_LEVELS, RAMP_SEED)
    levels = [simulate_level_data(s) for s in specs]
    with ProcessPoolExecutor(max_workers=os.cpu_count() or 1) as pool:
        return list(pool.map(initial_guess_search, levels))
