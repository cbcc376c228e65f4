"""Shared builders for hand-crafted fits and near-exact levels."""

from levelfit.distributions import NegBinParams, nb_moments, nb_pmf
from levelfit.fitting import FitResult, fitted_completion
from levelfit.ingestion import EmpiricalLevelData


def make_fit(
    n=50.0,
    p=0.3,
    level_id="L1",
    converged=True,
    boundary=frozenset(),
    move_limit=20,
) -> FitResult:
    params = NegBinParams(n, p)
    return FitResult(
        level_id=level_id,
        params=params,
        initial_guess=params,
        ks_distance=0.01,
        fitted_completion=fitted_completion(params, move_limit),
        converged=converged,
        boundary_hit=frozenset(boundary),
        moments=nb_moments(params),
        grid_starts_evaluated=0,
        move_limit=move_limit,
        objective=0.0,
    )


def near_exact_level(
    params: NegBinParams, move_limit: int, total: int = 10**12, level_id: str = "exact"
) -> EmpiricalLevelData:
    """Level whose frequencies match the pmf up to counting resolution."""
    counts = {
        m: int(round(nb_pmf(params, m) * total)) for m in range(1, move_limit + 1)
    }
    return EmpiricalLevelData.from_counts(level_id, move_limit, counts, total)
