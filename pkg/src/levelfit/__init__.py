"""Difficulty modelling for move-limited puzzle levels.

Fits negative binomial distributions to right-truncated moves-to-complete
histograms, validates the fits, derives cross-level difficulty structure
and predicts completion-rate changes under move-limit edits.
"""

from .analytics import (
    ClusterLabel,
    MovesLeftStats,
    RegressionResult,
    analytics_summary,
    classify_cluster,
    completion_correction_fit,
    loglinear_np_regression,
    mean_variance_regression,
    moves_left_stats,
    reparameterize_from_scale,
)
from .distributions import (
    Moments,
    NegBinParams,
    nb_cdf,
    nb_mode,
    nb_moments,
    nb_pmf,
    nb_quantile,
    nb_sample,
    p_from_scale,
    scale_from_p,
)
from .fitting import (
    FitResult,
    FitterConfig,
    fit_untruncated,
    initial_guess_search,
    nlls_fit,
)
from .ingestion import (
    AttemptRecord,
    EmpiricalLevelData,
    IngestionConfig,
    build_level_data,
    filter_attempts,
    load_histogram_json,
    parse_attempts,
)
from .synthgen import (
    CorpusSpec,
    LevelSpec,
    generate_corpus,
    generate_level,
    oracle_completion_rate,
    simulate_level_data,
)
from .validation import (
    ValidationReport,
    apply_correction,
    check_condition1,
    completion_check,
    ks_distance,
    validation_report,
)
from .whatif import (
    SensitivityGrid,
    asymmetry_report,
    predict_completion,
    sensitivity_grid,
    whatif_response,
)

__version__ = "0.1.0"
