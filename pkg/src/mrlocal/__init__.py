"""Two-sample Mendelian randomization robust to invalid instruments.

The toolkit estimates a causal effect from per-SNP GWAS summary statistics
by locating the cluster of instrument ratio estimates whose standardized
residuals carry the least uncertainty, then applying debiased
inverse-variance weighting inside it, with a balanced-pleiotropy fallback
when no cluster qualifies. A simulator and Monte Carlo harness support
coverage and error benchmarking at configurable scale.
"""

from .algorithm import (
    PATH_BALANCED,
    PATH_PLURALITY,
    CandidateSet,
    CausalEstimate,
    ClusterEvaluation,
    MrLocalConfig,
    candidate_grid,
    effective_tau0,
    run_mr_local,
    run_mr_local_plus,
    select_mode,
    uncertainty_test,
)
from .bootstrap import BootstrapError, BootstrapResult, bootstrap_se
from .data import (
    GwasRecord,
    SummaryDataError,
    SummaryDataset,
    ValidationReport,
    load_summary_tsv,
    ratio_estimates,
    screen_weak_ivs,
    write_summary_tsv,
)
from .estimator import MRLocal, as_summary_dataset, check_summary_array
from .estimators import (
    EstimatorOutput,
    WeakInstrumentError,
    avg_iv_strength,
    cluster_median,
    divw,
    divw_variance_balanced,
    divw_variance_plurality,
    ivw,
)
from .harness import (
    ALL_METHODS,
    MonteCarloReport,
    RepResult,
    monte_carlo,
    write_per_rep_tsv,
    write_report,
)
from .local_dist import (
    TruncNormalMoments,
    cluster,
    ks_statistic,
    q_statistic,
    skewness_statistic,
    trunc_normal_cdf,
    trunc_normal_moments,
    z_statistic,
    z_statistics,
)
from .simulate import (
    Balanced,
    FromEffects,
    MixtureBalanced,
    PointNormalDirectional,
    ScaledDirectional,
    SimulationSetting,
    SimulationTruth,
    generate,
    setting_a,
    setting_b,
    setting_c,
    setting_d,
    setting_e,
    setting_from_config,
    setting_from_effects,
    setting_to_config,
    write_truth_tsv,
)

__version__ = "0.1.0"

__all__ = [
    "ALL_METHODS",
    "Balanced",
    "BootstrapError",
    "BootstrapResult",
    "CandidateSet",
    "CausalEstimate",
    "ClusterEvaluation",
    "EstimatorOutput",
    "FromEffects",
    "GwasRecord",
    "MRLocal",
    "MixtureBalanced",
    "MonteCarloReport",
    "MrLocalConfig",
    "PATH_BALANCED",
    "PATH_PLURALITY",
    "PointNormalDirectional",
    "RepResult",
    "ScaledDirectional",
    "SimulationSetting",
    "SimulationTruth",
    "SummaryDataError",
    "SummaryDataset",
    "TruncNormalMoments",
    "ValidationReport",
    "WeakInstrumentError",
    "as_summary_dataset",
    "avg_iv_strength",
    "bootstrap_se",
    "candidate_grid",
    "check_summary_array",
    "cluster",
    "cluster_median",
    "divw",
    "divw_variance_balanced",
    "divw_variance_plurality",
    "effective_tau0",
    "generate",
    "ivw",
    "ks_statistic",
    "load_summary_tsv",
    "monte_carlo",
    "q_statistic",
    "ratio_estimates",
    "run_mr_local",
    "run_mr_local_plus",
    "screen_weak_ivs",
    "select_mode",
    "setting_a",
    "setting_b",
    "setting_c",
    "setting_d",
    "setting_e",
    "setting_from_config",
    "setting_from_effects",
    "setting_to_config",
    "skewness_statistic",
    "trunc_normal_cdf",
    "trunc_normal_moments",
    "uncertainty_test",
    "write_per_rep_tsv",
    "write_report",
    "write_summary_tsv",
    "write_truth_tsv",
    "z_statistic",
    "z_statistics",
]
