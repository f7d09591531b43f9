"""Monte Carlo experiment runner with paired methods and seeded replicates.

Every replicate simulates one dataset and hands the identical dataset to
each requested method, so method comparisons are paired. Replicate seeds
derive from (master_seed, replicate index) alone; aggregation runs in
replicate order, which makes reports byte-identical at any worker count.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np
from scipy.special import ndtri

from .algorithm import PATH_BALANCED, MrLocalConfig, run_mr_local
from .bootstrap import BootstrapError
from .data import SummaryDataError, SummaryDataset, screen_weak_ivs
from .estimators import (
    WeakInstrumentError,
    cluster_median,
    divw,
    divw_variance_balanced,
    ivw,
)
from .rng import STREAM_MEDIAN_SE, derive_seed, substream
from .simulate import SimulationSetting, SimulationTruth, generate

METHOD_MR_LOCAL = "mr_local"
METHOD_MR_LOCAL_PLUS = "mr_local_plus"
METHOD_DIVW_ALL = "divw_all"
METHOD_IVW_ALL = "ivw_all"
METHOD_CLUSTER_MEDIAN = "cluster_median"

ALL_METHODS = (
    METHOD_MR_LOCAL,
    METHOD_MR_LOCAL_PLUS,
    METHOD_DIVW_ALL,
    METHOD_IVW_ALL,
    METHOD_CLUSTER_MEDIAN,
)

_MEDIAN_SE_DRAWS = 200


@dataclass(frozen=True)
class RepResult:
    """One method's outcome on one replicate."""

    beta_hat: float
    ci_low: float
    ci_high: float
    sigma_hat: float
    path: str
    cluster_valid_frac: float
    error: str | None = None


@dataclass(frozen=True)
class MonteCarloReport:
    """Aggregated metrics for one method across replicates."""

    setting_name: str
    n_reps: int
    n_errors: int
    mae: float
    coverage: float
    coverage_mc_se: float
    mean_sd: float
    valid_prop: float
    empty_b_rate: float
    per_rep: tuple[RepResult, ...]


def _valid_frac(original_indices, truth: SimulationTruth) -> float:
    if len(original_indices) == 0:
        return 0.0
    hits = sum(1 for j in original_indices if int(j) in truth.valid_set)
    return hits / len(original_indices)


def _error_result(message: str) -> RepResult:
    nan = float("nan")
    return RepResult(nan, nan, nan, nan, "", nan, error=message)


def _mr_local_result(ds, truth, cfg) -> RepResult:
    try:
        est = run_mr_local(ds, cfg)
    except (SummaryDataError, WeakInstrumentError, BootstrapError) as exc:
        return _error_result(str(exc))
    original = est.diagnostics.kept[est.selected_cluster]
    return RepResult(
        beta_hat=est.beta_hat,
        ci_low=est.ci_low,
        ci_high=est.ci_high,
        sigma_hat=est.sigma_hat,
        path=est.path,
        cluster_valid_frac=_valid_frac(original, truth),
    )


def _baseline_screen(ds: SummaryDataset):
    threshold = math.sqrt(2.0 * math.log(ds.p))
    screened, removed = screen_weak_ivs(ds, threshold)
    kept = np.setdiff1d(np.arange(ds.p), np.array(removed, dtype=np.intp))
    return screened, kept


def _divw_all_result(ds, truth, alpha) -> RepResult:
    try:
        screened, kept = _baseline_screen(ds)
        members = np.arange(screened.p)
        beta = divw(screened, members)
        var, _ = divw_variance_balanced(screened, beta)
    except (SummaryDataError, WeakInstrumentError) as exc:
        return _error_result(str(exc))
    sigma = math.sqrt(var)
    z = float(ndtri(1.0 - alpha / 2.0))
    return RepResult(
        beta_hat=beta,
        ci_low=beta - z * sigma,
        ci_high=beta + z * sigma,
        sigma_hat=sigma,
        path="all",
        cluster_valid_frac=_valid_frac(kept, truth),
    )


def _ivw_all_result(ds, truth, alpha) -> RepResult:
    try:
        screened, kept = _baseline_screen(ds)
        out = ivw(screened, np.arange(screened.p))
    except (SummaryDataError, WeakInstrumentError) as exc:
        return _error_result(str(exc))
    z = float(ndtri(1.0 - alpha / 2.0))
    return RepResult(
        beta_hat=out.beta_hat,
        ci_low=out.beta_hat - z * out.sigma_hat,
        ci_high=out.beta_hat + z * out.sigma_hat,
        sigma_hat=out.sigma_hat,
        path="all",
        cluster_valid_frac=_valid_frac(kept, truth),
    )


def _cluster_median_result(ds, truth, cfg, rep_seed) -> RepResult:
    """Median of ratios in the selected cluster; SE by fixed-cluster redraws."""
    try:
        est = run_mr_local(ds, replace(cfg, bootstrap_reps=0))
        screened = ds.subset(est.diagnostics.kept)
        members = est.selected_cluster
        beta = cluster_median(screened, members)
    except (SummaryDataError, WeakInstrumentError, ValueError) as exc:
        return _error_result(str(exc))
    rng = substream(rep_seed, STREAM_MEDIAN_SE)
    gd = screened.gamma_d[members]
    sd = screened.sigma_d[members]
    gy = screened.gamma_y[members]
    sy = screened.sigma_y[members]
    draws = np.empty(_MEDIAN_SE_DRAWS)
    for i in range(_MEDIAN_SE_DRAWS):
        gd_star = gd + rng.standard_normal(gd.size) * sd
        gy_star = gy + rng.standard_normal(gy.size) * sy
        with np.errstate(divide="ignore", invalid="ignore"):
            draws[i] = np.median(gy_star / gd_star)
    sigma = float(np.std(draws, ddof=1))
    z = float(ndtri(1.0 - cfg.alpha / 2.0))
    original = est.diagnostics.kept[members]
    return RepResult(
        beta_hat=beta,
        ci_low=beta - z * sigma,
        ci_high=beta + z * sigma,
        sigma_hat=sigma,
        path=est.path,
        cluster_valid_frac=_valid_frac(original, truth),
    )


def _evaluate_replicate(setting, cfg, methods, rep_seed) -> dict[str, RepResult]:
    ds, truth = generate(setting, rep_seed)
    results: dict[str, RepResult] = {}
    for method in methods:
        if method == METHOD_MR_LOCAL:
            results[method] = _mr_local_result(ds, truth, replace(cfg, use_plus=False))
        elif method == METHOD_MR_LOCAL_PLUS:
            results[method] = _mr_local_result(ds, truth, replace(cfg, use_plus=True))
        elif method == METHOD_DIVW_ALL:
            results[method] = _divw_all_result(ds, truth, cfg.alpha)
        elif method == METHOD_IVW_ALL:
            results[method] = _ivw_all_result(ds, truth, cfg.alpha)
        elif method == METHOD_CLUSTER_MEDIAN:
            results[method] = _cluster_median_result(ds, truth, cfg, rep_seed)
        else:
            raise ValueError(f"unknown method {method!r}")
    return results


def _replicate_task(args):
    setting, cfg, methods, rep, master_seed = args
    rep_seed = derive_seed(master_seed, rep)
    return rep, _evaluate_replicate(setting, cfg, methods, rep_seed)


def _aggregate(setting, method_results, beta_true) -> MonteCarloReport:
    ok = [r for r in method_results if r.error is None]
    n_errors = len(method_results) - len(ok)
    if ok:
        mae = math.fsum(abs(r.beta_hat - beta_true) for r in ok) / len(ok)
        hits = [1.0 if r.ci_low <= beta_true <= r.ci_high else 0.0 for r in ok]
        coverage = math.fsum(hits) / len(ok)
        coverage_mc_se = math.sqrt(coverage * (1.0 - coverage) / len(ok))
        mean_sd = math.fsum(r.sigma_hat for r in ok) / len(ok)
        valid_prop = math.fsum(r.cluster_valid_frac for r in ok) / len(ok)
        empty_rate = math.fsum(
            1.0 for r in ok if r.path == PATH_BALANCED
        ) / len(ok)
    else:
        mae = coverage = coverage_mc_se = mean_sd = valid_prop = empty_rate = float("nan")
    return MonteCarloReport(
        setting_name=setting.name,
        n_reps=len(method_results),
        n_errors=n_errors,
        mae=mae,
        coverage=coverage,
        coverage_mc_se=coverage_mc_se,
        mean_sd=mean_sd,
        valid_prop=valid_prop,
        empty_b_rate=empty_rate,
        per_rep=tuple(method_results),
    )


def monte_carlo(
    setting: SimulationSetting,
    cfg: MrLocalConfig,
    methods,
    reps: int,
    master_seed: int,
    workers: int = 1,
) -> dict[str, MonteCarloReport]:
    """Run ``reps`` paired replicates of the requested methods.

    Results are identical for any ``workers`` value: replicate r depends
    only on (master_seed, r) and aggregation runs in replicate order.
    """
    if reps < 1:
        raise ValueError("reps must be at least 1")
    methods = tuple(methods)
    for method in methods:
        if method not in ALL_METHODS:
            raise ValueError(f"unknown method {method!r}")
    tasks = [(setting, cfg, methods, rep, master_seed) for rep in range(reps)]
    if workers <= 1:
        outcomes = [_replicate_task(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(_replicate_task, tasks))
    outcomes.sort(key=lambda item: item[0])
    per_method: dict[str, list[RepResult]] = {m: [] for m in methods}
    for _, rep_results in outcomes:
        for m in methods:
            per_method[m].append(rep_results[m])
    return {
        m: _aggregate(setting, per_method[m], setting.beta)
        for m in ALL_METHODS
        if m in per_method
    }


_METRIC_ORDER = (
    "n_reps",
    "n_errors",
    "mae",
    "coverage",
    "mean_sd",
    "valid_prop",
    "empty_b_rate",
)


def _metric_value(report: MonteCarloReport, metric: str):
    return getattr(report, metric)


def write_report(reports: dict[str, MonteCarloReport], path) -> None:
    """Tab-separated ``method metric value mc_se`` rows in canonical order.

    The Monte Carlo standard error column is filled for coverage only.
    """
    lines = ["method\tmetric\tvalue\tmc_se"]
    for method in ALL_METHODS:
        if method not in reports:
            continue
        report = reports[method]
        for metric in _METRIC_ORDER:
            value = _metric_value(report, metric)
            rendered = str(value) if isinstance(value, int) else repr(float(value))
            mc_se = repr(report.coverage_mc_se) if metric == "coverage" else ""
            lines.append(f"{method}\t{metric}\t{rendered}\t{mc_se}")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def write_per_rep_tsv(reports: dict[str, MonteCarloReport], path) -> None:
    """Per-replicate detail rows for plotting or auditing."""
    lines = ["method\trep\tbeta_hat\tci_low\tci_high\tsigma_hat\tpath\tcluster_valid_frac\terror"]
    for method in ALL_METHODS:
        if method not in reports:
            continue
        for rep, r in enumerate(reports[method].per_rep):
            err = "" if r.error is None else r.error
            lines.append(
                f"{method}\t{rep}\t{r.beta_hat!r}\t{r.ci_low!r}\t{r.ci_high!r}"
                f"\t{r.sigma_hat!r}\t{r.path}\t{r.cluster_valid_frac!r}\t{err}"
            )
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
