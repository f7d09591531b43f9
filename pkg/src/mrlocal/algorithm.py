"""Full causal-inference pipeline: candidate grid, uncertainty test, selection.

The pipeline sweeps candidate effect values over a grid, forms the cluster
of instruments consistent with each candidate, and tests whether the
cluster's standardized residuals have the dispersion of the truncated
normal reference law. Candidates passing that uncertainty test (and a
minimum-size floor) are eligible; the one with the largest cluster wins
and the debiased IVW estimator runs inside its cluster. When no candidate
passes, the pleiotropy is treated as balanced and all instruments are
pooled with a suitably inflated variance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.special import ndtri

from . import estimators
from ._kernels import grid_stats, z_squared
from .data import SummaryDataset, SummaryDataError
from .estimators import WeakInstrumentError
from .local_dist import TruncNormalMoments, trunc_normal_moments

PATH_PLURALITY = "plurality"
PATH_BALANCED = "balanced_fallback"

_MOMENTS_CACHE: dict[float, TruncNormalMoments] = {}


def _cached_moments(tau0: float) -> TruncNormalMoments:
    mom = _MOMENTS_CACHE.get(tau0)
    if mom is None:
        mom = trunc_normal_moments(tau0)
        if len(_MOMENTS_CACHE) < 128:
            _MOMENTS_CACHE[tau0] = mom
    return mom


@dataclass(frozen=True)
class MrLocalConfig:
    """Tuning parameters for the pipeline.

    c_beta bounds the search range [-c_beta, c_beta]; tau0 is the cluster
    bandwidth in standard-deviation units ("theory" mode replaces it with
    1.5*sqrt(2*log p) for the asymptotic regime); slack_scale multiplies an
    optional slack_scale/log(p) allowance added to the uncertainty-test
    threshold for systematically biased summary statistics. The default
    keeps only the limiting-distribution threshold: any positive allowance
    materially weakens detection of balanced pleiotropy at realistic
    instrument counts.
    """

    c_beta: float = 1.0
    tau0: float = 1.6
    tau0_mode: str = "fixed"
    grid_size: int | None = None
    alpha: float = 0.05
    use_plus: bool = False
    screen: bool = True
    slack_scale: float = 0.0
    bootstrap_reps: int = 0
    seed: int = 0

    def __post_init__(self):
        if self.c_beta <= 0:
            raise ValueError("c_beta must be positive")
        if self.tau0 <= 0:
            raise ValueError("tau0 must be positive")
        if self.tau0_mode not in ("fixed", "theory"):
            raise ValueError("tau0_mode must be 'fixed' or 'theory'")
        if self.grid_size is not None and self.grid_size < 2:
            raise ValueError("grid_size must be at least 2")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must be in (0, 1)")
        if self.slack_scale < 0:
            raise ValueError("slack_scale must be nonnegative")
        if self.bootstrap_reps < 0:
            raise ValueError("bootstrap_reps must be nonnegative")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must fit in an unsigned 64-bit integer")


@dataclass(frozen=True)
class ClusterEvaluation:
    """Diagnostics of one candidate effect value."""

    b: float
    members: np.ndarray
    q: float
    ks: float | None
    skew: float | None
    passed_uncertainty: bool
    passed_size: bool


@dataclass(frozen=True)
class CandidateSet:
    """Grid-wide diagnostics plus the subset passing the uncertainty test."""

    grid: tuple[ClusterEvaluation, ...]
    b_set: tuple[float, ...]
    size_floor: int
    p_used: int
    kept: np.ndarray
    tau0: float
    moments: TruncNormalMoments


@dataclass(frozen=True)
class CausalEstimate:
    """Final estimate with its selection path and diagnostics."""

    beta_hat: float
    sigma_hat: float
    ci_low: float
    ci_high: float
    path: str
    selected_b: float | None
    selected_cluster: np.ndarray
    analytic_sigma: float
    sigma_pi_hat: float | None
    bootstrap_sigma: float | None
    n_input: int
    n_used: int
    diagnostics: CandidateSet


def candidate_grid(c_beta: float, m: int) -> np.ndarray:
    """Strictly increasing candidates -c_beta + 2*c_beta*j/m for j = 1..m.

    Excludes -c_beta, includes +c_beta exactly.
    """
    if c_beta <= 0:
        raise ValueError("c_beta must be positive")
    if m < 2:
        raise ValueError("grid needs at least 2 points")
    return -c_beta + (2.0 * c_beta) * (np.arange(1, m + 1) / m)


def effective_tau0(cfg: MrLocalConfig, p: int) -> float:
    """Bandwidth actually used: fixed value or the log-scaled theory rule."""
    if cfg.tau0_mode == "theory":
        return 1.5 * math.sqrt(2.0 * math.log(p))
    return cfg.tau0


@dataclass(frozen=True)
class _Profile:
    """Internal per-run state shared by the lean and diagnostic paths."""

    gy: np.ndarray
    gd: np.ndarray
    sy: np.ndarray
    sd: np.ndarray
    sy2: np.ndarray
    sd2: np.ndarray
    kept: np.ndarray
    p_used: int
    tau0: float
    moments: TruncNormalMoments
    bgrid: np.ndarray
    counts: np.ndarray
    q: np.ndarray
    skew_std: np.ndarray | None
    pass_uncertainty: np.ndarray
    pass_size: np.ndarray
    size_floor: int


def _build_profile(gy, gd, sy, sd, cfg: MrLocalConfig) -> _Profile:
    p_input = gy.shape[0]
    if p_input < 1:
        raise SummaryDataError("empty dataset")
    tau0 = effective_tau0(cfg, p_input)
    if cfg.screen:
        keep = np.abs(gd) / sd >= tau0
        if not keep.any():
            raise SummaryDataError("no instruments survive screening")
        kept = np.flatnonzero(keep)
        gy, gd, sy, sd = gy[kept], gd[kept], sy[kept], sd[kept]
    else:
        kept = np.arange(p_input)
    p_used = gy.shape[0]
    if p_used < 2:
        raise SummaryDataError("fewer than 2 instruments available to the pipeline")
    moments = _cached_moments(tau0)
    m = cfg.grid_size if cfg.grid_size is not None else max(p_used, 2000)
    bgrid = candidate_grid(cfg.c_beta, m)
    sy2 = sy * sy
    sd2 = sd * sd
    counts, sq_sums, cube_sums = grid_stats(
        gy, gd, sy2, sd2, bgrid, tau0 * tau0, cfg.use_plus
    )
    logp = math.log(p_used)
    size_floor = math.ceil(math.sqrt(p_used))
    with np.errstate(divide="ignore", invalid="ignore"):
        q = sq_sums / (counts * moments.g)
        tol = moments.sigma_q * np.sqrt(logp / counts) + cfg.slack_scale / logp
        pass_uncertainty = np.abs(q - 1.0) <= tol
    skew_std = None
    if cfg.use_plus:
        with np.errstate(divide="ignore", invalid="ignore"):
            skew_std = cube_sums / np.sqrt(counts * moments.m6)
            pass_uncertainty = pass_uncertainty & (np.abs(skew_std) <= math.sqrt(logp))
    pass_size = counts >= size_floor
    return _Profile(
        gy=gy, gd=gd, sy=sy, sd=sd, sy2=sy2, sd2=sd2,
        kept=kept, p_used=p_used, tau0=tau0, moments=moments, bgrid=bgrid,
        counts=counts, q=q, skew_std=skew_std,
        pass_uncertainty=pass_uncertainty, pass_size=pass_size,
        size_floor=size_floor,
    )


def _select_index(prof: _Profile) -> int | None:
    """Grid index of the winning candidate, or None when none passes.

    Largest cluster wins; ties break to the best-calibrated dispersion
    (smallest |Q-1|), then to the smallest |b|, then to the lowest index.
    """
    eligible = np.flatnonzero(prof.pass_uncertainty & prof.pass_size)
    if eligible.size == 0:
        return None
    counts = prof.counts[eligible]
    eligible = eligible[counts == counts.max()]
    if eligible.size > 1:
        dq = np.abs(prof.q[eligible] - 1.0)
        eligible = eligible[dq == dq.min()]
    if eligible.size > 1:
        babs = np.abs(prof.bgrid[eligible])
        eligible = eligible[babs == babs.min()]
    return int(eligible[0])


def _members_at(prof: _Profile, b: float) -> np.ndarray:
    z2 = z_squared(prof.gy, prof.gd, prof.sy2, prof.sd2, float(b))
    return np.flatnonzero(z2 <= prof.tau0 * prof.tau0)


@dataclass(frozen=True)
class _LeanFit:
    path: str
    beta_hat: float
    variance: float
    pi_variance: float | None
    selected_b: float | None
    members: np.ndarray
    prof: _Profile


def _fit_lean(gy, gd, sy, sd, cfg: MrLocalConfig) -> _LeanFit:
    prof = _build_profile(gy, gd, sy, sd, cfg)
    sel = _select_index(prof)
    if sel is not None:
        b_hat = float(prof.bgrid[sel])
        members = _members_at(prof, b_hat)
        cols = (prof.gd[members], prof.sd[members], prof.gy[members], prof.sy[members])
        beta = estimators._divw_core(*cols)
        var = estimators._var_plurality_core(*cols, beta)
        return _LeanFit(PATH_PLURALITY, beta, var, None, b_hat, members, prof)
    members = np.arange(prof.p_used)
    cols = (prof.gd, prof.sd, prof.gy, prof.sy)
    beta = estimators._divw_core(*cols)
    var, pi_var = estimators._var_balanced_core(*cols, beta)
    return _LeanFit(PATH_BALANCED, beta, var, pi_var, None, members, prof)


def _candidate_set(prof: _Profile) -> CandidateSet:
    evaluations = []
    b_set = []
    for i, b in enumerate(prof.bgrid):
        members = _members_at(prof, float(b))
        skew = None if prof.skew_std is None else float(prof.skew_std[i])
        ev = ClusterEvaluation(
            b=float(b),
            members=members,
            q=float(prof.q[i]),
            ks=None,
            skew=skew,
            passed_uncertainty=bool(prof.pass_uncertainty[i]),
            passed_size=bool(prof.pass_size[i]),
        )
        evaluations.append(ev)
        if ev.passed_uncertainty and ev.passed_size:
            b_set.append(float(b))
    return CandidateSet(
        grid=tuple(evaluations),
        b_set=tuple(b_set),
        size_floor=prof.size_floor,
        p_used=prof.p_used,
        kept=prof.kept,
        tau0=prof.tau0,
        moments=prof.moments,
    )


def uncertainty_test(ds: SummaryDataset, cfg: MrLocalConfig) -> CandidateSet:
    """Evaluate every grid candidate and report which pass the uncertainty test.

    Screening (when enabled) happens first; cluster member indexes refer to
    the post-screen dataset and ``kept`` maps them back to input positions.
    """
    prof = _build_profile(ds.gamma_y, ds.gamma_d, ds.sigma_y, ds.sigma_d, cfg)
    return _candidate_set(prof)


def select_mode(cand: CandidateSet) -> float | None:
    """Candidate with the largest passing cluster, or None when none passes."""
    best = None
    for i, ev in enumerate(cand.grid):
        if not (ev.passed_uncertainty and ev.passed_size):
            continue
        key = (-ev.members.size, abs(ev.q - 1.0), abs(ev.b), i)
        if best is None or key < best[0]:
            best = (key, ev.b)
    return None if best is None else best[1]


def run_mr_local(ds: SummaryDataset, cfg: MrLocalConfig) -> CausalEstimate:
    """Run the full pipeline and assemble the estimate with diagnostics.

    On the plurality path with ``bootstrap_reps > 0`` the reported standard
    error is the parametric bootstrap one (post-selection honest); the
    closed-form value remains available as ``analytic_sigma``.
    """
    lean = _fit_lean(ds.gamma_y, ds.gamma_d, ds.sigma_y, ds.sigma_d, cfg)
    analytic_sigma = math.sqrt(lean.variance)
    bootstrap_sigma = None
    if lean.path == PATH_PLURALITY and cfg.bootstrap_reps > 0:
        from .bootstrap import bootstrap_se

        bootstrap_sigma = bootstrap_se(ds, cfg, cfg.bootstrap_reps).se
        sigma = bootstrap_sigma
    else:
        sigma = analytic_sigma
    z = float(ndtri(1.0 - cfg.alpha / 2.0))
    pi_sigma = None if lean.pi_variance is None else math.sqrt(lean.pi_variance)
    return CausalEstimate(
        beta_hat=lean.beta_hat,
        sigma_hat=sigma,
        ci_low=lean.beta_hat - z * sigma,
        ci_high=lean.beta_hat + z * sigma,
        path=lean.path,
        selected_b=lean.selected_b,
        selected_cluster=lean.members,
        analytic_sigma=analytic_sigma,
        sigma_pi_hat=pi_sigma,
        bootstrap_sigma=bootstrap_sigma,
        n_input=ds.p,
        n_used=lean.prof.p_used,
        diagnostics=_candidate_set(lean.prof),
    )


def run_mr_local_plus(ds: SummaryDataset, cfg: MrLocalConfig) -> CausalEstimate:
    """Pipeline variant adding the skewness gate to the uncertainty test."""
    return run_mr_local(ds, replace(cfg, use_plus=True))
