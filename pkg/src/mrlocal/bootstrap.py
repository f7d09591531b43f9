"""Parametric bootstrap for the post-selection standard error.

Each replicate redraws the observed effects from their Gaussian measurement
model and reruns the whole pipeline, screening and cluster selection
included, so the spread of replicate estimates reflects selection
uncertainty and not just the weighting. Replicates that error out or fall
back to the balanced path are excluded from the spread and counted.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .algorithm import PATH_PLURALITY, MrLocalConfig, _fit_lean
from .data import SummaryDataError, SummaryDataset
from .estimators import WeakInstrumentError
from .rng import STREAM_BOOTSTRAP, substream


class BootstrapError(RuntimeError):
    """Raised when too few replicates produce a usable estimate."""


@dataclass(frozen=True)
class BootstrapResult:
    se: float
    n_success: int
    n_failed: int
    replicate_estimates: tuple[float, ...]


def bootstrap_se(ds: SummaryDataset, cfg: MrLocalConfig, reps: int) -> BootstrapResult:
    """Standard deviation of pipeline estimates over parametric redraws.

    Replicate r draws from a stream keyed by (cfg.seed, r) only, so results
    are identical however replicates are scheduled.
    """
    if reps < 2:
        raise ValueError("bootstrap needs at least 2 replicates")
    gd0, sd0 = ds.gamma_d, ds.sigma_d
    gy0, sy0 = ds.gamma_y, ds.sigma_y
    inner_cfg = replace(cfg, bootstrap_reps=0)
    estimates: list[float] = []
    n_failed = 0
    for r in range(reps):
        rng = substream(cfg.seed, STREAM_BOOTSTRAP, r)
        gd_star = gd0 + rng.standard_normal(ds.p) * sd0
        gy_star = gy0 + rng.standard_normal(ds.p) * sy0
        try:
            fit = _fit_lean(gy_star, gd_star, sy0, sd0, inner_cfg)
        except (SummaryDataError, WeakInstrumentError):
            n_failed += 1
            continue
        if fit.path != PATH_PLURALITY:
            n_failed += 1
            continue
        estimates.append(fit.beta_hat)
    if len(estimates) < 2:
        raise BootstrapError(
            f"bootstrap degenerate: {len(estimates)} of {reps} replicates usable"
        )
    mean = math.fsum(estimates) / len(estimates)
    var = math.fsum((x - mean) ** 2 for x in estimates) / (len(estimates) - 1)
    return BootstrapResult(
        se=math.sqrt(var),
        n_success=len(estimates),
        n_failed=n_failed,
        replicate_estimates=tuple(estimates),
    )
