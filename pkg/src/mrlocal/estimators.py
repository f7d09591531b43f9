"""Point and variance estimators for summary-data causal effects.

The workhorse is the debiased inverse-variance-weighted (dIVW) estimator,
which subtracts the exposure measurement variance in the denominator to
stay consistent under weak instruments. Two variance estimators are
provided: one for a selected (assumed valid) cluster and one for the
all-instrument fallback under balanced pleiotropy, which inflates the
outcome noise by an estimated pleiotropy variance. All reductions use
compensated summation (math.fsum) so results are reproducible at scale.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .data import SummaryDataset


class WeakInstrumentError(RuntimeError):
    """Raised when the debiased denominator is nonpositive."""


@dataclass(frozen=True)
class EstimatorOutput:
    beta_hat: float
    sigma_hat: float
    n_used: int
    method: str

    def __post_init__(self):
        if self.n_used < 1:
            raise ValueError("n_used must be at least 1")
        if not math.isfinite(self.sigma_hat):
            raise ValueError("sigma_hat must be finite")


def _fsum(arr) -> float:
    return math.fsum(np.asarray(arr, dtype=np.float64).tolist())


def _columns(ds: SummaryDataset, members):
    members = np.asarray(members, dtype=np.intp)
    if members.size == 0:
        raise ValueError("empty member set")
    return (
        ds.gamma_d[members],
        ds.sigma_d[members],
        ds.gamma_y[members],
        ds.sigma_y[members],
    )


def _divw_denominator(gd, sd, sy) -> float:
    return _fsum((gd * gd - sd * sd) / (sy * sy))


def _divw_core(gd, sd, gy, sy) -> float:
    num = _fsum(gd * gy / (sy * sy))
    den = _divw_denominator(gd, sd, sy)
    if den <= 0:
        raise WeakInstrumentError("weak-instrument degeneracy: debiased denominator <= 0")
    return num / den


def _var_plurality_core(gd, sd, gy, sy, beta_hat: float) -> float:
    sy2 = sy * sy
    sd2 = sd * sd
    gd2 = gd * gd
    num = _fsum((sy2 * gd2 + beta_hat * beta_hat * sd2 * (gd2 + sd2)) / (sy2 * sy2))
    den = _divw_denominator(gd, sd, sy)
    if den <= 0:
        raise WeakInstrumentError("weak-instrument degeneracy: debiased denominator <= 0")
    return num / (den * den)


def _var_balanced_core(gd, sd, gy, sy, beta_hat: float) -> tuple[float, float]:
    sy2 = sy * sy
    sd2 = sd * sd
    gd2 = gd * gd
    resid = gy - beta_hat * gd
    w = 1.0 / sy2
    pi_var_raw = _fsum((resid * resid - sy2 - beta_hat * beta_hat * sd2) * w) / _fsum(w)
    pi_var = max(pi_var_raw, 0.0)
    num = _fsum(((sy2 + pi_var) * gd2 + beta_hat * beta_hat * sd2 * (gd2 + sd2)) / (sy2 * sy2))
    den = _divw_denominator(gd, sd, sy)
    if den <= 0:
        raise WeakInstrumentError("weak-instrument degeneracy: debiased denominator <= 0")
    return num / (den * den), pi_var


def divw(ds: SummaryDataset, members) -> float:
    """Debiased IVW point estimate over the given instruments.

    Raises WeakInstrumentError when the debiased denominator is
    nonpositive, which signals catastrophically weak instruments.
    """
    gd, sd, gy, sy = _columns(ds, members)
    return _divw_core(gd, sd, gy, sy)


def divw_variance_plurality(ds: SummaryDataset, members, beta_hat: float) -> float:
    """Variance of the dIVW estimate treating the member cluster as valid."""
    gd, sd, gy, sy = _columns(ds, members)
    return _var_plurality_core(gd, sd, gy, sy, beta_hat)


def divw_variance_balanced(ds: SummaryDataset, beta_hat: float) -> tuple[float, float]:
    """Variance of the all-instrument dIVW estimate under balanced pleiotropy.

    Returns ``(beta_variance, pi_variance)``. The pleiotropy variance is a
    method-of-moments estimate (precision-weighted mean of squared residuals
    minus the measurement variances), clamped at zero when negative; the
    effect variance inflates the outcome noise by it and reduces to the
    cluster formula when it is zero.
    """
    gd, sd, gy, sy = _columns(ds, np.arange(ds.p))
    return _var_balanced_core(gd, sd, gy, sy, beta_hat)


def cluster_median(ds: SummaryDataset, members) -> float:
    """Median of the per-instrument effect ratios within the member set.

    Even counts take the midpoint of the two central order statistics.
    """
    gd, sd, gy, sy = _columns(ds, members)
    if np.any(gd == 0):
        raise ValueError("cluster member with zero exposure effect has no ratio")
    return float(np.median(gy / gd))


def ivw(ds: SummaryDataset, members) -> EstimatorOutput:
    """Classic inverse-variance-weighted estimate (no weak-instrument debias)."""
    gd, sd, gy, sy = _columns(ds, members)
    sy2 = sy * sy
    num = _fsum(gd * gy / sy2)
    den = _fsum(gd * gd / sy2)
    if den <= 0:
        raise WeakInstrumentError("IVW denominator <= 0")
    return EstimatorOutput(
        beta_hat=num / den,
        sigma_hat=math.sqrt(1.0 / den),
        n_used=int(np.asarray(members).size),
        method="IVW",
    )


def avg_iv_strength(ds: SummaryDataset, members) -> float:
    """Mean squared exposure z-ratio over the member set (diagnostic).

    Uses the plug-in squared effect without debiasing; subtract 1 per term
    for an approximately unbiased version.
    """
    gd, sd, gy, sy = _columns(ds, members)
    return _fsum((gd * gd) / (sd * sd)) / gd.size
