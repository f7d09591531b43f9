"""Scikit-learn style front end for the causal-effect pipeline.

``MRLocal`` is a fit-shaped estimator: ``fit`` consumes per-SNP summary
statistics (a SummaryDataset, or an array with columns beta_exposure,
se_exposure, beta_outcome, se_outcome) and exposes the fitted effect,
interval, and selection diagnostics as attributes. ``predict`` maps
exposure effects to outcome effects through the fitted causal channel,
and get_params/set_params/clone work as usual so the estimator composes
with the wider ecosystem.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .algorithm import MrLocalConfig, run_mr_local
from .data import GwasRecord, SummaryDataset


def check_summary_array(X) -> np.ndarray:
    """Validate an array-like of shape (n_snps, 4) of summary statistics."""
    arr = np.asarray(X, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[1] != 4:
        raise ValueError(
            "expected shape (n_snps, 4): beta_exposure, se_exposure, "
            f"beta_outcome, se_outcome; got {arr.shape}"
        )
    if arr.shape[0] < 1:
        raise ValueError("need at least one SNP")
    if not np.isfinite(arr).all():
        raise ValueError("summary statistics must be finite")
    if (arr[:, 1] <= 0).any() or (arr[:, 3] <= 0).any():
        raise ValueError("standard errors must be strictly positive")
    return arr


def as_summary_dataset(X) -> SummaryDataset:
    """Coerce a SummaryDataset or (n_snps, 4) array into a SummaryDataset."""
    if isinstance(X, SummaryDataset):
        return X
    arr = check_summary_array(X)
    width = max(6, len(str(arr.shape[0])))
    return SummaryDataset(
        GwasRecord(f"snp{j + 1:0{width}d}", float(gd), float(sd), float(gy), float(sy))
        for j, (gd, sd, gy, sy) in enumerate(arr)
    )


class MRLocal(BaseEstimator):
    """Causal-effect estimator selecting the lowest-uncertainty ratio cluster.

    Parameters mirror MrLocalConfig; see that class for semantics. After
    ``fit`` the instance carries ``beta_hat_``, ``sigma_hat_``, ``ci_``,
    ``path_``, and the full ``estimate_`` with grid diagnostics.
    """

    def __init__(self, c_beta=1.0, tau0=1.6, tau0_mode="fixed", grid_size=None,
                 alpha=0.05, use_plus=False, screen=True, slack_scale=0.0,
                 bootstrap_reps=0, seed=0):
        self.c_beta = c_beta
        self.tau0 = tau0
        self.tau0_mode = tau0_mode
        self.grid_size = grid_size
        self.alpha = alpha
        self.use_plus = use_plus
        self.screen = screen
        self.slack_scale = slack_scale
        self.bootstrap_reps = bootstrap_reps
        self.seed = seed

    def _config(self) -> MrLocalConfig:
        return MrLocalConfig(**self.get_params())

    def fit(self, X, y=None):
        """Estimate the causal effect from two-sample summary statistics."""
        ds = as_summary_dataset(X)
        estimate = run_mr_local(ds, self._config())
        self.estimate_ = estimate
        self.beta_hat_ = estimate.beta_hat
        self.sigma_hat_ = estimate.sigma_hat
        self.ci_ = (estimate.ci_low, estimate.ci_high)
        self.path_ = estimate.path
        self.n_snps_ = ds.p
        self.n_used_ = estimate.n_used
        return self

    def predict(self, X) -> np.ndarray:
        """Outcome effects implied by exposure effects through the causal channel.

        Accepts a 1-d array of exposure effects or the same (n_snps, 4)
        layout as ``fit`` (then the exposure column is used).
        """
        if not hasattr(self, "estimate_"):
            raise NotFittedError("MRLocal must be fitted before calling predict")
        if isinstance(X, SummaryDataset):
            exposure = X.gamma_d
        else:
            arr = np.asarray(X, dtype=np.float64)
            exposure = check_summary_array(arr)[:, 0] if arr.ndim == 2 else arr
        return self.beta_hat_ * exposure
