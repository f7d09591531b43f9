import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from mrlocal import (
    MRLocal,
    MrLocalConfig,
    as_summary_dataset,
    check_summary_array,
    generate,
    run_mr_local,
    setting_a,
)


@pytest.fixture(scope="module")
def dataset():
    return generate(setting_a(0.1, p=300), 11)[0]


def as_array(ds):
    return np.column_stack([ds.gamma_d, ds.sigma_d, ds.gamma_y, ds.sigma_y])


class TestValidation:
    def test_accepts_well_formed_array(self, dataset):
        arr = check_summary_array(as_array(dataset))
        assert arr.shape == (300, 4)

    def test_rejects_bad_shapes(self):
        with pytest.raises(ValueError, match="shape"):
            check_summary_array(np.zeros((5, 3)))
        with pytest.raises(ValueError, match="shape"):
            check_summary_array(np.zeros(5))

    def test_rejects_nonfinite_and_bad_se(self):
        arr = np.array([[0.1, 0.05, 0.2, 0.04]])
        bad = arr.copy()
        bad[0, 0] = np.nan
        with pytest.raises(ValueError, match="finite"):
            check_summary_array(bad)
        bad = arr.copy()
        bad[0, 1] = 0.0
        with pytest.raises(ValueError, match="positive"):
            check_summary_array(bad)

    def test_dataset_passthrough(self, dataset):
        assert as_summary_dataset(dataset) is dataset

    def test_array_coercion_matches_columns(self, dataset):
        ds2 = as_summary_dataset(as_array(dataset))
        assert np.array_equal(ds2.gamma_d, dataset.gamma_d)
        assert np.array_equal(ds2.sigma_y, dataset.sigma_y)


class TestEstimatorApi:
    def test_get_set_params_and_clone(self):
        est = MRLocal(c_beta=2.0, bootstrap_reps=10)
        params = est.get_params()
        assert params["c_beta"] == 2.0
        assert params["bootstrap_reps"] == 10
        cloned = clone(est)
        assert cloned.get_params() == params
        est.set_params(tau0=2.0)
        assert est.tau0 == 2.0

    def test_fit_exposes_estimate(self, dataset):
        est = MRLocal().fit(dataset)
        assert est.beta_hat_ == pytest.approx(0.1, abs=0.08)
        assert est.ci_[0] < est.beta_hat_ < est.ci_[1]
        assert est.path_ in ("plurality", "balanced_fallback")
        assert est.n_snps_ == 300

    def test_fit_matches_functional_pipeline(self, dataset):
        est = MRLocal(seed=5).fit(dataset)
        reference = run_mr_local(dataset, MrLocalConfig(seed=5))
        assert est.beta_hat_ == reference.beta_hat
        assert est.sigma_hat_ == reference.sigma_hat

    def test_fit_accepts_array(self, dataset):
        est = MRLocal().fit(as_array(dataset))
        assert est.beta_hat_ == MRLocal().fit(dataset).beta_hat_

    def test_predict_scales_exposure_effects(self, dataset):
        est = MRLocal().fit(dataset)
        exposure = np.array([0.0, 1.0, -2.0])
        np.testing.assert_allclose(est.predict(exposure), est.beta_hat_ * exposure)
        full = est.predict(as_array(dataset))
        np.testing.assert_allclose(full, est.beta_hat_ * dataset.gamma_d)

    def test_predict_before_fit_raises(self):
        with pytest.raises(NotFittedError):
            MRLocal().predict(np.array([1.0]))
