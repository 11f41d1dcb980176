import numpy as np
import pytest
from sklearn.base import clone

from gravclean import (
    AdaptiveGravityDenoiser,
    GravityThresholdDenoiser,
    NoiseSpec,
    contaminate,
    make_sphere_shell,
)


@pytest.fixture(scope="module")
def noisy_points():
    shell = make_sphere_shell(3000, seed=5)
    noisy = contaminate(shell, NoiseSpec(random_ratio=0.10, seed=6, bbox_expand=3.0))
    return noisy.xyz, noisy.labels


def test_fit_predict_labels(noisy_points):
    X, is_noise = noisy_points
    est = AdaptiveGravityDenoiser()
    labels = est.fit_predict(X)
    assert labels.shape == (len(X),)
    assert set(np.unique(labels).tolist()) <= {-1, 1}
    # most injected noise is flagged as outlier
    assert (labels[is_noise] == -1).mean() > 0.8
    assert (labels[~is_noise] == 1).mean() > 0.98


def test_fit_exposes_attributes(noisy_points):
    X, _ = noisy_points
    est = AdaptiveGravityDenoiser().fit(X)
    assert est.labels_.shape == (len(X),)
    assert np.array_equal(np.flatnonzero(est.labels_ == 1), est.inlier_indices_)
    assert est.report_.counts["n_input"] == len(X)
    assert est.n_features_in_ == 3


def test_get_set_params_roundtrip():
    est = AdaptiveGravityDenoiser(k=20, lam=0.9)
    params = est.get_params()
    assert params["k"] == 20 and params["lam"] == 0.9
    est.set_params(k=8)
    assert est.k == 8


def test_clone_compatible(noisy_points):
    X, _ = noisy_points
    est = AdaptiveGravityDenoiser(q=1.0, threads=2)
    est2 = clone(est)
    assert est2.get_params() == est.get_params()
    a = est.fit_predict(X)
    b = est2.fit_predict(X)
    assert np.array_equal(a, b)


def test_stage_toggles_as_params(noisy_points):
    X, _ = noisy_points
    est = AdaptiveGravityDenoiser(a1_voxel=False, a2_density=False, a3_gravity=False)
    labels = est.fit_predict(X)
    assert (labels == 1).all()  # no stages -> identity


def test_invalid_input_rejected():
    est = AdaptiveGravityDenoiser()
    with pytest.raises(ValueError):
        est.fit(np.zeros((4, 2)))
    with pytest.raises(ValueError):
        est.fit(np.array([[0.0, 0.0, np.nan]]))


def test_baseline_estimator(noisy_points):
    X, _ = noisy_points
    est = GravityThresholdDenoiser()
    labels = est.fit_predict(X)
    assert labels.shape == (len(X),)
    assert np.array_equal(np.flatnonzero(labels == 1), est.inlier_indices_)


def test_baseline_estimator_params():
    est = GravityThresholdDenoiser(alpha_threshold=50.0)
    assert clone(est).get_params()["alpha_threshold"] == 50.0
