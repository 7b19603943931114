import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from trajcast.estimators import JointForecaster, PedestrianForecaster
from trajcast.metrics import MetricsReport

from conftest import make_joint_scene, make_scene


def tiny_pedestrian():
    return PedestrianForecaster(
        epochs=2, iterations=1, embed_dim=8, noise_dim=4, batch_size=8
    )


def pedestrian_scenes(n=4):
    return [make_scene(2, t_obs=4, t_pred=4, seed=i) for i in range(n)]


def test_get_params_round_trip():
    est = tiny_pedestrian()
    params = est.get_params()
    assert params["epochs"] == 2 and params["iterations"] == 1
    est.set_params(epochs=5)
    assert est.epochs == 5
    cloned = clone(est)
    assert cloned.get_params() == est.get_params()


def test_predict_before_fit_raises():
    with pytest.raises(NotFittedError):
        tiny_pedestrian().predict(pedestrian_scenes(1))
    with pytest.raises(NotFittedError):
        JointForecaster().predict([make_joint_scene(seed=0)])


def test_pedestrian_fit_predict_score():
    scenes = pedestrian_scenes()
    est = tiny_pedestrian().fit(scenes)
    preds = est.predict(scenes)
    assert len(preds) == len(scenes)
    assert preds[0].shape == (2, 4, 2)
    assert est.score(scenes) <= 0  # negative ADE
    report = est.report(scenes, k=2)
    assert isinstance(report, MetricsReport) and report.k == 2


def test_pedestrian_fit_deterministic():
    scenes = pedestrian_scenes()
    a = tiny_pedestrian().fit(scenes).predict(scenes, seed=0)
    b = tiny_pedestrian().fit(scenes).predict(scenes, seed=0)
    for pa, pb in zip(a, b):
        np.testing.assert_array_equal(pa, pb)


def test_joint_fit_predict():
    samples = [make_joint_scene(n_actors=2, t_obs=5, t_pred=3, seed=i) for i in range(2)]
    est = JointForecaster(
        epochs=2, iterations=1, embed_dim=8, raster_size=32, batch_size=4
    )
    est.fit(samples)
    preds = est.predict(samples)
    assert len(preds) == 2
    assert preds[0].shape == (2, 3, 2)
    assert np.isfinite(preds[0]).all()
