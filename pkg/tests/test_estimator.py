import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from barrier_pairs import BarrierPairSynthesizer, DoubleSpringMass, combined_control, min_eval


@pytest.fixture(scope="module")
def fitted():
    X = np.column_stack([np.linspace(-0.6, 0.6, 5), np.zeros(5)])
    return BarrierPairSynthesizer().fit(X)


def test_params_round_trip():
    est = BarrierPairSynthesizer(plant="springmass", lam=0.2, strategy="logdet")
    params = est.get_params()
    assert params["lam"] == 0.2 and params["plant"] == "springmass"
    copy = clone(est)
    assert copy.get_params() == params
    copy.set_params(lam=0.3)
    assert copy.lam == 0.3 and est.lam == 0.2


def test_fit_attributes(fitted):
    assert fitted.n_pairs_ == 5 and fitted.n_features_in_ == 2
    assert fitted.skipped_ == ()
    assert fitted.config_.lam == 0.1


def test_outputs_match_functional_api(fitted, rng):
    X = rng.uniform(-1, 1, (20, 2))
    np.testing.assert_array_equal(fitted.decision_function(X), min_eval(fitted.bank_, X)[0])
    np.testing.assert_array_equal(fitted.predict(X), combined_control(fitted.bank_, X)[0])
    np.testing.assert_array_equal(fitted.active_pair(X), min_eval(fitted.bank_, X)[1])
    values = fitted.transform(X)
    assert values.shape == (20, 5)
    np.testing.assert_array_equal(values.min(axis=1), fitted.decision_function(X))


def test_validation(fitted):
    with pytest.raises(ValueError):
        fitted.predict(np.zeros((3, 4)))
    with pytest.raises(ValueError):
        fitted.predict([[np.nan, 0.0]])
    with pytest.raises(NotFittedError):
        BarrierPairSynthesizer().predict([[0.0, 0.0]])
    with pytest.raises(ValueError):
        BarrierPairSynthesizer().fit(np.zeros((2, 3)))
    with pytest.raises(ValueError):
        BarrierPairSynthesizer(lam=-1).fit([[0.0, 0.0]])
    with pytest.raises(TypeError):
        BarrierPairSynthesizer(plant=3).fit([[0.0, 0.0]])
    with pytest.raises(ValueError):
        BarrierPairSynthesizer(plant=DoubleSpringMass(), plant_params={"K": 2}).fit([[0, 0, 0, 0]])


def test_plant_params_forwarded():
    est = BarrierPairSynthesizer(plant="pendulum", plant_params={"tau_max": 6.0}).fit([[0.0, 0.0], [0.9, 0.0]])
    assert est.n_pairs_ == 1 and len(est.skipped_) == 1
