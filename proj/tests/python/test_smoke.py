import math

import numpy as np
import pytest

import survstack


def make_data(n=160, seed=5):
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(n, 2))
    t_event = np.exp(0.8 * x[:, 0] - 0.4 * x[:, 1] + 0.5 * rng.normal(size=n))
    c = rng.uniform(0.0, 6.0, size=n)
    time = np.minimum(t_event, c)
    event = t_event <= c
    return survstack.Dataset(time.tolist(), event.tolist(), x)


def test_dataset_basic():
    data = make_data()
    assert data.n == 160
    assert 0 < data.n_events <= 160


def test_dataset_rejects_nonpositive_time():
    with pytest.raises(survstack.SurvstackError):
        survstack.Dataset([1.0, 0.0], [True, True], np.ones((2, 1)))


def test_km_censoring_is_a_survival_curve():
    data = make_data()
    g = survstack.km_censoring(data)
    assert g(0.0) == 1.0
    values = [g(t) for t in np.linspace(0.01, 5.0, 20)]
    assert all(b <= a + 1e-12 for a, b in zip(values, values[1:]))


def test_fit_stack_weights_on_simplex():
    data = make_data()
    model = survstack.fit_stack(data, seed=11, n_trees=25)
    w = np.asarray(model.weights)
    assert w.shape == (4,)
    assert np.all(w >= -1e-12)
    assert math.isclose(w.sum(), 1.0, abs_tol=1e-8)
    assert model.candidate_ids == ["weibull", "lognormal", "cox", "rsf"]
    assert len(model.grid) == 9


def test_predictions_are_probabilities_and_monotone():
    data = make_data()
    model = survstack.fit_stack(data, seed=11, n_trees=25)
    x = np.zeros((3, 2))
    times = [0.25, 0.5, 1.0, 2.0, 4.0]
    s = model.predict(x, times)
    assert s.shape == (3, 5)
    assert np.all(s >= 0.0) and np.all(s <= 1.0)
    assert np.all(np.diff(s, axis=1) <= 1e-12)
    assert model.predict_one(np.zeros(2), 1e-9) == pytest.approx(1.0, abs=1e-6)


def test_save_load_round_trip(tmp_path):
    data = make_data()
    model = survstack.fit_stack(data, seed=3, n_trees=25)
    path = str(tmp_path / "model.json")
    survstack.save_stack(path, model, ["x1", "x2"])
    loaded, names = survstack.load_stack(path)
    assert names == ["x1", "x2"]
    x = np.array([[0.3, -0.2]])
    times = [0.5, 1.0, 2.0]
    assert np.allclose(model.predict(x, times), loaded.predict(x, times), atol=1e-12)


def test_metrics_against_hand_values():
    # Uncensored Brier: mean of squared residuals.
    assert survstack.brier_uncensored(
        [1.0, 0.0, 1.0], [0.8, 0.3, 0.6]
    ) == pytest.approx((0.04 + 0.09 + 0.16) / 3)

    # Without censoring the IPCW score reduces to the uncensored one.
    time = [1.0, 2.0, 3.0, 4.0]
    data = survstack.Dataset(time, [True] * 4, np.zeros((4, 1)))
    pred = np.full((4, 1), 0.5)
    b = survstack.brier_ipcw(data, pred, [2.5])
    z = [0.0, 0.0, 1.0, 1.0]
    assert b[0] == pytest.approx(survstack.brier_uncensored(z, [0.5] * 4))


def test_quantile_grid():
    q = survstack.empirical_quantiles([float(v) for v in range(1, 10)], [0.5])
    assert q == [5.0]
