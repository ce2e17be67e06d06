import numpy as np
import pytest

from securedfl.models import MODEL_KINDS, LinearRegression, gradient_check, make_model


def _batch(kind, rng, dim=4, classes=3, m=12):
    X = rng.normal(size=(m, dim))
    y = rng.normal(size=m) if kind == "linear" else rng.integers(0, classes, size=m)
    return X, y


@pytest.mark.parametrize("kind", MODEL_KINDS)
def test_gradient_matches_finite_differences(kind):
    rng = np.random.default_rng(0)
    model = make_model(kind, 4, 3, hidden=5)
    worst = 0.0
    for _ in range(100):
        X, y = _batch(kind, rng)
        theta = rng.normal(size=model.size)
        worst = max(worst, gradient_check(model, theta, X, y))
    assert worst <= 1e-4


@pytest.mark.parametrize("kind", MODEL_KINDS)
def test_shapes_and_init(kind):
    model = make_model(kind, 6, 4, hidden=3)
    theta = model.init_params(np.random.default_rng(1))
    assert theta.shape == (model.size,)
    assert [p.shape for p in model.unflatten(theta)] == model.shapes


def test_linear_regression_exact():
    model = LinearRegression(2)
    X = np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])
    theta = np.array([2.0, -1.0, 0.5])
    y = X @ theta[:2] + 0.5
    loss, grad = model.loss_and_grad(theta, X, y)
    assert loss == 0.0 and np.all(grad == 0.0)
    assert model.accuracy(theta, X, y) is None


def test_logistic_predicts_argmax():
    model = make_model("logistic", 2, 2)
    theta = np.array([1.0, -1.0, -1.0, 1.0, 0.0, 0.0])
    X = np.array([[2.0, 0.0], [0.0, 2.0]])
    assert list(model.predict(theta, X)) == [0, 1]
    assert model.accuracy(theta, X, np.array([0, 1])) == 1.0


def test_unknown_kind():
    with pytest.raises(ValueError):
        make_model("cnn", 2)
