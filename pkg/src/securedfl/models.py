"""Small differentiable models with hand-written gradients.

Parameters travel as one flat float64 vector so they can be aggregated like
any other :class:`~securedfl.params.ParamVector`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

LINEAR = "linear"
LOGISTIC = "logistic"
MLP = "mlp"
MODEL_KINDS = (LINEAR, LOGISTIC, MLP)


def _softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def _cross_entropy(probs: np.ndarray, y: np.ndarray) -> float:
    return float(-np.mean(np.log(probs[np.arange(len(y)), y] + 1e-300)))


@dataclass(frozen=True)
class Model:
    """Base class: subclasses define ``shapes``, ``forward`` and ``loss_and_grad``."""

    dim: int

    @property
    def shapes(self) -> list[tuple[int, ...]]:
        raise NotImplementedError

    @property
    def size(self) -> int:
        return sum(int(np.prod(s)) for s in self.shapes)

    def unflatten(self, theta: np.ndarray) -> list[np.ndarray]:
        out, start = [], 0
        for shape in self.shapes:
            stop = start + int(np.prod(shape))
            out.append(theta[start:stop].reshape(shape))
            start = stop
        return out

    def init_params(self, rng: np.random.Generator) -> np.ndarray:
        parts = []
        for shape in self.shapes:
            scale = 1.0 / np.sqrt(shape[0]) if len(shape) == 2 else 0.0
            parts.append((rng.normal(size=shape) * scale).ravel())
        return np.concatenate(parts)

    def loss(self, theta, X, y) -> float:
        return self.loss_and_grad(theta, X, y)[0]

    def loss_and_grad(self, theta, X, y) -> tuple[float, np.ndarray]:
        raise NotImplementedError

    def predict(self, theta, X) -> np.ndarray:
        raise NotImplementedError

    def accuracy(self, theta, X, y) -> float | None:
        return float(np.mean(self.predict(theta, X) == y))


@dataclass(frozen=True)
class LinearRegression(Model):
    """Least squares, loss ``0.5 * mean((X w + b - y)^2)``."""

    @property
    def shapes(self):
        return [(self.dim,), (1,)]

    def init_params(self, rng):
        return np.zeros(self.size)

    def predict(self, theta, X):
        w, b = self.unflatten(theta)
        return X @ w + b[0]

    def loss_and_grad(self, theta, X, y):
        resid = self.predict(theta, X) - y
        m = len(y)
        loss = 0.5 * float(resid @ resid) / m
        return loss, np.concatenate([X.T @ resid / m, [resid.sum() / m]])

    def accuracy(self, theta, X, y):
        return None


@dataclass(frozen=True)
class LogisticRegression(Model):
    """Multinomial logistic regression with softmax cross-entropy."""

    classes: int = 2

    @property
    def shapes(self):
        return [(self.dim, self.classes), (self.classes,)]

    def logits(self, theta, X):
        W, b = self.unflatten(theta)
        return X @ W + b

    def predict(self, theta, X):
        return np.argmax(self.logits(theta, X), axis=1)

    def loss_and_grad(self, theta, X, y):
        probs = _softmax(self.logits(theta, X))
        loss = _cross_entropy(probs, y)
        delta = probs
        delta[np.arange(len(y)), y] -= 1.0
        delta /= len(y)
        return loss, np.concatenate([(X.T @ delta).ravel(), delta.sum(axis=0)])


@dataclass(frozen=True)
class TwoLayerPerceptron(Model):
    """One tanh hidden layer followed by a softmax output."""

    classes: int = 2
    hidden: int = 16

    @property
    def shapes(self):
        return [(self.dim, self.hidden), (self.hidden,), (self.hidden, self.classes), (self.classes,)]

    def _forward(self, theta, X):
        W1, b1, W2, b2 = self.unflatten(theta)
        h = np.tanh(X @ W1 + b1)
        return h, h @ W2 + b2

    def predict(self, theta, X):
        return np.argmax(self._forward(theta, X)[1], axis=1)

    def loss_and_grad(self, theta, X, y):
        W1, b1, W2, b2 = self.unflatten(theta)
        h, logits = self._forward(theta, X)
        probs = _softmax(logits)
        loss = _cross_entropy(probs, y)
        d_out = probs
        d_out[np.arange(len(y)), y] -= 1.0
        d_out /= len(y)
        d_h = (d_out @ W2.T) * (1.0 - h * h)
        grads = [X.T @ d_h, d_h.sum(axis=0), h.T @ d_out, d_out.sum(axis=0)]
        return loss, np.concatenate([g.ravel() for g in grads])


def make_model(kind: str, dim: int, classes: int = 2, hidden: int = 16) -> Model:
    if kind == LINEAR:
        return LinearRegression(dim)
    if kind == LOGISTIC:
        return LogisticRegression(dim, classes)
    if kind == MLP:
        return TwoLayerPerceptron(dim, classes, hidden)
    raise ValueError(f"unknown model kind {kind!r}; expected one of {MODEL_KINDS}")


def gradient_check(model: Model, theta: np.ndarray, X: np.ndarray, y: np.ndarray, step: float = 1e-5) -> float:
    """Relative error between the analytic gradient and central differences.

    Returns ``||g - g_fd|| / max(||g||, ||g_fd||, 1e-12)``.
    """
    _, g = model.loss_and_grad(theta, X, y)
    fd = np.empty_like(theta)
    for j in range(theta.size):
        e = np.zeros_like(theta)
        e[j] = step
        fd[j] = (model.loss(theta + e, X, y) - model.loss(theta - e, X, y)) / (2 * step)
    scale = max(np.linalg.norm(g), np.linalg.norm(fd), 1e-12)
    return float(np.linalg.norm(g - fd) / scale)
