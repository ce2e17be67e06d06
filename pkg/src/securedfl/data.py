"""Per-peer datasets: synthetic Gaussian mixtures and sharded CSV files."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np


class DatasetError(ValueError):
    pass


@dataclass(frozen=True)
class LocalDataset:
    X_train: np.ndarray
    y_train: np.ndarray
    X_test: np.ndarray
    y_test: np.ndarray

    def __post_init__(self):
        if len(self.y_train) == 0:
            raise DatasetError("empty training split")
        if len(self.X_train) != len(self.y_train) or len(self.X_test) != len(self.y_test):
            raise DatasetError("feature/label length mismatch")
        for X in (self.X_train, self.X_test):
            if not np.all(np.isfinite(X)):
                raise DatasetError("non-finite features")

    @property
    def dim(self) -> int:
        return self.X_train.shape[1]

    def class_proportions(self, classes: int) -> np.ndarray:
        counts = np.bincount(self.y_train.astype(int), minlength=classes)
        return counts / counts.sum()


def _split(X, y, rng, test_fraction) -> LocalDataset:
    order = rng.permutation(len(y))
    n_test = int(round(test_fraction * len(y)))
    test, train = order[:n_test], order[n_test:]
    return LocalDataset(X[train], y[train], X[test], y[test])


def _allocate(total: int, props: np.ndarray) -> np.ndarray:
    """Largest-remainder rounding of ``total * props`` to integers."""
    raw = total * props
    counts = np.floor(raw).astype(int)
    short = total - counts.sum()
    order = np.argsort(-(raw - counts), kind="stable")
    counts[order[:short]] += 1
    return counts


def peer_class_proportions(n_peers: int, classes: int, heterogeneity: float) -> np.ndarray:
    """Mix a uniform label distribution with a peer-specific one.

    At ``heterogeneity=1`` peer ``k`` only holds the classes ``c`` with
    ``c % n_peers == k`` (or class ``k % classes`` when peers outnumber
    classes), so peers have disjoint supports whenever ``n_peers <= classes``.
    """
    if not 0.0 <= heterogeneity <= 1.0:
        raise DatasetError("heterogeneity must lie in [0, 1]")
    uniform = np.full(classes, 1.0 / classes)
    out = np.empty((n_peers, classes))
    for k in range(n_peers):
        home = np.zeros(classes)
        if n_peers <= classes:
            home[[c for c in range(classes) if c % n_peers == k]] = 1.0
        else:
            home[k % classes] = 1.0
        home /= home.sum()
        out[k] = (1.0 - heterogeneity) * uniform + heterogeneity * home
    return out


def make_synthetic(
    n_peers: int,
    samples_per_peer: int,
    dim: int,
    heterogeneity: float = 0.0,
    seed: int = 0,
    classes: int = 4,
    separation: float = 1.0,
    test_fraction: float = 0.2,
) -> list[LocalDataset]:
    """Gaussian-mixture classification shards, one per peer.

    Class means are shared by all peers; ``heterogeneity`` only skews which
    classes each peer sees.
    """
    if min(n_peers, samples_per_peer, dim, classes) < 1:
        raise DatasetError("sizes must be positive")
    means = np.random.default_rng([seed, 0xC1A55]).normal(scale=separation, size=(classes, dim))
    props = peer_class_proportions(n_peers, classes, heterogeneity)
    shards = []
    for k in range(n_peers):
        rng = np.random.default_rng([seed, k])
        counts = _allocate(samples_per_peer, props[k])
        y = np.repeat(np.arange(classes), counts)
        X = means[y] + rng.normal(size=(len(y), dim))
        shards.append(_split(X, y, rng, test_fraction))
    return shards


def make_regression(
    n_peers: int,
    samples_per_peer: int,
    dim: int,
    seed: int = 0,
    noise: float = 0.0,
    test_fraction: float = 0.2,
) -> tuple[list[LocalDataset], np.ndarray]:
    """Linear-regression shards ``y = X w + b (+ noise)``; returns shards and ``[w, b]``."""
    truth = np.random.default_rng([seed, 0x1EA5]).normal(size=dim + 1)
    shards = []
    for k in range(n_peers):
        rng = np.random.default_rng([seed, k])
        X = rng.normal(size=(samples_per_peer, dim))
        y = X @ truth[:-1] + truth[-1] + noise * rng.normal(size=samples_per_peer)
        shards.append(_split(X, y, rng, test_fraction))
    return shards, truth


def load_csv(path: str | Path) -> tuple[np.ndarray, np.ndarray]:
    """Read numeric feature columns plus an integer label in the last column.

    The first row is a header and is skipped.
    """
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if len(rows) < 2:
        raise DatasetError(f"{path}: no data rows")
    body = [r for r in rows[1:] if r]
    try:
        X = np.array([[float(v) for v in r[:-1]] for r in body])
        y = np.array([int(float(r[-1])) for r in body])
    except ValueError as exc:
        raise DatasetError(f"{path}: {exc}") from exc
    if y.min() < 0:
        raise DatasetError("labels must be non-negative integers")
    return X, y


def shard_rows(
    X: np.ndarray, y: np.ndarray, n_peers: int, seed: int = 0, test_fraction: float = 0.2
) -> list[LocalDataset]:
    """Shuffle rows with ``seed`` and deal them round-robin to the peers."""
    if len(y) < n_peers:
        raise DatasetError(f"{len(y)} rows cannot fill {n_peers} peers")
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(y))
    shards = []
    for k in range(n_peers):
        idx = order[k::n_peers]
        shards.append(_split(X[idx], y[idx], np.random.default_rng([seed, k]), test_fraction))
    return shards
