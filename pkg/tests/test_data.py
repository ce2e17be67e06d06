import numpy as np
import pytest

from securedfl.data import (
    DatasetError,
    load_csv,
    make_regression,
    make_synthetic,
    peer_class_proportions,
    shard_rows,
)


def test_iid_proportions_equal():
    shards = make_synthetic(5, 400, 3, heterogeneity=0.0, seed=1, test_fraction=0.0)
    props = [s.class_proportions(4) for s in shards]
    assert all(np.array_equal(p, props[0]) for p in props)


def test_two_peers_full_heterogeneity_disjoint():
    a, b = make_synthetic(2, 100, 3, heterogeneity=1.0, seed=0)
    labels_a = set(np.concatenate([a.y_train, a.y_test]))
    labels_b = set(np.concatenate([b.y_train, b.y_test]))
    assert labels_a and labels_b and not labels_a & labels_b


def test_deterministic_bytes():
    a = make_synthetic(3, 50, 4, 0.5, seed=9)
    b = make_synthetic(3, 50, 4, 0.5, seed=9)
    for x, y in zip(a, b):
        assert x.X_train.tobytes() == y.X_train.tobytes()
        assert x.y_test.tobytes() == y.y_test.tobytes()


def test_proportion_rows_sum_to_one():
    p = peer_class_proportions(9, 4, 0.7)
    np.testing.assert_allclose(p.sum(axis=1), 1.0)
    with pytest.raises(DatasetError):
        peer_class_proportions(2, 2, 1.5)


def test_regression_realizable():
    shards, truth = make_regression(2, 20, 3, seed=0)
    s = shards[0]
    np.testing.assert_allclose(s.X_train @ truth[:-1] + truth[-1], s.y_train)


def test_csv_and_sharding(tmp_path):
    path = tmp_path / "d.csv"
    rows = ["f1,f2,label"] + [f"{i},{-i},{i % 3}" for i in range(30)]
    path.write_text("\n".join(rows) + "\n")
    X, y = load_csv(path)
    assert X.shape == (30, 2) and list(y[:4]) == [0, 1, 2, 0]
    shards = shard_rows(X, y, 3, seed=0)
    assert sum(len(s.y_train) + len(s.y_test) for s in shards) == 30
    with pytest.raises(DatasetError):
        shard_rows(X[:2], y[:2], 3)


def test_bad_csv(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("a,label\nx,1\n")
    with pytest.raises(DatasetError):
        load_csv(path)
