import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from securedfl.aggregate import (
    ALL_TO_ALL,
    GROUPED,
    AdmmConfig,
    AggregationError,
    PrivacyGuardError,
    combine_z,
    contraction_factor,
    initial_duals,
    lambda_update,
    partial_z,
    run_aggregation,
    x_minimize,
    y_message,
)
from securedfl.params import ParamVector, ShapeMismatchError, l2_distance
from securedfl.schedule import GroupSchedule, generate_schedule

from conftest import pv


def scalar_oracle(ws, lam0, rho, iterations):
    """Plain-float ADMM averaging, written independently of the package."""
    n = len(ws)
    lam = list(lam0)
    z = 0.0
    out = []
    for _ in range(iterations):
        xs = [(2 * w - l + rho * z) / (2 + rho) for w, l in zip(ws, lam)]
        ys = [x + l / rho for x, l in zip(xs, lam)]
        z = sum(ys) / n
        lam = [l + rho * (x - z) for l, x in zip(lam, xs)]
        out.append(z)
    return out


@pytest.mark.parametrize(
    "w, lam, z, rho, expected",
    [([0], [0], [0], 3.0, [0]), ([1], [0], [0], 2.0, [0.5]), ([1], [4], [1], 2.0, [0])],
)
def test_x_minimize(w, lam, z, rho, expected):
    assert x_minimize(pv(w), pv(lam), pv(z), rho) == pv(expected)


@pytest.mark.parametrize(
    "x, lam, rho, expected", [([1], [0], 1.0, [1]), ([1], [2], 2.0, [2]), ([0.5], [1], 0.5, [2.5])]
)
def test_y_message(x, lam, rho, expected):
    assert y_message(pv(x), pv(lam), rho) == pv(expected)


def test_partial_and_combine():
    assert partial_z([pv([3]), pv([6]), pv([9])], 9) == pv([2])
    assert partial_z([pv([0])] * 3, 9) == pv([0])
    assert partial_z([pv([1])], 1) == pv([1])
    with pytest.raises(AggregationError):
        partial_z([], 3)
    assert combine_z([pv([1]), pv([2]), pv([3])]) == pv([6])
    assert combine_z([pv([0])]) == pv([0])


@pytest.mark.parametrize(
    "lam, x, z, rho, expected",
    [([0], [5], [5], 1.0, [0]), ([1], [2], [1], 2.0, [3]), ([1], [0], [1], 1.0, [0])],
)
def test_lambda_update(lam, x, z, rho, expected):
    assert lambda_update(pv(lam), pv(x), pv(z), rho) == pv(expected)


def test_shape_mismatch():
    with pytest.raises(ShapeMismatchError):
        x_minimize(pv([1]), pv([1, 2]), pv([1]), 1.0)


def test_zero_input():
    ws = [pv([0.0])] * 3
    res = run_aggregation(ws, AdmmConfig(2.0, 5, lambda_zero=True))
    assert res.z == pv([0.0])
    assert all(t.residual_l2 == 0.0 for t in res.traces)


def test_three_peer_recurrence():
    ws = [pv([1]), pv([2]), pv([3])]
    res = run_aggregation(ws, AdmmConfig(2.0, 3, lambda_zero=True))
    zs = [t.z.data[0] for t in res.traces]
    assert zs == pytest.approx([1.0, 1.5, 1.75], abs=1e-15)
    assert zs == pytest.approx(scalar_oracle([1, 2, 3], [0, 0, 0], 2.0, 3), abs=1e-15)


@given(
    st.lists(st.floats(-10, 10), min_size=2, max_size=8),
    st.sampled_from([0.1, 0.5, 1.0, 3.0]),
    st.integers(0, 1000),
)
@settings(max_examples=50, deadline=None)
def test_matches_scalar_oracle(ws, rho, seed):
    vs = [pv([w]) for w in ws]
    lam0 = initial_duals(len(ws), (1,), seed)
    res = run_aggregation(vs, AdmmConfig(rho, 6), lambda0=lam0)
    oracle = scalar_oracle(ws, [l.data[0] for l in lam0], rho, 6)
    np.testing.assert_allclose([t.z.data[0] for t in res.traces], oracle, rtol=1e-12, atol=1e-12)


@given(st.integers(2, 12), st.sampled_from([0.1, 1.0, 3.0]), st.integers(0, 10_000))
@settings(max_examples=40, deadline=None)
def test_dual_sum_and_contraction(n, rho, seed):
    rng = np.random.default_rng(seed)
    ws = [pv(rng.normal(size=5)) for _ in range(n)]
    res = run_aggregation(ws, AdmmConfig(rho, 5), seed)
    assert all(t.max_dual_sum <= 1e-9 for t in res.traces)
    r = contraction_factor(rho)
    for prev, cur in zip(res.traces, res.traces[1:]):
        if prev.residual_l2 > 1e-13 and cur.residual_l2 > 1e-13:
            assert cur.residual_l2 / prev.residual_l2 == pytest.approx(r, rel=1e-6)


def test_grouped_matches_all_to_all():
    sch = generate_schedule(9, 3, 0)
    rng = np.random.default_rng(3)
    ws = [pv(rng.normal(size=50)) for _ in range(9)]
    a = run_aggregation(ws, AdmmConfig(1.0, 7, ALL_TO_ALL), 11)
    g = run_aggregation(ws, AdmmConfig(1.0, 7, GROUPED, sch), 11)
    for ta, tg in zip(a.traces, g.traces):
        np.testing.assert_allclose(tg.z.data, ta.z.data, rtol=0, atol=1e-12)
        assert len(tg.partial_z) == 3


def test_consensus_is_identical_across_peers():
    sch = generate_schedule(9, 3, 0)
    ws = [pv(np.random.default_rng(k).normal(size=4)) for k in range(9)]
    res = run_aggregation(ws, AdmmConfig(1.0, 3, GROUPED, sch), 0)
    assert all(s.z == res.z for s in res.states)


def test_privacy_guard():
    sch = generate_schedule(9, 3, 0)
    ws = [pv([float(k)]) for k in range(9)]
    with pytest.raises(PrivacyGuardError):
        run_aggregation(ws, AdmmConfig(1.0, 8, GROUPED, sch))
    assert len(run_aggregation(ws, AdmmConfig(1.0, 8, GROUPED, sch, unsafe=True)).traces) == 8
    assert len(run_aggregation(ws, AdmmConfig(1.0, 7, GROUPED, sch)).traces) == 7


def test_run_errors():
    with pytest.raises(AggregationError):
        run_aggregation([pv([1])], AdmmConfig())
    with pytest.raises(AggregationError):
        run_aggregation([pv([1]), pv([1, 2])], AdmmConfig())
    with pytest.raises(AggregationError):
        AdmmConfig(rho=0.0)
    with pytest.raises(AggregationError):
        AdmmConfig(max_iterations=0)
    bad = GroupSchedule(3, 3, (((0, 1, 2),), ((0, 1, 2),)), 0)
    with pytest.raises(AggregationError):
        run_aggregation([pv([1])] * 3, AdmmConfig(1.0, 1, GROUPED, bad))
    with pytest.raises(AggregationError):
        run_aggregation([pv([1])] * 6, AdmmConfig(1.0, 1, GROUPED, generate_schedule(9, 3, 0)))


def test_deterministic_and_seeded_duals():
    ws = [pv([1.0, 2.0]), pv([3.0, -1.0]), pv([0.0, 0.0])]
    a = run_aggregation(ws, AdmmConfig(1.0, 3), 5)
    b = run_aggregation(ws, AdmmConfig(1.0, 3), 5)
    assert [t.z for t in a.traces] == [t.z for t in b.traces]
    for lam in a.lambda0:
        assert np.all((lam.data >= 0) & (lam.data < 1))


def test_early_stop():
    ws = [pv([1.0]), pv([3.0])]
    res = run_aggregation(ws, AdmmConfig(1.0, 100, tolerance=1e-6), 0)
    assert len(res.traces) < 100
    assert l2_distance(res.z, res.target) < 1e-5
