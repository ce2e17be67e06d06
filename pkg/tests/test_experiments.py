import numpy as np
import pytest

from securedfl.aggregate import AdmmConfig, contraction_factor, initial_duals, run_aggregation
from securedfl.experiments import (
    SweepError,
    iteration_rows_csv,
    nondecreasing,
    oracle_iteration_below,
    oracle_mse_curve,
    random_checkpoints,
    schedule_rows_csv,
    sweep_iterations,
    sweep_schedule,
    to_csv,
)
from securedfl.params import mse


def test_oracle_curve_matches_engine():
    ws = random_checkpoints(9, 100, 0)
    lam0 = initial_duals(9, (100,), 0)
    res = run_aggregation(ws, AdmmConfig(0.5, 6), lambda0=lam0)
    engine = [mse(t.z, res.target) for t in res.traces]
    np.testing.assert_allclose(oracle_mse_curve(ws, lam0, 0.5, 6), engine, rtol=1e-9)


def test_sweep_iterations_shape():
    rows = sweep_iterations(dims=(500,), seeds=range(2))
    assert [r.iterations for r in rows] == list(range(1, 8))
    means = [r.mean_mse for r in rows]
    assert all(b < a for a, b in zip(means, means[1:]))
    for r in rows[1:]:
        assert r.ratio == pytest.approx(contraction_factor(1.0) ** 2, rel=1e-6)
    with pytest.raises(SweepError):
        sweep_iterations(iteration_range=range(0, 3))


def test_oracle_threshold_rho_small():
    assert oracle_iteration_below(1e-13, 9, 1000, 0.1, range(2)) == 7


def test_sweep_schedule():
    rows = sweep_schedule([3, 9], 3, range(3))
    assert rows[0].counts == [1, 1, 1]
    assert rows[1].median_classes == 4
    assert nondecreasing([r.median_classes for r in rows])
    s4 = sweep_schedule([8, 16], 4, range(2))
    assert all(min(r.counts) >= 1 for r in s4)


def test_csv_is_locale_free_and_lf():
    text = to_csv(["a", "b"], [(1, 0.1), (2, None)])
    assert text == "a,b\n1,0.1\n2,\n"
    assert "\r" not in iteration_rows_csv(sweep_iterations(dims=(10,), iteration_range=[1, 2], seeds=[0]))
    assert schedule_rows_csv(sweep_schedule([3], 3, [0])).splitlines()[1] == "3,3,1.0,1,1,1"
