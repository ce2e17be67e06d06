import json

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from securedfl.params import (
    NonFiniteError,
    ParamError,
    ParamVector,
    ShapeMismatchError,
    axpy_combine,
    exact_mean,
    l2_distance,
    mse,
    vector_sum,
)

from conftest import pv

finite = st.floats(-1e6, 1e6, allow_nan=False)
arrays = hnp.arrays(np.float64, st.integers(1, 20), elements=finite)


@pytest.mark.parametrize(
    "coeffs, vectors, expected",
    [
        ([1, 1], [[1, 2], [3, 4]], [4, 6]),
        ([0.5], [[2, 4]], [1, 2]),
        ([2, -1], [[1, 1], [1, 1]], [1, 1]),
    ],
)
def test_axpy_examples(coeffs, vectors, expected):
    out = axpy_combine(coeffs, [pv(v) for v in vectors])
    assert out == pv(expected)


def test_axpy_errors():
    with pytest.raises(ShapeMismatchError):
        axpy_combine([1, 1], [pv([1, 2]), pv([1, 2, 3])])
    with pytest.raises(ParamError):
        axpy_combine([1], [pv([1]), pv([2])])
    with pytest.raises(NonFiniteError):
        axpy_combine([1e308, 1e308], [pv([10.0]), pv([10.0])])


@pytest.mark.parametrize(
    "a, b, expected",
    [([5, -1], [5, -1], 0.0), ([0, 0], [1, 1], 1.0), ([1, 2, 3], [2, 2, 2], 2 / 3)],
)
def test_mse_examples(a, b, expected):
    assert mse(pv(a), pv(b)) == pytest.approx(expected, rel=1e-15)


def test_mse_shape_mismatch():
    with pytest.raises(ShapeMismatchError):
        mse(pv([1]), pv([1, 2]))


def test_invariants_enforced():
    with pytest.raises(ParamError):
        ParamVector(np.zeros(5), (2, 3))
    with pytest.raises(NonFiniteError):
        pv([1.0, np.nan])
    v = ParamVector(np.arange(6.0), (2, 3))
    assert v.as_array().shape == (2, 3)
    with pytest.raises(ValueError):
        v.data[0] = 9.0


@given(arrays, arrays)
def test_mse_symmetric_nonnegative(a, b):
    n = min(len(a), len(b))
    x, y = pv(a[:n]), pv(b[:n])
    assert mse(x, y) == mse(y, x) >= 0.0
    assert mse(x, x) == 0.0
    diff = np.abs(a[:n] - b[:n])
    if diff.any():
        # squared differences below ~1e-308 underflow to zero
        assume(diff.max() > 1e-150)
        assert mse(x, y) > 0.0


@given(arrays, st.floats(-100, 100), st.floats(-100, 100))
def test_axpy_linear(a, c, alpha):
    v = [pv(a), pv(a[::-1])]
    lhs = axpy_combine([alpha * c, alpha * 2.0], v).data
    rhs = alpha * axpy_combine([c, 2.0], v).data
    np.testing.assert_allclose(lhs, rhs, rtol=1e-12, atol=1e-12 * (np.abs(rhs).max() + 1))


@given(hnp.arrays(np.float64, st.integers(1, 30), elements=st.floats(allow_nan=False, allow_infinity=False)))
@settings(max_examples=200)
def test_binary_and_json_roundtrip_lossless(a):
    v = pv(a)
    assert ParamVector.from_bytes(v.to_bytes()) == v
    assert ParamVector.from_json(v.to_json()) == v
    assert ParamVector.from_json_obj(json.loads(json.dumps(v.to_json_obj()))) == v


def test_json_shape_roundtrip():
    v = ParamVector(np.arange(6.0), (3, 2))
    obj = v.to_json_obj()
    assert obj["shape"] == [3, 2] and obj["data"] == list(np.arange(6.0))
    assert ParamVector.from_json_obj(obj).shape == (3, 2)
    assert ParamVector.from_json_obj([1.0, 2.0]) == pv([1, 2])


def test_sum_mean_distance():
    vs = [pv([1, 2]), pv([3, 4]), pv([5, 9])]
    assert vector_sum(vs) == pv([9, 15])
    assert exact_mean(vs) == pv([3, 5])
    assert l2_distance(pv([0, 0]), pv([3, 4])) == 5.0
