import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from oracles import column_deviation, linear_sinkhorn_step, mp_linear_sinkhorn
from sinkrank.errors import ConfigError, NonFiniteError
from sinkrank.matrix import softmax_axis
from sinkrank.transforms import (
    Method,
    TransformConfig,
    apply_transform,
    dual_softmax,
    sinkhorn,
    sinkhorn_step,
)

scores = arrays(
    np.float64,
    st.tuples(st.integers(1, 6), st.integers(1, 6)),
    elements=st.floats(-5, 5, allow_nan=False),
)


@pytest.mark.parametrize("shape", [(1, 1), (3, 4), (5, 2)])
@pytest.mark.parametrize("T", [0.01, 1.0, 100.0])
def test_dual_softmax_constant_matrix_is_uniform(shape, T):
    out = dual_softmax(np.full(shape, 0.37), T).data
    assert np.allclose(out, 1 / shape[1], atol=1e-15)


def test_dual_softmax_identity_2x2():
    with mp.workdps(50):
        prior = mp.e / (1 + mp.e)
        hi = float(mp.e**prior / (mp.e**prior + 1))
    out = dual_softmax(np.eye(2), 1.0).data
    assert np.allclose(out, [[hi, 1 - hi], [1 - hi, hi]], atol=1e-12)
    assert np.allclose(out, [[0.6750, 0.3250], [0.3250, 0.6750]], atol=1e-4)


def test_dual_softmax_single_row_is_row_softmax():
    a = np.array([[0.3, -1.2, 2.0, 0.0]])
    assert np.allclose(dual_softmax(a, 7.0).data, softmax_axis(a, 1).data, atol=1e-15)


def test_dual_softmax_1x1():
    assert dual_softmax([[4.2]], 3.0).data.tolist() == [[1.0]]


def test_dual_softmax_rejects_bad_temperature_and_nonfinite():
    with pytest.raises(ConfigError):
        dual_softmax(np.eye(2), 0.0)
    with pytest.raises(ConfigError):
        dual_softmax(np.eye(2), -1.0)
    with pytest.raises(NonFiniteError):
        dual_softmax([[np.nan]], 1.0)


@settings(max_examples=60, deadline=None)
@given(scores, st.floats(-50, 50, allow_nan=False))
def test_dual_softmax_prior_is_shift_invariant(a, c):
    # the column prior ignores a global shift; the product with A does not
    d = np.abs(softmax_axis(a, 0).data - softmax_axis(a + c, 0).data).max()
    assert d <= 1e-12


@pytest.mark.parametrize("shape", [(1, 9), (9, 1)])
@pytest.mark.parametrize("c", [-5.0, 0.5, 40.0])
def test_dual_softmax_shift_invariance_for_singleton_axes(shape, c):
    a = np.random.default_rng(1).uniform(-1, 1, size=shape)
    assert np.abs(dual_softmax(a, 1.0).data - dual_softmax(a + c, 1.0).data).max() <= 1e-9


def test_dual_softmax_depends_on_score_level():
    # (A + c) * prior = A * prior + c * prior, and c * prior is not constant
    # along a row, so a global shift can move a row's argmax
    a = np.array([[0.0, 1.0], [1.0, 1.0]])
    assert np.abs(dual_softmax(a, 1.0).data - dual_softmax(a + 1.0, 1.0).data).max() > 0.05
    b = np.array([[0.0, 0.5], [-3.0, 0.0]])
    assert dual_softmax(b, 1.0).data[0].argmax() != dual_softmax(b + 10.0, 1.0).data[0].argmax()


def test_sinkhorn_step_zeros_2x2():
    out = sinkhorn_step(np.zeros((2, 2))).data
    assert np.allclose(out, -np.log(2), atol=1e-15)
    assert np.allclose(np.exp(out), 0.5, atol=1e-15)


@pytest.mark.parametrize("n", [1, 3, 10])
def test_sinkhorn_step_constant(n):
    assert np.allclose(sinkhorn_step(np.full((n, n), 3.3)).data, -np.log(n), atol=1e-14)


def test_sinkhorn_step_random_3x3_against_linear_oracle():
    a = np.random.default_rng(3).normal(size=(3, 3))
    out = sinkhorn_step(a).data
    assert np.abs(np.exp(out).sum(axis=1) - 1).max() <= 1e-12
    assert np.abs(out - linear_sinkhorn_step(a)).max() <= 1e-9


def test_sinkhorn_sharp_diagonal():
    a = [[10.0, 0.0], [0.0, 10.0]]
    expected = mp_linear_sinkhorn(a, 50)
    p = np.exp(sinkhorn(a, 1.0, 50).data)
    assert np.allclose(p, expected, atol=1e-12)
    assert (np.diag(p) > 0.99).all()
    assert (p.argmax(axis=1) == [0, 1]).all()


def test_sinkhorn_against_extended_precision_rectangular():
    a = np.random.default_rng(11).normal(size=(3, 5))
    expected = mp_linear_sinkhorn(a / 0.5, 7)
    assert np.allclose(np.exp(sinkhorn(a, 0.5, 7).data), expected, atol=1e-12)


def test_sinkhorn_fixed_point_on_doubly_stochastic_input():
    p = np.array([[0.2, 0.5, 0.3], [0.5, 0.1, 0.4], [0.3, 0.4, 0.3]])
    log_p = np.log(p)
    for steps in (1, 5):
        assert np.abs(sinkhorn(log_p, 1.0, steps).data - log_p).max() <= 1e-12


def test_sinkhorn_20x20_converges():
    a = np.random.default_rng(20).normal(size=(20, 20))
    assert column_deviation(sinkhorn(a, 1.0, 200).data) <= 1e-6


def test_sinkhorn_deviation_monotone_over_long_run():
    # oracle: 10,000 steps, deviation never increases (above the rounding floor)
    a = np.random.default_rng(21).normal(size=(20, 20))
    devs = []
    x = a.copy()
    for _ in range(10_000):
        x = sinkhorn_step(x).data
        devs.append(column_deviation(x))
    devs = np.array(devs)
    assert (np.diff(devs) <= 1e-15).all()
    assert devs[199] <= 1e-6


def test_sinkhorn_degenerate_1x1():
    assert sinkhorn([[123.0]], 0.05, 3).data.tolist() == [[0.0]]


@pytest.mark.parametrize("steps", [0, -1, 2.5, True])
def test_sinkhorn_rejects_bad_steps(steps):
    with pytest.raises(ConfigError):
        sinkhorn(np.eye(2), 1.0, steps)


@settings(max_examples=60, deadline=None)
@given(scores, st.integers(1, 30), st.floats(0.05, 10))
def test_sinkhorn_rows_always_stochastic(a, steps, T):
    out = sinkhorn(a, T, steps).data
    assert np.abs(np.exp(out).sum(axis=1) - 1).max() <= 1e-12


def test_sinkhorn_step_matches_linear_oracle_5x5():
    rng = np.random.default_rng(5)
    for _ in range(100):
        a = rng.uniform(-5, 5, size=(5, 5))
        assert np.abs(sinkhorn_step(a).data - linear_sinkhorn_step(a)).max() <= 1e-9


def test_transforms_keep_ids():
    from sinkrank.matrix import SimilarityMatrix

    A = SimilarityMatrix(np.eye(2), ["q0", "q1"], ["v0", "v1"])
    for cfg in (TransformConfig("dsl"), TransformConfig("sinkhorn"), TransformConfig()):
        out = apply_transform(A, cfg)
        assert out.row_ids == A.row_ids and out.col_ids == A.col_ids


def test_transform_config_defaults_and_parsing():
    assert TransformConfig("dsl").method is Method.DUAL_SOFTMAX
    assert TransformConfig("dsl").temperature == 100.0
    sk = TransformConfig("sinkhorn")
    assert (sk.temperature, sk.sinkhorn_steps) == (0.05, 20)
    assert TransformConfig(Method.SINKHORN, 2.0, 7).sinkhorn_steps == 7
    with pytest.raises(ConfigError):
        TransformConfig("qbnorm")
    with pytest.raises(ConfigError):
        TransformConfig("sinkhorn", sinkhorn_steps=0)
    with pytest.raises(ConfigError):
        TransformConfig("dsl", temperature=float("inf"))


def test_identity_returns_input_unchanged():
    a = np.random.default_rng(0).normal(size=(4, 6))
    assert np.array_equal(apply_transform(a, TransformConfig()).data, a)
