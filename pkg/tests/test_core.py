import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from dcfw.core import (
    InfeasiblePointError,
    NonFiniteError,
    OracleCounters,
    SmoothFunction,
    SolveTrace,
    TraceRow,
    as_tensor,
    check_convexity,
    inner_product,
    numerical_gradient,
    phi,
    sq_norm,
)
from dcfw.decompositions import direct, qap_direct, qap_v1
from dcfw.oracles import Birkhoff, BoxLinf

finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)


def half_sq_problem(dim=2):
    return direct(lambda x: 0.5 * sq_norm(x), lambda x: np.asarray(x, float),
                  lambda x: 0.0, lambda x: np.zeros_like(x), 1.0, BoxLinf(0.0, 1.0, dim=dim))


def test_inner_product_small():
    assert inner_product([1, 2], [3, 4]) == 11


def test_inner_product_shape_mismatch():
    with pytest.raises(ValueError, match="shape"):
        inner_product(np.ones(2), np.ones(3))


@given(arrays(np.float64, 5, elements=finite), arrays(np.float64, 5, elements=finite))
def test_inner_product_symmetric(a, b):
    assert inner_product(a, b) == inner_product(b, a)


@given(arrays(np.float64, (3, 4), elements=finite))
def test_inner_product_norm_identity(a):
    assert inner_product(a, a) == pytest.approx(np.linalg.norm(a) ** 2, rel=1e-12, abs=1e-12)


def test_as_tensor_rejects_nan():
    with pytest.raises(NonFiniteError):
        as_tensor([1.0, np.nan])


def test_phi_zero_point():
    assert phi(half_sq_problem(), np.zeros(2)) == 0.0


def test_phi_infeasible_names_constraint():
    with pytest.raises(InfeasiblePointError, match="box bound"):
        phi(half_sq_problem(), np.array([2.0, 0.0]))


def test_phi_qap_v1_identity():
    A = B = np.eye(2)
    p = qap_v1(A, B, Birkhoff(2))
    X = np.eye(2)
    assert p.eval_f(X) == pytest.approx(2.0)
    assert p.eval_g(X) == pytest.approx(0.0)
    assert phi(p, X) == pytest.approx(2.0)


def test_direct_and_variant1_agree(rng):
    A, B = rng.standard_normal((2, 4, 4))
    s = Birkhoff(4)
    d, v1 = qap_direct(A, B, s), qap_v1(A, B, s)
    for _ in range(20):
        X = s.random_point(rng)
        assert phi(v1, X) == pytest.approx(phi(d, X), rel=1e-8, abs=1e-10)


def test_counters_dominated_by():
    a = OracleCounters(lmo_calls=1)
    b = OracleCounters(lmo_calls=2, grad_f_calls=1)
    assert a.dominated_by(b) and not b.dominated_by(a)


def test_trace_rejects_non_increasing_outer():
    tr = SolveTrace()
    tr.append(TraceRow(1, 1, 0.0, 0.0, OracleCounters(), 0.0))
    with pytest.raises(ValueError):
        tr.append(TraceRow(1, 1, 0.0, 0.0, OracleCounters(), 0.0))


def test_trace_rejects_decreasing_counters():
    tr = SolveTrace()
    tr.append(TraceRow(1, 1, 0.0, 0.0, OracleCounters(lmo_calls=3), 0.0))
    with pytest.raises(ValueError, match="counters"):
        tr.append(TraceRow(2, 1, 0.0, 0.0, OracleCounters(lmo_calls=2), 0.0))


def test_trace_columns_and_records():
    tr = SolveTrace()
    tr.append(TraceRow(1, 4, 2.0, 0.5, OracleCounters(lmo_calls=4), 0.1))
    tr.append(TraceRow(2, 3, 1.0, 0.2, OracleCounters(lmo_calls=7), 0.2))
    assert list(tr.column("lmo_calls")) == [4, 7]
    assert list(tr.column("phi")) == [2.0, 1.0]
    rec = tr.records()[1]
    assert set(rec) == set(SolveTrace.columns)
    assert tr.final_counters.lmo_calls == 7


def test_smooth_function_counts_calls():
    f = SmoothFunction(lambda x: float(x @ x), lambda x: 2 * x)
    f.value(np.ones(2))
    f.grad(np.ones(2))
    f.grad(np.ones(2))
    assert (f.value_calls, f.grad_calls) == (1, 2)


@settings(max_examples=20, deadline=None)
@given(arrays(np.float64, 3, elements=st.floats(-1, 1)))
def test_numerical_gradient_matches_quadratic(x):
    H = np.array([[2.0, 0.5, 0.0], [0.5, 1.0, 0.2], [0.0, 0.2, 3.0]])
    g = numerical_gradient(lambda z: 0.5 * z @ H @ z, x)
    np.testing.assert_allclose(g, H @ x, atol=1e-6)


def test_check_convexity_flags_concave_f(rng):
    p = direct(lambda x: -sq_norm(x), lambda x: -2 * x, lambda x: 0.0,
               lambda x: np.zeros_like(x), 1.0, BoxLinf(0.0, 1.0, dim=3))
    with pytest.raises(AssertionError, match="f fails"):
        check_convexity(p, rng, pairs=100)


def test_check_convexity_accepts_convex(rng):
    check_convexity(half_sq_problem(3), rng, pairs=200)
