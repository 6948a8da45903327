import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dcfw.core import NonFiniteError
from dcfw.lap import permutation_matrix, round_to_permutation, solve_lap


def brute(cost):
    n = cost.shape[0]
    return min(cost[np.arange(n), list(p)].sum() for p in itertools.permutations(range(n)))


def test_two_by_two():
    a = solve_lap(np.array([[1.0, 2.0], [2.0, 1.0]]))
    assert list(a.perm) == [0, 1] and a.cost == 2.0


def test_zero_matrix_any_perm():
    a = solve_lap(np.zeros((4, 4)))
    assert a.cost == 0.0 and sorted(a.perm) == [0, 1, 2, 3]


def test_three_by_three():
    assert solve_lap(np.array([[4.0, 1, 3], [2, 0, 5], [3, 2, 2]])).cost == 5.0


@pytest.mark.parametrize("bad", [np.zeros((2, 3)), np.array([[np.inf, 0], [0, 0]])])
def test_rejects_bad_input(bad):
    with pytest.raises(ValueError):
        solve_lap(bad)


def test_nonfinite_is_nonfinite_error():
    with pytest.raises(NonFiniteError):
        solve_lap(np.array([[np.nan, 0.0], [0.0, 0.0]]))


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 7), st.integers(0, 2**32 - 1))
def test_matches_brute_force(n, seed):
    cost = np.random.default_rng(seed).integers(-20, 20, size=(n, n)).astype(float)
    a = solve_lap(cost)
    assert sorted(a.perm) == list(range(n))
    assert a.cost == pytest.approx(brute(cost), abs=1e-9)
    assert a.cost == pytest.approx(cost[np.arange(n), a.perm].sum())


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 6), st.integers(0, 2**32 - 1), st.floats(-5, 5))
def test_row_shift_invariance(n, seed, shift):
    rng = np.random.default_rng(seed)
    cost = rng.standard_normal((n, n))
    row = int(rng.integers(n))
    shifted = cost.copy()
    shifted[row] += shift
    assert solve_lap(shifted).cost == pytest.approx(solve_lap(cost).cost + shift, abs=1e-9)


def test_round_identity():
    assert list(round_to_permutation(np.eye(3)).perm) == [0, 1, 2]


def test_round_near_identity():
    assert list(round_to_permutation(np.array([[0.9, 0.1], [0.1, 0.9]])).perm) == [0, 1]


def test_round_uniform_ties():
    X = np.full((3, 3), 1 / 3)
    P = round_to_permutation(X).matrix()
    dists = {round(np.linalg.norm(X - permutation_matrix(p)), 12)
             for p in itertools.permutations(range(3))}
    assert len(dists) == 1
    assert np.linalg.norm(X - P) == pytest.approx(dists.pop())
    assert np.linalg.norm(X - P) == pytest.approx(np.sqrt(3 - 1))


def test_round_is_nearest(rng):
    for _ in range(20):
        X = rng.random((4, 4))
        P = round_to_permutation(X).matrix()
        best = min(np.linalg.norm(X - permutation_matrix(p))
                   for p in itertools.permutations(range(4)))
        assert np.linalg.norm(X - P) == pytest.approx(best)
