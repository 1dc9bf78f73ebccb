import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings, strategies as st
from scipy.optimize import nnls as reference_nnls

from symtight.nnls import NNLSConvergenceError, nnls


def _kkt_gap(A, b, x):
    """Largest violation of the optimality conditions for min |Ax-b|, x >= 0."""
    w = A.T @ (b - A @ x)
    scale = max(1.0, np.abs(A).max() * np.linalg.norm(b))
    pos = x > 0
    return max(float(np.abs(w[pos]).max(initial=0.0)), float(w[~pos].max(initial=0.0))) / scale


def test_known_answer():
    A = np.array([[1.0, 0.0], [0.0, 1.0]])
    x, res, _ = nnls(A, np.array([2.0, -3.0]))
    assert np.allclose(x, [2.0, 0.0])
    assert res == pytest.approx(3.0)


def test_zero_columns():
    x, res, it = nnls(np.zeros((3, 0)), np.array([1.0, 2.0, 2.0]))
    assert x.shape == (0,) and res == pytest.approx(3.0) and it == 0


def test_matches_reference_on_full_rank(rng):
    # tall, full column rank: the minimizer is unique, compare x itself
    for _ in range(200):
        m = int(rng.integers(2, 25))
        n = int(rng.integers(1, m + 1))
        A = rng.standard_normal((m, n))
        b = rng.standard_normal(m)
        x, res, _ = nnls(A, b)
        xr, _ = reference_nnls(A, b)
        assert np.allclose(x, xr, atol=1e-9)
        assert res == pytest.approx(np.linalg.norm(A @ xr - b), abs=1e-9)


def test_rank_deficient_is_optimal(rng):
    # wide or duplicated columns: the residual is unique even when x is not
    for k in range(200):
        m, n = int(rng.integers(1, 30)), int(rng.integers(1, 30))
        A = rng.standard_normal((m, n))
        if k % 3 == 0:
            A[:, -1] = A[:, 0]
        b = rng.standard_normal(m)
        x, res, _ = nnls(A, b)
        assert x.min() >= 0
        assert res == pytest.approx(np.linalg.norm(A @ x - b), abs=1e-12)
        assert _kkt_gap(A, b, x) <= 1e-9
        xr, _ = reference_nnls(A, b)
        assert res <= np.linalg.norm(A @ xr - b) + 1e-8


def test_sparse_input_same_answer(rng):
    A = rng.standard_normal((40, 15))
    A[np.abs(A) < 1.0] = 0.0
    b = rng.standard_normal(40)
    x1, r1, _ = nnls(A, b)
    x2, r2, _ = nnls(sp.csr_matrix(A), b)
    assert np.allclose(x1, x2, atol=1e-12) and r1 == pytest.approx(r2)


def test_warm_start_does_not_change_answer(rng):
    A = rng.standard_normal((30, 20))
    b = rng.standard_normal(30)
    x, res, it = nnls(A, b)
    for guess in (np.flatnonzero(x > 0), np.arange(20), [3, 7]):
        xw, rw, _ = nnls(A, b, init_passive=guess)
        assert rw == pytest.approx(res, abs=1e-12)
    _, _, it_warm = nnls(A, b, init_passive=np.flatnonzero(x > 0))
    assert it_warm < it


def test_iteration_cap_raises(rng):
    A = rng.standard_normal((30, 30))
    b = rng.standard_normal(30)
    with pytest.raises(NNLSConvergenceError) as info:
        nnls(A, b, max_iter=1)
    assert info.value.iterations > 1


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 12), st.integers(1, 12), st.integers(0, 2**31))
def test_property_feasible_and_optimal(m, n, seed):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((m, n))
    b = rng.standard_normal(m)
    x, res, _ = nnls(A, b)
    assert np.all(x >= 0)
    assert _kkt_gap(A, b, x) <= 1e-9
    # no other feasible point does better
    y = np.abs(rng.standard_normal(n))
    assert res <= np.linalg.norm(A @ y - b) + 1e-12
