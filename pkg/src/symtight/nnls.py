"""Lawson-Hanson active-set nonnegative least squares.

Solves ``min ||A x - b||_2`` subject to ``x >= 0`` where ``A`` may be a
dense or sparse matrix. The passive-set subproblems are solved through the
Gram matrix ``A^T A``, which is cheap here because constraint rows are
sparse and few relative to the field dimension. The dual vector is
recomputed from ``A`` directly each sweep to avoid drift.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp


class NNLSConvergenceError(RuntimeError):
    def __init__(self, message, iterations, passive, dual_max):
        super().__init__(f"{message} (iterations={iterations}, "
                         f"passive={passive}, max dual={dual_max:.3e})")
        self.iterations = iterations
        self.passive = passive
        self.dual_max = dual_max


def _solve_passive(G, rhs):
    try:
        c = sla.cho_factor(G, check_finite=False)
        return sla.cho_solve(c, rhs, check_finite=False)
    except (sla.LinAlgError, ValueError):
        return sla.lstsq(G, rhs, check_finite=False)[0]


class _Factor:
    """Lower Cholesky factor of ``G[P, P]`` for an ordered passive list ``P``.

    Columns are appended with one triangular solve and removed with a rank-one
    update of the trailing block, so neither costs a full refactorization.
    """

    def __init__(self, G):
        self.G = G
        self.order = []
        self.L = np.zeros((0, 0))

    def add(self, j) -> bool:
        k = len(self.order)
        gjj = self.G[j, j]
        if k:
            l = sla.solve_triangular(self.L, self.G[self.order, j], lower=True, check_finite=False)
            d2 = gjj - l @ l
        else:
            l, d2 = np.zeros(0), gjj
        if not d2 > 1e-12 * gjj:
            return False  # numerically dependent on the passive columns
        L = np.zeros((k + 1, k + 1))
        L[:k, :k] = self.L
        L[k, :k] = l
        L[k, k] = np.sqrt(d2)
        self.L = L
        self.order.append(j)
        return True

    def remove(self, j):
        k = self.order.index(j)
        L = np.delete(np.delete(self.L, k, axis=0), k, axis=1)
        x = self.L[k + 1:, k].copy()
        T = L[k:, k:]  # view; updated in place
        for i in range(len(x)):
            r = np.hypot(T[i, i], x[i])
            c, s = r / T[i, i], x[i] / T[i, i]
            T[i, i] = r
            T[i + 1:, i] = (T[i + 1:, i] + s * x[i + 1:]) / c
            x[i + 1:] = c * x[i + 1:] - s * T[i + 1:, i]
        self.L = L
        del self.order[k]

    def solve(self, rhs):
        y = sla.solve_triangular(self.L, rhs[self.order], lower=True, check_finite=False)
        return sla.solve_triangular(self.L.T, y, lower=False, check_finite=False)


def nnls(A, b, *, max_iter: int | None = None, tol: float | None = None,
         init_passive=None):
    """Return ``(x, residual_norm, n_iterations)``.

    ``init_passive`` optionally seeds the passive set (warm start); the
    result does not depend on it beyond tie-breaking.
    """
    b = np.asarray(b, dtype=float).ravel()
    if sp.issparse(A):
        A = sp.csc_matrix(A)
        G = (A.T @ A).toarray()
    else:
        A = np.asarray(A, dtype=float)
        G = A.T @ A
    m = A.shape[1]
    x = np.zeros(m)
    if m == 0:
        return x, float(np.linalg.norm(b)), 0
    Atb = np.asarray(A.T @ b).ravel()
    if max_iter is None:
        max_iter = 6 * m + 100
    if tol is None:
        tol = 1e-10
    # dual entries are compared after normalizing by column and rhs norms
    colnorm = np.sqrt(np.maximum(np.diag(G), np.finfo(float).tiny))
    bnorm = max(float(np.linalg.norm(b)), np.finfo(float).tiny)

    passive = np.zeros(m, dtype=bool)
    fac = _Factor(G)
    it = 0

    def reset(mask):
        nonlocal fac
        fac = _Factor(G)
        passive[:] = False
        for j in np.flatnonzero(mask):
            passive[j] = fac.add(j)

    def inner(x):
        nonlocal it
        while True:
            it += 1
            if it > max_iter:
                w = Atb - G @ x
                raise NNLSConvergenceError("NNLS did not converge", it, int(passive.sum()),
                                           float(w[~passive].max(initial=0.0)))
            P = np.array(fac.order, dtype=int)
            z = np.zeros(m)
            z[P] = fac.solve(Atb)
            if np.all(z[P] > 0):
                return z
            neg = P[z[P] <= 0]
            ratios = x[neg] / (x[neg] - z[neg])
            alpha = np.min(ratios)
            x = x + alpha * (z - x)
            drop = set(P[x[P] <= np.finfo(float).eps * max(1.0, float(np.abs(x).max()))])
            drop.add(int(neg[np.argmin(ratios)]))
            for j in drop:
                fac.remove(j)
                passive[j] = False
            x[~passive] = 0.0

    if init_passive is not None and len(init_passive):
        # warm start: shrink the guessed set until its solution is positive
        mask = np.zeros(m, dtype=bool)
        mask[np.asarray(init_passive, dtype=int)] = True
        reset(mask)
        while passive.any():
            P = np.array(fac.order, dtype=int)
            z = fac.solve(Atb)
            if np.all(z > 0):
                x[P] = z
                break
            for j in P[z <= 0]:
                fac.remove(j)
                passive[j] = False

    blocked = np.zeros(m, dtype=bool)
    r = b - A @ x
    res = float(np.linalg.norm(r))
    while True:
        # dual from A directly; the Gram route loses digits
        w = np.asarray(A.T @ r).ravel() / (colnorm * bnorm)
        cand = ~passive & ~blocked & (w > tol)
        if not cand.any():
            break
        j = int(np.flatnonzero(cand)[np.argmax(w[cand])])
        if not fac.add(j):
            blocked[j] = True
            continue
        passive[j] = True
        x_new = inner(x)
        r_new = b - A @ x_new
        res_new = float(np.linalg.norm(r_new))
        if passive[j] and res_new < res * (1.0 - 1e-13):
            x, r, res = x_new, r_new, res_new
            blocked[:] = False
        else:
            # no real progress from column j: skip it until the iterate moves
            if res_new < res:
                x, r, res = x_new, r_new, res_new
            reset(x > 0)
            x[~passive] = 0.0
            blocked[j] = True
    return x, res, it
