"""Criticality certificates.

A link is critical when no variation shortens it to first order without
thinning it to first order. By Farkas' lemma this is equivalent to the
length gradient lying in the cone spanned by the active constraint rows,
which we test with nonnegative least squares. The relative residual is the
certificate: 0 means exactly balanced, 1 means nothing opposes shortening.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .link import PolyLink
from .nnls import nnls
from .symmetry import SymmetryGroup, averaging_operator
from .thickness import ThicknessReport
from .variation import constraint_rows, length_gradient, row_key, row_matrix

DEFAULT_EPS_NUMERIC = 0.05
DEFAULT_EPS_ANALYTIC = 1e-3


@dataclass
class CriticalityCertificate:
    residual: float
    multipliers: list = field(repr=False)  # (ConstraintRow, lambda) with lambda > 0
    mode: str
    active_counts: tuple
    gradient_norm: float = 0.0
    iterations: int = 0

    def certifies(self, eps: float = DEFAULT_EPS_NUMERIC) -> bool:
        return self.residual <= eps

    def multiplier_stats(self) -> dict:
        lam = np.array([m for _, m in self.multipliers])
        if lam.size == 0:
            return {"count": 0, "sum": 0.0, "max": 0.0, "min": 0.0}
        return {"count": int(lam.size), "sum": float(lam.sum()),
                "max": float(lam.max()), "min": float(lam.min())}


def balance(link: PolyLink, rows, project=None, init_passive=None):
    """Solve ``min ||grad L - sum lambda_i r_i||`` over ``lambda >= 0``.

    ``project`` is an optional linear operator applied to the gradient and
    every row first (G-restricted mode). Returns ``(lambda, residual_vector,
    gradient, iterations)`` on flattened fields.
    """
    g = length_gradient(link).ravel()
    R = row_matrix(link, rows)
    if project is not None:
        g = project @ g
        R = (R @ project.T).tocsr()
    if R.shape[0] == 0:
        return np.zeros(0), g.copy(), g, 0
    lam, _, it = nnls(R.T, g, init_passive=init_passive)
    res = g - R.T @ lam
    return lam, np.asarray(res).ravel(), g, it


def certify(link: PolyLink, report: ThicknessReport, mode: str = "full",
            group: SymmetryGroup | None = None, actions=None) -> CriticalityCertificate:
    """Relative NNLS residual of the length gradient against active rows.

    ``mode="sym"`` projects the gradient and all rows onto G-invariant fields
    with the group average first.
    """
    if mode not in ("full", "sym"):
        raise ValueError(f"unknown mode {mode!r}")
    rows = constraint_rows(link, report)
    project = None
    if mode == "sym":
        if group is None or actions is None:
            raise ValueError("sym mode needs a group and its curve actions")
        project = averaging_operator(link, actions)
    lam, res, g, it = balance(link, rows, project)
    gnorm = float(np.linalg.norm(g))
    rel = float(np.linalg.norm(res) / gnorm) if gnorm > 0 else 0.0
    mults = sorted(((rows[k], float(lam[k])) for k in np.flatnonzero(lam > 0)),
                   key=lambda m: row_key(m[0]))
    return CriticalityCertificate(rel, mults, mode, (report.n_struts, report.n_kinks), gnorm, it)


def shortening_probe(link: PolyLink, report: ThicknessReport, box: float = 1.0):
    """Primal check of criticality by linear programming.

    Maximizes ``t`` subject to ``r . xi >= t`` for every active row,
    ``delta_length(xi) <= -1`` and ``|xi|_inf <= box``. A critical link has
    optimum ``t < 0``. Returns ``(t, xi)``; ``t`` is ``None`` when no field
    in the box shortens by 1.
    """
    from scipy.optimize import linprog

    rows = constraint_rows(link, report)
    g = length_gradient(link).ravel()
    R = row_matrix(link, rows).toarray()
    nv = g.size
    c = np.zeros(nv + 1)
    c[-1] = -1.0
    A_ub = [np.concatenate([g, [0.0]])]
    b_ub = [-1.0]
    for r in R:
        A_ub.append(np.concatenate([-r, [1.0]]))
        b_ub.append(0.0)
    bounds = [(-box, box)] * nv + [(None, None)]
    sol = linprog(c, A_ub=np.array(A_ub), b_ub=np.array(b_ub), bounds=bounds, method="highs")
    if sol.status != 0:
        return None, None
    return float(sol.x[-1]), sol.x[:-1].reshape(-1, 3)
