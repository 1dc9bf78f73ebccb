"""First variations of length and thickness.

A variation field ``xi`` is an ``(N, 3)`` array with one vector per vertex,
aligned with ``link.vertices``. Constraint rows are the per-strut and
per-kink linear functionals whose minimum is the one-sided derivative of
thickness.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .link import LinkError, PolyLink
from .thickness import Kink, Strut, ThicknessReport

TIE_TOL = 1e-9


@dataclass(frozen=True)
class ConstraintRow:
    kind: str  # "strut" or "kink"
    vertices: np.ndarray  # global vertex indices
    coeffs: np.ndarray  # (k, 3)
    reference: object
    branch: str = ""  # kinks: which adjacent edge sets the radius, "in" or "out"

    def apply(self, xi) -> float:
        return float(np.einsum("ij,ij->", self.coeffs, np.asarray(xi)[self.vertices]))

    def dense(self, n_vertices: int) -> np.ndarray:
        out = np.zeros((n_vertices, 3))
        np.add.at(out, self.vertices, self.coeffs)
        return out


def as_field(link: PolyLink, xi) -> np.ndarray:
    xi = np.asarray(xi, dtype=float)
    if xi.shape != (link.n_vertices, 3):
        raise LinkError(f"field shape {xi.shape} does not match link with {link.n_vertices} vertices")
    return xi


def length_gradient(link: PolyLink) -> np.ndarray:
    """Per-vertex gradient of total length: incoming minus outgoing unit edge."""
    start, end, _ = link.edge_index()
    v = link.vertices
    d = v[end] - v[start]
    u = d / np.linalg.norm(d, axis=1)[:, None]
    g = np.zeros_like(v)
    np.add.at(g, end, u)
    np.subtract.at(g, start, u)
    return g


def delta_length(link: PolyLink, xi) -> float:
    """``sum over edges <unit edge, xi_end - xi_start>``."""
    xi = as_field(link, xi)
    start, end, _ = link.edge_index()
    v = link.vertices
    d = v[end] - v[start]
    u = d / np.linalg.norm(d, axis=1)[:, None]
    return float(np.einsum("ij,ij->", u, xi[end] - xi[start]))


def _merge(vertices, coeffs):
    idx, inv = np.unique(vertices, return_inverse=True)
    out = np.zeros((len(idx), 3))
    np.add.at(out, inv, coeffs)
    nz = np.any(out != 0.0, axis=1)
    return idx[nz], out[nz]


def strut_row(link: PolyLink, s: Strut) -> ConstraintRow:
    """Row with ``r . xi = 1/2 <(x - y)/|x - y|, xi_x - xi_y>``."""
    ends = []
    pts = []
    for p in (s.a, s.b):
        c, e, t = p
        if not (0 <= c < link.n_components and 0 <= e < len(link.components[c])):
            raise LinkError(f"stale strut endpoint {p}")
        n = len(link.components[c])
        i0 = link.global_vertex(c, e)
        i1 = link.global_vertex(c, (e + 1) % n)
        ends.append((i0, i1, t))
        comp = link.components[c]
        pts.append((1 - t) * comp[e] + t * comp[(e + 1) % n])
    w = pts[0] - pts[1]
    d = np.linalg.norm(w)
    if d == 0.0:
        raise LinkError("degenerate strut")
    w = 0.5 * w / d
    (a0, a1, ta), (b0, b1, tb) = ends
    verts = np.array([a0, a1, b0, b1])
    coeffs = np.array([(1 - ta) * w, ta * w, -(1 - tb) * w, -tb * w])
    verts, coeffs = _merge(verts, coeffs)
    return ConstraintRow("strut", verts, coeffs, s)


def _rho_gradient(p, v, n, use_in: bool):
    """Value and gradients of ``rho = l f / (2 g)`` with respect to the
    previous, middle and next vertex; ``l`` is the incoming edge length when
    ``use_in`` else the outgoing one."""
    a = v - p
    b = n - v
    la = np.linalg.norm(a)
    lb = np.linalg.norm(b)
    c = np.cross(a, b)
    g = np.linalg.norm(c)
    if g == 0.0:
        raise LinkError("straight vertex has infinite radius; not a kink")
    c_hat = c / g
    f = la * lb + a @ b
    ell = la if use_in else lb
    rho = ell * f / (2.0 * g)
    df_da = lb * a / la + b
    df_db = la * b / lb + a
    dg_da = np.cross(b, c_hat)
    dg_db = np.cross(c_hat, a)
    dl_da = a / la if use_in else np.zeros(3)
    dl_db = np.zeros(3) if use_in else b / lb
    d_a = (dl_da * f + ell * df_da) / (2.0 * g) - rho * dg_da / g
    d_b = (dl_db * f + ell * df_db) / (2.0 * g) - rho * dg_db / g
    return rho, -d_a, d_a - d_b, d_b


def _kink_vertices(link: PolyLink, k: Kink):
    c, i = k.component, k.vertex
    if not (0 <= c < link.n_components and 0 <= i < len(link.components[c])):
        raise LinkError(f"stale kink {k}")
    n = len(link.components[c])
    comp = link.components[c]
    gi = [link.global_vertex(c, (i - 1) % n), link.global_vertex(c, i),
          link.global_vertex(c, (i + 1) % n)]
    return gi, comp[(i - 1) % n], comp[i], comp[(i + 1) % n]


def kink_row(link: PolyLink, k: Kink, *, use_in: bool | None = None) -> ConstraintRow:
    """Row with ``r . xi`` the exact derivative of the vertex radius.

    By default the shorter adjacent edge is used, ties going to the incoming
    edge.
    """
    gi, p, v, n = _kink_vertices(link, k)
    if use_in is None:
        use_in = np.linalg.norm(v - p) <= np.linalg.norm(n - v)
    _, gp, gv, gn = _rho_gradient(p, v, n, use_in)
    verts, coeffs = _merge(np.array(gi), np.array([gp, gv, gn]))
    return ConstraintRow("kink", verts, coeffs, k, "in" if use_in else "out")


def kink_rows(link: PolyLink, k: Kink, tie_tol: float = TIE_TOL) -> list:
    """One row, or two when the adjacent edge lengths tie within ``tie_tol``.

    At a tie the radius is a minimum of two smooth functions and its
    one-sided derivative is the minimum over both branches.
    """
    gi, p, v, n = _kink_vertices(link, k)
    la, lb = np.linalg.norm(v - p), np.linalg.norm(n - v)
    if abs(la - lb) <= tie_tol * max(la, lb):
        return [kink_row(link, k, use_in=True), kink_row(link, k, use_in=False)]
    return [kink_row(link, k)]


def row_key(row: ConstraintRow) -> tuple:
    """Identity of a row that survives small moves of the link."""
    ref = row.reference
    if row.kind == "strut":
        return ("strut", ref.a[0], ref.a[1], ref.b[0], ref.b[1])
    return ("kink", ref.component, ref.vertex, row.branch)


def constraint_rows(link: PolyLink, report: ThicknessReport) -> list:
    """Struts first, then kinks, each in report order."""
    rows = [strut_row(link, s) for s in report.struts]
    for k in report.kinks:
        rows.extend(kink_rows(link, k))
    return rows


def row_matrix(link: PolyLink, rows) -> sp.csr_matrix:
    """Sparse ``(m, 3N)`` matrix of constraint rows over flattened fields."""
    data, ri, ci = [], [], []
    for r, row in enumerate(rows):
        cols = (3 * row.vertices[:, None] + np.arange(3)).ravel()
        data.append(row.coeffs.ravel())
        ci.append(cols)
        ri.append(np.full(len(cols), r))
    n = 3 * link.n_vertices
    if not rows:
        return sp.csr_matrix((0, n))
    return sp.csr_matrix((np.concatenate(data), (np.concatenate(ri), np.concatenate(ci))),
                         shape=(len(rows), n))


def delta_thickness(link: PolyLink, xi, report: ThicknessReport, rows=None) -> float:
    """One-sided derivative of thickness: min over near-active rows.

    Returns ``inf`` when the report has no active constraint.
    """
    xi = as_field(link, xi)
    if rows is None:
        rows = constraint_rows(link, report)
    if not rows:
        return math.inf
    return float(min(row.apply(xi) for row in rows))
