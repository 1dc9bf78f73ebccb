"""Thickness (reach), struts and kinks of closed polygonal links.

Thickness is ``min(min_rad, d*)`` where ``min_rad`` is the smallest
polygonal vertex radius ``min(|e-|, |e+|) / (2 tan(theta / 2))`` and ``d*``
is half the length of the shortest doubly critical chord. A round circle of
radius 1 therefore has thickness 1 and ropelength ``2 pi``.

A chord between edge points ``x`` and ``y`` is doubly critical when it is a
local minimum of self-distance: at an interior edge point it is
perpendicular to the edge, and at a vertex it lies in the vertex normal
cone (between the normal planes of the two adjacent edges).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .bvh import SegmentTree
from .link import ArcPosition, LinkError, PolyLink, tangent_at, point_at, total_length

DEFAULT_TOL = 1e-4
CONE_SLACK = 1e-9


class CuspError(LinkError):
    pass


@dataclass(frozen=True)
class Strut:
    a: ArcPosition
    b: ArcPosition
    chord_length: float
    penalized_length: float

    @property
    def half_length(self) -> float:
        return 0.5 * self.penalized_length


@dataclass(frozen=True)
class Kink:
    component: int
    vertex: int
    radius: float


@dataclass(frozen=True)
class ThicknessReport:
    thickness: float
    min_rad: float
    min_strut_half_length: float
    struts: list = field(default_factory=list)
    kinks: list = field(default_factory=list)
    tolerance: float = DEFAULT_TOL

    @property
    def n_struts(self) -> int:
        return len(self.struts)

    @property
    def n_kinks(self) -> int:
        return len(self.kinks)


# -- kinks -------------------------------------------------------------------

def vertex_radii(link: PolyLink) -> np.ndarray:
    """Polygonal radius ``rho(v)`` at every vertex; ``inf`` where straight."""
    prev, nxt = link.neighbors()
    v = link.vertices
    a = v - v[prev]
    b = v[nxt] - v
    la = np.linalg.norm(a, axis=1)
    lb = np.linalg.norm(b, axis=1)
    cross = np.linalg.norm(np.cross(a, b), axis=1)
    f = la * lb + np.einsum("ij,ij->i", a, b)
    cusp = f <= 1e-14 * la * lb
    if np.any(cusp):
        k = int(np.flatnonzero(cusp)[0])
        raise CuspError(f"cusp vertex at global index {k}")
    with np.errstate(divide="ignore"):
        rho = np.minimum(la, lb) * f / (2.0 * cross)
    rho[cross == 0.0] = np.inf
    return rho


def _split_global(link: PolyLink, k: int):
    c = int(np.searchsorted(link.offsets, k, side="right") - 1)
    return c, int(k - link.offsets[c])


def min_rad(link: PolyLink, tol: float = DEFAULT_TOL):
    """Smallest vertex radius and the kinks within ``tol`` of it (relative)."""
    link.require_closed()
    rho = vertex_radii(link)
    m = float(rho.min())
    return m, _kinks_below(link, rho, m * (1.0 + tol))


def _kinks_below(link, rho, bound):
    out = []
    for k in np.flatnonzero(rho <= bound):
        c, i = _split_global(link, int(k))
        out.append(Kink(c, i, float(rho[k])))
    return out


# -- penalized distance ------------------------------------------------------

def penalized_distance(link: PolyLink, a: ArcPosition, b: ArcPosition) -> float:
    """``|x - y| sec^2(psi)`` with ``psi`` the angle from chord to normal plane at x."""
    x = point_at(link, a)
    y = point_at(link, b)
    w = y - x
    d = float(np.linalg.norm(w))
    if d == 0.0:
        return math.inf
    c = float(np.dot(w / d, tangent_at(link, a)))
    cos2 = 1.0 - c * c
    if cos2 <= 0.0:
        return math.inf
    return d / cos2


def _cone_sin(w_hat, u_in, u_out, at_vertex):
    """Sine of the angle between unit chords and the normal plane/cone.

    ``u_in``/``u_out`` are unit directions of the edges before and after a
    vertex; for interior points both are the edge direction.
    """
    c_in = np.einsum("ij,ij->i", w_hat, u_in)
    c_out = np.einsum("ij,ij->i", w_hat, u_out)
    # inside the cone iff c_in and c_out bracket zero
    inside = (c_in <= 0) & (c_out >= 0) | (c_in >= 0) & (c_out <= 0)
    s = np.minimum(np.abs(c_in), np.abs(c_out))
    # interior minimizers are perpendicular by optimality
    return np.where(at_vertex & ~inside, s, 0.0)


# -- segment closest points --------------------------------------------------

def segment_closest_params(p0, p1, q0, q1):
    """Minimizing parameters ``(s, t)`` of ``|p(s) - q(t)|`` over ``[0,1]^2``.

    Vectorized over leading axis. For parallel segments the midpoint of the
    overlap is used.
    """
    d1 = p1 - p0
    d2 = q1 - q0
    r = p0 - q0
    a = np.einsum("ij,ij->i", d1, d1)
    e = np.einsum("ij,ij->i", d2, d2)
    b = np.einsum("ij,ij->i", d1, d2)
    c = np.einsum("ij,ij->i", d1, r)
    f = np.einsum("ij,ij->i", d2, r)
    denom = a * e - b * b
    parallel = denom <= 1e-12 * a * e
    with np.errstate(divide="ignore", invalid="ignore"):
        s = np.clip((b * f - c * e) / denom, 0.0, 1.0)
        # parallel: midpoint of the overlap of q's projection with [0, 1]
        u0 = -c / a
        u1 = (b - c) / a
        lo = np.maximum(np.minimum(u0, u1), 0.0)
        hi = np.minimum(np.maximum(u0, u1), 1.0)
        beyond = np.minimum(u0, u1) > 1.0
        s_par = np.where(lo <= hi, 0.5 * (lo + hi), np.where(beyond, 1.0, 0.0))
        s = np.where(parallel, s_par, s)
        t = (b * s + f) / e
    low = t < 0.0
    high = t > 1.0
    t = np.clip(t, 0.0, 1.0)
    s = np.where(low, np.clip(-c / a, 0.0, 1.0), s)
    s = np.where(high, np.clip((b - c) / a, 0.0, 1.0), s)
    return s, t


# -- struts ------------------------------------------------------------------

class _EdgeData:
    def __init__(self, link: PolyLink):
        link.require_closed()
        self.link = link
        self.touching = False  # set once two non-adjacent edges meet
        self.start, self.end, self.comp = link.edge_index()
        v = link.vertices
        self.v = v
        d = v[self.end] - v[self.start]
        self.length = np.linalg.norm(d, axis=1)
        self.u = d / self.length[:, None]
        prev_edge = np.empty_like(self.start)
        prev_edge[self.end] = self.start  # edge ending at vertex k is edge prev(k)
        self.prev_edge = prev_edge  # edge before edge k
        next_edge = np.empty_like(self.start)
        next_edge[self.start] = self.end
        self.next_edge = next_edge  # edge after edge k (edge k+1 starts at end of k)
        # arclength along each component
        self.cum = np.zeros(len(self.start))
        self.comp_len = np.zeros(link.n_components)
        for c, (lo, hi) in enumerate(zip(link.offsets[:-1], link.offsets[1:])):
            seg = self.length[lo:hi]
            self.cum[lo:hi] = np.concatenate([[0.0], np.cumsum(seg)[:-1]])
            self.comp_len[c] = seg.sum()

    def candidate_mask(self, i, j, exclude_arc):
        """Drop pairs sharing a vertex and same-component pairs closer than ``exclude_arc``."""
        ok = (self.start[i] != self.end[j]) & (self.end[i] != self.start[j]) & (i != j)
        same = self.comp[i] == self.comp[j]
        if exclude_arc > 0 and np.any(same):
            lo = np.minimum(i, j)
            hi = np.maximum(i, j)
            gap_fwd = self.cum[hi] - (self.cum[lo] + self.length[lo])
            L = self.comp_len[self.comp[lo]]
            gap_bwd = L - (self.cum[hi] + self.length[hi]) + self.cum[lo]
            gap = np.minimum(gap_fwd, gap_bwd)
            ok &= ~same | (gap >= exclude_arc)
        return ok

    def doubly_critical(self, i, j):
        """Closest points on edge pairs and the doubly critical subset.

        Returns ``(i, s, j, t, chord, pd)`` for accepted chords, with vertex
        endpoints canonicalized to ``t == 0`` on the outgoing edge and
        duplicates removed.
        """
        v = self.v
        s, t = segment_closest_params(v[self.start[i]], v[self.end[i]],
                                      v[self.start[j]], v[self.end[j]])
        x = v[self.start[i]] + s[:, None] * (v[self.end[i]] - v[self.start[i]])
        y = v[self.start[j]] + t[:, None] * (v[self.end[j]] - v[self.start[j]])
        w = x - y
        chord = np.linalg.norm(w, axis=1)
        nz = chord > 0
        self.touching = self.touching or not np.all(nz)
        i, j, s, t, w, chord = i[nz], j[nz], s[nz], t[nz], w[nz], chord[nz]
        w_hat = w / chord[:, None]
        sin_x = self._end_sin(i, s, -w_hat)
        sin_y = self._end_sin(j, t, w_hat)
        ok = (sin_x <= CONE_SLACK) & (sin_y <= CONE_SLACK)
        i, j, s, t, chord = i[ok], j[ok], s[ok], t[ok], chord[ok]
        sin2 = np.maximum(sin_x[ok], sin_y[ok]) ** 2
        pd = chord / (1.0 - sin2)
        # canonical vertex representation
        i = np.where(s == 1.0, self.next_edge[i], i)
        s = np.where(s == 1.0, 0.0, s)
        j = np.where(t == 1.0, self.next_edge[j], j)
        t = np.where(t == 1.0, 0.0, t)
        swap = (i > j) | ((i == j) & (s > t))
        i, j = np.where(swap, j, i), np.where(swap, i, j)
        s, t = np.where(swap, t, s), np.where(swap, s, t)
        if len(i) == 0:
            return i, s, j, t, chord, pd
        key = np.stack([i, np.round(s, 12), j, np.round(t, 12)], axis=1)
        _, first = np.unique(key, axis=0, return_index=True)
        first = np.sort(first)
        return i[first], s[first], j[first], t[first], chord[first], pd[first]

    def _end_sin(self, e, s, w_from):
        """Chord-to-normal-cone sine at edge points; ``w_from`` points away from the curve."""
        at_start = s == 0.0
        at_end = s == 1.0
        u = self.u[e]
        u_in = np.where(at_start[:, None], self.u[self.prev_edge[e]], u)
        u_out = np.where(at_end[:, None], self.u[self.next_edge[e]], u)
        return _cone_sin(w_from, u_in, u_out, at_start | at_end)

    def to_struts(self, i, s, j, t, chord, pd):
        link = self.link
        out = []
        for a, sa, b, tb, c, p in zip(i, s, j, t, chord, pd):
            ca, ea = _split_global(link, int(a))
            cb, eb = _split_global(link, int(b))
            out.append(Strut(ArcPosition(ca, ea, float(sa)), ArcPosition(cb, eb, float(tb)),
                             float(c), float(p)))
        out.sort(key=lambda st: (st.a, st.b))
        return out


def _all_pairs(n):
    i, j = np.triu_indices(n, k=1)
    return i, j


def strut_search(link: PolyLink, tol: float = DEFAULT_TOL, *, use_tree: bool = True,
                 exclude_arc: float | None = None):
    """Shortest doubly critical half-chord ``d*`` and all struts within ``tol``.

    Returns ``(d_star, struts)``; ``d_star`` is ``inf`` when the link has no
    doubly critical chord. Pairs closer than ``exclude_arc`` along the same
    component (default ``2 * min_rad``) are skipped.
    """
    if tol < 0:
        raise ValueError("tol must be nonnegative")
    ed = _EdgeData(link)
    if exclude_arc is None:
        exclude_arc = 2.0 * float(vertex_radii(link).min())
        if not np.isfinite(exclude_arc):
            exclude_arc = 0.0
    found = _search(ed, tol, use_tree, exclude_arc)
    if found is None:
        return math.inf, []
    d_star, cols = found
    return d_star, ed.to_struts(*cols)


def _search(ed: _EdgeData, tol, use_tree, exclude_arc, bound=None):
    v = ed.v
    extent = float(np.linalg.norm(v.max(axis=0) - v.min(axis=0)))
    if not use_tree:
        i, j = _all_pairs(len(ed.start))
        ok = ed.candidate_mask(i, j, exclude_arc)
        cols = ed.doubly_critical(i[ok], j[ok])
        if ed.touching:
            return 0.0, tuple(c[:0] for c in cols)
        if len(cols[0]) == 0:
            return None
        d_star = 0.5 * float(cols[5].min())
        keep = 0.5 * cols[5] <= d_star * (1.0 + tol)
        return d_star, tuple(c[keep] for c in cols)
    tree = SegmentTree(v[ed.start], v[ed.end])
    reach = bound if bound is not None else 2.0 * float(ed.length.max())
    reach = max(reach * (1.0 + 1e-6), 1e-300)
    while True:
        pairs = tree.near_pairs(reach)
        i, j = pairs[:, 0], pairs[:, 1]
        ok = ed.candidate_mask(i, j, exclude_arc)
        cols = ed.doubly_critical(i[ok], j[ok])
        if ed.touching:
            return 0.0, tuple(c[:0] for c in cols)
        within = cols[4] <= reach
        if np.any(within):
            d_star = 0.5 * float(cols[5][within].min())
            need = 2.0 * d_star * (1.0 + tol)
            if need <= reach:
                keep = 0.5 * cols[5] <= d_star * (1.0 + tol)
                return d_star, tuple(c[keep] for c in cols)
            reach = need * (1.0 + 1e-12)
            continue
        if reach > extent:
            return None
        reach *= 2.0


def brute_force_struts(link: PolyLink, tol: float = DEFAULT_TOL):
    """Reference O(E^2) strut search: plain loops, scalar closest points, no pruning.

    Only edge pairs sharing a vertex are skipped.
    """
    link.require_closed()
    comps = [np.asarray(c) for c in link.components]
    edges = []
    for c, comp in enumerate(comps):
        n = len(comp)
        for e in range(n):
            edges.append((c, e, n))
    cands = {}
    for ia in range(len(edges)):
        for ib in range(ia + 1, len(edges)):
            ca, ea, na = edges[ia]
            cb, eb, nb = edges[ib]
            if ca == cb and (eb == (ea + 1) % na or ea == (eb + 1) % na):
                continue
            P0, P1 = comps[ca][ea], comps[ca][(ea + 1) % na]
            Q0, Q1 = comps[cb][eb], comps[cb][(eb + 1) % nb]
            s, t = _scalar_closest(P0, P1, Q0, Q1)
            x = P0 + s * (P1 - P0)
            y = Q0 + t * (Q1 - Q0)
            w = x - y
            d = float(np.sqrt(w @ w))
            if d == 0.0:
                continue
            if not (_scalar_in_cone(comps[ca], ea, s, -w / d) and
                    _scalar_in_cone(comps[cb], eb, t, w / d)):
                continue
            pa = _scalar_canonical(ca, ea, s, na)
            pb = _scalar_canonical(cb, eb, t, nb)
            key = tuple(sorted([(pa[0], pa[1], round(pa[2], 12)),
                                (pb[0], pb[1], round(pb[2], 12))]))
            cands[key] = d
    if not cands:
        return math.inf, []
    d_star = 0.5 * min(cands.values())
    struts = [Strut(ArcPosition(*ka), ArcPosition(*kb), d, d)
              for (ka, kb), d in cands.items() if 0.5 * d <= d_star * (1.0 + tol)]
    struts.sort(key=lambda st: (st.a, st.b))
    return d_star, struts


def _scalar_closest(P0, P1, Q0, Q1):
    # coarse grid then exact minimization over the four edges of the square
    # and the interior stationary point
    d1, d2, r = P1 - P0, Q1 - Q0, P0 - Q0
    a, e, b = d1 @ d1, d2 @ d2, d1 @ d2
    c, f = d1 @ r, d2 @ r

    def dist2(s, t):
        w = r + s * d1 - t * d2
        return w @ w

    cands = []
    det = a * e - b * b
    if det > 1e-12 * a * e:
        s = (b * f - c * e) / det
        t = (a * f - b * c) / det
        if 0.0 < s < 1.0 and 0.0 < t < 1.0:
            return s, t
    for s in (0.0, 1.0):
        t = min(max((b * s + f) / e, 0.0), 1.0)
        cands.append((dist2(s, t), s, t))
    for t in (0.0, 1.0):
        s = min(max((b * t - c) / a, 0.0), 1.0)
        cands.append((dist2(s, t), s, t))
    best = min(x[0] for x in cands)
    close = [x for x in cands if x[0] <= best * (1 + 1e-12) + 1e-300]
    if det <= 1e-12 * a * e and len(close) > 1:
        # parallel family: midpoint of the minimizing segment
        u0, u1 = -c / a, (b - c) / a
        lo, hi = max(min(u0, u1), 0.0), min(max(u0, u1), 1.0)
        if lo <= hi:
            s = 0.5 * (lo + hi)
            return s, min(max((b * s + f) / e, 0.0), 1.0)
    return close[0][1], close[0][2]


def _scalar_in_cone(comp, e, s, w_from):
    n = len(comp)

    def unit(k):
        d = comp[(k + 1) % n] - comp[k % n]
        return d / np.sqrt(d @ d)

    if 0.0 < s < 1.0:
        return True
    if s == 0.0:
        u_in, u_out = unit(e - 1), unit(e)
    else:
        u_in, u_out = unit(e), unit(e + 1)
    ci, co = w_from @ u_in, w_from @ u_out
    if (ci <= 0 <= co) or (co <= 0 <= ci):
        return True
    return min(abs(ci), abs(co)) <= CONE_SLACK


def _scalar_canonical(c, e, s, n):
    if s == 1.0:
        return (c, (e + 1) % n, 0.0)
    return (c, e, float(s))


def thickness(link: PolyLink, tol: float = DEFAULT_TOL) -> ThicknessReport:
    """Thickness report: value, min_rad, ``d*`` and the near-active struts and kinks."""
    link.require_closed()
    rho = vertex_radii(link)
    mr = float(rho.min())
    ed = _EdgeData(link)
    exclude = 2.0 * mr if np.isfinite(mr) else 0.0
    found = _search(ed, tol, True, exclude, bound=2.0 * mr * (1.0 + tol) if np.isfinite(mr) else None)
    if found is None:
        d_star, struts = math.inf, []
    else:
        d_star, cols = found
        struts = ed.to_struts(*cols)
    thi = min(mr, d_star)
    bound = thi * (1.0 + tol)
    struts = [s for s in struts if s.half_length <= bound]
    kinks = _kinks_below(link, rho, bound)
    return ThicknessReport(thi, mr, d_star, struts, kinks, tol)


def ropelength(link: PolyLink, report: ThicknessReport | None = None) -> float:
    thi = (report or thickness(link)).thickness
    if not thi > 0 or not np.isfinite(thi):
        raise LinkError(f"ropelength undefined for thickness {thi}")
    return total_length(link) / thi
