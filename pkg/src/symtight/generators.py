"""Seed configurations with built-in symmetry."""

from __future__ import annotations

from dataclasses import dataclass
from math import gcd

import numpy as np

from .link import LinkError, PolyLink
from .symmetry import reflection


@dataclass(frozen=True)
class TorusKnotSpec:
    p: int
    q: int
    n: int
    mode: str = "p"  # "p": invariant under cyclic(p, z); "q": under cyclic(q, z)
    major_radius: float = 2.0
    minor_radius: float = 1.0

    def __post_init__(self):
        if self.p < 1 or self.q < 1 or gcd(self.p, self.q) != 1:
            raise LinkError(f"({self.p},{self.q}) is not a coprime pair of positive integers")
        if not self.major_radius > self.minor_radius > 0:
            raise LinkError("need major radius > minor radius > 0")
        if self.mode not in ("p", "q"):
            raise LinkError(f"unknown torus knot mode {self.mode!r}")
        if self.n % self.order:
            raise LinkError(f"n={self.n} is not divisible by the symmetry order {self.order}")

    @property
    def order(self) -> int:
        return self.p if self.mode == "p" else self.q


def torus_knot(spec: TorusKnotSpec) -> PolyLink:
    """Sample the (p, q) torus knot with exact ``order``-fold symmetry about z.

    The curve winds ``order`` times around the tube and the other count
    times around the z axis, so rotation by ``2 pi / order`` maps vertex
    ``j`` to vertex ``j + n / order``.
    """
    a = spec.order
    b = spec.q if spec.mode == "p" else spec.p
    th = 2.0 * np.pi * np.arange(spec.n) / spec.n
    rad = spec.major_radius + spec.minor_radius * np.cos(a * th)
    pts = np.column_stack([rad * np.cos(b * th), rad * np.sin(b * th),
                           spec.minor_radius * np.sin(a * th)])
    return PolyLink((pts,))


def circle(n: int, radius: float = 1.0, center=(0.0, 0.0, 0.0), normal=(0.0, 0.0, 1.0)) -> PolyLink:
    if n < 3:
        raise LinkError("a circle needs at least 3 vertices")
    return PolyLink((_circle_points(n, radius, center, normal),))


def _circle_points(n, radius, center=(0.0, 0.0, 0.0), normal=(0.0, 0.0, 1.0), phase=0.0):
    normal = np.asarray(normal, dtype=float)
    normal = normal / np.linalg.norm(normal)
    helper = np.array([1.0, 0, 0]) if abs(normal[0]) < 0.9 else np.array([0, 1.0, 0])
    e1 = np.cross(normal, helper)
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(normal, e1)
    th = phase + 2.0 * np.pi * np.arange(n) / n
    return (np.asarray(center, dtype=float) + radius * np.outer(np.cos(th), e1)
            + radius * np.outer(np.sin(th), e2))


def stadium_points(n: int, straight_length: float = 2.0, radius: float = 1.0):
    """Equal-arclength samples of a planar stadium centred at the origin.

    The straights run parallel to x; vertex 0 is the midpoint of the lower
    straight.
    """
    half = 0.5 * straight_length
    total = 2.0 * straight_length + 2.0 * np.pi * radius
    s = np.arange(n) * (total / n)
    pts = np.zeros((n, 3))
    arc = np.pi * radius
    for k, sk in enumerate(s):
        if sk < half:
            pts[k] = (sk, -radius, 0.0)
        elif sk < half + arc:
            a = (sk - half) / radius - 0.5 * np.pi
            pts[k] = (half + radius * np.cos(a), radius * np.sin(a), 0.0)
        elif sk < half + arc + straight_length:
            pts[k] = (half - (sk - half - arc), radius, 0.0)
        elif sk < half + 2 * arc + straight_length:
            a = (sk - half - arc - straight_length) / radius + 0.5 * np.pi
            pts[k] = (-half + radius * np.cos(a), radius * np.sin(a), 0.0)
        else:
            pts[k] = (-half + (sk - half - 2 * arc - straight_length), -radius, 0.0)
    return pts


def stadium(n: int, straight_length: float = 2.0) -> PolyLink:
    """Two unit semicircles joined by straights of ``straight_length``."""
    if n < 4 or n % 4:
        raise LinkError("stadium vertex count must be a positive multiple of 4")
    return PolyLink((stadium_points(n, straight_length),))


def _bridge(p, q, spacing):
    """Interior points of the segment p -> q at roughly ``spacing``; an odd
    number of pieces so no vertex lands on the midpoint plane."""
    m = max(1, int(np.ceil(np.linalg.norm(q - p) / spacing)))
    if m % 2 == 0:
        m += 1
    t = np.arange(1, m) / m
    return p + t[:, None] * (q - p)


def connect_sum_mirror(k: PolyLink, plane_normal=(0.0, 0.0, 1.0), gap: float = 0.0,
                       splice=None, connect_sum: bool = True, width: float | None = None) -> PolyLink:
    """Join a one-component curve to its mirror image across a plane through 0.

    The curve is cut at two splice vertices ``a`` and ``b``; the arc between
    them that passes nearest the plane is dropped. ``a`` is joined to its
    mirror image and ``b`` to its own, by bridges perpendicular to the plane,
    giving one closed curve (the connect sum). With ``connect_sum=False`` the
    two halves are instead closed separately, giving the split union.

    By default the splice vertices sit on either side of the vertex nearest
    the plane, ``width`` apart (default: twice the mean edge length times the
    vertex count over 50, i.e. a short arc).
    """
    if k.n_components != 1:
        raise LinkError("connect_sum_mirror expects a single component")
    nrm = np.asarray(plane_normal, dtype=float)
    nrm = nrm / np.linalg.norm(nrm)
    v = k.components[0]
    n = len(v)
    h = v @ nrm
    if not (np.all(h > 0) or np.all(h < 0)):
        raise LinkError("curve meets the mirror plane")
    if np.min(np.abs(h)) < gap:
        raise LinkError("curve is closer to the plane than the requested gap")
    spacing = float(np.mean(np.linalg.norm(np.roll(v, -1, axis=0) - v, axis=1)))
    if splice is None:
        order = np.argsort(np.abs(h), kind="stable")
        if abs(abs(h[order[0]]) - abs(h[order[1]])) <= 1e-9 * max(1.0, abs(h[order[0]])):
            raise LinkError("splice vertices are ambiguous; pass splice explicitly")
        c = int(order[0])
        width = width if width is not None else spacing * max(2, n // 25)
        m = 1
        while np.linalg.norm(v[(c - m) % n] - v[(c + m) % n]) < width and 2 * m < n // 2:
            m += 1
        a, b = (c - m) % n, (c + m) % n
    else:
        a, b = (int(x) % n for x in splice)
        if a == b:
            raise LinkError("splice vertices must differ")
        # keep the longer arc: drop whichever arc passes nearer the plane
        arc_ab = v[(a + np.arange(1, (b - a) % n)) % n]
        arc_ba = v[(b + np.arange(1, (a - b) % n)) % n]
        near_ab = np.min(np.abs(arc_ab @ nrm)) if len(arc_ab) else np.inf
        near_ba = np.min(np.abs(arc_ba @ nrm)) if len(arc_ba) else np.inf
        if near_ba < near_ab:
            a, b = b, a
    # kept arc runs b -> a the long way round; the dropped arc is a -> b
    path = v[(b + np.arange((a - b) % n + 1)) % n]
    mirror = reflection(nrm).apply(path)
    pa, pb = path[-1], path[0]
    ma, mb = mirror[-1], mirror[0]
    if connect_sum:
        pts = np.vstack([path, _bridge(pa, ma, spacing), mirror[::-1], _bridge(mb, pb, spacing)])
        return PolyLink((pts,))
    close = _bridge(pa, pb, spacing)
    half = np.vstack([path, close])
    return PolyLink((half, reflection(nrm).apply(half)[::-1]))


def plane_crossings(link: PolyLink, plane_normal) -> np.ndarray:
    """Points where the link's edges cross the plane through the origin."""
    nrm = np.asarray(plane_normal, dtype=float)
    nrm = nrm / np.linalg.norm(nrm)
    start, end, _ = link.edge_index()
    v = link.vertices
    h = v @ nrm
    pts = []
    on = np.flatnonzero(h == 0.0)
    pts.extend(v[on])
    hs, he = h[start], h[end]
    cross = np.flatnonzero(hs * he < 0)
    for e in cross:
        t = hs[e] / (hs[e] - he[e])
        pts.append(v[start[e]] + t * (v[end[e]] - v[start[e]]))
    return np.array(pts).reshape(-1, 3)


def split_link_with_ring(k_sym: PolyLink, plane_normal=(0.0, 0.0, 1.0), ring_radius: float = 3.0,
                         n_ring: int = 120, clearance: float = 0.0) -> PolyLink:
    """Add a round ring in the mirror plane around the two crossings of ``k_sym``.

    The ring is centred midway between the crossings. It must enclose both
    and stay clear of the rest of the link.
    """
    from .symmetry import check_invariance
    from .thickness import segment_closest_params

    nrm = np.asarray(plane_normal, dtype=float)
    nrm = nrm / np.linalg.norm(nrm)
    check_invariance(k_sym, reflection(nrm), 1e-9)
    cr = plane_crossings(k_sym, nrm)
    if len(cr) != 2:
        raise LinkError(f"link crosses the plane {len(cr)} times, expected 2")
    center = cr.mean(axis=0)
    if np.max(np.linalg.norm(cr - center, axis=1)) >= ring_radius:
        raise LinkError("ring does not enclose both crossings")
    ring = _circle_points(n_ring, ring_radius, center, nrm, phase=0.5 * np.pi / n_ring)
    # clearance from every edge of the link
    start, end, _ = k_sym.edge_index()
    v = k_sym.vertices
    rs, re = ring, np.roll(ring, -1, axis=0)
    A0 = np.repeat(rs, len(start), axis=0)
    A1 = np.repeat(re, len(start), axis=0)
    B0 = np.tile(v[start], (len(rs), 1))
    B1 = np.tile(v[end], (len(rs), 1))
    s, t = segment_closest_params(A0, A1, B0, B1)
    d = np.linalg.norm((A0 + s[:, None] * (A1 - A0)) - (B0 + t[:, None] * (B1 - B0)), axis=1)
    if d.min() <= clearance:
        raise LinkError(f"ring passes within {d.min():.3g} of the link")
    return PolyLink(tuple(k_sym.components) + (ring,))


def square_knot(n: int = 300, plane_normal=(1.0, 0.0, 0.0), offset: float = 4.0) -> PolyLink:
    """Trefoil joined to its mirror image: a mirror-symmetric square knot."""
    tre = torus_knot(TorusKnotSpec(2, 3, n))
    # a generic tilt keeps the vertex nearest the plane unique
    tilt = rotation_matrix((0.3, 1.0, 0.2), 0.37)
    pts = tre.vertices @ tilt.T
    nrm = np.asarray(plane_normal, dtype=float) / np.linalg.norm(plane_normal)
    pts = pts - (pts @ nrm).min() * nrm + offset * 0.25 * nrm
    return connect_sum_mirror(PolyLink((pts,)), nrm)


def three_chain(n_outer: int = 80, n_middle: int = 160, plane_normal=(1.0, 0.0, 0.0),
                middle_radius: float = 3.0, outer_radius: float = 1.5) -> PolyLink:
    """Mirror-symmetric chain of three round rings.

    The middle ring is cut in half by the plane; the two outer rings are
    mirror images, each hooked through one side of the middle ring.
    """
    nrm = np.asarray(plane_normal, dtype=float)
    nrm = nrm / np.linalg.norm(nrm)
    helper = np.array([0.0, 0.0, 1.0]) if abs(nrm[2]) < 0.9 else np.array([0.0, 1.0, 0.0])
    up = helper - (helper @ nrm) * nrm
    up /= np.linalg.norm(up)
    side = np.cross(up, nrm)
    # middle ring lies in the plane spanned by nrm and side; crosses the
    # mirror plane at +-middle_radius * side
    middle = _circle_points(n_middle, middle_radius, normal=up, phase=0.5 * np.pi / n_middle * 2)
    hook = middle_radius * nrm
    outer = _circle_points(n_outer, outer_radius, center=hook, normal=side)
    mirror = reflection(nrm)
    return PolyLink((outer, middle, mirror.apply(outer)[::-1]))


def chain_with_ring(ring_radius: float = 5.0, n_ring: int = 160, **kw) -> PolyLink:
    """Three-ring chain plus a split ring in its mirror plane."""
    nrm = kw.get("plane_normal", (1.0, 0.0, 0.0))
    return split_link_with_ring(three_chain(**kw), nrm, ring_radius, n_ring)


def rotation_matrix(axis, angle):
    from .symmetry import rotation

    return rotation(axis, angle).matrix


def perturb(link: PolyLink, amplitude: float, seed: int = 0, modes: int = 3) -> PolyLink:
    """Add a smooth random displacement built from the lowest Fourier modes.

    ``amplitude`` is the largest vertex displacement. Below the thickness
    the moved curve stays inside the original tube, so strands cannot pass
    through each other. Deterministic in ``seed``.
    """
    if amplitude < 0:
        raise ValueError("amplitude must be nonnegative")
    rng = np.random.default_rng(seed)
    disps = []
    for comp in link.components:
        n = len(comp)
        th = 2.0 * np.pi * np.arange(n) / n
        disp = np.zeros_like(comp)
        for m in range(1, modes + 1):
            disp += np.outer(np.cos(m * th + rng.uniform(0, 2 * np.pi)), rng.standard_normal(3)) / m
        disps.append(disp)
    big = max(float(np.linalg.norm(d, axis=1).max()) for d in disps)
    return PolyLink(tuple(c + (amplitude / big) * d for c, d in zip(link.components, disps)))
