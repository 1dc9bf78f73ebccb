"""Finite symmetry groups in O(3) and their actions on polygonal links.

An isometry ``g`` acts on a G-invariant link by permuting vertices: vertex
``j`` of component ``i`` goes to vertex ``(shift + sign * j) % n`` of
component ``perm[i]``. :class:`CurveAction` records that permutation, which
is what field averaging and symmetrization need.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from .link import LinkError, PolyLink

ORTHO_TOL = 1e-10
CLOSURE_TOL = 1e-9


class NotInvariantError(LinkError):
    def __init__(self, message, residual):
        super().__init__(f"{message} (best residual {residual:.3e})")
        self.residual = residual


@dataclass(frozen=True, eq=False)
class Isometry:
    matrix: np.ndarray

    def __post_init__(self):
        m = np.array(self.matrix, dtype=float).reshape(3, 3)
        if np.abs(m.T @ m - np.eye(3)).max() > ORTHO_TOL:
            raise ValueError("matrix is not orthogonal")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def det(self) -> float:
        return float(np.linalg.det(self.matrix))

    def __matmul__(self, other: "Isometry") -> "Isometry":
        return Isometry(self.matrix @ other.matrix)

    def inverse(self) -> "Isometry":
        return Isometry(self.matrix.T)

    def apply(self, points) -> np.ndarray:
        return np.asarray(points, dtype=float) @ self.matrix.T

    def close_to(self, other: "Isometry", tol: float = CLOSURE_TOL) -> bool:
        return bool(np.abs(self.matrix - other.matrix).max() <= tol)

    def __repr__(self):
        return f"Isometry(det={self.det:+.0f})"


IDENTITY = Isometry(np.eye(3))


def _unit(v, what="axis"):
    v = np.asarray(v, dtype=float)
    n = np.linalg.norm(v)
    if n == 0.0:
        raise ValueError(f"zero {what}")
    return v / n


def rotation(axis, angle: float) -> Isometry:
    """Right-handed rotation by ``angle`` about ``axis`` (Rodrigues)."""
    k = _unit(axis)
    K = np.array([[0, -k[2], k[1]], [k[2], 0, -k[0]], [-k[1], k[0], 0]])
    return Isometry(np.eye(3) + np.sin(angle) * K + (1 - np.cos(angle)) * (K @ K))


def reflection(normal) -> Isometry:
    n = _unit(normal, "normal")
    return Isometry(np.eye(3) - 2.0 * np.outer(n, n))


def random_isometry(rng) -> Isometry:
    q, r = np.linalg.qr(rng.standard_normal((3, 3)))
    return Isometry(q * np.sign(np.diag(r)))


@dataclass(frozen=True, eq=False)
class SymmetryGroup:
    elements: tuple
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "elements", tuple(self.elements))
        if not any(g.close_to(IDENTITY) for g in self.elements):
            raise ValueError("group must contain the identity")

    def __len__(self):
        return len(self.elements)

    def __iter__(self):
        return iter(self.elements)

    def index(self, g: Isometry, tol: float = CLOSURE_TOL) -> int:
        for k, h in enumerate(self.elements):
            if h.close_to(g, tol):
                return k
        raise KeyError("element not in group")

    def is_closed(self, tol: float = CLOSURE_TOL) -> bool:
        try:
            for g in self.elements:
                self.index(g.inverse(), tol)
                for h in self.elements:
                    self.index(g @ h, tol)
        except KeyError:
            return False
        return True

    @property
    def rotation_order(self) -> int:
        """Number of orientation-preserving elements."""
        return sum(1 for g in self.elements if g.det > 0)


def close_group(generators, max_order: int = 240, name: str = "") -> SymmetryGroup:
    """Finite group generated by ``generators``."""
    elems = [IDENTITY]
    frontier = [IDENTITY]
    gens = [g if isinstance(g, Isometry) else Isometry(g) for g in generators]
    while frontier:
        new = []
        for h in frontier:
            for g in gens:
                c = g @ h
                if not any(c.close_to(e) for e in elems):
                    elems.append(c)
                    new.append(c)
                    if len(elems) > max_order:
                        raise ValueError("generated group is too large or infinite")
        frontier = new
    return SymmetryGroup(tuple(elems), name)


def trivial_group() -> SymmetryGroup:
    return SymmetryGroup((IDENTITY,), "trivial")


def cyclic_group(n: int, axis=(0.0, 0.0, 1.0)) -> SymmetryGroup:
    if n < 1:
        raise ValueError("cyclic group order must be positive")
    _unit(axis)
    elems = (IDENTITY,) + tuple(rotation(axis, 2 * np.pi * k / n) for k in range(1, n))
    return SymmetryGroup(elems, f"cyclic:{n}")


def mirror_group(plane_normal=(0.0, 0.0, 1.0)) -> SymmetryGroup:
    return SymmetryGroup((IDENTITY, reflection(plane_normal)), "mirror")


def dihedral_group(n: int, axis=(0.0, 0.0, 1.0), flip_axis=(1.0, 0.0, 0.0)) -> SymmetryGroup:
    """``n`` rotations about ``axis`` plus ``n`` half-turns about perpendicular axes."""
    if n < 1:
        raise ValueError("dihedral group order must be positive")
    a = _unit(axis)
    f = _unit(flip_axis, "flip axis")
    if abs(a @ f) > 1e-9:
        raise ValueError("flip axis must be perpendicular to the rotation axis")
    rots = [IDENTITY] + [rotation(a, 2 * np.pi * k / n) for k in range(1, n)]
    flip = rotation(f, np.pi)
    return SymmetryGroup(tuple(rots) + tuple(r @ flip for r in rots), f"dihedral:{n}")


def _vec(text):
    parts = [float(x) for x in text.split(",")]
    if len(parts) != 3:
        raise ValueError(f"expected three comma-separated numbers, got {text!r}")
    return parts


def parse_group(text: str) -> SymmetryGroup:
    """``cyclic:n:ax,ay,az``, ``mirror:nx,ny,nz``, ``dihedral:n:ax,ay,az:fx,fy,fz``,
    or ``none``."""
    parts = text.strip().split(":")
    kind = parts[0].lower()
    try:
        if kind in ("none", "trivial", ""):
            return trivial_group()
        if kind == "cyclic":
            axis = _vec(parts[2]) if len(parts) > 2 else (0, 0, 1)
            return cyclic_group(int(parts[1]), axis)
        if kind == "mirror":
            return mirror_group(_vec(parts[1]) if len(parts) > 1 else (0, 0, 1))
        if kind == "dihedral":
            axis = _vec(parts[2]) if len(parts) > 2 else (0, 0, 1)
            flip = _vec(parts[3]) if len(parts) > 3 else (1, 0, 0)
            return dihedral_group(int(parts[1]), axis, flip)
    except (IndexError, ValueError) as exc:
        raise ValueError(f"bad group string {text!r}: {exc}") from None
    raise ValueError(f"unknown group kind {kind!r}")


# -- curve actions -----------------------------------------------------------

@dataclass(frozen=True, eq=False)
class CurveAction:
    """Vertex permutation induced by ``g`` on an invariant link.

    ``image[k]`` is the global index of the vertex at ``g(v_k)``.
    """

    g: Isometry
    perm: tuple  # component i -> perm[i]
    shift: tuple
    reversed: tuple
    residual: float
    image: np.ndarray = field(repr=False)

    @property
    def preimage(self) -> np.ndarray:
        inv = np.empty_like(self.image)
        inv[self.image] = np.arange(len(self.image))
        return inv

    @property
    def orientation_preserving(self) -> bool:
        return not any(self.reversed)


def _best_match(src, dst):
    """Best cyclic shift/reversal taking ``src`` onto ``dst`` in max-norm."""
    n = len(src)
    j = np.arange(n)
    best = (np.inf, 0, False)
    for rev in (False, True):
        idx = (j[None, :] * (-1 if rev else 1) + j[:, None]) % n  # row: shift
        # distance from src[0] prunes most shifts cheaply
        d0 = np.linalg.norm(dst[idx[:, 0]] - src[0], axis=1)
        order = np.argsort(d0)
        for sh in order[: max(4, n // 50)]:
            if d0[sh] > best[0]:
                break
            r = float(np.linalg.norm(dst[idx[sh]] - src, axis=1).max())
            if r < best[0]:
                best = (r, int(sh), rev)
    return best


def _fingerprint(comp):
    return np.sort(np.linalg.norm(comp, axis=1))


def mean_edge_length(link: PolyLink) -> float:
    start, end, _ = link.edge_index()
    v = link.vertices
    return float(np.linalg.norm(v[end] - v[start], axis=1).mean())


def check_invariance(link: PolyLink, g: Isometry, tol: float = 1e-9) -> CurveAction:
    """Find the vertex permutation realizing ``g`` on ``link``.

    Raises :class:`NotInvariantError` unless the max vertex mismatch is at
    most ``tol`` times the mean edge length.
    """
    link.require_closed()
    comps = link.components
    nc = len(comps)
    images = [g.apply(c) for c in comps]
    fps = [_fingerprint(c) for c in comps]
    cost = np.full((nc, nc), np.inf)
    matches = {}
    for i in range(nc):
        for k in range(nc):
            if len(comps[i]) != len(comps[k]):
                continue
            if np.abs(fps[i] - fps[k]).max() > 1e-6 * (1 + fps[i].max()) + 10 * tol:
                continue
            r, sh, rev = _best_match(images[i], comps[k])
            cost[i, k] = r
            matches[i, k] = (sh, rev)
    big = 1e300
    rows, cols = linear_sum_assignment(np.where(np.isfinite(cost), cost, big))
    residual = float(cost[rows, cols].max())
    scale = mean_edge_length(link)
    if not np.isfinite(residual) or residual > tol * scale:
        raise NotInvariantError("link is not invariant", residual)
    perm = [0] * nc
    shift = [0] * nc
    rev = [False] * nc
    image = np.empty(link.n_vertices, dtype=int)
    for i, k in zip(rows, cols):
        sh, rv = matches[i, k]
        perm[i], shift[i], rev[i] = int(k), sh, rv
        n = len(comps[i])
        j = np.arange(n)
        local = (sh - j) % n if rv else (sh + j) % n
        image[link.offsets[i]:link.offsets[i + 1]] = link.offsets[k] + local
    return CurveAction(g, tuple(perm), tuple(shift), tuple(rev), residual, image)


def group_actions(link: PolyLink, group: SymmetryGroup, tol: float = 1e-9) -> list:
    return [check_invariance(link, g, tol) for g in group]


def _check_actions(link, group, actions):
    if actions is None or len(actions) != len(group):
        raise LinkError("need one curve action per group element")
    for a in actions:
        if len(a.image) != link.n_vertices:
            raise LinkError("curve action does not match link")


def pushforward(action: CurveAction, xi) -> np.ndarray:
    """``(g_* xi)`` on an invariant link: ``(g_* xi)[image[k]] = g xi[k]``."""
    xi = np.asarray(xi, dtype=float)
    out = np.empty_like(xi)
    out[action.image] = action.g.apply(xi)
    return out


def average_field(link: PolyLink, group: SymmetryGroup, actions, xi) -> np.ndarray:
    """Group average of the pushforwards ``g_* xi``; the result is G-invariant."""
    _check_actions(link, group, actions)
    xi = np.asarray(xi, dtype=float)
    acc = np.zeros_like(xi)
    for a in actions:
        acc += pushforward(a, xi)
    return acc / len(actions)


def averaging_operator(link: PolyLink, actions):
    """Sparse ``(3N, 3N)`` matrix of :func:`average_field` on flattened fields."""
    import scipy.sparse as sp

    n = link.n_vertices
    blocks = []
    for a in actions:
        rows = (3 * a.image[:, None, None] + np.arange(3)[None, :, None]) * np.ones((1, 1, 3), int)
        cols = (3 * np.arange(n)[:, None, None] + np.arange(3)[None, None, :]) * np.ones((1, 3, 1), int)
        vals = np.broadcast_to(a.g.matrix, (n, 3, 3))
        blocks.append(sp.csr_matrix((vals.ravel(), (rows.ravel(), cols.ravel())), shape=(3 * n, 3 * n)))
    return sum(blocks[1:], blocks[0]) / len(blocks)


def symmetrize(link: PolyLink, group: SymmetryGroup, actions) -> PolyLink:
    """Replace every vertex by its orbit average ``mean_g g^-1 v_{image_g}``."""
    _check_actions(link, group, actions)
    v = link.vertices
    acc = np.zeros_like(v)
    for a in actions:
        acc += a.g.inverse().apply(v[a.image])
    return link.with_vertices(acc / len(actions))


def invariance_residual(link: PolyLink, actions) -> float:
    v = link.vertices
    return max(float(np.linalg.norm(a.g.apply(v) - v[a.image], axis=1).max()) for a in actions)


def symmetric_resample(link: PolyLink, group: SymmetryGroup, actions, counts) -> tuple:
    """Equal-arclength resampling that keeps exact G-invariance.

    One representative per component orbit is resampled from a basepoint
    fixed by a reversing stabilizer element (if any); the other components
    of the orbit are its images. Returns ``(new_link, new_actions)``.
    """
    if np.isscalar(counts):
        counts = [int(counts)] * link.n_components
    comps = link.components
    nc = len(comps)
    new = [None] * nc
    for i in range(nc):
        if new[i] is not None:
            continue
        comp = comps[i]
        n = len(comp)
        seg = np.linalg.norm(np.roll(comp, -1, axis=0) - comp, axis=1)
        cum = np.concatenate([[0.0], np.cumsum(seg)])
        L = cum[-1]
        stab = [a for a in actions if a.perm[i] == i]
        rot_order = sum(1 for a in stab if not a.reversed[i])
        if counts[i] % rot_order:
            raise LinkError(f"vertex count {counts[i]} not divisible by stabilizer order {rot_order}")
        s0 = 0.0
        for a in stab:
            if a.reversed[i]:
                s0 = 0.5 * cum[a.shift[i]]
                break
        m = counts[i]
        targets = (s0 + np.arange(m) * (L / m)) % L
        closed = np.vstack([comp, comp[:1]])
        idx = np.clip(np.searchsorted(cum, targets, side="right") - 1, 0, n - 1)
        frac = (targets - cum[idx]) / seg[idx]
        rep = closed[idx] + frac[:, None] * (closed[idx + 1] - closed[idx])
        new[i] = rep
        for a in actions:
            k = a.perm[i]
            if new[k] is None:
                new[k] = a.g.apply(rep)
    out = PolyLink(tuple(new))
    return out, group_actions(out, group, 1e-6)
