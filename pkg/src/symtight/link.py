"""Closed polygonal links and arclength utilities.

A :class:`PolyLink` stores each component as an ``(n, 3)`` float array.
Edge ``i`` of a component runs from vertex ``i`` to vertex ``(i + 1) % n``.
Variation fields are plain ``(N, 3)`` arrays aligned with
:attr:`PolyLink.vertices`, the concatenation of all components.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np


class LinkError(ValueError):
    pass


class ArcPosition(NamedTuple):
    """A point on edge ``edge`` of component ``component``; ``t`` is barycentric."""

    component: int
    edge: int
    t: float


@dataclass(frozen=True, eq=False)
class PolyLink:
    components: tuple
    closed: tuple = None
    _offsets: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        comps = tuple(np.array(c, dtype=float).reshape(-1, 3) for c in self.components)
        for c in comps:
            c.setflags(write=False)
        closed = self.closed
        if closed is None:
            closed = (True,) * len(comps)
        closed = tuple(bool(c) for c in closed)
        if len(closed) != len(comps):
            raise LinkError("closed flags do not match component count")
        if not comps:
            raise LinkError("a link needs at least one component")
        for i, c in enumerate(comps):
            if not np.all(np.isfinite(c)):
                raise LinkError(f"component {i} has non-finite coordinates")
            if closed[i] and len(c) < 3:
                raise LinkError(f"closed component {i} has fewer than 3 vertices")
            nxt = np.roll(c, -1, axis=0) if closed[i] else c[1:]
            cur = c if closed[i] else c[:-1]
            if np.any(np.linalg.norm(nxt - cur, axis=1) == 0.0):
                raise LinkError(f"component {i} has a zero-length edge")
        object.__setattr__(self, "components", comps)
        object.__setattr__(self, "closed", closed)
        offs = np.zeros(len(comps) + 1, dtype=int)
        offs[1:] = np.cumsum([len(c) for c in comps])
        offs.setflags(write=False)
        object.__setattr__(self, "_offsets", offs)

    @classmethod
    def from_arrays(cls, *arrays) -> "PolyLink":
        return cls(tuple(arrays))

    @property
    def n_components(self) -> int:
        return len(self.components)

    @property
    def counts(self) -> list[int]:
        return [len(c) for c in self.components]

    @property
    def offsets(self) -> np.ndarray:
        return self._offsets

    @property
    def n_vertices(self) -> int:
        return int(self._offsets[-1])

    @property
    def vertices(self) -> np.ndarray:
        return np.concatenate(self.components, axis=0)

    def require_closed(self):
        if not all(self.closed):
            raise LinkError("open components are not supported by this operation")

    def edge_index(self):
        """Global ``(start, end, component)`` vertex indices of every edge.

        Edges are numbered like vertices: global edge ``k`` starts at global
        vertex ``k``.
        """
        self.require_closed()
        start = np.arange(self.n_vertices)
        end = np.empty_like(start)
        comp = np.empty_like(start)
        for c, (a, b) in enumerate(zip(self._offsets[:-1], self._offsets[1:])):
            end[a:b] = np.roll(start[a:b], -1)
            comp[a:b] = c
        return start, end, comp

    def neighbors(self):
        """Global indices of the previous and next vertex of every vertex."""
        start, end, _ = self.edge_index()
        prev = np.empty_like(end)
        prev[end] = start
        return prev, end

    def global_vertex(self, component: int, vertex: int) -> int:
        return int(self._offsets[component]) + vertex

    def split(self, values: np.ndarray) -> list[np.ndarray]:
        """Split a per-vertex array into per-component pieces."""
        return [values[a:b] for a, b in zip(self._offsets[:-1], self._offsets[1:])]

    def with_vertices(self, vertices: np.ndarray) -> "PolyLink":
        return PolyLink(tuple(self.split(np.asarray(vertices, dtype=float))), self.closed)

    def transformed(self, matrix, translation=None) -> "PolyLink":
        v = self.vertices @ np.asarray(matrix, dtype=float).T
        if translation is not None:
            v = v + np.asarray(translation, dtype=float)
        return self.with_vertices(v)

    def scaled(self, factor: float) -> "PolyLink":
        return self.with_vertices(self.vertices * factor)

    def __len__(self):
        return self.n_vertices

    def __repr__(self):
        return f"PolyLink(components={self.counts})"


def _check_position(link: PolyLink, p: ArcPosition):
    c, e, t = p
    if not 0 <= c < link.n_components:
        raise IndexError(f"component {c} out of range")
    n = len(link.components[c])
    if not 0 <= e < n:
        raise IndexError(f"edge {e} out of range for component {c}")
    if not 0.0 <= t <= 1.0:
        raise IndexError(f"edge parameter {t} outside [0, 1]")
    return c, e, t, n


def edge_vectors(link: PolyLink) -> np.ndarray:
    start, end, _ = link.edge_index()
    v = link.vertices
    return v[end] - v[start]


def component_lengths(link: PolyLink) -> np.ndarray:
    lens = np.linalg.norm(edge_vectors(link), axis=1)
    return np.array([s.sum() for s in link.split(lens)])


def total_length(link: PolyLink) -> float:
    """Sum of Euclidean edge lengths over all components."""
    return float(np.linalg.norm(edge_vectors(link), axis=1).sum())


def point_at(link: PolyLink, p: ArcPosition) -> np.ndarray:
    c, e, t, n = _check_position(link, p)
    comp = link.components[c]
    return (1.0 - t) * comp[e] + t * comp[(e + 1) % n]


def tangent_at(link: PolyLink, p: ArcPosition) -> np.ndarray:
    """Unit tangent; at a vertex the normalized sum of adjacent unit edges.

    ``t == 1`` is the end vertex of the edge and gets the vertex convention
    as well.
    """
    c, e, t, n = _check_position(link, p)
    comp = link.components[c]
    if t == 1.0:
        e, t = (e + 1) % n, 0.0
    out = comp[(e + 1) % n] - comp[e]
    out = out / np.linalg.norm(out)
    if t > 0.0:
        return out
    inc = comp[e] - comp[e - 1]
    s = inc / np.linalg.norm(inc) + out
    norm = np.linalg.norm(s)
    if norm < 1e-12:
        raise LinkError("cusp vertex: tangent undefined")
    return s / norm


def resample(link: PolyLink, n_per_component: Sequence[int]) -> PolyLink:
    """Resample every component to equally spaced vertices along its polygon.

    The first vertex of each component is kept fixed.
    """
    link.require_closed()
    if np.isscalar(n_per_component):
        n_per_component = [int(n_per_component)] * link.n_components
    if len(n_per_component) != link.n_components:
        raise LinkError("need one vertex count per component")
    out = []
    for comp, n in zip(link.components, n_per_component):
        if n < 3:
            raise LinkError(f"cannot resample to {n} < 3 vertices")
        closed = np.vstack([comp, comp[:1]])
        seg = np.linalg.norm(np.diff(closed, axis=0), axis=1)
        s = np.concatenate([[0.0], np.cumsum(seg)])
        targets = np.arange(n) * (s[-1] / n)
        idx = np.clip(np.searchsorted(s, targets, side="right") - 1, 0, len(seg) - 1)
        frac = (targets - s[idx]) / seg[idx]
        out.append(closed[idx] + frac[:, None] * (closed[idx + 1] - closed[idx]))
    return PolyLink(tuple(out))
