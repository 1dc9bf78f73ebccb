"""Axis-aligned bounding-box tree over segments, for near-pair queries."""

from __future__ import annotations

import numpy as np


class SegmentTree:
    """Bounding-box tree over segments ``a[k] -> b[k]``.

    ``near_pairs(dist)`` returns every index pair ``(i, j)``, ``i < j``, whose
    boxes are within ``dist`` of each other. This is a superset of the
    segment pairs at distance ``<= dist``.
    """

    def __init__(self, a, b, leaf_size: int = 8):
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        self.n = len(a)
        self.leaf_size = leaf_size
        seg_lo = np.minimum(a, b)
        seg_hi = np.maximum(a, b)
        mid = 0.5 * (a + b)
        self.perm = np.arange(self.n)
        lo, hi, left, right, start, stop = [], [], [], [], [], []

        def build(s, e):
            node = len(lo)
            idx = self.perm[s:e]
            lo.append(seg_lo[idx].min(axis=0))
            hi.append(seg_hi[idx].max(axis=0))
            left.append(-1)
            right.append(-1)
            start.append(s)
            stop.append(e)
            if e - s > leaf_size:
                axis = int(np.argmax(hi[node] - lo[node]))
                order = np.argsort(mid[idx, axis], kind="stable")
                self.perm[s:e] = idx[order]
                m = (s + e) // 2
                left[node] = build(s, m)
                right[node] = build(m, e)
            return node

        if self.n:
            build(0, self.n)
        self.lo = np.array(lo).reshape(-1, 3)
        self.hi = np.array(hi).reshape(-1, 3)
        self.left = np.array(left, dtype=int)
        self.right = np.array(right, dtype=int)
        self.start = np.array(start, dtype=int)
        self.stop = np.array(stop, dtype=int)

    def _gap(self, p, q):
        d = np.maximum(0.0, np.maximum(self.lo[q] - self.hi[p], self.lo[p] - self.hi[q]))
        return np.sqrt((d * d).sum(axis=1))

    def near_pairs(self, dist: float) -> np.ndarray:
        if self.n < 2:
            return np.empty((0, 2), dtype=int)
        p = np.array([0])
        q = np.array([0])
        leaf_p, leaf_q = [], []
        while len(p):
            keep = self._gap(p, q) <= dist
            p, q = p[keep], q[keep]
            p_leaf = self.left[p] < 0
            q_leaf = self.left[q] < 0
            done = p_leaf & q_leaf
            leaf_p.append(p[done])
            leaf_q.append(q[done])
            p, q = p[~done], q[~done]
            p_leaf, q_leaf = p_leaf[~done], q_leaf[~done]
            same = p == q
            # self pairs split into (l,l), (r,r), (l,r)
            sp = p[same]
            nxt_p = [self.left[sp], self.right[sp], self.left[sp]]
            nxt_q = [self.left[sp], self.right[sp], self.right[sp]]
            p, q = p[~same], q[~same]
            p_leaf, q_leaf = p_leaf[~same], q_leaf[~same]
            size_p = self.stop[p] - self.start[p]
            size_q = self.stop[q] - self.start[q]
            split_p = ~p_leaf & (q_leaf | (size_p >= size_q))
            a, b = p[split_p], q[split_p]
            nxt_p += [self.left[a], self.right[a]]
            nxt_q += [b, b]
            a, b = p[~split_p], q[~split_p]
            nxt_p += [a, a]
            nxt_q += [self.left[b], self.right[b]]
            p = np.concatenate(nxt_p)
            q = np.concatenate(nxt_q)
        return self._expand(np.concatenate(leaf_p), np.concatenate(leaf_q))

    def _expand(self, p, q):
        k = self.leaf_size
        offs = np.arange(k)
        i = self.start[p][:, None, None] + offs[None, :, None]
        j = self.start[q][:, None, None] + offs[None, None, :]
        ok = (i < self.stop[p][:, None, None]) & (j < self.stop[q][:, None, None])
        i, j = np.broadcast_arrays(i, j)
        i, j = i[ok], j[ok]
        gi, gj = self.perm[i], self.perm[j]
        lo = np.minimum(gi, gj)
        hi = np.maximum(gi, gj)
        keep = lo < hi
        key = np.sort(lo[keep] * self.n + hi[keep])
        return np.stack([key // self.n, key % self.n], axis=1)
