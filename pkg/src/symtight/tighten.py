"""Ropelength tightening: minimize length at fixed thickness.

Two phases. A penalty phase runs L-BFGS on length plus quadratic penalties
for short vertex-vertex chords and small vertex radii, first on coarse
resamplings of the curve and then at full size; it moves the curve a long
way cheaply. A constrained phase then takes projected descent steps
along the NNLS residual direction, which shortens without first-order loss
of thickness, until the criticality residual is small. With a symmetry
group every step is projected onto G-invariant fields.
"""

from __future__ import annotations

import csv
import logging
import math
import time
from dataclasses import dataclass, field, fields, replace

import numpy as np
from scipy.optimize import Bounds, minimize
from scipy.sparse.linalg import lsqr
from scipy.spatial import cKDTree

from .criticality import balance
from .link import LinkError, PolyLink, component_lengths, resample, total_length
from .symmetry import (SymmetryGroup, averaging_operator, group_actions, invariance_residual,
                       mean_edge_length, symmetric_resample, symmetrize)
from .thickness import ropelength, segment_closest_params, thickness
from .variation import constraint_rows, kink_rows, row_key, row_matrix

log = logging.getLogger(__name__)

SYMMETRY_ABORT = 1e-6  # relative to mean edge length


class TightenError(LinkError):
    pass


@dataclass(frozen=True)
class TightenOptions:
    max_steps: int = 400
    step_size: float = 1e-3
    activation_tol: float = 5e-3
    symmetrize_every: int = 10
    stop_residual: float = 0.03
    stop_rop_delta: float = 1e-6
    target_thickness: float = 1.0
    resample_every: int = 250
    penalty_schedule: tuple = (10.0, 30.0, 100.0, 1e3, 1e4)
    penalty_iterations: int = 6000
    coarse_fractions: tuple = (0.2, 0.4)
    equilateral_weight: float = 10.0
    max_step: float = 0.05
    stall_window: int = 30

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if f.name == "penalty_schedule":
                if any(not mu > 0 for mu in v):
                    raise ValueError("penalty weights must be positive")
            elif f.name == "coarse_fractions":
                if any(not 0 < c < 1 for c in v):
                    raise ValueError("coarse fractions must lie in (0, 1)")
            elif f.name in ("penalty_iterations", "stop_rop_delta"):
                if v < 0:
                    raise ValueError(f"{f.name} must be nonnegative")
            elif not v > 0:
                raise ValueError(f"{f.name} must be positive, got {v!r}")


@dataclass
class TraceRecord:
    step: int
    phase: str
    length: float
    thickness: float
    ropelength: float
    n_struts: int
    n_kinks: int
    residual: float = math.nan
    event: str = ""


@dataclass
class TightenTrace:
    records: list = field(default_factory=list)
    min_thickness: float = math.inf
    elapsed: float = 0.0

    COLUMNS = ("step", "phase", "length", "thickness", "ropelength", "n_struts", "n_kinks",
               "residual", "event")

    def add(self, rec: TraceRecord):
        self.records.append(rec)
        log.debug("%s", rec)

    @property
    def final(self) -> TraceRecord:
        return self.records[-1]

    def ropelengths(self) -> np.ndarray:
        return np.array([r.ropelength for r in self.records])

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(self.COLUMNS)
            for r in self.records:
                w.writerow([getattr(r, c) for c in self.COLUMNS])


def rescale_to_thickness(link: PolyLink, target: float = 1.0, report=None) -> PolyLink:
    thi = (report or thickness(link)).thickness
    if not thi > 0:
        raise TightenError("cannot rescale a link of zero thickness")
    if not math.isfinite(thi):
        raise TightenError("thickness is infinite")
    return link.scaled(target / thi)


# -- penalty phase ------------------------------------------------------------

class _Penalty:
    """Length plus chord, radius and spacing penalties at unit thickness."""

    def __init__(self, link: PolyLink, weight_eq: float):
        self.link = link
        self.prev, self.next = link.neighbors()
        self.comp = np.repeat(np.arange(link.n_components), link.counts)
        self.offsets = link.offsets
        self.weight_eq = weight_eq
        self.mu = 1.0
        self.sizes = np.asarray(link.counts)
        self.set_gap(link.vertices)

    def set_gap(self, X):
        # vertices closer than pi along the curve are never strut ends
        le = np.linalg.norm(X[self.next] - X, axis=1)
        mean = np.bincount(self.comp, le) / self.sizes
        self.min_gap = np.ceil(math.pi / mean).astype(int)

    def __call__(self, x):
        X = x.reshape(-1, 3)
        nxt, prv, comp = self.next, self.prev, self.comp
        e = X[nxt] - X
        le = np.linalg.norm(e, axis=1)
        u = e / le[:, None]
        f = float(le.sum())
        g = np.zeros_like(X)
        dle = np.ones_like(le)

        # spacing: edge lengths pulled toward their component mean
        means = np.bincount(comp, le) / np.bincount(comp)
        dv = le - means[comp]
        f += 0.5 * self.weight_eq * float(dv @ dv)
        dle += self.weight_eq * dv

        # chords shorter than 2 between vertices far apart along the curve;
        # "far" is an index gap fixed per stage so the energy stays continuous
        pairs = cKDTree(X).query_pairs(2.0, output_type="ndarray")
        if len(pairs):
            i, j = pairs[:, 0], pairs[:, 1]
            same = comp[i] == comp[j]
            gap = np.abs(i - j)
            gap = np.minimum(gap, self.sizes[comp[i]] - gap)
            keep = ~same | (gap > self.min_gap[comp[i]])
            i, j = i[keep], j[keep]
            w = X[i] - X[j]
            d = np.linalg.norm(w, axis=1)
            v = 2.0 - d
            f += 0.5 * self.mu * float(v @ v)
            gd = (-self.mu * v / d)[:, None] * w
            np.add.at(g, i, gd)
            np.subtract.at(g, j, gd)

        # vertex radius below 1
        a = X - X[prv]
        la = le[prv]
        c = np.cross(a, e)
        gg = np.linalg.norm(c, axis=1)
        ff = la * le + np.einsum("ij,ij->i", a, e)
        # mean of the adjacent edges instead of the shorter one keeps the
        # penalty smooth; the constrained phase uses the exact radius
        ell = 0.5 * (la + le)
        with np.errstate(divide="ignore", invalid="ignore"):
            rho = np.where(gg > 0, ell * ff / (2.0 * gg), np.inf)
        viol = np.maximum(0.0, 1.0 - rho)
        act = np.flatnonzero(viol > 0)
        if len(act):
            f += 0.5 * self.mu * float(viol @ viol)
            aa, bb, cc = a[act], e[act], c[act] / gg[act, None]
            la_, lb_ = la[act], le[act]
            f_, g_, r_ = ff[act, None], gg[act, None], rho[act, None]
            ell_ = ell[act, None]
            dfa = lb_[:, None] * aa / la_[:, None] + bb
            dfb = la_[:, None] * bb / lb_[:, None] + aa
            dga = np.cross(bb, cc)
            dgb = np.cross(cc, aa)
            dla = 0.5 * aa / la_[:, None]
            dlb = 0.5 * bb / lb_[:, None]
            da = (dla * f_ + ell_ * dfa) / (2.0 * g_) - r_ * dga / g_
            db = (dlb * f_ + ell_ * dfb) / (2.0 * g_) - r_ * dgb / g_
            coef = (-self.mu * viol[act])[:, None]
            np.add.at(g, act, coef * (da - db))
            np.add.at(g, prv[act], -coef * da)
            np.add.at(g, nxt[act], coef * db)

        eu = dle[:, None] * u
        np.subtract.at(g, np.arange(len(X)), eu)
        np.add.at(g, nxt, eu)
        return f, g.ravel()


GUARD_BOX = 0.15  # per coordinate, per chunk
GUARD_GAP = 0.6
CHUNK = 100


def _close_segments(pen, X):
    """True when two far-apart segments are nearer than ``GUARD_GAP``."""
    nxt = pen.next
    a, b = X, X[nxt]
    reach = float(np.linalg.norm(b - a, axis=1).max()) + GUARD_GAP
    pairs = cKDTree(0.5 * (a + b)).query_pairs(reach, output_type="ndarray")
    if not len(pairs):
        return False
    i, j = pairs[:, 0], pairs[:, 1]
    comp = pen.comp
    gap = np.abs(i - j)
    gap = np.minimum(gap, pen.sizes[comp[i]] - gap)
    keep = (comp[i] != comp[j]) | (gap > pen.min_gap[comp[i]])
    i, j = i[keep], j[keep]
    if not len(i):
        return False
    s, t = segment_closest_params(a[i], b[i], a[j], b[j])
    d = np.linalg.norm(a[i] + s[:, None] * (b[i] - a[i]) - a[j] - t[:, None] * (b[j] - a[j]), axis=1)
    return bool(d.min() < GUARD_GAP)


def _penalty_stage(link, schedule, opts, project, trace, label, callback=None):
    """L-BFGS on the penalty energy for each weight in ``schedule``.

    The optimizer runs in chunks, each confined to a box of half-width
    ``GUARD_BOX`` around its starting point, so no vertex travels more than
    ``sqrt(3) * GUARD_BOX`` within a chunk. A chunk is kept only if
    far-apart segments end at least ``GUARD_GAP`` apart; together these keep
    strands from passing through each other.
    """
    pen = _Penalty(link, opts.equilateral_weight)
    x = link.vertices.ravel().copy()
    for mu in schedule:
        pen.mu = mu
        pen.set_gap(x.reshape(-1, 3))
        if project is None:
            fun = pen
        else:
            def fun(y, pen=pen):
                f, g = pen(project @ y)
                return f, project.T @ g
        box, used, redone = GUARD_BOX, 0, 0
        while used < opts.penalty_iterations and box > 1e-6:
            lo, hi = x - box, x + box
            sol = minimize(fun, x, jac=True, method="L-BFGS-B", bounds=Bounds(lo, hi),
                           options={"maxiter": min(CHUNK, opts.penalty_iterations - used),
                                    "maxcor": 20, "gtol": 1e-10, "ftol": 1e-15})
            y = sol.x if project is None else project @ sol.x
            if _close_segments(pen, y.reshape(-1, 3)):
                box *= 0.5
                redone += 1
                continue
            used += max(sol.nit, 1)
            at_wall = np.any((sol.x <= lo + 1e-12) | (sol.x >= hi - 1e-12))
            x = y
            box = GUARD_BOX
            if sol.nit < CHUNK and not at_wall:
                break  # converged inside the box
        cur = link.with_vertices(x.reshape(-1, 3))
        rep = thickness(cur)
        trace.min_thickness = min(trace.min_thickness, rep.thickness)
        trace.add(TraceRecord(len(trace.records), "penalty", total_length(cur), rep.thickness,
                              total_length(cur) / rep.thickness, rep.n_struts, rep.n_kinks,
                              event=f"{label} mu={mu:g} iters={used} redone={redone}"))
        if callback is not None:
            callback("penalty", cur)
    return link.with_vertices(x.reshape(-1, 3))


def _coarse_counts(link, actions, fraction):
    out = []
    for i, n in enumerate(link.counts):
        # keep counts divisible by the rotations fixing the component
        r = 1 if actions is None else sum(
            1 for a in actions if a.perm[i] == i and not a.reversed[i])
        m = max(int(round(fraction * n / r)) * r, r * math.ceil(24 / r))
        out.append(min(m, n))
    return out


def _penalty_phase(link, opts, group, trace, callback=None):
    """Run the penalty schedule on coarse copies first, then at full size.

    Coarse levels see the full schedule; later levels only its last two
    weights. Stiffness grows quickly with the vertex count, so most of the
    shape change happens where iterations are cheap.
    """
    final = link.counts
    actions = group_actions(link, group, 1e-9) if group is not None else None
    levels = [_coarse_counts(link, actions, f) for f in sorted(opts.coarse_fractions)]
    levels = [c for c in levels if c != final] + [final]
    schedule = tuple(opts.penalty_schedule)
    for k, counts in enumerate(levels):
        if counts != link.counts:
            if group is None:
                link = resample(link, counts)
            else:
                link, actions = symmetric_resample(link, group, actions, counts)
        project = averaging_operator(link, actions) if group is not None else None
        stage = schedule if k == 0 else schedule[-2:]
        link = _penalty_stage(link, stage, opts, project, trace, f"n={link.n_vertices}", callback)
        if group is not None:
            actions = group_actions(link, group, 1e-6)
    return link


# -- constrained phase ---------------------------------------------------------

class _State:
    def __init__(self, link, group, opts):
        self.group = group
        self.opts = opts
        self.set(link, refresh_actions=True)

    def set(self, link, refresh_actions=False):
        if self.group is not None and refresh_actions:
            self.actions = group_actions(link, self.group, 1e-6)
            self.project = averaging_operator(link, self.actions)
        self.link = link
        self.report = thickness(link, self.opts.activation_tol)
        self.length = total_length(link)
        self.rop = self.length / self.report.thickness


def _guard_symmetry(state):
    if state.group is None:
        return
    res = invariance_residual(state.link, state.actions) / mean_edge_length(state.link)
    if res > SYMMETRY_ABORT:
        raise TightenError(f"iterate lost its symmetry (relative residual {res:.2e})")


def _resample(state, link):
    counts = link.counts
    if state.group is None:
        return resample(link, counts), None
    out, actions = symmetric_resample(link, state.group, state.actions, counts)
    return out, actions


def _row_values(report):
    vals = [s.half_length for s in report.struts]
    for k in report.kinks:
        vals.append(k.radius)
    return vals


def _correct(link, opts, project, iterations=4):
    """Push violated struts and kinks back to 1 with least-norm moves.

    A Gauss-Newton projection onto the thickness constraint: solve
    ``R delta = max(0, 1 - value)`` over the rows near the minimum, keeping
    rows that are already long enough fixed to first order.
    """
    tol = opts.activation_tol
    for _ in range(iterations):
        rep = thickness(link, tol)
        if rep.thickness >= 1.0 - 1e-12:
            break
        # widen the band so it reaches up to the target
        rep = thickness(link, (1.0 + tol) / rep.thickness - 1.0)
        rows = constraint_rows(link, rep)
        vals = np.array([s.half_length for s in rep.struts]
                        + [k.radius for k in rep.kinks for _ in kink_rows(link, k)])
        R = row_matrix(link, rows)
        if project is not None:
            R = (R @ project).tocsr()
        viol = np.maximum(0.0, 1.0 - vals)
        delta = lsqr(R, viol, atol=1e-12, btol=1e-12, iter_lim=2000)[0]
        if project is not None:
            delta = project @ delta
        link = link.with_vertices(link.vertices + delta.reshape(-1, 3))
    return link


def tighten(link: PolyLink, group: SymmetryGroup | None = None,
            opts: TightenOptions | None = None, callback=None):
    """Tighten ``link``; returns ``(tight_link, trace)``.

    With ``group`` the whole run stays inside G-invariant curves and the
    stopping residual is the G-restricted one. ``callback(phase, link)``,
    if given, sees every iterate at unit thickness scale.
    """
    opts = opts or TightenOptions()
    t0 = time.perf_counter()
    link.require_closed()
    rep = thickness(link)
    if not rep.thickness > 0:
        raise TightenError("initial thickness is zero")
    target = opts.target_thickness
    link = rescale_to_thickness(link, target, rep)
    trace = TightenTrace()
    if group is not None:
        group_actions(link, group, 1e-9)  # raises if not invariant

    # work at unit thickness; scale back at the end
    unit = link.scaled(1.0 / target)
    if opts.penalty_schedule:
        soft = _penalty_phase(unit, opts, group, trace, callback)
        if trace.min_thickness < 0.9:
            # soft constraints may thin the curve; it is rescaled below
            log.info("penalty phase dipped to thickness %.3f", trace.min_thickness)
        soft = rescale_to_thickness(soft, 1.0)
        if ropelength(soft) < ropelength(unit):
            unit = soft
        else:
            log.info("penalty phase did not shorten the curve; discarded")
        trace.min_thickness = 1.0
    state = _State(unit, group, opts)
    if group is not None:
        state.set(rescale_to_thickness(symmetrize(state.link, group, state.actions), 1.0))

    move = opts.step_size
    best = (state.rop, state.link, None)
    last_rops = []
    passive = None
    for step in range(opts.max_steps):
        rows = constraint_rows(state.link, state.report)
        proj = state.project if group is not None else None
        if passive:
            init = [i for i, r in enumerate(rows) if row_key(r) in passive]
        else:
            init = None
        lam, res_vec, g, _ = balance(state.link, rows, proj, init_passive=init)
        passive = {row_key(rows[i]) for i in np.flatnonzero(lam > 0)}
        gnorm = float(np.linalg.norm(g))
        resid = float(np.linalg.norm(res_vec) / gnorm) if gnorm > 0 else 0.0
        trace.add(TraceRecord(len(trace.records), "descent", state.length, state.report.thickness,
                              state.rop, state.report.n_struts, state.report.n_kinks, resid))
        log.debug("step %d  Rop %.5f  residual %.4f  move %.2e", step, state.rop, resid, move)
        if resid <= opts.stop_residual:
            trace.final.event = "converged"
            break
        last_rops.append(state.rop)
        if (len(last_rops) > opts.stall_window
                and last_rops[-opts.stall_window - 1] - state.rop
                <= opts.stop_rop_delta * state.rop):
            trace.final.event = "stalled"
            break

        d = -res_vec.reshape(-1, 3)
        dmax = float(np.linalg.norm(d, axis=1).max())
        # ``move`` is the largest vertex displacement of the trial step
        accepted = False
        backtracks = 0
        while move > 1e-12:
            trial = state.link.with_vertices(state.link.vertices + (move / dmax) * d)
            trial = _correct(trial, opts, proj)
            trep = thickness(trial)
            if trep.thickness > 0.9:
                trial = trial.scaled(1.0 / trep.thickness)
                if total_length(trial) < state.rop:
                    trace.min_thickness = min(trace.min_thickness, trep.thickness)
                    accepted = True
                    break
            move *= 0.5
            backtracks += 1
        if not accepted:
            trace.final.event = "line search failed"
            break
        if backtracks:
            trace.final.event = f"backtracked {backtracks}"
        move = min(move * 1.2, opts.max_step)

        refresh = False
        final_stretch = step >= 0.9 * opts.max_steps
        if (step + 1) % opts.resample_every == 0:
            trial, acts = _resample(state, trial)
            trial = rescale_to_thickness(trial, 1.0)
            refresh = True
            trace.final.event = (trace.final.event + " resampled").strip()
        if group is not None and (refresh or final_stretch or (step + 1) % opts.symmetrize_every == 0):
            trial = symmetrize(trial, group, state.actions)
            trial = rescale_to_thickness(trial, 1.0)
        state.set(trial, refresh_actions=refresh)
        if callback is not None:
            callback("descent", state.link)
        _guard_symmetry(state)
        if state.rop < best[0]:
            best = (state.rop, state.link, len(trace.records))

    if trace.min_thickness < 0.9:
        raise TightenError(f"thickness dropped to {trace.min_thickness:.3f} during the run")
    if best[0] < state.rop and best[2] is not None and best[2] < len(trace.records):
        # a late resampling can cost a little length; return the best iterate
        rec = trace.records[best[2]]
        trace.add(replace(rec, step=len(trace.records), event="restored best iterate"))
        state.set(best[1])
    out = state.link.scaled(target)
    trace.elapsed = time.perf_counter() - t0
    return out, trace


def component_ropelengths(link: PolyLink, thi: float) -> np.ndarray:
    """Per-component length divided by the link's thickness."""
    return component_lengths(link) / thi
