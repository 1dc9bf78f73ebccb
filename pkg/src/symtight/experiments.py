"""Batch tightening experiments described in small key-value files.

A file has one ``[experiment]`` section and any number of ``[run.<label>]``
sections::

    [experiment]
    name = "torus25"

    [run.z5]
    generate = "torus 2 5 --n 500 --mode q"
    group = "cyclic:5:0,0,1"
    expected_rop = 48.23
    tolerance = 0.03

Values are Python literals (numbers, quoted strings); bare words are read as
strings. A run starts from ``generate`` (generator words, as on the command line),
``input`` (a link file) or ``start_from`` (the tightened result of an
earlier run). ``perturb`` rescales the seed to unit thickness and adds a
smooth random displacement of at most that size, drawn with ``seed``. Remaining keys go to
:class:`TightenOptions`.
"""

from __future__ import annotations

import ast
import configparser
import math
import shlex
from dataclasses import dataclass, field, fields

from .criticality import certify
from .symmetry import group_actions, parse_group
from .thickness import thickness
from .tighten import TightenOptions, tighten

RUN_KEYS = {"generate", "group", "expected_rop", "tolerance", "perturb", "seed", "input", "start_from"}


class ExperimentError(ValueError):
    pass


@dataclass
class RunSpec:
    label: str
    generate: str = ""
    input: str = ""
    start_from: str = ""
    group: str = "none"
    expected_rop: float | None = None
    tolerance: float | None = None
    perturb: float = 0.0
    seed: int = 0
    options: dict = field(default_factory=dict)


@dataclass
class ExperimentSpec:
    name: str
    runs: list


@dataclass
class RunResult:
    label: str
    ropelength: float
    thickness: float
    residual_full: float
    residual_sym: float | None
    n_struts: int
    n_kinks: int
    expected_rop: float | None
    tolerance: float | None
    steps: int
    seconds: float
    link: object = field(repr=False, default=None)

    @property
    def rop_ok(self) -> bool | None:
        if self.expected_rop is None:
            return None
        tol = self.tolerance if self.tolerance is not None else 0.02
        return abs(self.ropelength - self.expected_rop) <= tol * self.expected_rop


def _value(text):
    try:
        return ast.literal_eval(text)
    except (ValueError, SyntaxError):
        return text.strip()


def parse_experiment(text: str) -> ExperimentSpec:
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#",))
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ExperimentError(str(exc)) from exc
    if not cp.has_section("experiment"):
        raise ExperimentError("missing [experiment] section")
    name = str(_value(cp.get("experiment", "name", fallback="experiment")))
    opt_names = {f.name for f in fields(TightenOptions)}
    runs = []
    for sec in cp.sections():
        if not sec.startswith("run."):
            if sec != "experiment":
                raise ExperimentError(f"unknown section [{sec}]")
            continue
        run = RunSpec(sec[4:])
        for key, raw in cp.items(sec):
            val = _value(raw)
            if key in RUN_KEYS:
                setattr(run, key, val)
            elif key in opt_names:
                if key == "penalty_schedule":
                    val = tuple(val)
                run.options[key] = val
            else:
                raise ExperimentError(f"[{sec}] unknown key {key!r}")
        if sum(map(bool, (run.generate, run.input, run.start_from))) != 1:
            raise ExperimentError(f"[{sec}] needs exactly one of generate, input or start_from")
        if run.start_from and run.start_from not in {r.label for r in runs}:
            raise ExperimentError(f"[{sec}] start_from names no earlier run")
        runs.append(run)
    if not runs:
        raise ExperimentError("no [run.*] sections")
    return ExperimentSpec(name, runs)


def load_experiment(path) -> ExperimentSpec:
    with open(path) as fh:
        return parse_experiment(fh.read())


def build_seed(run: RunSpec, base_dir=".", previous=None):
    from pathlib import Path

    from .cli import generate_link
    from .fileio import read_link
    from .generators import perturb
    from .tighten import rescale_to_thickness

    if run.start_from:
        if not previous or run.start_from not in previous:
            raise ExperimentError(f"run {run.start_from!r} has no result yet")
        link = previous[run.start_from]
    elif run.input:
        p = Path(run.input)
        if not p.is_absolute():
            p = Path(base_dir) / p
        if not p.exists():
            raise ExperimentError(f"input file {p} does not exist")
        link = read_link(p)
    else:
        link = generate_link(shlex.split(run.generate))
    if run.perturb:
        # amplitude is measured in units of the thickness
        link = perturb(rescale_to_thickness(link, 1.0), float(run.perturb), int(run.seed))
    return link


def run_one(run: RunSpec, base_dir=".", activation_tol: float | None = None,
            previous=None) -> RunResult:
    group = parse_group(run.group)
    link = build_seed(run, base_dir, previous)
    opts = TightenOptions(**run.options)
    tight, trace = tighten(link, None if len(group) == 1 else group, opts)
    tol = activation_tol if activation_tol is not None else opts.activation_tol
    rep = thickness(tight, tol)
    full = certify(tight, rep).residual
    sym = None
    if len(group) > 1:
        acts = group_actions(tight, group, 1e-6)
        sym = certify(tight, rep, "sym", group, acts).residual
    return RunResult(run.label, trace.final.ropelength, rep.thickness, full, sym, rep.n_struts,
                     rep.n_kinks, run.expected_rop, run.tolerance,
                     sum(1 for r in trace.records if r.phase == "descent"), trace.elapsed, tight)


def run_experiment(spec: ExperimentSpec, base_dir=".", progress=None) -> list:
    out = []
    done = {}
    for run in spec.runs:
        res = run_one(run, base_dir, previous=done)
        done[run.label] = res.link
        if progress is not None:
            progress(res)
        out.append(res)
    return out


def format_table(results) -> str:
    head = f"{'run':<10} {'Rop':>9} {'expected':>9} {'rel.err':>8} {'res.full':>9} {'res.sym':>8} {'struts':>7} {'kinks':>6} {'sec':>7}"
    lines = [head, "-" * len(head)]
    for r in results:
        exp = f"{r.expected_rop:9.2f}" if r.expected_rop is not None else f"{'-':>9}"
        err = (f"{(r.ropelength - r.expected_rop) / r.expected_rop:+8.2%}"
               if r.expected_rop is not None else f"{'-':>8}")
        sym = f"{r.residual_sym:8.4f}" if r.residual_sym is not None else f"{'-':>8}"
        lines.append(f"{r.label:<10} {r.ropelength:9.3f} {exp} {err} {r.residual_full:9.4f} {sym} "
                     f"{r.n_struts:7d} {r.n_kinks:6d} {r.seconds:7.1f}")
    return "\n".join(lines)


def results_json(results) -> list:
    def clean(x):
        return None if isinstance(x, float) and not math.isfinite(x) else x

    return [{"label": r.label, "ropelength": r.ropelength, "thickness": r.thickness,
             "residual_full": r.residual_full, "residual_sym": clean(r.residual_sym),
             "n_struts": r.n_struts, "n_kinks": r.n_kinks, "expected_rop": r.expected_rop,
             "rop_within_tolerance": r.rop_ok, "seconds": r.seconds} for r in results]
