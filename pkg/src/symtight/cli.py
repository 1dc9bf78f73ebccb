"""Command-line interface: ``python -m symtight <subcommand> ...``."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

SCHEMA = 1


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _emit(obj, out=None):
    text = json.dumps({"schema": SCHEMA, **obj}, indent=2)
    if out:
        Path(out).write_text(text + "\n")
    else:
        print(text)


def _load(path):
    from .fileio import read_link

    return read_link(path)


def _group(text):
    from .symmetry import parse_group

    try:
        return parse_group(text)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


# -- generate -------------------------------------------------------------------

def _generate_parser(prog="generate"):
    p = _Parser(prog=prog, description="Build a seed configuration.")
    sub = p.add_subparsers(dest="kind", required=True, parser_class=_Parser)
    t = sub.add_parser("torus", help="(p,q) torus knot")
    t.add_argument("p", type=int)
    t.add_argument("q", type=int)
    t.add_argument("--n", type=int, default=500)
    t.add_argument("--mode", choices=("p", "q"), default="p")
    t.add_argument("--R", type=float, default=2.0, dest="major")
    t.add_argument("--r", type=float, default=1.0, dest="minor")
    s = sub.add_parser("square-knot", help="trefoil joined to its mirror image")
    s.add_argument("--n", type=int, default=300)
    c = sub.add_parser("chain-ring", help="three-ring chain plus a ring in its mirror plane")
    c.add_argument("--ring-radius", type=float, default=5.0)
    c.add_argument("--no-ring", action="store_true")
    c.add_argument("--n-outer", type=int, default=80)
    c.add_argument("--n-middle", type=int, default=160)
    c.add_argument("--n-ring", type=int, default=160)
    ci = sub.add_parser("circle", help="regular polygon")
    ci.add_argument("--n", type=int, default=512)
    ci.add_argument("--radius", type=float, default=1.0)
    st = sub.add_parser("stadium", help="two unit semicircles joined by straights")
    st.add_argument("--n", type=int, default=512)
    st.add_argument("--straight", type=float, default=2.0)
    for q in (t, s, c, ci, st):
        q.add_argument("--perturb", type=float, default=0.0,
                       help="rescale to thickness 1, then move vertices by at most this much")
        q.add_argument("--seed", type=int, default=0)
    return p


def generate_link(argv):
    """Build a link from generator words, e.g. ``["torus", "2", "5", "--n", "500"]``."""
    from . import generators as gen

    a = _generate_parser().parse_args(argv)
    if a.kind == "torus":
        link = gen.torus_knot(gen.TorusKnotSpec(a.p, a.q, a.n, a.mode, a.major, a.minor))
    elif a.kind == "square-knot":
        link = gen.square_knot(a.n)
    elif a.kind == "chain-ring":
        kw = dict(n_outer=a.n_outer, n_middle=a.n_middle)
        link = gen.three_chain(**kw) if a.no_ring else gen.chain_with_ring(a.ring_radius, a.n_ring, **kw)
    elif a.kind == "circle":
        link = gen.circle(a.n, a.radius)
    else:
        link = gen.stadium(a.n, a.straight)
    if a.perturb:
        from .tighten import rescale_to_thickness

        link = gen.perturb(rescale_to_thickness(link, 1.0), a.perturb, a.seed)
    return link


# -- subcommands ----------------------------------------------------------------

def cmd_rop(a):
    from .link import total_length
    from .thickness import thickness

    link = _load(a.file)
    rep = thickness(link, a.tol)
    L = total_length(link)
    _emit({"length": L, "thickness": rep.thickness, "ropelength": L / rep.thickness,
           "min_rad": rep.min_rad, "n_struts": rep.n_struts, "n_kinks": rep.n_kinks})


def _csv_out(path):
    return open(path, "w", newline="") if path else sys.stdout


def cmd_struts(a):
    from .thickness import thickness

    rep = thickness(_load(a.file), a.tol)
    fh = _csv_out(a.out)
    w = csv.writer(fh)
    w.writerow(["comp_a", "edge_a", "t_a", "comp_b", "edge_b", "t_b", "chord", "pd"])
    for s in rep.struts:
        w.writerow([*s.a, *s.b, repr(s.chord_length), repr(s.penalized_length)])
    if a.out:
        fh.close()


def cmd_kinks(a):
    from .thickness import thickness

    rep = thickness(_load(a.file), a.tol)
    fh = _csv_out(a.out)
    w = csv.writer(fh)
    w.writerow(["comp", "vertex", "radius"])
    for k in rep.kinks:
        w.writerow([k.component, k.vertex, repr(k.radius)])
    if a.out:
        fh.close()


def cmd_tighten(a):
    from .fileio import write_link
    from .generators import perturb
    from .tighten import TightenOptions, rescale_to_thickness, tighten

    group = _group(a.group)
    link = _load(a.file)
    if a.perturb:
        if len(group) > 1:
            raise UsageError("--perturb breaks symmetry; use it without --group")
        link = perturb(rescale_to_thickness(link, 1.0), a.perturb, a.seed)
    kw = {"activation_tol": a.tol}
    if a.steps is not None:
        kw["max_steps"] = a.steps
    tight, trace = tighten(link, group if len(group) > 1 else None, TightenOptions(**kw))
    if a.trace:
        trace.to_csv(a.trace)
    if a.out:
        write_link(tight, a.out, comment=f"tightened, group {a.group}")
    f = trace.final
    _emit({"length": f.length, "thickness": f.thickness, "ropelength": f.ropelength,
           "residual": f.residual, "n_struts": f.n_struts, "n_kinks": f.n_kinks,
           "steps": len(trace.records), "seconds": trace.elapsed})


def cmd_check(a):
    from .criticality import certify
    from .symmetry import group_actions
    from .thickness import thickness

    group = _group(a.group)
    link = _load(a.file)
    if a.mode == "sym" and len(group) == 1:
        raise UsageError("--mode sym needs a nontrivial --group")
    rep = thickness(link, a.tol)
    acts = group_actions(link, group, a.sym_tol) if a.mode == "sym" else None
    cert = certify(link, rep, a.mode, group, acts)
    _emit({"residual": cert.residual, "mode": a.mode, "n_struts": rep.n_struts,
           "n_kinks": rep.n_kinks, "multiplier_stats": cert.multiplier_stats(),
           "certified": cert.certifies(a.eps), "eps": a.eps})


def cmd_generate(a):
    from .fileio import write_link

    link = generate_link(a.words)
    if a.out:
        write_link(link, a.out, comment="generate " + " ".join(a.words))
    else:
        from .fileio import format_lnk

        sys.stdout.write(format_lnk(link, comment="generate " + " ".join(a.words)))


def cmd_symmetrize(a):
    from .fileio import format_lnk, write_link
    from .symmetry import group_actions, invariance_residual, symmetrize

    group = _group(a.group)
    link = _load(a.file)
    acts = group_actions(link, group, a.sym_tol)
    out = symmetrize(link, group, acts)
    logging.getLogger(__name__).info("invariance residual %.3e -> %.3e",
                                     invariance_residual(link, acts), invariance_residual(out, acts))
    if a.out:
        write_link(out, a.out)
    else:
        sys.stdout.write(format_lnk(out))


def cmd_experiment(a):
    from .experiments import format_table, load_experiment, results_json, run_experiment

    spec = load_experiment(a.file)
    base = Path(a.file).resolve().parent

    def progress(r):
        print(f"[{spec.name}] {r.label}: Rop {r.ropelength:.3f}, residual {r.residual_full:.4f}",
              file=sys.stderr)

    results = run_experiment(spec, base, progress)
    print(format_table(results))
    if a.json:
        Path(a.json).write_text(json.dumps({"schema": SCHEMA, "name": spec.name,
                                            "runs": results_json(results)}, indent=2) + "\n")
    if a.save_dir:
        from .fileio import write_link

        d = Path(a.save_dir)
        d.mkdir(parents=True, exist_ok=True)
        for r in results:
            write_link(r.link, d / f"{spec.name}_{r.label}.lnk")


def build_parser():
    p = _Parser(prog="symtight", description="Thickness, ropelength and symmetric tightening.")
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    for name, fn, hlp in (("rop", cmd_rop, "length, thickness and ropelength as JSON"),
                          ("struts", cmd_struts, "strut list as CSV"),
                          ("kinks", cmd_kinks, "kink list as CSV")):
        q = sub.add_parser(name, help=hlp)
        q.add_argument("file")
        q.add_argument("--tol", type=float, default=1e-4, help="relative activation tolerance")
        if name != "rop":
            q.add_argument("--out")
        q.set_defaults(func=fn)

    q = sub.add_parser("tighten", help="minimize ropelength, optionally within a symmetry group")
    q.add_argument("file")
    q.add_argument("--group", default="none")
    q.add_argument("--steps", type=int)
    q.add_argument("--tol", type=float, default=5e-3, help="activation tolerance")
    q.add_argument("--out")
    q.add_argument("--trace")
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--perturb", type=float, default=0.0,
                   help="break symmetry first: largest vertex move, in units of the thickness")
    q.set_defaults(func=cmd_tighten)

    q = sub.add_parser("check-critical", help="criticality certificate as JSON")
    q.add_argument("file")
    q.add_argument("--group", default="none")
    q.add_argument("--tol", type=float, default=5e-3, help="activation tolerance")
    q.add_argument("--mode", choices=("full", "sym"), default="full")
    q.add_argument("--eps", type=float, default=0.05)
    q.add_argument("--sym-tol", type=float, default=1e-6)
    q.set_defaults(func=cmd_check)

    q = sub.add_parser("generate", help="write a seed configuration (see 'generate torus -h')",
                       add_help=False)
    q.add_argument("words", nargs=argparse.REMAINDER)
    q.add_argument("--out")
    q.set_defaults(func=cmd_generate)

    q = sub.add_parser("symmetrize", help="project a link onto exact G-invariance")
    q.add_argument("file")
    q.add_argument("--group", required=True)
    q.add_argument("--out")
    q.add_argument("--sym-tol", type=float, default=1e-6)
    q.set_defaults(func=cmd_symmetrize)

    q = sub.add_parser("experiment", help="run a batch of tightenings from an experiment file")
    q.add_argument("file")
    q.add_argument("--json")
    q.add_argument("--save-dir")
    q.set_defaults(func=cmd_experiment)
    return p


def _split_generate(argv):
    # "--out" may appear anywhere after "generate"; pull it out before the
    # generator words go to their own parser
    if "generate" not in argv:
        return argv
    i = argv.index("generate")
    rest = list(argv[i + 1:])
    out = []
    if "--out" in rest:
        j = rest.index("--out")
        if j + 1 >= len(rest):
            raise UsageError("generate: --out needs a path")
        out = ["--out", rest[j + 1]]
        del rest[j:j + 2]
    return argv[:i + 1] + out + rest


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    from .link import LinkError
    from .nnls import NNLSConvergenceError

    try:
        a = build_parser().parse_args(_split_generate(argv))
        logging.basicConfig(level=logging.WARNING - 10 * min(a.verbose, 2),
                            format="%(levelname)s %(name)s: %(message)s")
        a.func(a)
    except UsageError as exc:
        print(str(exc).splitlines()[0], file=sys.stderr)
        return 2
    except SystemExit as exc:  # -h from a nested parser
        return int(exc.code or 0)
    except (LinkError, NNLSConvergenceError, ValueError, OSError) as exc:
        print(f"error: {exc}".splitlines()[0], file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
