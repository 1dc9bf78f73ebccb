"""Reading and writing links: the LNK v1 text format and Geomview VECT."""

from __future__ import annotations

import io
from pathlib import Path

import numpy as np

from .link import LinkError, PolyLink


class FormatError(LinkError):
    pass


def _content_lines(text):
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        yield lineno, line


def parse_lnk(text: str) -> PolyLink:
    lines = _content_lines(text)
    try:
        lineno, header = next(lines)
    except StopIteration:
        raise FormatError("empty LNK file") from None
    if header.split() != ["lnk", "1"]:
        raise FormatError(f"line {lineno}: expected 'lnk 1' header, got {header!r}")
    comps, closed = [], []
    for lineno, line in lines:
        words = line.split()
        if words[0] != "component" or len(words) != 3:
            raise FormatError(f"line {lineno}: expected 'component <n> closed|open'")
        try:
            n = int(words[1])
        except ValueError:
            raise FormatError(f"line {lineno}: bad vertex count {words[1]!r}") from None
        if words[2] not in ("closed", "open"):
            raise FormatError(f"line {lineno}: unknown closure flag {words[2]!r}")
        pts = np.empty((n, 3))
        for k in range(n):
            try:
                lineno, row = next(lines)
                pts[k] = [float(w) for w in row.split()]
            except StopIteration:
                raise FormatError("unexpected end of file inside a component") from None
            except ValueError:
                raise FormatError(f"line {lineno}: expected three coordinates") from None
        comps.append(pts)
        closed.append(words[2] == "closed")
    if not comps:
        raise FormatError("LNK file has no components")
    return PolyLink(tuple(comps), tuple(closed))


def format_lnk(link: PolyLink, comment: str | None = None) -> str:
    out = io.StringIO()
    if comment:
        for line in comment.splitlines():
            out.write(f"# {line}\n")
    out.write("lnk 1\n")
    for comp, closed in zip(link.components, link.closed):
        out.write(f"component {len(comp)} {'closed' if closed else 'open'}\n")
        for x, y, z in comp:
            out.write(f"{float(x)!r} {float(y)!r} {float(z)!r}\n")
    return out.getvalue()


def parse_vect(text: str) -> PolyLink:
    """Parse a Geomview VECT file. Colors are read past and discarded.

    A negative per-polyline vertex count marks a closed polyline.
    """
    tokens = []
    for raw in text.splitlines():
        tokens.extend(raw.split("#", 1)[0].split())
    if not tokens or tokens[0] not in ("VECT", "4VECT"):
        raise FormatError("missing VECT header")
    if tokens[0] == "4VECT":
        raise FormatError("4VECT (homogeneous) files are not supported")
    try:
        nums = [float(t) for t in tokens[1:]]
    except ValueError as exc:
        raise FormatError(f"bad VECT token: {exc}") from None
    if len(nums) < 3:
        raise FormatError("truncated VECT counts line")
    npoly, nvert, ncolor = (int(x) for x in nums[:3])
    pos = 3
    counts = [int(x) for x in nums[pos:pos + npoly]]
    pos += npoly + npoly  # skip per-polyline color counts
    if sum(abs(c) for c in counts) != nvert:
        raise FormatError("vertex counts do not add up to the declared total")
    coords = np.array(nums[pos:pos + 3 * nvert])
    if coords.size != 3 * nvert:
        raise FormatError("truncated VECT coordinates")
    coords = coords.reshape(nvert, 3)
    comps, closed, k = [], [], 0
    for c in counts:
        comps.append(coords[k:k + abs(c)])
        closed.append(c < 0)
        k += abs(c)
    return PolyLink(tuple(comps), tuple(closed))


def format_vect(link: PolyLink) -> str:
    counts = [-len(c) if cl else len(c) for c, cl in zip(link.components, link.closed)]
    out = io.StringIO()
    out.write("VECT\n")
    out.write(f"{len(counts)} {link.n_vertices} 0\n")
    out.write(" ".join(str(c) for c in counts) + "\n")
    out.write(" ".join("0" for _ in counts) + "\n")
    for x, y, z in link.vertices:
        out.write(f"{float(x)!r} {float(y)!r} {float(z)!r}\n")
    return out.getvalue()


def read_link(path) -> PolyLink:
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    first = next((ln for _, ln in _content_lines(text)), "")
    if path.suffix.lower() == ".vect" or first.split()[:1] == ["VECT"]:
        return parse_vect(text)
    return parse_lnk(text)


def write_link(link: PolyLink, path, comment: str | None = None):
    path = Path(path)
    if path.suffix.lower() == ".vect":
        path.write_text(format_vect(link), encoding="utf-8")
    else:
        path.write_text(format_lnk(link, comment), encoding="utf-8")
