import numpy as np
import pytest

from symtight.fileio import (FormatError, format_lnk, format_vect, parse_lnk, parse_vect,
                             read_link, write_link)
from symtight.generators import three_chain
from symtight.link import PolyLink


def test_lnk_round_trip_is_exact(tmp_path, rng):
    link = PolyLink((rng.standard_normal((7, 3)), rng.standard_normal((5, 3)) * 1e-7))
    path = tmp_path / "x.lnk"
    write_link(link, path, comment="two blobs")
    back = read_link(path)
    for a, b in zip(link.components, back.components):
        assert np.array_equal(a, b)


def test_lnk_comments_and_blank_lines():
    text = "# hello\n\nlnk 1\n# a triangle\ncomponent 3 closed\n0 0 0\n1 0 0\n\n0 1 0\n"
    link = parse_lnk(text)
    assert link.counts == [3]


@pytest.mark.parametrize("text", [
    "",
    "lnk 2\ncomponent 3 closed\n0 0 0\n1 0 0\n0 1 0\n",
    "lnk 1\ncomponent 3 shut\n0 0 0\n1 0 0\n0 1 0\n",
    "lnk 1\ncomponent 3 closed\n0 0 0\n1 0\n0 1 0\n",
    "lnk 1\ncomponent 4 closed\n0 0 0\n1 0 0\n0 1 0\n",
    "lnk 1\n",
])
def test_bad_lnk(text):
    with pytest.raises(FormatError):
        parse_lnk(text)


def test_vect_round_trip(tmp_path):
    link = three_chain()
    path = tmp_path / "chain.vect"
    write_link(link, path)
    back = read_link(path)
    assert back.counts == link.counts
    assert np.array_equal(back.vertices, link.vertices)


def test_vect_colors_ignored():
    text = """VECT
2 7 2
-3 -4
1 1
0 0 0
1 0 0
0 1 0
5 0 0
6 0 0
6 1 0
5 1 0
1 0 0 1
0 1 0 1
"""
    link = parse_vect(text)
    assert link.counts == [3, 4]
    assert link.closed == (True, True)


def test_vect_format_parses_back():
    link = PolyLink((np.eye(3),))
    assert parse_vect(format_vect(link)).counts == [3]
    assert "closed" in format_lnk(link)
