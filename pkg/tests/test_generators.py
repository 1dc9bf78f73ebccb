import math

import numpy as np
import pytest

from symtight.generators import (TorusKnotSpec, chain_with_ring, circle, connect_sum_mirror, perturb,
                                 plane_crossings, split_link_with_ring, square_knot, stadium,
                                 three_chain, torus_knot)
from symtight.link import LinkError, PolyLink, total_length
from symtight.symmetry import (NotInvariantError, check_invariance, cyclic_group, group_actions,
                               mirror_group, reflection, rotation)
from symtight.thickness import thickness

X = (1.0, 0.0, 0.0)


def test_trefoil_two_fold():
    k = torus_knot(TorusKnotSpec(2, 3, 300))
    a = check_invariance(k, rotation((0, 0, 1), math.pi), 1e-12)
    assert a.shift == (150,)


def test_torus25_five_fold():
    k = torus_knot(TorusKnotSpec(2, 5, 500, "q"))
    acts = group_actions(k, cyclic_group(5), 1e-12)
    assert sorted(a.shift[0] for a in acts) == [0, 100, 200, 300, 400]
    assert max(a.residual for a in acts) <= 1e-12


def test_p_mode_is_not_five_fold():
    k = torus_knot(TorusKnotSpec(2, 5, 500, "p"))
    group_actions(k, cyclic_group(2), 1e-12)
    with pytest.raises(NotInvariantError):
        check_invariance(k, rotation((0, 0, 1), 2 * math.pi / 5))


@pytest.mark.parametrize("args", [(2, 4, 100), (0, 3, 90), (2, 5, 501, "q"), (2, 5, 99, "p"),
                                  (2, 3, 60, "r"), (2, 3, 60, "p", 1.0, 1.0)])
def test_torus_spec_errors(args):
    with pytest.raises(LinkError):
        TorusKnotSpec(*args)


def test_circle_closed_forms():
    c = circle(512)
    assert total_length(c) == pytest.approx(1024 * math.sin(math.pi / 512), rel=1e-14)
    assert thickness(c).thickness == pytest.approx(math.cos(math.pi / 512), rel=1e-10)


def test_stadium_shape():
    s = stadium(512, 2.0)
    assert total_length(s) == pytest.approx(2 * math.pi + 4, rel=1e-4)
    with pytest.raises(LinkError):
        stadium(6, 2.0)


def test_mirror_connect_sum_of_circle():
    ring = circle(60, 1.0, center=(3.0, 0.0, 0.0), normal=(0.0, 0.0, 1.0))
    out = connect_sum_mirror(ring, X)
    assert out.n_components == 1
    assert check_invariance(out, reflection(X), 1e-12).residual <= 1e-12
    assert len(plane_crossings(out, X)) == 2


def test_square_knot_is_mirror_symmetric():
    k = square_knot(150)
    a = check_invariance(k, reflection(X), 1e-12)
    assert a.reversed == (True,)
    assert len(plane_crossings(k, X)) == 2


def test_split_union_option():
    ring = circle(60, 1.0, center=(3.0, 0.0, 0.0), normal=(0.0, 0.0, 1.0))
    out = connect_sum_mirror(ring, X, connect_sum=False)
    assert out.n_components == 2
    assert len(plane_crossings(out, X)) == 0
    group_actions(out, mirror_group(X), 1e-12)


def test_connect_sum_errors():
    across = circle(40, 2.0)
    with pytest.raises(LinkError):
        connect_sum_mirror(across, X)
    with pytest.raises(LinkError):
        connect_sum_mirror(PolyLink((circle(20).vertices + [3, 0, 0], circle(20).vertices + [6, 0, 0])), X)


def test_ring_added_in_plane():
    k = square_knot(150)
    out = split_link_with_ring(k, X, ring_radius=3.0, n_ring=90)
    assert out.n_components == 2
    ring = out.components[1]
    assert np.abs(ring[:, 0]).max() <= 1e-12
    group_actions(out, mirror_group(X), 1e-9)


def test_ring_errors():
    k = square_knot(150)
    with pytest.raises(LinkError):
        split_link_with_ring(k, X, ring_radius=0.01)
    chain = three_chain(24, 48)
    with pytest.raises(LinkError):
        # encloses the crossings but grazes the middle ring
        split_link_with_ring(chain, X, ring_radius=3.0, n_ring=60, clearance=0.5)
    ring = circle(60, 1.0, center=(3.0, 0.0, 0.0), normal=(0.0, 0.0, 1.0))
    with pytest.raises(LinkError):
        split_link_with_ring(connect_sum_mirror(ring, X, connect_sum=False), X)


def test_chain_with_ring_structure():
    link = chain_with_ring()
    assert link.counts == [80, 160, 80, 160]
    acts = group_actions(link, mirror_group(X), 1e-9)
    assert sorted(a.perm for a in acts) == [(0, 1, 2, 3), (2, 1, 0, 3)]
    assert thickness(link).thickness > 0.5


def test_perturb_amplitude_and_determinism():
    k = torus_knot(TorusKnotSpec(2, 5, 100, "q"))
    a, b = perturb(k, 0.3, 7), perturb(k, 0.3, 7)
    assert np.array_equal(a.vertices, b.vertices)
    assert np.linalg.norm(a.vertices - k.vertices, axis=1).max() == pytest.approx(0.3)
    with pytest.raises(NotInvariantError):
        check_invariance(a, rotation((0, 0, 1), 2 * math.pi / 5))
