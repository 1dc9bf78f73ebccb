import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import smooth_field
from symtight.generators import TorusKnotSpec, circle, stadium, torus_knot
from symtight.link import ArcPosition, LinkError, PolyLink, total_length
from symtight.thickness import Kink, Strut, thickness, vertex_radii
from symtight.variation import (constraint_rows, delta_length, delta_thickness, kink_row, kink_rows,
                                length_gradient, row_key, row_matrix, strut_row)

SEEDS = {
    "circle": circle(64),
    "stadium": stadium(64),
    "trefoil": torus_knot(TorusKnotSpec(2, 3, 120)),
    "torus25": torus_knot(TorusKnotSpec(2, 5, 100, "q")),
}


def _rotation_field(link, omega):
    return np.cross(omega, link.vertices)


# -- length ---------------------------------------------------------------------

def test_delta_length_scaling_translation_rotation(rng):
    link = SEEDS["trefoil"]
    assert delta_length(link, link.vertices) == pytest.approx(total_length(link), rel=1e-12)
    assert delta_length(link, np.tile(rng.standard_normal(3), (link.n_vertices, 1))) == pytest.approx(0, abs=1e-12)
    assert abs(delta_length(link, _rotation_field(link, rng.standard_normal(3)))) <= 1e-12


def test_length_gradient_is_riesz_representative(rng):
    link = SEEDS["torus25"]
    xi = smooth_field(link, rng)
    assert np.sum(length_gradient(link) * xi) == pytest.approx(delta_length(link, xi), rel=1e-12)


def test_length_gradient_on_polygon_points_inward():
    n = 200
    g = length_gradient(circle(n))
    v = circle(n).vertices
    # length grows when pushed outward
    radial = np.einsum("ij,ij->i", g, -v)
    assert np.allclose(radial, -2 * math.sin(math.pi / n), rtol=1e-10)


def test_straight_vertex_has_zero_gradient():
    link = PolyLink((np.array([[0, 0, 0], [1, 0, 0], [2, 0, 0], [1, 1, 0]], float),))
    assert np.allclose(length_gradient(link)[1], 0.0, atol=1e-15)


def test_field_shape_checked():
    with pytest.raises(LinkError):
        delta_length(SEEDS["circle"], np.zeros((3, 3)))


# -- rows -----------------------------------------------------------------------

def _two_vertex_strut_link():
    pts = np.array([[0, 0, 0], [1, 0, 1], [0, 0, 2], [-1, 0, 1]], float)
    link = PolyLink((pts,))
    return link, Strut(ArcPosition(0, 0, 0.0), ArcPosition(0, 2, 0.0), 2.0, 2.0)


def test_strut_row_direct_substitution():
    link, s = _two_vertex_strut_link()
    row = strut_row(link, s)
    xi = np.zeros((4, 3))
    xi[0] = [0, 0, -1]
    xi[2] = [0, 0, 1]
    assert row.apply(xi) == pytest.approx(1.0)
    assert row.apply(np.tile([0.3, -2.0, 5.0], (4, 1))) == pytest.approx(0.0, abs=1e-15)


def test_kink_row_scaling_and_translation(rng):
    link = SEEDS["trefoil"]
    rho = vertex_radii(link)
    for i in (0, 17, 60):
        row = kink_row(link, Kink(0, i, float(rho[i])))
        assert row.apply(link.vertices) == pytest.approx(rho[i], rel=1e-12)
        assert row.apply(np.tile(rng.standard_normal(3), (link.n_vertices, 1))) == pytest.approx(0, abs=1e-12)


def test_kink_row_matches_central_difference():
    # right-angle corner, unit edges; move the corner out along the bisector
    pts = np.array([[-1, 0, 0], [0, 0, 0], [0, 1, 0], [-3, 4, 0], [-4, 1, 0]], float)
    link = PolyLink((pts,))
    xi = np.zeros_like(pts)
    xi[1] = [np.sqrt(0.5), -np.sqrt(0.5), 0]
    # unit edges tie; each branch is its own smooth function
    for use_in in (True, False):
        row = kink_row(link, Kink(0, 1, 0.5), use_in=use_in)
        h = 1e-6

        def rho(t):
            p = link.vertices + t * xi
            a, b = p[1] - p[0], p[2] - p[1]
            la, lb = np.linalg.norm(a), np.linalg.norm(b)
            theta = math.acos(np.clip(a @ b / (la * lb), -1, 1))
            return (la if use_in else lb) / (2 * math.tan(theta / 2))

        fd = (rho(h) - rho(-h)) / (2 * h)
        assert row.apply(xi) == pytest.approx(fd, abs=1e-6)


def test_kink_ties_give_two_rows():
    link = circle(40)
    rows = kink_rows(link, Kink(0, 3, float(vertex_radii(link)[3])))
    assert [r.branch for r in rows] == ["in", "out"]
    pts = np.array([[0, 0, 0], [2, 0, 0], [2, 1, 0], [0, 3, 0]], float)
    uneven = PolyLink((pts,))
    assert len(kink_rows(uneven, Kink(0, 1, 1.0))) == 1


def test_tie_derivative_is_one_sided_min():
    # at a tie the radius is a min of two branches; the row minimum follows it
    link = circle(40)
    rng = np.random.default_rng(4)
    rep = thickness(link, 1e-9)
    for _ in range(5):
        xi = smooth_field(link, rng)
        t = 1e-7
        moved = link.with_vertices(link.vertices + t * xi)
        fd = (thickness(moved).thickness - rep.thickness) / t
        assert fd == pytest.approx(delta_thickness(link, xi, rep), abs=1e-4)


def test_row_matrix_matches_rows(rng):
    link = SEEDS["torus25"]
    rows = constraint_rows(link, thickness(link, 1e-2))
    R = row_matrix(link, rows)
    xi = smooth_field(link, rng)
    assert np.allclose(R @ xi.ravel(), [r.apply(xi) for r in rows], atol=1e-13)
    assert len({row_key(r) for r in rows}) == len(rows)


def test_rows_reject_stale_references():
    link = circle(10)
    with pytest.raises(LinkError):
        strut_row(link, Strut(ArcPosition(0, 12, 0.5), ArcPosition(0, 3, 0.5), 1.0, 1.0))
    with pytest.raises(LinkError):
        kink_row(link, Kink(1, 0, 1.0))


# -- thickness ------------------------------------------------------------------

@pytest.mark.parametrize("name", sorted(SEEDS))
def test_delta_thickness_scaling_and_rigid(name, rng):
    link = SEEDS[name]
    rep = thickness(link)
    assert delta_thickness(link, link.vertices, rep) == pytest.approx(rep.thickness, rel=1e-10)
    rigid = _rotation_field(link, rng.standard_normal(3)) + rng.standard_normal(3)
    assert abs(delta_thickness(link, rigid, rep)) <= 1e-12


def test_delta_thickness_empty_report():
    link = circle(16)
    rep = thickness(link)
    empty = type(rep)(rep.thickness, rep.min_rad, rep.min_strut_half_length, [], [])
    assert delta_thickness(link, link.vertices, empty) == math.inf


@pytest.mark.parametrize("name", sorted(SEEDS))
def test_finite_differences_converge_linearly(name):
    link = SEEDS[name]
    rng = np.random.default_rng(sorted(SEEDS).index(name))
    rep = thickness(link, 1e-9)  # exact ties only
    T0, L0 = rep.thickness, total_length(link)
    for _ in range(3):
        xi = smooth_field(link, rng)
        dT, dL = delta_thickness(link, xi, rep), delta_length(link, xi)
        qT, qL = [], []
        for t in (1e-3, 1e-4, 1e-5):
            moved = link.with_vertices(link.vertices + t * xi)
            qT.append((thickness(moved).thickness - T0) / t)
            qL.append((total_length(moved) - L0) / t)
        for q, d in ((qT, dT), (qL, dL)):
            err = np.abs(np.array(q) - d)
            scale = max(1.0, abs(d))
            assert err[1] <= 0.15 * err[0] + 1e-8 * scale
            assert err[2] <= 0.15 * err[1] + 1e-8 * scale
            assert err[2] <= 1e-2 * scale
            # O(t) error: Richardson removes the leading term
            rich = (10 * q[2] - q[1]) / 9
            assert abs(rich - d) <= 0.05 * err[2] + 1e-8 * scale


def test_superlinearity_many_triples():
    rng = np.random.default_rng(11)
    prepared = []
    for link in SEEDS.values():
        rep = thickness(link, 1e-2)
        prepared.append((link, rep, constraint_rows(link, rep)))
    for k in range(1000):
        link, rep, rows = prepared[k % len(prepared)]
        xi = smooth_field(link, rng) if k % 2 else rng.standard_normal((link.n_vertices, 3))
        eta = smooth_field(link, rng)
        a = float(rng.exponential())
        dx = delta_thickness(link, xi, rep, rows)
        assert delta_thickness(link, a * xi, rep, rows) == pytest.approx(a * dx, rel=1e-12, abs=1e-12)
        assert (delta_thickness(link, xi + eta, rep, rows)
                >= dx + delta_thickness(link, eta, rep, rows) - 1e-9)


@settings(max_examples=40, deadline=None)
@given(st.sampled_from(sorted(SEEDS)), st.integers(0, 2**31), st.floats(0, 50))
def test_superlinearity_property(name, seed, a):
    link = SEEDS[name]
    rng = np.random.default_rng(seed)
    rep = thickness(link, 1e-3)
    xi, eta = rng.standard_normal((2, link.n_vertices, 3))
    dx = delta_thickness(link, xi, rep)
    assert delta_thickness(link, a * xi, rep) == pytest.approx(a * dx, rel=1e-12, abs=1e-12)
    assert delta_thickness(link, xi + eta, rep) >= dx + delta_thickness(link, eta, rep) - 1e-9
