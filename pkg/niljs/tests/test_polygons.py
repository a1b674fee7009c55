"""
Tests for admissible polygons: exact measures, the lens inequality, enumeration and solvability.
"""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from niljs.errors import GeometryError, InputError
from niljs.geometry.ambient import AmbientParams
from niljs.geometry.arcs import ArcLabel, ArcSpec
from niljs.geometry.polygons import (INTERIOR, PolygonEdge, PolygonSpec, check_solvability,
                                     circular_segment_area, enumerate_polygons, is_simple, lens_inequality,
                                     lens_polygon, polygon_measures)
from niljs.geometry.shapes import disk, js_convergent, js_divergent, js_two_lines, lens, rectangle


def edges_of(*arcs):
    return PolygonSpec(tuple(PolygonEdge(arc, arc.arc_id, arc.label, ("b", arc.arc_id)) for arc in arcs))


class TestMeasures:

    def test_full_circle(self):
        upper = ArcSpec.circular((0, 0), 2.0, 0.0, np.pi, label=ArcLabel.A, arc_id="u")
        lower = ArcSpec.circular((0, 0), 2.0, np.pi, 2 * np.pi, arc_id="l")
        m = polygon_measures(edges_of(upper, lower))
        assert m.ell == pytest.approx(4 * np.pi)
        assert m.area == pytest.approx(4 * np.pi)
        assert m.alpha == pytest.approx(2 * np.pi)
        assert m.beta == 0.0

    def test_square(self):
        dom = rectangle(0, 0, 2, 3)
        m = polygon_measures(edges_of(*dom.arcs))
        assert m.ell == pytest.approx(10.0)
        assert m.area == pytest.approx(6.0)

    @pytest.mark.parametrize("half_angle", [0.2, np.pi / 4, 1.3])
    def test_lens_closed_form(self, half_angle):
        radius = 1.7
        arc = ArcSpec.circular((0, 0), radius, np.pi / 2 - half_angle, np.pi / 2 + half_angle, arc_id="a")
        m = polygon_measures(lens_polygon(arc))
        assert m.area == pytest.approx(2 * circular_segment_area(radius, half_angle), rel=1e-12)
        assert m.ell == pytest.approx(4 * radius * half_angle)

    def test_lens_polygon_is_counter_clockwise(self):
        arc = ArcSpec.circular((0, 0), 1.0, 0.3, 1.2, arc_id="a")
        poly = lens_polygon(arc)
        assert poly.signed_area() > 0
        assert poly.provenance == ["a", INTERIOR] or poly.provenance == [INTERIOR, "a"]

    def test_open_polygon_rejected(self):
        a = ArcSpec.segment((0, 0), (1, 0), arc_id="a")
        b = ArcSpec.segment((1, 0), (0, 1), arc_id="b")
        c = ArcSpec.segment((0, 1), (0, 0.5), arc_id="c")
        poly = edges_of(a, b, c)
        assert not is_simple(poly)
        with pytest.raises(GeometryError):
            polygon_measures(poly)

    def test_self_intersecting_rejected(self):
        pts = [(0, 0), (1, 1), (1, 0), (0, 1)]
        segs = [ArcSpec.segment(pts[k], pts[(k + 1) % 4], arc_id=str(k)) for k in range(4)]
        with pytest.raises(GeometryError):
            polygon_measures(edges_of(*segs))


class TestLensInequality:

    @given(h=st.floats(min_value=0.05, max_value=3.0), half_angle=st.floats(min_value=0.05, max_value=1.5))
    @settings(max_examples=20, deadline=None)
    def test_holds_for_every_b_arc(self, h, half_angle):
        radius = 1.0 / (2.0 * h)
        arc = ArcSpec.circular((0, 0), radius, -np.pi / 2 + half_angle, -np.pi / 2 - half_angle,
                               label=ArcLabel.B, arc_id="b")
        report = lens_inequality(arc, AmbientParams(h=h))
        assert report.passed
        assert report.area == pytest.approx(report.closed_form_area, rel=1e-9)
        # 2|B| - 2H A(L) = 2 r (theta + sin theta cos theta)
        expected = 2 * radius * (half_angle + np.sin(half_angle) * np.cos(half_angle))
        assert report.margin == pytest.approx(expected, rel=1e-9)

    def test_polyline_has_no_closed_form(self):
        arc = ArcSpec.polyline([(0, 0), (0.5, -0.1), (1, 0)], label=ArcLabel.B, arc_id="b")
        report = lens_inequality(arc, AmbientParams(h=0.5))
        assert report.closed_form_area is None
        assert report.passed


class TestEnumeration:

    def test_rejects_small_bound(self):
        with pytest.raises(InputError):
            enumerate_polygons(js_convergent(), max_vertices=1)

    def test_convergent_fixture(self):
        polys = enumerate_polygons(js_convergent())
        # whole domain, A with its reflected arc, reflected arc with C
        assert len(polys) == 3
        assert all(p.signed_area() > 0 for p in polys)
        whole = frozenset({("b", "A"), ("b", "C")})
        assert whole in {p.key for p in polys}

    def test_independent_of_workers(self):
        dom = js_two_lines()
        serial = enumerate_polygons(dom, max_vertices=4, workers=1)
        threaded = enumerate_polygons(dom, max_vertices=4, workers=4)
        assert [p.key for p in serial] == [p.key for p in threaded]

    def test_vertex_bound_limits_output(self):
        dom = js_two_lines()
        few = enumerate_polygons(dom, max_vertices=2)
        many = enumerate_polygons(dom, max_vertices=4)
        assert 0 < len(few) < len(many)
        assert max(len(p.edges) for p in many) <= 4

    def test_minimal_square_uses_segments(self):
        polys = enumerate_polygons(rectangle(0, 0, 1, 1))
        # the square and the two triangles cut by each diagonal
        assert len(polys) == 5
        areas = sorted(p.measures.area for p in polys)
        assert areas == pytest.approx([0.5, 0.5, 0.5, 0.5, 1.0])


class TestSolvability:

    def test_convergent_passes(self):
        dom = js_convergent()
        report = check_solvability(dom, enumerate_polygons(dom))
        assert report.passed
        assert report.regime == "upper"
        assert all(p.alpha_required and not p.beta_required for p in report.polygons)

    def test_divergent_fails_on_reflected_lens(self):
        dom = js_divergent()
        report = check_solvability(dom, enumerate_polygons(dom))
        assert not report.passed
        worst = min(report.polygons, key=lambda p: p.alpha_margin)
        # A together with the reflected quarter circle: l + 2HA - 2 alpha = 1 - pi/2
        assert worst.alpha_margin == pytest.approx(1 - np.pi / 2, abs=1e-6)
        assert worst.alpha == pytest.approx(1.5 * np.pi)

    def test_two_lines_fails(self):
        dom = js_two_lines()
        report = check_solvability(dom, enumerate_polygons(dom))
        assert not report.passed
        assert report.failing

    def test_all_c_domain(self):
        dom = disk(1.0, params=AmbientParams(h=0.3))
        report = check_solvability(dom, enumerate_polygons(dom))
        assert report.regime == "two-sided"
        assert report.passed

    def test_no_c_identity(self):
        # A/B lens with equal radii: alpha = beta + 2H area fails
        dom = lens(1.0, np.pi / 3, AmbientParams(h=0.5), labels=("A", "B"))
        report = check_solvability(dom, enumerate_polygons(dom))
        assert report.regime == "no-C"
        assert report.boundary_identity is not None
        assert not report.boundary_identity.passed
        assert report.boundary_identity.residual == pytest.approx(-dom.area)
