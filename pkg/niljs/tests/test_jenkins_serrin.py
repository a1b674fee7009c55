"""
Tests for truncated-data sequences, divergence detection and circle fits.
"""

from dataclasses import replace

import numpy as np
import pytest

from niljs.errors import InputError, NoConvergenceRegion, NotApplicable
from niljs.fem.flux import flux_limit_check
from niljs.fem.mesh import build_mesh
from niljs.fem.solver import ScalarField, Truncation, boundary_values
from niljs.geometry.ambient import AmbientParams
from niljs.geometry.shapes import cap_disk, disk, js_convergent, js_divergent, js_two_lines, lens, rectangle
from niljs.sequence.circle_fit import fit_fixed_radius, taubin_fit
from niljs.sequence.jenkins_serrin import (SequenceRun, auto_truncation, converged_mask, detect_divergence,
                                          geometric_n_values, limit_solution, run_sequence, successive_gap,
                                          uniqueness_probe)


@pytest.fixture(scope="module")
def convergent_run():
    return run_sequence(js_convergent(), [1, 2, 4], h=0.1)


@pytest.fixture(scope="module")
def divergent_run():
    run = run_sequence(js_divergent(), geometric_n_values(64), h=0.05)
    return run, detect_divergence(run)


def synthetic_run(center=(0.0, -1.0), radius=1.0, width=0.15, n_values=(4, 8, 16)):
    """Members that step up by n across a fixed circle, so the gradient blows up on it"""
    dom = disk(1.5, params=AmbientParams(h=0.5))
    mesh = build_mesh(dom, 0.1)
    d = radius - np.linalg.norm(mesh.nodes - np.asarray(center), axis=1)
    run = SequenceRun(dom, mesh, Truncation.UPPER, list(n_values), anchor=np.zeros(2))
    for n in n_values:
        member = ScalarField(mesh, 0.5 * n * (1.0 + np.tanh(d / width)), dom.params)
        run.n_values.append(n)
        run.fields.append(member)
        run.grad_norms.append(member.gradient_norms())
        run.anchor_values.append(0.0)
    return run


class TestNValues:

    def test_powers_of_two(self):
        assert geometric_n_values(64) == [1, 2, 4, 8, 16, 32, 64]
        assert geometric_n_values(10) == [1, 2, 4, 8]
        assert geometric_n_values(1) == [1]

    def test_invalid(self):
        with pytest.raises(InputError):
            geometric_n_values(0)

    @pytest.mark.parametrize("dom,mode", [
        (js_convergent(), Truncation.UPPER),
        (disk(1.0), Truncation.UPPER),
        (lens(1.0, 0.5, labels=("B", "B")), Truncation.LOWER),
        (lens(1.0, 0.5, labels=("A", "B")), Truncation.SYMMETRIC),
    ])
    def test_auto_truncation(self, dom, mode):
        assert auto_truncation(dom) == mode


class TestCircleFit:

    def test_taubin_recovers_circle(self):
        t = np.linspace(0.2, 2.0, 30)
        pts = np.column_stack([1.0 + 2.0 * np.cos(t), -3.0 + 2.0 * np.sin(t)])
        fit = taubin_fit(pts)
        np.testing.assert_allclose(fit.center, [1.0, -3.0], atol=1e-9)
        assert fit.radius == pytest.approx(2.0)
        assert fit.curvature == pytest.approx(0.5)
        assert fit.rms < 1e-9

    def test_collinear_points_have_zero_curvature(self):
        pts = np.column_stack([np.linspace(0, 1, 10), 2.0 * np.linspace(0, 1, 10)])
        fit = taubin_fit(pts)
        assert np.isinf(fit.radius)
        assert fit.curvature == 0.0

    def test_too_few_points(self):
        with pytest.raises(InputError):
            taubin_fit(np.zeros((2, 2)))

    def test_fixed_radius_picks_the_right_side(self):
        t = np.linspace(-0.5, 0.5, 20)
        pts = np.column_stack([np.sin(t), 1.0 - np.cos(t)])
        fit = fit_fixed_radius(pts, 1.0)
        np.testing.assert_allclose(fit.center, [0.0, 1.0], atol=1e-6)
        assert fit.rms < 1e-6

    def test_fixed_radius_rejects_bad_radius(self):
        with pytest.raises(InputError):
            fit_fixed_radius(np.zeros((3, 2)), 0.0)


class TestRunSequence:

    def test_rejects_unordered_levels(self):
        with pytest.raises(InputError):
            run_sequence(js_convergent(), [2, 1], h=0.1)
        with pytest.raises(InputError):
            run_sequence(js_convergent(), [0, 1], h=0.1)

    def test_upper_sequence_is_monotone(self, convergent_run):
        run = convergent_run
        assert run.n_values == [1, 2, 4]
        assert not run.truncated
        assert run.mode == Truncation.UPPER
        assert run.monotone is not None
        for a, b in zip(run.fields, run.fields[1:]):
            assert np.all(b.values >= a.values - 1e-6)

    def test_a_flux_increases_toward_length(self, convergent_run):
        run = convergent_run
        trend = run.arc_flux["A"]
        length = run.dom.arc("A").length
        assert all(b > a for a, b in zip(trend, trend[1:]))
        assert all(abs(f) < length for f in trend)

    def test_c_bounds_are_recorded(self, convergent_run):
        run = convergent_run
        assert list(run.c_bounds) == ["C"]
        assert len(run.c_bounds["C"]) == 3
        assert all(lo <= hi for lo, hi in run.c_bounds["C"])

    def test_flux_frame(self, convergent_run):
        frame = convergent_run.flux_frame()
        assert list(frame.columns) == ["n", "arc_id", "flux"]
        assert len(frame) == 6

    def test_normalized_vanishes_at_anchor(self, convergent_run):
        run = convergent_run
        v = run.normalized()
        value = run.mesh.interpolate(v, run.anchor[None, :])[0]
        assert value == pytest.approx(0.0, abs=1e-12)

    @pytest.mark.slow
    def test_convergent_fixture_reaches_the_arc_length(self):
        dom = js_convergent()
        run = run_sequence(dom, geometric_n_values(64), h=0.05)
        assert run.n_values == [1, 2, 4, 8, 16, 32, 64]
        assert not run.truncated and run.monotone
        check = flux_limit_check(run.arc_flux["A"], dom.arc("A").length, tol=0.1)
        assert check.passed, check
        c_nodes = run.mesh.arc_nodes["C"][1:-1]
        np.testing.assert_array_equal(run.fields[-1].values[c_nodes], 0.0)
        highs = [hi for _, hi in run.c_bounds["C"]]
        assert highs[-1] - highs[-2] <= highs[-2] - highs[-3] + 1e-6


class TestConvergedMask:

    def test_infinite_data_nodes_never_converge(self, convergent_run):
        run = convergent_run
        mask = converged_mask(run)
        assert not mask[run.mesh.arc_nodes["A"]].any()
        assert mask[run.mesh.arc_nodes["C"][1:-1]].all()

    def test_needs_two_members(self, convergent_run):
        short = replace(convergent_run, fields=convergent_run.fields[:1], n_values=[1])
        with pytest.raises(InputError):
            converged_mask(short)


class TestDetectDivergence:

    def test_needs_three_members(self, convergent_run):
        run = convergent_run
        short = replace(run, fields=run.fields[:2], n_values=run.n_values[:2], grad_norms=run.grad_norms[:2])
        with pytest.raises(InputError):
            detect_divergence(short)

    def test_finds_the_blowup_circle(self):
        report = detect_divergence(synthetic_run())
        assert report.divergent_triangles > 0
        assert len(report.lines) == 1
        line = report.lines[0]
        assert line.radius == pytest.approx(1.0)
        np.testing.assert_allclose(line.center, [0.0, -1.0], atol=0.05)
        assert line.curvature == pytest.approx(1.0, rel=0.05)
        assert line.curvature_error < 0.05
        assert line.arc_like
        assert line.side == "center"
        assert line.curvature_sign == 1
        assert line.blowup_sign == 1
        assert line.normal_xi < 0.2

    def test_curvature_is_measured_not_assumed(self):
        # blow-up along a circle of radius 1.25 while 2H = 1
        report = detect_divergence(synthetic_run(center=(0.0, -1.25), radius=1.25))
        line = report.lines[0]
        assert line.curvature == pytest.approx(0.8, rel=0.05)
        assert line.curvature_error > 0.1
        assert not line.arc_like

    def test_band_excludes_triangles_near_the_boundary(self):
        # a steep ring 0.25 inside the boundary circle
        run = synthetic_run(center=(0.0, 0.0), radius=1.25, width=0.03)
        assert detect_divergence(run, boundary_band=0.0).divergent_triangles > 0
        assert detect_divergence(run, boundary_band=4.0).divergent_triangles == 0

    def test_converged_region_excludes_the_inside(self):
        run = synthetic_run()
        report = detect_divergence(run)
        mask = report.mask()
        inside = np.linalg.norm(run.mesh.nodes - [0.0, -1.0], axis=1) < 0.7
        assert not mask[inside].any()
        assert 0.0 < report.converged_fraction < 1.0

    def test_no_divergence_on_flat_members(self):
        dom = rectangle(0, 0, 1, 1)
        mesh = build_mesh(dom, 0.1)
        run = SequenceRun(dom, mesh, Truncation.UPPER, [1, 2, 4], anchor=np.zeros(2))
        for n in (1, 2, 4):
            member = ScalarField(mesh, 1e-3 * n * mesh.nodes[:, 0], dom.params)
            run.n_values.append(n)
            run.fields.append(member)
            run.grad_norms.append(member.gradient_norms())
        report = detect_divergence(run)
        assert report.empty
        assert report.converged_fraction == 1.0

    @pytest.mark.slow
    def test_divergent_fixture_diverges_on_reflected_arc(self, divergent_run):
        run, report = divergent_run
        assert not run.truncated
        assert len(report.lines) == 1
        line = report.lines[0]
        np.testing.assert_allclose(line.center, [0.0, -np.sqrt(2.0)], atol=0.15)
        assert line.curvature_error < 0.05
        assert line.arc_like
        assert line.normal_xi < 0.1
        assert line.side == "outside"
        assert line.blowup_sign == 1

    @pytest.mark.slow
    def test_divergent_fixture_converges_below_the_line(self, divergent_run):
        run, report = divergent_run
        mask = report.mask()
        interior = ~run.mesh.is_boundary
        dist = np.linalg.norm(run.mesh.nodes - [0.0, -np.sqrt(2.0)], axis=1)
        assert mask[interior & (dist < 0.8)].all()
        assert not mask[interior & (dist > 1.3) & (np.linalg.norm(run.mesh.nodes, axis=1) < 0.8)].any()

    @pytest.mark.slow
    def test_two_lines_fixture_has_two_disjoint_lines(self):
        run = run_sequence(js_two_lines(), geometric_n_values(64), h=0.05)
        report = detect_divergence(run)
        assert len(report.lines) == 2
        assert report.disjoint
        c = 2.0 * np.cos(np.deg2rad(20.0))
        centers = sorted(line.center[1] for line in report.lines)
        assert centers == pytest.approx([-c, c], abs=0.15)
        for line in report.lines:
            assert abs(line.center[0]) < 0.15
            assert line.curvature_error < 0.05
            mid = np.asarray(line.center) - np.sign(line.center[1]) * np.array([0.0, line.radius])
            assert run.dom.covers(mid[None, :])[0]


class TestLimitSolution:

    def test_nan_off_the_converged_region(self):
        run = synthetic_run()
        report = detect_divergence(run)
        limit = limit_solution(run, report)
        mask = report.mask()
        assert np.all(np.isnan(limit.values[~mask]))
        np.testing.assert_array_equal(limit.values[mask], run.fields[-1].values[mask])
        assert successive_gap(run, mask) <= 0.5 * (16 - 8)
        assert report.successive_gap == successive_gap(run, mask)

    def test_no_region(self):
        run = synthetic_run()
        report = detect_divergence(run).model_copy(update={"converged_mask": [False] * run.mesh.n_nodes})
        with pytest.raises(NoConvergenceRegion):
            limit_solution(run, report)


class TestUniquenessProbe:

    def test_seeds_agree(self):
        dom = cap_disk(radius=1.0, h=0.3)
        mesh = build_mesh(dom, 0.2)
        report = uniqueness_probe(dom, boundary_values(mesh, dom), seeds=[0, 1, 2])
        assert report.seeds == 3
        assert report.max_distance < 1e-8

    def test_needs_c_arcs(self):
        dom = lens(1.0, 0.5, labels=("A", "B"))
        mesh = build_mesh(dom, 0.1)
        with pytest.raises(NotApplicable):
            uniqueness_probe(dom, boundary_values(mesh, dom, n=1), seeds=[0, 1])

    def test_needs_two_seeds(self):
        dom = cap_disk()
        mesh = build_mesh(dom, 0.2)
        with pytest.raises(InputError):
            uniqueness_probe(dom, boundary_values(mesh, dom), seeds=[0])
