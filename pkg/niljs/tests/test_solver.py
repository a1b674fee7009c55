"""
Tests for the Dirichlet solver, boundary data truncation and the comparison checks.
"""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from niljs.errors import ConditionsError, InputError, NonConvergence
from niljs.fem.mesh import build_mesh, refine
from niljs.fem.operator import weak_residual
from niljs.fem.solver import (BoundaryData, CheckMode, ScalarField, SolveOptions, Truncation, _damped_step,
                              boundary_values, cap_profile, harmonic_lift, monotonicity_pairing,
                              residual_div, scherk, solve_dirichlet, verify_comparison)
from niljs.geometry.ambient import AmbientParams
from niljs.geometry.registry import BoundaryRegistry
from niljs.geometry.shapes import cap_disk, disk, js_convergent, scherk_square
from niljs.sequence.jenkins_serrin import SEQUENCE_OPTIONS


@pytest.fixture(scope="module")
def cap():
    dom = cap_disk(radius=1.0, h=0.3)
    mesh = build_mesh(dom, 0.1)
    return dom, mesh


def cap_error(dom, mesh, h):
    u = solve_dirichlet(dom, boundary_values(mesh, dom))
    exact = cap_profile(np.linalg.norm(mesh.nodes, axis=1), h, 1.0)
    return float(np.max(np.abs(u.values - exact)))


class TestSolveOptions:

    def test_defaults(self):
        opts = SolveOptions()
        assert opts.check_conditions == CheckMode.STRICT
        assert opts.continuation_steps == 1

    def test_string_modes_are_coerced(self):
        assert SolveOptions(check_conditions="warn").check_conditions == CheckMode.WARN

    @pytest.mark.parametrize("kwargs", [{"damping": 1.0}, {"damping": 0.0}, {"max_newton_iters": 0},
                                        {"newton_tol": 0.0}, {"continuation_steps": 0}])
    def test_invalid(self, kwargs):
        with pytest.raises(InputError):
            SolveOptions(**kwargs)

    def test_overrides_ignore_none(self):
        opts = SolveOptions().with_overrides(newton_tol=None, max_newton_iters=7)
        assert opts.newton_tol == 1e-10 and opts.max_newton_iters == 7


class TestBoundaryValues:

    def test_c_data(self, cap):
        dom, mesh = cap
        data = boundary_values(mesh, dom)
        assert np.all(data.boundary_values == 0.0)
        assert data.clipped == 0

    def test_upper_truncation(self):
        dom = js_convergent()
        mesh = build_mesh(dom, 0.1)
        data = boundary_values(mesh, dom, n=3, mode=Truncation.UPPER)
        a_nodes = mesh.arc_nodes["A"]
        np.testing.assert_allclose(data.values[a_nodes[1:-1]], 3.0)
        # corners average their two arcs
        np.testing.assert_allclose(data.values[[a_nodes[0], a_nodes[-1]]], 1.5)
        np.testing.assert_allclose(data.values[mesh.arc_nodes["C"][1:-1]], 0.0)

    def test_infinite_data_needs_level(self):
        dom = js_convergent()
        with pytest.raises(InputError):
            boundary_values(build_mesh(dom, 0.1), dom)

    def test_lower_truncation_rejects_a_arcs(self):
        dom = js_convergent()
        with pytest.raises(InputError):
            boundary_values(build_mesh(dom, 0.1), dom, n=2, mode=Truncation.LOWER)

    def test_c_data_is_capped_at_level(self):
        dom = disk(1.0, data=BoundaryRegistry.create("linear", {"a": 10.0}))
        mesh = build_mesh(dom, 0.2)
        sym = boundary_values(mesh, dom, n=2.0, mode=Truncation.SYMMETRIC)
        assert sym.boundary_values.max() == pytest.approx(2.0)
        assert sym.boundary_values.min() == pytest.approx(-2.0)

    def test_poles_are_clipped(self):
        fn = BoundaryRegistry.create("log-barrier", {"poles": [[1.0, 0.0]]})
        dom = disk(1.0, data=fn)
        data = boundary_values(build_mesh(dom, 0.2), dom, data_cap=50.0)
        assert data.clipped >= 1
        assert data.values.max() == 50.0

    def test_from_function_and_shift(self, cap):
        _, mesh = cap
        data = BoundaryData.from_function(mesh, lambda x, y: x + y)
        shifted = data.shifted(2.0)
        np.testing.assert_allclose(shifted.boundary_values - data.boundary_values, 2.0)


class TestSolveDirichlet:

    def test_cap_is_reproduced(self, cap):
        dom, mesh = cap
        assert cap_error(dom, mesh, 0.3) < 1e-2

    def test_report(self, cap):
        dom, mesh = cap
        u = solve_dirichlet(dom, boundary_values(mesh, dom))
        rep = u.report
        assert rep.converged
        assert rep.final_residual <= 1e-10
        assert rep.max_flux_norm < 1.0
        assert not rep.flagged_blowup
        assert rep.conditions is not None and rep.conditions.passed

    def test_residual_div_is_below_tolerance(self, cap):
        dom, mesh = cap
        u = solve_dirichlet(dom, boundary_values(mesh, dom))
        res = residual_div(u)
        assert np.max(np.abs(res.values)) <= 1e-10
        assert np.all(res.values[mesh.is_boundary] == 0.0)

    def test_zero_field_has_zero_residual(self):
        dom = disk(1.0)
        mesh = build_mesh(dom, 0.2)
        res = residual_div(ScalarField(mesh, np.zeros(mesh.n_nodes), dom.params))
        assert np.max(np.abs(res.values)) < 1e-15

    def test_translation_invariance(self, cap):
        dom, mesh = cap
        base = boundary_values(mesh, dom)
        u = solve_dirichlet(dom, base)
        v = solve_dirichlet(dom, base.shifted(5.0))
        np.testing.assert_allclose(v.values, u.values + 5.0, atol=1e-8)

    def test_scherk_square(self):
        dom = scherk_square(1.3)
        mesh = build_mesh(dom, 0.1)
        u = solve_dirichlet(dom, boundary_values(mesh, dom))
        exact = scherk(mesh.nodes[:, 0], mesh.nodes[:, 1])
        assert np.max(np.abs(u.values - exact)) < 0.05

    def test_nonzero_tau(self):
        dom = disk(1.0, params=AmbientParams(tau=0.1, h=0.3))
        mesh = build_mesh(dom, 0.15)
        u = solve_dirichlet(dom, boundary_values(mesh, dom))
        assert u.report.converged
        # bowl below the zero boundary values
        assert u.values[mesh.interior].max() < 0.0

    def test_strict_conditions(self):
        dom = cap_disk(radius=1.0, h=0.6)
        mesh = build_mesh(dom, 0.2)
        with pytest.raises(ConditionsError):
            solve_dirichlet(dom, boundary_values(mesh, dom))

    def test_warn_mode_still_solves(self):
        # the cap exists for H <= 1/R although k >= 2H fails
        dom = cap_disk(radius=1.0, h=0.6)
        mesh = build_mesh(dom, 0.1)
        u = solve_dirichlet(dom, boundary_values(mesh, dom), SolveOptions(check_conditions="warn"))
        assert not u.report.conditions.passed
        exact = cap_profile(np.linalg.norm(mesh.nodes, axis=1), 0.6, 1.0)
        assert np.max(np.abs(u.values - exact)) < 3e-2

    def test_off_mode_skips_conditions(self, cap):
        dom, mesh = cap
        u = solve_dirichlet(dom, boundary_values(mesh, dom), SolveOptions(check_conditions="off"))
        assert u.report.conditions is None

    def test_cg_matches_direct(self, cap):
        dom, mesh = cap
        data = boundary_values(mesh, dom)
        direct = solve_dirichlet(dom, data)
        iterative = solve_dirichlet(dom, data, SolveOptions(linear_solver="cg"))
        np.testing.assert_allclose(iterative.values, direct.values, atol=1e-8)

    def test_non_convergence_carries_last_iterate(self, cap):
        dom, mesh = cap
        opts = SolveOptions(max_newton_iters=1, newton_tol=1e-15)
        with pytest.raises(NonConvergence) as exc:
            solve_dirichlet(dom, boundary_values(mesh, dom), opts)
        err = exc.value
        assert err.exit_code == 4
        assert err.last_iterate is not None and err.last_iterate.diverged
        assert len(err.residual_history) >= 1

    def test_failed_continuation_keeps_a_finite_iterate(self):
        dom = js_convergent()
        mesh = build_mesh(dom, 0.1)
        data = boundary_values(mesh, dom, 16, Truncation.UPPER)
        opts = SolveOptions(max_newton_iters=1, newton_tol=1e-14, continuation_steps=4, check_conditions="warn")
        with pytest.raises(NonConvergence) as exc:
            solve_dirichlet(dom, data, opts)
        last = exc.value.last_iterate
        assert np.all(np.isfinite(last.values))
        assert np.all(np.isfinite(exc.value.residual_history))

    def test_line_search_gives_up_on_an_ascent_direction(self, cap):
        dom, mesh = cap
        u = np.zeros(mesh.n_nodes)
        res = weak_residual(mesh, u, dom.params)[mesh.interior]
        # the negated residual turns the Newton direction uphill for the convex energy
        assert _damped_step(mesh, u, dom.params, SolveOptions(), -res, float(np.max(np.abs(res)))) is None

    @pytest.mark.slow
    def test_steep_truncated_data_solve(self):
        dom = js_convergent()
        mesh = build_mesh(dom, 0.05)
        u = solve_dirichlet(dom, boundary_values(mesh, dom, 64, Truncation.UPPER), SEQUENCE_OPTIONS)
        assert u.report.converged
        assert np.all(np.isfinite(u.values))
        assert u.values.max() == pytest.approx(64.0)

    def test_continuation_from_initial_iterate(self, cap):
        dom, mesh = cap
        data = boundary_values(mesh, dom)
        u = solve_dirichlet(dom, data)
        shifted = solve_dirichlet(dom, data.shifted(1.0), SolveOptions(continuation_steps=3), initial=u.values)
        np.testing.assert_allclose(shifted.values, u.values + 1.0, atol=1e-8)

    @pytest.mark.slow
    def test_cap_converges_at_second_order(self):
        dom = cap_disk(radius=1.0, h=0.3)
        coarse = build_mesh(dom, 0.1)
        fine = refine(coarse, dom)
        finer = refine(fine, dom)
        errors = [cap_error(dom, mesh, 0.3) for mesh in (coarse, fine, finer)]
        ratios = [errors[0] / errors[1], errors[1] / errors[2]]
        assert all(3.2 <= r <= 4.8 for r in ratios), ratios


class TestHarmonicLift:

    def test_reproduces_linear_functions(self, cap):
        _, mesh = cap
        linear = 1.0 + 2.0 * mesh.nodes[:, 0] - mesh.nodes[:, 1]
        np.testing.assert_allclose(harmonic_lift(mesh, linear), linear, atol=1e-10)


class TestComparison:

    @given(shift=st.floats(min_value=0.0, max_value=2.0), slope=st.floats(min_value=-1.0, max_value=1.0),
           bump=st.floats(min_value=0.0, max_value=1.0))
    @settings(max_examples=50, deadline=None)
    def test_ordered_data_give_ordered_solutions(self, shift, slope, bump):
        dom = disk(1.0, params=AmbientParams(tau=0.2, h=0.3))
        mesh = build_mesh(dom, 0.2)
        lower = BoundaryData.from_function(mesh, lambda x, y: slope * x)
        upper = BoundaryData.from_function(mesh, lambda x, y: slope * x + shift + bump * (1 + y))
        u = solve_dirichlet(dom, upper)
        v = solve_dirichlet(dom, lower)
        report = verify_comparison(u, v)
        assert report.applicable
        assert report.passed

    def test_crossing_data_not_applicable(self, cap):
        dom, mesh = cap
        u = solve_dirichlet(dom, BoundaryData.from_function(mesh, lambda x, y: x))
        v = solve_dirichlet(dom, BoundaryData.from_function(mesh, lambda x, y: -x))
        report = verify_comparison(u, v)
        assert not report.applicable
        assert report.passed is None

    def test_needs_same_mesh(self, cap):
        dom, mesh = cap
        other = build_mesh(dom, 0.2)
        with pytest.raises(InputError):
            verify_comparison(ScalarField(mesh, np.zeros(mesh.n_nodes)), ScalarField(other, np.zeros(other.n_nodes)))


class TestMonotonicityPairing:

    @given(seed=st.integers(min_value=0, max_value=2 ** 16), tau=st.floats(min_value=-2.0, max_value=2.0))
    @settings(max_examples=10, deadline=None)
    def test_never_negative(self, seed, tau):
        dom = disk(1.0)
        mesh = build_mesh(dom, 0.25)
        rng = np.random.default_rng(seed)
        params = AmbientParams(tau=tau)
        u = ScalarField(mesh, 3.0 * rng.normal(size=mesh.n_nodes), params)
        v = ScalarField(mesh, 3.0 * rng.normal(size=mesh.n_nodes), params)
        assert monotonicity_pairing(u, v).values.min() >= -1e-12

    def test_vanishes_for_equal_gradients(self, cap):
        _, mesh = cap
        u = ScalarField(mesh, mesh.nodes[:, 0] ** 2)
        v = u.with_values(u.values + 4.0)
        np.testing.assert_allclose(monotonicity_pairing(u, v).values, 0.0, atol=1e-15)


class TestCapProfile:

    def test_zero_on_boundary(self):
        assert cap_profile(1.0, 0.3, 1.0) == pytest.approx(0.0)

    def test_out_of_range(self):
        with pytest.raises(InputError):
            cap_profile(0.5, 1.5, 1.0)
