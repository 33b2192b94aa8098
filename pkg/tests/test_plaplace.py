import math

import numpy as np
import pytest

from hypcurv.errors import DataError, ParameterError, PreconditionError
from hypcurv.gridfn import GridFunction
from hypcurv.heightfield import make_catalog_surface, sample_height_grid
from hypcurv.plaplace import (SolverConfig, annulus_grid, comparison_check,
                              p_dirichlet_energy, solve_laplace_linear,
                              solve_p_harmonic, tighten_boundary, viscosity_probe)


def unit_grid(nodes=9):
    h = 1.0 / (nodes - 1)
    axes = [h * np.arange(nodes)] * 3
    mesh = np.meshgrid(*axes, indexing="ij")
    return mesh, h


def grid_from(values, h):
    return GridFunction(values.shape, h, np.zeros(values.ndim), values)


def box_heights(fn, lo, hi, spacing):
    dims = tuple(int(round((b - a) / spacing)) + 1 for a, b in zip(lo, hi))
    axes = [a + spacing * np.arange(d) for a, d in zip(lo, dims)]
    mesh = np.meshgrid(*axes, indexing="ij")
    return GridFunction(dims, spacing, np.asarray(lo, float), fn(mesh))


class TestConfig:
    def test_p_below_two_rejected(self):
        with pytest.raises(ParameterError):
            SolverConfig(p=1.5)

    def test_epsilon_positive(self):
        with pytest.raises(ParameterError):
            SolverConfig(p=3.0, epsilon=0.0)


class TestEnergy:
    def test_constant_zero(self):
        mesh, h = unit_grid()
        gf = grid_from(np.full(mesh[0].shape, 3.7), h)
        assert p_dirichlet_energy(gf, 3.0, 0.0) == 0.0

    def test_unit_slope_gives_volume(self):
        mesh, h = unit_grid()
        gf = grid_from(mesh[0].copy(), h)
        assert p_dirichlet_energy(gf, 3.0, 0.0) == pytest.approx(1.0, rel=1e-12)

    def test_annulus_matches_analytic_integral(self):
        # oracle: integral of |x|^-3 over 0.5 <= |x| <= 2 is 4 pi log 4
        gf = annulus_grid(lambda m: 0.5 * np.log(m[0] ** 2 + m[1] ** 2 + m[2] ** 2),
                          0.5, 2.0, 1.0 / 32)
        energy = p_dirichlet_energy(gf, 3.0, 0.0)
        exact = 4.0 * math.pi * math.log(4.0)
        assert abs(energy - exact) / exact <= 0.02

    def test_neg_inf_unmasked_rejected(self):
        mesh, h = unit_grid(5)
        vals = np.zeros(mesh[0].shape)
        gf = grid_from(vals, h)
        gf.values[2, 2, 2] = -np.inf  # bypass construction check, hit validate()
        with pytest.raises(DataError):
            p_dirichlet_energy(gf, 3.0, 0.0)


class TestSolver:
    def test_constant_boundary(self):
        mesh, h = unit_grid()
        vals = np.full(mesh[0].shape, 2.0)
        vals[1:-1, 1:-1, 1:-1] = 0.0
        res = solve_p_harmonic(grid_from(vals, h), SolverConfig(p=3.0))
        assert res.converged
        assert np.max(np.abs(res.grid.values - 2.0)) <= 1e-10

    def test_affine_boundary(self):
        mesh, h = unit_grid()
        aff = 0.4 * mesh[0] - 0.3 * mesh[1] + 0.2 * mesh[2] + 1.0
        cfg_kwargs = dict(tolerance=1e-16, max_iterations=100000, stall_iterations=10)
        for p in (2.0, 3.0, 4.0):
            vals = aff.copy()
            vals[1:-1, 1:-1, 1:-1] = 0.0
            res = solve_p_harmonic(grid_from(vals, h), SolverConfig(p=p, **cfg_kwargs))
            assert np.max(np.abs(res.grid.values - aff)) <= 1e-6

    def test_energy_trace_monotone(self):
        mesh, h = unit_grid()
        vals = np.sin(4 * mesh[0]) + mesh[1] ** 2
        vals[1:-1, 1:-1, 1:-1] = 0.0
        res = solve_p_harmonic(grid_from(vals, h), SolverConfig(p=3.0))
        assert np.all(np.diff(res.energy_trace) <= 0.0)

    def test_fundamental_solution_convergence(self):
        # log|x| is the exact continuum solution; discrete error drops at order ~2
        errs = []
        for spacing in (1.0 / 16, 1.0 / 32):
            exact = box_heights(
                lambda m: 0.5 * np.log(m[0] ** 2 + m[1] ** 2 + m[2] ** 2),
                (0.5, -0.5, -0.5), (1.5, 0.5, 0.5), spacing)
            start = exact.copy()
            start.values[start.interior_mask()] = float(
                np.mean(start.values[start.boundary_mask]))
            res = solve_p_harmonic(start, SolverConfig(p=3.0))
            errs.append(float(np.max(np.abs(res.grid.values - exact.values))))
        assert errs[1] <= 1e-3
        assert errs[0] / errs[1] >= 2.0

    def test_two_initializations_agree(self):
        mesh, h = unit_grid()
        bnd = np.sin(3 * mesh[0]) + mesh[1] ** 2 - 0.5 * mesh[2]
        rng = np.random.default_rng(24)
        cfg = SolverConfig(p=3.0, tolerance=1e-16, max_iterations=100000,
                           stall_iterations=10)
        sols = []
        for _ in range(2):
            vals = bnd.copy()
            vals[1:-1, 1:-1, 1:-1] = rng.normal(size=(7, 7, 7))
            sols.append(solve_p_harmonic(grid_from(vals, h), cfg).grid.values)
        assert np.max(np.abs(sols[0] - sols[1])) <= 1e-6

    def test_p2_matches_direct_solve(self):
        mesh, h = unit_grid()
        bnd = 0.02 * (np.sin(3 * mesh[0]) + mesh[1] ** 2 - 0.5 * mesh[2])
        vals = bnd.copy()
        vals[1:-1, 1:-1, 1:-1] = 0.0
        gf = grid_from(vals, h)
        direct = solve_laplace_linear(gf)
        res = solve_p_harmonic(gf, SolverConfig(p=2.0, tolerance=1e-16,
                                                max_iterations=100000,
                                                stall_iterations=10))
        assert np.max(np.abs(direct.values - res.grid.values)) <= 1e-8

    def test_non_convergence_flagged(self):
        mesh, h = unit_grid()
        vals = np.sin(4 * mesh[0]) + mesh[1] ** 2
        vals[1:-1, 1:-1, 1:-1] = 0.0
        res = solve_p_harmonic(grid_from(vals, h),
                               SolverConfig(p=3.0, max_iterations=3))
        assert not res.converged
        assert res.iterations == 3


class TestComparison:
    def test_equal_functions(self):
        mesh, h = unit_grid(5)
        gf = grid_from(mesh[0] + mesh[1], h)
        rep = comparison_check(gf, gf.copy())
        assert rep.ok and rep.min_difference == 0.0

    def test_n_harmonic_height_dominated(self):
        # u = log|x| on a box avoiding the origin is itself n-harmonic, so the
        # solved v with the same boundary matches u up to discretization
        u = box_heights(lambda m: 0.5 * np.log(m[0] ** 2 + m[1] ** 2 + m[2] ** 2),
                        (0.5, -0.5, -0.5), (1.5, 0.5, 0.5), 1.0 / 16)
        start = u.copy()
        start.values[start.interior_mask()] = float(
            np.mean(start.values[start.boundary_mask]))
        v = solve_p_harmonic(start, SolverConfig(p=3.0)).grid
        rep = comparison_check(u, v, tol=1e-3)
        assert rep.ok
        assert rep.min_difference >= -1e-3

    def test_superharmonic_height_violates(self):
        # log x1 is strictly 3-superharmonic (density -2/x1^2 < 0): v drops below u
        u = box_heights(lambda m: np.log(m[0]), (1.0, -0.5, -0.5), (2.0, 0.5, 0.5),
                        1.0 / 16)
        start = u.copy()
        start.values[start.interior_mask()] = float(
            np.mean(start.values[start.boundary_mask]))
        v = solve_p_harmonic(start, SolverConfig(p=3.0)).grid
        rep = comparison_check(u, v, tol=1e-8)
        assert not rep.ok
        assert rep.min_difference < -1e-2

    def test_boundary_domination_precondition(self):
        mesh, h = unit_grid(5)
        u = grid_from(mesh[0].copy(), h)
        v = grid_from(mesh[0] - 1.0, h)
        with pytest.raises(PreconditionError):
            comparison_check(u, v)

    def test_grid_mismatch(self):
        mesh, h = unit_grid(5)
        u = grid_from(mesh[0].copy(), h)
        mesh2, h2 = unit_grid(9)
        v = grid_from(mesh2[0].copy(), h2)
        with pytest.raises(PreconditionError):
            comparison_check(u, v)


class TestViscosityProbe:
    def test_horosphere_true(self):
        field = make_catalog_surface("horosphere", {"c": 1.0}, 3)
        cfg = SolverConfig(p=3.0)
        res = viscosity_probe(field, [-0.5] * 3, [0.5] * 3, cfg, spacing=1.0 / 8)
        assert res.subharmonic
        assert res.min_margin == pytest.approx(0.0, abs=1e-12)

    def test_cone_true_near_equality(self):
        field = make_catalog_surface("equidistant_cone", {"slope": 1.0}, 3)
        cfg = SolverConfig(p=3.0)
        res = viscosity_probe(field, (0.5, -0.5, -0.5), (1.5, 0.5, 0.5), cfg,
                              spacing=1.0 / 16)
        assert res.subharmonic
        assert abs(res.min_margin) <= res.tolerance / 10  # near equality

    def test_tilted_plane_false(self):
        field = make_catalog_surface("tilted_plane", {"slope": 1.0}, 3)
        cfg = SolverConfig(p=3.0)
        res = viscosity_probe(field, (1.0, -0.5, -0.5), (2.0, 0.5, 0.5), cfg,
                              spacing=1.0 / 32)
        assert not res.subharmonic

    def test_cone_excision_reported(self):
        field = make_catalog_surface("equidistant_cone", {"slope": 1.0}, 3)
        cfg = SolverConfig(p=3.0)
        res = viscosity_probe(field, [-0.5] * 3, [0.5] * 3, cfg, spacing=1.0 / 16)
        assert res.excised_nodes >= 1
        assert res.subharmonic

    def test_probe_consistency_on_nonneg_ricci_catalog(self):
        # every catalog field with Ricci >= 0 on the window probes subharmonic
        cfg = SolverConfig(p=3.0)
        cap = make_catalog_surface(
            "geodesic_sphere_cap", {"center_height": 2.0, "euclidean_radius": 1.0}, 3)
        lo, hi = cap.domain.lo * 0.9, cap.domain.hi * 0.9
        cases = [
            (make_catalog_surface("horosphere", {"c": 2.0}, 3),
             [-0.5] * 3, [0.5] * 3, 1.0 / 8),
            (make_catalog_surface("equidistant_cone", {"slope": 2.0}, 3),
             (0.5, -0.5, -0.5), (1.5, 0.5, 0.5), 1.0 / 16),
            (cap, lo, hi, float(hi[0] - lo[0]) / 16),
        ]
        for field, box_lo, box_hi, spacing in cases:
            res = viscosity_probe(field, box_lo, box_hi, cfg, spacing=spacing)
            assert res.subharmonic, field.kind


class TestTightenBoundary:
    def test_excised_ring_becomes_boundary(self):
        field = make_catalog_surface("equidistant_cone", {"slope": 1.0}, 3)
        grid = sample_height_grid(field, [-0.5] * 3, [0.5] * 3, 1.0 / 8)
        tightened = tighten_boundary(grid)
        center = tuple(d // 2 for d in grid.dims)
        assert np.isneginf(grid.values[center])
        # all face neighbors of the excised node are fixed
        for axis in range(3):
            for delta in (-1, 1):
                idx = list(center)
                idx[axis] += delta
                assert tightened.boundary_mask[tuple(idx)]
