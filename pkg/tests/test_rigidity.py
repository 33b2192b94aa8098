import math

import numpy as np
import pytest

from hypcurv.curvature import fundamental_forms, ricci_coordinate, shape_spectrum
from hypcurv.errors import HypothesisContradiction, ParameterError, PreconditionError
from hypcurv.gridfn import GridFunction
from hypcurv.heightfield import SampledGridField, make_catalog_surface
from hypcurv.rigidity import (Verdict, classify_global, commutation_residual,
                              constancy_scan, flat_direction_check,
                              min_ricci_eigenvalue, rigidity_report, verdict_report)

SQ2 = math.sqrt(2.0)


def cone(s=1.0, n=3):
    return make_catalog_surface("equidistant_cone", {"slope": s}, n)


def horosphere(c=1.0, n=3):
    return make_catalog_surface("horosphere", {"c": c}, n)


def cap(n=3):
    return make_catalog_surface(
        "geodesic_sphere_cap", {"center_height": 2.0, "euclidean_radius": 1.0}, n)


class TestFlatDirection:
    def test_cone_single_null_direction(self):
        frag = flat_direction_check(cone().jet([1.0, 0.0, 0.0]), 3)
        assert frag.null_space_dim == 1
        assert frag.principal_alignment <= 1e-8
        assert frag.kappa0 == pytest.approx(1.0 / SQ2, abs=1e-10)
        # smaller root of kappa H - kappa^2 - (n-1) = 0 with H = 5/sqrt(2)
        expected = (5.0 / SQ2 - math.sqrt(12.5 - 8.0)) / 2.0
        assert frag.kappa0_expected == pytest.approx(expected, rel=1e-12)
        assert frag.kappa0 == pytest.approx(frag.kappa0_expected, abs=1e-8)

    def test_horosphere_full_null_space(self):
        frag = flat_direction_check(horosphere().jet([0.0, 0.0, 0.0]), 3)
        assert frag.null_space_dim == 3
        # H = 3: roots (3 +/- 1)/2 = {2, 1}; observed kappa matches the smaller root
        assert frag.kappa0_expected == pytest.approx(1.0, abs=1e-12)
        assert np.allclose(frag.null_kappas, 1.0, atol=1e-10)

    def test_cap_empty_fragment(self):
        frag = flat_direction_check(cap().jet([0.0, 0.0, 0.0]), 3)
        assert frag.null_space_dim == 0
        assert math.isnan(frag.kappa0)

    def test_dimension_precondition(self):
        with pytest.raises(ParameterError):
            flat_direction_check(horosphere(1.0, 2).jet([0.0, 0.0]), 2)

    def test_negative_ricci_precondition(self):
        plane = make_catalog_surface("tilted_plane", {"slope": 1.0}, 3)
        with pytest.raises(PreconditionError):
            flat_direction_check(plane.jet([1.0, 0.0, 0.0]), 3)

    def test_null_kappa_matches_root_at_samples(self):
        rng = np.random.default_rng(15)
        field = cone(2.0)
        for x in field.sample_points(30, rng, r_min=0.4, r_max=1.8):
            frag = flat_direction_check(field.jet(x), 3)
            assert frag.null_space_dim == 1
            assert frag.kappa0 == pytest.approx(frag.kappa0_expected, abs=1e-8)
            assert frag.kappa0 > 0


class TestCommutation:
    def test_horosphere_zero(self):
        jet = horosphere().jet([0.1, 0.2, 0.3])
        forms = fundamental_forms(jet)
        spec = shape_spectrum(jet, forms)
        ric = ricci_coordinate(jet, forms)
        assert commutation_residual(ric, forms.metric, spec.shape) == 0.0

    def test_plane_umbilic(self):
        plane = make_catalog_surface("tilted_plane", {"slope": 1.0}, 3)
        jet = plane.jet([1.0, 0.3, -0.2])
        forms = fundamental_forms(jet)
        spec = shape_spectrum(jet, forms)
        ric = ricci_coordinate(jet, forms)
        assert commutation_residual(ric, forms.metric, spec.shape) <= 1e-12

    def test_perturbed_cap_sampled_grid(self):
        # 200 interpolated jets from a perturbed cap: the commutator stays at noise
        field = cap()
        lo = field.domain.lo * 0.999
        spacing = float((field.domain.hi[0] - lo[0]) / 32)
        axes = [lo[d] + spacing * np.arange(33) for d in range(3)]
        mesh = np.meshgrid(*axes, indexing="ij")
        base = field.value_array(np.stack(mesh, axis=-1))
        bump = 0.01 * np.sin(3 * mesh[0]) * np.cos(2 * mesh[1]) * np.sin(mesh[2] + 0.4)
        grid = GridFunction((33, 33, 33), spacing, lo, base + bump)
        sampled = SampledGridField(grid, order=4)
        rng = np.random.default_rng(16)
        pts = sampled.sample_points(200, rng, margin=4 * spacing)
        worst = 0.0
        for x in pts:
            jet = sampled.jet(x)
            forms = fundamental_forms(jet)
            spec = shape_spectrum(jet, forms)
            ric = ricci_coordinate(jet, forms)
            worst = max(worst, commutation_residual(ric, forms.metric, spec.shape))
        assert worst <= 1e-9


class TestConstancyScan:
    @pytest.mark.parametrize("s", [0.5, 1.0, 2.0, 5.0])
    def test_cone_constant_split(self, s):
        field = cone(s)
        rng = np.random.default_rng(17)
        pts = field.sample_points(100, rng, r_min=0.5, r_max=2.0)
        scan = constancy_scan(field, pts, 3)
        assert scan.split_ok and not scan.umbilic
        assert scan.kappa0_var <= 1e-20
        assert scan.kappa_t_var <= 1e-20
        assert scan.max_product_defect <= 1e-10
        assert scan.kappa0_mean == pytest.approx(1.0 / math.sqrt(1 + s * s), rel=1e-12)
        assert scan.kappa_t_mean == pytest.approx(math.sqrt(1 + s * s), rel=1e-12)

    def test_horosphere_degenerate_cluster(self):
        field = horosphere()
        rng = np.random.default_rng(18)
        scan = constancy_scan(field, field.sample_points(50, rng), 3)
        assert scan.umbilic
        assert scan.umbilic_value == pytest.approx(1.0, abs=1e-12)

    def test_cap_umbilic_but_not_one(self):
        field = cap()
        rng = np.random.default_rng(19)
        scan = constancy_scan(field, field.sample_points(20, rng), 3)
        assert scan.umbilic
        assert scan.umbilic_value > 1.5


class TestGlobalVerdict:
    def _cone_scan(self, s=1.0):
        field = cone(s)
        rng = np.random.default_rng(20)
        return constancy_scan(field, field.sample_points(60, rng, r_min=0.5, r_max=2.0), 3)

    def test_equidistant_tube(self):
        assert classify_global(self._cone_scan(), 2, 3) is Verdict.EQUIDISTANT_TUBE

    def test_horosphere(self):
        field = horosphere()
        rng = np.random.default_rng(21)
        scan = constancy_scan(field, field.sample_points(30, rng), 3)
        assert classify_global(scan, 1, 3) is Verdict.HOROSPHERE

    def test_single_end(self):
        assert classify_global(self._cone_scan(), 1, 3) is Verdict.SINGLE_END_CANDIDATE

    def test_inconclusive_for_compact_cap(self):
        field = cap()
        rng = np.random.default_rng(22)
        scan = constancy_scan(field, field.sample_points(30, rng), 3)
        assert classify_global(scan, 0, 3) is Verdict.INCONCLUSIVE

    def test_contradiction(self):
        with pytest.raises(HypothesisContradiction):
            classify_global(self._cone_scan(), 3, 3, nonneg_ricci=True)
        # without the nonneg assertion, three ends is merely inconclusive
        assert classify_global(self._cone_scan(), 3, 3) is Verdict.INCONCLUSIVE

    def test_verdict_deterministic(self):
        a = classify_global(self._cone_scan(), 2, 3)
        b = classify_global(self._cone_scan(), 2, 3)
        assert a is b

    def test_verdict_json(self):
        rep = verdict_report(self._cone_scan(), 2, 3)
        assert rep["verdict"] == "EquidistantTube"
        assert rep["boundary_points"] == 2
        assert rep["kappa0"] == pytest.approx(1.0 / SQ2, rel=1e-10)
        assert rep["kappa_transverse"] == pytest.approx(SQ2, rel=1e-10)

    def test_rigidity_report_pipeline(self):
        field = cone()
        rng = np.random.default_rng(23)
        pts = field.sample_points(40, rng, r_min=0.5, r_max=2.0)
        rep = rigidity_report(field, pts, 2, 3)
        assert rep.verdict is Verdict.EQUIDISTANT_TUBE
        assert rep.null_space_dim == 1
        assert rep.kappa0 == pytest.approx(rep.kappa0_expected, abs=1e-8)
        assert max(rep.kappa_variance) <= 1e-20


def test_min_ricci_eigenvalue():
    assert min_ricci_eigenvalue(cone().jet([1.0, 0.0, 0.0]), 3) == pytest.approx(
        0.0, abs=1e-12)
    plane = make_catalog_surface("tilted_plane", {"slope": 1.0}, 3)
    assert min_ricci_eigenvalue(plane.jet([1.0, 0.0, 0.0]), 3) == pytest.approx(
        -1.0, abs=1e-12)
