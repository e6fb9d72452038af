import numpy as np
import pytest

from carnot.algebra import ConfigurationError, preset_group
from carnot.blowup import (LevelSetSpec, SurfacePatch, blowup_check,
                           density_curve, frame_components,
                           graph_area_levelset, homogeneous_tangent,
                           levelset_patch, mu_measure, surface_measure_total,
                           tangent_bivector_components)
from carnot.metrics import dinf, koranyi


@pytest.fixture(scope="module")
def g():
    return preset_group("heisenberg1")


def vertical_plane(g):
    return SurfacePatch(
        group=g,
        fn=lambda U, V: np.stack([np.zeros_like(U), U, V], axis=-1),
        domain=((-1.0, 1.0), (-1.0, 1.0)))


def horizontal_plane(g):
    return SurfacePatch(
        group=g,
        fn=lambda U, V: np.stack([U, V, np.zeros_like(U)], axis=-1),
        domain=((-2.0, 2.0), (-2.0, 2.0)))


def paraboloid(g):
    return SurfacePatch(
        group=g,
        fn=lambda U, V: np.stack([(U ** 2 + V ** 2) / 4.0, U, V], axis=-1),
        domain=((-1.0, 1.0), (-1.0, 1.0)))


class TestFrameAndBivector:
    def test_frame_conversion(self, g):
        # at (x, y, t) the coordinate vector (a, b, c) has T-component
        # c + (y/2) a - (x/2) b
        out = frame_components(np.array([1.0, 2.0, 0.0]),
                               np.array([3.0, 4.0, 5.0]))
        np.testing.assert_allclose(out, [3.0, 4.0, 5.0 + 3.0 - 2.0])

    def test_vertical_plane_components(self, g):
        comps = tangent_bivector_components(vertical_plane(g), 0.3, -0.8)
        np.testing.assert_allclose(comps, [0.0, 0.0, 1.0], atol=1e-9)

    def test_horizontal_plane_origin_characteristic(self, g):
        comps = tangent_bivector_components(horizontal_plane(g), 0.0, 0.0)
        np.testing.assert_allclose(comps, [1.0, 0.0, 0.0], atol=1e-9)

    def test_horizontal_plane_off_origin(self, g):
        # at (x, y) = (1, 0): tangents X and Y - T/2, density (1/2)/sqrt(5/4)
        comps = np.asarray(tangent_bivector_components(horizontal_plane(g), 1.0, 0.0))
        density = np.hypot(comps[1], comps[2])
        assert density == pytest.approx(0.5 / np.sqrt(1.25), rel=1e-8)

    def test_degenerate_patch_rejected(self, g):
        with pytest.raises(ConfigurationError, match="dependent"):
            SurfacePatch(group=g,
                         fn=lambda U, V: np.stack([U, U, np.zeros_like(U)], axis=-1),
                         domain=((-1.0, 1.0), (-1.0, 1.0)))

    def test_step3_group_rejected(self):
        e = preset_group("engel")
        with pytest.raises(ConfigurationError, match="heisenberg1"):
            SurfacePatch(group=e,
                         fn=lambda U, V: np.stack([U, V, U, V], axis=-1),
                         domain=((-1.0, 1.0), (-1.0, 1.0)))


class TestHomogeneousTangent:
    def test_vertical_plane(self, g):
        rep = homogeneous_tangent(vertical_plane(g), 0.2, 0.4)
        assert rep.degree == 3
        assert rep.tangent.signature == (1, 1)
        assert rep.tangent.contains([0.0, 1.0, 0.0])
        assert rep.tangent.contains([0.0, 0.0, 1.0])

    def test_characteristic_origin(self, g):
        rep = homogeneous_tangent(horizontal_plane(g), 0.0, 0.0)
        assert rep.degree == 2
        assert rep.tangent is None

    def test_horizontal_plane_off_origin(self, g):
        # the horizontal direction of T_(1,0){t=0} solves the frame equations
        rep = homogeneous_tangent(horizontal_plane(g), 1.0, 0.0)
        assert rep.degree == 3
        h = rep.tangent.layer_bases[0][:, 0]
        # tangent plane spanned by X, Y - T/2: horizontal combination is X
        np.testing.assert_allclose(np.abs(h), [1.0, 0.0], atol=1e-8)

    def test_degree_dichotomy_on_grid(self, g):
        patch = horizontal_plane(g)
        uu = np.linspace(-2, 2, 9)
        degrees = {(u, v): homogeneous_tangent(patch, u, v).degree
                   for u in uu for v in uu}
        # characteristic exactly at the origin of the plane
        assert degrees[(0.0, 0.0)] == 2
        assert all(deg == 3 for (u, v), deg in degrees.items() if (u, v) != (0.0, 0.0))


class TestMuMeasure:
    def test_vertical_plane_closed_form(self, g):
        patch = vertical_plane(g)
        for c in (2.0, 1.5):
            d = dinf(g, c=c)
            for r in (0.4, 0.1):
                est = mu_measure(patch, d, g.zero(), r)
                assert est.value == pytest.approx((4.0 / c ** 2) * r ** 3, rel=1e-6)
                assert not est.truncated

    def test_truncation_flag(self, g):
        patch = vertical_plane(g)
        est = mu_measure(patch, dinf(g), g.zero(), 1.5)
        assert est.truncated

    def test_far_center_zero(self, g):
        patch = vertical_plane(g)
        est = mu_measure(patch, dinf(g), np.array([4.0, 0.0, 0.0]), 0.5)
        assert est.value == 0.0

    def test_invalid_radius(self, g):
        with pytest.raises(ValueError):
            mu_measure(vertical_plane(g), dinf(g), g.zero(), 0.0)


class TestDensityCurve:
    def test_vertical_plane_ratios_exact(self, g):
        curve = density_curve(vertical_plane(g), dinf(g), 0.0, 0.0,
                              (0.4, 0.2, 0.1))
        np.testing.assert_allclose(curve.ratios, 1.0, rtol=1e-6)
        assert curve.limit == pytest.approx(1.0, rel=1e-6)

    def test_paraboloid_blowup(self, g):
        rep = blowup_check(paraboloid(g), dinf(g), 0.0, 0.0,
                           factor_opts={"n_starts": 4, "n_mc": 30000})
        assert rep.ok
        assert rep.beta == pytest.approx(1.0, abs=3 * rep.beta_error)
        assert rep.limit == pytest.approx(1.0, rel=0.02)

    def test_characteristic_point_rejected(self, g):
        with pytest.raises(ValueError, match="characteristic"):
            density_curve(horizontal_plane(g), dinf(g), 0.0, 0.0, (0.4, 0.2))

    def test_koranyi_vertical_plane(self, g):
        # ratios constant in r (dilation invariance), equal to the slice area
        curve = density_curve(vertical_plane(g), koranyi(g), 0.0, 0.0,
                              (0.4, 0.2, 0.1))
        np.testing.assert_allclose(curve.ratios, curve.ratios[0], rtol=1e-6)
        assert curve.limit == pytest.approx(0.8740191847640303, rel=1e-4)


class TestGraphArea:
    def unit_region(self):
        return ((0.0, 1.0), (0.0, 1.0))

    def test_flat_graph_area_one(self, g):
        f = LevelSetSpec(group=g, fn=lambda p: p[:, 0])
        assert graph_area_levelset(f, self.unit_region(), dinf(g)) \
            == pytest.approx(1.0, abs=1e-12)

    def test_left_translation_invariance(self, g):
        f = LevelSetSpec(group=g, fn=lambda p: p[:, 0] - 0.7)
        assert graph_area_levelset(f, self.unit_region(), dinf(g)) \
            == pytest.approx(1.0, abs=1e-12)

    def test_parabolic_graph_cross_check(self, g):
        f = LevelSetSpec(group=g, fn=lambda p: p[:, 0] - p[:, 1] ** 2)
        area = graph_area_levelset(f, self.unit_region(), dinf(g), n_grid=128)
        patch = levelset_patch(f, self.unit_region())
        surface = surface_measure_total(patch, n_grid=128)
        assert area == pytest.approx(surface, rel=2e-2)
        # independent closed form: integral of sqrt(1 + 4 u^2) over [0,1]
        exact = (2 * np.sqrt(5) + np.arcsinh(2.0)) / 4.0
        assert area == pytest.approx(exact, rel=1e-4)

    def test_negative_jacobian_rejected(self, g):
        f = LevelSetSpec(group=g, fn=lambda p: -p[:, 0])
        with pytest.raises(ValueError, match="hypothesis"):
            graph_area_levelset(f, self.unit_region(), dinf(g), n_grid=16)

    def test_root_escape_reported(self, g):
        f = LevelSetSpec(group=g, fn=lambda p: p[:, 0] - 20.0)
        with pytest.raises(ValueError, match="coset window"):
            graph_area_levelset(f, self.unit_region(), dinf(g), n_grid=8)
