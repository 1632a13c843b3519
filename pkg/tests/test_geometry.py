import numpy as np
import pytest
from scipy.integrate import dblquad, quad

from spectral_dft.geometry import (
    assemble_intersection,
    build_shape,
    composite_weighted_density_grid,
    halfspace_grid,
    strip_point_count,
)


def disk_segment_area(R, c):
    """Area of the disk of radius R above the line y2 = c."""
    c = np.clip(c, -R, R)
    return R * R * np.arccos(c / R) - c * np.sqrt(R * R - c * c)


def sphere_cap_area(R, c):
    c = np.clip(c, -R, R)
    return 2.0 * np.pi * R * (R - c)


def polar_region_integral(f, r_lo, r_hi, phi_lo, phi_hi):
    """Oracle: integral of f(y1, y2) over {phi in [phi_lo, phi_hi], r in [r_lo(phi), r_hi(phi)]}."""
    val, _ = dblquad(
        lambda r, phi: f(r * np.cos(phi), r * np.sin(phi)) * r,
        phi_lo,
        phi_hi,
        r_lo,
        r_hi,
        epsabs=1e-12,
        epsrel=1e-12,
    )
    return val


def quadratic(y1, y2):
    return 1.0 + y1 + 2.0 * y2 + y1**2 - y1 * y2 + 3.0 * y2**2


OFFSETS = np.random.default_rng(7).uniform(-3.0, 3.0, 10)


class TestGrids:
    def test_halfspace_point_count(self):
        assert halfspace_grid(20, 20, 2.0, 2.0).n_points == 400

    def test_halfspace_median_y2(self):
        g = halfspace_grid(21, 21, 2.0, 2.0)
        line = g.y2.reshape(g.shape)[10]
        assert np.median(line) == pytest.approx(2.0, abs=1e-14)

    def test_half_of_points_inside_map_length(self):
        g = halfspace_grid(20, 20, 2.0, 2.0)
        y2 = g.y2.reshape(g.shape)[0]
        assert np.sum(y2 <= 2.0) == 10

    @pytest.mark.parametrize("n2, expected", [(20, 8), (60, 20)])
    def test_strip_point_count(self, n2, expected):
        assert strip_point_count(n2) == expected

    def test_strip_bounds(self):
        W = composite_weighted_density_grid(10, 20, 2.0, 2.0)
        strip = W.parts[0]
        assert strip.y2.min() == pytest.approx(-0.5)
        assert strip.y2.max() == pytest.approx(0.5)


class TestShapes:
    def test_d1_area(self):
        s = build_shape("D1", {"R": 1.0}, 20, 40)
        assert s.integrate(np.ones(s.n_points)) == pytest.approx(np.pi, abs=1e-10)

    def test_d1_odd_m1_rounded_up_to_pairs(self):
        s = build_shape("D1", {"R": 1.0}, 21, 40)
        assert s.n_points == 22 * 40
        assert s.integrate(np.ones(s.n_points)) == pytest.approx(np.pi, abs=1e-12)

    def test_s2_projected_ball_volume(self):
        s = build_shape("S2", {"R": 1.0, "theta1": 0.0, "theta2": np.pi}, 20, 20)
        r = np.hypot(s.points[:, 0], s.points[:, 1])
        w3 = 2.0 * np.sqrt(np.maximum(1.0 - r * r, 0.0))
        assert s.integrate(w3) == pytest.approx(4.0 * np.pi / 3.0, abs=1e-12)

    def test_s2_disk_area(self):
        s = build_shape("S2", {"R": 1.0, "theta1": 0.0, "theta2": np.pi}, 20, 20)
        assert s.integrate(np.ones(s.n_points)) == pytest.approx(np.pi, abs=1e-12)

    def test_s1_sphere_surface(self):
        s = build_shape("S1", {"R": 0.5, "theta1": 0.0, "theta2": np.pi}, 20, 40)
        assert s.integrate(np.ones(s.n_points)) == pytest.approx(np.pi, abs=1e-12)

    def test_p1_points_outside_core_and_above_wall(self):
        s = build_shape("P1", {"R": 1.0, "L": 2.0}, 20, 20)
        fin = np.all(np.isfinite(s.points), axis=1)
        r = np.hypot(*s.points[fin].T)
        assert np.all(r >= 1.0 - 1e-14)
        assert np.all(s.points[fin, 1] >= -1e-14)

    @pytest.mark.parametrize(
        "label, params",
        [
            ("P2+", {"R": 1.0, "L": 1.0, "h": 0.4}),
            ("P4-", {"R_in": 1.0, "R_out": 2.5, "h": 0.5}),
            ("S1", {"R": 1.0, "theta1": 0.3, "theta2": 2.0}),
        ],
    )
    def test_missing_or_invalid_parameters(self, label, params):
        bad = dict(params)
        bad.pop(next(iter(bad)))
        with pytest.raises(ValueError):
            build_shape(label, bad, 10)

    @pytest.mark.parametrize(
        "label, params, r_lo, r_hi, phi",
        [
            ("D3", {"R_in": 1.0, "R_out": 2.5}, 1.0, 2.5, (0.0, 2 * np.pi)),
            ("P6", {"R_in": 1.0, "R_out": 2.5, "h": 0.7}, 1.0, 2.5, None),
        ],
    )
    def test_quadratic_on_annular_patches(self, label, params, r_lo, r_hi, phi):
        s = build_shape(label, params, 24, 48 if label == "D3" else 24)
        if phi is None:
            d = np.arccos(params["h"] / params["R_out"])
            phi = (d - np.pi / 2, 1.5 * np.pi - d)
        expected = polar_region_integral(quadratic, lambda p: r_lo, lambda p: r_hi, *phi)
        assert s.integrate(quadratic(*s.points.T)) == pytest.approx(expected, abs=1e-8)

    def test_quadratic_on_disk(self):
        s = build_shape("D1", {"R": 1.3}, 20, 40)
        R = 1.3
        # odd terms vanish; int y^2 over disk = pi R^4 / 4
        expected = np.pi * R**2 + np.pi * R**4 / 4.0 + 3.0 * np.pi * R**4 / 4.0
        assert s.integrate(quadratic(*s.points.T)) == pytest.approx(expected, abs=1e-8)

    def test_quadratic_on_rectangle(self):
        s = build_shape("Q", {"a1": -1.0, "b1": 2.0, "a2": 0.5, "b2": 1.5}, 6)
        exp, _ = dblquad(lambda y2, y1: quadratic(y1, y2), -1.0, 2.0, 0.5, 1.5)
        assert s.integrate(quadratic(*s.points.T)) == pytest.approx(exp, abs=1e-12)

    def test_quadratic_on_p4(self):
        Ri, Ro, h = 1.0, 2.5, 0.6
        s = build_shape("P4-", {"R_in": Ri, "R_out": Ro, "h": h}, 30)
        a = 1.5 * np.pi - np.arccos(h / Ro)
        b = 1.5 * np.pi - np.arccos(h / Ri)
        exp = polar_region_integral(
            quadratic, lambda p: Ri, lambda p: min(abs(h / np.sin(p)), Ro), a, b
        )
        assert s.integrate(quadratic(*s.points.T)) == pytest.approx(exp, abs=1e-8)

    def test_csv_export(self, tmp_path):
        s = build_shape("D3", {"R_in": 1.0, "R_out": 2.0}, 5, 8)
        s.to_csv(tmp_path / "d3.csv")
        data = np.loadtxt(tmp_path / "d3.csv", delimiter=",", skiprows=1)
        assert data.shape == (40, 3)
        assert data[:, 2].sum() == pytest.approx(3.0 * np.pi)


class TestIntersectionCases:
    def test_sphere_surface_above(self):
        assert assemble_intersection("sphere-surface", 1.0, 10, R=0.5).labels == ["S1"]

    def test_disk_below_wall_empty(self):
        assert assemble_intersection("disk", -0.6, 10, R=0.5).pieces == ()

    def test_annulus_finite_low(self):
        inter = assemble_intersection("annulus-finite", 0.5, 10, R_in=1.0, R_out=2.5)
        assert sorted(inter.labels) == ["P4+", "P4-", "P6"]

    def test_annulus_exterior_cases(self):
        kw = dict(R=1.0, L=1.0)
        assert assemble_intersection("annulus-exterior", np.inf, 8, **kw).labels == ["D2"]
        assert assemble_intersection("annulus-exterior", 1.5, 8, **kw).labels == ["P1", "P3"]
        assert sorted(assemble_intersection("annulus-exterior", 0.5, 8, **kw).labels) == [
            "P1",
            "P2+",
            "P2-",
        ]
        assert assemble_intersection("annulus-exterior", 0.0, 8, **kw).labels == ["P1"]
        with pytest.raises(ValueError):
            assemble_intersection("annulus-exterior", -0.1, 8, **kw)

    def test_unsupported_kind(self):
        with pytest.raises(ValueError):
            assemble_intersection("hexagon", 1.0, 8, R=1.0)


class TestIntersectionAreas:
    @pytest.mark.parametrize("y", OFFSETS)
    def test_disk(self, y):
        inter = assemble_intersection("disk", y, 20, R=0.5)
        assert inter.integrate(np.ones(len(inter.weights))) == pytest.approx(
            disk_segment_area(0.5, -y), abs=1e-8
        )

    @pytest.mark.parametrize("y", OFFSETS)
    def test_sphere_surface(self, y):
        inter = assemble_intersection("sphere-surface", y, 20, R=0.5)
        assert inter.integrate(np.ones(len(inter.weights))) == pytest.approx(
            sphere_cap_area(0.5, -y), abs=1e-8
        )

    @pytest.mark.parametrize("y", np.abs(OFFSETS))
    def test_annulus_finite(self, y):
        inter = assemble_intersection("annulus-finite", y, 30, R_in=1.0, R_out=2.5)
        exact = disk_segment_area(2.5, -y) - disk_segment_area(1.0, -y)
        assert inter.integrate(np.ones(len(inter.weights))) == pytest.approx(exact, abs=1e-8)

    @pytest.mark.parametrize("y", np.abs(OFFSETS))
    def test_annulus_exterior_decaying_integrand(self, y):
        # integrand r^-5 has the closed-form radial antiderivative -r^-3 / 3
        inter = assemble_intersection("annulus-exterior", y, 40, R=1.0, L=1.0)
        r = np.hypot(*inter.points.T)
        got = inter.integrate(r**-5)

        def radial(phi):
            s = np.sin(phi)
            rmax = np.inf if s >= 0 or y == 0 and s >= 0 else y / abs(s)
            if rmax <= 1.0:
                return 0.0
            return (1.0 - rmax**-3) / 3.0

        exact = quad(radial, 0.0, np.pi, epsabs=1e-13)[0]
        if y > 0:
            pts = [1.5 * np.pi - np.arccos(min(y, 1.0)), 1.5 * np.pi + np.arccos(min(y, 1.0))]
            exact += quad(radial, np.pi, 2 * np.pi, points=pts, epsabs=1e-13, limit=200)[0]
        assert got == pytest.approx(exact, abs=1e-6)

    @pytest.mark.parametrize("y", OFFSETS)
    def test_ring(self, y):
        inter = assemble_intersection("ring", y, 20, R=0.5)
        c = np.clip(y / 0.5, -1.0, 1.0)
        exact = 0.5 * (np.pi + 2.0 * np.arcsin(c)) if y < 0.5 else np.pi
        assert inter.integrate(np.ones(len(inter.weights))) == pytest.approx(exact, abs=1e-8)

    @pytest.mark.parametrize("y", OFFSETS)
    def test_square(self, y):
        inter = assemble_intersection("square", y, 6, half=2.0)
        exact = 4.0 * np.clip(2.0 + y, 0.0, 4.0)
        assert inter.integrate(np.ones(len(inter.weights))) == pytest.approx(exact, abs=1e-10)

    @pytest.mark.parametrize("y", [0.3, 1.4, 2.0])
    def test_annulus_monte_carlo(self, y):
        rng = np.random.default_rng(11)
        n = 10_000_000
        lo = max(-2.5, -y)
        p = rng.uniform([-2.5, lo], [2.5, 2.5], size=(n, 2))
        r2 = p[:, 0] ** 2 + p[:, 1] ** 2
        hit = np.count_nonzero((r2 >= 1.0) & (r2 <= 6.25))
        mc = hit / n * 5.0 * (2.5 - lo)
        inter = assemble_intersection("annulus-finite", y, 30, R_in=1.0, R_out=2.5)
        got = inter.integrate(np.ones(len(inter.weights)))
        assert abs(got - mc) / mc < 1e-3

    @pytest.mark.parametrize("y", [0.3, 0.7])
    def test_pieces_disjoint(self, y):
        inter = assemble_intersection("annulus-finite", y, 16, R_in=1.0, R_out=2.5)
        ranges = []
        for s in inter.pieces:
            phi = np.mod(np.arctan2(s.points[:, 1], s.points[:, 0]) + np.pi / 2, 2 * np.pi)
            ranges.append((phi.min(), phi.max()))
        ranges.sort()
        for (a0, a1), (b0, b1) in zip(ranges, ranges[1:]):
            assert b0 >= a1 - 1e-12

    @pytest.mark.parametrize("y", [-0.2, 0.1, 0.45])
    def test_upper_bound_band_split(self, y):
        # [lower, upper] band plus the part above upper recovers the whole cap
        band = assemble_intersection("disk", y + 0.5, 20, R=0.5, upper=0.5 - y)
        top = assemble_intersection("disk", y - 0.5, 20, R=0.5)
        total = band.integrate(np.ones(len(band.weights))) + top.integrate(np.ones(len(top.weights)))
        assert total == pytest.approx(disk_segment_area(0.5, -0.5 - y), abs=1e-10)
