import mpmath as mp
import numpy as np
import pytest
from scipy.integrate import quad

from spectral_dft.kernels import (
    ATTR_SERIES_THRESHOLD,
    attraction_kernel,
    energy_scale_ratio,
    gaussian_kernel,
    gaussian_sigma,
    hd_kernel,
    hs_kernel,
    phi2d_attr,
    phi2d_omega3,
    phi_attr,
    wall_potential_93,
    wall_potential_93_derivative,
)


def inner_closed_form_mp(r):
    """Inner attraction branch in 50-digit arithmetic (oracle for the series)."""
    mp.mp.dps = 50
    x = mp.mpf(r)
    root = mp.sqrt(1 - x * x)
    poly = -105 - 70 * x**2 - 56 * x**4 + 112 * x**6 + 64 * x**8
    val = 3 * root / (160 * x**10) * poly - 3 * mp.asin(x) / (32 * x**11) * (32 * x**6 - 21)
    return float(val)


class TestPairPotential:
    def test_inside_core(self):
        assert phi_attr(0.5) == 0.0

    def test_minimum(self):
        assert phi_attr(2 ** (1 / 6)) == pytest.approx(-1.0, abs=1e-14)

    def test_beyond_cutoff(self):
        assert phi_attr(3.0, 2.5) == 0.0


class TestProjectedAttraction:
    def test_energy_scale_ratio(self):
        assert energy_scale_ratio(2.5) == pytest.approx(0.943502, abs=1e-6)

    def test_energy_scale_ratio_no_cutoff(self):
        assert energy_scale_ratio(np.inf) == 1.0

    def test_continuity_at_core(self):
        below = phi2d_attr(np.nextafter(1.0, 0.0), np.inf)
        at = phi2d_attr(1.0, np.inf)
        assert abs(below - at) < 1e-12

    def test_jump_at_cutoff(self):
        rc = 2.5
        below = phi2d_attr(rc * (1 - 1e-15), rc)
        expected = np.pi * (63 / (64 * rc**11) - 1.5 / rc**5) / energy_scale_ratio(rc)
        assert below == pytest.approx(expected, rel=1e-12)
        assert phi2d_attr(rc, rc) == 0.0

    @pytest.mark.parametrize("r", [1e-3, 0.05, 0.2, 0.45, 0.499, 0.5, 0.7, 0.95])
    def test_inner_branch_against_high_precision(self, r):
        assert phi2d_attr(r, np.inf) == pytest.approx(inner_closed_form_mp(r), abs=3e-13)

    def test_series_threshold(self):
        assert ATTR_SERIES_THRESHOLD == 0.5

    def test_finite_at_origin(self):
        assert phi2d_attr(0.0, np.inf) == pytest.approx(-48 / 55, abs=1e-15)

    @pytest.mark.parametrize("rc", [2.5, np.inf])
    def test_integral(self, rc):
        f = lambda r: 2 * np.pi * r * phi2d_attr(r, rc)
        val = quad(f, 0, 1, epsabs=1e-14, limit=200)[0] + quad(f, 1, rc, epsabs=1e-14, limit=200)[0]
        assert val == pytest.approx(-32 * np.pi / 9, abs=1e-8)

    def test_projection_of_pair_potential(self):
        # line integral of the 3D tail along y3 reproduces the projected kernel
        for r in [0.3, 1.2, 2.0]:
            h = np.sqrt(max(1.0 - r * r, 0.0))
            g = lambda t: phi_attr(np.hypot(r, t), np.inf)
            val = 2 * quad(g, h, np.inf, epsabs=1e-13, limit=200)[0]
            assert phi2d_attr(r, np.inf) == pytest.approx(val, abs=1e-10)


class TestWeights:
    def test_projected_ball_volume(self):
        R = 0.5
        val = quad(lambda r: 2 * np.pi * r * phi2d_omega3(r, R), 0, R, epsabs=1e-14)[0]
        assert val == pytest.approx(4 / 3 * np.pi * R**3, abs=1e-8)

    def test_hs_vector_weight_odd(self):
        k = hs_kernel("vw2")
        p = np.array([[0.3, 0.4]])
        np.testing.assert_allclose(k(p), -k(-p))
        assert k.odd and k.n_components == 2

    def test_hd_tensor_components(self):
        k = hd_kernel("tw2", normalized=True)
        v = k(np.array([[0.3, 0.4]]))
        np.testing.assert_allclose(v, [[0.36, 0.48, 0.64]], atol=1e-14)

    def test_hd_printed_tensor_scale(self):
        v = hd_kernel("tw2")(np.array([[0.3, 0.4]]))
        np.testing.assert_allclose(v, [[0.09, 0.12, 0.16]], atol=1e-14)

    def test_gaussian_support(self):
        k = gaussian_kernel(1.0)
        assert k(np.array([[7.5, 0.0]]))[0, 0] == 0.0
        assert k(np.array([[0.0, 0.0]]))[0, 0] == 2.0

    def test_gaussian_sigma_mixing(self):
        assert gaussian_sigma(0.5, 1.5) == 1.0

    def test_unknown_names(self):
        with pytest.raises(ValueError):
            hs_kernel("w7")
        with pytest.raises(ValueError):
            hd_kernel("w1")

    def test_attraction_cutoff_below_core(self):
        with pytest.raises(ValueError):
            attraction_kernel(0.9)


class TestWallPotential:
    def test_infinite_behind_wall(self):
        assert wall_potential_93(-1.0, 0.865) == np.inf

    def test_vanishes_at_infinity(self):
        assert wall_potential_93(np.inf, 0.865) == 0.0

    def test_minimum_location(self):
        # dV/dy = 0 where (y+1)^6 = 2/5
        y0 = (2 / 5) ** (1 / 6) - 1
        assert wall_potential_93_derivative(y0, 1.0) == pytest.approx(0.0, abs=1e-12)

    @pytest.mark.parametrize("y", [-0.3, 0.0, 0.7, 4.0])
    def test_derivative_fd(self, y):
        h = 1e-6
        fd = (wall_potential_93(y + h, 0.865) - wall_potential_93(y - h, 0.865)) / (2 * h)
        assert wall_potential_93_derivative(y, 0.865) == pytest.approx(fd, rel=1e-7, abs=1e-9)
