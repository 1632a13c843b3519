import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spectral_dft.spectral import (
    cheb_lobatto_grid,
    differentiation_matrix,
    interpolation_matrix,
    make_map,
    mapped_grid,
    periodic_grid,
    quadrature,
)


def gaussian_moment(y):
    y = np.asarray(y, dtype=float)
    out = np.zeros_like(y)
    fin = np.isfinite(y)
    out[fin] = np.sqrt(2.0 / np.pi) * y[fin] ** 2 * np.exp(-y[fin] ** 2 / 2.0)
    return out


class TestChebyshevGrid:
    def test_nodes_n2(self):
        np.testing.assert_allclose(cheb_lobatto_grid(2).nodes, [1.0, 0.0, -1.0], atol=1e-16)

    def test_bary_weights_n2(self):
        np.testing.assert_allclose(cheb_lobatto_grid(2).bary_weights, [0.5, -1.0, 0.5])

    def test_quad_weights_n2_match_simpson(self):
        # Simpson's rule on [-1, 0, 1] is exact for quadratics
        np.testing.assert_allclose(cheb_lobatto_grid(2).quad_weights, [1 / 3, 4 / 3, 1 / 3])

    def test_zero_degree_rejected(self):
        with pytest.raises(ValueError):
            cheb_lobatto_grid(0)

    @pytest.mark.parametrize("n", [1, 2, 3, 7, 16, 33, 64])
    def test_nodes_strictly_decreasing(self, n):
        assert np.all(np.diff(cheb_lobatto_grid(n).nodes) < 0)

    @pytest.mark.parametrize("n", [1, 2, 5, 10, 31, 64])
    def test_weights_sum_to_two(self, n):
        assert abs(cheb_lobatto_grid(n).quad_weights.sum() - 2.0) < 1e-14

    @pytest.mark.parametrize("n", [4, 5, 12, 13, 30])
    def test_monomials_integrated_exactly(self, n):
        g = cheb_lobatto_grid(n)
        for k in range(n + 1):
            exact = 2.0 / (k + 1) if k % 2 == 0 else 0.0
            assert abs(g.quad_weights @ g.nodes**k - exact) < 1e-13

    def test_periodic_grid(self):
        g = periodic_grid(8, period=2 * np.pi)
        np.testing.assert_allclose(g.nodes, np.arange(8) / 8)
        np.testing.assert_allclose(g.quad_weights, np.full(8, 2 * np.pi / 8))


class TestMaps:
    def test_a1_anchor(self):
        assert make_map("A1", L=2.0).forward(1 / np.sqrt(2)) == pytest.approx(2.0)

    def test_a1_origin(self):
        assert make_map("A1", L=2.0).forward(0.0) == 0.0

    def test_a2_anchor(self):
        m = make_map("A2", L=2.0)
        assert m.forward(0.0) == pytest.approx(2.0)
        assert m.forward(-1.0) == 0.0

    def test_a2f_endpoints(self):
        m = make_map("A2F", a=1.0, b=5.0, L=1.0)
        assert m.forward(-1.0) == pytest.approx(1.0)
        assert m.forward(1.0 - 1e-15) == pytest.approx(5.0)
        assert m.forward(1.0) == pytest.approx(5.0)

    @pytest.mark.parametrize(
        "kind,params",
        [
            ("A1", {"L": 0.0}),
            ("A2", {"L": -1.0}),
            ("A2F", {"a": 1.0, "b": 5.0, "L": 2.0}),
            ("A2F", {"a": 1.0, "b": 1.0, "L": 0.1}),
            ("affine", {"a": 2.0, "b": 1.0}),
            ("A1", {"L1": 1.0}),
            ("bogus", {}),
        ],
    )
    def test_invalid_parameters_rejected(self, kind, params):
        with pytest.raises(ValueError):
            make_map(kind, **params)

    @pytest.mark.parametrize(
        "kind,params",
        [
            ("A1", {"L": 2.0}),
            ("A2", {"L": 0.7}),
            ("A2", {"L": 3.0, "origin": 0.5}),
            ("A2F", {"a": 1.0, "b": 5.0, "L": 1.0}),
            ("affine", {"a": -0.5, "b": 0.5}),
            ("identity-scale", {"scale": 3.0}),
        ],
    )
    def test_derivative_matches_finite_difference(self, kind, params):
        m = make_map(kind, **params)
        x = cheb_lobatto_grid(20).nodes[1:-1]
        h = 1e-6
        fd = (m.forward(x + h) - m.forward(x - h)) / (2 * h)
        np.testing.assert_allclose(m.derivative(x), fd, rtol=1e-6)
        assert np.all(m.derivative(x) > 0)
        assert np.all(np.isfinite(m.derivative(x)))

    @pytest.mark.parametrize(
        "kind,params",
        [
            ("A1", {"L": 2.0}),
            ("A2", {"L": 0.7}),
            ("A2F", {"a": 1.0, "b": 5.0, "L": 1.0}),
            ("affine", {"a": -0.5, "b": 0.5}),
        ],
    )
    @settings(max_examples=50, deadline=None)
    @given(x=st.floats(-0.999, 0.999))
    def test_round_trip(self, kind, params, x):
        m = make_map(kind, **params)
        y = m.forward(x)
        assert m.forward(m.inverse(y)) == pytest.approx(y, rel=1e-12, abs=1e-12)

    @pytest.mark.parametrize("kind,params", [("A1", {"L": 1.0}), ("A2", {"L": 2.0})])
    def test_forward_monotone_on_nodes(self, kind, params):
        y = mapped_grid(30, kind, **params).phys_nodes
        assert np.all(np.diff(y) < 0)


class TestMappedGrid:
    def test_infinite_endpoints(self):
        g = mapped_grid(11, "A1", L=1.0)
        assert g.phys_nodes[0] == np.inf and g.phys_nodes[-1] == -np.inf
        assert g.weights[0] == 0.0 and g.weights[-1] == 0.0

    @pytest.mark.parametrize("n", [2, 5, 20])
    def test_bounded_interval_length(self, n):
        g = mapped_grid(n, "affine", a=-1.5, b=4.0)
        assert g.integrate(np.ones(n)) == pytest.approx(5.5, abs=1e-13)

    def test_a2f_interval_length(self):
        g = mapped_grid(30, "A2F", a=1.0, b=5.0, L=1.0)
        assert g.integrate(np.ones(30)) == pytest.approx(4.0, abs=1e-10)


class TestInterpolation:
    def test_identity_at_nodes(self):
        g = mapped_grid(15, "A2", L=2.0)
        np.testing.assert_allclose(interpolation_matrix(g, g.phys_nodes), np.eye(15), atol=1e-14)

    def test_identity_at_nodes_whole_line(self):
        g = mapped_grid(12, "A1", L=1.0)
        np.testing.assert_allclose(interpolation_matrix(g, g.phys_nodes), np.eye(12), atol=1e-14)

    @settings(max_examples=30, deadline=None)
    @given(t=st.floats(-50.0, 50.0))
    def test_partition_of_unity(self, t):
        g = mapped_grid(17, "A1", L=2.0)
        assert interpolation_matrix(g, [t]).sum() == pytest.approx(1.0, abs=1e-13)

    def test_cubic_reproduction(self):
        g = mapped_grid(5, "affine", a=-1.0, b=1.0)
        row = interpolation_matrix(g, [0.3])
        assert (row @ g.phys_nodes**3)[0] == pytest.approx(0.027, abs=1e-15)

    def test_runge_function(self):
        g = mapped_grid(65, "affine", a=-1.0, b=1.0)
        probe = np.linspace(-1, 1, 1000)
        f = lambda x: 1.0 / (1.0 + 25.0 * x**2)
        err = np.abs(interpolation_matrix(g, probe) @ f(g.phys_nodes) - f(probe)).max()
        assert err < 1e-6

    def test_target_outside_domain_named(self):
        g = mapped_grid(10, "A2", L=2.0)
        with pytest.raises(ValueError, match="-0.5"):
            interpolation_matrix(g, [1.0, -0.5])

    def test_near_node_snaps(self):
        g = mapped_grid(9, "affine", a=-1.0, b=1.0)
        row = interpolation_matrix(g, [g.phys_nodes[3] + 1e-16])
        np.testing.assert_array_equal(row[0], np.eye(9)[3])

    def test_infinite_target(self):
        g = mapped_grid(9, "A1", L=1.0)
        row = interpolation_matrix(g, [np.inf, -np.inf])
        np.testing.assert_array_equal(row[0], np.eye(9)[0])
        np.testing.assert_array_equal(row[1], np.eye(9)[-1])

    def test_periodic_trig_reproduction(self):
        g = mapped_grid(16, "periodic", a=0.0, period=2 * np.pi)
        t = np.array([0.1, 1.7, 4.0])
        f = lambda p: np.cos(3 * p) + 0.5 * np.sin(p)
        np.testing.assert_allclose(interpolation_matrix(g, t) @ f(g.phys_nodes), f(t), atol=1e-13)


class TestQuadrature:
    def test_constant_on_affine(self):
        g = mapped_grid(7, "affine", a=0.0, b=3.0)
        assert quadrature(np.ones(7), g) == pytest.approx(3.0, abs=1e-14)

    def test_gaussian_moment_n50(self):
        g = mapped_grid(51, "A1", L=2.0)
        assert abs(quadrature(gaussian_moment(g.phys_nodes), g) - 2.0) < 1e-12

    def test_arctangent_integral(self):
        g = mapped_grid(61, "A1", L=1.0)
        y = g.phys_nodes
        f = np.where(np.isfinite(y), 1.0 / (1.0 + y**2), 0.0)
        assert abs(quadrature(f, g) - np.pi) < 1e-10

    @pytest.mark.parametrize("L", [1.0, 2.0, 3.0, 4.0])
    def test_gaussian_moment_error_decays(self, L):
        errs = []
        for n in (10, 20, 40, 80):
            g = mapped_grid(n, "A1", L=L)
            errs.append(abs(quadrature(gaussian_moment(g.phys_nodes), g) - 2.0) + 1e-16)
        assert all(b < a for a, b in zip(errs, errs[1:]))
        assert errs[-1] < 1e-7

    def test_nonvanishing_value_at_infinity_rejected(self):
        g = mapped_grid(10, "A2", L=1.0)
        with pytest.raises(ValueError, match="non-finite"):
            quadrature(np.ones(10), g)

    def test_nan_rejected(self):
        g = mapped_grid(5, "affine", a=0.0, b=1.0)
        with pytest.raises(ValueError):
            quadrature(np.array([1.0, np.nan, 1.0, 1.0, 1.0]), g)


class TestDifferentiation:
    @pytest.mark.parametrize("n", [2, 3, 8])
    def test_linear(self, n):
        g = mapped_grid(n, "affine", a=-1.0, b=1.0)
        np.testing.assert_allclose(differentiation_matrix(g) @ g.phys_nodes, np.ones(n), atol=1e-13)

    def test_quadratic(self):
        g = mapped_grid(5, "affine", a=-1.0, b=1.0)
        x = g.phys_nodes
        np.testing.assert_allclose(differentiation_matrix(g) @ x**2, 2 * x, atol=1e-13)

    def test_exponential_on_half_line(self):
        g = mapped_grid(61, "A2", L=2.0)
        y = g.phys_nodes
        f = np.exp(-y)
        d = differentiation_matrix(g) @ f
        np.testing.assert_allclose(d[:-1], -f[:-1], atol=1e-8)

    def test_periodic(self):
        g = mapped_grid(24, "periodic", a=0.0, period=2 * np.pi)
        t = g.phys_nodes
        np.testing.assert_allclose(differentiation_matrix(g) @ np.sin(2 * t), 2 * np.cos(2 * t), atol=1e-12)

    def test_computational_grid_accepted(self):
        g = cheb_lobatto_grid(4)
        np.testing.assert_allclose(differentiation_matrix(g) @ g.nodes, np.ones(5), atol=1e-13)
