import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spectral_dft.fmt import (
    PackingError,
    hd_free_energy_density,
    hd_reduced,
    hs_free_energy_density,
    hs_reduced,
)

RNG = np.random.default_rng(2024)
N_TUPLES = 50


def central_difference(f, x, i, h=1e-6):
    xp, xm = x.copy(), x.copy()
    xp[i] += h
    xm[i] -= h
    return (f(xp) - f(xm)) / (2 * h)


def random_hs_tuple():
    n3 = RNG.uniform(0.05, 0.6)
    n2 = RNG.uniform(0.2, 4.0)
    return np.array([n2 / np.pi, n2 / (2 * np.pi), n2, n3, *RNG.uniform(-0.3, 0.3, 2), *RNG.uniform(-1.0, 1.0, 2)])


def hs_args(x):
    return (x[0:1], x[1:2], x[2:3], x[3:4], x[4:6, None], x[6:8, None])


def hs_phi(x):
    return float(hs_free_energy_density(*hs_args(x))[0][0])


def hs_grad(x):
    _, partials = hs_free_energy_density(*hs_args(x))
    return np.concatenate([np.ravel(d) for d in partials])


def random_hd_tuple():
    return np.array(
        [RNG.uniform(0.1, 1.0), RNG.uniform(0.3, 3.0), RNG.uniform(0.05, 0.6), *RNG.uniform(-0.5, 0.5, 2), *RNG.uniform(-0.4, 0.4, 3)]
    )


def hd_unpack(x):
    nt = np.array([[x[5], x[6]], [x[6], x[7]]])[:, :, None]
    return x[0:1], x[1:2], x[2:3], x[3:5, None], nt


def hd_phi(x):
    return float(hd_free_energy_density(*hd_unpack(x))[0][0])


class TestRosenfeldPartials:
    @pytest.mark.parametrize("k", range(N_TUPLES))
    def test_partials_match_finite_differences(self, k):
        x = random_hs_tuple()
        g = hs_grad(x)
        fd = np.array([central_difference(hs_phi, x, i) for i in range(x.size)])
        np.testing.assert_allclose(g, fd, rtol=1e-5, atol=1e-7)

    def test_packing_error_names_index(self):
        with pytest.raises(PackingError, match="index"):
            hs_free_energy_density(np.ones(3), np.ones(3), np.ones(3), np.array([0.1, 1.0, 0.2]), np.zeros((2, 3)), np.zeros((2, 3)))

    def test_zero_density(self):
        phi, _ = hs_free_energy_density(0.0, 0.0, 0.0, 0.0, np.zeros(2), np.zeros(2))
        assert phi == 0.0


class TestHardDiskPartials:
    @pytest.mark.parametrize("k", range(N_TUPLES))
    def test_partials_match_finite_differences(self, k):
        x = random_hd_tuple()
        _, (d0, d2, d3, dv, dt) = hd_free_energy_density(*hd_unpack(x))
        # the symmetric off-diagonal tensor entry appears twice
        g = np.array([d0[0], d2[0], d3[0], dv[0, 0], dv[1, 0], dt[0, 0, 0], 2 * dt[0, 1, 0], dt[1, 1, 0]])
        fd = np.array([central_difference(hd_phi, x, i) for i in range(x.size)])
        np.testing.assert_allclose(g, fd, rtol=1e-5, atol=1e-7)


class TestReducedForms:
    @settings(max_examples=40, deadline=None)
    @given(
        st.floats(0.1, 3.0),
        st.floats(0.02, 0.7),
        st.floats(-0.5, 0.5),
        st.floats(-0.5, 0.5),
    )
    def test_hs_reduced_equals_full(self, n2, n3, v1, v2):
        R = 0.5
        v = np.array([[v1], [v2]])
        full, _ = hs_free_energy_density(
            n2 / (4 * np.pi * R * R), n2 / (4 * np.pi * R), n2, n3, v / (4 * np.pi * R), v
        )
        assert hs_reduced(np.array([n2]), np.array([n3]), v, R, order=0)[0] == pytest.approx(full[0], rel=1e-12)

    @pytest.mark.parametrize("k", range(10))
    def test_hs_reduced_hessian(self, k):
        x = np.array([RNG.uniform(0.3, 3.0), RNG.uniform(0.05, 0.6), *RNG.uniform(-0.4, 0.4, 2)])

        def grad(x):
            _, (g2, g3, gv) = hs_reduced(np.array([x[0]]), np.array([x[1]]), x[2:, None], order=1)
            return np.concatenate([g2, g3, gv.ravel()])

        _, _, h = hs_reduced(np.array([x[0]]), np.array([x[1]]), x[2:, None], order=2)
        H = np.array(
            [
                [h["22"][0], h["23"][0], *h["2v"][:, 0]],
                [h["23"][0], h["33"][0], *h["3v"][:, 0]],
                [h["2v"][0, 0], h["3v"][0, 0], h["vv"][0], 0.0],
                [h["2v"][1, 0], h["3v"][1, 0], 0.0, h["vv"][0]],
            ]
        )
        fd = np.column_stack([central_difference(grad, x, i) for i in range(4)])
        np.testing.assert_allclose(H, fd, rtol=1e-5, atol=1e-7)

    @pytest.mark.parametrize("k", range(10))
    def test_hd_reduced_hessian(self, k):
        x = np.array([RNG.uniform(0.3, 3.0), RNG.uniform(0.05, 0.6), *RNG.uniform(-0.4, 0.4, 5)])

        def grad(x):
            _, (g2, g3, gv, gt) = hd_reduced(np.array([x[0]]), np.array([x[1]]), x[2:4, None], x[4:, None], order=1)
            return np.concatenate([g2, g3, gv.ravel(), gt.ravel()])

        _, _, h = hd_reduced(np.array([x[0]]), np.array([x[1]]), x[2:4, None], x[4:, None], order=2)
        H = np.zeros((7, 7))
        H[0, 0], H[0, 1], H[1, 1] = h["22"][0], h["23"][0], h["33"][0]
        H[1, 2:4] = h["3v"][:, 0]
        H[1, 4:] = h["3t"][:, 0]
        H[2, 2] = H[3, 3] = h["vv"][0]
        H[4:, 4:] = np.diag(h["tt"][:, 0])
        H = np.triu(H) + np.triu(H, 1).T
        fd = np.column_stack([central_difference(grad, x, i) for i in range(7)])
        np.testing.assert_allclose(H, fd, rtol=1e-5, atol=1e-7)
