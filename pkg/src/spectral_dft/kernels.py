"""Pair potentials, wall potentials and convolution kernels.

All lengths are in units of the particle diameter and energies in units of
the mean-field energy scale ``eps_D`` unless stated otherwise. Kernels for
three-dimensional fluids that are invariant in ``y3`` are given in their
projected two-dimensional form.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

import numpy as np

# Exact Taylor coefficients of the inner attraction branch (times eps_D/eps),
# in powers r^0, r^2, ..., r^42.
_ATTR_SERIES = np.array(
    [
        float(Fraction(p, q))
        for p, q in [
            (-48, 55), (-24, 91), (-2, 15), (-15, 187), (-105, 1976),
            (-3, 80), (-693, 25024), (-1287, 60800), (-715, 43008),
            (-36465, 2732032), (-138567, 12697600), (-29393, 3244032),
            (-289731, 38010880), (-3900225, 601358336), (-1671525, 299892736),
            (-5816907, 1203765248), (-901620585, 213540405248),
            (-12964479, 3489660928), (-6806351475, 2069100494848),
            (-1893496275, 646392578048), (-765814049, 292057776128),
            (-201846702915, 85590108274688),
        ]
    ]
)
ATTR_SERIES_THRESHOLD = 0.5
"""Below this radius the inner branch is evaluated from its power series."""


def phi_attr(r, r_c: float = 2.5) -> np.ndarray:
    """Barker-Henderson attractive tail of the 12-6 potential (units of eps).

    Zero inside the core ``r <= 1`` and beyond the cutoff ``r_c``.
    """
    r = np.asarray(r, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        lj = 4.0 * (r**-12 - r**-6)
    return np.where((r > 1.0) & (r < r_c), lj, 0.0)


def energy_scale_ratio(r_c: float) -> float:
    """``eps_D / eps`` for a cutoff ``r_c`` (``inf`` allowed).

    Examples
    --------
    >>> round(energy_scale_ratio(2.5), 6)
    0.943502
    """
    if np.isinf(r_c):
        return 1.0
    if not r_c >= 1.0:
        raise ValueError(f"cutoff must be >= 1, got {r_c}")
    return 1.0 - 9.0 * np.pi / 32.0 * (r_c**-3 - 7.0 / (32.0 * r_c**9))


def _attr_inner(r: np.ndarray) -> np.ndarray:
    out = np.empty_like(r)
    small = r < ATTR_SERIES_THRESHOLD
    if small.any():
        s = r[small] ** 2
        out[small] = np.polynomial.polynomial.polyval(s, _ATTR_SERIES)
    big = ~small
    if big.any():
        x = r[big]
        root = np.sqrt(np.maximum(1.0 - x * x, 0.0))
        poly = -105.0 - 70.0 * x**2 - 56.0 * x**4 + 112.0 * x**6 + 64.0 * x**8
        out[big] = 3.0 * root / (160.0 * x**10) * poly - 3.0 * np.arcsin(np.minimum(x, 1.0)) / (
            32.0 * x**11
        ) * (32.0 * x**6 - 21.0)
    return out


def phi2d_attr(r, r_c: float = 2.5) -> np.ndarray:
    """Attractive tail integrated along ``y3``, scaled by ``eps / eps_D``.

    The cutoff is applied to the in-plane distance ``r``; the jump at
    ``r = r_c`` is kept.
    """
    r = np.abs(np.asarray(r, dtype=float))
    scale = 1.0 / energy_scale_ratio(r_c)
    out = np.zeros_like(r)
    inner = r < 1.0
    if inner.any():
        out[inner] = _attr_inner(r[inner])
    outer = (r >= 1.0) & (r < r_c) & np.isfinite(r)
    if outer.any():
        out[outer] = _attr_outer(r[outer])
    return scale * out


def _attr_outer(x: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return np.where(np.isinf(x), 0.0, np.pi * (63.0 / (64.0 * x**11) - 1.5 / x**5))


def phi2d_omega3(r, R: float = 0.5) -> np.ndarray:
    """Step-function weight integrated along ``y3``: ``2 sqrt(R^2 - r^2)``."""
    r = np.asarray(r, dtype=float)
    return np.where(r < R, 2.0 * np.sqrt(np.maximum(R * R - r * r, 0.0)), 0.0)


def gaussian_pair_kernel(r, sigma: float) -> np.ndarray:
    """Soft repulsion ``2 exp(-r^2 / sigma^2)``."""
    if not sigma > 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    r = np.asarray(r, dtype=float)
    with np.errstate(over="ignore"):
        return 2.0 * np.exp(-(r**2) / sigma**2)


def gaussian_sigma(alpha_i: float, alpha_j: float) -> float:
    return 0.5 * (alpha_i + alpha_j)


def wall_potential_93(y2, eps_w: float) -> np.ndarray:
    """Algebraically decaying 9-3 wall potential; ``+inf`` for ``y2 <= -1``."""
    y2 = np.asarray(y2, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        u = 1.0 / (y2 + 1.0)
        v = 4.0 * np.pi * eps_w * (u**9 / 45.0 - u**3 / 6.0)
    v = np.where(y2 <= -1.0, np.inf, v)
    return np.where(np.isposinf(y2), 0.0, v)


def wall_potential_93_derivative(y2, eps_w: float) -> np.ndarray:
    """``dV/dy2`` of :func:`wall_potential_93`."""
    y2 = np.asarray(y2, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        u = 1.0 / (y2 + 1.0)
        d = 4.0 * np.pi * eps_w * (-(u**10) / 5.0 + u**4 / 2.0)
    d = np.where(y2 <= -1.0, -np.inf, d)
    return np.where(np.isposinf(y2), 0.0, d)


# --------------------------------------------------------------------------
# kernels for the convolution operators


@dataclass(frozen=True)
class KernelPart:
    """One support component of a kernel.

    ``evaluate`` maps Cartesian offsets of shape ``(P, 2)`` to values of
    shape ``(P, n_components)``. ``radial`` is set for radially symmetric
    scalar parts and is used to tune map lengths of unbounded patches.
    """

    support_kind: str
    support: dict
    evaluate: Callable[[np.ndarray], np.ndarray]
    radial: Callable[[np.ndarray], np.ndarray] | None = None


@dataclass(frozen=True)
class Kernel:
    name: str
    params: tuple
    parts: tuple[KernelPart, ...]
    n_components: int = 1
    odd: bool = False
    """Whether the kernel changes sign under point reflection."""

    def key(self) -> tuple:
        return (self.name, self.params)

    def __call__(self, points) -> np.ndarray:
        """Evaluate the summed kernel at offsets (points off every support give 0)."""
        pts = np.atleast_2d(np.asarray(points, float))
        return sum(part.evaluate(pts) * _in_support(part, pts)[:, None] for part in self.parts)


def _in_support(part: KernelPart, pts: np.ndarray) -> np.ndarray:
    r = np.hypot(pts[:, 0], pts[:, 1])
    s = part.support
    k = part.support_kind
    if k == "disk":
        return r < s["R"]
    if k in ("sphere-surface", "ring"):
        return np.isclose(r, s["R"])
    if k == "annulus-finite":
        return (r >= s["R_in"]) & (r < s["R_out"])
    if k == "annulus-exterior":
        return r >= s["R"]
    if k == "square":
        return np.all(np.abs(pts) <= s["half"], axis=1)
    raise ValueError(k)


def _col(v):
    return np.asarray(v, float)[:, None]


def _radius(pts):
    return np.hypot(pts[:, 0], pts[:, 1])


def hs_kernel(name: str, R: float = 0.5) -> Kernel:
    """Rosenfeld weights projected onto the ``(y1, y2)`` plane.

    ``w2`` and ``vw2`` live on the sphere surface (surface measure), ``w3``
    on the projected ball (disk support, value ``2 sqrt(R^2 - r^2)``). The
    remaining Rosenfeld weights are multiples of these.
    """
    sup = {"R": R}
    if name == "w2":
        part = KernelPart("sphere-surface", sup, lambda p: np.ones((p.shape[0], 1)))
        return Kernel("w2", (R,), (part,))
    if name == "vw2":
        part = KernelPart("sphere-surface", sup, lambda p: p / R)
        return Kernel("vw2", (R,), (part,), n_components=2, odd=True)
    if name == "w3":
        part = KernelPart(
            "disk", sup, lambda p: _col(phi2d_omega3(_radius(p), R)), lambda r: phi2d_omega3(r, R)
        )
        return Kernel("w3", (R,), (part,))
    raise ValueError(f"unknown hard-sphere kernel {name!r}")


def hd_kernel(name: str, R: float = 0.5, normalized: bool = False) -> Kernel:
    """Hard-disk weights in the plane.

    With ``normalized=False`` the vector and tensor weights are ``r`` and
    ``r (x) r`` on the circle of radius ``R``. With ``normalized=True`` they
    use the unit vector ``r / |r|`` instead.
    """
    sup = {"R": R}
    s = 1.0 / R if normalized else 1.0
    if name == "w2":
        part = KernelPart("ring", sup, lambda p: np.ones((p.shape[0], 1)))
        return Kernel("hd_w2", (R,), (part,))
    if name == "w3":
        part = KernelPart("disk", sup, lambda p: np.ones((p.shape[0], 1)), lambda r: np.ones_like(r))
        return Kernel("hd_w3", (R,), (part,))
    if name == "vw2":
        part = KernelPart("ring", sup, lambda p: p * s)
        return Kernel("hd_vw2", (R, normalized), (part,), n_components=2, odd=True)
    if name == "tw2":

        def tensor(p):
            q = p * s
            return np.column_stack([q[:, 0] ** 2, q[:, 0] * q[:, 1], q[:, 1] ** 2])

        part = KernelPart("ring", sup, tensor)
        return Kernel("hd_tw2", (R, normalized), (part,), n_components=3)
    raise ValueError(f"unknown hard-disk kernel {name!r}")


def attraction_kernel(r_c: float = 2.5) -> Kernel:
    """Projected mean-field attraction, split at the core radius ``r = 1``."""
    r_c = float(r_c)
    radial = lambda r: phi2d_attr(r, r_c)
    inner = KernelPart("disk", {"R": 1.0}, lambda p: _col(radial(_radius(p))), radial)
    # the outer branch is evaluated on the closed annulus so that quadrature
    # nodes on r = r_c take the interior limit instead of the truncated zero
    scale = 1.0 / energy_scale_ratio(r_c)
    branch = lambda r: scale * _attr_outer(np.asarray(r, dtype=float))
    if np.isinf(r_c):
        outer = KernelPart("annulus-exterior", {"R": 1.0}, lambda p: _col(branch(_radius(p))), branch)
    else:
        if not r_c > 1.0:
            raise ValueError(f"cutoff must exceed the core radius, got {r_c}")
        outer = KernelPart(
            "annulus-finite", {"R_in": 1.0, "R_out": r_c}, lambda p: _col(branch(_radius(p))), branch
        )
    return Kernel("attr", (r_c,), (inner, outer))


def gaussian_kernel(sigma: float, cutoff: float = 7.0) -> Kernel:
    """Gaussian pair repulsion truncated to the square ``|y_i| <= cutoff * sigma``."""
    half = cutoff * sigma
    radial = lambda r: gaussian_pair_kernel(r, sigma)
    part = KernelPart("square", {"half": half}, lambda p: _col(radial(_radius(p))), radial)
    return Kernel("gauss", (sigma, cutoff), (part,))
