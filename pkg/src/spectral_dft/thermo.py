"""Model parameters and bulk (uniform-density) thermodynamics.

The uniform free-energy density is implemented once in :func:`free_energy_density`
from the same functional used by the inhomogeneous solver; chemical
potential and pressure follow by differentiating it analytically through
the weighted-density chain rule.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.optimize import brentq

from .fmt import hd_reduced, hs_reduced, uniform_weighted_densities
from .kernels import energy_scale_ratio

ATTRACTION_INTEGRAL = -32.0 * np.pi / 9.0
"""Integral of the attractive tail over space, in units of eps_D."""


@dataclass(frozen=True)
class Species:
    radius: float = 0.5
    kernel_role: str = "hard-sphere"
    gaussian_alpha: float | None = None

    def __post_init__(self) -> None:
        if not self.radius > 0:
            raise ValueError("species radius must be positive")
        if self.kernel_role not in ("hard-sphere", "hard-disk", "gaussian-soft"):
            raise ValueError(f"unknown kernel role {self.kernel_role!r}")


@dataclass(frozen=True)
class ModelParams:
    """Dimensionless model parameters.

    Attributes
    ----------
    temperature : float
        ``k_B T / eps_D``. Pure hard-sphere runs use 1.
    fmt : {"hs", "hd", None}
        Hard-core functional.
    r_c : float or None
        Cutoff of the mean-field attraction; ``None`` disables attraction and
        ``inf`` means no cutoff.
    """

    temperature: float = 1.0
    fmt: str | None = "hs"
    r_c: float | None = None
    R: float = 0.5
    eps_w: float = 0.0
    friction: float = 1.0
    hd_normalized: bool = False
    species: tuple[Species, ...] = field(default_factory=lambda: (Species(),))

    def __post_init__(self) -> None:
        if not self.temperature > 0:
            raise ValueError(f"temperature must be positive, got {self.temperature}")
        if self.fmt not in ("hs", "hd", None):
            raise ValueError(f"unknown functional {self.fmt!r}")
        if len({s.radius for s in self.species}) > 1:
            raise ValueError("all species must share one radius")

    @property
    def attraction(self) -> bool:
        return self.r_c is not None

    @property
    def energy_scale_ratio(self) -> float:
        return 1.0 if self.r_c is None else energy_scale_ratio(self.r_c)

    @property
    def mean_field_a(self) -> float:
        return ATTRACTION_INTEGRAL if self.attraction else 0.0

    @property
    def max_density(self) -> float:
        """Density at which the uniform packing fraction reaches 1."""
        if self.fmt == "hs":
            return 1.0 / (4.0 / 3.0 * np.pi * self.R**3)
        if self.fmt == "hd":
            return 1.0 / (np.pi * self.R**2)
        return np.inf


def _excess_derivatives(n, p: ModelParams):
    """Uniform excess density Upsilon(n) and its first two n-derivatives."""
    n = np.asarray(n, dtype=float)
    if p.fmt is None:
        z = np.zeros_like(n)
        return z, z, z
    R = p.R
    if p.fmt == "hs":
        w = uniform_weighted_densities(n, "hs", R)
        c2, c3 = 4.0 * np.pi * R**2, 4.0 / 3.0 * np.pi * R**3
        v = np.zeros((1,) + n.shape)
        phi, (g2, g3, _), h = hs_reduced(w["n2"], w["n3"], v, R, order=2)
        d1 = g2 * c2 + g3 * c3
        d2 = h["22"] * c2**2 + 2.0 * h["23"] * c2 * c3 + h["33"] * c3**2
        return phi, d1, d2
    w = uniform_weighted_densities(n, "hd", R, p.hd_normalized)
    c2, c3 = 2.0 * np.pi * R, np.pi * R**2
    ct = np.pi * R if p.hd_normalized else np.pi * R**3
    v = np.zeros((2,) + n.shape)
    t = np.stack([w["t"], np.zeros_like(n), w["t"]])
    phi, (g2, g3, _, gt), h = hd_reduced(w["n2"], w["n3"], v, t, R, order=2)
    d1 = g2 * c2 + g3 * c3 + (gt[0] + gt[2]) * ct
    d2 = (
        h["22"] * c2**2
        + 2.0 * h["23"] * c2 * c3
        + h["33"] * c3**2
        + 2.0 * (h["3t"][0] + h["3t"][2]) * c3 * ct
        + (h["tt"][0] + h["tt"][2]) * ct**2
    )
    return phi, d1, d2


def free_energy_density(n, p: ModelParams) -> np.ndarray:
    """Uniform Helmholtz free-energy density ``f(n)``."""
    n = np.asarray(n, dtype=float)
    T = p.temperature
    with np.errstate(divide="ignore", invalid="ignore"):
        ideal = np.where(n > 0, n * (np.log(n) - 1.0), 0.0)
    ex, _, _ = _excess_derivatives(n, p)
    return T * (ideal + ex) + 0.5 * p.mean_field_a * n**2


def chemical_potential(n, p: ModelParams) -> np.ndarray:
    """``df/dn`` (the ideal part absorbs the thermal wavelength)."""
    n = np.asarray(n, dtype=float)
    _, d1, _ = _excess_derivatives(n, p)
    with np.errstate(divide="ignore"):
        return p.temperature * (np.log(n) + d1) + p.mean_field_a * n


def dmu_dn(n, p: ModelParams) -> np.ndarray:
    n = np.asarray(n, dtype=float)
    _, _, d2 = _excess_derivatives(n, p)
    return p.temperature * (1.0 / n + d2) + p.mean_field_a


def pressure(n, p: ModelParams) -> np.ndarray:
    """``p = n mu - f``."""
    n = np.asarray(n, dtype=float)
    return n * chemical_potential(n, p) - free_energy_density(n, p)


def grand_potential_density(n, p: ModelParams, mu: float | None = None) -> np.ndarray:
    """``f - mu n``; equals ``-p`` when ``mu`` is the density's own potential."""
    n = np.asarray(n, dtype=float)
    mu = chemical_potential(n, p) if mu is None else mu
    return free_energy_density(n, p) - mu * n


def bulk_thermodynamics(p: ModelParams, *, n=None, mu=None, branch: str = "any") -> dict:
    """Pressure, chemical potential and grand-potential density of a bulk phase.

    Exactly one of ``n`` and ``mu`` must be given. For ``mu`` the density is
    found by bracketed root finding on the requested branch.
    """
    if (n is None) == (mu is None):
        raise ValueError("give exactly one of n and mu")
    if n is None:
        n = density_from_mu(mu, p, branch=branch)
    if not 0 < n < p.max_density:
        raise ValueError(f"density {n} outside (0, {p.max_density})")
    m = float(chemical_potential(n, p))
    pr = float(pressure(n, p))
    return {"n": float(n), "mu": m, "pressure": pr, "omega": -pr, "beta_pressure": pr / p.temperature}


def spinodals(p: ModelParams) -> list[float]:
    """Densities where ``dmu/dn`` changes sign, in ascending order."""
    return list(_spinodals(p))


@lru_cache(maxsize=64)
def _spinodals(p: ModelParams) -> tuple[float, ...]:
    nmax = p.max_density
    top = nmax * (1.0 - 1e-9) if np.isfinite(nmax) else 1e3
    grid = np.geomspace(1e-12, top, 4000)
    vals = dmu_dn(grid, p)
    out = []
    for i in np.flatnonzero(np.sign(vals[:-1]) != np.sign(vals[1:])):
        out.append(brentq(lambda x: float(dmu_dn(x, p)), grid[i], grid[i + 1], xtol=1e-15, rtol=1e-15))
    return tuple(out)


def density_from_mu(mu: float, p: ModelParams, branch: str = "any") -> float:
    """Invert ``mu(n)`` on a monotone branch.

    Parameters
    ----------
    branch : {"any", "vapor", "liquid"}
        With two stable branches ``any`` requires a unique root.
    """
    if p.fmt is None and not p.attraction:
        return float(np.exp(mu / p.temperature))
    nmax = p.max_density
    top = nmax * (1.0 - 1e-12) if np.isfinite(nmax) else 1e6
    sp = spinodals(p)
    if len(sp) == 0:
        brackets = {"any": (1e-300, top)}
    elif len(sp) == 2:
        brackets = {"vapor": (1e-300, sp[0]), "liquid": (sp[1], top)}
    else:
        raise ValueError(f"unexpected spinodal structure {sp}")
    f = lambda x: float(chemical_potential(x, p)) - mu
    roots = {}
    for name, (a, b) in brackets.items():
        fa, fb = f(a), f(b)
        if fa * fb <= 0:
            roots[name] = brentq(f, a, b, xtol=1e-300, rtol=1e-15, maxiter=500)
    if branch == "any":
        if len(roots) != 1:
            found = ", ".join(f"{k}={v:.6g}" for k, v in roots.items()) or "none"
            raise ValueError(
                f"mu={mu} has {len(roots)} stable roots ({found}) in brackets {brackets}"
            )
        return next(iter(roots.values()))
    if branch not in roots:
        raise ValueError(f"no {branch} root for mu={mu} in brackets {brackets}")
    return roots[branch]


class NoCoexistenceError(ValueError):
    pass


def coexistence(p: ModelParams) -> dict:
    """Vapor and liquid densities with equal pressure and chemical potential."""
    sp = spinodals(p)
    if len(sp) != 2:
        raise NoCoexistenceError(
            f"no liquid-vapor coexistence at temperature {p.temperature} (above critical)"
        )
    mu_hi = float(chemical_potential(sp[0], p))
    mu_lo = float(chemical_potential(sp[1], p))

    def dp(mu):
        nv = density_from_mu(mu, p, "vapor")
        nl = density_from_mu(mu, p, "liquid")
        return float(pressure(nl, p) - pressure(nv, p))

    eps = 1e-13 * max(1.0, abs(mu_lo), abs(mu_hi))
    mu = brentq(dp, mu_lo + eps, mu_hi - eps, xtol=1e-15, rtol=1e-15, maxiter=500)
    nv = density_from_mu(mu, p, "vapor")
    nl = density_from_mu(mu, p, "liquid")
    return {
        "mu_sat": float(mu),
        "n_vap": float(nv),
        "n_liq": float(nl),
        "pressure": float(pressure(nv, p)),
    }
