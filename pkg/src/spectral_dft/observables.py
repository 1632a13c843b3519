"""Sum rules and force balances evaluated on converged profiles."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .kernels import wall_potential_93_derivative


class PartialWettingError(ValueError):
    """Young's equation has no solution for the given tensions."""


@dataclass
class SumRuleReport:
    """Contact theorem ``n(0) = beta p + beta int n dV/dy2``.

    ``relative_error`` is normalized by ``beta p``; ``contact_relative_error``
    by the contact density. The two agree for a hard wall and differ by
    ``n(0) / beta p`` (about 65 for the wall-liquid case) otherwise.
    """

    contact_density: float
    beta_pressure: float
    wall_term: float
    relative_error: float
    contact_relative_error: float

    def to_dict(self) -> dict:
        return asdict(self)


def _wall_derivative(model, y2) -> np.ndarray:
    if model.eps_w == 0:
        return np.zeros_like(np.asarray(y2, dtype=float))
    return wall_potential_93_derivative(y2, model.eps_w)


def contact_theorem_check(grid, density, model, pressure: float) -> SumRuleReport:
    """Evaluate the contact theorem on a planar wall profile.

    Parameters
    ----------
    grid : TensorGrid2D
        Planar half-space grid (``y2 >= 0``).
    density : ndarray
        Converged profile on ``grid``.
    model : ModelParams
        Supplies the temperature and the wall strength ``eps_w``.
    pressure : float
        Bulk pressure (energy units).
    """
    n = np.asarray(density, dtype=float)
    T = model.temperature
    bp = pressure / T
    n0 = float(n[np.argmin(grid.y2)])
    wall = float(grid.integrate(n * _wall_derivative(model, grid.y2))) / T
    err = n0 - bp - wall
    return SumRuleReport(n0, bp, wall, abs(err) / bp, abs(err) / n0)


def disjoining_pressure(grid, density, model, pressure: float) -> tuple[np.ndarray, np.ndarray]:
    """``Pi(y1) = -int n dV/dy2 dy2 + T n(y1, 0) - p`` on each ``y1`` node.

    Returns the ``y1`` nodes and ``Pi`` (in energy units).
    """
    n = np.asarray(density, dtype=float).reshape(grid.shape)
    y2 = grid.grid2.phys_nodes
    w2 = grid.grid2.weights
    dV = _wall_derivative(model, y2)
    i0 = np.argmin(y2)
    pi = -(n * dV[None, :]) @ w2 + model.temperature * n[:, i0] - pressure
    return grid.grid1.phys_nodes, pi


@dataclass
class ForceBalance:
    relative_error: float
    delta_pi: float
    plateaus: tuple[float, float]
    integral: float

    def to_dict(self) -> dict:
        return asdict(self)


def plateau_values(y1, pi, fraction: float = 0.1) -> tuple[float, float]:
    """Mean of ``Pi`` over the outermost ``fraction`` of nodes on each side."""
    order = np.argsort(y1)
    k = max(1, int(round(fraction * len(y1))))
    return float(np.mean(pi[order[:k]])), float(np.mean(pi[order[-k:]]))


def normal_force_balance(y1, weights, pi, gamma_lv: float, theta: float) -> ForceBalance:
    """Relative error of ``int Pi dy1 = -gamma_lv sin(theta)``.

    Only nodes with ``|Pi| > 2 dPi`` contribute, where ``dPi`` is the larger
    far-field plateau magnitude.
    """
    scale = gamma_lv * np.sin(theta)
    if abs(scale) < 1e-300:
        raise ValueError("gamma_lv sin(theta) vanishes; the force balance is undefined")
    left, right = plateau_values(y1, pi)
    dpi = max(abs(left), abs(right))
    mask = np.abs(pi) > 2.0 * dpi
    integral = float(np.dot(np.asarray(weights)[mask], np.asarray(pi)[mask]))
    return ForceBalance(abs(1.0 + integral / scale), dpi, (left, right), integral)


def young_angle(gamma_wv: float, gamma_wl: float, gamma_lv: float) -> float:
    """Contact angle from Young's equation, in radians."""
    if gamma_lv <= 0:
        raise ValueError("gamma_lv must be positive")
    c = (gamma_wv - gamma_wl) / gamma_lv
    if abs(c) > 1.0 + 1e-14:
        raise PartialWettingError(f"cos(theta) = {c:.6g} lies outside [-1, 1]: no partial wetting")
    return float(np.arccos(np.clip(c, -1.0, 1.0)))
