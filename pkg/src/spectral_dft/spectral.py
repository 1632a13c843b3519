"""One-dimensional pseudospectral primitives.

Chebyshev Gauss-Lobatto and periodic collocation grids, barycentric
interpolation, Clenshaw-Curtis quadrature, differentiation matrices and the
algebraic maps that send the computational interval onto bounded,
semi-infinite and infinite physical intervals.

Chebyshev nodes follow ``x_n = cos(pi n / N)`` and are therefore stored in
descending order. Nothing in this module re-sorts them.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

SNAP_TOL = 1e-14
"""Targets closer than this to a node (computational units) snap to it."""

_DOMAIN_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class Grid1D:
    """Collocation grid on the computational interval.

    Attributes
    ----------
    kind : {"chebyshev-lobatto", "periodic-equispaced"}
    nodes : ndarray
        Computational coordinates, ``[-1, 1]`` (descending) for Chebyshev and
        ``[0, 1)`` for periodic grids.
    bary_weights : ndarray or None
        Barycentric weights (Chebyshev only).
    quad_weights : ndarray
        Computational-domain quadrature weights.
    """

    kind: str
    nodes: np.ndarray
    bary_weights: np.ndarray | None
    quad_weights: np.ndarray

    @property
    def n_points(self) -> int:
        return self.nodes.size

    @property
    def degree(self) -> int:
        return self.nodes.size - 1


def cheb_lobatto_grid(n: int) -> Grid1D:
    """Chebyshev Gauss-Lobatto grid of polynomial degree ``n``.

    Parameters
    ----------
    n : int
        Degree ``N``; the grid has ``N + 1`` nodes ``cos(pi j / N)``.

    Returns
    -------
    Grid1D
        Nodes, barycentric weights ``(-1)^j d_j`` with ``d_0 = d_N = 1/2`` and
        Clenshaw-Curtis weights.

    Examples
    --------
    >>> g = cheb_lobatto_grid(2)
    >>> g.quad_weights
    array([0.33333333, 1.33333333, 0.33333333])
    """
    n = int(n)
    if n < 1:
        raise ValueError(f"Chebyshev grid needs degree n >= 1, got {n}")
    j = np.arange(n + 1)
    t = np.pi * j / n
    nodes = np.cos(t)
    # exact zeros and symmetry for the middle node
    if n % 2 == 0:
        nodes[n // 2] = 0.0
    d = np.ones(n + 1)
    d[0] = d[-1] = 0.5
    bary = (-1.0) ** j * d
    return Grid1D("chebyshev-lobatto", nodes, bary, _clenshaw_curtis(n, t, d))


def _clenshaw_curtis(n: int, t: np.ndarray, d: np.ndarray) -> np.ndarray:
    if n == 1:
        return np.array([1.0, 1.0])
    acc = np.ones_like(t)
    if n % 2 == 0:
        kmax = (n - 2) // 2
        acc -= np.cos(n * t) / (n * n - 1.0)
    else:
        kmax = (n - 1) // 2
    for k in range(1, kmax + 1):
        acc -= 2.0 * np.cos(2 * k * t) / (4.0 * k * k - 1.0)
    return 2.0 * d / n * acc


def periodic_grid(n: int, period: float = 1.0) -> Grid1D:
    """Equispaced periodic grid with nodes ``k/n`` on ``[0, 1)``.

    The quadrature weights already include the period length, so integrating
    a constant ``c`` returns ``c * period``.
    """
    n = int(n)
    if n < 1:
        raise ValueError(f"periodic grid needs n >= 1 points, got {n}")
    nodes = np.arange(n) / n
    return Grid1D("periodic-equispaced", nodes, None, np.full(n, period / n))


# --------------------------------------------------------------------------
# maps


@dataclass(frozen=True)
class DomainMap1D:
    """Monotone map from computational to physical coordinates.

    Supported kinds and parameters:

    ``affine``  (a, b)        y = a + (b - a)(x + 1)/2
    ``identity-scale`` (scale)  y = scale * x
    ``A1``      (L)           y = L x / sqrt(1 - x^2), whole line
    ``A2``      (L, origin)   y = origin + L (1 + x)/(1 - x), half line
    ``A2F``     (a, b, L)     y = a + (b - a)(e/2)(1 + x)/(1 - x + e),
                              e = 2L / ((b - a) - 2L)
    ``periodic`` (a, period)  y = a + period * x on [0, 1)
    """

    kind: str
    params: tuple[tuple[str, float], ...]

    def __post_init__(self) -> None:
        p = self.p
        if self.kind == "affine":
            if not p["b"] > p["a"]:
                raise ValueError(f"affine map needs b > a, got a={p['a']}, b={p['b']}")
        elif self.kind == "identity-scale":
            if not p["scale"] > 0:
                raise ValueError("identity-scale map needs scale > 0")
        elif self.kind == "A1":
            if not p["L"] > 0:
                raise ValueError(f"A1 map needs L > 0, got {p['L']}")
        elif self.kind == "A2":
            if not p["L"] > 0:
                raise ValueError(f"A2 map needs L > 0, got {p['L']}")
        elif self.kind == "A2F":
            a, b, L = p["a"], p["b"], p["L"]
            if not b > a:
                raise ValueError(f"A2F map needs b > a, got a={a}, b={b}")
            if not 0 < L < (b - a) / 2:
                raise ValueError(f"A2F map needs 0 < L < (b-a)/2, got L={L}")
        elif self.kind == "periodic":
            if not p["period"] > 0:
                raise ValueError("periodic map needs period > 0")
        else:
            raise ValueError(f"unknown map kind {self.kind!r}")

    @cached_property
    def p(self) -> dict[str, float]:
        return dict(self.params)

    @property
    def bounds(self) -> tuple[float, float]:
        """Physical images of the computational endpoints (ascending)."""
        p = self.p
        if self.kind == "affine":
            return p["a"], p["b"]
        if self.kind == "identity-scale":
            return -p["scale"], p["scale"]
        if self.kind == "A1":
            return -np.inf, np.inf
        if self.kind == "A2":
            return p["origin"], np.inf
        if self.kind == "A2F":
            return p["a"], p["b"]
        return p["a"], p["a"] + p["period"]

    @property
    def comp_bounds(self) -> tuple[float, float]:
        return (0.0, 1.0) if self.kind == "periodic" else (-1.0, 1.0)

    def forward(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        p = self.p
        with np.errstate(divide="ignore", invalid="ignore"):
            if self.kind == "affine":
                return p["a"] + (p["b"] - p["a"]) * (x + 1.0) / 2.0
            if self.kind == "identity-scale":
                return p["scale"] * x
            if self.kind == "A1":
                y = p["L"] * x / np.sqrt(1.0 - x * x)
                return np.where(np.abs(x) >= 1.0, np.sign(x) * np.inf, y)
            if self.kind == "A2":
                y = p["origin"] + p["L"] * (1.0 + x) / (1.0 - x)
                return np.where(x >= 1.0, np.inf, y)
            if self.kind == "A2F":
                a, b = p["a"], p["b"]
                e = self._skew
                return a + (b - a) * (e / 2.0) * (1.0 + x) / (1.0 - x + e)
            return p["a"] + p["period"] * x

    def derivative(self, x) -> np.ndarray:
        """``dy/dx``; ``+inf`` at singular endpoints of unbounded maps."""
        x = np.asarray(x, dtype=float)
        p = self.p
        with np.errstate(divide="ignore", invalid="ignore"):
            if self.kind == "affine":
                return np.full_like(x, (p["b"] - p["a"]) / 2.0)
            if self.kind == "identity-scale":
                return np.full_like(x, p["scale"])
            if self.kind == "A1":
                d = p["L"] / (1.0 - x * x) ** 1.5
                return np.where(np.abs(x) >= 1.0, np.inf, d)
            if self.kind == "A2":
                d = 2.0 * p["L"] / (1.0 - x) ** 2
                return np.where(x >= 1.0, np.inf, d)
            if self.kind == "A2F":
                e = self._skew
                return (p["b"] - p["a"]) * (e / 2.0) * (2.0 + e) / (1.0 - x + e) ** 2
            return np.full_like(x, p["period"])

    def inverse(self, y) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        p = self.p
        with np.errstate(divide="ignore", invalid="ignore"):
            if self.kind == "affine":
                return 2.0 * (y - p["a"]) / (p["b"] - p["a"]) - 1.0
            if self.kind == "identity-scale":
                return y / p["scale"]
            if self.kind == "A1":
                x = y / np.sqrt(p["L"] ** 2 + y * y)
                return np.where(np.isinf(y), np.sign(y), x)
            if self.kind == "A2":
                s = y - p["origin"]
                x = (s - p["L"]) / (s + p["L"])
                return np.where(np.isposinf(y), 1.0, x)
            if self.kind == "A2F":
                e = self._skew
                s = (y - p["a"]) / ((p["b"] - p["a"]) * e / 2.0)
                return (s * (1.0 + e) - 1.0) / (1.0 + s)
            return (y - p["a"]) / p["period"]

    @cached_property
    def _skew(self) -> float:
        p = self.p
        return 2.0 * p["L"] / ((p["b"] - p["a"]) - 2.0 * p["L"])

    def signature(self) -> tuple:
        return (self.kind, self.params)


_MAP_PARAMS = {
    "affine": ("a", "b"),
    "identity-scale": ("scale",),
    "A1": ("L",),
    "A2": ("L", "origin"),
    "A2F": ("a", "b", "L"),
    "periodic": ("a", "period"),
}
_MAP_DEFAULTS = {"A2": {"origin": 0.0}, "periodic": {"a": 0.0}}


def make_map(kind: str, **params: float) -> DomainMap1D:
    """Build a :class:`DomainMap1D`, validating parameter names and ranges.

    Examples
    --------
    >>> float(make_map("A2", L=2.0).forward(0.0))
    2.0
    """
    if kind not in _MAP_PARAMS:
        raise ValueError(f"unknown map kind {kind!r}; choose from {sorted(_MAP_PARAMS)}")
    names = _MAP_PARAMS[kind]
    merged = {**_MAP_DEFAULTS.get(kind, {}), **params}
    unknown = set(merged) - set(names)
    missing = set(names) - set(merged)
    if unknown or missing:
        raise ValueError(
            f"map {kind!r} expects parameters {names}; "
            f"missing {sorted(missing)}, unknown {sorted(unknown)}"
        )
    return DomainMap1D(kind, tuple((k, float(merged[k])) for k in names))


# --------------------------------------------------------------------------
# mapped grids


@dataclass(frozen=True, eq=False)
class MappedGrid1D:
    """A :class:`Grid1D` composed with a :class:`DomainMap1D`.

    ``phys_quad_weights`` is the raw product of computational weights and
    map derivative and is ``inf`` at singular endpoints. ``weights`` applies
    the ``0 * inf = 0`` convention used for decaying (excess) integrands.
    """

    grid: Grid1D
    map: DomainMap1D
    phys_nodes: np.ndarray = field(init=False)
    jacobian: np.ndarray = field(init=False)
    phys_quad_weights: np.ndarray = field(init=False)

    def __post_init__(self) -> None:
        periodic = self.grid.kind == "periodic-equispaced"
        if periodic != (self.map.kind == "periodic"):
            raise ValueError("periodic grids require a periodic map and vice versa")
        jac = self.map.derivative(self.grid.nodes)
        object.__setattr__(self, "phys_nodes", self.map.forward(self.grid.nodes))
        object.__setattr__(self, "jacobian", jac)
        if periodic:
            n = self.grid.n_points
            pw = np.full(n, self.map.p["period"] / n)
        else:
            pw = self.grid.quad_weights * jac
        object.__setattr__(self, "phys_quad_weights", pw)

    @property
    def n_points(self) -> int:
        return self.grid.n_points

    @property
    def kind(self) -> str:
        return self.grid.kind

    @cached_property
    def weights(self) -> np.ndarray:
        """Quadrature weights with infinite entries set to zero."""
        w = self.phys_quad_weights.copy()
        w[~np.isfinite(w)] = 0.0
        return w

    @cached_property
    def finite_mask(self) -> np.ndarray:
        return np.isfinite(self.phys_nodes)

    def signature(self) -> tuple:
        return (self.grid.kind, self.grid.n_points, self.map.signature())

    def to_computational(self, targets, *, label: str = "target") -> np.ndarray:
        """Map physical targets to computational coordinates, checking range."""
        y = np.atleast_1d(np.asarray(targets, dtype=float))
        if self.kind == "periodic-equispaced":
            p = self.map.p
            return np.mod((y - p["a"]) / p["period"], 1.0)
        if np.any(np.isnan(y)):
            raise ValueError(f"{label} contains NaN")
        x = self.map.inverse(y)
        lo, hi = self.map.bounds
        bad = (x < -1.0 - _DOMAIN_TOL) | (x > 1.0 + _DOMAIN_TOL) | np.isnan(x)
        if np.any(bad):
            i = int(np.flatnonzero(bad)[0])
            raise ValueError(
                f"{label} {y[i]!r} (index {i}) lies outside the domain [{lo}, {hi}]"
            )
        return np.clip(x, -1.0, 1.0)

    def interpolation_matrix(self, targets) -> np.ndarray:
        return interpolation_matrix(self, targets)

    def differentiation_matrix(self) -> np.ndarray:
        return differentiation_matrix(self)

    def integrate(self, values) -> float:
        return quadrature(values, self)


def mapped_grid(n_points: int, kind: str, **params: float) -> MappedGrid1D:
    """Convenience constructor taking a point count.

    ``kind="periodic"`` builds an equispaced periodic grid; every other kind
    builds a Chebyshev grid of degree ``n_points - 1``.
    """
    m = make_map(kind, **params)
    if kind == "periodic":
        g = periodic_grid(n_points, m.p["period"])
    else:
        if n_points < 2:
            raise ValueError(f"Chebyshev grids need at least 2 points, got {n_points}")
        g = cheb_lobatto_grid(n_points - 1)
    return MappedGrid1D(g, m)


# --------------------------------------------------------------------------
# interpolation, quadrature, differentiation


def barycentric_matrix(nodes: np.ndarray, weights: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Second-form barycentric interpolation matrix at computational points."""
    x = np.asarray(x, dtype=float).reshape(-1)
    diff = x[:, None] - nodes[None, :]
    exact = np.abs(diff) < SNAP_TOL
    hit = exact.any(axis=1)
    diff[exact] = 1.0
    c = weights[None, :] / diff
    out = c / c.sum(axis=1, keepdims=True)
    if hit.any():
        rows = np.flatnonzero(hit)
        out[rows] = 0.0
        out[rows, np.argmax(exact[rows], axis=1)] = 1.0
    return out


def fourier_interpolation_matrix(n: int, x: np.ndarray) -> np.ndarray:
    """Trigonometric interpolation on ``n`` equispaced nodes ``k/n``."""
    x = np.asarray(x, dtype=float).reshape(-1)
    nodes = np.arange(n) / n
    h = np.pi * (x[:, None] - nodes[None, :])
    s = np.sin(h)
    exact = np.abs(s) < SNAP_TOL
    s[exact] = 1.0
    if n % 2 == 1:
        out = np.sin(n * h) / (n * s)
    else:
        out = np.sin(n * h) * np.cos(h) / (n * s)
    hit = exact.any(axis=1)
    if hit.any():
        rows = np.flatnonzero(hit)
        out[rows] = 0.0
        out[rows, np.argmax(exact[rows], axis=1)] = 1.0
    return out


def interpolation_matrix(source: MappedGrid1D, targets) -> np.ndarray:
    """Dense interpolation matrix from nodal values to physical targets.

    Parameters
    ----------
    source : MappedGrid1D
    targets : array_like
        Physical points, which may include ``+-inf`` for unbounded maps.

    Returns
    -------
    ndarray, shape (len(targets), source.n_points)

    Raises
    ------
    ValueError
        If a target lies outside the mapped interval.
    """
    x = source.to_computational(targets)
    if source.kind == "periodic-equispaced":
        return fourier_interpolation_matrix(source.n_points, x)
    return barycentric_matrix(source.grid.nodes, source.grid.bary_weights, x)


def quadrature(values, grid: MappedGrid1D) -> float:
    """Integrate nodal ``values`` with the physical quadrature weights.

    Summands at nodes with infinite map derivative are zero when the value
    there is zero and an error otherwise.
    """
    f = np.asarray(values, dtype=float)
    if f.shape != grid.phys_nodes.shape:
        raise ValueError(f"expected {grid.n_points} values, got shape {f.shape}")
    w = grid.phys_quad_weights
    inf_w = ~np.isfinite(w)
    if np.any(inf_w & (f != 0.0)) or not np.all(np.isfinite(f)):
        bad = np.flatnonzero((inf_w & (f != 0.0)) | ~np.isfinite(f))
        raise ValueError(
            f"non-finite weighted summand at node(s) {bad.tolist()} "
            f"(y = {grid.phys_nodes[bad].tolist()})"
        )
    return float(np.dot(np.where(inf_w, 0.0, w), f))


def cheb_diff_matrix(nodes: np.ndarray) -> np.ndarray:
    """Chebyshev collocation derivative on Gauss-Lobatto nodes (descending)."""
    n = nodes.size - 1
    if n == 0:
        return np.zeros((1, 1))
    c = np.ones(n + 1)
    c[0] = c[-1] = 2.0
    c *= (-1.0) ** np.arange(n + 1)
    dx = nodes[:, None] - nodes[None, :]
    D = np.outer(c, 1.0 / c) / (dx + np.eye(n + 1))
    D -= np.diag(D.sum(axis=1))
    return D


def fourier_diff_matrix(n: int) -> np.ndarray:
    """Periodic spectral derivative on ``n`` nodes of ``[0, 2 pi)``."""
    k = np.arange(n)
    h = 2.0 * np.pi / n
    i = k[:, None] - k[None, :]
    D = np.zeros((n, n))
    off = i != 0
    if n % 2 == 0:
        D[off] = 0.5 * (-1.0) ** i[off] / np.tan(i[off] * h / 2.0)
    else:
        D[off] = 0.5 * (-1.0) ** i[off] / np.sin(i[off] * h / 2.0)
    return D


def differentiation_matrix(grid: MappedGrid1D | Grid1D) -> np.ndarray:
    """Physical-domain differentiation matrix via the map chain rule.

    Rows at nodes with infinite map derivative are zero.
    """
    if isinstance(grid, Grid1D):
        if grid.kind == "periodic-equispaced":
            return fourier_diff_matrix(grid.n_points) * 2.0 * np.pi
        return cheb_diff_matrix(grid.nodes)
    if grid.kind == "periodic-equispaced":
        if grid.map.kind != "periodic":
            raise ValueError("periodic grid paired with non-periodic map")
        return fourier_diff_matrix(grid.n_points) * (2.0 * np.pi / grid.map.p["period"])
    if grid.map.kind == "periodic":
        raise ValueError("Chebyshev grid paired with periodic map")
    D = cheb_diff_matrix(grid.grid.nodes)
    with np.errstate(divide="ignore"):
        scale = np.where(np.isfinite(grid.jacobian), 1.0 / grid.jacobian, 0.0)
    return scale[:, None] * D
