"""Two-dimensional grids and the shape library used by the convolutions.

Density grids are tensor products of mapped 1D grids with block ordering
(``x1`` outer, ``x2`` inner). Planar problems that are invariant in ``y1``
use a tensor grid without a first factor. Weighted densities live on a
composite grid made of a strip ``y2 in [-1/2, 1/2]`` and a half-space shifted
up by 1/2, so that the kink of the weighted densities at ``y2 = 1/2`` falls
on a grid line.

Shapes discretize kernel supports (disks, annuli, projected spheres) and
their intersections with the shifted half-space ``{y2 >= -h}``. All shapes
are given in Cartesian coordinates relative to the kernel centre.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .spectral import (
    MappedGrid1D,
    cheb_lobatto_grid,
    differentiation_matrix,
    mapped_grid,
)

# --------------------------------------------------------------------------
# embeddings and tensor grids


@dataclass(frozen=True)
class CartesianEmbedding:
    """Map from intermediate coordinates ``(u1, u2)`` to Cartesian ``(y1, y2)``.

    Kinds
    -----
    ``skewed``  (alpha)  y1 = u1 + cos(alpha) u2, y2 = sin(alpha) u2
    ``polar``            (u1, u2) = (r, phi)
    ``spherical-projection`` (R, measure)
        (u1, u2) = (theta, psi), y = (R cos psi sin theta, R cos theta).
        ``measure="disk"`` uses the area Jacobian R^2 sin^2 theta sin psi;
        ``measure="surface"`` uses the sphere surface element R^2 sin theta.
    """

    kind: str = "skewed"
    alpha: float = np.pi / 2
    R: float = 1.0
    measure: str = "disk"

    def forward(self, u1, u2) -> tuple[np.ndarray, np.ndarray]:
        u1 = np.asarray(u1, dtype=float)
        u2 = np.asarray(u2, dtype=float)
        if self.kind == "skewed":
            if self.alpha == np.pi / 2:
                return u1, u2
            return u1 + np.cos(self.alpha) * u2, np.sin(self.alpha) * u2
        if self.kind == "polar":
            return u1 * np.cos(u2), u1 * np.sin(u2)
        if self.kind == "spherical-projection":
            return self.R * np.cos(u2) * np.sin(u1), self.R * np.cos(u1)
        raise ValueError(f"unknown embedding {self.kind!r}")

    def inverse(self, y1, y2) -> tuple[np.ndarray, np.ndarray]:
        if self.kind != "skewed":
            raise ValueError("only skewed embeddings are inverted")
        if self.alpha == np.pi / 2:
            return np.asarray(y1, float), np.asarray(y2, float)
        s, c = np.sin(self.alpha), np.cos(self.alpha)
        u2 = np.asarray(y2, float) / s
        with np.errstate(invalid="ignore"):
            u1 = np.asarray(y1, float) - c * u2
        return u1, u2

    def weight_factor(self, u1, u2) -> np.ndarray:
        u1 = np.asarray(u1, dtype=float)
        u2 = np.asarray(u2, dtype=float)
        if self.kind == "skewed":
            return np.full(np.broadcast(u1, u2).shape, np.sin(self.alpha))
        if self.kind == "polar":
            return np.abs(u1) * np.ones_like(u2)
        if self.measure == "surface":
            return self.R**2 * np.sin(u1) * np.ones_like(u2)
        return self.R**2 * np.sin(u1) ** 2 * np.abs(np.sin(u2))


IDENTITY = CartesianEmbedding()


@dataclass(frozen=True, eq=False)
class TensorGrid2D:
    """Tensor product grid in block ordering (``x1`` outer, ``x2`` inner).

    ``grid1=None`` denotes a planar grid whose functions do not depend on
    ``y1``; its points sit at ``y1 = 0`` and its weights are per unit length.
    """

    grid1: MappedGrid1D | None
    grid2: MappedGrid1D
    embedding: CartesianEmbedding = IDENTITY

    @property
    def planar(self) -> bool:
        return self.grid1 is None

    @property
    def n1(self) -> int:
        return 1 if self.grid1 is None else self.grid1.n_points

    @property
    def n2(self) -> int:
        return self.grid2.n_points

    @property
    def n_points(self) -> int:
        return self.n1 * self.n2

    @property
    def shape(self) -> tuple[int, int]:
        return self.n1, self.n2

    @cached_property
    def points(self) -> np.ndarray:
        u2 = np.tile(self.grid2.phys_nodes, self.n1)
        if self.grid1 is None:
            u1 = np.zeros_like(u2)
        else:
            u1 = np.repeat(self.grid1.phys_nodes, self.n2)
        y1, y2 = self.embedding.forward(u1, u2)
        # keep exact infinities and avoid inf - inf artefacts of the embedding
        return np.column_stack([np.where(np.isnan(y1), u1, y1), y2])

    @property
    def y1(self) -> np.ndarray:
        return self.points[:, 0]

    @property
    def y2(self) -> np.ndarray:
        return self.points[:, 1]

    @cached_property
    def weights(self) -> np.ndarray:
        """Quadrature weights (zero at nodes with infinite Jacobian)."""
        w2 = self.grid2.weights
        if self.grid1 is None:
            return w2.copy()
        w = np.kron(self.grid1.weights, w2)
        return w * self.embedding.weight_factor(np.zeros(1), np.zeros(1))[0]

    @cached_property
    def finite_mask(self) -> np.ndarray:
        return np.all(np.isfinite(self.points), axis=1)

    def signature(self) -> tuple:
        g1 = None if self.grid1 is None else self.grid1.signature()
        emb = (self.embedding.kind, self.embedding.alpha)
        return ("tensor", g1, self.grid2.signature(), emb)

    def integrate(self, values) -> float:
        return float(np.dot(self.weights, values))

    def interp_factors(self, points) -> tuple[np.ndarray | None, np.ndarray]:
        """1D interpolation factors ``(A1, A2)`` for Cartesian points."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        u1, u2 = self.embedding.inverse(pts[:, 0], pts[:, 1])
        A2 = self.grid2.interpolation_matrix(u2)
        if self.grid1 is None:
            return None, A2
        return self.grid1.interpolation_matrix(u1), A2

    def interpolation_matrix(self, points) -> np.ndarray:
        A1, A2 = self.interp_factors(points)
        if A1 is None:
            return A2
        return (A1[:, :, None] * A2[:, None, :]).reshape(A2.shape[0], -1)

    @cached_property
    def diff_matrices(self) -> tuple[np.ndarray, np.ndarray]:
        """Cartesian derivative matrices ``(d/dy1, d/dy2)``."""
        d2 = differentiation_matrix(self.grid2)
        if self.grid1 is None:
            return np.zeros((self.n2, self.n2)), d2
        d1 = differentiation_matrix(self.grid1)
        D1 = np.kron(d1, np.eye(self.n2))
        D2 = np.kron(np.eye(self.n1), d2)
        if self.embedding.kind == "skewed" and self.embedding.alpha != np.pi / 2:
            s, c = np.sin(self.embedding.alpha), np.cos(self.embedding.alpha)
            D2 = (D2 - c * D1) / s
        return D1, D2

    def boundary_mask(self, side: str) -> np.ndarray:
        """Points on one side of the computational square.

        ``side`` is one of ``y2min``, ``y2max``, ``y1min``, ``y1max``.
        """
        i1 = np.repeat(np.arange(self.n1), self.n2)
        i2 = np.tile(np.arange(self.n2), self.n1)
        # Chebyshev nodes are descending: index 0 is the upper end
        if side == "y2min":
            return i2 == self.n2 - 1
        if side == "y2max":
            return i2 == 0
        if self.grid1 is None:
            return np.zeros(self.n_points, dtype=bool)
        if side == "y1min":
            return i1 == self.n1 - 1
        if side == "y1max":
            return i1 == 0
        raise ValueError(f"unknown side {side!r}")


@dataclass(frozen=True, eq=False)
class CompositeGrid:
    """Union of tensor grids stacked in ``y2``, split at ``breaks``.

    A point with ``y2 <= breaks[k]`` belongs to part ``k`` (first match).
    """

    parts: tuple[TensorGrid2D, ...]
    breaks: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.breaks) != len(self.parts) - 1:
            raise ValueError("need one break fewer than parts")

    @property
    def planar(self) -> bool:
        return self.parts[0].planar

    @cached_property
    def offsets(self) -> np.ndarray:
        return np.concatenate([[0], np.cumsum([p.n_points for p in self.parts])])

    @property
    def n_points(self) -> int:
        return int(self.offsets[-1])

    @cached_property
    def points(self) -> np.ndarray:
        return np.vstack([p.points for p in self.parts])

    @property
    def y1(self) -> np.ndarray:
        return self.points[:, 0]

    @property
    def y2(self) -> np.ndarray:
        return self.points[:, 1]

    @cached_property
    def weights(self) -> np.ndarray:
        return np.concatenate([p.weights for p in self.parts])

    @cached_property
    def finite_mask(self) -> np.ndarray:
        return np.all(np.isfinite(self.points), axis=1)

    def signature(self) -> tuple:
        return ("composite", tuple(p.signature() for p in self.parts), self.breaks)

    def integrate(self, values) -> float:
        return float(np.dot(self.weights, values))

    def part_index(self, y2) -> np.ndarray:
        y2 = np.asarray(y2, dtype=float)
        idx = np.full(y2.shape, len(self.parts) - 1)
        for k in reversed(range(len(self.breaks))):
            idx = np.where(y2 <= self.breaks[k] + 1e-12, k, idx)
        return idx

    def interpolation_matrix(self, points) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        out = np.zeros((pts.shape[0], self.n_points))
        idx = self.part_index(pts[:, 1])
        for k, part in enumerate(self.parts):
            sel = idx == k
            if sel.any():
                a, b = self.offsets[k], self.offsets[k + 1]
                out[np.ix_(sel, np.arange(a, b))] = part.interpolation_matrix(pts[sel])
        return out

    @cached_property
    def diff_matrices(self) -> tuple[np.ndarray, np.ndarray]:
        from scipy.linalg import block_diag

        d1 = block_diag(*[p.diff_matrices[0] for p in self.parts])
        d2 = block_diag(*[p.diff_matrices[1] for p in self.parts])
        return d1, d2


def halfspace_grid(n1: int, n2: int, L1: float, L2: float, alpha: float = np.pi / 2) -> TensorGrid2D:
    """Half-space grid: ``y1`` whole line via A1(L1), ``y2 >= 0`` via A2(L2)."""
    if n1 < 2 or n2 < 2:
        raise ValueError(f"need n1, n2 >= 2, got {n1}, {n2}")
    return TensorGrid2D(
        mapped_grid(n1, "A1", L=L1),
        mapped_grid(n2, "A2", L=L2),
        CartesianEmbedding("skewed", alpha=alpha),
    )


def planar_halfspace_grid(n2: int, L2: float) -> TensorGrid2D:
    """``y1``-invariant grid on ``y2 >= 0``."""
    return TensorGrid2D(None, mapped_grid(n2, "A2", L=L2))


def planar_wholeline_grid(n: int, L: float) -> TensorGrid2D:
    """``y1``-invariant grid on the whole ``y2`` line (free interfaces)."""
    return TensorGrid2D(None, mapped_grid(n, "A1", L=L))


def planar_interval_grid(n: int, a: float, b: float) -> TensorGrid2D:
    """``y1``-invariant grid on the bounded interval ``a <= y2 <= b``."""
    return TensorGrid2D(None, mapped_grid(n, "affine", a=a, b=b))


def plane_grid(n1: int, n2: int, L1: float, L2: float) -> TensorGrid2D:
    """Whole plane, A1 maps in both directions."""
    return TensorGrid2D(mapped_grid(n1, "A1", L=L1), mapped_grid(n2, "A1", L=L2))


def box_grid(n1: int, n2: int, y1_bounds=(0.0, 10.0), y2_bounds=(0.0, 10.0)) -> TensorGrid2D:
    """Bounded rectangle with affine Chebyshev grids in both directions."""
    return TensorGrid2D(
        mapped_grid(n1, "affine", a=y1_bounds[0], b=y1_bounds[1]),
        mapped_grid(n2, "affine", a=y2_bounds[0], b=y2_bounds[1]),
    )


def strip_point_count(n2: int) -> int:
    """Smallest even integer not below ``n2 / 3``."""
    k = -(-n2 // 3)
    return k + (k % 2)


def composite_weighted_density_grid(
    n1: int | None, n2: int, L1: float | None, L2: float, R: float = 0.5
) -> CompositeGrid:
    """Strip ``[-R, R]`` plus half-space shifted up by ``R``.

    ``n1=None`` gives the planar variant.
    """
    g1 = None if n1 is None else mapped_grid(n1, "A1", L=L1)
    strip = TensorGrid2D(g1, mapped_grid(strip_point_count(n2), "affine", a=-R, b=R))
    upper = TensorGrid2D(g1, mapped_grid(n2, "A2", L=L2, origin=R))
    return CompositeGrid((strip, upper), (R,))


# --------------------------------------------------------------------------
# shapes


@dataclass(frozen=True, eq=False)
class Shape:
    """Quadrature on a kernel-support patch, relative to the kernel centre.

    Points with infinite coordinates are dropped at construction; the
    integrands used here decay there, so their summands vanish.
    """

    label: str
    params: dict
    points: np.ndarray
    weights: np.ndarray
    surface: bool = False

    @property
    def n_points(self) -> int:
        return self.weights.size

    def integrate(self, values) -> float:
        return float(np.dot(self.weights, values))

    def to_csv(self, path) -> None:
        np.savetxt(
            path,
            np.column_stack([self.points, self.weights]),
            delimiter=",",
            header="y1,y2,weight",
            comments="",
        )


def _cc(m: int) -> tuple[np.ndarray, np.ndarray]:
    g = cheb_lobatto_grid(m - 1)
    return g.nodes, g.quad_weights


def _tensor(x1, x2):
    return np.repeat(x1, x2.size), np.tile(x2, x1.size)


def _finish(label, params, y1, y2, w, surface=False) -> Shape:
    y1 = np.asarray(y1, float).ravel()
    y2 = np.asarray(y2, float).ravel()
    w = np.asarray(w, float).ravel()
    keep = np.isfinite(y1) & np.isfinite(y2) & np.isfinite(w)
    return Shape(label, dict(params), np.column_stack([y1[keep], y2[keep]]), w[keep], surface)


def _a2(x, L):
    with np.errstate(divide="ignore", invalid="ignore"):
        r = L * (1.0 + x) / (1.0 - x)
        dr = 2.0 * L / (1.0 - x) ** 2
    return np.where(x >= 1.0, np.inf, r), np.where(x >= 1.0, np.inf, dr)


def _a2f_gap(x, d, L):
    """Skewed map onto ``[0, d]`` with length parameter ``L (d) / (3L + d)``.

    With that choice the skew parameter is ``e = 2L / (L + d)`` and the map
    is finite for ``d -> inf`` (where it reduces to the A2 map) and ``d -> 0``.
    """
    d = np.asarray(d, float)
    with np.errstate(divide="ignore", invalid="ignore"):
        inf = np.isinf(d)
        scale = np.where(inf, L, L * d / (L + d))
        e = np.where(inf, 0.0, 2.0 * L / (L + d))
        den = 1.0 - x + e
        r = scale * (1.0 + x) / den
        dr = scale * (2.0 + e) / den**2
    bad = inf & (x >= 1.0)
    return np.where(bad, np.inf, r), np.where(bad, np.inf, dr)


def _shape_D1(R, m1, m2):
    m1 += m1 % 2
    x, _ = _cc(m1)
    pos = x[x > 0]
    s = pos**2
    # exact radial weights for int_0^1 g(s) ds with g polynomial in s = r^2
    k = np.arange(pos.size)
    V = np.cos(np.outer(k, np.arccos(2.0 * s - 1.0)))
    kf = k.astype(float)
    mom = np.zeros(k.size)
    even = k % 2 == 0
    mom[even] = 1.0 / (1.0 - kf[even] ** 2)
    u = np.linalg.solve(V, mom)
    W = 0.5 * R**2 * u
    radial_w = np.concatenate([W, W[::-1]]) / 2.0
    phi = 2.0 * np.pi * np.arange(m2) / m2
    r, ph = _tensor(R * x, phi)
    w = np.repeat(radial_w, m2) * (2.0 * np.pi / m2)
    return r * np.cos(ph), r * np.sin(ph), w


def _shape_radial_periodic(r, dr_w, m2):
    phi = 2.0 * np.pi * np.arange(m2) / m2
    rr, ph = _tensor(r, phi)
    w = np.repeat(dr_w * r, m2) * (2.0 * np.pi / m2)
    with np.errstate(invalid="ignore"):
        return rr * np.cos(ph), rr * np.sin(ph), w


def _polar(r, phi, w):
    with np.errstate(invalid="ignore"):
        y1 = np.where(np.isinf(r), np.inf, r * np.cos(phi))
        y2 = np.where(np.isinf(r), np.inf, r * np.sin(phi))
    return y1, y2, w


def _angle_grid(m, a, b):
    x, w = _cc(m)
    return a + (b - a) * (x + 1.0) / 2.0, w * (b - a) / 2.0


def build_shape(label: str, params: dict, m1: int, m2: int | None = None) -> Shape:
    """Discretize one patch of the shape library.

    Parameters
    ----------
    label : str
        ``D1`` (R), ``D2`` (R, L), ``D3`` (R_in, R_out), ``S1`` (R, theta1,
        theta2), ``S2`` (R, theta1, theta2), ``P1`` (R, L), ``P2+``/``P2-``
        (R, L, h), ``P3`` (R, L, h), ``P4+``/``P4-`` (R_in, R_out, h), ``P5``
        (R_in, R_out, h), ``P6`` (R_in, R_out, h), ``C1`` (R, phi1, phi2; a
        circle or arc) and ``Q`` (a1, b1, a2, b2; a rectangle).
    params : dict
    m1, m2 : int
        Points per direction. Periodic directions use ``m2`` points.
    """
    p = dict(params)
    m2 = m1 if m2 is None else m2
    if m1 < 2 or m2 < 2:
        raise ValueError("shapes need at least 2 points per direction")

    def need(*names):
        missing = [n for n in names if n not in p]
        if missing:
            raise ValueError(f"shape {label} missing parameters {missing}")

    if label == "D1":
        need("R")
        _pos(p["R"], "R")
        return _finish(label, p, *_shape_D1(p["R"], m1, m2))
    if label == "D2":
        need("R", "L")
        _pos(p["R"], "R"), _pos(p["L"], "L")
        x, w1 = _cc(m1)
        g, dg = _a2(x, p["L"])
        return _finish(label, p, *_shape_radial_periodic(p["R"] + g, w1 * dg, m2))
    if label == "D3":
        need("R_in", "R_out")
        if not 0 <= p["R_in"] < p["R_out"]:
            raise ValueError("D3 needs 0 <= R_in < R_out")
        r, wr = _angle_grid(m1, p["R_in"], p["R_out"])
        return _finish(label, p, *_shape_radial_periodic(r, wr, m2))
    if label in ("S1", "S2"):
        need("R", "theta1", "theta2")
        _pos(p["R"], "R")
        if not 0 <= p["theta1"] < p["theta2"] <= np.pi + 1e-15:
            raise ValueError(f"{label} needs 0 <= theta1 < theta2 <= pi, got {p}")
        R = p["R"]
        th, wt = _angle_grid(m1, p["theta1"], p["theta2"])
        if label == "S1":
            psi = 2.0 * np.pi * np.arange(m2) / m2
            wpsi = np.full(m2, 2.0 * np.pi / m2)
            emb = CartesianEmbedding("spherical-projection", R=R, measure="surface")
        else:
            psi, wpsi = _angle_grid(m2, 0.0, np.pi)
            emb = CartesianEmbedding("spherical-projection", R=R, measure="disk")
        T, P = _tensor(th, psi)
        y1, y2 = emb.forward(T, P)
        w = np.kron(wt, wpsi) * emb.weight_factor(T, P)
        return _finish(label, p, y1, y2, w, surface=(label == "S1"))
    if label == "P1":
        need("R", "L")
        x, w1 = _cc(m1)
        g, dg = _a2(x, p["L"])
        phi, wphi = _angle_grid(m2, 0.0, np.pi)
        r = p["R"] + g
        rr, ph = _tensor(r, phi)
        return _finish(label, p, *_polar(rr, ph, np.kron(w1 * dg * r, wphi)))
    if label in ("P2+", "P2-", "P3"):
        need("R", "L", "h")
        R, L, h = p["R"], p["L"], p["h"]
        if label == "P3":
            if h < R:
                raise ValueError(f"P3 needs h >= R, got h={h}, R={R}")
            a, b = np.pi, 2.0 * np.pi
        else:
            if not 0 < h < R:
                raise ValueError(f"{label} needs 0 < h < R, got h={h}, R={R}")
            dphi = np.arccos(h / R)
            a = np.pi if label == "P2-" else 1.5 * np.pi + dphi
            b = a + np.pi / 2 - dphi
        x, w1 = _cc(m1)
        phi, wphi = _angle_grid(m2, a, b)
        X, PH = _tensor(x, phi)
        with np.errstate(divide="ignore"):
            rd = np.abs(h / np.sin(PH))
        # exact infinities at phi = pi, 2 pi
        rd = np.where(np.abs(np.sin(PH)) < 1e-15, np.inf, rd)
        gap = np.maximum(rd - R, 0.0)
        g, dg = _a2f_gap(X, gap, L)
        r = R + g
        w = np.kron(w1, wphi) * dg * r
        return _finish(label, p, *_polar(r, PH, w))
    if label in ("P4+", "P4-", "P5", "P6"):
        need("R_in", "R_out", "h")
        Ri, Ro, h = p["R_in"], p["R_out"], p["h"]
        if not 0 < Ri < Ro:
            raise ValueError(f"{label} needs 0 < R_in < R_out")
        x, w1 = _cc(m1)
        if label == "P6":
            if not 0 <= h <= Ro:
                raise ValueError(f"P6 needs 0 <= h <= R_out, got {h}")
            dphi = np.arccos(h / Ro)
            phi, wphi = _angle_grid(m2, dphi - np.pi / 2, 1.5 * np.pi - dphi)
            r, wr = _angle_grid(m1, Ri, Ro)
            rr, ph = _tensor(r, phi)
            return _finish(label, p, *_polar(rr, ph, np.kron(wr * r, wphi)))
        if label == "P5":
            if not Ri < h < Ro:
                raise ValueError(f"P5 needs R_in < h < R_out, got {h}")
            dphi = np.arccos(h / Ro)
            a, b = 1.5 * np.pi - dphi, 1.5 * np.pi + dphi
        else:
            if not 0 < h <= Ri:
                raise ValueError(f"{label} needs 0 < h <= R_in, got {h}")
            ai, ao = np.arccos(h / Ri), np.arccos(h / Ro)
            if label == "P4-":
                a, b = 1.5 * np.pi - ao, 1.5 * np.pi - ai
            else:
                a, b = 1.5 * np.pi + ai, 1.5 * np.pi + ao
        phi, wphi = _angle_grid(m2, a, b)
        X, PH = _tensor(x, phi)
        rd = np.minimum(np.abs(h / np.sin(PH)), Ro)
        span = np.maximum(rd - Ri, 0.0)
        r = Ri + (1.0 + X) / 2.0 * span
        w = np.kron(w1, wphi) * span / 2.0 * r
        return _finish(label, p, *_polar(r, PH, w))
    if label == "C1":
        need("R")
        R = p["R"]
        if "phi1" in p:
            phi, wphi = _angle_grid(m1, p["phi1"], p["phi2"])
        else:
            phi = 2.0 * np.pi * np.arange(m1) / m1
            wphi = np.full(m1, 2.0 * np.pi / m1)
        return _finish(label, p, R * np.cos(phi), R * np.sin(phi), R * wphi, surface=True)
    if label == "Q":
        need("a1", "b1", "a2", "b2")
        if not (p["b1"] > p["a1"] and p["b2"] > p["a2"]):
            raise ValueError(f"degenerate rectangle {p}")
        u1, w1 = _angle_grid(m1, p["a1"], p["b1"])
        u2, w2 = _angle_grid(m2, p["a2"], p["b2"])
        Y1, Y2 = _tensor(u1, u2)
        return _finish(label, p, Y1, Y2, np.kron(w1, w2))
    raise ValueError(f"unknown shape label {label!r}")


def _pos(v, name):
    if not v > 0:
        raise ValueError(f"{name} must be positive, got {v}")


# --------------------------------------------------------------------------
# intersections


SUPPORT_KINDS = ("sphere-surface", "disk", "annulus-exterior", "annulus-finite", "ring", "square")


@dataclass(frozen=True, eq=False)
class Intersection:
    """Kernel support intersected with the half-space ``{y2 >= -offset}``."""

    support_kind: str
    params: dict
    offset: float
    pieces: tuple[Shape, ...] = field(default_factory=tuple)

    @property
    def labels(self) -> list[str]:
        return [s.label for s in self.pieces]

    @cached_property
    def points(self) -> np.ndarray:
        if not self.pieces:
            return np.zeros((0, 2))
        return np.vstack([s.points for s in self.pieces])

    @cached_property
    def weights(self) -> np.ndarray:
        if not self.pieces:
            return np.zeros(0)
        return np.concatenate([s.weights for s in self.pieces])

    def integrate(self, values) -> float:
        return float(np.dot(self.weights, values))

    def to_csv(self, path) -> None:
        np.savetxt(
            path,
            np.column_stack([self.points, self.weights]),
            delimiter=",",
            header="y1,y2,weight",
            comments="",
        )


def _cap_angle(c, R):
    """Polar angle theta with R cos(theta) = c, clipped to [0, pi]."""
    return float(np.arccos(np.clip(c / R, -1.0, 1.0)))


def assemble_intersection(
    support_kind: str,
    offset: float,
    M: int,
    *,
    R: float | None = None,
    R_in: float | None = None,
    R_out: float | None = None,
    L: float = 1.0,
    half: float | None = None,
    upper: float | None = None,
) -> Intersection:
    """Pieces covering ``support ∩ {lower <= y2}``, with ``lower = -offset``.

    Parameters
    ----------
    support_kind : str
        ``sphere-surface`` (R), ``disk`` (R), ``annulus-exterior`` (R),
        ``annulus-finite`` (R_in, R_out), ``ring`` (R) or ``square`` (half).
    offset : float
        Height of the evaluation point above the wall; ``inf`` gives the full
        support.
    M : int
        Resolution per direction (periodic directions get ``2M``).
    L : float
        Map length for unbounded radial patches.
    upper : float, optional
        Additional upper bound ``y2 <= upper`` relative to the kernel centre.
        Only sphere-surface and disk supports accept it.
    """
    y = float(offset)
    if support_kind not in SUPPORT_KINDS:
        raise ValueError(f"unsupported support kind {support_kind!r}")
    pieces: list[Shape] = []
    if support_kind in ("sphere-surface", "disk"):
        _pos(R, "R")
        label = "S1" if support_kind == "sphere-surface" else "S2"
        m2 = 2 * M if label == "S1" else M
        lo = -y
        hi = np.inf if upper is None else float(upper)
        # theta = 0 is the top of the sphere (y2 = R)
        th1 = _cap_angle(hi, R) if hi < R else 0.0
        th2 = _cap_angle(lo, R) if lo > -R else np.pi
        if lo >= R or hi <= -R or th2 - th1 <= 0.0 or y <= -R:
            th2 = th1
        if th2 > th1:
            pieces.append(build_shape(label, {"R": R, "theta1": th1, "theta2": th2}, M, m2))
        params = {"R": R}
    elif support_kind == "ring":
        _pos(R, "R")
        if upper is not None:
            raise ValueError("ring supports do not accept an upper bound")
        if y >= R:
            pieces.append(build_shape("C1", {"R": R}, 2 * M))
        elif y > -R:
            d = np.arcsin(y / R)
            pieces.append(build_shape("C1", {"R": R, "phi1": -d, "phi2": np.pi + d}, M))
        params = {"R": R}
    elif support_kind == "square":
        _pos(half, "half")
        if upper is not None:
            raise ValueError("square supports do not accept an upper bound")
        if y > -half:
            a2 = max(-half, -y)
            pieces.append(build_shape("Q", {"a1": -half, "b1": half, "a2": a2, "b2": half}, M))
        params = {"half": half}
    elif support_kind == "annulus-exterior":
        _pos(R, "R")
        if upper is not None:
            raise ValueError("annulus supports do not accept an upper bound")
        params = {"R": R, "L": L}
        if y == np.inf:
            pieces.append(build_shape("D2", {"R": R, "L": L}, M, 2 * M))
        elif y >= R:
            pieces.append(build_shape("P1", {"R": R, "L": L}, M))
            pieces.append(build_shape("P3", {"R": R, "L": L, "h": y}, M))
        elif y > 0:
            pieces.append(build_shape("P1", {"R": R, "L": L}, M))
            pieces.append(build_shape("P2+", {"R": R, "L": L, "h": y}, M))
            pieces.append(build_shape("P2-", {"R": R, "L": L, "h": y}, M))
        elif y == 0:
            pieces.append(build_shape("P1", {"R": R, "L": L}, M))
        else:
            raise ValueError(f"annulus-exterior needs offset >= 0, got {y}")
    else:
        if R_in is None or R_out is None or not 0 < R_in < R_out:
            raise ValueError("annulus-finite needs 0 < R_in < R_out")
        if upper is not None:
            raise ValueError("annulus supports do not accept an upper bound")
        params = {"R_in": R_in, "R_out": R_out}
        q = {"R_in": R_in, "R_out": R_out}
        if y >= R_out:
            pieces.append(build_shape("D3", q, M, 2 * M))
        elif y > R_in:
            pieces.append(build_shape("P6", {**q, "h": y}, M))
            pieces.append(build_shape("P5", {**q, "h": y}, M))
        elif y > 0:
            pieces.append(build_shape("P6", {**q, "h": y}, M))
            pieces.append(build_shape("P4+", {**q, "h": y}, M))
            pieces.append(build_shape("P4-", {**q, "h": y}, M))
        elif y == 0:
            pieces.append(build_shape("P6", {**q, "h": 0.0}, M))
        else:
            raise ValueError(f"annulus-finite needs offset >= 0, got {y}")
    return Intersection(support_kind, params, y, tuple(pieces))
