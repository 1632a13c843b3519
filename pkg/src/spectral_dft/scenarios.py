"""Problem builders for walls, free interfaces, contact lines and mixtures."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np

from .convolution import SourceDomain, cached_operator, default_resolution
from .geometry import (
    box_grid,
    composite_weighted_density_grid,
    halfspace_grid,
    planar_halfspace_grid,
    planar_wholeline_grid,
    plane_grid,
)
from .kernels import (
    attraction_kernel,
    gaussian_kernel,
    gaussian_sigma,
    hd_kernel,
    hs_kernel,
    wall_potential_93,
)
from .ddft import DDFTSystem, wall_factor
from .solver import FMTBlock, Problem, SolveResult, SolverConfig, initial_guess, solve
from .thermo import ModelParams, chemical_potential, coexistence, pressure

log = logging.getLogger(__name__)

HALFSPACE = SourceDomain("halfspace")
PLANE = SourceDomain("plane")


# --------------------------------------------------------------------------
# operator blocks


def hs_block(source, target, M: int, R: float = 0.5, *, fwd_domain=HALFSPACE, rev_domain=None) -> FMTBlock:
    """Hard-sphere weighted densities ``(n2, n3, v1, v2)`` from ``source`` to ``target``."""
    rev_domain = rev_domain or SourceDomain("composite", R=R)
    fwd, rev = [], []
    for name in ("w2", "w3", "vw2"):
        k = hs_kernel(name, R)
        fwd.extend(cached_operator(source, target, k, M, domain=fwd_domain).matrices)
        rev.extend(cached_operator(target, source, k, M, domain=rev_domain, reflect=True).matrices)
    return FMTBlock("hs", fwd, rev, R)


def hd_block(grid, M: int, R: float = 0.5, normalized: bool = False, domain=PLANE) -> FMTBlock:
    """Hard-disk weighted densities ``(n2, n3, v1, v2, txx, txy, tyy)`` on one grid."""
    fwd, rev = [], []
    for name in ("w2", "w3", "vw2", "tw2"):
        k = hd_kernel(name, R, normalized)
        fwd.extend(cached_operator(grid, grid, k, M, domain=domain).matrices)
        rev.extend(cached_operator(grid, grid, k, M, domain=domain, reflect=True).matrices)
    return FMTBlock("hd", fwd, rev, R)


def attraction_ops(grid, model: ModelParams, M: int, domain=HALFSPACE):
    if not model.attraction:
        return None
    return [[cached_operator(grid, grid, attraction_kernel(model.r_c), M, domain=domain).matrix]]


# --------------------------------------------------------------------------
# planar walls and interfaces


@dataclass
class Profile:
    """Converged equilibrium profile with the bulk state it connects to."""

    kind: str
    model: ModelParams
    problem: Problem
    result: SolveResult
    mu: float
    pressure: float
    n_bulk: tuple[float, ...]
    surface_tension: float = np.nan
    extra: dict = field(default_factory=dict)

    @property
    def grid(self):
        return self.problem.grid

    @property
    def density(self) -> np.ndarray:
        return self.result.density[0]


def wall_potential(model: ModelParams, y2) -> np.ndarray:
    y2 = np.asarray(y2, dtype=float)
    if model.eps_w == 0:
        return np.zeros_like(y2)
    return wall_potential_93(y2, model.eps_w)


def wall_problem(model: ModelParams, grid, wd_grid, mu: float, *, M=None, M_attr=None) -> Problem:
    """Single species above a hard wall at ``y2 = 0`` with the 9-3 tail of ``model.eps_w``."""
    n = grid.n2
    fmt = None
    if model.fmt == "hs":
        fmt = hs_block(grid, wd_grid, M or default_resolution("w3", n), model.R)
        fmt.strip_measure = model.R
    elif model.fmt is not None:
        raise ValueError(f"walls support the hard-sphere functional only, got {model.fmt!r}")
    ops = attraction_ops(grid, model, M_attr or default_resolution("attr", n))
    v = wall_potential(model, grid.y2)[None, :]
    return Problem(grid, model.temperature, [mu], np.zeros_like(v), v, fmt, ops, wd_grid=wd_grid, label="wall")


def interface_problem(model: ModelParams, grid, mu: float, *, M=None, M_attr=None) -> Problem:
    """Free planar interface on the whole line; weighted densities live on ``grid``."""
    n = grid.n2
    fmt = None
    if model.fmt == "hs":
        fmt = hs_block(grid, grid, M or default_resolution("w3", n), model.R, fwd_domain=PLANE, rev_domain=PLANE)
    ops = attraction_ops(grid, model, M_attr or default_resolution("attr", n), PLANE)
    zero = np.zeros((1, grid.n_points))
    return Problem(grid, model.temperature, [mu], zero, zero.copy(), fmt, ops, wd_grid=grid, label="interface")


def grand_potential_density(problem: Problem, n: np.ndarray) -> tuple[np.ndarray, np.ndarray | None]:
    """Local grand-potential density split into density-grid and weighted-density-grid parts."""
    T = problem.temperature
    with np.errstate(divide="ignore", invalid="ignore"):
        ideal = np.where(n > 0, n * (np.log(n) - 1.0), 0.0)
    pot = np.where(np.isfinite(problem.v_bar), problem.v_bar, 0.0) + problem.v_prime
    f = T * ideal + 0.5 * n * problem.mean_field(n) + n * pot - problem.mu[:, None] * n
    f = f.sum(axis=0)
    phi = None
    if problem.fmt is not None:
        phi = T * problem.fmt.phi(problem.fmt.weighted(n.sum(axis=0)))
    return f, phi


def surface_tension(problem: Problem, n: np.ndarray, p: float) -> float:
    """Excess grand potential per unit length of a planar profile.

    For a wall the bulk values are read at ``y2 = inf`` and the strip of the
    weighted-density grid below the wall contributes ``Phi_bulk * R``.
    """
    f, phi = grand_potential_density(problem, np.atleast_2d(n))
    g = problem.grid
    W = problem.wd_grid
    if phi is None:
        phi_int, phi_b, strip = 0.0, 0.0, 0.0
    else:
        phi_b = phi[np.argmax(W.y2)]
        phi_int = W.integrate(phi - phi_b) if W is not g else None
        strip = problem.fmt.strip_measure
    if W is g or W is None:
        total = f + (phi if phi is not None else 0.0) + p
        return g.integrate(total)
    f_b = f[np.argmax(g.y2)]
    return g.integrate(f - f_b) + phi_int + phi_b * strip


def _bulk_state(model: ModelParams, kind: str, n_bulk):
    if model.attraction and n_bulk is None:
        c = coexistence(model)
        nb = {"wall-liquid": c["n_liq"], "wall-vapor": c["n_vap"]}.get(kind)
        return c, nb
    if n_bulk is None:
        raise ValueError("n_bulk is required for models without liquid-vapor coexistence")
    return None, float(n_bulk)


def planar_interface_1d(
    model: ModelParams,
    kind: str = "wall-liquid",
    *,
    n_bulk: float | None = None,
    N: int = 100,
    L: float = 2.0,
    config: SolverConfig | None = None,
    M: int | None = None,
    M_attr: int | None = None,
    z0: np.ndarray | None = None,
) -> Profile:
    """Planar wall or liquid-vapor profile and its surface tension.

    ``kind`` is ``wall-liquid``, ``wall-vapor``, ``wall`` (bulk density
    ``n_bulk`` at a wall) or ``liquid-vapor``.
    """
    if kind not in ("wall", "wall-liquid", "wall-vapor", "liquid-vapor"):
        raise ValueError(f"unknown interface kind {kind!r}")
    if kind == "liquid-vapor":
        return _liquid_vapor(model, N=N, L=L, config=config, M=M, M_attr=M_attr, z0=z0)
    c, nb = _bulk_state(model, kind, n_bulk)
    if nb is None:
        nb = float(n_bulk)
    mu = c["mu_sat"] if c is not None else float(chemical_potential(nb, model))
    p = float(pressure(nb, model))
    g = planar_halfspace_grid(N, L)
    W = composite_weighted_density_grid(None, N, None, L, model.R)
    prob = wall_problem(model, g, W, mu, M=M, M_attr=M_attr)
    if z0 is None:
        z0 = initial_guess(prob, [nb], 0.95 * model.max_density)
    res = solve(prob, z0, config)
    prof = Profile(kind, model, prob, res, mu, p, (nb,))
    prof.surface_tension = surface_tension(prob, res.density, p)
    return prof


def _midpoint_shift(grid, n: np.ndarray, n_mid: float) -> float:
    """Location where a monotone profile crosses ``n_mid``, by root bracketing on the nodes."""
    y = grid.y2
    fin = np.isfinite(y)
    order = np.argsort(y[fin])
    ys, ns = y[fin][order], n[fin][order] - n_mid
    k = np.flatnonzero(np.sign(ns[:-1]) != np.sign(ns[1:]))
    if k.size == 0:
        return 0.0
    i = k[np.argmin(np.abs(ys[k]))]
    return float(ys[i] - ns[i] * (ys[i + 1] - ys[i]) / (ns[i + 1] - ns[i]))


def _liquid_vapor(model, *, N, L, config, M, M_attr, z0) -> Profile:
    c = coexistence(model)
    nv, nl = c["n_vap"], c["n_liq"]
    g = planar_wholeline_grid(N, L)
    prob = interface_problem(model, g, c["mu_sat"], M=M, M_attr=M_attr)
    if z0 is None:
        y = g.y2
        n0 = nv + (nl - nv) * 0.5 * (1.0 - np.tanh(y / 2.0))
        n0 = np.where(np.isnan(n0), nl, n0)
        z0 = prob.z_from_density(n0[None, :])
    # the discrete particle number of the start profile pins the interface;
    # mu then acts as its multiplier and settles at the discrete coexistence value
    prob.n_fixed = prob.density(z0) @ g.weights
    cfg = config or SolverConfig()
    if cfg.scheme == "newton":
        log.info("liquid-vapor interface: fixed particle number requires Picard; switching scheme")
        cfg = replace(cfg, scheme="picard", max_iter=max(cfg.max_iter, 20000))
    res = solve(prob, z0, cfg)
    prob.mu = res.mu
    prof = Profile("liquid-vapor", model, prob, res, c["mu_sat"], c["pressure"], (nl, nv))
    prof.surface_tension = surface_tension(prob, res.density, c["pressure"])
    prof.extra["width"] = interface_width(g, res.density[0], nv, nl)
    return prof


def interface_width(grid, n: np.ndarray, n_vap: float, n_liq: float, lo: float = 0.05, hi: float = 0.95) -> float:
    """Distance between the points where the profile crosses ``lo`` and ``hi`` of the density jump."""
    a = _midpoint_shift(grid, n, n_vap + lo * (n_liq - n_vap))
    b = _midpoint_shift(grid, n, n_vap + hi * (n_liq - n_vap))
    return abs(a - b)


# --------------------------------------------------------------------------
# contact line


@dataclass
class ContactLine:
    profile: Profile
    wall_liquid: Profile
    wall_vapor: Profile
    liquid_vapor: Profile
    theta: float
    y2max: float

    @property
    def grid(self):
        return self.profile.grid

    @property
    def density2d(self) -> np.ndarray:
        return self.profile.density.reshape(self.grid.shape)


def tilted_profile(lv: Profile, y1, y2, theta: float) -> np.ndarray:
    """Liquid-vapor profile along the signed distance ``y1 sin(theta) + y2 cos(theta)``."""
    y1, y2 = np.broadcast_arrays(np.asarray(y1, dtype=float), np.asarray(y2, dtype=float))
    s, c = np.sin(theta), np.cos(theta)
    # drop terms whose coefficient vanishes so that infinite coordinates stay well defined
    d = np.zeros(y1.shape)
    if abs(s) > 1e-12:
        d = d + y1 * s
    if abs(c) > 1e-12:
        d = d + y2 * c
    d = np.where(np.isnan(d), 0.0, d).ravel()
    g = lv.grid
    pts = np.column_stack([np.zeros(d.size), d])
    return g.interpolation_matrix(pts) @ lv.density


def contact_line_2d(
    model: ModelParams,
    theta: float = np.pi / 2,
    *,
    N1: int = 30,
    N2: int = 30,
    L1: float = 4.0,
    L2: float = 2.0,
    y2max: float = 25.0,
    config: SolverConfig | None = None,
    M: int | None = None,
    M_attr: int | None = None,
    planar_config: SolverConfig | None = None,
) -> ContactLine:
    """Wall-liquid-vapor contact line in the half-space.

    Rows with ``y2 > y2max`` are pinned to the tilted liquid-vapor profile.
    The initial guess blends the planar wall-liquid and wall-vapor profiles
    with the liquid-vapor profile as the switch.
    """
    c = coexistence(model)
    nv, nl = c["n_vap"], c["n_liq"]
    pc = planar_config or SolverConfig(scheme="newton", max_iter=200)
    wl = planar_interface_1d(model, "wall-liquid", N=N2, L=L2, config=pc, M=M, M_attr=M_attr)
    wv = planar_interface_1d(model, "wall-vapor", N=N2, L=L2, config=pc, M=M, M_attr=M_attr)
    lv = planar_interface_1d(model, "liquid-vapor", N=N1, L=L1, config=pc, M=M, M_attr=M_attr)

    g = halfspace_grid(N1, N2, L1, L2)
    W = composite_weighted_density_grid(N1, N2, L1, L2, model.R)
    prob = wall_problem(model, g, W, c["mu_sat"], M=M or default_resolution("w3", N2), M_attr=M_attr or default_resolution("attr", N2))
    pinned = np.isfinite(g.y2) & (g.y2 > y2max) | np.isposinf(g.y2)
    prob.pinned = pinned
    prob.pinned_density = tilted_profile(lv, g.y1, np.where(np.isinf(g.y2), 0.0, g.y2), theta)[None, :]
    prob.free = np.isfinite(prob.v_bar) & ~pinned[None, :]

    s = np.clip((tilted_profile(lv, g.y1, np.zeros(g.n_points), theta) - nv) / (nl - nv), 0.0, 1.0)
    n_wl = np.tile(wl.density, g.n1)
    n_wv = np.tile(wv.density, g.n1)
    n0 = s * n_wl + (1.0 - s) * n_wv
    n0 = np.where(pinned, prob.pinned_density[0], n0)
    res = solve(prob, prob.z_from_density(n0[None, :]), config or pc)
    prof = Profile("contact-line", model, prob, res, c["mu_sat"], c["pressure"], (nl, nv))
    return ContactLine(prof, wl, wv, lv, theta, y2max)


def pulsed_wall_system(
    cl: ContactLine, d_eps_w: float, tau: float, *, inertial: bool = False, friction: float = 2.0
) -> DDFTSystem:
    """Dynamics started from an equilibrium contact line with the wall strength pulsed over ``[0, tau)``.

    Mass cannot cross the wall; the pinned far field acts as a reservoir.
    """
    prob = cl.profile.problem
    eps_w = cl.profile.model.eps_w
    v0 = prob.v_prime.copy()
    return DDFTSystem(
        prob,
        inertial=inertial,
        friction=friction,
        no_flux=("y2min",),
        v_prime=lambda t: wall_factor(t, eps_w, d_eps_w, tau) * v0,
    )


# --------------------------------------------------------------------------
# mixtures with fixed particle numbers


@dataclass
class Mixture:
    problem: Problem
    result: SolveResult
    name: str

    @property
    def grid(self):
        return self.problem.grid

    @property
    def densities(self) -> np.ndarray:
        return self.result.density

    def masses(self) -> np.ndarray:
        return self.result.density @ self.grid.weights


GAUSSIAN_ALPHAS = (0.5, 1.0, 1.5)
HD_WELLS = (
    ((-1.0, 0.0), (0.75, 0.0), (0.0, 0.75)),
    ((-0.75, -0.25), (1.0, -0.25), (0.0, 0.75)),
)


def gaussian_box_problem(N: int, *, alphas=GAUSSIAN_ALPHAS, particles=20.0, M: int = 40, side: float = 10.0) -> Problem:
    """Soft Gaussian species in a hard-wall box with the quadratic trap."""
    g = box_grid(N, N, (0.0, side), (0.0, side))
    dom = SourceDomain("box", bounds=(0.0, side, 0.0, side))
    S = len(alphas)
    ops = [
        [cached_operator(g, g, gaussian_kernel(gaussian_sigma(alphas[i], alphas[j])), M, domain=dom).matrix for j in range(S)]
        for i in range(S)
    ]
    trap = 2.0 * ((g.y1 - 8.0) ** 2 + (g.y2 - 7.0) ** 2)
    v = np.tile(trap, (S, 1))
    return Problem(g, 1.0, np.zeros(S), np.zeros_like(v), v, None, ops, n_fixed=np.full(S, float(particles)), label="gaussian-box")


def hd_mixture_problem(N: int, *, L: float = 4.0, particles=10.0, M: int = 10, wells=HD_WELLS, normalized: bool = False) -> Problem:
    """Two hard-disk species in the plane with a weak confinement and Gaussian wells."""
    g = plane_grid(N, N, L, L)
    fmt = hd_block(g, M, 0.5, normalized)
    with np.errstate(invalid="ignore"):
        vbar = 0.01 * (g.y1**2 + g.y2**2)
    vbar = np.where(np.isnan(vbar), np.inf, vbar)
    fin = np.isfinite(vbar)
    y1, y2 = np.where(fin, g.y1, 0.0), np.where(fin, g.y2, 0.0)
    vp = []
    for centres in wells:
        v = -3.0 * sum(np.exp(-2.0 * ((y1 - a) ** 2 + (y2 - b) ** 2)) for a, b in centres)
        vp.append(np.where(fin, v, 0.0))
    S = len(wells)
    return Problem(
        g, 1.0, np.zeros(S), np.tile(vbar, (S, 1)), np.array(vp), fmt, None,
        n_fixed=np.full(S, float(particles)), label="hd-mixture",
    )


def mixture_guess(problem: Problem) -> np.ndarray:
    """Boltzmann factor of the external potential scaled to the particle numbers."""
    z = -problem.v_prime + np.where(np.isfinite(problem.v_bar), problem.v_bar, 0.0)
    n = problem.density(z)
    mass = n @ problem.grid.weights
    return z + problem.temperature * np.log(problem.n_fixed / mass)[:, None]


def multispecies_solve(problem: Problem, config: SolverConfig | None = None, z0=None) -> Mixture:
    if problem.n_fixed is None:
        raise ValueError("multispecies_solve needs fixed particle numbers")
    z0 = mixture_guess(problem) if z0 is None else z0
    res = solve(problem, z0, config or SolverConfig())
    return Mixture(problem, res, problem.label)


def probe_points(lo: float, hi: float, n: int = 100) -> np.ndarray:
    t = np.linspace(lo, hi, n)
    a, b = np.meshgrid(t, t, indexing="ij")
    return np.column_stack([a.ravel(), b.ravel()])


def relative_increments(mixtures: list[Mixture], points: np.ndarray) -> list[float]:
    """Max over species of ``||n_N - n_prev||_2 / ||n_finest||_2`` on probe points."""
    vals = [m.grid.interpolation_matrix(points) @ m.densities.T for m in mixtures]
    ref = np.linalg.norm(vals[-1], axis=0)
    return [float(np.max(np.linalg.norm(b - a, axis=0) / ref)) for a, b in zip(vals[:-1], vals[1:])]
