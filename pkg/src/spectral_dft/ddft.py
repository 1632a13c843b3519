"""Overdamped and inertial dynamic DFT on the equilibrium discretization.

Both flavours share the local chemical potential
``mu_loc = T log n + V_bar + T c_fmt + A n + V'(t)`` of a :class:`Problem`.
Time is measured in overdamped or inertial units, so the overdamped
equation reads ``dn/dt = div(n grad mu_loc)`` and the inertial one

    dn/dt = -div(n v)
    dv/dt = -(v . grad) v - gamma v - grad mu_loc

Zero normal flux is imposed on the sides listed in ``no_flux`` by zeroing
the normal flux (overdamped) or the normal velocity (inertial) there.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.integrate import BDF
from scipy.special import xlogy

from .kernels import wall_potential_93
from .solver import Problem
from .spectral import cheb_lobatto_grid

log = logging.getLogger(__name__)

_NORMAL = {"y1min": 0, "y1max": 0, "y2min": 1, "y2max": 1}


def wall_factor(t: float, eps_w: float, d_eps_w: float, tau: float) -> float:
    """Strength multiplier of the pulsed wall: ``1 + (d_eps_w/eps_w) sin(pi t/tau)`` before ``tau``."""
    if tau <= 0:
        raise ValueError("tau must be positive")
    if t >= tau:
        return 1.0
    return 1.0 + d_eps_w / eps_w * np.sin(np.pi * t / tau)


def dynamic_wall_potential(y2, t: float, eps_w: float, d_eps_w: float, tau: float) -> np.ndarray:
    """9-3 wall potential whose strength is pulsed for ``0 <= t < tau``."""
    return wall_factor(t, eps_w, d_eps_w, tau) * wall_potential_93(y2, eps_w)


class StiffIntegrationError(RuntimeError):
    """Time integration stopped early; carries the last accepted state."""

    def __init__(self, message: str, t: float, state: np.ndarray):
        super().__init__(message)
        self.t = t
        self.state = state


@dataclass
class Trajectory:
    """Samples ``y[:, j]`` of the state at times ``t[j]``."""

    t: np.ndarray
    y: np.ndarray
    n_steps: int = 0
    n_jac: int = 0


def integrate(
    rhs: Callable,
    y0,
    t_end: float,
    t_eval=None,
    *,
    jac: Callable | None = None,
    rtol: float = 1e-6,
    atol: float = 1e-9,
    t0: float = 0.0,
    max_step: float = np.inf,
    first_step: float | None = None,
) -> Trajectory:
    """Variable-order BDF integration with dense output at ``t_eval``.

    Raises
    ------
    StiffIntegrationError
        If the step size underflows or a step fails; the error holds the
        last accepted state.
    """
    y0 = np.atleast_1d(np.asarray(y0, dtype=float))
    t_eval = np.array([t_end] if t_eval is None else t_eval, dtype=float)
    if np.any(np.diff(t_eval) < 0) or t_eval[0] < t0 or t_eval[-1] > t_end:
        raise ValueError("t_eval must be sorted within [t0, t_end]")
    solver = BDF(rhs, t0, y0, t_end, rtol=rtol, atol=atol, jac=jac, max_step=max_step, first_step=first_step)
    out = np.empty((y0.size, t_eval.size))
    k = 0
    while k < t_eval.size and t_eval[k] <= t0:
        out[:, k] = y0
        k += 1
    steps = 0
    while k < t_eval.size:
        t_prev = solver.t
        msg = solver.step()
        steps += 1
        if solver.status == "failed":
            raise StiffIntegrationError(f"integration failed at t={solver.t:.6g}: {msg}", solver.t, solver.y.copy())
        if k < t_eval.size and t_eval[k] <= solver.t:
            dense = solver.dense_output()
            while k < t_eval.size and t_eval[k] <= solver.t:
                out[:, k] = solver.y if t_eval[k] == solver.t else dense(t_eval[k])
                k += 1
        if solver.status == "finished" and k < t_eval.size:
            out[:, k:] = solver.y[:, None]
            break
        if solver.t == t_prev:
            raise StiffIntegrationError(f"no progress at t={solver.t:.6g}", solver.t, solver.y.copy())
    return Trajectory(t_eval, out, steps, solver.njev)


@dataclass(eq=False)
class DDFTSystem:
    """Dynamic equations built on an equilibrium :class:`Problem`.

    Parameters
    ----------
    problem : Problem
        Supplies the grid, temperature, operators and potentials. ``v_bar``
        must be finite everywhere because ``mu_loc`` is differentiated on
        the full grid. Pinned points stay frozen and act as a reservoir
        at ``problem.mu``.
    inertial : bool
        Evolve ``(n, v1, v2)`` instead of ``n``.
    friction : float
        Dimensionless friction of the inertial equation.
    no_flux : tuple of str
        Grid sides (``y1min``, ``y1max``, ``y2min``, ``y2max``) that no mass
        crosses.
    v_prime : callable, optional
        ``t -> (S, P)`` time-dependent replacement for ``problem.v_prime``.
    flux_form : {"log", "gradient"}
        Overdamped flux as ``n D mu_loc`` or as ``T D n + n D (mu_loc - T log n)``.
        The two agree in the continuum, but only ``log`` keeps discrete
        equilibria exactly stationary; ``gradient`` tolerates densities
        that decay to zero or below round-off.
    """

    problem: Problem
    inertial: bool = False
    friction: float = 1.0
    no_flux: tuple[str, ...] = ()
    v_prime: Callable[[float], np.ndarray] | None = None
    flux_form: str = "log"
    _D: tuple = field(init=False, repr=False)

    def __post_init__(self) -> None:
        pb = self.problem
        if not np.all(np.isfinite(pb.v_bar)):
            raise ValueError("dynamics needs a finite v_bar; move hard walls into no_flux sides")
        if self.flux_form not in ("log", "gradient"):
            raise ValueError(f"unknown flux_form {self.flux_form!r}")
        if self.friction < 0:
            raise ValueError("friction must be non-negative")
        self.no_flux = tuple(self.no_flux)
        P = pb.n_points
        # open[d] is 0 where the flux component d is forced to vanish
        self.open = np.ones((2, P))
        for side in self.no_flux:
            if side not in _NORMAL:
                raise ValueError(f"unknown side {side!r}")
            self.open[_NORMAL[side], pb.grid.boundary_mask(side)] = 0.0
        self._D = pb.grid.diff_matrices
        self.frozen = ~pb.free
        if self.flux_form == "gradient" and np.any(self.frozen):
            raise ValueError("pinned points need flux_form='log'")
        self.planar = getattr(pb.grid, "grid1", None) is None

    # ------------------------------------------------------------------
    # state layout

    @property
    def n_species(self) -> int:
        return self.problem.n_species

    @property
    def size(self) -> int:
        k = 3 if self.inertial else 1
        return k * self.n_species * self.problem.n_points

    def pack(self, n, v=None) -> np.ndarray:
        n = np.atleast_2d(np.asarray(n, dtype=float))
        if not self.inertial:
            return n.ravel().copy()
        if v is None:
            v = np.zeros((2,) + n.shape)
        return np.concatenate([n.ravel(), np.asarray(v, dtype=float).ravel()])

    def unpack(self, y) -> tuple[np.ndarray, np.ndarray | None]:
        S, P = self.n_species, self.problem.n_points
        n = y[: S * P].reshape(S, P)
        if not self.inertial:
            return n, None
        return n, y[S * P :].reshape(2, S, P)

    # ------------------------------------------------------------------
    # physics

    def _v_prime(self, t: float) -> np.ndarray:
        if self.v_prime is None:
            return self.problem.v_prime
        return np.broadcast_to(self.v_prime(t), self.problem.v_prime.shape)

    def excess_potential(self, n: np.ndarray, t: float = 0.0):
        """``mu_loc - T log n`` per species and the weighted densities."""
        pb = self.problem
        stat, wd = pb.stationary_part(n)
        return pb.v_bar + stat - pb.v_prime + self._v_prime(t), wd

    def chemical_potential(self, n: np.ndarray, t: float = 0.0):
        """``mu_loc`` per species and the weighted densities."""
        ex, wd = self.excess_potential(n, t)
        with np.errstate(divide="ignore", invalid="ignore"):
            mu = self.problem.temperature * np.log(n) + ex
        # pinned rows approximate the far field; holding them at the
        # equilibrium chemical potential keeps equilibria stationary
        return np.where(self.frozen, self.problem.mu[:, None], mu), wd

    def flux(self, y, t: float = 0.0) -> np.ndarray:
        """Field ``J`` of shape ``(2, S, P)`` with ``dn/dt = div J`` before freezing."""
        n, v = self.unpack(y)
        if self.inertial:
            J = -n[None] * v
        elif self.flux_form == "log":
            mu, _ = self.chemical_potential(n, t)
            J = np.stack([n * (D @ mu.T).T for D in self._D])
        else:
            # n grad(T log n) written as T grad n stays finite where n -> 0
            ex, _ = self.excess_potential(n, t)
            T = self.problem.temperature
            J = np.stack([T * (D @ n.T).T + n * (D @ ex.T).T for D in self._D])
        return J * self.open[:, None, :]

    def _div(self, J: np.ndarray) -> np.ndarray:
        D1, D2 = self._D
        return (D1 @ J[0].T).T + (D2 @ J[1].T).T

    def rhs(self, t: float, y: np.ndarray) -> np.ndarray:
        n, v = self.unpack(y)
        dn = self._div(self.flux(y, t))
        dn[self.frozen] = 0.0
        if not self.inertial:
            return dn.ravel()
        mu, _ = self.chemical_potential(n, t)
        dv = np.empty_like(v)
        for e in range(2):
            adv = sum(v[d] * (self._D[d] @ v[e].T).T for d in range(2))
            dv[e] = -adv - self.friction * v[e] - (self._D[e] @ mu.T).T
        dv *= self.open[:, None, :]
        dv[:, self.frozen] = 0.0
        return np.concatenate([dn.ravel(), dv.ravel()])

    def mu_jacobian(self, n: np.ndarray, wd, ideal: bool = True) -> np.ndarray:
        """``d mu_loc / d n`` as an ``(S P, S P)`` matrix, without ``T/n`` if not ``ideal``."""
        pb = self.problem
        S, P = n.shape
        T = pb.temperature
        M = np.zeros((S * P, S * P))
        if pb.fmt is not None:
            H = pb.fmt.hessian(wd)
            F = pb.fmt.forward
            C = sum(B @ sum(H[k, l][:, None] * F[l] for l in range(len(F))) for k, B in enumerate(pb.fmt.reverse))
            M += T * np.kron(np.ones((S, S)), C)
        for s in range(S):
            blk = slice(s * P, (s + 1) * P)
            if ideal:
                M[blk, blk] += np.diag(T / n[s])
            if pb.pair_ops is not None:
                for t in range(S):
                    A = pb.pair_ops[s][t]
                    if A is not None:
                        M[blk, t * P : (t + 1) * P] += A
        M[self.frozen.ravel()] = 0.0
        return M

    def jacobian(self, t: float, y: np.ndarray) -> np.ndarray:
        n, v = self.unpack(y)
        S = self.n_species
        I_S = np.eye(S)
        D = [np.kron(I_S, Dd) for Dd in self._D]
        open_ = [np.tile(o, S) for o in self.open]
        nf, frozen = n.ravel(), self.frozen.ravel()
        if not self.inertial:
            log_form = self.flux_form == "log"
            pot, wd = (self.chemical_potential if log_form else self.excess_potential)(n, t)
            M = self.mu_jacobian(n, wd, ideal=log_form)
            J = np.zeros_like(M)
            for d in range(2):
                dJ = np.diag(D[d] @ pot.ravel()) + nf[:, None] * (D[d] @ M)
                if not log_form:
                    dJ += self.problem.temperature * D[d]
                J += D[d] @ (open_[d][:, None] * dJ)
            J[frozen] = 0.0
            return J
        _, wd = self.excess_potential(n, t)
        M = self.mu_jacobian(n, wd)
        m = nf.size
        vf = [v[0].ravel(), v[1].ravel()]
        J = np.zeros((3 * m, 3 * m))
        for d in range(2):
            cols = slice((1 + d) * m, (2 + d) * m)
            # n rows
            J[:m, :m] -= D[d] * (open_[d] * vf[d])[None, :]
            J[:m, cols] -= D[d] * (open_[d] * nf)[None, :]
        for e in range(2):
            rows = slice((1 + e) * m, (2 + e) * m)
            J[rows, :m] = -(D[e] @ M)
            adv = sum(vf[d][:, None] * D[d] for d in range(2))
            for d in range(2):
                cols = slice((1 + d) * m, (2 + d) * m)
                J[rows, cols] -= np.diag(D[d] @ vf[e])
            J[rows, rows] -= adv + self.friction * np.eye(m)
            J[rows] *= open_[e][:, None]
        keep = np.tile(~frozen, 3)
        J[~keep] = 0.0
        return J

    def free_energy(self, n: np.ndarray, t: float = 0.0) -> float:
        """``F[n]`` including the external potential, on the grid quadrature."""
        pb = self.problem
        n = np.atleast_2d(n)
        T = pb.temperature
        dens = T * (xlogy(n, n) - n) + n * (pb.v_bar + self._v_prime(t)) + 0.5 * n * pb.mean_field(n)
        F = sum(pb.integrate(d) for d in dens)
        if pb.fmt is not None:
            wd = pb.fmt.weighted(n.sum(axis=0))
            W = pb.wd_grid if pb.wd_grid is not None else pb.grid
            F += T * W.integrate(pb.fmt.phi(wd))
        return F

    def grand_potential(self, n: np.ndarray, t: float = 0.0) -> float:
        n = np.atleast_2d(n)
        return self.free_energy(n, t) - float(sum(m * self.problem.integrate(ns) for m, ns in zip(self.problem.mu, n)))

    def run(self, y0, t_end: float, t_eval=None, **kw) -> Trajectory:
        kw.setdefault("jac", self.jacobian)
        return integrate(self.rhs, y0, t_end, t_eval, **kw)


# --------------------------------------------------------------------------
# subdomain mass accounting


@dataclass
class MassLedger:
    """Mass in a rectangle and the boundary flux that should explain its change.

    ``error_rate[j] = |dm/dt - flux| / m`` at ``times[j]``.
    """

    rect: tuple[float, float, float, float]
    times: np.ndarray
    mass: np.ndarray
    dmdt: np.ndarray
    boundary_flux: np.ndarray
    error_rate: np.ndarray

    @property
    def max_error(self) -> float:
        return float(np.max(self.error_rate))

    def to_dict(self) -> dict:
        return {
            "rect": list(self.rect),
            "times": self.times.tolist(),
            "mass": self.mass.tolist(),
            "dmdt": self.dmdt.tolist(),
            "boundary_flux": self.boundary_flux.tolist(),
            "error_rate": self.error_rate.tolist(),
            "max_error": self.max_error,
        }


def _cc_nodes(a: float, b: float, m: int) -> tuple[np.ndarray, np.ndarray]:
    g = cheb_lobatto_grid(m - 1)
    return 0.5 * (a + b) + 0.5 * (b - a) * g.nodes, 0.5 * (b - a) * g.quad_weights


def mass_audit(system: DDFTSystem, traj: Trajectory, rect=(-2.0, 2.0, 0.0, 2.0), m_quad: int = 40) -> MassLedger:
    """Compare the rate of change of mass in ``rect`` with its boundary influx.

    The density and the flux field are interpolated spectrally onto a
    Clenshaw-Curtis tensor grid in the rectangle and onto its four edges.
    ``dm/dt`` is the quadrature of the rhs, so integrator error does not
    enter; the metric isolates the discrete divergence theorem.
    """
    a1, b1, a2, b2 = map(float, rect)
    x1, w1 = _cc_nodes(a1, b1, m_quad)
    x2, w2 = _cc_nodes(a2, b2, m_quad)
    grid = system.problem.grid
    pts = np.column_stack([np.repeat(x1, m_quad), np.tile(x2, m_quad)])
    Q = np.kron(w1, w2) @ grid.interpolation_matrix(pts)
    # edges with outward normals: (points, weights, component, sign)
    edges = [
        (np.column_stack([np.full(m_quad, a1), x2]), w2, 0, -1.0),
        (np.column_stack([np.full(m_quad, b1), x2]), w2, 0, 1.0),
        (np.column_stack([x1, np.full(m_quad, a2)]), w1, 1, -1.0),
        (np.column_stack([x1, np.full(m_quad, b2)]), w1, 1, 1.0),
    ]
    E = [(w @ grid.interpolation_matrix(p), c, s) for p, w, c, s in edges]
    mass, dmdt, flux = [], [], []
    for j, t in enumerate(traj.t):
        y = traj.y[:, j]
        n, _ = system.unpack(y)
        dn, _ = system.unpack(system.rhs(t, y))
        J = system.flux(y, t)
        mass.append(float(Q @ n.sum(axis=0)))
        dmdt.append(float(Q @ dn.sum(axis=0)))
        flux.append(float(sum(s * (e @ J[c].sum(axis=0)) for e, c, s in E)))
    mass, dmdt, flux = map(np.asarray, (mass, dmdt, flux))
    return MassLedger((a1, b1, a2, b2), np.asarray(traj.t), mass, dmdt, flux, np.abs(dmdt - flux) / mass)
