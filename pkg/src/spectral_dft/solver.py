"""Euler-Lagrange residual and Picard/Newton iterations in the z-variable.

The unknown per species is ``z = T log n + V_bar``, so the density
``n = exp((z - V_bar) / T)`` is positive wherever ``V_bar`` is finite and
exactly zero where it is infinite. The remaining part ``V'`` of the external
potential enters the residual

    r = z + T sum_k (B_k dPhi/dn_k) + sum_t A_st n_t + V' - mu

where ``B_k`` are reverse (reflected) weight operators, ``n_k = F_k sum_s n_s``
are weighted densities and ``A_st`` are mean-field pair operators.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np

from .fmt import PackingError, hd_reduced, hs_reduced

log = logging.getLogger(__name__)


class ConvergenceError(RuntimeError):
    """Raised when an iteration diverges or exhausts its budget."""

    def __init__(self, message: str, history: list[float] | None = None):
        super().__init__(message)
        self.history = history or []


# --------------------------------------------------------------------------
# hard-core block


@dataclass(eq=False)
class FMTBlock:
    """Weighted densities of a common-radius hard-core functional.

    Components are ``(n2, n3, v1, v2)`` for spheres and
    ``(n2, n3, v1, v2, txx, txy, tyy)`` for disks. ``forward[k]`` maps the
    total density on the density grid to component ``k`` on the
    weighted-density grid, ``reverse[k]`` maps back with the reflected
    weight.
    """

    kind: str
    forward: list[np.ndarray]
    reverse: list[np.ndarray]
    R: float = 0.5
    wd_weights: np.ndarray | None = None
    # integral over the weighted-density grid of a bulk-valued field minus
    # its integral over the density grid region (the strip below the wall)
    strip_measure: float = 0.0

    @property
    def n_components(self) -> int:
        return len(self.forward)

    def weighted(self, ntot: np.ndarray) -> np.ndarray:
        return np.stack([F @ ntot for F in self.forward])

    def phi(self, wd: np.ndarray) -> np.ndarray:
        if self.kind == "hs":
            return hs_reduced(wd[0], wd[1], wd[2:4], self.R, order=0)
        return hd_reduced(wd[0], wd[1], wd[2:4], wd[4:7], self.R, order=0)

    def gradient(self, wd: np.ndarray) -> np.ndarray:
        if self.kind == "hs":
            _, (g2, g3, gv) = hs_reduced(wd[0], wd[1], wd[2:4], self.R, order=1)
            return np.vstack([g2[None], g3[None], gv])
        _, (g2, g3, gv, gt) = hd_reduced(wd[0], wd[1], wd[2:4], wd[4:7], self.R, order=1)
        return np.vstack([g2[None], g3[None], gv, gt])

    def hessian(self, wd: np.ndarray) -> np.ndarray:
        """Dense ``(K, K, P)`` Hessian of the free-energy density."""
        K, P = wd.shape
        H = np.zeros((K, K, P))
        if self.kind == "hs":
            _, _, h = hs_reduced(wd[0], wd[1], wd[2:4], self.R, order=2)
            H[0, 0], H[0, 1], H[1, 1] = h["22"], h["23"], h["33"]
            for c in range(2):
                H[0, 2 + c] = H[2 + c, 0] = h["2v"][c]
                H[1, 2 + c] = H[2 + c, 1] = h["3v"][c]
                H[2 + c, 2 + c] = h["vv"]
        else:
            _, _, h = hd_reduced(wd[0], wd[1], wd[2:4], wd[4:7], self.R, order=2)
            H[0, 0], H[0, 1], H[1, 1] = h["22"], h["23"], h["33"]
            for c in range(2):
                H[1, 2 + c] = H[2 + c, 1] = h["3v"][c]
                H[2 + c, 2 + c] = h["vv"]
            for c in range(3):
                H[1, 4 + c] = H[4 + c, 1] = h["3t"][c]
                H[4 + c, 4 + c] = h["tt"][c]
        H[1, 0] = H[0, 1]
        return H

    def potential(self, wd: np.ndarray) -> np.ndarray:
        """``sum_k B_k dPhi/dn_k`` on the density grid."""
        g = self.gradient(wd)
        return sum(B @ gk for B, gk in zip(self.reverse, g))


# --------------------------------------------------------------------------
# problem and state


@dataclass(eq=False)
class Problem:
    """Discretized equilibrium problem for ``S`` species on one density grid.

    Attributes
    ----------
    grid : grid object
        Density grid with ``points`` and ``weights``.
    temperature : float
    mu : ndarray, shape (S,)
        Chemical potentials (initial values when ``n_fixed`` is set).
    v_bar, v_prime : ndarray, shape (S, P)
        External potential split; ``v_bar`` is absorbed in ``z`` and may be
        ``+inf``.
    fmt : FMTBlock or None
    pair_ops : list of list of ndarray or None
        ``pair_ops[s][t]`` maps ``n_t`` to the mean-field potential on ``s``.
    pinned : ndarray of bool, shape (P,), optional
        Points whose density is fixed to ``pinned_density``.
    n_fixed : ndarray, shape (S,), optional
        Particle numbers to impose by adjusting ``mu``.
    """

    grid: object
    temperature: float
    mu: np.ndarray
    v_bar: np.ndarray
    v_prime: np.ndarray
    fmt: FMTBlock | None = None
    pair_ops: list | None = None
    pinned: np.ndarray | None = None
    pinned_density: np.ndarray | None = None
    n_fixed: np.ndarray | None = None
    wd_grid: object | None = None
    label: str = ""

    def __post_init__(self) -> None:
        self.mu = np.atleast_1d(np.asarray(self.mu, dtype=float)).copy()
        self.v_bar = np.atleast_2d(np.asarray(self.v_bar, dtype=float))
        self.v_prime = np.atleast_2d(np.asarray(self.v_prime, dtype=float))
        S, P = self.v_bar.shape
        if self.v_prime.shape != (S, P) or self.mu.shape != (S,):
            raise ValueError("mu, v_bar and v_prime must agree in species and points")
        if not np.all(np.isfinite(self.v_prime)):
            raise ValueError("v_prime must be finite; put infinite walls into v_bar")
        if self.temperature <= 0:
            raise ValueError("temperature must be positive")
        self.free = np.isfinite(self.v_bar)
        if self.pinned is not None:
            self.free &= ~self.pinned[None, :]

    @property
    def n_species(self) -> int:
        return self.v_bar.shape[0]

    @property
    def n_points(self) -> int:
        return self.v_bar.shape[1]

    def density(self, z: np.ndarray) -> np.ndarray:
        with np.errstate(invalid="ignore", over="ignore"):
            n = np.exp((z - self.v_bar) / self.temperature)
        return np.where(np.isfinite(self.v_bar), n, 0.0)

    def z_from_density(self, n: np.ndarray) -> np.ndarray:
        n = np.atleast_2d(n)
        with np.errstate(divide="ignore"):
            z = self.temperature * np.log(n) + self.v_bar
        return np.where(np.isfinite(self.v_bar), z, 0.0)

    def pinned_z(self) -> np.ndarray | None:
        if self.pinned is None:
            return None
        return self.z_from_density(self.pinned_density)

    def mean_field(self, n: np.ndarray) -> np.ndarray:
        out = np.zeros_like(n)
        if self.pair_ops is None:
            return out
        for s in range(self.n_species):
            for t in range(self.n_species):
                A = self.pair_ops[s][t]
                if A is not None:
                    out[s] += A @ n[t]
        return out

    def stationary_part(self, n: np.ndarray) -> tuple[np.ndarray, np.ndarray | None]:
        """``T c_fmt + A n + V'`` and the weighted densities."""
        out = self.mean_field(n) + self.v_prime
        wd = None
        if self.fmt is not None:
            wd = self.fmt.weighted(n.sum(axis=0))
            out = out + self.temperature * self.fmt.potential(wd)[None, :]
        return out, wd

    def integrate(self, values) -> float:
        return float(np.dot(self.grid.weights, values))


def residual(problem: Problem, z: np.ndarray, mu: np.ndarray | None = None) -> np.ndarray:
    """Euler-Lagrange residual per species; pinned and excluded points give 0."""
    z = np.atleast_2d(z)
    mu = problem.mu if mu is None else np.atleast_1d(mu)
    n = problem.density(z)
    rest, _ = problem.stationary_part(n)
    r = z + rest - mu[:, None]
    return np.where(problem.free, r, 0.0)


def initial_guess(problem: Problem, n_bulk, n_max: float | None = None) -> np.ndarray:
    """Bulk density times ``exp(-V'/T)``, clipped below ``n_max``."""
    n_bulk = np.atleast_1d(np.asarray(n_bulk, dtype=float))
    with np.errstate(over="ignore"):
        n = n_bulk[:, None] * np.exp(-problem.v_prime / problem.temperature)
    if n_max is not None:
        n = np.minimum(n, n_max)
    z = problem.z_from_density(n)
    pz = problem.pinned_z()
    if pz is not None:
        z = np.where(problem.pinned[None, :], pz, z)
    return z


# --------------------------------------------------------------------------
# iterations


@dataclass
class SolverConfig:
    scheme: str = "picard"
    tol: float = 1e-9
    max_iter: int = 20000
    picard_lambda: tuple[float, float] = (0.01, 0.2)
    picard_switch: int = 50
    newton_lambda: tuple[float, float] = (0.5, 1.0)
    newton_switch: int = 10
    max_halvings: int = 5
    divergence_window: int = 50
    cap_patience: int = 3
    min_lambda: float = 1e-6

    def __post_init__(self) -> None:
        if self.scheme not in ("picard", "newton"):
            raise ValueError(f"unknown scheme {self.scheme!r}")
        for lam in (*self.picard_lambda, *self.newton_lambda):
            if not 0 < lam <= 1:
                raise ValueError(f"relaxation parameters must lie in (0, 1], got {lam}")
        if self.tol <= 0:
            raise ValueError("tolerance must be positive")


@dataclass
class SolveResult:
    z: np.ndarray
    density: np.ndarray
    mu: np.ndarray
    iterations: int
    history: list[float] = field(default_factory=list)
    converged: bool = True
    scheme: str = "picard"

    @property
    def final_residual(self) -> float:
        return self.history[-1] if self.history else np.nan


def _max_norm(r: np.ndarray) -> float:
    return float(np.max(np.abs(r))) if r.size else 0.0


def _mass_shift(problem: Problem, z: np.ndarray) -> np.ndarray:
    """Uniform shift of ``z`` per species restoring the fixed particle numbers."""
    n = problem.density(z)
    mass = n @ problem.grid.weights
    if np.any(mass <= 0):
        raise ConvergenceError("particle number vanished during fixed-N iteration")
    return problem.temperature * np.log(problem.n_fixed / mass)


def picard_solve(problem: Problem, z0: np.ndarray, config: SolverConfig | None = None) -> SolveResult:
    """Relaxed fixed-point iteration ``z <- z - lam (z - mu + T c + A n + V')``.

    ``lam`` follows the configured two-stage schedule, capped by a step size
    that halves after ``cap_patience`` consecutive residual increases or when
    a step violates the packing bound. The cap never grows again.

    With ``problem.n_fixed`` set, ``z`` and ``mu`` are shifted together every
    iteration so that the state carries the requested particle numbers.
    """
    cfg = config or SolverConfig()
    z = np.array(np.atleast_2d(z0), dtype=float)
    mu = problem.mu.copy()
    pz = problem.pinned_z()
    free = problem.free
    history: list[float] = []
    rising = 0
    cap = 1.0
    prev = np.inf
    for it in range(1, cfg.max_iter + 1):
        if problem.n_fixed is not None:
            shift = _mass_shift(problem, z)
            mu = mu + shift
            z = np.where(free, z + shift[:, None], z)
        n = problem.density(z)
        try:
            rest, _ = problem.stationary_part(n)
        except PackingError:
            if it == 1 or cap < cfg.min_lambda:
                raise
            # undo the last step and retry it shorter
            cap = 0.5 * lam
            z = np.where(free, z + 0.5 * lam * r, z)
            continue
        r = np.where(free, z - (mu[:, None] - rest), 0.0)
        res = _max_norm(r)
        history.append(res)
        if not np.isfinite(res):
            raise ConvergenceError(f"non-finite residual at iteration {it}", history)
        if res < cfg.tol:
            return SolveResult(z, n, mu, it, history, True, "picard")
        rising = rising + 1 if res > prev else 0
        prev = res
        if rising >= cfg.divergence_window:
            raise ConvergenceError(
                f"Picard residual grew for {rising} consecutive iterations (now {res:.3e})", history
            )
        lam = cfg.picard_lambda[0] if it <= cfg.picard_switch else cfg.picard_lambda[1]
        if rising and rising % cfg.cap_patience == 0:
            cap = 0.5 * min(cap, lam)
            log.debug("Picard step cap lowered to %.3g at iteration %d", cap, it)
        lam = min(lam, cap)
        z = np.where(free, z - lam * r, z)
        if pz is not None:
            z = np.where(problem.pinned[None, :], pz, z)
    raise ConvergenceError(f"Picard did not converge in {cfg.max_iter} iterations", history)


# --------------------------------------------------------------------------
# Newton on the extended unknowns (z, weighted densities)


def _newton_system(problem: Problem, z: np.ndarray, wd: np.ndarray | None, mu: np.ndarray, jacobian: bool = True):
    S, P = z.shape
    T = problem.temperature
    n = problem.density(z)
    free = problem.free
    rz = z + problem.mean_field(n) + problem.v_prime - mu[:, None]
    fmt = problem.fmt
    if fmt is not None:
        g = fmt.gradient(wd)
        rz = rz + T * sum(B @ gk for B, gk in zip(fmt.reverse, g))[None, :]
        ntot = n.sum(axis=0)
        rw = np.stack([w - F @ ntot for w, F in zip(wd, fmt.forward)])
    else:
        rw = np.zeros((0, 0))
    rz = np.where(free, rz, 0.0)
    R = np.concatenate([rz.ravel(), rw.ravel()])
    if not jacobian:
        return R, None
    K = 0 if fmt is None else fmt.n_components
    Pw = 0 if fmt is None else wd.shape[1]
    J = np.zeros((S * P + K * Pw, S * P + K * Pw))
    dn = n / T
    for s in range(S):
        rows = slice(s * P, (s + 1) * P)
        J[rows, rows] = np.eye(P)
        if problem.pair_ops is not None:
            for t in range(S):
                A = problem.pair_ops[s][t]
                if A is not None:
                    J[rows, t * P : (t + 1) * P] += A * dn[t][None, :]
    if fmt is not None:
        H = fmt.hessian(wd)
        off = S * P
        for j in range(K):
            blk = T * sum(fmt.reverse[k] * H[k, j][None, :] for k in range(K))
            for s in range(S):
                J[s * P : (s + 1) * P, off + j * Pw : off + (j + 1) * Pw] = blk
        for k in range(K):
            rows = slice(off + k * Pw, off + (k + 1) * Pw)
            J[rows, rows] = np.eye(Pw)
            for t in range(S):
                J[rows, t * P : (t + 1) * P] = -fmt.forward[k] * dn[t][None, :]
    # frozen points: identity rows keep z unchanged
    frozen = np.flatnonzero(~free.ravel())
    J[frozen, :] = 0.0
    J[frozen, frozen] = 1.0
    return R, J


def jacobian_vector(problem: Problem, z: np.ndarray, wd: np.ndarray | None, v: np.ndarray) -> np.ndarray:
    """Analytic Jacobian of the extended residual applied to ``v``."""
    _, J = _newton_system(problem, np.atleast_2d(z), wd, problem.mu)
    return J @ v


def extended_residual(problem: Problem, z: np.ndarray, wd: np.ndarray | None) -> np.ndarray:
    R, _ = _newton_system(problem, np.atleast_2d(z), wd, problem.mu, jacobian=False)
    return R


def newton_solve(problem: Problem, z0: np.ndarray, config: SolverConfig | None = None) -> SolveResult:
    """Damped Newton iteration with weighted densities as extra unknowns.

    Uses ``lam = 0.5`` for the first steps and ``lam = 1`` afterwards; a step
    that increases the residual is halved up to ``max_halvings`` times.
    """
    cfg = config or SolverConfig(scheme="newton", max_iter=200)
    if problem.n_fixed is not None:
        raise ValueError("fixed particle numbers are handled by picard_solve")
    z = np.array(np.atleast_2d(z0), dtype=float)
    S, P = z.shape
    mu = problem.mu
    wd = None if problem.fmt is None else problem.fmt.weighted(problem.density(z).sum(axis=0))
    history: list[float] = []
    R, J = _newton_system(problem, z, wd, mu)
    for it in range(1, cfg.max_iter + 1):
        res = _max_norm(R)
        history.append(res)
        if res < cfg.tol:
            n = problem.density(z)
            return SolveResult(z, n, mu, it, history, True, "newton")
        try:
            du = np.linalg.solve(J, -R)
        except np.linalg.LinAlgError as exc:
            raise ConvergenceError(f"singular Newton Jacobian at iteration {it}", history) from exc
        lam = cfg.newton_lambda[0] if it <= cfg.newton_switch else cfg.newton_lambda[1]
        admissible = False
        for _ in range(cfg.max_halvings + 1):
            z_new = z + lam * du[: S * P].reshape(S, P)
            wd_new = None if wd is None else wd + lam * du[S * P :].reshape(wd.shape)
            try:
                R_new, _ = _newton_system(problem, z_new, wd_new, mu, jacobian=False)
            except PackingError:
                lam *= 0.5
                continue
            admissible = bool(np.all(np.isfinite(R_new)))
            if admissible and _max_norm(R_new) < res:
                break
            lam *= 0.5
        if not admissible:
            raise ConvergenceError(f"Newton step left the admissible set at iteration {it}", history)
        z, wd = z_new, wd_new
        R, J = _newton_system(problem, z, wd, mu)
    raise ConvergenceError(f"Newton did not converge in {cfg.max_iter} iterations", history)


def solve(problem: Problem, z0: np.ndarray, config: SolverConfig | None = None) -> SolveResult:
    cfg = config or SolverConfig()
    if cfg.scheme == "newton":
        return newton_solve(problem, z0, cfg)
    return picard_solve(problem, z0, cfg)


def with_scheme(config: SolverConfig, scheme: str, **kw) -> SolverConfig:
    return replace(config, scheme=scheme, **kw)
