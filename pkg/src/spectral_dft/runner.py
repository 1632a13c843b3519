"""Execute a :class:`ScenarioConfig` and write its artifacts."""

from __future__ import annotations

import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import scenarios as sc
from .config import ScenarioConfig, dump_config
from .convolution import convergence_probe
from .ddft import mass_audit
from .geometry import composite_weighted_density_grid, halfspace_grid
from .kernels import attraction_kernel, hs_kernel
from .observables import contact_theorem_check, disjoining_pressure, normal_force_balance, young_angle
from .solver import SolverConfig
from .thermo import ModelParams, density_from_mu

log = logging.getLogger(__name__)


@dataclass
class RunResult:
    summary: dict
    tables: dict[str, tuple[list[str], np.ndarray]] = field(default_factory=dict)
    checks: dict[str, bool] = field(default_factory=dict)
    problems: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(self.checks.values())


# --------------------------------------------------------------------------
# helpers


def model_from(cfg: ScenarioConfig) -> ModelParams:
    p = cfg.physics
    return ModelParams(
        temperature=p.temperature, fmt=p.fmt, r_c=p.r_c, eps_w=p.eps_w, friction=p.friction, hd_normalized=p.hd_normalized
    )


def solver_config(cfg: ScenarioConfig, default_scheme: str = "picard") -> SolverConfig:
    n = cfg.numerics
    return SolverConfig(scheme=n.scheme or default_scheme, tol=n.tol, max_iter=n.max_iter)


def _profile_table(grid, densities) -> tuple[list[str], np.ndarray]:
    d = np.atleast_2d(densities)
    y1 = np.zeros(grid.n_points) if getattr(grid, "grid1", None) is None else grid.y1
    cols = ["y1", "y2"] + [f"n{s}" for s in range(d.shape[0])]
    return cols, np.column_stack([y1, grid.y2, d.T])


def _wd_table(problem, density) -> tuple[list[str], np.ndarray] | None:
    if problem.fmt is None:
        return None
    W = problem.wd_grid if problem.wd_grid is not None else problem.grid
    wd = problem.fmt.weighted(np.atleast_2d(density).sum(axis=0))
    names = ["n2", "n3", "v1", "v2", "txx", "txy", "tyy"][: wd.shape[0]]
    y1 = np.zeros(W.n_points) if getattr(W, "planar", False) else W.y1
    return ["y1", "y2", *names], np.column_stack([y1, W.y2, wd.T])


def _bulk_density(cfg: ScenarioConfig, model: ModelParams) -> float:
    p = cfg.physics
    if p.n_bulk is not None:
        return p.n_bulk
    return float(density_from_mu(p.mu, model, branch=p.phase if model.attraction else "any"))


# --------------------------------------------------------------------------
# scenarios


def _wall(cfg: ScenarioConfig, kind: str) -> RunResult:
    model = model_from(cfg)
    N = cfg.numerics.N2 or 100
    L = cfg.numerics.L2 or 2.0
    nb = None if kind != "wall" else _bulk_density(cfg, model)
    prof = sc.planar_interface_1d(
        model, kind, n_bulk=nb, N=N, L=L, config=solver_config(cfg), M=cfg.numerics.M, M_attr=cfg.numerics.M_attr
    )
    rep = contact_theorem_check(prof.grid, prof.density, model, prof.pressure)
    summary = {
        "kind": kind,
        "n_bulk": prof.n_bulk[0],
        "mu": prof.mu,
        "pressure": prof.pressure,
        "surface_tension": prof.surface_tension,
        "iterations": prof.result.iterations,
        "final_residual": prof.result.final_residual,
        "sum_rule": rep.to_dict(),
    }
    res = RunResult(summary, {"profile.csv": _profile_table(prof.grid, prof.density)}, problems=[prof.problem])
    if cfg.output.weighted_densities:
        res.tables["weighted_densities.csv"] = _wd_table(prof.problem, prof.density)
    res.checks["converged"] = bool(prof.result.converged)
    res.checks["sum_rule"] = rep.contact_relative_error < 1e-2
    return res


def run_hs_wall(cfg):
    return _wall(cfg, "wall")


def run_bh_wall(cfg):
    return _wall(cfg, "wall-liquid" if cfg.physics.phase == "liquid" else "wall-vapor")


def run_lv_interface(cfg):
    model = model_from(cfg)
    prof = sc.planar_interface_1d(
        model, "liquid-vapor", N=cfg.numerics.N1 or 100, L=cfg.numerics.L1 or 4.0,
        config=solver_config(cfg), M=cfg.numerics.M, M_attr=cfg.numerics.M_attr,
    )
    summary = {
        "n_liq": prof.n_bulk[0],
        "n_vap": prof.n_bulk[1],
        "mu_sat": prof.mu,
        "mu_discrete": float(prof.problem.mu[0]),
        "surface_tension": prof.surface_tension,
        "width_5_95": prof.extra["width"],
        "iterations": prof.result.iterations,
        "final_residual": prof.result.final_residual,
    }
    res = RunResult(summary, {"profile.csv": _profile_table(prof.grid, prof.density)}, problems=[prof.problem])
    res.checks["converged"] = bool(prof.result.converged)
    res.checks["width_positive"] = prof.extra["width"] > 0
    return res


def _contact_line(cfg: ScenarioConfig):
    n = cfg.numerics
    return sc.contact_line_2d(
        model_from(cfg), np.deg2rad(cfg.physics.theta_deg),
        N1=n.N1 or 30, N2=n.N2 or 30, L1=n.L1 or 4.0, L2=n.L2 or 2.0, y2max=n.y2max,
        config=solver_config(cfg, "newton"), M=n.M, M_attr=n.M_attr,
    )


def far_field_mismatch(cl) -> float:
    """Largest deviation of the ``y1 = +-inf`` columns from the planar wall profiles."""
    g = cl.grid
    n2 = cl.density2d
    keep = ~(g.grid2.phys_nodes > cl.y2max)
    y1 = g.grid1.phys_nodes
    liq = n2[np.argmin(y1)][keep] - cl.wall_liquid.density[keep]
    vap = n2[np.argmax(y1)][keep] - cl.wall_vapor.density[keep]
    return float(max(np.max(np.abs(liq)), np.max(np.abs(vap))))


def run_contact_line(cfg):
    cl = _contact_line(cfg)
    model = cl.profile.model
    g = cl.grid
    y1, pi = disjoining_pressure(g, cl.profile.density, model, cl.profile.pressure)
    theta = cl.theta
    fb = normal_force_balance(y1, g.grid1.weights, pi, cl.liquid_vapor.surface_tension, theta)
    ff = far_field_mismatch(cl)
    try:
        young = float(np.rad2deg(young_angle(
            cl.wall_vapor.surface_tension, cl.wall_liquid.surface_tension, cl.liquid_vapor.surface_tension
        )))
    except ValueError:
        young = None
    summary = {
        "theta_deg": cfg.physics.theta_deg,
        "young_angle_deg": young,
        "gamma_wl": cl.wall_liquid.surface_tension,
        "gamma_wv": cl.wall_vapor.surface_tension,
        "gamma_lv": cl.liquid_vapor.surface_tension,
        "force_balance": fb.to_dict(),
        "far_field_mismatch": ff,
        "iterations": cl.profile.result.iterations,
        "final_residual": cl.profile.result.final_residual,
    }
    tables = {
        "profile.csv": _profile_table(g, cl.profile.density),
        "disjoining_pressure.csv": (["y1", "Pi"], np.column_stack([y1, pi])),
    }
    res = RunResult(summary, tables, problems=[cl.profile.problem])
    res.checks["converged"] = bool(cl.profile.result.converged)
    res.checks["far_field"] = ff < 1e-3
    return res


def _mixture(cfg: ScenarioConfig, N: int):
    sp = cfg.physics.species
    if cfg.scenario == "multispecies-box":
        prob = sc.gaussian_box_problem(N, alphas=tuple(s.alpha for s in sp), M=cfg.numerics.M or 40)
    else:
        prob = sc.hd_mixture_problem(N, L=cfg.numerics.L1 or 4.0, M=cfg.numerics.M or 10, normalized=cfg.physics.hd_normalized)
    prob.n_fixed = np.array([s.particles for s in sp], dtype=float)
    return sc.multispecies_solve(prob, solver_config(cfg))


def run_multispecies(cfg):
    Ns = cfg.numerics.N_list or [cfg.numerics.N1 or 30]
    mixes = [_mixture(cfg, N) for N in Ns]
    m = mixes[-1]
    target = np.array([s.particles for s in cfg.physics.species])
    summary = {"N": Ns, "masses": m.masses().tolist(), "iterations": m.result.iterations}
    if len(mixes) > 1:
        side = 10.0 if cfg.scenario == "multispecies-box" else None
        pts = sc.probe_points(0.0, side) if side else sc.probe_points(-3.0, 3.0)
        summary["relative_increments"] = sc.relative_increments(mixes, pts)
    res = RunResult(summary, {"profile.csv": _profile_table(m.grid, m.densities)}, problems=[m.problem])
    res.checks["converged"] = all(bool(x.result.converged) for x in mixes)
    res.checks["masses"] = bool(np.all(np.abs(m.masses() - target) < 1e-8 * np.maximum(1.0, target)))
    return res


def run_ddft(cfg):
    p = cfg.physics
    cl = _contact_line(cfg)
    system = sc.pulsed_wall_system(cl, p.d_eps_w, p.tau, inertial=p.inertial, friction=p.friction)
    times = np.linspace(0.0, p.t_end, p.n_samples)
    traj = system.run(
        system.pack(cl.profile.density), p.t_end, times,
        rtol=cfg.numerics.rtol, atol=cfg.numerics.atol, first_step=min(1e-3, p.tau / 100),
    )
    ledger = mass_audit(system, traj)
    tables = {}
    g = cl.grid
    for j, t in enumerate(times):
        n, _ = system.unpack(traj.y[:, j])
        tables[f"density_t{j:03d}.csv"] = _profile_table(g, n)
    summary = {
        "times": times.tolist(),
        "inertial": p.inertial,
        "steps": traj.n_steps,
        "mass_ledger": ledger.to_dict(),
        "min_density": float(np.min(traj.y[: g.n_points])),
    }
    res = RunResult(summary, tables, problems=[cl.profile.problem])
    res.checks["mass_audit"] = ledger.max_error < 1e-2
    res.checks["non_negative"] = summary["min_density"] > -1e-8
    return res


def _convergence_point(args):
    cfg, N = args
    sub = cfg.model_copy(update={"numerics": cfg.numerics.model_copy(update={"N2": N})})
    model = model_from(sub)
    nb = _bulk_density(sub, model)
    kind = "wall" if not model.attraction else ("wall-liquid" if sub.physics.phase == "liquid" else "wall-vapor")
    prof = sc.planar_interface_1d(
        model, kind, n_bulk=nb if kind == "wall" else None, N=N, L=sub.numerics.L2 or 2.0, config=solver_config(sub)
    )
    rep = contact_theorem_check(prof.grid, prof.density, model, prof.pressure)
    return N, prof.grid, prof.density, rep.contact_relative_error


def run_convergence(cfg, jobs: int = 1):
    Ns = cfg.numerics.N_list
    args = [(cfg, N) for N in Ns]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            pts = list(ex.map(_convergence_point, args))
    else:
        pts = [_convergence_point(a) for a in args]
    # profile increments on the finite nodes of the finer grid
    rows = []
    for k, (N, g, n, err) in enumerate(pts):
        inc = np.nan
        if k > 0:
            _, g0, n0, _ = pts[k - 1]
            fin = np.isfinite(g.y2)
            coarse = g0.interpolation_matrix(np.column_stack([np.zeros(fin.sum()), g.y2[fin]])) @ n0
            inc = float(np.max(np.abs(coarse - n[fin])))
        rows.append((N, err, inc))
    table = np.array(rows, dtype=float)
    summary = {"N": Ns, "sum_rule_error": table[:, 1].tolist(), "max_increment": table[1:, 2].tolist()}
    res = RunResult(summary, {"convergence.csv": (["N", "sum_rule_error", "max_increment"], table)})
    res.checks["increments_decrease"] = bool(table[-1, 2] < table[1, 2]) if len(rows) > 2 else True
    return res


def run_operator_probe(cfg):
    n = cfg.numerics
    N1, N2 = n.N1 or 20, n.N2 or 20
    L1, L2 = n.L1 or 2.0, n.L2 or 2.0
    g = halfspace_grid(N1, N2, L1, L2)
    name = cfg.physics.kernel
    if name == "attr":
        kernel, target = attraction_kernel(cfg.physics.r_c or 2.5), g
    else:
        kernel, target = hs_kernel(name), composite_weighted_density_grid(N1, N2, L1, L2)
    inc = convergence_probe(kernel, g, target, n.M_list)
    table = np.array(inc, dtype=float)
    slope = float(np.polyfit(table[:, 0], np.log(np.maximum(table[:, 1], 1e-300)), 1)[0]) if len(inc) > 1 else np.nan
    summary = {"kernel": name, "M": [m for m, _ in inc], "increments": [e for _, e in inc], "log_slope": slope}
    res = RunResult(summary, {"probe.csv": (["M", "increment"], table)})
    res.checks["decreasing"] = bool(table[-1, 1] < table[0, 1])
    return res


RUNNERS = {
    "hs-wall-1d": run_hs_wall,
    "bh-wall-1d": run_bh_wall,
    "lv-interface-1d": run_lv_interface,
    "contact-line-2d": run_contact_line,
    "multispecies-box": run_multispecies,
    "multispecies-hd": run_multispecies,
    "ddft-wall": run_ddft,
    "convergence-study": run_convergence,
    "operator-probe": run_operator_probe,
}


def execute(cfg: ScenarioConfig, jobs: int = 1) -> RunResult:
    fn = RUNNERS[cfg.scenario]
    return fn(cfg, jobs) if cfg.scenario == "convergence-study" else fn(cfg)


# --------------------------------------------------------------------------
# artifacts


def _jsonable(x):
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.floating, float)):
        v = float(x)
        return v if np.isfinite(v) else repr(v)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    return x


def write_table(path: Path, header: list[str], data: np.ndarray) -> None:
    # repr-exact values keep reruns byte-identical
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in np.atleast_2d(data):
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


def write_artifacts(cfg: ScenarioConfig, result: RunResult, out_dir, dump_operators: bool = False) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    if "csv" in cfg.output.formats:
        for name, table in result.tables.items():
            if table is None:
                continue
            write_table(out / name, *table)
            written.append(out / name)
    if "json" in cfg.output.formats:
        doc = {"scenario": cfg.scenario, "summary": result.summary, "checks": result.checks, "config": dump_config(cfg)}
        path = out / "summary.json"
        path.write_text(json.dumps(_jsonable(doc), indent=2, sort_keys=True) + "\n")
        written.append(path)
    if dump_operators:
        for k, prob in enumerate(result.problems):
            arrays = {}
            if prob.fmt is not None:
                for i, (F, B) in enumerate(zip(prob.fmt.forward, prob.fmt.reverse)):
                    arrays[f"fmt_forward_{i}"] = F
                    arrays[f"fmt_reverse_{i}"] = B
            for s, row in enumerate(prob.pair_ops or []):
                for t, A in enumerate(row):
                    if A is not None:
                        arrays[f"pair_{s}_{t}"] = A
            path = out / f"operators_{k}.npz"
            np.savez_compressed(path, **arrays)
            written.append(path)
    return written
