"""Command-line interface: ``trescafem <command> [flags]``.

Exit codes: 0 ok, 2 configuration error, 3 solver non-convergence, 4 I/O
error.  Failures print a JSON object to stderr.
"""

from __future__ import annotations

import argparse
import copy
import json
import logging
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

from . import data as registry
from .assembly import (
    ElasticMaterial,
    SolverError,
    StiffnessSystem,
    assemble_body_load,
    assemble_boundary_normal_load,
    assemble_stiffness,
    energy_norm,
    recover_boundary_traction,
    solve_dirichlet_neumann,
)
from .control import ControlConfig, ControlError, ControlProblem
from .export import boundary_theta, write_boundary_csv, write_csv, write_json, write_vtk
from .mesh import MeshError, TriMesh, build_boundary_topology, generate_disk_mesh, load_mesh, polygon_perimeter, save_mesh
from .sensitivity import PerturbationFamily, SensitivityError, derivative_convergence, gateaux_check
from .vi import (
    NonConvergenceError,
    TrescaOptions,
    TrescaProblemSpec,
    compute_boundary_partition,
    random_cone_fields,
    signorini_spec_from_tresca,
    signorini_vi_gap,
    solve_tangential_signorini,
    solve_tresca,
    tresca_residuals,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NONCONVERGED = 3
EXIT_IO = 4

CONFIG_SECTIONS = {"mesh", "material", "data", "tolerances", "control", "sensitivity", "gradcheck", "samples", "seed"}

log = logging.getLogger("trescafem")


class ConfigError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # noqa: D401 - argparse hook
        _emit_error("config", message)
        sys.exit(EXIT_CONFIG)


def _emit_error(kind: str, message: str, **details) -> None:
    sys.stderr.write(json.dumps({"error": kind, "message": message, **details}, sort_keys=True) + "\n")


def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = v
    return out


def load_config(spec: str | None) -> dict:
    """Built-in key, JSON file merged over the built-in defaults, or the defaults."""
    base = registry.builtin_config("paper-3.3.2")
    if spec is None:
        return base
    if spec in registry.BUILTIN_CONFIGS:
        return registry.builtin_config(spec)
    path = Path(spec)
    if not path.is_file():
        raise ConfigError(f"config {spec!r} is neither a built-in key {sorted(registry.BUILTIN_CONFIGS)} nor a file")
    try:
        user = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {spec!r} is not valid JSON: {exc}") from exc
    if not isinstance(user, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(user) - CONFIG_SECTIONS
    if unknown:
        raise ConfigError(f"unknown config sections {sorted(unknown)}")
    return _merge(base, user)


@dataclass
class Context:
    cfg: dict
    mesh: TriMesh
    system: StiffnessSystem
    opts: TrescaOptions
    f: Callable
    h: np.ndarray
    g1: np.ndarray
    g2: np.ndarray
    z0: np.ndarray
    rng: np.random.Generator
    out: Path

    @property
    def topology(self):
        return self.system.topology

    def body_load(self) -> np.ndarray:
        return assemble_body_load(self.mesh, self.f)

    def threshold(self) -> np.ndarray:
        g = self.cfg["data"].get("g")
        if g is None:
            return self.g1 + self.z0 * self.g2
        return self.topology.evaluate(registry.scalar_field(g))


def _apply_overrides(cfg: dict, args) -> dict:
    if getattr(args, "n_boundary", None) is not None:
        cfg["mesh"]["n_boundary"] = args.n_boundary
    tol = cfg.setdefault("tolerances", {})
    for name in ("tol_slip", "tol_crit", "tol_law"):
        v = getattr(args, name, None)
        if v is not None:
            tol[name] = v
    if getattr(args, "seed", None) is not None:
        cfg["seed"] = args.seed
    cfg.setdefault("seed", 0)
    return cfg


def _mesh_from(cfg: dict, mesh_path: str | None) -> TriMesh:
    if mesh_path is not None:
        p = Path(mesh_path)
        if not p.is_file():
            raise ConfigError(f"mesh file {mesh_path!r} does not exist")
        return load_mesh(p)
    m = cfg["mesh"]
    arc = m.get("dirichlet_arc", [0.0, np.pi / 2])
    return generate_disk_mesh(int(m["n_boundary"]), tuple(arc))


def _tresca_options(cfg: dict) -> TrescaOptions:
    t = cfg.get("tolerances", {})
    unknown = set(t) - {"tol_slip", "tol_crit", "tol_law", "max_outer"}
    if unknown:
        raise ConfigError(f"unknown tolerances {sorted(unknown)}")
    opts = TrescaOptions(
        tol_slip=t.get("tol_slip"),
        tol_crit=float(t.get("tol_crit", 1e-3)),
        tol_law=float(t.get("tol_law", 1e-6)),
        max_outer=int(t.get("max_outer", 200)),
    )
    for name in ("tol_crit", "tol_law"):
        if not getattr(opts, name) > 0:
            raise ConfigError(f"{name} must be positive")
    if opts.tol_slip is not None and not opts.tol_slip > 0:
        raise ConfigError("tol_slip must be positive")
    return opts


def build_context(args) -> Context:
    cfg = _apply_overrides(load_config(args.config), args)
    mesh = _mesh_from(cfg, args.mesh)
    mat = cfg["material"]
    material = ElasticMaterial(float(mat["mu"]), float(mat["lambda"]))
    top = build_boundary_topology(mesh)
    system = assemble_stiffness(mesh, material, top)
    d = cfg["data"]
    out = Path(args.out)
    return Context(
        cfg=cfg,
        mesh=mesh,
        system=system,
        opts=_tresca_options(cfg),
        f=registry.vector_field(d["f"]),
        h=top.evaluate(registry.scalar_field(d["h"])),
        g1=top.evaluate(registry.scalar_field(d["g1"])),
        g2=top.evaluate(registry.scalar_field(d["g2"])),
        z0=top.evaluate(registry.scalar_field(d["z0"])),
        rng=np.random.default_rng(int(cfg["seed"])),
        out=out,
    )


def _prepare_out(out: Path) -> None:
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {str(out)!r}: {exc}") from exc


def cmd_mesh(args) -> list[str]:
    cfg = _apply_overrides(load_config(args.config), args)
    mesh = _mesh_from(cfg, args.mesh)
    top = build_boundary_topology(mesh)
    out = Path(args.out)
    _prepare_out(out)
    save_mesh(mesh, out / "mesh.tmesh")
    write_json(
        out / "summary.json",
        {
            "n_vertices": mesh.n_vertices,
            "n_triangles": len(mesh.triangles),
            "n_boundary_edges": len(mesh.boundary_edges),
            "n_dirichlet_edges": int(np.count_nonzero(mesh.edge_tags == "D")),
            "n_neumann_nodes": top.n_neumann,
            "perimeter": polygon_perimeter(mesh),
            "max_edge_length": mesh.max_edge_length,
        },
    )
    return ["mesh.tmesh", "summary.json"]


def cmd_solve_dn(args) -> list[str]:
    ctx = build_context(args)
    b = ctx.body_load()
    load = b + assemble_boundary_normal_load(ctx.mesh, ctx.topology, ctx.h)
    u = solve_dirichlet_neumann(ctx.system, load)
    tr = recover_boundary_traction(ctx.system, u, b)
    _prepare_out(ctx.out)
    write_vtk(ctx.out / "solution.vtk", ctx.mesh, {"displacement": u})
    un = u.reshape(-1, 2)[ctx.topology.neumann_nodes]
    write_boundary_csv(
        ctx.out / "boundary.csv",
        ctx.topology,
        {
            "u_tau": np.sum(un * ctx.topology.neumann_tangent, axis=1),
            "sigma_tau": tr.sigma_t,
            "sigma_n": tr.sigma_n,
        },
    )
    write_json(ctx.out / "summary.json", {"energy_norm": energy_norm(ctx.system, u), "max_abs_u": float(np.max(np.abs(u)))})
    return ["solution.vtk", "boundary.csv", "summary.json"]


def cmd_solve_tresca(args) -> list[str]:
    ctx = build_context(args)
    g = ctx.threshold()
    sol = solve_tresca(TrescaProblemSpec(ctx.body_load(), ctx.h, g), ctx.system, ctx.opts)
    part = compute_boundary_partition(sol, g, ctx.opts.slip_tolerance(ctx.system), ctx.opts.tol_crit)
    res = tresca_residuals(sol, ctx.system, n_samples=int(ctx.cfg.get("samples", 50)), rng=ctx.rng)
    _prepare_out(ctx.out)
    write_vtk(ctx.out / "solution.vtk", ctx.mesh, {"displacement": sol.u})
    write_boundary_csv(
        ctx.out / "boundary.csv",
        ctx.topology,
        {"u_tau": sol.u_t, "sigma_tau": sol.sigma_t, "sigma_n": sol.sigma_n, "g": g, "label": sol.labels, "class": part.classes},
    )
    write_json(
        ctx.out / "summary.json",
        {
            "iterations": sol.iterations,
            "switch_history": sol.switch_history,
            "n_stick": sol.n_stick,
            "n_slip": sol.n_slip,
            "partition": part.counts(),
            "residuals": res.as_dict(),
            "energy_norm": energy_norm(ctx.system, sol.u),
            "seed": ctx.cfg["seed"],
        },
    )
    return ["solution.vtk", "boundary.csv", "summary.json"]


def _family(ctx: Context) -> PerturbationFamily:
    s = ctx.cfg["sensitivity"]
    scale = float(s.get("fp_scale", 1.0))
    fp = scale * assemble_body_load(ctx.mesh, registry.vector_field(s.get("fp", "zero")))
    return PerturbationFamily(
        f0=ctx.body_load(),
        fp=fp,
        g0=ctx.threshold(),
        gp=ctx.topology.evaluate(registry.scalar_field(s.get("gp", 0.0))),
        h0=ctx.h,
        hp=ctx.topology.evaluate(registry.scalar_field(s.get("hp", 0.0))),
    )


def cmd_solve_signorini(args) -> list[str]:
    ctx = build_context(args)
    fam = _family(ctx).resolve(ctx.system)
    sol0 = solve_tresca(fam.at(0.0), ctx.system, ctx.opts)
    part = compute_boundary_partition(sol0, fam.g0, ctx.opts.slip_tolerance(ctx.system), ctx.opts.tol_crit)
    spec = signorini_spec_from_tresca(sol0, part, ctx.system, fp=fam.fp, hp=fam.hp, gp=fam.gp)
    res = solve_tangential_signorini(spec, ctx.system, ctx.opts)
    worst = 0.0
    for w in random_cone_fields(spec, ctx.system, res.u, int(ctx.cfg.get("samples", 50)), ctx.rng):
        gap, scale = signorini_vi_gap(spec, ctx.system, res.u, w)
        if scale > 0:
            worst = min(worst, gap / scale)
    top = ctx.topology
    upt = np.sum(res.u.reshape(-1, 2)[top.neumann_nodes] * top.neumann_tangent, axis=1)
    _prepare_out(ctx.out)
    write_vtk(ctx.out / "derivative.vtk", ctx.mesh, {"derivative": res.u, "displacement": sol0.u})
    write_boundary_csv(ctx.out / "boundary.csv", top, {"uprime_tau": upt, "u0_tau": sol0.u_t, "class": part.classes})
    write_json(
        ctx.out / "summary.json",
        {
            "partition": part.counts(),
            "iterations": res.iterations,
            "n_released": int(np.count_nonzero(res.s_released)),
            "capped_nodes": spec.capped,
            "vi_worst_relative_gap": worst,
            "derivative_energy_norm": energy_norm(ctx.system, res.u),
            "seed": ctx.cfg["seed"],
        },
    )
    return ["derivative.vtk", "boundary.csv", "summary.json"]


def cmd_verify_sensitivity(args) -> list[str]:
    ctx = build_context(args)
    t_list = [float(t) for t in ctx.cfg["sensitivity"].get("t_list", [1e-2, 1e-3, 1e-4])]
    table = derivative_convergence(_family(ctx), t_list, ctx.system, ctx.opts)
    _prepare_out(ctx.out)
    write_csv(ctx.out / "sensitivity.csv", ["t", "err"], [(r.t, r.err) for r in table.rows])
    e = table.err
    write_json(
        ctx.out / "sensitivity.json",
        {
            "t": table.t,
            "err": e,
            "n_slip": [r.n_slip for r in table.rows],
            "t_stick_max": [r.t_stick_max for r in table.rows],
            "slopes": table.slopes(),
            "strictly_decreasing": table.strictly_decreasing(),
            "reduction_factor": float(e[0] / e[-1]) if e[-1] > 0 else None,
            "partition": table.partition.counts(),
            "uprime_energy_norm": table.uprime_norm,
            "capped_nodes": table.capped,
        },
    )
    return ["sensitivity.csv", "sensitivity.json"]


def _control_problem(ctx: Context) -> ControlProblem:
    c = ctx.cfg["control"]
    unknown = set(c) - {"beta", "m", "eta", "max_iters", "stop_window", "stop_threshold"}
    if unknown:
        raise ConfigError(f"unknown control parameters {sorted(unknown)}")
    cfg = ControlConfig(
        beta=float(c["beta"]),
        g1=ctx.g1,
        g2=ctx.g2,
        m=float(c["m"]),
        eta=None if c.get("eta") is None else float(c["eta"]),
        max_iters=int(c.get("max_iters", 2000)),
        stop_window=int(c.get("stop_window", 20)),
        stop_threshold=None if c.get("stop_threshold") is None else float(c["stop_threshold"]),
    )
    return ControlProblem(ctx.system, cfg, f=ctx.body_load(), h=ctx.h, tresca_opts=ctx.opts)


def cmd_gradcheck(args) -> list[str]:
    ctx = build_context(args)
    prob = _control_problem(ctx)
    t_list = [float(t) for t in ctx.cfg["gradcheck"].get("t_list", [1e-2, 1e-3, 1e-4])]
    ev = prob.evaluate(ctx.z0)
    directions = {"descent": prob.descent_direction(ev), "random": ctx.rng.uniform(-1.0, 1.0, len(ctx.z0))}
    rows = []
    for name, d in directions.items():
        formula = prob.gateaux_dJ(ev, d)
        for r in gateaux_check(lambda z: prob.cost_J(z)[0], ctx.z0, d, t_list, formula, J0=ev.J):
            rows.append((name, r.t, r.fd, r.formula, r.rel_err))
    a, b = 0.7, -1.3
    lhs = prob.gateaux_dJ(ev, a * directions["descent"] + b * directions["random"])
    rhs = a * prob.gateaux_dJ(ev, directions["descent"]) + b * prob.gateaux_dJ(ev, directions["random"])
    _prepare_out(ctx.out)
    write_csv(ctx.out / "gradcheck.csv", ["direction", "t", "fd", "formula", "rel_err"], rows)
    write_json(
        ctx.out / "gradcheck.json",
        {
            "J0": ev.J,
            "rows": [dict(zip(["direction", "t", "fd", "formula", "rel_err"], r)) for r in rows],
            "linearity_rel_err": abs(lhs - rhs) / max(abs(rhs), 1e-30),
            "partition": ev.partition.counts(),
            "seed": ctx.cfg["seed"],
        },
    )
    return ["gradcheck.csv", "gradcheck.json"]


def cmd_optimize(args) -> list[str]:
    ctx = build_context(args)
    prob = _control_problem(ctx)
    state = prob.optimize(ctx.z0)
    _prepare_out(ctx.out)
    write_csv(
        ctx.out / "history.csv",
        ["iter", "J", "compliance", "penalty", "switches"],
        [(r.iteration, r.J, r.compliance, r.penalty, r.switches) for r in state.cost_history],
    )
    theta = boundary_theta(ctx.topology)
    order = np.argsort(theta, kind="stable")
    write_csv(ctx.out / "control.csv", ["theta", "z"], [(theta[i], state.z[i]) for i in order])
    h = state.cost_history
    write_json(
        ctx.out / "summary.json",
        {
            "iterations": state.iterations,
            "converged": state.converged,
            "J_initial": h[0].J,
            "J_final": h[-1].J,
            "checkpoints": [list(c) for c in state.checkpoints],
            "bang_bang_fraction": state.bang_bang_fraction(),
            "eta": state.eta,
            "stop_threshold": state.stop_threshold,
            "max_dJ": max(r.dJ for r in h),
            "final_partition": state.partition_history[-1],
        },
    )
    return ["history.csv", "control.csv", "summary.json"]


COMMANDS = {
    "mesh": (cmd_mesh, "generate (or normalize) a mesh and write it in TMESH format"),
    "solve-dn": (cmd_solve_dn, "solve the Dirichlet-Neumann elasticity problem"),
    "solve-tresca": (cmd_solve_tresca, "solve the Tresca friction problem"),
    "solve-signorini": (cmd_solve_signorini, "solve the tangential Signorini derivative problem"),
    "verify-sensitivity": (cmd_verify_sensitivity, "finite-difference check of the solution derivative"),
    "gradcheck": (cmd_gradcheck, "finite-difference check of the cost differential"),
    "optimize": (cmd_optimize, "projected-gradient optimization of the friction control"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="trescafem", description="P1 elasticity with Tresca friction: solvers, derivatives, control.", allow_abbrev=False)
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    for name, (_, help_text) in COMMANDS.items():
        p = sub.add_parser(name, help=help_text, description=help_text, allow_abbrev=False)
        p.add_argument("--config", help="built-in config key or JSON file (default: built-in disk example)")
        p.add_argument("--mesh", help="mesh file in TMESH format (default: generate the disk mesh)")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--seed", type=int, help="seed for randomized sampling (default 0)")
        p.add_argument("--n-boundary", type=int, dest="n_boundary", help="boundary vertices of the generated disk mesh")
        p.add_argument("--tol-slip", type=float, dest="tol_slip", help="slip tolerance (default 1e-8 * diameter)")
        p.add_argument("--tol-crit", type=float, dest="tol_crit", help="critical-stick tolerance (default 1e-3)")
        p.add_argument("--tol-law", type=float, dest="tol_law", help="friction-law tolerance (default 1e-6)")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, stream=sys.stderr)
    func = COMMANDS[args.command][0]
    try:
        written = func(args)
    except (ConfigError, MeshError, KeyError, TypeError, ValueError) as exc:
        _emit_error("config", str(exc).strip("'\""))
        return EXIT_CONFIG
    except (NonConvergenceError, SensitivityError, ControlError, SolverError) as exc:
        cause = exc
        while not isinstance(cause, NonConvergenceError) and cause.__cause__ is not None:
            cause = cause.__cause__
        if isinstance(cause, ValueError):
            _emit_error("config", str(exc), control_iteration=getattr(exc, "iteration", None))
            return EXIT_CONFIG
        if not isinstance(cause, NonConvergenceError):
            _emit_error("solver", str(exc))
            return EXIT_NONCONVERGED
        details = {"iterations": cause.iterations, "last_switches": cause.last_switches, "oscillating_nodes": cause.oscillating}
        if isinstance(exc, ControlError):
            details["control_iteration"] = exc.iteration
        _emit_error("non_convergence", str(exc), **details)
        return EXIT_NONCONVERGED
    except OSError as exc:
        _emit_error("io", str(exc))
        return EXIT_IO
    print(json.dumps({"command": args.command, "out": str(args.out), "written": written}, sort_keys=True))
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
