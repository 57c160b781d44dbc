"""Command-line driver: run, convergence, case-gen."""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

import numpy as np

from . import casegen, report
from .analytic import l2_error, convergence_order
from .boundary import BoundaryResolver
from .config import ConfigError, RunConfig, load_config
from .integrator import Solver, SolverError, simulate
from .layers import LayerConfig, State
from .mesh import build_dual, read_mesh, validate, write_mesh, MeshError
from .output import (GaugeWriter, SummaryWriter, read_vtk_state, write_convergence_csv, write_vtk)
from .viscous import RheologyParams


def _load_mesh(path):
    tri = read_mesh(path)
    mesh = build_dual(tri)
    problems = validate(mesh)
    if problems:
        raise MeshError(f"{path}: " + "; ".join(problems))
    return mesh


def _initial_state(cfg: RunConfig, mesh, layers) -> State:
    kind = cfg.initial["kind"]
    if kind == "case":
        case = cfg.cases[cfg.initial["case"]]
        return case.init_state(mesh, layers, t=float(cfg.initial.get("t0", 0.0)), h_dry=cfg.h_dry)
    if kind == "still":
        level = float(cfg.initial["level"])
        st = State.zeros(mesh, layers)
        st.h_dry = cfg.h_dry
        st.h[:] = np.maximum(level - st.zb, 0.0)
        return st
    if kind == "file":
        return read_vtk_state(cfg.initial["path"], mesh, layers, cfg.h_dry)
    raise ConfigError(f"unknown initial kind '{kind}'")


def _build_solver(cfg: RunConfig, mesh, layers, order=None) -> Solver:
    control = cfg.control
    if order is not None and order != control.order:
        from dataclasses import replace
        control = replace(control, order=order)
    rheology = cfg.rheology
    case = cfg.primary_case()
    if case is not None and getattr(case, "nu", 0.0) and case.name == "draining":
        # viscous draining tank: per-case friction and wind closures
        rheology = RheologyParams(nu=case.nu, wind=case.wind, t_s=case.wind_direction)
        rheology.kappa_field = case.kappa_field
    boundary = BoundaryResolver(mesh, cfg.boundaries, cfg.g, cfg.h_dry) if mesh.bnd_nodes.size else None
    return Solver(mesh, layers, g=cfg.g, control=control, rheology=rheology,
                  boundary=boundary, h_dry=cfg.h_dry)


def cmd_run(args) -> int:
    cfg = load_config(args.config)
    if args.order:
        cfg.control.order = args.order
    if args.out:
        cfg.outdir = args.out
    mesh = _load_mesh(cfg.mesh_path)
    layers = cfg.layers
    state = _initial_state(cfg, mesh, layers)
    solver = _build_solver(cfg, mesh, layers)

    outdir = Path(cfg.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    gauges = GaugeWriter(outdir / "gauges", mesh, layers, cfg.gauges, cfg.gauge_stride) \
        if cfg.gauges.size else None
    summary = SummaryWriter(outdir / "summary.csv")

    if cfg.source is not None and cfg.source.t_trigger <= state.t:
        state.zb = state.zb + cfg.source.displacement(mesh.xy[:, 0], mesh.xy[:, 1])
    pending_source = cfg.source if (cfg.source and cfg.source.t_trigger > state.t) else None

    epochs = list(cfg.epochs)
    (outdir / "fields").mkdir(exist_ok=True)

    def emit_fields(st):
        k = len(list((outdir / "fields").glob("epoch_*.vtk")))
        write_vtk(outdir / "fields" / f"epoch_{k}.vtk", st)

    if epochs and abs(epochs[0] - state.t) < 1e-12:
        emit_fields(state)
        epochs.pop(0)

    summary.record(state, 0.0, cfg.g)
    if gauges:
        gauges.record(state, force=True)

    t0 = time.perf_counter()
    try:
        while state.t < cfg.control.t_end - 1e-14 * max(1.0, cfg.control.t_end):
            stop = cfg.control.t_end
            if epochs:
                stop = min(stop, epochs[0])
            if pending_source is not None:
                stop = min(stop, pending_source.t_trigger)
            state = simulate(solver, state, stop,
                             on_step=lambda st, dt: (summary.record(st, dt, cfg.g),
                                                     gauges.record(st) if gauges else None),
                             steady_tol=cfg.steady_tol, steady_min_t=cfg.steady_min_t)
            if pending_source is not None and state.t >= pending_source.t_trigger - 1e-14:
                state.zb = state.zb + pending_source.displacement(mesh.xy[:, 0], mesh.xy[:, 1])
                pending_source = None
            if epochs and state.t >= epochs[0] - 1e-12:
                emit_fields(state)
                epochs.pop(0)
            if cfg.steady_tol > 0.0 and state.t < stop - 1e-12:
                print(f"steady state reached at t={state.t:.6g}")
                break
    except SolverError as e:
        print(f"solver failure: {e}", file=sys.stderr)
        return 3
    finally:
        summary.write()
        if gauges:
            gauges.record(state, force=True)
            gauges.close()

    wall = time.perf_counter() - t0
    data = summary.as_arrays()
    drift = abs(data["mass"][-1] / data["mass"][0] - 1.0) if data["mass"][0] else 0.0
    eta = state.surface()
    print(f"finished t={state.t:.6g} in {wall:.1f}s  steps={len(data['t']) - 1}  "
          f"mass drift={drift:.3e}  min h={data['min_h'].min():.3e}  "
          f"max eta={eta.max():.6g}")

    if cfg.figures:
        report.summary_figure(outdir / "figures" / "summary.png", data)
        if gauges:
            import csv as _csv
            for k in range(len(gauges.nodes)):
                rows = list(_csv.reader(open(outdir / "gauges" / f"gauge_{k}.csv")))[1:]
                if rows:
                    tt = np.array([float(r[0]) for r in rows])
                    hh = np.array([float(r[1]) for r in rows])
                    report.gauge_figure(outdir / "figures" / f"gauge_{k}.png", tt, hh, f"gauge {k}")
    return 0


def cmd_convergence(args) -> int:
    cfg = load_config(args.config)
    case = cfg.primary_case()
    if case is None:
        raise ConfigError("convergence needs an analytic case in the config")
    mesh_specs = [s.strip() for s in args.meshes.split(",")]
    layer_counts = [int(v) for v in args.layers.split(",")] if args.layers else [cfg.layers.n] * len(mesh_specs)
    if len(layer_counts) != len(mesh_specs):
        raise ConfigError("--layers must list one layer count per mesh")
    orders = [int(v) for v in (args.orders or str(cfg.control.order)).split(",")]

    outdir = Path(args.out or cfg.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    rows = []
    sizes_by_order = {}
    errors_by_order = {}
    status = 0
    try:
        for order in orders:
            sizes, errors = [], []
            for spec, n_layers in zip(mesh_specs, layer_counts):
                mesh = _load_mesh(spec) if Path(spec).exists() else _case_mesh(case, int(spec))
                layers = LayerConfig.uniform(n_layers)
                state = _initial_state(cfg, mesh, layers)
                solver = _build_solver(cfg, mesh, layers, order=order)
                state = simulate(solver, state, cfg.control.t_end,
                                 steady_tol=cfg.steady_tol, steady_min_t=cfg.steady_min_t)
                err = l2_error(state, case, state.t)
                sizes.append(mesh.avg_edge_length)
                errors.append(err)
                rows.append((spec, f"{mesh.avg_edge_length:.6g}", mesh.n_nodes, n_layers, order, f"{err:.10g}"))
                print(f"order {order}  mesh {spec:>8}  h_a={mesh.avg_edge_length:.4g}  "
                      f"N={n_layers}  L2={err:.6g}")
            slope = convergence_order(errors, sizes)
            print(f"order {order}: fitted slope {slope:.3f}")
            sizes_by_order[order] = sizes
            errors_by_order[order] = errors
    except SolverError as e:
        print(f"run failed, writing partial table: {e}", file=sys.stderr)
        status = 3
    write_convergence_csv(outdir / "convergence.csv", rows)
    if sizes_by_order:
        report.convergence_figure(outdir / "convergence.png", sizes_by_order, errors_by_order,
                                  title=f"{case.name}: L2(h) convergence")
    return status


def _case_mesh(case, target_nodes):
    if case.name == "channel":
        tri = casegen.channel_mesh(target_nodes, case)
    elif case.name == "thacker":
        tri = casegen.thacker_mesh(target_nodes, case)
    elif case.name == "draining":
        tri = casegen.draining_mesh(target_nodes, case)
    else:
        raise ConfigError(f"no mesh generator for case '{case.name}'")
    return build_dual(tri)


def cmd_case_gen(args) -> int:
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    name = args.name
    nodes = args.nodes
    if name == "channel":
        from .analytic import StationaryChannel
        case = StationaryChannel()
        tri = casegen.channel_mesh(nodes, case)
        qs = case.layer_flux(np.array([0.0]), LayerConfig.uniform(args.layers).l)[:, 0]
        hg = float(case.h0(np.array([case.x_max]))[0])
        body = _CHANNEL_CFG.format(layers=args.layers, q=", ".join(f"{v:.12g}" for v in qs), hg=f"{hg:.12g}")
    elif name == "thacker":
        from .analytic import ThackerBowl
        case = ThackerBowl()
        tri = casegen.thacker_mesh(nodes, case)
        body = _THACKER_CFG.format(layers=args.layers, t_end=case.period)
    elif name == "draining":
        from .analytic import DrainingTank
        case = DrainingTank()
        tri = casegen.draining_mesh(nodes, case)
        body = _DRAINING_CFG.format(layers=args.layers)
    elif name == "basin":
        tri = casegen.random_topography_mesh(nodes)
        body = _BASIN_CFG.format(layers=args.layers)
    elif name == "tsunami":
        tri = casegen.symmetric_mesh(-1.0, 1.0, -1.0, 1.0, int(np.sqrt(nodes / 2)), int(np.sqrt(nodes / 2)))
        body = _TSUNAMI_CFG.format(layers=args.layers)
    else:
        print(f"unknown case '{name}'", file=sys.stderr)
        return 2
    write_mesh(outdir / f"{name}.mesh", tri)
    (outdir / f"{name}.cfg").write_text(f"[run]\nmesh = {name}.mesh\n" + body)
    print(f"wrote {outdir / (name + '.mesh')} ({tri.xy.shape[0]} nodes) and {outdir / (name + '.cfg')}")
    return 0


_CHANNEL_CFG = """order = 1
t_end = 60.0
steady_tol = 1e-8
steady_min_t = 20.0

[layers]
count = {layers}

[initial]
kind = case
case = flow

[case.flow]
type = channel

[boundary.left]
kind = fluvial_flux
profile = per_layer
q = {q}

[boundary.right]
kind = fluvial_depth
h = {hg}

[boundary.top]
kind = wall

[boundary.bottom]
kind = wall

[gauges]
points = 10:1

[output]
dir = out_channel
epochs = 0
"""

_THACKER_CFG = """order = 1
t_end = {t_end:.12g}

[layers]
count = {layers}

[initial]
kind = case
case = bowl

[case.bowl]
type = thacker
a = 2.0
b = 1.0
gamma = 0.3
c = -1.0

[boundary.left]
kind = wall
[boundary.right]
kind = wall
[boundary.top]
kind = wall
[boundary.bottom]
kind = wall

[gauges]
points = 0:0

[output]
dir = out_thacker
epochs = 0
"""

_DRAINING_CFG = """order = 1
t_end = 1.0

[layers]
count = {layers}

[initial]
kind = case
case = tank

[case.tank]
type = draining
a = 1.0
b = 2.5
L = 2.0
theta = 0.0
t0 = 0.0
t1 = 0.5
nu = 0.0

[boundary.left]
kind = analytic
case = tank
[boundary.right]
kind = analytic
case = tank
[boundary.top]
kind = analytic
case = tank
[boundary.bottom]
kind = analytic
case = tank

[gauges]
points = 1:0.5

[output]
dir = out_draining
epochs = 0
"""

_BASIN_CFG = """order = 1
t_end = 1.0

[layers]
count = {layers}

[initial]
kind = still
level = 1.0

[boundary.left]
kind = wall
[boundary.right]
kind = wall
[boundary.top]
kind = wall
[boundary.bottom]
kind = wall

[output]
dir = out_basin
"""

_TSUNAMI_CFG = """order = 2
t_end = 0.25

[layers]
count = {layers}

[initial]
kind = still
level = 1.0

[source]
amplitude = 0.05
x0 = 0.0
y0 = 0.0
sigma = 0.15
t_trigger = 0.0

[boundary.left]
kind = wall
[boundary.right]
kind = wall
[boundary.top]
kind = wall
[boundary.bottom]
kind = wall

[gauges]
points = 0.5:0

[output]
dir = out_tsunami
epochs = 0, 0.25
"""


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="layerflow",
                                 description="layer-averaged free-surface flow solver")
    ap.add_argument("--threads", type=int, default=1,
                    help="worker hint (results are bitwise identical for any value)")
    sub = ap.add_subparsers(dest="cmd", required=True)

    p_run = sub.add_parser("run", help="run one configuration")
    p_run.add_argument("config")
    p_run.add_argument("--order", type=int, choices=(1, 2), default=None)
    p_run.add_argument("--out", default=None)
    p_run.set_defaults(fn=cmd_run)

    p_conv = sub.add_parser("convergence", help="mesh-refinement study against the analytic case")
    p_conv.add_argument("config")
    p_conv.add_argument("--meshes", required=True,
                        help="comma list of mesh files or target node counts")
    p_conv.add_argument("--layers", default=None, help="comma list of layer counts per mesh")
    p_conv.add_argument("--orders", default=None, help="comma list of scheme orders")
    p_conv.add_argument("--out", default=None)
    p_conv.set_defaults(fn=cmd_convergence)

    p_gen = sub.add_parser("case-gen", help="generate a mesh and config for a named case")
    p_gen.add_argument("name", choices=("channel", "thacker", "draining", "basin", "tsunami"))
    p_gen.add_argument("--nodes", type=int, default=600)
    p_gen.add_argument("--layers", type=int, default=2)
    p_gen.add_argument("-o", "--out", default=".")
    p_gen.set_defaults(fn=cmd_case_gen)

    args = ap.parse_args(argv)
    try:
        return args.fn(args)
    except (ConfigError, MeshError, KeyError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
