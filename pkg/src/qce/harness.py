"""Execution engine behind the CLI: single runs, sweeps, comparisons and
the scaling benchmark, with CSV outputs and JSON run manifests.

CSV bodies are deterministic: fixed column order, '.' decimal separator,
17 significant digits.  A diverged sweep point is recorded in its row and
never aborts the sweep.
"""

from __future__ import annotations

import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import __version__, analytics, fock
from .algebra import Monomial
from .clusters import build_system, count_clusters
from .config import MethodSpec, RunConfig
from .integrate import MomentState, integrate, steady_state
from .model import ModelSpec, opo_model, shg_model


def _fmt(x) -> str:
    if isinstance(x, bool):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, str):
        return x
    return "%.17g" % float(x)


def write_csv(path: str, header: list[str], rows) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(x) for x in row) + "\n")


def build_model(cfg_model, g=None, E=None) -> ModelSpec:
    g = cfg_model.g if g is None else g
    E = cfg_model.E if E is None else E
    maker = shg_model if cfg_model.kind == "shg" else opo_model
    return maker(
        g, E, cfg_model.kappa_a, cfg_model.kappa_b, cfg_model.delta_a, cfg_model.delta_b
    )


def _fst_dims(method: MethodSpec, E: float) -> tuple[int, int]:
    return method.dims if method.dims else fock.default_dims(E)


def _observable_monomials(observables) -> dict[str, Monomial]:
    out = {}
    for name in observables:
        mode = 0 if name.endswith("a") else 1
        if name.startswith("na") or name.startswith("nb"):
            out[name] = Monomial.from_ops(2, [(mode, True), (mode, False)])
        else:  # g2_*
            out[name] = Monomial.from_ops(2, [(mode, True)] * 2 + [(mode, False)] * 2)
    return out


@dataclass
class PointResult:
    g: float
    E: float
    values: dict  # observable name -> float
    diverged: bool = False
    warnings: list = field(default_factory=list)
    wall_clock: float = 0.0
    size: int = 0  # cluster count or Hilbert dimension


def run_point(method: MethodSpec, cfg: RunConfig, g: float, E: float) -> PointResult:
    """Steady-state observables for one (g, E) point with one method."""
    model = build_model(cfg.model, g=g, E=E)
    t0 = time.perf_counter()
    values = {}
    warnings_ = []
    diverged = False
    if method.kind == "fst":
        dims = _fst_dims(method, E)
        run = fock.evolve(
            model,
            dims,
            horizon=cfg.horizon,
            rel_tol=cfg.fst_rel_tol,
            abs_tol=cfg.fst_abs_tol,
            n_samples=max(cfg.samples // 4, 11),
        )
        warnings_ = list(run.warnings)
        diverged = run.diverged
        size = int(np.prod(dims))
        if not diverged:
            rho = run.final_rho
            for name in cfg.observables:
                mode = 0 if name.endswith("a") else 1
                if name.startswith("g2"):
                    try:
                        values[name] = fock.g2(rho, mode, dims)
                    except ValueError:
                        values[name] = float("nan")
                else:
                    n_op = Monomial.from_ops(2, [(mode, True), (mode, False)])
                    values[name] = fock.expectation(rho, n_op, dims).real
    else:
        order = method.order
        system = build_system(model, order)
        size = system.size
        res = steady_state(system, cfg.horizon, cfg.rel_tol, cfg.abs_tol)
        diverged = res.diverged
        if not diverged:
            for name in cfg.observables:
                mode = 0 if name.endswith("a") else 1
                if name.startswith("g2"):
                    try:
                        values[name], _ = analytics.g2_from_moments(
                            res.state, system.basis, mode
                        )
                    except ValueError:
                        values[name] = float("nan")
                else:
                    values[name] = analytics.photon_number(res.state, system.basis, mode)
    if diverged:
        values = {name: float("nan") for name in cfg.observables}
    return PointResult(
        g=g, E=E, values=values, diverged=diverged, warnings=warnings_,
        wall_clock=time.perf_counter() - t0, size=size,
    )


def _sweep_grid(cfg: RunConfig):
    gs = cfg.sweep.get("g", np.array([cfg.model.g]))
    Es = cfg.sweep.get("E", np.array([cfg.model.E]))
    return [(float(g), float(E)) for g in gs for E in Es]


def _point_task(args):
    method, cfg, g, E = args
    return run_point(method, cfg, g, E)


def run_sweep(method: MethodSpec, cfg: RunConfig) -> list[PointResult]:
    points = _sweep_grid(cfg)
    tasks = [(method, cfg, g, E) for g, E in points]
    workers = cfg.workers or os.cpu_count() or 1
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_point_task, tasks))
    else:
        results = [_point_task(t) for t in tasks]
    return results


def run_dynamics(method: MethodSpec, cfg: RunConfig):
    """Trajectory of the configured observables for one method.

    Returns (times, columns dict, cluster dump or None, meta dict).
    """
    model = build_model(cfg.model)
    t0 = time.perf_counter()
    if method.kind == "fst":
        dims = _fst_dims(method, cfg.model.E)
        obs_monos = _observable_monomials([o for o in cfg.observables if not o.startswith("g2")])
        g2_modes = [0 if o.endswith("a") else 1 for o in cfg.observables if o.startswith("g2")]
        extra = [
            Monomial.from_ops(2, [(m, True)] * 2 + [(m, False)] * 2) for m in g2_modes
        ]
        monos = list(obs_monos.values()) + extra
        run = fock.evolve(
            model, dims, horizon=cfg.horizon, rel_tol=cfg.fst_rel_tol,
            abs_tol=cfg.fst_abs_tol, observables=monos, n_samples=cfg.samples,
        )
        columns = {}
        for name, mono in obs_monos.items():
            columns[name] = np.real(run.column(mono))
        for o in cfg.observables:
            if o.startswith("g2"):
                mode = 0 if o.endswith("a") else 1
                n = np.real(run.column(Monomial.from_ops(2, [(mode, True), (mode, False)])))
                m4 = np.real(
                    run.column(Monomial.from_ops(2, [(mode, True)] * 2 + [(mode, False)] * 2))
                )
                with np.errstate(divide="ignore", invalid="ignore"):
                    columns[o] = np.where(n > 1e-10, m4 / n**2, np.nan)
        meta = {
            "method": method.name, "dims": list(run.dims), "size": int(np.prod(run.dims)),
            "diverged": run.diverged, "warnings": run.warnings,
            "wall_clock": time.perf_counter() - t0,
        }
        return run.times, columns, None, meta

    system = build_system(model, method.order)
    traj = integrate(
        system, MomentState.vacuum(system), cfg.horizon, cfg.rel_tol, cfg.abs_tol,
        n_samples=cfg.samples,
    )
    basis = system.basis
    columns = {}
    for name in cfg.observables:
        mode = 0 if name.endswith("a") else 1
        if basis.M < 2:
            # coherent truncation: photon number from the amplitude
            a_idx, _ = basis.locate(Monomial.from_ops(2, [(mode, False)]))
            n = np.abs(traj.states[:, a_idx]) ** 2
        else:
            n_idx, _ = basis.locate(Monomial.from_ops(2, [(mode, True), (mode, False)]))
            n = np.real(traj.states[:, n_idx])
        if name.startswith("g2"):
            if basis.M < 4:
                columns[name] = np.full(len(traj.times), np.nan)
            else:
                m4_idx, _ = basis.locate(
                    Monomial.from_ops(2, [(mode, True)] * 2 + [(mode, False)] * 2)
                )
                m4 = np.real(traj.states[:, m4_idx])
                with np.errstate(divide="ignore", invalid="ignore"):
                    columns[name] = np.where(n > 1e-10, m4 / n**2, np.nan)
        else:
            columns[name] = n
    clusters = None
    if cfg.dump_clusters:
        clusters = (basis.labels(), traj.states)
    meta = {
        "method": method.name, "clusters": basis.size, "size": basis.size,
        "diverged": traj.diverged, "divergence_time": traj.divergence_time,
        "warnings": [], "wall_clock": time.perf_counter() - t0,
    }
    return traj.times, columns, clusters, meta


def _write_manifest(path: str, cfg: RunConfig, entries: list[dict]) -> None:
    manifest = {
        "engine_version": __version__,
        "label": cfg.label,
        "config": {
            "model": vars(cfg.model),
            "methods": [m.name for m in cfg.methods],
            "horizon": cfg.horizon,
            "rel_tol": cfg.rel_tol,
            "abs_tol": cfg.abs_tol,
            "fst_rel_tol": cfg.fst_rel_tol,
            "fst_abs_tol": cfg.fst_abs_tol,
            "samples": cfg.samples,
            "observables": cfg.observables,
            "sweep": {k: list(map(float, v)) for k, v in cfg.sweep.items()},
            "workers": cfg.workers,
        },
        "runs": entries,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def execute_run(cfg: RunConfig) -> list[str]:
    """The `run` command: one output CSV per method, plus a manifest."""
    os.makedirs(cfg.output, exist_ok=True)
    written = []
    entries = []
    sweep_results: dict[str, list[PointResult]] = {}
    dynamics_results = {}
    for method in cfg.methods:
        if cfg.is_sweep:
            results = run_sweep(method, cfg)
            sweep_results[method.name] = results
            path = os.path.join(cfg.output, f"{cfg.label}_{method.name}.csv")
            header = ["g", "E"] + cfg.observables + ["diverged"]
            rows = [
                [r.g, r.E] + [r.values[o] for o in cfg.observables] + [r.diverged]
                for r in results
            ]
            write_csv(path, header, rows)
            written.append(path)
            entries.append({
                "method": method.name,
                "output": os.path.basename(path),
                "points": len(results),
                "diverged_points": sum(r.diverged for r in results),
                "warnings": sorted({w for r in results for w in r.warnings}),
                "wall_clock": sum(r.wall_clock for r in results),
                "size": results[0].size if results else 0,
            })
        else:
            times, columns, clusters, meta = run_dynamics(method, cfg)
            path = os.path.join(cfg.output, f"{cfg.label}_{method.name}.csv")
            header = ["time"] + list(columns)
            cols = [np.asarray(times)] + [columns[k] for k in columns]
            if clusters is not None:
                labels, states = clusters
                for k, lab in enumerate(labels):
                    header += [f"Re<{lab}>", f"Im<{lab}>"]
                    cols += [np.real(states[:, k]), np.imag(states[:, k])]
            n = min(len(c) for c in cols)
            rows = [[c[i] for c in cols] for i in range(n)]
            write_csv(path, header, rows)
            written.append(path)
            meta["output"] = os.path.basename(path)
            entries.append(meta)
            dynamics_results[method.name] = (times, columns)
    manifest_path = os.path.join(cfg.output, f"{cfg.label}_manifest.json")
    _write_manifest(manifest_path, cfg, entries)
    written.append(manifest_path)
    if cfg.plots:
        from . import report

        if cfg.is_sweep:
            figs = report.sweep_figure(cfg, sweep_results)
        else:
            figs = report.dynamics_figure(cfg, dynamics_results)
        written.extend(figs)
    return written


def execute_compare(cfg: RunConfig) -> list[str]:
    """The `compare` command: aligned observables plus relative deviations.

    The reference method is fst when present, otherwise the last method.
    """
    if len(cfg.methods) < 2:
        raise ValueError("compare requires at least 2 methods")
    os.makedirs(cfg.output, exist_ok=True)
    ref = next((m for m in cfg.methods if m.kind == "fst"), cfg.methods[-1])
    results = {m.name: run_sweep(m, cfg) for m in cfg.methods}
    points = _sweep_grid(cfg)
    header = ["g", "E"]
    for obs in cfg.observables:
        for m in cfg.methods:
            header.append(f"{obs}_{m.name}")
        for m in cfg.methods:
            if m.name != ref.name:
                header.append(f"dev_{obs}_{m.name}_vs_{ref.name}")
    header.append("diverged_methods")
    rows = []
    for i, (g, E) in enumerate(points):
        row = [g, E]
        for obs in cfg.observables:
            vals = {m.name: results[m.name][i].values[obs] for m in cfg.methods}
            refv = vals[ref.name]
            for m in cfg.methods:
                row.append(vals[m.name])
            for m in cfg.methods:
                if m.name != ref.name:
                    denom = abs(refv) if abs(refv) > 1e-12 else float("nan")
                    row.append(abs(vals[m.name] - refv) / denom)
        row.append(
            ";".join(m.name for m in cfg.methods if results[m.name][i].diverged)
        )
        rows.append(row)
    path = os.path.join(cfg.output, f"{cfg.label}_compare.csv")
    write_csv(path, header, rows)
    entries = [{
        "method": m.name,
        "points": len(points),
        "diverged_points": sum(r.diverged for r in results[m.name]),
        "warnings": sorted({w for r in results[m.name] for w in r.warnings}),
        "wall_clock": sum(r.wall_clock for r in results[m.name]),
    } for m in cfg.methods]
    manifest_path = os.path.join(cfg.output, f"{cfg.label}_manifest.json")
    _write_manifest(manifest_path, cfg, entries)
    written = [path, manifest_path]
    if cfg.plots:
        from . import report

        written.extend(report.sweep_figure(cfg, {m.name: results[m.name] for m in cfg.methods}))
    return written


def execute_benchmark(
    output: str,
    max_modes: int = 10,
    orders=(2, 4, 6),
    E_grid=(2.0, 4.0, 6.0, 10.0, 15.0, 20.0),
    fst_truncations=(10, 100),
    g: float = 0.2,
    horizon: float = 10.0,
    fst_max_E: float = 6.0,
    budget_seconds: float = 1800.0,
    plots: bool = True,
) -> list[str]:
    """Cluster-count scaling and wall-clock scaling benchmark.

    Counts never need the basis materialized; timings run the SHG model at
    fixed g with FST dimensions max(E^2,4) x max(E^2,4)/2.  FST points stop
    at fst_max_E or when the time budget runs out (partial flag in the
    manifest).
    """
    os.makedirs(output, exist_ok=True)
    written = []

    count_rows = []
    for m in range(1, max_modes + 1):
        for order in orders:
            count_rows.append([m, f"qce{order}", count_clusters(m, order)])
        for ntr in fst_truncations:
            count_rows.append([m, f"fst{ntr}", ntr**m])
    counts_path = os.path.join(output, "benchmark_counts.csv")
    write_csv(counts_path, ["mode_count", "method", "count"], count_rows)
    written.append(counts_path)

    timing_rows = []
    partial = False
    t_start = time.perf_counter()
    for E in E_grid:
        for order in orders:
            model = shg_model(g, float(E))
            system = build_system(model, order)  # excluded from timing (cached setup)
            t0 = time.perf_counter()
            res = steady_state(system, horizon)
            timing_rows.append(
                [float(E), f"qce{order}", time.perf_counter() - t0, system.size,
                 res.diverged]
            )
        if E <= fst_max_E:
            if time.perf_counter() - t_start > budget_seconds:
                partial = True
                continue
            dims = fock.default_dims(float(E))
            model = shg_model(g, float(E))
            t0 = time.perf_counter()
            run = fock.evolve(
                model, dims, horizon=horizon, rel_tol=1e-6, abs_tol=1e-9,
                n_samples=11,
            )
            timing_rows.append(
                [float(E), "fst", time.perf_counter() - t0, int(np.prod(dims)),
                 run.diverged]
            )
    timing_path = os.path.join(output, "benchmark_timing.csv")
    write_csv(
        timing_path, ["E", "method", "wall_clock_seconds", "size", "diverged"],
        timing_rows,
    )
    written.append(timing_path)

    manifest_path = os.path.join(output, "benchmark_manifest.json")
    with open(manifest_path, "w", encoding="utf-8") as fh:
        json.dump(
            {
                "engine_version": __version__,
                "max_modes": max_modes,
                "orders": list(orders),
                "E_grid": [float(E) for E in E_grid],
                "fst_truncations": list(fst_truncations),
                "g": g,
                "horizon": horizon,
                "fst_max_E": fst_max_E,
                "budget_seconds": budget_seconds,
                "partial": partial,
                "total_wall_clock": time.perf_counter() - t_start,
            },
            fh,
            indent=2,
            sort_keys=True,
        )
        fh.write("\n")
    written.append(manifest_path)
    if plots:
        from . import report

        written.extend(report.benchmark_figures(output, count_rows, timing_rows))
    return written
