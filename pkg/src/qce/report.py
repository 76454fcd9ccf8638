"""Matplotlib figure rendering for run outputs.

Figures are written next to the CSVs; they are overlays for eyeballing,
the CSVs remain the quantitative record.
"""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

_STYLES = ["-", "--", "-.", ":"]
_OBS_LABELS = {
    "na": r"$\langle a^\dagger a\rangle$",
    "nb": r"$\langle b^\dagger b\rangle$",
    "g2_a": r"$g^{(2)}_a(0)$",
    "g2_b": r"$g^{(2)}_b(0)$",
}


def dynamics_figure(cfg, results: dict) -> list[str]:
    """Photon-number / observable trajectories, one panel per observable."""
    obs = cfg.observables
    fig, axes = plt.subplots(len(obs), 1, figsize=(6, 3 * len(obs)), sharex=True)
    axes = np.atleast_1d(axes)
    for ax, name in zip(axes, obs):
        for k, (method, (times, columns)) in enumerate(results.items()):
            ax.plot(times, columns[name], _STYLES[k % len(_STYLES)], label=method)
        ax.set_ylabel(_OBS_LABELS.get(name, name))
        ax.legend(frameon=False, fontsize=8)
    axes[-1].set_xlabel(r"time ($1/\kappa_a$)")
    fig.suptitle(cfg.label)
    fig.tight_layout()
    path = os.path.join(cfg.output, f"{cfg.label}_dynamics.png")
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return [path]


def sweep_figure(cfg, results: dict) -> list[str]:
    """Steady-state observables vs the sweep axis, one line per method."""
    axes_names = [a for a in ("g", "E") if a in cfg.sweep]
    axis = axes_names[0] if axes_names else "E"
    obs = cfg.observables
    fig, axs = plt.subplots(len(obs), 1, figsize=(6, 3 * len(obs)), sharex=True)
    axs = np.atleast_1d(axs)
    for ax, name in zip(axs, obs):
        for k, (method, points) in enumerate(results.items()):
            x = np.array([getattr(p, axis) for p in points])
            y = np.array([p.values[name] for p in points])
            ax.plot(x, y, _STYLES[k % len(_STYLES)], marker=".", label=method)
        ax.set_ylabel(_OBS_LABELS.get(name, name))
        ax.legend(frameon=False, fontsize=8)
    axs[-1].set_xlabel(axis)
    fig.suptitle(cfg.label)
    fig.tight_layout()
    path = os.path.join(cfg.output, f"{cfg.label}_sweep.png")
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return [path]


def benchmark_figures(output: str, count_rows, timing_rows) -> list[str]:
    written = []

    fig, ax = plt.subplots(figsize=(6, 4))
    methods = sorted({r[1] for r in count_rows})
    for k, method in enumerate(methods):
        pts = [(r[0], r[2]) for r in count_rows if r[1] == method]
        ax.semilogy(*zip(*pts), _STYLES[k % len(_STYLES)], marker=".", label=method)
    ax.set_xlabel("mode count")
    ax.set_ylabel("equations tracked")
    ax.legend(frameon=False, fontsize=8)
    fig.tight_layout()
    path = os.path.join(output, "benchmark_counts.png")
    fig.savefig(path, dpi=150)
    plt.close(fig)
    written.append(path)

    if timing_rows:
        fig, ax = plt.subplots(figsize=(6, 4))
        methods = sorted({r[1] for r in timing_rows})
        for k, method in enumerate(methods):
            pts = [(r[0], r[2]) for r in timing_rows if r[1] == method]
            ax.semilogy(*zip(*pts), _STYLES[k % len(_STYLES)], marker=".", label=method)
        ax.set_xlabel("drive amplitude E")
        ax.set_ylabel("wall clock (s)")
        ax.legend(frameon=False, fontsize=8)
        fig.tight_layout()
        path = os.path.join(output, "benchmark_timing.png")
        fig.savefig(path, dpi=150)
        plt.close(fig)
        written.append(path)
    return written
