"""Adaptive time integration of the closed moment equations.

Vacuum initial conditions are the all-zero moment vector.  Closure-induced
blowup is a real outcome of low-order truncations at strong drive, so
divergence is flagged and the trajectory truncated rather than raising.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from .clusters import MomentODESystem

DIVERGENCE_LIMIT = 1e12
DEFAULT_RTOL = 1e-8
DEFAULT_ATOL = 1e-10
DEFAULT_SAMPLES = 201


@dataclass
class MomentState:
    """Cluster moment vector aligned to a ClusterBasis, at one time."""

    values: np.ndarray
    time: float = 0.0

    @staticmethod
    def vacuum(system: MomentODESystem) -> "MomentState":
        return MomentState(np.zeros(system.size, dtype=np.complex128), 0.0)

    def conjugate(self) -> "MomentState":
        return MomentState(np.conjugate(self.values), self.time)


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray  # (nt, basis size), complex
    diverged: bool = False
    divergence_time: float | None = None

    @property
    def final(self) -> MomentState:
        return MomentState(self.states[-1].copy(), float(self.times[-1]))

    def column(self, index: int) -> np.ndarray:
        return self.states[:, index]


def integrate(
    system: MomentODESystem,
    initial: MomentState,
    horizon: float,
    rel_tol: float = DEFAULT_RTOL,
    abs_tol: float = DEFAULT_ATOL,
    n_samples: int = DEFAULT_SAMPLES,
) -> Trajectory:
    if horizon <= 0:
        raise ValueError("horizon must be positive")
    if rel_tol <= 0 or abs_tol <= 0:
        raise ValueError("tolerances must be positive")

    def rhs(t, y):
        return system.rhs(y)

    def blowup(t, y):
        return float(np.max(np.abs(y))) - DIVERGENCE_LIMIT

    blowup.terminal = True
    blowup.direction = 1

    t_eval = initial.time + np.linspace(0.0, horizon, n_samples)
    sol = solve_ivp(
        rhs,
        (initial.time, initial.time + horizon),
        initial.values.astype(np.complex128),
        method="DOP853",
        t_eval=t_eval,
        rtol=rel_tol,
        atol=abs_tol,
        events=blowup,
    )
    times = sol.t
    states = sol.y.T
    diverged = sol.status == 1 or sol.status < 0 or not np.all(np.isfinite(states))
    div_time = None
    if diverged:
        finite = np.all(np.isfinite(states), axis=1)
        times = times[finite]
        states = states[finite]
        div_time = float(sol.t_events[0][0]) if sol.status == 1 and len(
            sol.t_events[0]
        ) else float(times[-1]) if len(times) else float(initial.time)
    if len(times) == 0:
        times = np.array([initial.time])
        states = initial.values[None, :].copy()
    return Trajectory(times, np.ascontiguousarray(states), diverged, div_time)


@dataclass
class SteadyStateResult:
    state: MomentState
    residual: float
    diverged: bool = False


def steady_state(
    system: MomentODESystem,
    horizon: float = 10.0,
    rel_tol: float = DEFAULT_RTOL,
    abs_tol: float = DEFAULT_ATOL,
    initial: MomentState | None = None,
) -> SteadyStateResult:
    """State after evolving to the fixed horizon from vacuum (or given
    initial), plus the residual RHS norm as a settledness diagnostic."""
    if initial is None:
        initial = MomentState.vacuum(system)
    traj = integrate(system, initial, horizon, rel_tol, abs_tol)
    state = traj.final
    if traj.diverged:
        return SteadyStateResult(state, float("inf"), True)
    residual = float(np.linalg.norm(system.rhs(state.values)))
    return SteadyStateResult(state, residual, False)
