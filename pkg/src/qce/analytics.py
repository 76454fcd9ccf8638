"""Classical threshold formulas, observable extraction from moment states,
and self-pulsing detection.
"""

from __future__ import annotations

import math

import numpy as np

from .algebra import Monomial
from .clusters import ClusterBasis
from .integrate import MomentState, Trajectory

SELF_PULSING_THRESHOLD = 1e-3  # relative peak-to-peak excursion


def shg_selfpulsing_threshold(kappa_a: float, kappa_b: float, g: float) -> float:
    """Mean-field self-pulsing onset drive for the fundamental-pumped model:
    E_c = (2*kappa_a + kappa_b) / (2g) * sqrt(2*kappa_b*(kappa_a + kappa_b))."""
    if g <= 0:
        raise ValueError("threshold undefined for g <= 0")
    return (2 * kappa_a + kappa_b) / (2 * g) * math.sqrt(
        2 * kappa_b * (kappa_a + kappa_b)
    )


def opo_threshold(kappa_a: float, kappa_b: float, g: float) -> float:
    """Classical parametric oscillation threshold E_c = kappa_a*kappa_b/(2g)."""
    if g <= 0:
        raise ValueError("threshold undefined for g <= 0")
    return kappa_a * kappa_b / (2 * g)


def moment_value(state: MomentState, basis: ClusterBasis, mono: Monomial) -> complex:
    """Look up <A> in a moment state, resolving the conjugation flag."""
    idx, conj = basis.locate(mono)
    v = state.values[idx]
    return v.conjugate() if conj else v


def photon_number(state: MomentState, basis: ClusterBasis, mode: int) -> float:
    if basis.M < 2:
        # order-1 truncation is coherent: <O†O> reduces to |<O>|^2
        amp = moment_value(
            state, basis, Monomial.from_ops(basis.mode_count, [(mode, False)])
        )
        return float(abs(amp) ** 2)
    n_op = Monomial.from_ops(basis.mode_count, [(mode, True), (mode, False)])
    return float(moment_value(state, basis, n_op).real)


def g2_from_moments(state: MomentState, basis: ClusterBasis, mode: int):
    """Re<O†²O²> / <O†O>² plus the imaginary residue as a truncation
    diagnostic.  Requires the fourth-order cluster to be tracked (M >= 4)."""
    if basis.M < 4:
        raise ValueError("g2 requires truncation order M >= 4")
    n_val = photon_number(state, basis, mode)
    if n_val <= 1e-10:
        raise ValueError("g2 undefined: mode occupation below numerical floor")
    m4 = Monomial.from_ops(
        basis.mode_count, [(mode, True)] * 2 + [(mode, False)] * 2
    )
    num = moment_value(state, basis, m4)
    return float(num.real / n_val**2), float(abs(num.imag) / n_val**2)


def detect_self_pulsing(
    traj: Trajectory,
    basis: ClusterBasis,
    mode: int,
    settle_fraction: float = 0.5,
) -> bool:
    """True when the photon number keeps oscillating over the late window.

    The indicator is the relative peak-to-peak excursion of <O†O> over the
    last settle_fraction of the horizon exceeding 1e-3.
    """
    if traj.diverged:
        raise ValueError("self-pulsing detection requires a non-diverged trajectory")
    if basis.M >= 2:
        n_op = Monomial.from_ops(basis.mode_count, [(mode, True), (mode, False)])
        idx, _ = basis.locate(n_op)
        series = np.real(traj.states[:, idx])
    else:
        # order-1 truncation is coherent: <O†O> reduces to |<O>|^2
        idx, _ = basis.locate(Monomial.from_ops(basis.mode_count, [(mode, False)]))
        series = np.abs(traj.states[:, idx]) ** 2
    t0 = traj.times[-1] - settle_fraction * (traj.times[-1] - traj.times[0])
    window = series[traj.times >= t0]
    if len(window) < 2:
        return False
    span = float(window.max() - window.min())
    scale = max(float(np.abs(window).max()), 1e-30)
    return span / scale > SELF_PULSING_THRESHOLD
