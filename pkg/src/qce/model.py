"""Driven-dissipative bosonic model definitions (rotating frame, hbar = 1).

A model is a Hermitian Hamiltonian plus a list of (rate, jump-operator)
dissipators.  The dissipation convention is kappa * L with
L[rho] = 2 d rho d† - d†d rho - rho d†d, so mode amplitudes decay at kappa
and photon numbers at 2*kappa.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .algebra import Monomial, OperatorPoly


@dataclass(frozen=True)
class DriveSpec:
    """Coherent on-resonance drive E(O + O†) on one mode (detuning via H)."""

    target_mode: int
    amplitude: float
    detuning: float = 0.0


@dataclass(frozen=True)
class ModelSpec:
    mode_count: int
    hamiltonian: OperatorPoly
    dissipators: tuple[tuple[float, Monomial], ...]
    label: str = "custom"

    def __post_init__(self):
        for kappa, jump in self.dissipators:
            if kappa <= 0:
                raise ValueError(f"dissipation rate must be positive, got {kappa}")
            if jump.nmodes != self.mode_count:
                raise ValueError("jump operator mode count mismatch")
        if not (self.hamiltonian.adjoint() == self.hamiltonian):
            raise ValueError("Hamiltonian is not Hermitian")

    def fingerprint(self) -> tuple:
        """Hashable identity for system-generation caching."""
        h = tuple(
            sorted((m.key, v.real, v.imag) for m, v in self.hamiltonian.terms.items())
        )
        d = tuple((k, j.key) for k, j in self.dissipators)
        return (self.mode_count, h, d)


def _chi2_hamiltonian(g, delta_a, delta_b):
    """Two-mode chi(2) core: Delta_a a†a + Delta_b b†b + g(a†²b + a²b†)."""
    terms = {}
    if delta_a:
        terms[Monomial(((1, 1), (0, 0)))] = delta_a
    if delta_b:
        terms[Monomial(((0, 0), (1, 1)))] = delta_b
    if g:
        terms[Monomial(((2, 0), (0, 1)))] = g
        terms[Monomial(((0, 2), (1, 0)))] = g
    return terms


def _drive_terms(mode: int, amplitude: float):
    terms = {}
    if amplitude:
        terms[Monomial.elementary(2, mode, True)] = amplitude
        terms[Monomial.elementary(2, mode, False)] = amplitude
    return terms


def shg_model(g, E, kappa_a=1.0, kappa_b=1.0, delta_a=0.0, delta_b=0.0) -> ModelSpec:
    """Second-harmonic generation: drive on the fundamental mode a."""
    if g < 0 or E < 0:
        raise ValueError("g and E must be non-negative")
    terms = _chi2_hamiltonian(g, delta_a, delta_b)
    for m, c in _drive_terms(0, E).items():
        terms[m] = terms.get(m, 0.0) + c
    return ModelSpec(
        mode_count=2,
        hamiltonian=OperatorPoly(terms),
        dissipators=(
            (kappa_a, Monomial.elementary(2, 0, False)),
            (kappa_b, Monomial.elementary(2, 1, False)),
        ),
        label="shg",
    )


def opo_model(g, E, kappa_a=1.0, kappa_b=2.0, delta_a=0.0, delta_b=0.0) -> ModelSpec:
    """Optical parametric oscillator: drive on the harmonic mode b."""
    if g < 0 or E < 0:
        raise ValueError("g and E must be non-negative")
    terms = _chi2_hamiltonian(g, delta_a, delta_b)
    for m, c in _drive_terms(1, E).items():
        terms[m] = terms.get(m, 0.0) + c
    return ModelSpec(
        mode_count=2,
        hamiltonian=OperatorPoly(terms),
        dissipators=(
            (kappa_a, Monomial.elementary(2, 0, False)),
            (kappa_b, Monomial.elementary(2, 1, False)),
        ),
        label="opo",
    )
