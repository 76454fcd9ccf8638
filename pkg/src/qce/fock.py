"""Truncated-Fock-space master-equation reference solver.

Mode operators are sparse; the density matrix is dense.  This is the
ground-truth oracle at small scale: every derived expectation elsewhere in
the package is checked against it at convergence-tested dimensions.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.integrate import ode

from .algebra import Monomial
from .model import ModelSpec

LEAKAGE_THRESHOLD = 1e-6


class LeakageWarning(UserWarning):
    """Top Fock level of some mode carries non-negligible population."""


def destroy(n: int) -> sp.csr_matrix:
    """Truncated annihilation operator, <k-1|a|k> = sqrt(k)."""
    return sp.diags(np.sqrt(np.arange(1, n)), 1, format="csr").astype(np.complex128)


def mode_operator(dims: tuple[int, ...], j: int) -> sp.csr_matrix:
    """Annihilation operator of mode j on the full tensor-product space."""
    if not 0 <= j < len(dims):
        raise ValueError(f"mode {j} out of range")
    op = sp.identity(1, format="csr", dtype=np.complex128)
    for k, n in enumerate(dims):
        factor = destroy(n) if k == j else sp.identity(n, format="csr", dtype=np.complex128)
        op = sp.kron(op, factor, format="csr")
    return op


def monomial_operator(dims: tuple[int, ...], mono: Monomial) -> sp.csr_matrix:
    """Sparse matrix of a normal-ordered monomial."""
    total = int(np.prod(dims))
    op = sp.identity(total, format="csr", dtype=np.complex128)
    for j, (p, q) in enumerate(mono.exps):
        if p == 0 and q == 0:
            continue
        a = mode_operator(dims, j)
        op = op @ sp.csr_matrix(a.conj().T) ** p @ a**q
    return sp.csr_matrix(op)


def hamiltonian_matrix(model: ModelSpec, dims: tuple[int, ...]) -> sp.csr_matrix:
    total = int(np.prod(dims))
    h = sp.csr_matrix((total, total), dtype=np.complex128)
    for mono, coeff in model.hamiltonian.terms.items():
        h = h + coeff * monomial_operator(dims, mono)
    return sp.csr_matrix(h)


def vacuum_density_matrix(dims: tuple[int, ...]) -> np.ndarray:
    total = int(np.prod(dims))
    rho = np.zeros((total, total), dtype=np.complex128)
    rho[0, 0] = 1.0
    return rho


def coherent_density_matrix(dims: tuple[int, ...], alphas) -> np.ndarray:
    """Product of truncated coherent states |alpha_j>."""
    psi = np.array([1.0], dtype=np.complex128)
    for n, alpha in zip(dims, alphas):
        k = np.arange(n)
        amps = np.exp(-0.5 * abs(alpha) ** 2) * alpha**k / np.sqrt(
            [math.factorial(int(i)) for i in k]
        )
        psi = np.kron(psi, amps)
    psi = psi / np.linalg.norm(psi)
    return np.outer(psi, psi.conj())


def thermal_density_matrix(dims: tuple[int, ...], nbars) -> np.ndarray:
    rho = np.array([[1.0 + 0j]])
    for n, nbar in zip(dims, nbars):
        pops = (nbar / (1.0 + nbar)) ** np.arange(n) / (1.0 + nbar)
        pops = pops / pops.sum()
        rho = np.kron(rho, np.diag(pops).astype(np.complex128))
    return rho


class FockSolver:
    """Precompiled Liouvillian action for one model at fixed dimensions."""

    def __init__(self, model: ModelSpec, dims):
        dims = tuple(int(n) for n in dims)
        if len(dims) != model.mode_count:
            raise ValueError("one truncation dimension per mode required")
        if any(n < 2 for n in dims):
            raise ValueError("truncation dimensions must be >= 2")
        self.model = model
        self.dims = dims
        self.total = int(np.prod(dims))
        self.h = hamiltonian_matrix(model, dims)
        self.jumps = []
        for kappa, jump in model.dissipators:
            d = monomial_operator(dims, jump)
            dT = sp.csr_matrix(d.conj().T)
            self.jumps.append((kappa, d, dT, sp.csr_matrix(dT @ d)))
        self._super = None

    @property
    def superoperator(self) -> sp.csr_matrix:
        """Sparse matrix acting on the row-major vectorized density matrix.

        Uses vec(A X B) = (A kron B^T) vec(X) for vec(X) = X.ravel().
        """
        if self._super is None:
            n = self.total
            eye = sp.identity(n, format="csr", dtype=np.complex128)
            h = self.h
            L = -1j * (sp.kron(h, eye) - sp.kron(eye, h.T))
            for kappa, d, dT, dTd in self.jumps:
                L = L + kappa * (
                    2.0 * sp.kron(d, d.conj())
                    - sp.kron(dTd, eye)
                    - sp.kron(eye, dTd.T)
                )
            self._super = sp.csr_matrix(L)
        return self._super

    @staticmethod
    def _right_mul(rho: np.ndarray, op: sp.spmatrix) -> np.ndarray:
        # rho @ op with sparse op, via (op.T @ rho.T).T
        return (op.T @ rho.T).T

    def apply(self, rho: np.ndarray) -> np.ndarray:
        h = self.h
        out = -1j * (h @ rho - self._right_mul(rho, h))
        for kappa, d, dT, dTd in self.jumps:
            out += kappa * (
                2.0 * (d @ self._right_mul(rho, dT))
                - dTd @ rho
                - self._right_mul(rho, dTd)
            )
        return out

    def top_level_population(self, rho: np.ndarray) -> float:
        """Largest diagonal population among states with any mode at its
        top truncation level."""
        diag = np.real(np.diag(rho))
        grid = diag.reshape(self.dims)
        worst = 0.0
        for j, n in enumerate(self.dims):
            sl = [slice(None)] * len(self.dims)
            sl[j] = n - 1
            worst = max(worst, float(np.sum(grid[tuple(sl)])))
        return worst


def liouvillian_apply(model: ModelSpec, dims, rho: np.ndarray) -> np.ndarray:
    """Right-hand side of the master equation for one density matrix."""
    return FockSolver(model, dims).apply(rho)


def expectation(rho: np.ndarray, mono: Monomial, dims=None) -> complex:
    """Tr{A rho} for a normal-ordered monomial A."""
    if dims is None:
        raise ValueError("dims required to build the operator")
    if mono.order == 0:
        return complex(np.trace(rho))
    op = monomial_operator(tuple(dims), mono)
    return complex(op.multiply(rho.T).sum())


def g2(rho: np.ndarray, mode: int, dims) -> float:
    """Equal-time second-order self-correlation <O†O†OO>/<O†O>²."""
    nmodes = len(dims)
    n_op = Monomial.from_ops(nmodes, [(mode, True), (mode, False)])
    n_val = expectation(rho, n_op, dims).real
    if n_val <= 1e-10:
        raise ValueError("g2 undefined: mode occupation below numerical floor")
    m4 = Monomial.from_ops(nmodes, [(mode, True)] * 2 + [(mode, False)] * 2)
    return float(expectation(rho, m4, dims).real / n_val**2)


@dataclass
class FockRun:
    times: np.ndarray
    moments: np.ndarray  # (nt, len(observables)), complex
    observables: list
    final_rho: np.ndarray
    dims: tuple
    diverged: bool = False
    warnings: list = field(default_factory=list)
    sampled_rhos: list = field(default_factory=list)

    def column(self, mono: Monomial) -> np.ndarray:
        return self.moments[:, self.observables.index(mono)]


def state_diagnostics(rho: np.ndarray) -> dict:
    """Trace deviation, Hermiticity deviation and minimum eigenvalue."""
    herm = float(np.max(np.abs(rho - rho.conj().T)))
    tr = float(abs(np.trace(rho).real - 1.0) + abs(np.trace(rho).imag))
    evals = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))
    return {"trace_error": tr, "hermiticity_error": herm, "min_eigenvalue": float(evals.min())}


def default_dims(E: float, floor: int = 4) -> tuple[int, int]:
    """Truncation rule max(E^2, floor) for mode a and half that for mode b."""
    na = int(math.ceil(max(E * E, floor)))
    nb = int(math.ceil(na / 2.0))
    return (na, max(nb, 2))


def evolve(
    model: ModelSpec,
    dims,
    rho0: np.ndarray | None = None,
    horizon: float = 10.0,
    rel_tol: float = 1e-8,
    abs_tol: float = 1e-10,
    observables: list | None = None,
    n_samples: int = 201,
    keep_states: int = 0,
) -> FockRun:
    """Integrate the master equation, extracting observables on the fly.

    Only sampled expectations (and optionally a few density-matrix
    snapshots) are retained; the full history of rho is never stored.
    """
    solver = FockSolver(model, dims)
    if rho0 is None:
        rho0 = vacuum_density_matrix(solver.dims)
    if observables is None:
        observables = [
            Monomial.from_ops(model.mode_count, [(j, True), (j, False)])
            for j in range(model.mode_count)
        ]
    ops = [monomial_operator(solver.dims, m) for m in observables]
    shape = rho0.shape

    L = solver.superoperator

    def rhs(t, y):
        return L @ y

    # non-stiff multistep integrator on the complex-valued matrix ODE
    integ = ode(rhs)
    integ.set_integrator(
        "zvode", method="adams", rtol=rel_tol, atol=abs_tol, nsteps=1_000_000
    )
    integ.set_initial_value(rho0.ravel(), 0.0)

    times = np.linspace(0.0, horizon, n_samples)
    moments = np.zeros((n_samples, len(ops)), dtype=np.complex128)
    keep_at = set(
        np.linspace(0, n_samples - 1, keep_states).astype(int).tolist()
    ) if keep_states else set()
    sampled = []
    warns = []
    diverged = False
    worst_leak = 0.0
    rho = rho0
    for i, t in enumerate(times):
        if i > 0:
            integ.integrate(t)
            if not integ.successful():
                diverged = True
                times = times[:i]
                moments = moments[:i]
                break
            rho = integ.y.reshape(shape)
        for k, op in enumerate(ops):
            moments[i, k] = complex(op.multiply(rho.T).sum())
        worst_leak = max(worst_leak, solver.top_level_population(rho))
        if i in keep_at:
            sampled.append((float(t), rho.copy()))
    if worst_leak > LEAKAGE_THRESHOLD:
        msg = f"top Fock level population {worst_leak:.3e} exceeds {LEAKAGE_THRESHOLD:g}"
        warns.append(msg)
        warnings.warn(msg, LeakageWarning)
    return FockRun(
        times=times,
        moments=moments,
        observables=list(observables),
        final_rho=rho,
        dims=solver.dims,
        diverged=diverged,
        warnings=warns,
        sampled_rhos=sampled,
    )
