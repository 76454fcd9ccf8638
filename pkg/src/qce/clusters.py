"""Cluster-expansion engine: basis enumeration, cumulant factorization,
hierarchy closure, and emission of the closed moment ODE system.

The closure sets every correlation cumulant of order > M to zero.  All
partition sums run over set partitions of operator *positions* (distinct
labels), so multiset multiplicities come out right by construction; identical
partitions simply accumulate in the resulting polynomial.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from sympy.utilities.iterables import multiset_partitions

from .algebra import Monomial, OperatorPoly, commutator, lindblad_adjoint
from .model import ModelSpec

# A moment polynomial maps a product of moments -- a sorted tuple of
# Monomials -- to a complex coefficient.  The empty tuple is the constant 1.
MomentPoly = dict[tuple[Monomial, ...], complex]


def canonicalize(a: Monomial) -> tuple[Monomial, bool]:
    """Representative of the conjugate pair {A, A†} and whether A was flipped.

    The representative is the member with the lexicographically smaller
    flattened exponent vector (p0, q0, p1, q1, ...).
    """
    adj = a.adjoint()
    if adj.key < a.key:
        return adj, True
    return a, False


def _iter_monomials(mode_count: int, order: int):
    """All monomials of exactly the given order over mode_count modes."""

    def compositions(total, slots):
        if slots == 1:
            yield (total,)
            return
        for first in range(total + 1):
            for rest in compositions(total - first, slots - 1):
                yield (first,) + rest

    for flat in compositions(order, 2 * mode_count):
        yield Monomial(tuple(zip(flat[::2], flat[1::2])))


@dataclass(frozen=True)
class ClusterBasis:
    """One representative per conjugate pair of monomials, orders 1..M."""

    representatives: tuple[Monomial, ...]
    index: dict  # Monomial -> (position, conjugated flag), all orders 1..M
    M: int
    mode_count: int

    @property
    def size(self) -> int:
        return len(self.representatives)

    def locate(self, a: Monomial) -> tuple[int, bool]:
        """Basis position and conjugation flag for an order<=M monomial."""
        return self.index[a]

    def labels(self) -> list[str]:
        return [m.label() for m in self.representatives]


def enumerate_basis(mode_count: int, M: int) -> ClusterBasis:
    if M < 1 or mode_count < 1:
        raise ValueError("mode_count and M must be >= 1")
    reps = []
    index = {}
    for order in range(1, M + 1):
        for mono in sorted(_iter_monomials(mode_count, order), key=lambda m: m.key):
            rep, conj = canonicalize(mono)
            if rep not in index:
                index[rep] = (len(reps), False)
                reps.append(rep)
            if mono not in index:
                pos, _ = index[rep]
                index[mono] = (pos, conj)
    return ClusterBasis(tuple(reps), index, M, mode_count)


def count_clusters(mode_count: int, M: int) -> int:
    """Closed-form basis size: conjugate-pair count over orders 1..M."""
    if M < 1 or mode_count < 1:
        raise ValueError("mode_count and M must be >= 1")
    slots = 2 * mode_count
    total = sum(math.comb(n + slots - 1, slots - 1) for n in range(1, M + 1))
    # self-adjoint monomials have p_j = q_j for all j, hence even order 2k
    selfadj = sum(
        math.comb(k + mode_count - 1, mode_count - 1) for k in range(1, M // 2 + 1)
    )
    return (total + selfadj) // 2


def _poly_add(dst: MomentPoly, src: MomentPoly, scale: complex = 1.0) -> None:
    for key, c in src.items():
        dst[key] = dst.get(key, 0.0) + scale * c


def _poly_mul(a: MomentPoly, b: MomentPoly) -> MomentPoly:
    out: MomentPoly = {}
    for ka, ca in a.items():
        for kb, cb in b.items():
            key = tuple(sorted(ka + kb, key=lambda m: m.key))
            out[key] = out.get(key, 0.0) + ca * cb
    return out


def _position_partitions(n: int, min_blocks: int = 1):
    """Set partitions of positions 0..n-1 as tuples of position tuples."""
    for part in multiset_partitions(list(range(n))):
        if len(part) >= min_blocks:
            yield part


class CumulantTable:
    """Memoized cumulant expansions Delta<A> as polynomials in moments."""

    def __init__(self):
        self._cache: dict[Monomial, MomentPoly] = {}

    def expansion(self, a: Monomial) -> MomentPoly:
        """Delta<A> = <A> - sum over proper partitions of products of
        block cumulants; Delta of an order-1 monomial is its moment."""
        if a.order < 1:
            raise ValueError("cumulant of the identity is undefined")
        cached = self._cache.get(a)
        if cached is not None:
            return cached
        out: MomentPoly = {(a,): 1.0}
        if a.order > 1:
            ops = a.ops()
            for part in _position_partitions(len(ops), min_blocks=2):
                term: MomentPoly = {(): 1.0}
                for block in part:
                    sub = Monomial.from_ops(a.nmodes, [ops[i] for i in block])
                    term = _poly_mul(term, self.expansion(sub))
                _poly_add(out, term, -1.0)
        out = {k: c for k, c in out.items() if abs(c) > 1e-15}
        self._cache[a] = out
        return out


_CUMULANTS = CumulantTable()


def cumulant_of(a: Monomial, table: CumulantTable | None = None) -> MomentPoly:
    return (table or _CUMULANTS).expansion(a)


def moment_from_cumulants(a: Monomial, table: CumulantTable | None = None):
    """<A> as sum over all partitions of products of block cumulants.

    Returns a list of (coefficient, tuple of block Monomials); blocks enter
    as cumulants Delta<block>.  Used by tests and by closure.
    """
    table = table or _CUMULANTS
    ops = a.ops()
    out = []
    for part in _position_partitions(len(ops)):
        blocks = tuple(
            sorted(
                (Monomial.from_ops(a.nmodes, [ops[i] for i in block]) for block in part),
                key=lambda m: m.key,
            )
        )
        out.append((1.0, blocks))
    return out


@lru_cache(maxsize=None)
def close_moment(a: Monomial, M: int) -> tuple[tuple[complex, tuple[Monomial, ...]], ...]:
    """Express <A> through moments of order <= M by dropping all cumulants
    of order > M.

    Returns a tuple of (coefficient, product of moment Monomials), the
    moments not yet canonicalized.
    """
    if a.order <= M:
        return ((1.0, (a,)),)
    ops = a.ops()
    out: MomentPoly = {}
    for part in _position_partitions(len(ops)):
        blocks = [Monomial.from_ops(a.nmodes, [ops[i] for i in block]) for block in part]
        if any(b.order > M for b in blocks):
            continue
        term: MomentPoly = {(): 1.0}
        for b in blocks:
            term = _poly_mul(term, _CUMULANTS.expansion(b))
        _poly_add(out, term)
    return tuple((c, key) for key, c in out.items() if abs(c) > 1e-15)


def moment_rhs(a: Monomial, model: ModelSpec) -> OperatorPoly:
    """Exact normal-ordered operator polynomial whose expectation is
    d<A>/dt: i<[H,A]> plus the adjoint dissipator images."""
    rhs = commutator(model.hamiltonian, OperatorPoly.monomial(a)).scale(1j)
    for kappa, jump in model.dissipators:
        rhs = rhs + lindblad_adjoint(jump, a).scale(kappa)
    return rhs


@dataclass
class MomentODESystem:
    """Closed nonlinear ODE system for the cluster moments.

    rhs coefficients are stored flattened and grouped by factor count for
    vectorized evaluation; references are (basis index, conjugated) pairs.
    """

    basis: ClusterBasis
    terms: dict  # row -> dict[factors tuple[(idx, conj), ...] -> coeff]
    _groups: list = None

    def __post_init__(self):
        if self._groups is None:
            self._groups = self._compile()

    def _compile(self):
        by_arity: dict[int, list] = {}
        for row, termmap in self.terms.items():
            for factors, coeff in termmap.items():
                by_arity.setdefault(len(factors), []).append((row, coeff, factors))
        groups = []
        for arity, entries in sorted(by_arity.items()):
            rows = np.array([e[0] for e in entries], dtype=np.intp)
            coeffs = np.array([e[1] for e in entries], dtype=np.complex128)
            idx = np.array(
                [[f[0] for f in e[2]] for e in entries], dtype=np.intp
            ).reshape(len(entries), arity)
            conj = np.array(
                [[f[1] for f in e[2]] for e in entries], dtype=bool
            ).reshape(len(entries), arity)
            groups.append((rows, coeffs, idx, conj))
        return groups

    @property
    def size(self) -> int:
        return self.basis.size

    def rhs(self, values: np.ndarray) -> np.ndarray:
        out = np.zeros(self.basis.size, dtype=np.complex128)
        for rows, coeffs, idx, conj in self._groups:
            if idx.shape[1] == 0:
                np.add.at(out, rows, coeffs)
                continue
            vals = values[idx]
            np.conjugate(vals, where=conj, out=vals)
            np.add.at(out, rows, coeffs * vals.prod(axis=1))
        return out

    def equations_text(self) -> str:
        """Human-readable dump, one line per cluster."""
        lines = []
        for row, rep in enumerate(self.basis.representatives):
            pieces = []
            for factors, coeff in sorted(
                self.terms.get(row, {}).items(), key=lambda kv: (len(kv[0]), kv[0])
            ):
                refs = "*".join(
                    "<%s>%s" % (self.basis.representatives[i].label(), "*" if c else "")
                    for i, c in factors
                )
                val = f"({coeff.real:+.10g}{coeff.imag:+.10g}j)"
                pieces.append(val + ("*" + refs if refs else ""))
            lines.append(f"d<{rep.label()}>/dt = " + (" + ".join(pieces) or "0"))
        return "\n".join(lines)


_SYSTEM_CACHE: dict = {}


def build_system(model: ModelSpec, M: int) -> MomentODESystem:
    """Generate the closed moment equations for every basis cluster.

    RHS monomials of order <= M become direct (canonicalized) references;
    higher orders are factorized through the order-M cumulant truncation.
    Results are cached per (model, M).
    """
    cache_key = (model.fingerprint(), M)
    cached = _SYSTEM_CACHE.get(cache_key)
    if cached is not None:
        return cached

    basis = enumerate_basis(model.mode_count, M)
    terms: dict[int, dict] = {}

    def add_term(row, factors, coeff):
        tm = terms.setdefault(row, {})
        key = tuple(sorted(factors))
        tm[key] = tm.get(key, 0.0) + coeff

    for row, rep in enumerate(basis.representatives):
        poly = moment_rhs(rep, model)
        for mono, coeff in poly.terms.items():
            if mono.order == 0:
                add_term(row, (), coeff)
            elif mono.order <= M:
                add_term(row, (basis.locate(mono),), coeff)
            else:
                for c, product in close_moment(mono, M):
                    refs = tuple(basis.locate(m) for m in product)
                    add_term(row, refs, coeff * c)

    for row in list(terms):
        terms[row] = {k: v for k, v in terms[row].items() if abs(v) > 1e-13}

    system = MomentODESystem(basis=basis, terms=terms)
    _SYSTEM_CACHE[cache_key] = system
    return system
