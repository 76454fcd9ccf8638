"""Exact symbolic algebra of multimode bosonic operators.

Monomials are kept in canonical normal-ordered form (all creation operators
to the left within each mode; distinct modes commute), so a per-mode pair of
exponents is a complete representation.  All reordering goes through the
single-mode contraction identity

    a^q a†^p = sum_k k! C(q,k) C(p,k) a†^(p-k) a^(q-k)

with exact integer combinatorial coefficients.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

PRUNE_TOL = 1e-14

_MODE_LETTERS = "abcdefgh"


@dataclass(frozen=True)
class Monomial:
    """Normal-ordered product of mode operators, stored as exponent pairs.

    ``exps[j] = (p, q)`` means mode j carries p creation and q annihilation
    operators.  The all-zero monomial is the identity.
    """

    exps: tuple[tuple[int, int], ...]

    def __post_init__(self):
        for p, q in self.exps:
            if p < 0 or q < 0:
                raise ValueError("negative operator exponent")

    @staticmethod
    def identity(nmodes: int) -> "Monomial":
        return Monomial(((0, 0),) * nmodes)

    @staticmethod
    def elementary(nmodes: int, mode: int, creation: bool) -> "Monomial":
        if not 0 <= mode < nmodes:
            raise ValueError(f"mode {mode} out of range for {nmodes} modes")
        exps = [(0, 0)] * nmodes
        exps[mode] = (1, 0) if creation else (0, 1)
        return Monomial(tuple(exps))

    @staticmethod
    def from_ops(nmodes: int, ops) -> "Monomial":
        """Monomial from a list of (mode, is_creation), assumed orderable."""
        exps = [[0, 0] for _ in range(nmodes)]
        for mode, creation in ops:
            exps[mode][0 if creation else 1] += 1
        return Monomial(tuple((p, q) for p, q in exps))

    @property
    def nmodes(self) -> int:
        return len(self.exps)

    @property
    def order(self) -> int:
        return sum(p + q for p, q in self.exps)

    @property
    def key(self) -> tuple[int, ...]:
        """Flattened exponent vector (p0, q0, p1, q1, ...)."""
        return tuple(x for pq in self.exps for x in pq)

    def adjoint(self) -> "Monomial":
        return Monomial(tuple((q, p) for p, q in self.exps))

    def is_selfadjoint(self) -> bool:
        return all(p == q for p, q in self.exps)

    def ops(self) -> list[tuple[int, bool]]:
        """Elementary factors (mode, is_creation) in normal order."""
        out = []
        for j, (p, q) in enumerate(self.exps):
            out.extend([(j, True)] * p)
            out.extend([(j, False)] * q)
        return out

    def label(self) -> str:
        """Readable name, e.g. ``ad^2 b`` for a†² b."""
        if self.order == 0:
            return "1"
        parts = []
        for j, (p, q) in enumerate(self.exps):
            letter = _MODE_LETTERS[j] if j < len(_MODE_LETTERS) else f"m{j}"
            if p:
                parts.append(f"{letter}d" + (f"^{p}" if p > 1 else ""))
            if q:
                parts.append(letter + (f"^{q}" if q > 1 else ""))
        return " ".join(parts)

    def __repr__(self):
        return f"Monomial<{self.label()}>"


def _single_mode_product(p1, q1, p2, q2):
    """Terms of (a†^p1 a^q1)(a†^p2 a^q2) as [(coeff, p, q)]."""
    out = []
    for k in range(min(q1, p2) + 1):
        c = math.factorial(k) * math.comb(q1, k) * math.comb(p2, k)
        out.append((c, p1 + p2 - k, q1 + q2 - k))
    return out


class OperatorPoly:
    """Complex-weighted sum of normal-ordered monomials."""

    __slots__ = ("terms",)

    def __init__(self, terms: dict[Monomial, complex] | None = None):
        self.terms = {}
        if terms:
            for mono, c in terms.items():
                if abs(c) > PRUNE_TOL:
                    self.terms[mono] = complex(c)

    @staticmethod
    def zero() -> "OperatorPoly":
        return OperatorPoly()

    @staticmethod
    def monomial(mono: Monomial, coeff: complex = 1.0) -> "OperatorPoly":
        return OperatorPoly({mono: coeff})

    @staticmethod
    def identity(nmodes: int, coeff: complex = 1.0) -> "OperatorPoly":
        return OperatorPoly({Monomial.identity(nmodes): coeff})

    def __add__(self, other: "OperatorPoly") -> "OperatorPoly":
        terms = dict(self.terms)
        for mono, c in other.terms.items():
            terms[mono] = terms.get(mono, 0.0) + c
        return OperatorPoly(terms)

    def __sub__(self, other: "OperatorPoly") -> "OperatorPoly":
        return self + other.scale(-1.0)

    def scale(self, c: complex) -> "OperatorPoly":
        return OperatorPoly({m: c * v for m, v in self.terms.items()})

    def __mul__(self, other: "OperatorPoly") -> "OperatorPoly":
        out: dict[Monomial, complex] = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                base = c1 * c2
                # per-mode contraction, combined across modes
                partial = [(base, [])]
                for (p1, q1), (p2, q2) in zip(m1.exps, m2.exps):
                    contracted = _single_mode_product(p1, q1, p2, q2)
                    partial = [
                        (c * cc, exps + [(pp, qq)])
                        for c, exps in partial
                        for cc, pp, qq in contracted
                    ]
                for c, exps in partial:
                    mono = Monomial(tuple(exps))
                    out[mono] = out.get(mono, 0.0) + c
        return OperatorPoly(out)

    def adjoint(self) -> "OperatorPoly":
        return OperatorPoly(
            {m.adjoint(): v.conjugate() for m, v in self.terms.items()}
        )

    def __eq__(self, other):
        if not isinstance(other, OperatorPoly):
            return NotImplemented
        keys = set(self.terms) | set(other.terms)
        return all(
            abs(self.terms.get(k, 0.0) - other.terms.get(k, 0.0)) <= 1e-12
            for k in keys
        )

    def __repr__(self):
        if not self.terms:
            return "OperatorPoly<0>"
        parts = [
            f"({c:.6g})*{m.label()}"
            for m, c in sorted(self.terms.items(), key=lambda kv: kv[0].key)
        ]
        return "OperatorPoly<" + " + ".join(parts) + ">"


def normal_order(factors, nmodes: int) -> OperatorPoly:
    """Normal-ordered expansion of a product of elementary operators.

    ``factors`` is an ordered list of (mode, is_creation) applied left to
    right as written.
    """
    poly = OperatorPoly.identity(nmodes)
    for mode, creation in factors:
        poly = poly * OperatorPoly.monomial(
            Monomial.elementary(nmodes, mode, creation)
        )
    return poly


def multiply(a: OperatorPoly, b: OperatorPoly) -> OperatorPoly:
    return a * b


def commutator(a: OperatorPoly, b: OperatorPoly) -> OperatorPoly:
    return a * b - b * a


def adjoint(a: OperatorPoly) -> OperatorPoly:
    return a.adjoint()


def lindblad_adjoint(d: Monomial, a: Monomial) -> OperatorPoly:
    """Adjoint dissipator image 2 d† A d - d†d A - A d†d, normal ordered."""
    dp = OperatorPoly.monomial(d)
    dd = OperatorPoly.monomial(d.adjoint())
    ap = OperatorPoly.monomial(a)
    return (dd * ap * dp).scale(2.0) - dd * dp * ap - ap * dd * dp
