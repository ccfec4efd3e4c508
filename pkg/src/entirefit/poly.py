"""Complex-coefficient polynomials: Horner evaluation, derivatives, anchored
antiderivatives, and JSON-friendly coefficient serialization.

Coefficients are stored in ascending degree order; the empty tuple is the
zero polynomial.  Construction strips trailing coefficients that are exactly
zero (near-zero coefficients are kept untouched).
"""

from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np

__all__ = ["Polynomial", "linear_combine"]


class Polynomial:
    __slots__ = ("coeffs",)

    def __init__(self, coeffs: Iterable[complex] = ()):
        cs = [complex(c) for c in coeffs]
        while cs and cs[-1] == 0:
            cs.pop()
        self.coeffs = tuple(cs)

    @property
    def degree(self) -> int:
        """Degree of the polynomial; -1 for the zero polynomial."""
        return len(self.coeffs) - 1

    def is_zero(self) -> bool:
        return not self.coeffs

    def eval(self, z: complex) -> complex:
        acc = 0j
        for c in reversed(self.coeffs):
            acc = acc * z + c
        return acc

    def eval_many(self, zs: np.ndarray) -> np.ndarray:
        """Horner evaluation over an array of points."""
        arr = np.asarray(zs, dtype=complex)
        acc = np.zeros(arr.shape, dtype=complex)
        for c in reversed(self.coeffs):
            acc = acc * arr + c
        return acc

    def derivative(self) -> "Polynomial":
        return Polynomial(c * (k + 1) for k, c in enumerate(self.coeffs[1:]))

    def antiderivative(self) -> "Polynomial":
        """The antiderivative P with P(0) = 0 (constant coefficient exactly 0)."""
        if not self.coeffs:
            return Polynomial()
        out = [0j]
        out.extend(c / (k + 1) for k, c in enumerate(self.coeffs))
        return Polynomial(out)

    def iterated_antiderivative(self, r: int) -> "Polynomial":
        if r < 0:
            raise ValueError("r must be nonnegative")
        p = self
        for _ in range(r):
            p = p.antiderivative()
        return p

    def to_pairs(self) -> list[list[float]]:
        """Coefficients as [re, im] pairs in ascending degree order."""
        return [[c.real, c.imag] for c in self.coeffs]

    @classmethod
    def from_pairs(cls, pairs: Sequence[Sequence[float]]) -> "Polynomial":
        return cls(complex(p[0], p[1]) for p in pairs)

    def __eq__(self, other) -> bool:
        return isinstance(other, Polynomial) and self.coeffs == other.coeffs

    def __hash__(self) -> int:
        return hash(self.coeffs)

    def __repr__(self) -> str:
        return f"Polynomial({list(self.coeffs)!r})"


def linear_combine(a: complex, p: Polynomial, b: complex, q: Polynomial) -> Polynomial:
    """The coefficientwise combination a*p + b*q."""
    n = max(len(p.coeffs), len(q.coeffs))
    out = []
    for k in range(n):
        cp = p.coeffs[k] if k < len(p.coeffs) else 0j
        cq = q.coeffs[k] if k < len(q.coeffs) else 0j
        out.append(a * cp + b * cq)
    return Polynomial(out)
