"""Linear functionals of the construction: point evaluations and the
iterated-integral unit-cell moments.

A Moment(i, j, m) is the integral over the cell [j-1, j] of the (m-i)-fold
integral of the argument, each inner integral anchored at 0.  On polynomials
it is evaluated exactly through anchored antiderivatives; on expressions it
is evaluated by nested adaptive quadrature, or through the derivative-chain
shortcut when the caller can supply the chain.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .expr import Expr, eval_grid, evaluate
from .poly import Polynomial

__all__ = [
    "PointEval", "Moment", "Functional",
    "apply_to_poly", "apply_to_function", "moment_fast_path",
    "quadrature", "QuadratureError", "MOMENT_TOL",
]

#: absolute tolerance used for the outermost integral of a Moment on a function
MOMENT_TOL = 1e-12

_DEPTH_CAP = 40


class QuadratureError(ArithmeticError):
    """Adaptive subdivision hit the depth cap before reaching the tolerance."""

    def __init__(self, a: float, b: float, err: float, tol: float):
        super().__init__(
            f"quadrature did not converge on [{a:.6g}, {b:.6g}]: "
            f"error estimate {err:.3e} > tolerance {tol:.3e} at depth cap {_DEPTH_CAP}"
        )
        self.interval = (a, b)
        self.err = err
        self.tol = tol


@dataclass(frozen=True)
class PointEval:
    x: float


@dataclass(frozen=True)
class Moment:
    i: int
    j: int
    m: int

    def __post_init__(self):
        if not 1 <= self.i <= self.m:
            raise ValueError(f"Moment requires 1 <= i <= m, got i={self.i}, m={self.m}")

    @property
    def inner_depth(self) -> int:
        """Number of anchored inner integrals under the cell integral."""
        return self.m - self.i


Functional = Union[PointEval, Moment]


def apply_to_poly(f: Functional, p: Polynomial) -> complex:
    """Evaluate the functional on a polynomial, exactly (no quadrature)."""
    if isinstance(f, PointEval):
        return p.eval(f.x)
    phi = p.iterated_antiderivative(f.inner_depth + 1)
    return phi.eval(f.j) - phi.eval(f.j - 1)


def moment_fast_path(f: Moment, chain: Sequence[Expr]) -> complex:
    """Moment of chain[-1] via two evaluations of chain[i-1].

    Valid when chain is a derivation chain chain[k]' = chain[k+1] with
    chain[k](0) = 0 for every k below the top; then the anchored integrals
    collapse and the moment telescopes to a difference of chain[i-1] values.
    """
    if len(chain) != f.m + 1:
        raise ValueError(f"chain must have length m+1={f.m + 1}, got {len(chain)}")
    lower = chain[f.i - 1]
    return evaluate(lower, f.j) - evaluate(lower, f.j - 1)


def apply_to_function(f: Functional, e: Expr, chain: Sequence[Expr] | None = None) -> complex:
    """Evaluate the functional on an expression-defined function.

    Moments use nested adaptive quadrature with tolerance MOMENT_TOL on the
    outer integral, tightened by a factor 10 per nesting level; when `chain`
    is given the fast path is used instead.
    """
    if isinstance(f, PointEval):
        return evaluate(e, f.x)
    if chain is not None:
        return moment_fast_path(f, chain)
    fv = lambda xs: eval_grid(e, xs)
    depth = f.inner_depth
    if depth == 0:
        integrand = fv
    else:
        def integrand(xs):
            return np.array(
                [_anchored(fv, float(u.real), depth, MOMENT_TOL / 10) for u in np.atleast_1d(xs)]
            )
    return _integrate(integrand, f.j - 1.0, float(f.j), MOMENT_TOL)


def _anchored(fv, x: float, levels: int, tol: float) -> complex:
    """`levels`-fold integral of fv from 0 to x, each level anchored at 0."""
    if levels == 1:
        inner = fv
    else:
        def inner(xs):
            return np.array(
                [_anchored(fv, float(u.real), levels - 1, tol / 10) for u in np.atleast_1d(xs)]
            )
    return _integrate(inner, 0.0, x, tol)


def quadrature(e: Expr, a: float, b: float, tol: float) -> complex:
    """Adaptive estimate of the integral of e over [a, b], absolute error <= tol."""
    if a > b:
        raise ValueError(f"quadrature requires a <= b, got a={a}, b={b}")
    return _integrate(lambda xs: eval_grid(e, xs), a, b, tol)


# ---------------------------------------------------------------------------
# Gauss(7)/Kronrod(15) pair with interval bisection.

_NODES_POS = (
    0.991455371120813,
    0.949107912342759,
    0.864864423359769,
    0.741531185599394,
    0.586087235467691,
    0.405845151377397,
    0.207784955007898,
)
_WK_POS = (
    0.022935322010529,
    0.063092092629979,
    0.104790010322250,
    0.140653259715525,
    0.169004726639267,
    0.190350578064785,
    0.204432940075298,
)
_WK_CENTER = 0.209482141084728
_WG = (
    0.129484966168870,
    0.279705391489277,
    0.381830050505119,
    0.417959183673469,
    0.381830050505119,
    0.279705391489277,
    0.129484966168870,
)

_NODES = np.array([-x for x in _NODES_POS] + [0.0] + [x for x in reversed(_NODES_POS)])
_WK = np.array(list(_WK_POS) + [_WK_CENTER] + list(reversed(_WK_POS)))
_WG_ARR = np.array(_WG)

_EPS = np.finfo(float).eps


def _panel(fv, a: float, b: float):
    c = 0.5 * (a + b)
    h = 0.5 * (b - a)
    vals = np.asarray(fv(c + h * _NODES), dtype=complex)
    k15 = h * np.dot(_WK, vals)
    g7 = h * np.dot(_WG_ARR, vals[1::2])
    resabs = abs(h) * np.dot(_WK, np.abs(vals))
    return k15, abs(k15 - g7), resabs


def _integrate(fv, a: float, b: float, tol: float) -> complex:
    if a == b:
        return 0j
    sign = 1.0
    if b < a:
        a, b = b, a
        sign = -1.0
    return sign * _bisect(fv, a, b, max(tol, 0.0), 0)


def _bisect(fv, a: float, b: float, tol: float, depth: int) -> complex:
    k15, err, resabs = _panel(fv, a, b)
    # tolerances below the rounding floor of the panel are unreachable;
    # accept once the estimate is down at that floor
    if err <= tol or err <= 100.0 * _EPS * resabs:
        return k15
    if depth >= _DEPTH_CAP:
        raise QuadratureError(a, b, err, tol)
    mid = 0.5 * (a + b)
    half = 0.5 * tol
    return _bisect(fv, a, mid, half, depth + 1) + _bisect(fv, mid, b, half, depth + 1)
