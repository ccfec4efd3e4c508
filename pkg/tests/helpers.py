"""Shared test utilities: random expression/polynomial generators and
independent oracles (scipy quadrature, brute-force minimax search)."""

from __future__ import annotations

import random

import numpy as np
from scipy import integrate

from entirefit.expr import BinOp, Call, Const, Expr, Pow, Var
from entirefit.poly import Polynomial


def random_expr(rng: random.Random, depth: int = 3) -> Expr:
    """Random abs-free expression that stays well-behaved on [-2, 2]."""
    if depth == 0:
        return rng.choice([
            Var(),
            Const(complex(round(rng.uniform(-2, 2), 3))),
        ])
    kind = rng.randrange(8)
    if kind == 0:
        return BinOp("+", random_expr(rng, depth - 1), random_expr(rng, depth - 1))
    if kind == 1:
        return BinOp("-", random_expr(rng, depth - 1), random_expr(rng, depth - 1))
    if kind == 2:
        return BinOp("*", random_expr(rng, depth - 1), random_expr(rng, depth - 1))
    if kind == 3:
        return Call(rng.choice(("sin", "cos")), random_expr(rng, depth - 1))
    if kind == 4:
        # keep exp arguments small so higher derivatives stay moderate
        return Call("exp", BinOp("*", Const(0.3 + 0j), Call("sin", random_expr(rng, depth - 1))))
    if kind == 5:
        return Pow(random_expr(rng, depth - 1), rng.choice((2, 3)))
    if kind == 6:
        # safe positive argument for log / sqrt
        inner = BinOp("+", Const(2.5 + 0j), Call("sin", random_expr(rng, depth - 1)))
        return Call(rng.choice(("log", "sqrt")), inner)
    # safe denominator bounded away from zero
    den = BinOp("+", Const(3.0 + 0j), Call("cos", random_expr(rng, depth - 1)))
    return BinOp("/", random_expr(rng, depth - 1), den)


def random_polynomial(rng: random.Random, max_degree: int = 12, complex_coeffs: bool = True) -> Polynomial:
    deg = rng.randrange(max_degree + 1)
    coeffs = []
    for _ in range(deg + 1):
        re = rng.uniform(-1, 1)
        im = rng.uniform(-1, 1) if complex_coeffs else 0.0
        coeffs.append(complex(re, im))
    return Polynomial(coeffs)


def scipy_nested_moment(fn, i: int, j: int, m: int) -> complex:
    """Independent nested-quadrature evaluation of the (i, j, m) moment of a
    real-valued callable, built on scipy.integrate.quad."""
    depth = m - i

    def level(x, lev):
        if lev == 0:
            return fn(x)
        val, _ = integrate.quad(level, 0.0, x, args=(lev - 1,), epsabs=1e-13, epsrel=1e-13, limit=200)
        return val

    val, _ = integrate.quad(level, j - 1.0, float(j), args=(depth,), epsabs=1e-12, epsrel=1e-12, limit=200)
    return complex(val)


def minimax_oracle_errors() -> list[tuple[float, float]]:
    """Run the small fit-vs-brute-force instances; returns (fit, oracle) pairs.

    Instances stay at <= 12 samples, <= 2 constraints, degree <= 2 so the
    coefficient-grid search is exhaustive.
    """
    import math

    from entirefit.fitting import ConstraintSystem, InfeasibleBudgetError, \
        fit_constrained, make_sample_set
    from entirefit.functionals import PointEval, apply_to_poly
    import pytest

    instances = []
    xs1 = np.cos(np.pi * (np.arange(8) + 0.5) / 8)
    instances.append((xs1, np.sin(1.3 * xs1), (), 1))
    xs2 = np.cos(np.pi * (np.arange(12) + 0.5) / 12)
    instances.append((xs2, np.cos(xs2), ((PointEval(0.0), 1.0 + 0j),), 2))
    instances.append((xs2, np.exp(xs2), (
        (PointEval(-1.0), complex(math.exp(-1))),
        (PointEval(1.0), complex(math.e)),
    ), 2))

    pairs = []
    for xs_i, ys_i, cons, degree in instances:
        sample_set = make_sample_set(
            0.0, ((-1.0, 1.0),), None,
            lambda q, xs_i=xs_i, ys_i=ys_i: np.interp(np.real(q), xs_i[::-1], ys_i[::-1]).astype(complex),
            0, len(xs_i),
        )
        ref_pts = np.array([p.z.real for p in sample_set.refined_points(2)])
        ref_targets = np.interp(ref_pts, xs_i[::-1], ys_i[::-1])

        with pytest.raises(InfeasibleBudgetError) as exc:
            fit_constrained(sample_set, ConstraintSystem(cons), 1e-18, degree)
        fit_err = exc.value.best_error

        ncols = degree + 1
        if cons:
            cmat = np.array([[apply_to_poly(f, Polynomial([0.0] * c + [1.0])) for c in range(ncols)]
                             for f, _ in cons])
            v = np.array([val for _, val in cons])
            u, sv, vh = np.linalg.svd(cmat, full_matrices=True)
            a0 = (vh[:len(cons)].conj().T @ ((u.conj().T @ v) / sv)).real
            nullb = vh[len(cons):].conj().T.real
        else:
            a0 = np.zeros(ncols)
            nullb = np.eye(ncols)
        vander = np.vander(ref_pts, ncols, increasing=True)
        t_ls, *_ = np.linalg.lstsq(vander @ nullb, ref_targets - vander @ a0, rcond=None)
        r_ls = np.abs(vander @ (a0 + nullb @ t_ls) - ref_targets).max()
        halfwidth = max(10 * r_ls, 1e-3)
        oracle = brute_force_minimax(ref_pts, ref_targets, a0.astype(complex), nullb.astype(complex),
                                     t_ls, halfwidth, steps=201)
        pairs.append((float(fit_err), float(oracle)))
    return pairs


def brute_force_minimax(points: np.ndarray, targets: np.ndarray, a0: np.ndarray,
                        nullb: np.ndarray, t_center: np.ndarray, halfwidth: float,
                        steps: int) -> float:
    """Grid search for the minimax error over real null-space coordinates.

    Coefficients are a0 + nullb @ t with t real, scanned over a box of the
    given halfwidth centered at t_center.  Returns the smallest max |p - y|
    over the supplied evaluation points.
    """
    dims = nullb.shape[1]
    grids = [np.linspace(c - halfwidth, c + halfwidth, steps) for c in t_center]
    vander = np.vander(points, a0.size, increasing=True)
    base = vander @ a0
    cols = vander @ nullb  # (npts, dims)
    best = np.inf
    if dims == 1:
        vals = base[:, None] + cols[:, [0]] * grids[0][None, :]
        best = np.abs(vals - targets[:, None]).max(axis=0).min()
    elif dims == 2:
        for t0 in grids[0]:
            vals = base[:, None] + cols[:, [0]] * t0 + cols[:, [1]] * grids[1][None, :]
            cand = np.abs(vals - targets[:, None]).max(axis=0).min()
            best = min(best, cand)
    elif dims == 3:
        for t0 in grids[0]:
            for t1 in grids[1]:
                vals = base[:, None] + cols[:, [0]] * t0 + cols[:, [1]] * t1 \
                    + cols[:, [2]] * grids[2][None, :]
                cand = np.abs(vals - targets[:, None]).max(axis=0).min()
                best = min(best, cand)
    else:
        raise ValueError("brute force supports at most 3 free dimensions")
    return float(best)
