"""Top-level pipeline: reduce the target by its order-m Maclaurin polynomial,
run the staged construction on the m-th derivative under the shifted envelope,
antidifferentiate m times, add the Maclaurin part back, and certify the
simultaneous derivative error bounds on a grid.

A compact-window mode performs the classical one-shot variant: fit the m-th
derivative on [a, b] under a single sufficient budget and integrate m times,
re-anchoring each antiderivative at a.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .expr import (
    Expr,
    contains_abs,
    differentiate,
    eval_grid,
    evaluate,
    expr_from_coeffs,
)
from .fitting import ConstraintSystem, fit_constrained, certify_sup_error, interval_sample_set
from .functionals import Moment, apply_to_poly, moment_fast_path
from .poly import Polynomial, linear_combine
from .stages import Stage, radialize, run_stages, shift_epsilon

__all__ = [
    "CompactWindow", "ApproximationSpec", "Artifact",
    "OrderReport", "Certificate",
    "taylor_shift", "approximate", "approximate_compact", "certify",
    "CertificationFailure", "PipelineError",
    "MAX_ORDER", "MAX_STAGES", "MAX_DEGREE_CAP",
]

MAX_ORDER = 8
MAX_STAGES = 8
MAX_DEGREE_CAP = 128

_NODE_RESIDUAL_TOL = 1e-7
_MOMENT_RESIDUAL_TOL = 1e-7
_SHIFT_CHECK_TOL = 1e-12


class PipelineError(RuntimeError):
    """A pipeline step failed a structural consistency check."""


class CertificationFailure(RuntimeError):
    """The final grid certification failed; the artifact is still attached."""

    def __init__(self, artifact: "Artifact"):
        cert = artifact.certificate
        worst = max((o.sup_ratio for o in cert.orders), default=float("nan"))
        super().__init__(f"certification failed: worst envelope ratio {worst:.6g}")
        self.artifact = artifact


@dataclass(frozen=True)
class CompactWindow:
    a: float
    b: float
    eps: float


@dataclass(frozen=True)
class ApproximationSpec:
    """Validated problem statement for one run of the pipeline."""

    f: Expr
    m: int
    eps: Optional[Expr] = None
    K: int = 0
    degree_cap: int = 96
    grid_per_unit: int = 100
    compact: Optional[CompactWindow] = None

    def __post_init__(self):
        if not 0 <= self.m <= MAX_ORDER:
            raise ValueError(f"m must be in 0..{MAX_ORDER}, got {self.m}")
        if not 1 <= self.degree_cap <= MAX_DEGREE_CAP:
            raise ValueError(f"degree_cap must be in 1..{MAX_DEGREE_CAP}, got {self.degree_cap}")
        if self.grid_per_unit < 50:
            raise ValueError("grid_per_unit must be >= 50")
        if contains_abs(self.f):
            raise ValueError("abs is not allowed in the target function (envelopes only)")
        if self.compact is None:
            if self.eps is None:
                raise ValueError("an envelope expression is required in whole-line mode")
            if not 1 <= self.K <= MAX_STAGES:
                raise ValueError(f"K must be in 1..{MAX_STAGES}, got {self.K}")
        else:
            c = self.compact
            if not (math.isfinite(c.a) and math.isfinite(c.b) and c.a < c.b):
                raise ValueError(f"compact window requires finite a < b, got [{c.a}, {c.b}]")
            if c.eps <= 0:
                raise ValueError("compact-mode eps must be positive")

    @property
    def domain(self) -> tuple[float, float]:
        if self.compact is not None:
            return (self.compact.a, self.compact.b)
        return (-float(self.K), float(self.K))


@dataclass
class Artifact:
    """The produced polynomial plus everything needed to reproduce it:
    g = iterated antiderivative of the top-stage polynomial, plus `taylor`."""

    g: Polynomial
    taylor: Polynomial
    m: int
    K: int
    stages: list[Stage]
    spec: Optional[ApproximationSpec] = None
    certificate: Optional["Certificate"] = None

    @property
    def top_polynomial(self) -> Polynomial:
        return self.stages[-1].polynomial


@dataclass(frozen=True)
class OrderReport:
    order: int
    sup_abs_error: float
    sup_ratio: float
    worst_x: float

    def to_obj(self) -> dict:
        return {
            "order": self.order,
            "sup_abs_error": self.sup_abs_error,
            "sup_ratio": self.sup_ratio,
            "worst_x": self.worst_x,
        }


@dataclass(frozen=True)
class Certificate:
    passed: bool
    orders: tuple[OrderReport, ...]
    node_residuals: tuple[tuple[int, int, float], ...]    # (order, node, residual)
    moment_residuals: tuple[tuple[int, int, float], ...]  # (i, j, residual)
    grid_per_unit: int
    domain: tuple[float, float]

    def max_node_residual(self) -> float:
        return max((r for _, _, r in self.node_residuals), default=0.0)

    def max_moment_residual(self) -> float:
        return max((r for _, _, r in self.moment_residuals), default=0.0)

    def to_obj(self) -> dict:
        return {
            "passed": self.passed,
            "grid_per_unit": self.grid_per_unit,
            "domain": [self.domain[0], self.domain[1]],
            "orders": [o.to_obj() for o in self.orders],
            "node_residuals": [
                {"order": i, "node": j, "residual": r} for i, j, r in self.node_residuals
            ],
            "moment_residuals": [
                {"i": i, "j": j, "residual": r} for i, j, r in self.moment_residuals
            ],
        }


# ---------------------------------------------------------------------------
# pipeline steps

def taylor_shift(f: Expr, m: int) -> tuple[list[Expr], Polynomial]:
    """Split f into its degree-m Maclaurin polynomial and a shifted remainder
    chain.

    Returns (chain, taylor) where chain[i] is the expression for the i-th
    derivative of f minus the i-th derivative of taylor; every chain entry
    vanishes at 0 for i = 0..m (checked numerically), so the chain entries are
    exactly the anchored antiderivatives of chain[m].
    """
    derivs = [f]
    for _ in range(m):
        derivs.append(differentiate(derivs[-1]))
    coeffs = []
    for i, d in enumerate(derivs):
        coeffs.append(evaluate(d, 0.0) / math.factorial(i))
    taylor = Polynomial(coeffs)

    chain: list[Expr] = []
    t_i = taylor
    from .expr import _sub  # local simplifying constructor
    for i, d in enumerate(derivs):
        chain.append(_sub(d, expr_from_coeffs(t_i.coeffs)))
        t_i = t_i.derivative()
    for i, entry in enumerate(chain):
        v = abs(evaluate(entry, 0.0))
        if v > _SHIFT_CHECK_TOL * (1.0 + abs(evaluate(derivs[i], 0.0))):
            raise PipelineError(f"shifted derivative {i} does not vanish at 0: |value| = {v:.3e}")
    return chain, taylor


def approximate(spec: ApproximationSpec) -> Artifact:
    """Whole-line pipeline.  Returns the certified artifact, or raises
    CertificationFailure carrying the (flagged) artifact if the final grid
    check fails."""
    if spec.compact is not None:
        raise ValueError("approximate handles whole-line mode; use approximate_compact")
    m, K = spec.m, spec.K
    chain, taylor = taylor_shift(spec.f, m)
    base_profile = radialize(spec.eps, K + m)
    profile = shift_epsilon(base_profile, m)
    g_top, stages = run_stages(chain[m], profile, m, K, spec.degree_cap, chain=chain)
    g = linear_combine(1.0, g_top.iterated_antiderivative(m), 1.0, taylor)
    artifact = Artifact(g=g, taylor=taylor, m=m, K=K, stages=stages, spec=spec)
    artifact.certificate = certify(artifact, spec, spec.grid_per_unit)
    if not artifact.certificate.passed:
        raise CertificationFailure(artifact)
    return artifact


def approximate_compact(
    f: Expr,
    a: float,
    b: float,
    eps_const: float,
    m: int,
    degree_cap: int = 96,
    grid_per_unit: int = 100,
) -> Artifact:
    """One-shot compact-window mode: a single unconstrained fit of the m-th
    derivative under the budget eps / sum_{r<=m} (b-a)^r / r!, followed by m
    antiderivatives re-anchored at a.  That budget split is sufficient for
    every derivative order to stay within eps on [a, b]."""
    spec = ApproximationSpec(
        f=f, m=m, degree_cap=degree_cap, grid_per_unit=grid_per_unit,
        compact=CompactWindow(float(a), float(b), float(eps_const)),
    )
    derivs = [f]
    for _ in range(m):
        derivs.append(differentiate(derivs[-1]))
    width = b - a
    split = sum(width ** r / math.factorial(r) for r in range(m + 1))
    budget = eps_const / split

    samples = interval_sample_set(a, b, degree_cap, lambda xs: eval_grid(derivs[m], xs))
    p = fit_constrained(samples, ConstraintSystem(), budget, degree_cap)

    g = p
    for i in range(m - 1, -1, -1):
        q = g.antiderivative()
        anchor = evaluate(derivs[i], a) - q.eval(a)
        g = linear_combine(1.0, q, 1.0, Polynomial([anchor]))
    taylor = linear_combine(1.0, g, -1.0, p.iterated_antiderivative(m))

    stage = Stage(
        k=1, budget=budget, polynomial=p, degree=p.degree, constraints=(),
        region_errors={f"interval[{a:g},{b:g}]": certify_sup_error(p, samples, 2)},
        disk_change=0.0, max_constraint_residual=0.0, moment_match_drift=0.0,
    )
    artifact = Artifact(g=g, taylor=taylor, m=m, K=0, stages=[stage], spec=spec)
    artifact.certificate = certify(artifact, spec, grid_per_unit)
    if not artifact.certificate.passed:
        raise CertificationFailure(artifact)
    return artifact


def certify(artifact: Artifact, spec: ApproximationSpec, grid_per_unit: int = 100) -> Certificate:
    """Grid verification of |f^(i) - g^(i)| / eps for i = 0..m, plus the
    integer-node interpolation residuals and unit-cell moment residuals that
    the whole-line construction is supposed to annihilate.

    The certificate is recomputed from the artifact polynomial and the spec
    alone, independent of any stored stage bookkeeping.
    """
    if grid_per_unit < 50:
        raise ValueError("grid_per_unit must be >= 50")
    m = spec.m
    lo, hi = spec.domain
    xs = np.linspace(lo, hi, int(round((hi - lo) * grid_per_unit)) + 1)

    derivs = [spec.f]
    for _ in range(m):
        derivs.append(differentiate(derivs[-1]))
    if spec.compact is not None:
        eps_vals = np.full(xs.shape, spec.compact.eps)
    else:
        eps_vals = eval_grid(spec.eps, xs).real

    g_list = [artifact.g]
    for _ in range(m):
        g_list.append(g_list[-1].derivative())

    orders = []
    for i in range(m + 1):
        abs_err = np.abs(eval_grid(derivs[i], xs) - g_list[i].eval_many(xs))
        ratio = abs_err / eps_vals
        idx = int(np.argmax(ratio))
        orders.append(OrderReport(
            order=i,
            sup_abs_error=float(abs_err.max()),
            sup_ratio=float(ratio[idx]),
            worst_x=float(xs[idx]),
        ))

    node_residuals = []
    moment_residuals = []
    if spec.compact is None:
        K = spec.K
        nodes = range(-(K - 1), K + 1)
        for i in range(m + 1):
            for j in nodes:
                r = abs(g_list[i].eval(float(j)) - evaluate(derivs[i], float(j)))
                node_residuals.append((i, j, float(r)))
        if m >= 1:
            chain, taylor = taylor_shift(spec.f, m)
            taylor_m = taylor.iterated_antiderivative(0)
            for _ in range(m):
                taylor_m = taylor_m.derivative()
            g_m = g_list[m]
            for i in range(1, m + 1):
                for j in nodes:
                    fnl = Moment(i=i, j=j, m=m)
                    lhs = apply_to_poly(fnl, g_m)
                    rhs = moment_fast_path(fnl, chain) + apply_to_poly(fnl, taylor_m)
                    moment_residuals.append((i, j, float(abs(lhs - rhs))))

    passed = (
        all(o.sup_ratio < 1.0 for o in orders)
        and all(r <= _NODE_RESIDUAL_TOL for _, _, r in node_residuals)
        and all(r <= _MOMENT_RESIDUAL_TOL for _, _, r in moment_residuals)
    )
    return Certificate(
        passed=passed,
        orders=tuple(orders),
        node_residuals=tuple(node_residuals),
        moment_residuals=tuple(moment_residuals),
        grid_per_unit=grid_per_unit,
        domain=(float(lo), float(hi)),
    )
