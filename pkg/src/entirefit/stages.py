"""Staged construction of a single polynomial tracking a continuous target
over [-K, K] under a radialized, per-stage-budgeted error envelope.

Stage 1 fits the target on [-1, 1]; stage k >= 2 fits a glued target (the
previous polynomial on the closed disk of radius k-1, the original function
on the two newly added unit intervals) while interpolating at the integer
nodes and matching the unit-cell moments.  Budgets shrink geometrically so
the stage polynomials converge and errors stratify by annulus.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .expr import Expr, eval_grid, evaluate, grid_fn
from .fitting import (
    ConstraintSystem,
    InfeasibleBudgetError,
    SampleSet,
    certify_region_errors,
    constraint_residual_max,
    fit_constrained,
    sample_set_for,
)
from .functionals import Moment, PointEval, apply_to_function, apply_to_poly
from .poly import Polynomial, linear_combine

__all__ = [
    "EpsilonProfile", "Stage", "radialize", "shift_epsilon", "glue", "run_stages",
    "NonPositiveEnvelopeError", "GlueDiscontinuityError", "StageConsistencyError",
]

RADIAL_PITCH = 0.01
RADIAL_SAFETY = 0.9

_GLUE_TOL = 1e-9
_MOMENT_MATCH_TOL = 1e-8


class NonPositiveEnvelopeError(ValueError):
    """The envelope failed to be real and strictly positive on the checked grid."""

    def __init__(self, t: float, value: complex):
        super().__init__(f"envelope is not a positive real at t={t:.6g}: {value}")
        self.t = t
        self.value = value


class GlueDiscontinuityError(ValueError):
    """Previous stage polynomial and the target disagree at a gluing node."""

    def __init__(self, x: float, mismatch: float):
        super().__init__(f"glued target discontinuous at x={x:g}: mismatch {mismatch:.3e}")
        self.x = x
        self.mismatch = mismatch


class StageConsistencyError(RuntimeError):
    """A stage's required moment drifted from the target's moment."""

    def __init__(self, k: int, functional: Moment, drift: float):
        super().__init__(
            f"stage {k}: required moment (i={functional.i}, j={functional.j}) "
            f"drifted {drift:.3e} from the target moment"
        )
        self.k = k
        self.functional = functional
        self.drift = drift


@dataclass(frozen=True)
class EpsilonProfile:
    """Nonincreasing radial minorant of an envelope, tabulated on a 0.01-pitch
    radius grid, with the safety factor 0.9 already applied.

    Between grid radii the value at the next larger radius is used, which
    keeps the table a true minorant of itself at off-grid points.  A shift by
    i replaces the table by its restriction r -> value(r + i); shifted
    profiles are minorants of the unshifted one.
    """

    values: np.ndarray
    pitch: float = RADIAL_PITCH
    shift: int = 0
    source: Optional[Expr] = None

    @property
    def radius_max(self) -> float:
        return (len(self.values) - 1) * self.pitch

    def value(self, r: float) -> float:
        if r < 0:
            raise ValueError("radius must be nonnegative")
        idx = math.ceil(r / self.pitch - 1e-9)
        if idx >= len(self.values):
            raise ValueError(f"radius {r:g} outside tabulated range {self.radius_max:g}")
        return float(self.values[idx])

    def budget(self, k: int) -> float:
        """Stage-k sup-norm allowance value(k) / 2^(k+2)."""
        return self.value(float(k)) / 2.0 ** (k + 2)

    def shifted(self, i: int) -> "EpsilonProfile":
        if i < 0:
            raise ValueError("shift must be nonnegative")
        per_unit = round(1.0 / self.pitch)
        start = per_unit * i
        if start >= len(self.values):
            raise ValueError(f"table too short to shift by {i}")
        return EpsilonProfile(
            values=self.values[start:], pitch=self.pitch,
            shift=self.shift + i, source=self.source,
        )


def radialize(eps: Expr, radius: int) -> EpsilonProfile:
    """Tabulate 0.9 * min{eps(t) : |t| <= r} on the radius grid 0..radius.

    Positivity of eps is checked on a grid extending one unit past the table.
    """
    per_unit = round(1.0 / RADIAL_PITCH)
    n_check = per_unit * (radius + 1)
    ts = np.arange(n_check + 1) * RADIAL_PITCH
    pos_vals = eval_grid(eps, ts)
    neg_vals = eval_grid(eps, -ts)
    for arr, sgn in ((pos_vals, 1.0), (neg_vals, -1.0)):
        bad = np.nonzero((np.abs(arr.imag) > 1e-12 * (1.0 + np.abs(arr.real))) | (arr.real <= 0))[0]
        if bad.size:
            i = int(bad[0])
            raise NonPositiveEnvelopeError(sgn * ts[i], complex(arr[i]))
    n_table = per_unit * radius
    both = np.minimum(pos_vals.real, neg_vals.real)[: n_table + 1]
    running = np.minimum.accumulate(both)
    return EpsilonProfile(values=RADIAL_SAFETY * running, source=eps)


def shift_epsilon(profile: EpsilonProfile, i: int) -> EpsilonProfile:
    return profile.shifted(i)


@dataclass
class Stage:
    k: int
    budget: float
    polynomial: Polynomial
    degree: int
    constraints: tuple
    region_errors: dict[str, float]
    disk_change: float
    max_constraint_residual: float
    moment_match_drift: float

    def point_constraint_count(self) -> int:
        return sum(1 for f, _ in self.constraints if isinstance(f, PointEval))

    def moment_constraint_count(self) -> int:
        return sum(1 for f, _ in self.constraints if isinstance(f, Moment))

    def to_obj(self) -> dict:
        return {
            "k": self.k,
            "budget": self.budget,
            "degree": self.degree,
            "certified_errors": dict(self.region_errors),
            "disk_change": self.disk_change,
            "max_constraint_residual": self.max_constraint_residual,
            "constraint_counts": {
                "point": self.point_constraint_count(),
                "moment": self.moment_constraint_count(),
            },
        }


def glue(prev: Polynomial, phi: Expr, k: int, degree: int) -> SampleSet:
    """Sample set over the stage-k geometry whose disk targets come from the
    previous polynomial and whose interval targets come from phi.

    The previous polynomial must interpolate phi at +-(k-1); otherwise the
    glued target would be discontinuous.
    """
    if k < 2:
        raise ValueError("glue requires k >= 2")
    for x in (-(k - 1.0), k - 1.0):
        mismatch = abs(prev.eval(x) - evaluate(phi, x))
        if mismatch > _GLUE_TOL:
            raise GlueDiscontinuityError(x, mismatch)
    return sample_set_for(k, degree, interval_target=grid_fn(phi), disk_target=prev.eval_many)


def _disk_max_abs_diff(p: Polynomial, q: Polynomial, rho: float) -> float:
    radii = np.linspace(0.0, rho, 25)
    theta = 2.0 * np.pi * np.arange(96) / 96
    zs = (radii[:, None] * np.exp(1j * theta)[None, :]).ravel()
    ring = rho * np.exp(1j * 2.0 * np.pi * np.arange(256) / 256)
    zs = np.concatenate([zs, ring])
    diff = linear_combine(1.0, p, -1.0, q)
    return float(np.abs(diff.eval_many(zs)).max())


def run_stages(
    phi: Expr,
    profile: EpsilonProfile,
    m: int,
    num_stages: int,
    degree_cap: int,
    chain: Sequence[Expr] | None = None,
) -> tuple[Polynomial, list[Stage]]:
    """Run the staged construction and return (final polynomial, stage records).

    Stage-k constraints: point evaluations at the integers -k..k against the
    glued target, and for m >= 1 the unit-cell moments (i = 1..m,
    j = -(k-1)..k).  Moment values over cells inside the disk are computed
    exactly from the previous polynomial and are checked against the
    corresponding moments of phi; values over the two outermost cells come
    from phi directly.  `chain`, when given, must be the derivative chain of
    phi's anchored antiderivatives and enables the fast moment path.
    """
    if num_stages < 1:
        raise ValueError("stage count must be >= 1")
    if m < 0:
        raise ValueError("m must be nonnegative")
    phi_grid = grid_fn(phi)
    prev: Optional[Polynomial] = None
    stages: list[Stage] = []
    for k in range(1, num_stages + 1):
        bud = profile.budget(k)
        if k == 1:
            samples = sample_set_for(1, degree_cap, interval_target=phi_grid)
            point_nodes = range(-1, 2)
            moment_cells = range(0, 2)
        else:
            samples = glue(prev, phi, k, degree_cap)
            point_nodes = range(-k, k + 1)
            moment_cells = range(-(k - 1), k + 1)

        constraints: list[tuple] = []
        for j in point_nodes:
            if prev is not None and abs(j) <= k - 1:
                value = prev.eval(float(j))
            else:
                value = evaluate(phi, float(j))
            constraints.append((PointEval(float(j)), value))

        drift_max = 0.0
        for i in range(1, m + 1):
            for j in moment_cells:
                f = Moment(i=i, j=j, m=m)
                inner = prev is not None and max(abs(j), abs(j - 1)) <= k - 1
                if inner:
                    value = apply_to_poly(f, prev)
                    reference = apply_to_function(f, phi, chain=chain)
                    drift = abs(value - reference)
                    drift_max = max(drift_max, drift)
                    if drift > _MOMENT_MATCH_TOL:
                        raise StageConsistencyError(k, f, drift)
                else:
                    value = apply_to_function(f, phi, chain=chain)
                constraints.append((f, value))

        try:
            p = fit_constrained(samples, ConstraintSystem(tuple(constraints)), bud, degree_cap)
        except InfeasibleBudgetError as exc:
            exc.stage = k
            raise
        stages.append(Stage(
            k=k,
            budget=bud,
            polynomial=p,
            degree=p.degree,
            constraints=tuple(constraints),
            region_errors=certify_region_errors(p, samples, refine=2),
            disk_change=0.0 if prev is None else _disk_max_abs_diff(p, prev, k - 1.0),
            max_constraint_residual=constraint_residual_max(p, constraints),
            moment_match_drift=drift_max,
        ))
        prev = p
    return prev, stages
