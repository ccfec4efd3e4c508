import math
import random

import pytest
from scipy import integrate

from entirefit.expr import expr_from_coeffs, parse
from entirefit.functionals import (
    Moment, PointEval, QuadratureError, apply_to_function, apply_to_poly,
    moment_fast_path, quadrature,
)
from entirefit.poly import Polynomial

from helpers import random_polynomial, scipy_nested_moment


def test_moment_validation():
    with pytest.raises(ValueError):
        Moment(i=0, j=1, m=2)
    with pytest.raises(ValueError):
        Moment(i=3, j=1, m=2)


def test_apply_to_poly_examples():
    # integral of 1 over [0, 1]
    assert apply_to_poly(Moment(i=3, j=1, m=3), Polynomial([1])) == 1
    assert apply_to_poly(PointEval(2.0), Polynomial([1, 0, 1])) == 5
    # nested integral of t: oracle computed first via scipy below
    oracle = scipy_nested_moment(lambda t: t, 1, 1, 2)
    assert abs(oracle - 1 / 6) < 1e-12
    assert abs(apply_to_poly(Moment(i=1, j=1, m=2), Polynomial([0, 1])) - 1 / 6) < 1e-15


def test_quadrature_examples():
    assert abs(quadrature(parse("1"), 0.0, 1.0, 1e-12) - 1) < 1e-13
    assert abs(quadrature(parse("sin(x)"), 0.0, math.pi, 1e-12) - 2) < 1e-10
    assert abs(quadrature(parse("x^2"), -1.0, 1.0, 1e-12) - 2 / 3) < 1e-10


def test_quadrature_matches_scipy():
    e = parse("exp(-x^2)*cos(x)")
    ours = quadrature(e, -2.0, 3.0, 1e-12)
    ref, _ = integrate.quad(lambda t: math.exp(-t * t) * math.cos(t), -2.0, 3.0, epsabs=1e-13)
    assert abs(ours - ref) < 1e-11


def test_quadrature_preconditions_and_depth_cap():
    with pytest.raises(ValueError):
        quadrature(parse("x"), 1.0, 0.0, 1e-12)
    with pytest.raises(QuadratureError):
        quadrature(parse("1/sqrt(x)"), 0.0, 1.0, 1e-13)


def test_moment_on_function_single_level():
    # integral of sin over [0, 1] = 1 - cos(1), oracle: adaptive quadrature
    val = apply_to_function(Moment(i=2, j=1, m=2), parse("sin(x)"))
    assert abs(val - (1 - math.cos(1))) < 1e-11


def test_point_eval_on_function():
    assert apply_to_function(PointEval(0.0), parse("sin(x)")) == 0


def test_fast_path_example():
    # chain for the constant 2 with m = 2: anchored antiderivatives z^2, 2z
    chain = [parse("x^2"), parse("2*x"), parse("2")]
    fast = apply_to_function(Moment(i=1, j=1, m=2), parse("2"), chain=chain)
    assert abs(fast - 1.0) < 1e-14
    nested = apply_to_function(Moment(i=1, j=1, m=2), parse("2"))
    assert abs(nested - 1.0) < 1e-11


def test_fast_path_matches_nested_quadrature_sin():
    # anchored antiderivative chain of sin: x - sin(x), 1 - cos(x), sin(x)
    chain = [parse("x - sin(x)"), parse("1 - cos(x)"), parse("sin(x)")]
    for i in (1, 2):
        for j in (-2, 0, 1, 3):
            f = Moment(i=i, j=j, m=2)
            fast = moment_fast_path(f, chain)
            nested = apply_to_function(f, parse("sin(x)"))
            assert abs(fast - nested) <= 1e-9


def test_poly_moments_match_nested_quadrature():
    # the randomized family: degree <= 10, all moments with m <= 4, |j| <= 3
    rng = random.Random(424242)
    for _ in range(2):
        p = random_polynomial(rng, max_degree=10, complex_coeffs=False)
        e = expr_from_coeffs(p.coeffs)
        for m in range(1, 5):
            for i in range(1, m + 1):
                if m - i >= 3 and m != 4:
                    continue
                js = (-3, -1, 0, 2, 3) if m - i < 3 else (-2, 1, 3)
                for j in js:
                    f = Moment(i=i, j=j, m=m)
                    exact = apply_to_poly(f, p)
                    nested = apply_to_function(f, e)
                    assert abs(exact - nested) <= 1e-9, (m, i, j)


def test_linearity():
    rng = random.Random(8)
    p = random_polynomial(rng, max_degree=8)
    q = random_polynomial(rng, max_degree=8)
    a, b = 1.5 - 0.5j, -2.0 + 1j
    from entirefit.poly import linear_combine
    combo = linear_combine(a, p, b, q)
    for f in (Moment(i=1, j=2, m=3), Moment(i=3, j=-1, m=3), PointEval(1.25)):
        lhs = apply_to_poly(f, combo)
        rhs = a * apply_to_poly(f, p) + b * apply_to_poly(f, q)
        assert abs(lhs - rhs) <= 1e-12 * (1 + abs(rhs))
