"""Exact structural checks of the root-product polynomials.

Expected coefficient tables are frozen from an independent sympy
expansion (see test_matches_sympy_expansion); everything else is an
exact rational assertion with no tolerance.
"""

import math
from fractions import Fraction

import mpmath as mp
import pytest
import sympy

from harmonic_zeros import (
    DegreeError,
    build_pc,
    eval_poly,
    extract_b,
    roots_pc,
)


def sympy_coeffs(c):
    """Independent oracle: expand the defining product with sympy."""
    x = sympy.symbols("x")
    expr = x
    for j in range(2, c + 1):
        expr *= x**2 - 1 + sympy.Rational(1, j)
    poly = sympy.Poly(sympy.expand(expr), x)
    out = [Fraction(0)] * (2 * c)
    for power, coeff in zip(poly.monoms(), poly.coeffs()):
        out[power[0]] = Fraction(int(coeff.p), int(coeff.q))
    return tuple(out)


@pytest.mark.parametrize("c", range(2, 9))
def test_matches_sympy_expansion(c):
    assert build_pc(c).coeffs == sympy_coeffs(c)


def test_frozen_c2():
    # oracle value: x^3 - x/2
    assert build_pc(2).coeffs == (Fraction(0), Fraction(-1, 2), Fraction(0), Fraction(1))


def test_frozen_c3():
    # oracle value: x^5 - 7/6 x^3 + x/3
    assert build_pc(3).coeffs == (
        Fraction(0), Fraction(1, 3), Fraction(0), Fraction(-7, 6), Fraction(0), Fraction(1),
    )


@pytest.mark.parametrize("c", range(2, 9))
def test_monic_and_degree(c):
    poly = build_pc(c)
    assert poly.degree == 2 * c - 1
    assert poly.coeffs[-1] == 1


@pytest.mark.parametrize("c", range(2, 9))
def test_even_coefficients_vanish_exactly(c):
    poly = build_pc(c)
    for d in range(0, poly.degree + 1, 2):
        assert poly.coeffs[d] == 0


def test_rejects_bad_degree():
    for bad in (1, 0, -3, 65):
        with pytest.raises(DegreeError):
            build_pc(bad)


def test_b_table_c2():
    table = extract_b(2)
    assert table.b == {1: Fraction(-1, 2), 3: Fraction(-1)}
    assert 2 not in table.b  # even entries are absent, i.e. zero


def test_b_table_c3():
    table = extract_b(3)
    assert table.b == {1: Fraction(1, 3), 3: Fraction(7, 6), 5: Fraction(1)}


@pytest.mark.parametrize("c", range(2, 9))
def test_b_binomial_bound_exact(c):
    table = extract_b(c)
    for j, v in table.b.items():
        m = (j - 1) // 2
        assert abs(v) <= Fraction(math.comb(c - 1, m))
        assert abs(v) <= Fraction(2 ** (c - 1))


@pytest.mark.parametrize("c", range(2, 9))
def test_reconstruction_identity(c):
    poly = build_pc(c)
    table = extract_b(c)
    rebuilt = [Fraction(0)] * (2 * c)
    for j, v in table.b.items():
        sign = -1 if ((j - 1) // 2) % 2 else 1
        rebuilt[j] = sign * v
    assert tuple(rebuilt) == poly.coeffs


@pytest.mark.parametrize("c", range(2, 9))
def test_root_inventory(c):
    roots = roots_pc(c)
    assert len(roots) == 2 * c - 1
    values = [r.value(120) for r in roots]
    assert all(values[i] < values[i + 1] for i in range(len(values) - 1))
    for r in roots:
        if r.kind == "zero":
            assert r.squared() == 0
        else:
            assert r.squared() == 1 - Fraction(1, r.j)


def test_roots_c2_c3_values():
    vals2 = [float(r.value(70)) for r in roots_pc(2)]
    assert vals2 == pytest.approx([-math.sqrt(0.5), 0.0, math.sqrt(0.5)], abs=1e-15)
    vals3 = [float(r.value(70)) for r in roots_pc(3)]
    expected = [-math.sqrt(2 / 3), -math.sqrt(0.5), 0.0, math.sqrt(0.5), math.sqrt(2 / 3)]
    assert vals3 == pytest.approx(expected, abs=1e-15)


@pytest.mark.parametrize("c", range(2, 9))
def test_poly_vanishes_at_materialized_roots(c):
    poly = build_pc(c)
    deriv = type(poly)(tuple(j * poly.coeffs[j] for j in range(1, poly.degree + 1)))
    prec = 120
    with mp.workprec(prec):
        ulp = mp.ldexp(1, -prec + 1)
        for root in roots_pc(c):
            t = root.value(prec)
            val, err = eval_poly(poly, t, prec)
            dval, derr = eval_poly(deriv, t, prec)
            # the root itself is rounded, so allow slope * one ulp of t
            allowed = err + (abs(dval) + derr) * abs(t) * 2 * ulp
            assert abs(val) <= allowed


def test_eval_poly_examples():
    p2 = build_pc(2)
    val, err = eval_poly(p2, mp.mpf(1), 80)
    assert abs(val - mp.mpf(0.5)) <= err
    for c in range(2, 6):
        val, err = eval_poly(build_pc(c), mp.mpf(0), 80)
        assert val == 0 and err == 0 or abs(val) <= err
    p3 = build_pc(3)
    with mp.workprec(200):
        t = mp.sqrt(mp.mpf(1) / 2)
    val, err = eval_poly(p3, t, 200)
    with mp.workprec(200):
        deriv_scale = mp.mpf(2)  # |P3'| near sqrt(1/2) is below 2
        allowed = err + deriv_scale * abs(t) * mp.ldexp(1, -199)
    assert abs(val) <= allowed


@pytest.mark.parametrize("c", range(2, 9))
def test_sign_alternation_at_midpoints(c):
    """Exact-rational sign pattern between consecutive positive roots."""
    roots = [math.sqrt(1 - 1 / j) for j in range(2, c + 1)]
    pts = [Fraction(math.e ** (-math.pi / 2)).limit_denominator(10**12)]
    for a, b in zip(roots, roots[1:]):
        pts.append(Fraction((a + b) / 2).limit_denominator(10**12))
    pts.append(Fraction(1))
    poly = build_pc(c)
    signs = [1 if poly(q) > 0 else -1 for q in pts]
    assert all(signs[i] != signs[i + 1] for i in range(len(signs) - 1))
    assert signs[0] == (-1) ** (c - 1)
    assert signs[-1] == 1
