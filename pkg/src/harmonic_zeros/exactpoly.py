"""Exact rational construction of the odd root-product polynomials.

For an integer ``c >= 2`` the polynomial

    p_c(x) = x * (x^2 - 1 + 1/2) * (x^2 - 1 + 1/3) * ... * (x^2 - 1 + 1/c)

is monic of degree 2c - 1, odd, and has the 2c - 1 distinct real roots
0 and +-sqrt(1 - 1/j) for j = 2..c.  Every sine-series building block of
the construction is driven by the coefficient table of one such
polynomial, so everything here is kept in exact rational arithmetic:
parity, monicity and the binomial coefficient bound on the table entries
are asserted with no tolerance at all.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import mpmath as mp

MAX_C = 64  # hard cap; desk-scale instances use c <= 8


class DegreeError(ValueError):
    """Raised when a factor count c outside [2, MAX_C] is requested."""


@dataclass(frozen=True)
class RationalPolynomial:
    """Univariate polynomial with exact rational coefficients.

    ``coeffs[d]`` is the coefficient of x^d; the represented polynomial
    is monic of odd degree with vanishing even-degree coefficients.
    """

    coeffs: tuple[Fraction, ...]

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def __call__(self, t):
        """Evaluate exactly at a Fraction/int argument."""
        acc = Fraction(0)
        for c in reversed(self.coeffs):
            acc = acc * t + c
        return acc


@dataclass(frozen=True)
class BlockCoefficients:
    """Signed odd-degree coefficient table of the degree-(2c-1) polynomial.

    ``b[j]`` is defined for odd j in 1..2c-1 by
    ``(-1)^((j-1)/2) * b[j] = coefficient of x^j``; even-degree entries
    are identically zero and therefore absent from the map.
    """

    c: int
    b: dict[int, Fraction]

    @property
    def degree(self) -> int:
        return 2 * self.c - 1

    def odd_indices(self) -> list[int]:
        return sorted(self.b)

    def abs_sum(self) -> Fraction:
        return sum((abs(v) for v in self.b.values()), Fraction(0))


@dataclass(frozen=True, order=True)
class ExactRoot:
    """Root of the product polynomial, stored symbolically.

    ``kind`` is "zero", "plus" or "minus"; for the signed kinds the value
    is +-sqrt(1 - 1/j), so value**2 == 1 - 1/j holds exactly.
    """

    kind: str
    j: int

    def squared(self) -> Fraction:
        if self.kind == "zero":
            return Fraction(0)
        return 1 - Fraction(1, self.j)

    def value(self, prec: int = 53) -> mp.mpf:
        """Materialize to a float with prec mantissa bits."""
        with mp.workprec(prec):
            if self.kind == "zero":
                return mp.mpf(0)
            r = mp.sqrt(frac_to_mpf(self.squared(), prec))
            return -r if self.kind == "minus" else r


def frac_to_mpf(q: Fraction, prec: int) -> mp.mpf:
    """Round an exact rational to prec bits (error <= 2 ulp)."""
    with mp.workprec(prec):
        return mp.mpf(q.numerator) / mp.mpf(q.denominator)


def _check_c(c: int) -> None:
    if not isinstance(c, int) or c < 2 or c > MAX_C:
        raise DegreeError(f"factor count must be an integer in [2, {MAX_C}], got {c!r}")


def build_pc(c: int) -> RationalPolynomial:
    """Expand x * prod_{j=2..c} (x^2 - 1 + 1/j) exactly.

    Returns the full coefficient vector indexed by degree 0..2c-1.
    """
    _check_c(c)
    # even part q(s) = prod_{j=2..c} (s - (1 - 1/j)) with s = x^2
    q = [Fraction(1)]
    for j in range(2, c + 1):
        root = 1 - Fraction(1, j)
        new = [Fraction(0)] * (len(q) + 1)
        for i, a in enumerate(q):
            new[i + 1] += a
            new[i] -= a * root
        q = new
    coeffs = [Fraction(0)] * (2 * c)
    for i, a in enumerate(q):  # q[i] is the coefficient of s^i = x^(2i)
        coeffs[2 * i + 1] = a  # extra factor x
    return RationalPolynomial(tuple(coeffs))


def extract_b(c: int) -> BlockCoefficients:
    """Read the signed odd coefficient table off build_pc(c)."""
    poly = build_pc(c)
    b: dict[int, Fraction] = {}
    for j in range(1, 2 * c, 2):
        sign = -1 if ((j - 1) // 2) % 2 else 1
        b[j] = sign * poly.coeffs[j]
    table = BlockCoefficients(c=c, b=b)
    _validate_block(table, poly)
    return table


def _validate_block(table: BlockCoefficients, poly: RationalPolynomial) -> None:
    assert poly.coeffs[-1] == 1, "product of monic factors must be monic"
    for d in range(0, poly.degree + 1, 2):
        assert poly.coeffs[d] == 0, f"even-degree coefficient x^{d} must vanish"
    for j, v in table.b.items():
        bound = Fraction(math.comb(table.c - 1, (j - 1) // 2))
        assert abs(v) <= bound, f"|b_{j}| exceeds binomial({table.c - 1},{(j - 1) // 2})"


def roots_pc(c: int) -> list[ExactRoot]:
    """All 2c-1 roots, sorted ascending by value."""
    _check_c(c)
    roots = [ExactRoot("minus", j) for j in range(c, 1, -1)]
    roots.append(ExactRoot("zero", 0))
    roots.extend(ExactRoot("plus", j) for j in range(2, c + 1))
    return roots


def eval_poly(poly: RationalPolynomial, t, prec: int = 53):
    """Horner evaluation at a float argument with a forward error bound.

    Returns (value, err) where |true - value| <= err covers the rounding
    of the coefficient conversions and of every fused step.
    """
    with mp.workprec(prec):
        t = mp.mpf(t) if not isinstance(t, mp.mpf) else t
        u = mp.ldexp(1, -prec + 1)  # one-ulp relative step, doubled for safety below
        at = abs(t)
        acc = frac_to_mpf(poly.coeffs[-1], prec)
        err = abs(acc) * u
        for q in reversed(poly.coeffs[:-1]):
            cq = frac_to_mpf(q, prec)
            acc = acc * t + cq
            err = err * at + (abs(acc) + abs(cq)) * 2 * u
        return acc, 2 * err
