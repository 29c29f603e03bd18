"""Sine-exponential building blocks with exact phase reduction.

A level-k block is the harmonic function

    u(x, y) = sum over odd j of  b_j * sin(pi*j*x / 2^k) * exp(pi*j*y / 2^k)

with b_j the signed coefficient table of the level's root-product
polynomial.  The block vanishes identically on every vertical line
x = 2^l with l >= k, and analysis downstream leans on that vanishing
being *bit-exact*: the amplitudes attached to later levels are so small
that the usual sin(pi * integer) ~ 1e-16 float leak would swamp them.
All sine/cosine phases are therefore reduced modulo 2 in exact rational
arithmetic before any floating evaluation takes place.

Evaluations return a companion absolute error bound (forward rounding
analysis, not interval arithmetic); bounds are deliberately generous by
small constant factors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import mpmath as mp
import numpy as np

from .exactpoly import BlockCoefficients, extract_b, frac_to_mpf

# refuse exp() arguments beyond this magnitude; evaluating them would be a
# sign that the caller picked a hopeless radius/level combination
OVERFLOW_ARG = 1 << 26


class EvalOverflowError(ArithmeticError):
    """exp() argument out of the supported range; retry with a smaller
    radius or a construction with more headroom."""


@dataclass(frozen=True)
class DyadicRational:
    """num / 2^exp in canonical form (num odd or zero, exp >= 0)."""

    num: int
    exp: int

    def __post_init__(self):
        if self.exp < 0:
            raise ValueError("exponent must be >= 0")
        if self.num != 0 and self.num % 2 == 0 and self.exp > 0:
            raise ValueError("not canonical: numerator is even")
        if self.num == 0 and self.exp != 0:
            raise ValueError("not canonical: zero must have exponent 0")

    @staticmethod
    def from_fraction(q: Fraction) -> "DyadicRational":
        den = q.denominator
        e = den.bit_length() - 1
        if den != 1 << e:
            raise ValueError(f"{q} is not dyadic")
        return DyadicRational(q.numerator, e)

    @staticmethod
    def from_float(x) -> "DyadicRational":
        return DyadicRational.from_fraction(exact_fraction(x))

    def as_fraction(self) -> Fraction:
        return Fraction(self.num, 1 << self.exp)

    def __float__(self) -> float:
        return self.num / (1 << self.exp)


def exact_fraction(x) -> Fraction:
    """Exact rational value of x (floats and mpf are dyadic, no rounding)."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, DyadicRational):
        return x.as_fraction()
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, float):
        return Fraction(x)
    if isinstance(x, mp.mpf):
        sign, man, exp, _ = x._mpf_
        if not isinstance(man, int):
            man = int(man)
        if x == 0:
            return Fraction(0)
        val = Fraction(man, 1) * (Fraction(2) ** exp if exp >= 0 else Fraction(1, 2 ** (-exp)))
        return -val if sign else val
    raise TypeError(f"cannot take {type(x).__name__} as an exact coordinate")


def _reduce_half(q: Fraction) -> tuple[Fraction, int]:
    """Split q = m + s with integer m and s in [-1/2, 1/2)."""
    m = math.floor(q + Fraction(1, 2))
    return q - m, m


def sinpi_dyadic(q, prec: int = 53) -> mp.mpf:
    """sin(pi*q) with the argument reduced exactly before evaluation.

    Integer q gives exactly 0, odd multiples of 1/2 give exactly +-1;
    everything else is evaluated on the reduced argument in (-1/2, 1/2),
    where sin(pi * s) is perfectly conditioned.
    """
    val, _ = _sinpi_err(exact_fraction(q), prec)
    return val


def cospi_exact(q, prec: int = 53) -> mp.mpf:
    """cos(pi*q) = sin(pi*(q + 1/2)) via the same exact reduction."""
    val, _ = _sinpi_err(exact_fraction(q) + Fraction(1, 2), prec)
    return val


def _sinpi_err(q: Fraction, prec: int) -> tuple[mp.mpf, mp.mpf]:
    """(sin(pi*q), absolute error bound)."""
    s, m = _reduce_half(q)
    sign = -1 if m % 2 else 1
    with mp.workprec(prec):
        if s == 0:
            return mp.mpf(0), mp.mpf(0)
        if s == Fraction(-1, 2):
            return mp.mpf(-sign), mp.mpf(0)
        u = mp.ldexp(1, -prec + 1)
        sf = frac_to_mpf(s, prec)
        val = sign * mp.sinpi(sf)
        return val, (abs(val) + 1) * 4 * u


def _cospi_err(q: Fraction, prec: int) -> tuple[mp.mpf, mp.mpf]:
    return _sinpi_err(q + Fraction(1, 2), prec)


@dataclass(frozen=True)
class Block:
    """Level-k building block with its coefficient table."""

    k: int
    coeffs: BlockCoefficients

    @property
    def c(self) -> int:
        return self.coeffs.c

    def phase_scale(self) -> Fraction:
        return Fraction(1, 1 << self.k)


def make_block(k: int, c: int) -> Block:
    if k < 1:
        raise ValueError("level index must be >= 1")
    return Block(k=k, coeffs=extract_b(c))


@dataclass(frozen=True)
class XiPoint:
    """Predicted zero of a block on its half-level line x = 2^(k-1).

    The ordinate is (2^(k-1)/pi) * log(1 - 1/j), which always lies in
    (-2^(k-1), 0).
    """

    k: int
    j: int

    @property
    def x(self) -> int:
        return 1 << (self.k - 1)

    def ordinate(self, prec: int = 53) -> mp.mpf:
        with mp.workprec(prec):
            return (mp.mpf(self.x) / mp.pi) * mp.log(1 - mp.mpf(1) / self.j)


def xi_points(block: Block) -> list[XiPoint]:
    return [XiPoint(block.k, j) for j in range(2, block.c + 1)]


def _exp_term(arg: mp.mpf, u: mp.mpf) -> tuple[mp.mpf, mp.mpf]:
    """exp(arg) with a relative error bound covering arg rounding too."""
    if abs(arg) > OVERFLOW_ARG:
        raise EvalOverflowError(
            f"exp argument {mp.nstr(arg, 5)} exceeds the supported range"
        )
    val = mp.exp(arg)
    rel = (4 * abs(arg) + 2) * u
    return val, rel


def eval_u(block: Block, x, y, prec: int = 53) -> tuple[mp.mpf, mp.mpf]:
    """Block value at (x, y) with an absolute rounding-error bound.

    x is taken exactly (int/float/mpf/Fraction); phases j*x/2^k are
    reduced in exact rational arithmetic, so the value is bit-exact zero
    on the block's vanishing lines.
    """
    xq = exact_fraction(x)
    scale = block.phase_scale()
    with mp.workprec(prec):
        y = mp.mpf(y) if not isinstance(y, mp.mpf) else y
        u = mp.ldexp(1, -prec + 1)
        total = mp.mpf(0)
        err = mp.mpf(0)
        mag = mp.mpf(0)
        nterms = 0
        for j, bq in block.coeffs.b.items():
            s, s_err = _sinpi_err(j * xq * scale, prec)
            if s == 0 and s_err == 0:
                continue
            arg = mp.pi * j * y * frac_to_mpf(scale, prec)
            E, E_rel = _exp_term(arg, u)
            b = frac_to_mpf(bq, prec)
            ab = abs(b)
            term = b * s * E
            total += term
            mag += abs(term)
            err += ab * (abs(s) * E * E_rel + E * s_err) + abs(term) * 6 * u
            nterms += 1
        err += (nterms + 1) * u * mag
        return total, 2 * err


def grad_u(block: Block, x, y, prec: int = 53):
    """((du/dx, err), (du/dy, err)) by term-wise differentiation."""
    xq = exact_fraction(x)
    scale = block.phase_scale()
    with mp.workprec(prec):
        y = mp.mpf(y) if not isinstance(y, mp.mpf) else y
        u = mp.ldexp(1, -prec + 1)
        dx = mp.mpf(0)
        dy = mp.mpf(0)
        err_dx = mp.mpf(0)
        err_dy = mp.mpf(0)
        mag_dx = mp.mpf(0)
        mag_dy = mp.mpf(0)
        nterms = 0
        scale_f = frac_to_mpf(scale, prec)
        for j, bq in block.coeffs.b.items():
            phase = j * xq * scale
            s, s_err = _sinpi_err(phase, prec)
            co, co_err = _cospi_err(phase, prec)
            arg = mp.pi * j * y * scale_f
            E, E_rel = _exp_term(arg, u)
            b = frac_to_mpf(bq, prec)
            w = mp.pi * j * scale_f  # frequency of the term
            ab = abs(b) * w
            tx = b * w * co * E
            ty = b * w * s * E
            dx += tx
            dy += ty
            mag_dx += abs(tx)
            mag_dy += abs(ty)
            err_dx += ab * (abs(co) * E * E_rel + E * co_err) + abs(tx) * 8 * u
            err_dy += ab * (abs(s) * E * E_rel + E * s_err) + abs(ty) * 8 * u
            nterms += 1
        err_dx += (nterms + 1) * u * mag_dx
        err_dy += (nterms + 1) * u * mag_dy
        return (dx, 2 * err_dx), (dy, 2 * err_dy)


def c1_norm_bound(block: Block, r, prec: int = 53) -> mp.mpf:
    """Certified upper bound for max(|u|, |du/dx|, |du/dy|) on the ball B_r.

    Bound: sum_j |b_j| * max(1, pi*j/2^k) * exp(pi*j*r/2^k), inflated by
    a rounding allowance so it stays an upper bound as computed.
    """
    if r < 0:
        raise ValueError("radius must be >= 0")
    with mp.workprec(prec):
        r = mp.mpf(r)
        scale = frac_to_mpf(block.phase_scale(), prec)
        total = mp.mpf(0)
        for j, bq in block.coeffs.b.items():
            w = mp.pi * j * scale
            amp = abs(frac_to_mpf(bq, prec)) * max(mp.mpf(1), w)
            total += amp * mp.exp(w * r)
        return total * (1 + mp.ldexp(1, -prec + 10))


def mu_u_bound(block: Block, r, prec: int = 53) -> mp.mpf:
    """Certified upper bound for the sup of |u| on B_r:
    sum_j |b_j| * exp(pi*j*r/2^k)."""
    if r < 0:
        raise ValueError("radius must be >= 0")
    with mp.workprec(prec):
        r = mp.mpf(r)
        scale = frac_to_mpf(block.phase_scale(), prec)
        total = mp.mpf(0)
        for j, bq in block.coeffs.b.items():
            total += abs(frac_to_mpf(bq, prec)) * mp.exp(mp.pi * j * scale * r)
        return total * (1 + mp.ldexp(1, -prec + 10))


# ---------------------------------------------------------------------------
# fast float64 grid evaluation
#
# Grid diagnostics (zero-set tracing, sublevel rasters) do not need extended
# precision, but they do need the exact phase reduction: a leaked
# sin(pi * integer) ~ 1e-16 would light up the vanishing lines.  Since the
# phase depends on x only, each column gets one exactly-reduced sine per term
# and the y dependence is a plain outer exponential.
# ---------------------------------------------------------------------------


def sinpi_float(q: Fraction) -> float:
    """Float64 sin(pi*q) for exact rational q, with exact reduction."""
    s, m = _reduce_half(q)
    sign = -1.0 if m % 2 else 1.0
    if s == 0:
        return 0.0
    if s == Fraction(-1, 2):
        return -sign
    return sign * math.sin(math.pi * float(s))


def u_grid_values(block: Block, xs: list[Fraction], ys: np.ndarray) -> np.ndarray:
    """u on the grid xs x ys as a (len(xs), len(ys)) float64 array."""
    scale = block.phase_scale()
    js = block.coeffs.odd_indices()
    bs = np.array([float(block.coeffs.b[j]) for j in js])
    sines = np.empty((len(xs), len(js)))
    for i, xq in enumerate(xs):
        for t, j in enumerate(js):
            sines[i, t] = sinpi_float(j * xq * scale)
    coeff = sines * bs  # (nx, nterms)
    w = math.pi * float(scale)
    with np.errstate(over="ignore"):
        expo = np.exp(np.outer(np.array(js, dtype=float) * w, ys))  # (nterms, ny)
        return coeff @ expo


def u_point_value(block: Block, xq: Fraction, y: float) -> float:
    """Scalar float64 u(x, y) with exact phase reduction (saddle probes)."""
    scale = block.phase_scale()
    total = 0.0
    w = math.pi * float(scale)
    for j, bq in block.coeffs.b.items():
        s = sinpi_float(j * xq * scale)
        if s == 0.0:
            continue
        total += float(bq) * s * math.exp(w * j * y)
    return total


# ---------------------------------------------------------------------------
# marching squares
# ---------------------------------------------------------------------------

_BOTTOM, _RIGHT, _TOP, _LEFT = 0, 1, 2, 3


def _edge_crossing(edge, i, m, xs, ys, vals):
    """Interpolated zero on a cell edge, or None (zeros count as >= 0)."""
    if edge == _BOTTOM:
        (i0, m0), (i1, m1) = (i, m), (i + 1, m)
    elif edge == _RIGHT:
        (i0, m0), (i1, m1) = (i + 1, m), (i + 1, m + 1)
    elif edge == _TOP:
        (i0, m0), (i1, m1) = (i + 1, m + 1), (i, m + 1)
    else:
        (i0, m0), (i1, m1) = (i, m + 1), (i, m)
    va, vb = vals[i0, m0], vals[i1, m1]
    if (va >= 0.0) == (vb >= 0.0):
        return None
    t = va / (va - vb)
    xa, xb = xs[i0], xs[i1]
    ya, yb = ys[m0], ys[m1]
    return (xa + t * (xb - xa), ya + t * (yb - ya))


def _cell_segments(i, m, xs, ys, vals, center_value):
    pts = {}
    for edge in (_BOTTOM, _RIGHT, _TOP, _LEFT):
        p = _edge_crossing(edge, i, m, xs, ys, vals)
        if p is not None:
            pts[edge] = p
    edges = sorted(pts)
    if len(pts) == 2:
        a, b = edges
        return [(pts[a], pts[b])]
    if len(pts) == 4:
        # saddle: pair the crossings so the contour is consistent with the
        # sign sampled at the cell center
        if (center_value(i, m) >= 0.0) == (vals[i, m] >= 0.0):
            pairs = [(_BOTTOM, _RIGHT), (_TOP, _LEFT)]
        else:
            pairs = [(_BOTTOM, _LEFT), (_TOP, _RIGHT)]
        return [(pts[a], pts[b]) for a, b in pairs]
    return []


def _join_segments(segments, tol):
    """Chain shared endpoints into polylines."""

    def key(p):
        return (round(p[0] / tol), round(p[1] / tol))

    adj: dict[tuple, list[int]] = {}
    for idx, (a, b) in enumerate(segments):
        adj.setdefault(key(a), []).append(idx)
        adj.setdefault(key(b), []).append(idx)
    used = [False] * len(segments)
    polylines = []
    for start in range(len(segments)):
        if used[start]:
            continue
        used[start] = True
        a, b = segments[start]
        chain = [a, b]
        for end in (0, 1):
            while True:
                p = chain[-1] if end == 0 else chain[0]
                nxt = None
                for idx in adj.get(key(p), []):
                    if not used[idx]:
                        nxt = idx
                        break
                if nxt is None:
                    break
                used[nxt] = True
                pa, pb = segments[nxt]
                q = pb if key(pa) == key(p) else pa
                if end == 0:
                    chain.append(q)
                else:
                    chain.insert(0, q)
        polylines.append(np.array(chain))
    return polylines


def trace_zero_set(block: Block, bbox, resolution: int) -> list[np.ndarray]:
    """Marching-squares polylines of {u = 0} inside bbox.

    bbox is (x0, x1, y0, y1); resolution is the number of sample points
    per axis (>= 2).  Grid x coordinates are snapped to exact rationals
    so vanishing lines land on the grid bit-exactly when they align.
    """
    x0, x1, y0, y1 = bbox
    if not (x1 > x0 and y1 > y0):
        raise ValueError("bbox must have positive extent")
    if resolution < 2:
        raise ValueError("resolution must be >= 2")
    xq0, xq1 = exact_fraction(float(x0)), exact_fraction(float(x1))
    step = (xq1 - xq0) / (resolution - 1)
    xs_exact = [xq0 + i * step for i in range(resolution)]
    xs = np.array([float(q) for q in xs_exact])
    ys = np.linspace(float(y0), float(y1), resolution)
    vals = u_grid_values(block, xs_exact, ys)

    def center_value(i, m):
        xm = (xs_exact[i] + xs_exact[i + 1]) / 2
        ym = 0.5 * (ys[m] + ys[m + 1])
        return u_point_value(block, xm, ym)

    segments = []
    for i in range(resolution - 1):
        for m in range(resolution - 1):
            segments.extend(_cell_segments(i, m, xs, ys, vals, center_value))
    tol = 1e-9 * max(float(x1 - x0), float(y1 - y0))
    return _join_segments(segments, tol)


def trace_zero_set_values(xs: np.ndarray, ys: np.ndarray, vals: np.ndarray,
                          center=None) -> list[np.ndarray]:
    """Marching squares over precomputed grid values (used for the sum g)."""
    if center is None:
        def center(i, m):  # bilinear fallback for saddle disambiguation
            return 0.25 * (vals[i, m] + vals[i + 1, m] + vals[i, m + 1] + vals[i + 1, m + 1])
    segments = []
    for i in range(len(xs) - 1):
        for m in range(len(ys) - 1):
            segments.extend(_cell_segments(i, m, xs, ys, vals, center))
    tol = 1e-9 * max(xs[-1] - xs[0], ys[-1] - ys[0])
    return _join_segments(segments, tol)
