"""Inductive assembly of the harmonic map with prescribed zero counts.

Levels are added one at a time.  Level k contributes a_k * u_k where u_k
is a level-k block; the amplitude a_k is capped twice:

  * a growth cap A_k engineered so that the total certified modulus
    budget sum_k a_k * mu_u_bound(k, r) stays below e^(r^(1+eps)) for
    every radius r >= 0, and
  * a perturbation cap min(m_1..m_{k-1}) / (2^k * ||u_k||_C1(B_2^k)),
    which keeps the new level from disturbing the sign changes that
    earlier levels planted on their half-level lines.

The margin m_k is realized as a C0 sign-alternation margin: half the
smallest |g_k| over a set of test points that straddle the level's
predicted zeros, minus the evaluation error.  Any perturbation smaller
than m_k in sup norm leaves at least c_k - 1 sign changes on the line
x = 2^(k-1); derivative regularity is checked a posteriori at the
certified zeros rather than folded into the margin.

Everything is evaluated in mpmath at the construction's precision, and
the quantities that certificates depend on carry explicit error bounds.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass
from fractions import Fraction

import mpmath as mp

from .blocks import (
    Block,
    _sinpi_err,
    c1_norm_bound,
    eval_u,
    exact_fraction,
    grad_u,
    make_block,
    mu_u_bound,
    xi_points,
)
from .exactpoly import frac_to_mpf

FORMAT_TAG = "harmonic-zeros/construction-v1"


class PrecisionError(ArithmeticError):
    """A margin or amplitude collapsed at the working precision."""

    def __init__(self, message: str, level: int | None = None):
        if level is not None:
            message = f"level {level}: {message} (retry with more mantissa bits)"
        super().__init__(message)
        self.level = level


class DomainError(ValueError):
    """Evaluation point outside the region with a recomputable tail."""


@dataclass(frozen=True)
class Level:
    """One assembled level: block, growth cap, amplitude and margin."""

    k: int
    c: int
    cap_A: mp.mpf
    amplitude: mp.mpf
    margin: mp.mpf
    block: Block

    @property
    def n(self) -> int:
        return self.c - 1


@dataclass(frozen=True)
class Construction:
    """Truncated assembled sum g = sum_{k<=N} a_k u_k plus its metadata.

    ``n`` keeps the full requested zero-count sequence even beyond the
    truncation depth; the extra entries make the tail recomputable on
    dyadic balls larger than B_2^N.
    """

    epsilon: mp.mpf
    n: tuple[int, ...]
    depth: int
    precision: int
    levels: tuple[Level, ...]

    def level(self, k: int) -> Level:
        return self.levels[k - 1]

    @property
    def target_counts(self) -> list[int]:
        """Partial sums of n up to each built level."""
        out, acc = [], 0
        for lv in self.levels:
            acc += lv.n
            out.append(acc)
        return out


@dataclass(frozen=True)
class TailBound:
    """Certified C1 bound on everything beyond level k over B_2^k.

    ``value`` bounds || sum_{i>k} a_i u_i ||_C1(B_2^k): the built levels
    k+1..N enter with their true amplitudes, the unbuilt remainder is
    dominated by m_k * 2^(-N).  The construction guarantees value < margin.
    """

    k: int
    depth: int
    value: mp.mpf
    margin: mp.mpf


def growth_penalty_minimizer(kappa: int, epsilon, prec: int = 53):
    """Closed-form minimizer of r |-> r^(1+eps) - (pi/2)*kappa*r over r >= 0.

    Returns (r_star, M) with M the minimum value:
    r_star = (pi*kappa / (2*(1+eps)))^(1/eps), M = -r_star*(pi*kappa/2)*eps/(1+eps).
    """
    with mp.workprec(prec):
        eps = mp.mpf(epsilon)
        if eps <= 0:
            raise ValueError("epsilon must be > 0")
        beta = mp.pi * kappa / 2
        r_star = (beta / (1 + eps)) ** (1 / eps)
        m_val = -r_star * beta * eps / (1 + eps)
        return r_star, m_val


def compute_cap_A(k: int, c_k: int, epsilon, prec: int = 53) -> mp.mpf:
    """Growth cap for a level with 2c_k - 1 series terms.

    With kappa = 2c_k - 1, any amplitude a <= A_k satisfies
    a * 2^(3c_k-2) * e^((pi/2)*kappa*r) <= 2^(-kappa) * e^(r^(1+eps))
    for every r >= 0.  The returned value is computed with guard bits and
    shaved slightly downward so the guarantee survives rounding.
    """
    if c_k < 2:
        raise ValueError("c_k must be >= 2")
    kappa = 2 * c_k - 1
    with mp.workprec(prec + 64):
        _, m_val = growth_penalty_minimizer(kappa, epsilon, prec + 64)
        cap = mp.exp(m_val) * mp.ldexp(1, -(kappa + 3 * c_k - 2))
        cap *= 1 - mp.ldexp(1, -prec + 8)
    with mp.workprec(prec):
        return +cap


def margin_test_ordinates(block: Block, prec: int) -> list[mp.mpf]:
    """Sign-alternation test points on the level's half-level line.

    Endpoints -2^(k-1) and 0 plus the midpoints between consecutive
    predicted zero ordinates: c points total, one per sign segment of the
    level's restriction to the line.
    """
    half = mp.mpf(1 << (block.k - 1))
    with mp.workprec(prec):
        ords = [p.ordinate(prec) for p in xi_points(block)]
        pts = [-half]
        pts += [(ords[i] + ords[i + 1]) / 2 for i in range(len(ords) - 1)]
        pts.append(mp.mpf(0))
        return pts


def choose_margin(k: int, levels: list[Level], prec: int) -> mp.mpf:
    """Perturbation margin for the freshly assembled level k.

    Half the smallest test-point magnitude of g_k = a_k u_k on the line
    x = 2^(k-1), net of evaluation error.  Signs must alternate; a
    non-positive net magnitude means the working precision is exhausted.
    """
    level = levels[k - 1]
    block = level.block
    x = 1 << (k - 1)
    with mp.workprec(prec):
        worst = None
        last_sign = 0
        for y in margin_test_ordinates(block, prec):
            val, err = eval_u(block, x, y, prec)
            gval = level.amplitude * val
            gerr = level.amplitude * err + abs(gval) * mp.ldexp(1, -prec + 2)
            net = abs(gval) - gerr
            if net <= 0:
                raise PrecisionError("margin test point is numerically ambiguous", k)
            sign = 1 if gval > 0 else -1
            if last_sign and sign == last_sign:
                raise PrecisionError("sign alternation lost at margin test points", k)
            last_sign = sign
            worst = net if worst is None else min(worst, net)
        if last_sign != 1:
            raise PrecisionError("restriction must be positive at y = 0", k)
        return worst / 2


def choose_amplitude(k: int, cap: mp.mpf, margins: list[mp.mpf],
                     c1_on_own_ball: mp.mpf, prec: int) -> mp.mpf:
    """Largest allowed amplitude: min(cap, min(margins) / (2^k * ||u_k||)).

    The quotient is shaved so the stored-value audit
    a_k * 2^k * ||u_k||_C1(B_2^k) <= min(margins) holds as an exact
    comparison of computed numbers.
    """
    with mp.workprec(prec):
        if k == 1 or not margins:
            return +cap
        min_m = min(margins)
        denom = mp.ldexp(c1_on_own_ball, k)
        quota = (min_m / denom) * (1 - mp.ldexp(1, -prec + 8))
        for _ in range(4):
            if quota * denom <= min_m:
                break
            quota *= 1 - mp.ldexp(1, -prec + 8)
        else:
            raise PrecisionError("amplitude quota cannot clear the margin audit", k)
        a = min(+cap, quota)
        if a <= 0:
            raise PrecisionError("amplitude underflowed", k)
        return a


def build_construction(n, epsilon, N: int, precision: int = 53) -> Construction:
    """Run the induction for levels 1..N of the requested count sequence."""
    n = tuple(int(v) for v in n)
    if any(v < 1 for v in n):
        raise ValueError("zero counts must be positive integers")
    if not 1 <= N <= len(n):
        raise ValueError(f"depth must satisfy 1 <= N <= len(n) = {len(n)}")
    if precision < 53:
        raise ValueError("precision must be >= 53 bits")
    with mp.workprec(precision):
        eps = mp.mpf(epsilon)
        if eps <= 0:
            raise ValueError("epsilon must be > 0")
    levels: list[Level] = []
    margins: list[mp.mpf] = []
    for k in range(1, N + 1):
        c_k = n[k - 1] + 1
        block = make_block(k, c_k)
        cap = compute_cap_A(k, c_k, eps, precision)
        c1b = c1_norm_bound(block, mp.mpf(1 << k), precision)
        a_k = choose_amplitude(k, cap, margins, c1b, precision)
        levels.append(Level(k=k, c=c_k, cap_A=cap, amplitude=a_k,
                            margin=mp.mpf(0), block=block))
        m_k = choose_margin(k, levels, precision)
        levels[-1] = Level(k=k, c=c_k, cap_A=cap, amplitude=a_k,
                           margin=m_k, block=block)
        margins.append(m_k)
    constr = Construction(epsilon=eps, n=n, depth=N,
                          precision=precision, levels=tuple(levels))
    problems = audit_construction(constr)
    if problems:
        raise PrecisionError("; ".join(problems))
    return constr


def condition1_product(constr: Construction, k: int) -> mp.mpf:
    """a_k * 2^k * ||u_k||_C1(B_2^k) as audited (deterministic recompute)."""
    lv = constr.level(k)
    with mp.workprec(constr.precision):
        c1b = c1_norm_bound(lv.block, mp.mpf(1 << k), constr.precision)
        return mp.ldexp(lv.amplitude * c1b, k)


def audit_construction(constr: Construction) -> list[str]:
    """Stored-value invariant audit; returns a list of violations."""
    problems = []
    with mp.workprec(constr.precision):
        for lv in constr.levels:
            if not lv.amplitude > 0:
                problems.append(f"level {lv.k}: amplitude not positive")
            if not lv.margin > 0:
                problems.append(f"level {lv.k}: margin not positive")
            if lv.amplitude > lv.cap_A:
                problems.append(f"level {lv.k}: amplitude exceeds growth cap")
            if lv.c != constr.n[lv.k - 1] + 1:
                problems.append(f"level {lv.k}: c != n_k + 1")
            if lv.k >= 2:
                prior = min(l.margin for l in constr.levels[: lv.k - 1])
                if condition1_product(constr, lv.k) > prior:
                    problems.append(
                        f"level {lv.k}: amplitude*2^k*C1-norm exceeds earlier margins"
                    )
        for lv in constr.levels:
            tb = tail_bound(constr, lv.k)
            if not tb.value < tb.margin:
                problems.append(f"level {lv.k}: tail bound not below margin")
    return problems


def _cache(constr: Construction) -> dict:
    # evaluation loops hit the same tail bounds thousands of times; the
    # cache lives on the (frozen) instance so lifetimes match
    try:
        return object.__getattribute__(constr, "_bound_cache")
    except AttributeError:
        store: dict = {}
        object.__setattr__(constr, "_bound_cache", store)
        return store


def tail_bound(constr: Construction, k: int) -> TailBound:
    """Certified bound on || sum_{i>k} a_i u_i ||_C1(B_2^k)."""
    if not 1 <= k <= constr.depth:
        raise ValueError("tail bound is defined for built levels only")
    cached = _cache(constr).get(("tail", k))
    if cached is not None:
        return cached
    with mp.workprec(constr.precision):
        radius = mp.mpf(1 << k)
        total = mp.mpf(0)
        for lv in constr.levels[k:]:
            total += lv.amplitude * c1_norm_bound(lv.block, radius, constr.precision)
        m_k = constr.level(k).margin
        total += mp.ldexp(m_k, -constr.depth)
        tb = TailBound(k=k, depth=constr.depth, value=total, margin=m_k)
        _cache(constr)[("tail", k)] = tb
        return tb


def _ball_index(constr: Construction, x, y) -> int:
    """Smallest m >= 1 with the point inside the closed ball B_2^m.

    Coordinates are exact rationals (mpf included), so the comparison is
    exact and boundary points stay in their own ball.
    """
    rho2 = exact_fraction(x) ** 2 + exact_fraction(y) ** 2
    m = 1
    while rho2 > Fraction(1 << (2 * m)):
        m += 1
        if m > 64:
            raise DomainError("evaluation point absurdly far out")
    return m


def tail_on_ball(constr: Construction, m: int) -> mp.mpf:
    """C1 tail bound for terms beyond the truncation, over B_2^m.

    For m <= N this is the standard tail bound.  For larger dyadic balls
    the would-be levels N+1..m are dominated through their caps (their c
    values must still be known from the requested sequence); levels
    beyond max(m, N) are dominated by the margin geometric tail as usual.
    """
    N = constr.depth
    cached = _cache(constr).get(("ball", m))
    if cached is not None:
        return cached
    with mp.workprec(constr.precision):
        if m <= N:
            return tail_bound(constr, m).value
        if m > len(constr.n):
            raise DomainError(
                f"ball B_2^{m} exceeds the known count sequence "
                f"(len(n) = {len(constr.n)}); tail not recomputable"
            )
        min_m = min(lv.margin for lv in constr.levels)
        radius = mp.mpf(1 << m)
        total = mp.ldexp(min_m, -m)  # levels beyond max(m, N)
        for i in range(N + 1, m + 1):
            c_i = constr.n[i - 1] + 1
            block = make_block(i, c_i)
            cap = compute_cap_A(i, c_i, constr.epsilon, constr.precision)
            own = c1_norm_bound(block, mp.mpf(1 << i), constr.precision)
            quota = min_m / mp.ldexp(own, i)
            total += min(cap, quota) * c1_norm_bound(block, radius, constr.precision)
        _cache(constr)[("ball", m)] = total
        return total


def eval_g(constr: Construction, x, y) -> tuple[mp.mpf, mp.mpf]:
    """Assembled sum at (x, y); error = rounding + tail on the smallest
    enclosing dyadic ball."""
    prec = constr.precision
    with mp.workprec(prec):
        y = mp.mpf(y) if not isinstance(y, mp.mpf) else y
        u = mp.ldexp(1, -prec + 1)
        total = mp.mpf(0)
        err = mp.mpf(0)
        for lv in constr.levels:
            val, verr = eval_u(lv.block, x, y, prec)
            term = lv.amplitude * val
            total += term
            err += lv.amplitude * verr + (abs(term) + abs(total)) * u
        err += tail_on_ball(constr, _ball_index(constr, x, y))
        return total, err


def grad_g(constr: Construction, x, y):
    """((dg/dx, err), (dg/dy, err)) with tail included in both errors."""
    prec = constr.precision
    with mp.workprec(prec):
        y = mp.mpf(y) if not isinstance(y, mp.mpf) else y
        u = mp.ldexp(1, -prec + 1)
        gx = mp.mpf(0)
        gy = mp.mpf(0)
        ex = mp.mpf(0)
        ey = mp.mpf(0)
        for lv in constr.levels:
            (dx, dxe), (dy_, dye) = grad_u(lv.block, x, y, prec)
            gx += lv.amplitude * dx
            gy += lv.amplitude * dy_
            ex += lv.amplitude * dxe + abs(gx) * u
            ey += lv.amplitude * dye + abs(gy) * u
        tail = tail_on_ball(constr, _ball_index(constr, x, y))
        return (gx, ex + tail), (gy, ey + tail)


def exact_to_mpf(x, prec: int) -> mp.mpf:
    if isinstance(x, mp.mpf):
        return x
    if isinstance(x, (int, float)):
        with mp.workprec(prec):
            return mp.mpf(x)
    return frac_to_mpf(exact_fraction(x), prec)


def eval_h(constr: Construction, x, y):
    """Map value ((g, sin(pi x) e^(pi y)), errors).

    The second component goes through exact phase reduction, so it is
    bit-exact zero on every integer line.
    """
    prec = constr.precision
    g_val, g_err = eval_g(constr, x, y)
    with mp.workprec(prec):
        y = mp.mpf(y) if not isinstance(y, mp.mpf) else y
        u = mp.ldexp(1, -prec + 1)
        s, s_err = _sinpi_err(exact_fraction(x), prec)
        if s == 0 and s_err == 0:
            return (g_val, mp.mpf(0)), (g_err, mp.mpf(0))
        E = mp.exp(mp.pi * y)
        e_rel = (4 * abs(mp.pi * y) + 2) * u
        h2 = s * E
        h2_err = abs(s) * E * e_rel + E * s_err + abs(h2) * 4 * u
        return (g_val, h2), (g_err, h2_err)


def eval_f(constr: Construction, z1, z2):
    """Term-wise complex substitution ((f1, f2), absolute error bounds).

    Restricting to real arguments reproduces eval_h up to rounding; the
    error bounds cover rounding only (the truncation is shared with the
    real evaluation, so it cancels in the restriction comparison).
    """
    prec = constr.precision
    with mp.workprec(prec):
        z1 = mp.mpc(z1)
        z2 = mp.mpc(z2)
        u = mp.ldexp(1, -prec + 1)
        f1 = mp.mpc(0)
        err1 = mp.mpf(0)
        mag = mp.mpf(0)
        for lv in constr.levels:
            scale = frac_to_mpf(lv.block.phase_scale(), prec)
            a = lv.amplitude
            for j, bq in lv.block.coeffs.b.items():
                b = frac_to_mpf(bq, prec)
                s = mp.sinpi(j * z1 * scale)
                E = mp.exp(mp.pi * j * z2 * scale)
                term = a * b * s * E
                f1 += term
                tmag = abs(a) * abs(b) * abs(s) * abs(E)
                mag += tmag
                growth = mp.pi * j * scale * (abs(z1) + abs(z2)) + 1
                err1 += tmag * 12 * growth * u
        err1 += 8 * u * mag
        s2 = mp.sinpi(z1)
        E2 = mp.exp(mp.pi * z2)
        f2 = s2 * E2
        err2 = abs(s2) * abs(E2) * 12 * (mp.pi * (abs(z1) + abs(z2)) + 1) * u
        return (f1, f2), (err1, err2)


def lift_dim(constr: Construction, d: int, point):
    """Embed the planar map into dimension d: (h(x1, x2), x3, ..., xd)."""
    if d < 3:
        raise ValueError("dimension lift needs d >= 3")
    if len(point) != d:
        raise ValueError(f"point must have {d} coordinates")
    (h1, h2), _ = eval_h(constr, point[0], point[1])
    with mp.workprec(constr.precision):
        rest = [mp.mpf(v) if not isinstance(v, mp.mpf) else v for v in point[2:]]
    return (h1, h2, *rest)


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------


def _mpf_to_str(x: mp.mpf, prec: int) -> str:
    digits = int(prec * math.log10(2)) + 3
    return mp.nstr(x, digits)


def _mpf_from_str(s: str, prec: int) -> mp.mpf:
    with mp.workprec(prec):
        return mp.mpf(s)


def construction_to_json(constr: Construction) -> dict:
    prec = constr.precision
    doc = {
        "format": FORMAT_TAG,
        "precision": prec,
        "epsilon": _mpf_to_str(constr.epsilon, prec),
        "n": list(constr.n),
        "depth": constr.depth,
        "levels": [
            {
                "k": lv.k,
                "c": lv.c,
                "cap_A": _mpf_to_str(lv.cap_A, prec),
                "amplitude": _mpf_to_str(lv.amplitude, prec),
                "margin": _mpf_to_str(lv.margin, prec),
            }
            for lv in constr.levels
        ],
    }
    doc["hash"] = _hash_doc(doc)
    return doc


def _hash_doc(doc: dict) -> str:
    body = {k: v for k, v in doc.items() if k != "hash"}
    blob = json.dumps(body, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def construction_hash(constr: Construction) -> str:
    return construction_to_json(constr)["hash"]


def construction_from_json(doc: dict) -> Construction:
    if doc.get("format") != FORMAT_TAG:
        raise ValueError(f"unrecognized construction format: {doc.get('format')!r}")
    prec = int(doc["precision"])
    levels = []
    for entry in doc["levels"]:
        block = make_block(int(entry["k"]), int(entry["c"]))
        levels.append(
            Level(
                k=int(entry["k"]),
                c=int(entry["c"]),
                cap_A=_mpf_from_str(entry["cap_A"], prec),
                amplitude=_mpf_from_str(entry["amplitude"], prec),
                margin=_mpf_from_str(entry["margin"], prec),
                block=block,
            )
        )
    return Construction(
        epsilon=_mpf_from_str(doc["epsilon"], prec),
        n=tuple(int(v) for v in doc["n"]),
        depth=int(doc["depth"]),
        precision=prec,
        levels=tuple(levels),
    )
