"""Block evaluation: exact vanishing, certified bounds, tracing."""

import math
from fractions import Fraction

import mpmath as mp
import numpy as np
import pytest

from harmonic_zeros import (
    DyadicRational,
    build_pc,
    c1_norm_bound,
    cospi_exact,
    eval_poly,
    eval_u,
    grad_u,
    make_block,
    mu_u_bound,
    sinpi_dyadic,
    trace_zero_set,
    xi_points,
)
from harmonic_zeros.blocks import sinpi_float, u_grid_values


def test_sinpi_exact_values():
    assert sinpi_dyadic(3) == 0
    assert sinpi_dyadic(0) == 0
    assert sinpi_dyadic(Fraction(1, 2)) == 1
    assert sinpi_dyadic(Fraction(5, 2)) == 1
    assert sinpi_dyadic(Fraction(3, 2)) == -1
    assert sinpi_dyadic(Fraction(-1, 2)) == -1
    assert sinpi_dyadic(-7) == 0
    assert cospi_exact(2) == 1
    assert cospi_exact(1) == -1
    assert cospi_exact(Fraction(1, 2)) == 0
    assert cospi_exact(Fraction(7, 2)) == 0


def test_sinpi_generic_matches_sin():
    with mp.workprec(120):
        for q in (Fraction(1, 3), Fraction(7, 5), Fraction(-9, 7), Fraction(1, 10)):
            ref = mp.sin(mp.pi * mp.mpf(q.numerator) / q.denominator)
            assert abs(sinpi_dyadic(q, 120) - ref) < mp.mpf(2) ** -110


def test_sinpi_float_reduction():
    assert sinpi_float(Fraction(6)) == 0.0
    assert sinpi_float(Fraction(9, 2)) == 1.0
    assert sinpi_float(Fraction(7, 2)) == -1.0
    assert sinpi_float(Fraction(1, 4)) == pytest.approx(math.sqrt(0.5), rel=1e-15)


def test_dyadic_rational_canonical():
    q = DyadicRational.from_fraction(Fraction(6, 8))
    assert (q.num, q.exp) == (3, 2)
    assert float(q) == 0.75
    assert DyadicRational.from_float(0.375).as_fraction() == Fraction(3, 8)
    with pytest.raises(ValueError):
        DyadicRational(4, 1)
    with pytest.raises(ValueError):
        DyadicRational.from_fraction(Fraction(1, 3))


@pytest.mark.parametrize("k,c", [(1, 2), (2, 3), (3, 4), (4, 5)])
def test_bit_exact_vanishing_lines(k, c):
    block = make_block(k, c)
    rng = np.random.default_rng(7)
    for l in range(k, k + 3):
        x = 2**l
        for y in rng.uniform(-float(2**k), float(2**k), 50):
            val, err = eval_u(block, x, float(y), prec=256)
            assert val == 0 and err == 0
            val, err = eval_u(block, -x, float(y), prec=256)
            assert val == 0 and err == 0
    # even multiples of the period vanish too
    val, err = eval_u(block, 3 * 2**k, 0.1, prec=256)
    assert val == 0 and err == 0


@pytest.mark.parametrize("k,c", [(1, 2), (2, 3), (3, 5)])
def test_line_restriction_identity(k, c):
    block = make_block(k, c)
    poly = build_pc(c)
    x = 2 ** (k - 1)
    rng = np.random.default_rng(11)
    prec = 200
    for y in rng.uniform(-float(x), 0.0, 100):
        uval, uerr = eval_u(block, x, float(y), prec=prec)
        with mp.workprec(prec):
            t = mp.exp(mp.pi * mp.mpf(float(y)) / 2**k)
            pval, perr = eval_poly(poly, t, prec)
            # t itself is rounded; charge its ulp against the poly slope
            slack = mp.ldexp(abs(t), -prec + 6) * poly.degree * 4
            assert abs(uval - pval) <= uerr + perr + slack


@pytest.mark.parametrize("k,c", [(1, 2), (2, 4), (3, 3), (4, 5)])
def test_zero_at_predicted_points(k, c):
    block = make_block(k, c)
    prec = 200
    for p in xi_points(block):
        y = p.ordinate(prec)
        val, err = eval_u(block, p.x, y, prec=prec)
        (_, _), (dy, dye) = grad_u(block, p.x, y, prec=prec)
        with mp.workprec(prec):
            allowed = err + (abs(dy) + dye) * mp.ldexp(abs(y), -prec + 4)
        assert abs(val) <= allowed
        # certified nonvanishing derivative at the predicted zero
        assert abs(dy) > dye


def test_xi_ordinates_inside_window():
    for k, c in [(1, 2), (2, 3), (4, 8)]:
        for p in xi_points(make_block(k, c)):
            y = float(p.ordinate(80))
            assert -(2 ** (k - 1)) < y < 0


@pytest.mark.parametrize("k,c", [(1, 2), (2, 3)])
def test_gradient_matches_finite_differences(k, c):
    block = make_block(k, c)
    prec = 256
    rng = np.random.default_rng(3)
    pts = rng.uniform(-2.0, 2.0, size=(25, 2))
    with mp.workprec(prec):
        h = mp.mpf("1e-6")
        for px, py in pts:
            x = mp.mpf(float(px))
            y = mp.mpf(float(py))
            (gx, _), (gy, _) = grad_u(block, x, y, prec=prec)
            fx = (eval_u(block, x + h, y, prec)[0] - eval_u(block, x - h, y, prec)[0]) / (2 * h)
            fy = (eval_u(block, x, y + h, prec)[0] - eval_u(block, x, y - h, prec)[0]) / (2 * h)
            scale = max(abs(gx), abs(gy), mp.mpf("1e-30"))
            assert abs(fx - gx) / scale < 1e-6
            assert abs(fy - gy) / scale < 1e-6


def test_gradient_never_vanishes_on_samples():
    block = make_block(1, 3)
    rng = np.random.default_rng(5)
    for px, py in rng.uniform(-1.5, 1.5, size=(100, 2)):
        (gx, _), (gy, _) = grad_u(block, float(px), float(py), prec=120)
        assert max(abs(gx), abs(gy)) > 0


def test_discrete_harmonicity():
    prec = 256
    rng = np.random.default_rng(13)
    for k, c in [(1, 2), (2, 3)]:
        block = make_block(k, c)
        scale = c1_norm_bound(block, 2.0**k, prec)
        with mp.workprec(prec):
            h = mp.mpf("1e-4")
            for px, py in rng.uniform(-(2.0**k), 2.0**k, size=(50, 2)):
                x = mp.mpf(float(px))
                y = mp.mpf(float(py))
                lap = (
                    eval_u(block, x + h, y, prec)[0]
                    + eval_u(block, x - h, y, prec)[0]
                    + eval_u(block, x, y + h, prec)[0]
                    + eval_u(block, x, y - h, prec)[0]
                    - 4 * eval_u(block, x, y, prec)[0]
                ) / h**2
                assert abs(lap) <= mp.mpf("1e-4") * scale


def test_odd_and_periodic_exactly():
    block = make_block(2, 3)
    prec = 150
    with mp.workprec(prec):
        for xq in (Fraction(3, 8), Fraction(5, 4), Fraction(7, 16)):
            for y in (-0.7, 0.3):
                v_pos, _ = eval_u(block, xq, y, prec)
                v_neg, _ = eval_u(block, -xq, y, prec)
                v_shift, _ = eval_u(block, xq + 2 ** (block.k + 1), y, prec)
                assert v_pos + v_neg == 0
                assert v_pos == v_shift


def test_overflow_flagged():
    from harmonic_zeros.blocks import EvalOverflowError

    block = make_block(1, 2)
    with pytest.raises(EvalOverflowError):
        eval_u(block, 0.5, 1e9, prec=53)


@pytest.mark.parametrize("k", [1, 2, 3, 4, 5])
def test_c1_bound_dominates_grid_samples(k):
    c = min(k + 1, 4)
    block = make_block(k, c)
    r = 2.0**k
    bound = float(c1_norm_bound(block, r, 120))
    n = 201
    xs_exact = [Fraction(-int(r)) + i * Fraction(2 * int(r), n - 1) for i in range(n)]
    ys = np.linspace(-r, r, n)
    vals = u_grid_values(block, xs_exact, ys)
    mask = (np.array([float(q) for q in xs_exact])[:, None] ** 2 + ys[None, :] ** 2) <= r * r
    assert np.max(np.abs(vals[mask])) <= bound
    # sampled gradient components stay below the bound as well
    h = 1e-6
    rng = np.random.default_rng(17)
    for px, py in rng.uniform(-r / math.sqrt(2), r / math.sqrt(2), size=(40, 2)):
        xq = Fraction(px).limit_denominator(1 << 40)
        gx = (u_point(block, xq + Fraction(h).limit_denominator(1 << 40), py)
              - u_point(block, xq - Fraction(h).limit_denominator(1 << 40), py)) / (2 * h)
        assert abs(gx) <= bound * (1 + 1e-3)


def u_point(block, xq, y):
    from harmonic_zeros.blocks import u_point_value

    return u_point_value(block, xq, float(y))


def test_c1_bound_monotone_and_zero_radius():
    block = make_block(2, 3)
    bounds = [c1_norm_bound(block, r, 100) for r in (0, 0.5, 1, 2, 4)]
    assert all(bounds[i] <= bounds[i + 1] for i in range(len(bounds) - 1))
    assert bounds[0] >= 0
    with pytest.raises(ValueError):
        c1_norm_bound(block, -1, 100)


def test_mu_bound_against_paper_chain_and_samples():
    prec = 120
    for k, c in [(1, 2), (2, 3), (3, 4)]:
        block = make_block(k, c)
        kappa = 2 * c - 1
        for r in (0.0, 1.0, 4.0):
            bound = mu_u_bound(block, r, prec)
            with mp.workprec(prec):
                chain = mp.mpf(2) ** (c - 1) * (2 * mp.exp(mp.pi * r / 2)) ** kappa
                assert bound <= chain
            theta = np.linspace(0, 2 * math.pi, 360, endpoint=False)
            xs = r * np.cos(theta)
            ys = r * np.sin(theta)
            scale = float(block.phase_scale())
            sampled = np.zeros_like(xs)
            for j, bq in block.coeffs.b.items():
                w = math.pi * j * scale
                sampled += float(bq) * np.sin(w * xs) * np.exp(w * ys)
            assert np.max(np.abs(sampled)) <= float(bound)
        assert mu_u_bound(block, 0, prec) >= float(block.coeffs.abs_sum()) * (1 - 1e-20)


def test_trace_tracks_vanishing_line():
    block = make_block(1, 2)
    polylines = trace_zero_set(block, (1.5, 2.5, -1.0, 1.0), 65)
    cell = 1.0 / 64
    line = [p for p in polylines if np.all(np.abs(p[:, 0] - 2.0) <= cell) and len(p) > 30]
    assert line, "expected a polyline tracking x = 2"


def test_trace_crosses_predicted_zero():
    block = make_block(2, 3)
    target = xi_points(block)[0]  # (2, ordinate near -0.4413)
    ty = float(target.ordinate(80))
    polylines = trace_zero_set(block, (1.6, 2.4, ty - 0.4, ty + 0.4), 81)
    best = min(
        float(np.min(np.hypot(p[:, 0] - 2.0, p[:, 1] - ty))) for p in polylines
    )
    assert best < 0.05


def test_trace_empty_region():
    block = make_block(1, 2)
    # for x in (0, 2/3) both series terms are negative: no zeros in this box
    polylines = trace_zero_set(block, (0.1, 0.5, -0.5, 0.0), 33)
    assert polylines == []


def test_trace_vertex_quality():
    block = make_block(1, 2)
    bbox = (0.5, 1.5, -0.6, 0.1)
    res = 51
    polylines = trace_zero_set(block, bbox, res)
    assert polylines
    dx = (bbox[1] - bbox[0]) / (res - 1)
    dy = (bbox[3] - bbox[2]) / (res - 1)
    diag = math.hypot(dx, dy)
    lip = float(c1_norm_bound(block, math.hypot(1.5, 0.6), 80)) * math.sqrt(2)
    for poly in polylines:
        for px, py in poly:
            val = u_point(block, Fraction(float(px)), float(py))
            assert abs(val) <= lip * diag * (1 + 1e-9) + 1e-12


def test_trace_rejects_degenerate_input():
    block = make_block(1, 2)
    with pytest.raises(ValueError):
        trace_zero_set(block, (1.0, 1.0, 0.0, 1.0), 33)
    with pytest.raises(ValueError):
        trace_zero_set(block, (0.0, 1.0, 0.0, 1.0), 1)


def test_coarse_resolution_still_sound():
    block = make_block(1, 2)
    polylines = trace_zero_set(block, (1.5, 2.5, -1.0, 1.0), 2)
    # one cell only; any emitted vertex still satisfies the interpolation bound
    for poly in polylines:
        for px, py in poly:
            assert 1.5 <= px <= 2.5 and -1.0 <= py <= 1.0
