"""Harmonic maps of the plane with prescribed certified zero counts.

The package builds maps h(x, y) = (g(x, y), sin(pi x) e^(pi y)) where g
is a finite weighted sum of sine-exponential building blocks, chosen so
that h carries a prescribed number of certified isolated zeros inside
each dyadic ball while the maximal modulus stays below e^(r^(1+eps)).
"""

from .exactpoly import (
    BlockCoefficients,
    DegreeError,
    ExactRoot,
    RationalPolynomial,
    build_pc,
    eval_poly,
    extract_b,
    roots_pc,
)
from .blocks import (
    Block,
    DyadicRational,
    XiPoint,
    c1_norm_bound,
    cospi_exact,
    eval_u,
    grad_u,
    make_block,
    mu_u_bound,
    sinpi_dyadic,
    trace_zero_set,
    xi_points,
)
from .assembly import (
    Construction,
    Level,
    PrecisionError,
    TailBound,
    audit_construction,
    build_construction,
    choose_amplitude,
    choose_margin,
    compute_cap_A,
    condition1_product,
    construction_from_json,
    construction_hash,
    construction_to_json,
    eval_f,
    eval_g,
    eval_h,
    grad_g,
    growth_penalty_minimizer,
    lift_dim,
    tail_bound,
    tail_on_ball,
)
from .certify import (
    CountReport,
    ZeroCertificate,
    cauchy_riemann_residual,
    check_mu_bound,
    count_zeros_ball,
    count_zeros_on_line,
    jacobian_h,
    mu_f_growth_fit,
    verify_restriction,
)
from .coarse import (
    CoarseComponent,
    CoarseSweep,
    coarse_sweep,
    coarse_zero_count,
    rasterize_h,
    resolution_stability,
    sublevel_components,
)

__version__ = "0.1.0"
