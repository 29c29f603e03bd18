"""Command-line front end.

Subcommands build constructions from a config file, run the certified
zero census, trace zero sets, sweep coarse counts and audit invariants.
Delimited outputs (CSV/JSON) carry the construction hash in a header
line; report paths also render matplotlib figures next to the delimited
output unless --no-figures is given.

Exit codes: 0 all checks pass, 1 a check failed (or a build collapsed at
the working precision), 2 usage or config errors.
"""

from __future__ import annotations

import argparse
import configparser
import json
import math
import sys
from dataclasses import dataclass
from pathlib import Path

import mpmath as mp
import numpy as np

from . import __version__
from .assembly import (
    Construction,
    PrecisionError,
    audit_construction,
    build_construction,
    condition1_product,
    construction_from_json,
    construction_to_json,
    tail_bound,
)
from .blocks import trace_zero_set_values, u_grid_values
from .certify import check_mu_bound, count_zeros_ball, verify_restriction
from .coarse import coarse_sweep, rasterize_h, write_mask_pgm

USAGE_ERROR = 2
CHECK_FAILURE = 1


@dataclass(frozen=True)
class RunConfig:
    """Construction parameters parsed from the config file.

    Numeric fields stay as decimal strings until the build converts them
    at the target precision.
    """

    n: tuple[int, ...]
    epsilon: str
    depth: int
    precision: int

    def validate(self) -> None:
        if not self.n or any(v < 1 for v in self.n):
            raise ValueError("n must be a non-empty sequence of positive integers")
        if not 1 <= self.depth <= len(self.n):
            raise ValueError("depth must satisfy 1 <= depth <= len(n)")
        if self.precision < 53:
            raise ValueError("precision must be >= 53 bits")
        try:
            positive = mp.mpf(self.epsilon) > 0
        except ValueError as exc:
            raise ValueError(f"epsilon is not a decimal number: {self.epsilon!r}") from exc
        if not positive:
            raise ValueError("epsilon must be > 0")


def load_config(path: str | Path) -> RunConfig:
    parser = configparser.ConfigParser()
    read = parser.read(path)
    if not read:
        raise ValueError(f"config file not found: {path}")
    if "construction" not in parser:
        raise ValueError("config needs a [construction] section")
    sec = parser["construction"]
    try:
        n = tuple(int(tok) for tok in sec["n"].replace(",", " ").split())
        cfg = RunConfig(
            n=n,
            epsilon=sec["epsilon"].strip(),
            depth=sec.getint("depth", len(n)),
            precision=sec.getint("precision", 256),
        )
    except (KeyError, ValueError) as exc:
        raise ValueError(f"bad config: {exc}") from exc
    cfg.validate()
    return cfg


def _load_construction(path: str | Path) -> Construction:
    try:
        with open(path) as fh:
            doc = json.load(fh)
        return construction_from_json(doc)
    except (OSError, json.JSONDecodeError, KeyError, ValueError) as exc:
        raise ValueError(f"cannot load construction {path}: {exc}") from exc


def _hash_of(path: str | Path) -> str:
    with open(path) as fh:
        return json.load(fh).get("hash", "")


def _figures_enabled(args) -> bool:
    return not args.no_figures


def _figure_path(out: str | Path, suffix: str = "") -> Path:
    out = Path(out)
    name = out.stem + (f"_{suffix}" if suffix else "") + ".png"
    return out.with_name(name)


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


# ---------------------------------------------------------------------------
# build
# ---------------------------------------------------------------------------


def cmd_build(args) -> int:
    cfg = load_config(args.config)
    precision = args.precision or cfg.precision
    depth = args.depth or cfg.depth
    cfg = RunConfig(n=cfg.n, epsilon=cfg.epsilon, depth=depth, precision=precision)
    cfg.validate()
    try:
        constr = build_construction(cfg.n, cfg.epsilon, cfg.depth, cfg.precision)
    except PrecisionError as exc:
        print(f"build failed: {exc}", file=sys.stderr)
        return CHECK_FAILURE
    doc = construction_to_json(constr)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")
    audit_path = out.with_suffix(".audit.txt")
    with open(audit_path, "w") as fh:
        fh.write(_audit_text(constr, doc["hash"]))
    print(f"wrote {out} and {audit_path} (hash {doc['hash']})")
    return 0


def _audit_text(constr: Construction, digest: str) -> str:
    lines = [
        f"# construction={digest}",
        f"depth N = {constr.depth}, precision = {constr.precision} bits, "
        f"epsilon = {mp.nstr(constr.epsilon, 10)}",
        f"requested counts n = {list(constr.n)}",
        "",
    ]
    for lv in constr.levels:
        lines.append(f"level k={lv.k}  (c={lv.c}, zero count n_k={lv.n})")
        lines.append(f"  growth cap A_k   = {mp.nstr(lv.cap_A, 12)}")
        lines.append(f"  amplitude a_k    = {mp.nstr(lv.amplitude, 12)}"
                     + ("  [cap-bound]" if lv.amplitude == lv.cap_A else "  [margin-bound]"))
        lines.append(f"  margin m_k       = {mp.nstr(lv.margin, 12)}")
        if lv.k >= 2:
            prod = condition1_product(constr, lv.k)
            prior = min(l.margin for l in constr.levels[: lv.k - 1])
            lines.append(f"  a_k*2^k*C1-norm  = {mp.nstr(prod, 12)} <= "
                         f"min earlier margins = {mp.nstr(prior, 12)}")
        tb = tail_bound(constr, lv.k)
        lines.append(f"  tail bound       = {mp.nstr(tb.value, 12)} < m_k")
        lines.append("")
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# count
# ---------------------------------------------------------------------------


def cmd_count(args) -> int:
    constr = _load_construction(args.construction)
    digest = _hash_of(args.construction)
    report = count_zeros_ball(constr, args.r)
    doc = {"construction_hash": digest, **report.as_dict()}
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")
    print(f"r={args.r}: certified {report.total} isolated zeros "
          f"(target {report.target}); wrote {out}")
    if _figures_enabled(args):
        _render_count_figure(report, args.r, _figure_path(out))
    return 0


def _render_count_figure(report, r, path) -> None:
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6, 6))
    theta = np.linspace(0, 2 * math.pi, 361)
    ax.plot(r * np.cos(theta), r * np.sin(theta), "k-", lw=1)
    for x in report.degenerate_lines:
        span = math.sqrt(max(r * r - x * x, 0))
        ax.plot([x, x], [-span, span], "r--", lw=0.8, alpha=0.6)
    xs = [c.line_x for c in report.certificates]
    ys = [float(c.refined_root) for c in report.certificates]
    ax.plot(xs, ys, "bo", ms=4)
    ax.set_aspect("equal")
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    ax.set_title(f"certified zeros in B_{r}: {report.total} (target {report.target})")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


# ---------------------------------------------------------------------------
# trace
# ---------------------------------------------------------------------------


def _parse_bbox(text: str):
    try:
        parts = [float(tok) for tok in text.split(",")]
        x0, x1, y0, y1 = parts
    except ValueError as exc:
        raise ValueError(f"bbox must be x0,x1,y0,y1: {text!r}") from exc
    if not (x1 > x0 and y1 > y0):
        raise ValueError("bbox must have positive extent")
    return x0, x1, y0, y1


def cmd_trace(args) -> int:
    constr = _load_construction(args.construction)
    digest = _hash_of(args.construction)
    bbox = _parse_bbox(args.bbox)
    n = args.resolution
    if n < 2:
        raise ValueError("resolution must be >= 2")
    from fractions import Fraction

    x0, x1, y0, y1 = bbox
    xq0, xq1 = Fraction(x0), Fraction(x1)
    step = (xq1 - xq0) / (n - 1)
    xs_exact = [xq0 + i * step for i in range(n)]
    xs = np.array([float(q) for q in xs_exact])
    ys = np.linspace(y0, y1, n)
    if args.level:
        lv = constr.level(args.level)
        vals = u_grid_values(lv.block, xs_exact, ys)
        subject = f"u_{args.level}"
    else:
        vals = np.zeros((n, n))
        for lv in constr.levels:
            vals += float(lv.amplitude) * u_grid_values(lv.block, xs_exact, ys)
        subject = "g"
    polylines = trace_zero_set_values(xs, ys, vals)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w") as fh:
        fh.write(f"# construction={digest} subject={subject} "
                 f"bbox={args.bbox} resolution={n}\n")
        fh.write("x,y\n")
        for line in polylines:
            for px, py in line:
                fh.write(f"{float(px)!r},{float(py)!r}\n")
            fh.write("\n")
    print(f"traced {len(polylines)} polylines of {{{subject} = 0}}; wrote {out}")
    if _figures_enabled(args):
        _render_trace_figure(polylines, bbox, subject, _figure_path(out))
    return 0


def _render_trace_figure(polylines, bbox, subject, path) -> None:
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(7, 5))
    for line in polylines:
        ax.plot(line[:, 0], line[:, 1], "b-", lw=1)
    ax.set_xlim(bbox[0], bbox[1])
    ax.set_ylim(bbox[2], bbox[3])
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    ax.set_title(f"zero set of {subject}")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


# ---------------------------------------------------------------------------
# coarse
# ---------------------------------------------------------------------------


def _parse_deltas(text: str) -> list[float]:
    if ":" in text:
        lo, hi, count = text.split(":")
        lo, hi, count = float(lo), float(hi), int(count)
        if lo <= 0 or hi <= lo or count < 2:
            raise ValueError(f"bad delta sweep spec: {text!r}")
        return list(np.geomspace(lo, hi, count))
    vals = sorted(float(tok) for tok in text.split(","))
    if not vals or vals[0] <= 0:
        raise ValueError(f"bad delta list: {text!r}")
    return vals


def cmd_coarse(args) -> int:
    constr = _load_construction(args.construction)
    digest = _hash_of(args.construction)
    deltas = _parse_deltas(args.deltas)
    report = count_zeros_ball(constr, args.r)
    sweep = coarse_sweep(constr, args.r, deltas, args.resolution,
                         certificates=report.certificates)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w") as fh:
        fh.write(f"# construction={digest} r={args.r} resolution={args.resolution} "
                 f"certified={report.total} fitted_constant={sweep.fitted_constant!r}\n")
        fh.write("delta,count,log_bound\n")
        for row in sweep.rows():
            fh.write(f"{row['delta']!r},{row['count']},{row['log_bound']!r}\n")
    print(f"coarse sweep at r={args.r}: counts {list(sweep.counts)} "
          f"for deltas {list(sweep.deltas)}; wrote {out}")
    if args.pgm:
        pgm_dir = Path(args.pgm)
        pgm_dir.mkdir(parents=True, exist_ok=True)
        raster = rasterize_h(constr, args.r, args.resolution)
        for d in sweep.deltas:
            name = pgm_dir / f"mask_{d:.3e}.pgm"
            write_mask_pgm(name, raster, d, note=f"construction={digest} delta={d}")
    if _figures_enabled(args):
        _render_coarse_figure(sweep, report.total, _figure_path(out))
    return 0


def _render_coarse_figure(sweep, certified, path) -> None:
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(7, 5))
    ax.semilogx(sweep.deltas, sweep.counts, "bo-", label="coarse zero count")
    ax.axhline(certified, color="k", ls="--", lw=1,
               label=f"certified zeros ({certified})")
    ax.set_xlabel("delta")
    ax.set_ylabel("components containing zeros")
    ax.set_title(f"coarse count collapse, r={sweep.r}, resolution={sweep.resolution}")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


# ---------------------------------------------------------------------------
# check
# ---------------------------------------------------------------------------


def cmd_check(args) -> int:
    constr = _load_construction(args.construction)
    digest = _hash_of(args.construction)
    lines = [f"# construction={digest}"]
    failures = 0

    problems = audit_construction(constr)
    ok = not problems
    lines.append(f"[{'PASS' if ok else 'FAIL'}] stored-value invariants "
                 f"(amplitude caps, margins, condition-1 products, tails)")
    for p in problems:
        lines.append(f"    violation: {p}")
    failures += 0 if ok else 1

    top = float(2 ** constr.depth)
    r_values = [i * top / 49 for i in range(50)]
    mu = check_mu_bound(constr, r_values)
    lines.append(f"[{'PASS' if mu['pass'] else 'FAIL'}] certified modulus budget "
                 f"<= e^(r^(1+eps)) at {len(r_values)} radii in [0, {top:g}]")
    failures += 0 if mu["pass"] else 1

    restrict = verify_restriction(constr, sample_count=100, seed=args.seed)
    lines.append(f"[{'PASS' if restrict['pass_restriction'] else 'FAIL'}] "
                 f"complex extension restricts to the map "
                 f"(max deviation {restrict['max_deviation']})")
    failures += 0 if restrict["pass_restriction"] else 1
    lines.append(f"[{'PASS' if restrict['pass_zero_transfer'] else 'FAIL'}] "
                 f"certified zeros transfer to the extension with nonsingular "
                 f"complex Jacobian")
    failures += 0 if restrict["pass_zero_transfer"] else 1

    text = "\n".join(lines) + "\n"
    if args.out:
        out = Path(args.out)
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(text)
    sys.stdout.write(text)
    if failures:
        print(f"{failures} check(s) failed", file=sys.stderr)
        return CHECK_FAILURE
    return 0


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="harmonic-zeros",
        description="build and certify harmonic maps with prescribed zero counts",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build", help="run the inductive construction from a config")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True, help="construction JSON output path")
    p.add_argument("--precision", type=int, default=0, help="override config precision")
    p.add_argument("--depth", type=int, default=0, help="override config depth")
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("count", help="certified zero census of a ball")
    p.add_argument("--construction", required=True)
    p.add_argument("--r", type=float, required=True)
    p.add_argument("--out", required=True, help="report JSON output path")
    p.add_argument("--no-figures", action="store_true")
    p.set_defaults(func=cmd_count)

    p = sub.add_parser("trace", help="zero-set polylines of g or one block")
    p.add_argument("--construction", required=True)
    p.add_argument("--level", type=int, default=0, help="trace this block instead of g")
    p.add_argument("--bbox", required=True, help="x0,x1,y0,y1")
    p.add_argument("--resolution", type=int, default=256)
    p.add_argument("--out", required=True, help="polyline CSV output path")
    p.add_argument("--no-figures", action="store_true")
    p.set_defaults(func=cmd_trace)

    p = sub.add_parser("coarse", help="coarse zero-count sweep over delta")
    p.add_argument("--construction", required=True)
    p.add_argument("--r", type=float, required=True)
    p.add_argument("--deltas", default="1e-12:1e-1:12",
                   help="lo:hi:count (log-spaced) or comma list")
    p.add_argument("--resolution", type=int, default=512)
    p.add_argument("--out", required=True, help="sweep CSV output path")
    p.add_argument("--pgm", default="", help="directory for mask PGM dumps")
    p.add_argument("--no-figures", action="store_true")
    p.set_defaults(func=cmd_coarse)

    p = sub.add_parser("check", help="invariant audit; exit 1 on any failure")
    p.add_argument("--construction", required=True)
    p.add_argument("--out", default="", help="optional text report path")
    p.add_argument("--seed", type=int, default=1)
    p.set_defaults(func=cmd_check)

    return parser


def main(argv=None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_ERROR
    except PrecisionError as exc:
        print(f"precision failure: {exc}", file=sys.stderr)
        return CHECK_FAILURE


if __name__ == "__main__":
    sys.exit(main())
