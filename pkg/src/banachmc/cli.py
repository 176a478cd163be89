"""Command line driver: ``banachmc <subcommand> [options]``.

Every subcommand writes one data file (CSV or JSON lines) whose first line is
a comment naming the quantity it measures, and prints a one-line summary.
Options may also come from ``--config FILE`` holding ``key=value`` lines with
the same names as the flags; explicit flags win.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
import time
from datetime import datetime, timezone

import numpy as np

from . import __version__, kernels
from .functions import make_fooling_family, oracle_integral, parse_problem
from .interp import build_interp, sup_error_estimate
from .montecarlo import (
    as_quadrature,
    error_moment,
    mean_zero_ratio_diagnostic,
    rate_fit,
    run_algorithm,
    theoretical_exponent,
)
from .rademacher import (
    default_gamma,
    greedy_partition,
    rademacher_moment,
    sigma_lower_bound,
    validate_trace,
)
from .spaces import lq, norms, parse_space

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC = 0, 2, 3

RATES_FIELDS = ["algo", "space", "problem", "d", "r", "p", "n", "trials", "value", "stderr", "seed"]
TYPECONST_FIELDS = ["space", "p", "n", "family", "ratio", "method", "stderr"]

FORMULAS = {
    "integrate": "A^0 f = (1/n) sum f(xi_i);  A^r f = S(P_k f) + A^0 (f - P_k f), k = ceil(n^(1/d))",
    "rates": "(E||S f - A_n f||^p)^(1/p) <= c sigma_{p,n}(X) n^(-r/d-1+1/p) ||f||_{C^r}",
    "interp-check": "sup_{f in B_{C^r}} ||f - P_k f||_{C(Q,X)} <= c k^(-r)",
    "typeconst": "(E||sum eps_i x_i||^p)^(1/p) <= sigma_{p,n}(X) n^(1/p) max ||x_i||",
    "foolset": "f_i = x_i psi(m(t - t_i)) / (c0 m^r max||x_j||);  S f_i = sigma m^(-r-d) x_i / (c0 max||x_j||)",
    "partition-demo": "|I_l| >= gamma |K \\ U_{j<l} I_j|;  |K \\ U_{j<=l} I_j| <= (1-gamma)^l n",
    "lemma2": "(E||sum eta_i||^p)^(1/p) <= c sigma_{p,n}(X) n^(1/p) max ||eta_i||_inf",
}


class UsageError(ValueError):
    pass


def parse_grid(text: str) -> list[int]:
    """``a..bxq`` (geometric, ratio q), ``a,b,c`` or a single integer."""
    text = str(text).strip()
    try:
        if ".." in text:
            lo, _, rest = text.partition("..")
            hi, _, ratio = rest.partition("x")
            a, b, q = int(lo), int(hi), int(ratio or 2)
            if a < 1 or b < a or q < 2:
                raise ValueError
            out = []
            while a <= b:
                out.append(a)
                a *= q
            return out
        vals = [int(v) for v in text.split(",") if v.strip()]
        if not vals or min(vals) < 1:
            raise ValueError
        return vals
    except ValueError:
        raise UsageError(f"bad grid {text!r}; use a..bxq, a,b,c or n") from None


def _fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    if isinstance(x, np.ndarray):
        return ";".join(repr(float(v)) for v in x)
    return str(x)


class Output:
    """Collects rows and writes them atomically (temp file + rename)."""

    def __init__(self, args, subcommand: str, fields: list[str]):
        self.path = args.out
        self.fmt = args.format
        self.stamp = not args.no_timestamp
        self.subcommand = subcommand
        self.fields = fields
        self.rows: list[dict] = []

    def add(self, **row):
        self.rows.append(row)

    def render(self) -> str:
        header = f"banachmc {self.subcommand}: {FORMULAS[self.subcommand]}"
        stamp = datetime.now(timezone.utc).isoformat(timespec="seconds")
        buf = io.StringIO()
        if self.fmt == "jsonl":
            meta = {"#": header}
            if self.stamp:
                meta["generated"] = stamp
            buf.write(json.dumps(meta) + "\n")
            for row in self.rows:
                buf.write(json.dumps({k: _jsonable(row[k]) for k in self.fields}) + "\n")
            return buf.getvalue()
        buf.write(f"# {header}\n")
        if self.stamp:
            buf.write(f"# generated: {stamp}\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.fields)
        for row in self.rows:
            writer.writerow([_fmt(row[k]) for k in self.fields])
        return buf.getvalue()

    def write(self):
        text = self.render()
        if self.path in (None, "-"):
            sys.stdout.write(text)
            return
        directory = os.path.dirname(os.path.abspath(self.path))
        os.makedirs(directory, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=directory, prefix=".banachmc-", suffix=".tmp")
        try:
            with os.fdopen(fd, "w", newline="") as fh:
                fh.write(text)
            os.replace(tmp, self.path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise


def _jsonable(v):
    if isinstance(v, np.ndarray):
        return [float(x) for x in v]
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    return v


def _summary(args, text: str):
    stream = sys.stderr if args.out in (None, "-") else sys.stdout
    print(text, file=stream)


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def cmd_integrate(args) -> int:
    space = parse_space(args.space)
    f = parse_problem(args.problem, args.d, space)
    r = args.r if args.algo == "sep" else 0
    value = run_algorithm(args.algo, f, args.n, r, args.seed)
    exact = f.exact_integral if f.exact_integral is not None else oracle_integral(f)
    err = float(norms(space, (exact - value)[None, :])[0])
    out = Output(args, "integrate",
                 ["algo", "space", "problem", "d", "r", "n", "seed", "value", "exact", "error"])
    out.add(algo=args.algo, space=space.spelling(), problem=f.name, d=args.d, r=r, n=args.n,
            seed=args.seed, value=value, exact=exact, error=err)
    out.write()
    if args.emit_quadrature:
        q = as_quadrature(f, args.n, r, args.seed)
        qa = argparse.Namespace(out=args.emit_quadrature, format="csv",
                                no_timestamp=args.no_timestamp)
        qout = Output(qa, "integrate", [f"t{a + 1}" for a in range(args.d)] + ["weight"])
        for t, w in zip(q.nodes, q.weights):
            qout.add(weight=float(w), **{f"t{a + 1}": float(t[a]) for a in range(args.d)})
        qout.write()
    _summary(args, f"integrate {args.algo} {f.name} n={args.n}: value={_fmt(value)} "
                   f"error={err:.3e}")
    return EXIT_OK


def cmd_rates(args) -> int:
    space = parse_space(args.space)
    f = parse_problem(args.problem, args.d, space)
    r = args.r if args.algo == "sep" else 0
    grid = parse_grid(args.n)
    reference = None if f.exact_integral is not None else "oracle"
    out = Output(args, "rates", RATES_FIELDS)
    moments = []
    for n in grid:
        em = error_moment(args.algo, f, n, r, args.p, args.trials, args.seed,
                          reference=reference, workers=args.workers)
        moments.append(em)
        out.add(algo=args.algo, space=space.spelling(), problem=f.name, d=args.d, r=r,
                p=float(args.p), n=n, trials=args.trials, value=em.value, stderr=em.stderr,
                seed=args.seed)
    out.write()
    report = rate_fit([(m.n, m) for m in moments])
    first = rate_fit([(m.n, m.mean_norm) for m in moments])
    theory = theoretical_exponent(r, args.d, args.p)
    _summary(args, f"rates {args.algo} {f.name} d={args.d} r={r} p={args.p}: slope={report.slope:.4f} "
                   f"r2={report.r2:.4f} theory={theory:.4f} first-moment slope={first.slope:.4f}")
    return EXIT_OK


def cmd_interp_check(args) -> int:
    space = parse_space(args.space)
    f = parse_problem(args.problem, args.d, space)
    out = Output(args, "interp-check", ["problem", "space", "d", "r", "k", "nodes", "sup_error"])
    pts = []
    for k in parse_grid(args.k):
        op = build_interp(args.r, k, args.d)
        e = sup_error_estimate(op, f, args.grid)
        pts.append((k, e))
        out.add(problem=f.name, space=space.spelling(), d=args.d, r=args.r, k=k,
                nodes=op.size, sup_error=e)
    out.write()
    report = rate_fit(pts)
    _summary(args, f"interp-check {f.name} r={args.r} d={args.d}: slope={report.slope:.4f} "
                   f"theory={-args.r:.4f}")
    return EXIT_OK


def cmd_typeconst(args) -> int:
    space = parse_space(args.space)
    families = [s for s in args.family.split(",") if s]
    est = sigma_lower_bound(space, args.p, args.n, families, seed=args.seed, mode=args.mode,
                            samples=args.samples)
    out = Output(args, "typeconst", TYPECONST_FIELDS)
    for fr in est.ratios:
        out.add(space=space.spelling(), p=float(args.p), n=args.n, family=fr.family,
                ratio=fr.ratio, method=fr.method, stderr=fr.stderr)
    out.write()
    _summary(args, f"typeconst {space} p={args.p} n={args.n}: sigma >= {est.lower_bound:.6g} "
                   f"(witness {est.witness_family})")
    return EXIT_OK


def cmd_foolset(args) -> int:
    out = Output(args, "foolset",
                 ["m", "r", "d", "c0", "sigma", "sum_norm", "scaled", "cr_estimate"])
    scaled = []
    for m in parse_grid(args.m):
        size = m ** args.d
        space = lq(1, size)
        fam = make_fooling_family(m, args.r, args.d, np.eye(size), space)
        total = float(norms(space, fam.integrals().sum(axis=0)[None, :])[0])
        cr = math.nan
        if args.check_norm:
            from .functions import cr_norm_estimate
            alpha = np.random.default_rng(args.seed).uniform(-1, 1, size)
            cr = cr_norm_estimate(fam.combination(alpha), args.r, args.grid)
        scaled.append(total * m ** args.r)
        out.add(m=m, r=args.r, d=args.d, c0=fam.c0, sigma=fam.sigma, sum_norm=total,
                scaled=total * m ** args.r, cr_estimate=cr)
    out.write()
    spread = (max(scaled) - min(scaled)) / max(scaled)
    _summary(args, f"foolset r={args.r} d={args.d}: ||sum eps_i S f_i|| m^r in "
                   f"[{min(scaled):.6g}, {max(scaled):.6g}] (relative spread {spread:.2e})")
    return EXIT_OK


def cmd_partition_demo(args) -> int:
    space = parse_space(args.space)
    X = np.random.default_rng(args.seed).standard_normal((args.n, space.dim))
    gamma = args.gamma if args.gamma is not None else default_gamma(args.d)
    trace = greedy_partition(space, X, gamma, p=args.p, allow_sampled=args.allow_sampled,
                             seed=args.seed)
    problems = validate_trace(trace)
    out = Output(args, "partition-demo", ["block", "indices", "size", "remaining", "moment"])
    for l, (blk, mom) in enumerate(zip(trace.blocks, trace.per_block_moment)):
        out.add(block=l + 1, indices=" ".join(str(i + 1) for i in blk), size=len(blk),
                remaining=trace.remaining[l], moment=mom)
    out.write()
    full = rademacher_moment(space, X, 1.0, seed=args.seed).value
    total = sum(trace.per_block_moment)
    _summary(args, f"partition-demo n={args.n} gamma={gamma:.4f}: {trace.steps} blocks "
                   f"(bound {trace.step_bound()}), block sum {total:.6g} >= full {full:.6g}: "
                   f"{total >= full - 1e-12}, invariants {'ok' if not problems else problems}")
    if problems:
        return EXIT_NUMERIC
    return EXIT_OK


def cmd_mean_zero(args) -> int:
    rows = mean_zero_ratio_diagnostic(parse_grid(args.n), args.p, args.dim, args.trials, args.seed)
    out = Output(args, "lemma2", ["n", "p", "dim", "ratio", "stderr"])
    for n, ratio, err in rows:
        out.add(n=n, p=float(args.p), dim=args.dim, ratio=ratio, stderr=err)
    out.write()
    ratios = [r for _, r, _ in rows]
    _summary(args, f"lemma2 l_1^{args.dim} p={args.p}: ratio in [{min(ratios):.4f}, {max(ratios):.4f}]")
    return EXIT_OK


def fit_and_summarize(path: str) -> dict:
    """Re-fit the rate from a ``rates`` output file (CSV or JSON lines)."""
    with open(path) as fh:
        lines = [ln for ln in fh if ln.strip() and not ln.startswith("#")]
    rows = []
    if lines and lines[0].lstrip().startswith("{"):
        for ln in lines:
            obj = json.loads(ln)
            if "#" not in obj:
                rows.append(obj)
    elif lines:
        reader = csv.DictReader(lines)
        if reader.fieldnames != RATES_FIELDS:
            raise ValueError(f"schema mismatch: expected {RATES_FIELDS}, got {reader.fieldnames}")
        rows = list(reader)
    if not rows:
        raise ValueError(f"{path}: no data rows")
    for row in rows:
        if set(RATES_FIELDS) - set(row):
            raise ValueError(f"schema mismatch in {path}")
    report = rate_fit([(int(row["n"]), float(row["value"])) for row in rows])
    r, d, p = int(rows[0]["r"]), int(rows[0]["d"]), float(rows[0]["p"])
    return {
        "slope": report.slope,
        "intercept": report.intercept,
        "r2": report.r2,
        "theory": theoretical_exponent(r, d, p),
        "points": len(rows) - len(report.excluded),
        "notes": report.notes,
    }


def cmd_summarize(args) -> int:
    s = fit_and_summarize(args.path)
    notes = "; ".join(s["notes"])
    print(f"summarize {args.path}: slope={s['slope']:.4f} r2={s['r2']:.4f} theory={s['theory']:.4f} "
          f"points={s['points']}" + (f" ({notes})" if notes else ""))
    return EXIT_OK


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def _common(p):
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None, help="output path ('-' or omitted: stdout)")
    p.add_argument("--format", choices=["csv", "jsonl"], default="csv")
    p.add_argument("--no-timestamp", action="store_true",
                   help="omit the timestamp line so reruns are byte-identical")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="banachmc", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--config", help="flat key=value file with flag names")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("integrate", help="one run of standard or separated Monte Carlo")
    p.add_argument("--algo", choices=["std", "sep"], default="std")
    p.add_argument("--space", default="scalar")
    p.add_argument("--problem", default="expsum")
    p.add_argument("--d", type=int, default=1)
    p.add_argument("--r", type=int, default=1)
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--emit-quadrature", default=None, help="also write the nodes/weights form")
    _common(p)
    p.set_defaults(func=cmd_integrate)

    p = sub.add_parser("rates", help="error moments over an n-grid and the fitted slope")
    p.add_argument("--algo", choices=["std", "sep"], default="std")
    p.add_argument("--space", default="scalar")
    p.add_argument("--problem", default="expsum")
    p.add_argument("--d", type=int, default=1)
    p.add_argument("--r", type=int, default=1)
    p.add_argument("--p", type=float, default=2.0)
    p.add_argument("--n", default="16..16384x2")
    p.add_argument("--trials", type=int, default=200)
    p.add_argument("--workers", type=int, default=1)
    _common(p)
    p.set_defaults(func=cmd_rates)

    p = sub.add_parser("interp-check", help="sup error of the composite interpolant")
    p.add_argument("--space", default="scalar")
    p.add_argument("--problem", default="trig")
    p.add_argument("--d", type=int, default=1)
    p.add_argument("--r", type=int, default=1)
    p.add_argument("--k", default="2..64x2")
    p.add_argument("--grid", type=int, default=2049)
    _common(p)
    p.set_defaults(func=cmd_interp_check)

    p = sub.add_parser("typeconst", help="lower estimates of equal-norm type constants")
    p.add_argument("--space", default="lq:2:16")
    p.add_argument("--p", type=float, default=2.0)
    p.add_argument("--n", type=int, default=8)
    p.add_argument("--family", default="basis,constant,random")
    p.add_argument("--mode", choices=["auto", "exact", "sampled"], default="auto")
    p.add_argument("--samples", type=int, default=100_000)
    _common(p)
    p.set_defaults(func=cmd_typeconst)

    p = sub.add_parser("foolset", help="bump fooling family integrals across m")
    p.add_argument("--m", default="2,3,4")
    p.add_argument("--r", type=int, default=1)
    p.add_argument("--d", type=int, default=1)
    p.add_argument("--check-norm", action="store_true", help="estimate the C^r norm of a random combination")
    p.add_argument("--grid", type=int, default=1025)
    _common(p)
    p.set_defaults(func=cmd_foolset)

    p = sub.add_parser("partition-demo", help="greedy block partition of random vectors")
    p.add_argument("--space", default="lq:2:3")
    p.add_argument("--n", type=int, default=12)
    p.add_argument("--gamma", type=float, default=None)
    p.add_argument("--d", type=int, default=1)
    p.add_argument("--p", type=float, default=1.0)
    p.add_argument("--allow-sampled", action="store_true")
    _common(p)
    p.set_defaults(func=cmd_partition_demo)

    p = sub.add_parser("lemma2", help="bounded mean-zero sums in l_1 (monitored ratio)")
    p.add_argument("--n", default="4..1024x2")
    p.add_argument("--p", type=float, default=1.0)
    p.add_argument("--dim", type=int, default=1024)
    p.add_argument("--trials", type=int, default=200)
    _common(p)
    p.set_defaults(func=cmd_mean_zero)

    p = sub.add_parser("summarize", help="re-fit the slope of a rates output file")
    p.add_argument("path")
    p.set_defaults(func=cmd_summarize)
    return parser


_BOOL_FLAGS = {"no-timestamp", "check-norm", "allow-sampled"}


def _config_args(path: str) -> tuple[str | None, list[str]]:
    sub, extra = None, []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, eq, value = line.partition("=")
            if not eq:
                raise UsageError(f"{path}:{lineno}: expected key=value")
            key, value = key.strip().replace("_", "-"), value.strip()
            if key == "subcommand":
                sub = value
            elif key in _BOOL_FLAGS:
                if value.lower() in ("1", "true", "yes", "on"):
                    extra.append(f"--{key}")
            else:
                extra += [f"--{key}", value]
    return sub, extra


def _expand_config(argv: list[str]) -> list[str]:
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, rest = pre.parse_known_args(argv)
    if not known.config:
        return argv
    sub, extra = _config_args(known.config)
    names = set(build_parser()._subparsers._group_actions[0].choices)
    if rest and rest[0] in names:
        sub, rest = rest[0], rest[1:]
    if sub is None:
        raise UsageError("no subcommand given on the command line or in the config file")
    # Config values first so explicit flags override them.
    return [sub] + extra + rest


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        argv = _expand_config(argv)
    except (UsageError, OSError) as exc:
        parser.print_usage(sys.stderr)
        print(f"banachmc: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    t0 = time.perf_counter()
    try:
        code = args.func(args)
    except (FloatingPointError, ArithmeticError, MemoryError, np.linalg.LinAlgError) as exc:
        print(f"banachmc {args.subcommand}: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ValueError, OSError) as exc:
        parser.print_usage(sys.stderr)
        print(f"banachmc {args.subcommand}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if os.environ.get("BANACHMC_TIMING"):
        print(f"[{args.subcommand} {time.perf_counter() - t0:.2f}s, {kernels.BACKEND} kernels]",
              file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
