"""Randomized quadratures for X-valued integrands and their error statistics.

Seeding scheme
--------------
Every random quantity comes from a Philox generator keyed by a
``numpy.random.SeedSequence``:

* a single algorithm call with seed ``s`` draws its points from
  ``SeedSequence(s)``;
* trial ``t`` of an error-moment run at sample size ``n`` uses the 64-bit seed
  ``trial_seed(s, n, t)`` taken from ``SeedSequence(s, spawn_key=(n, t))``, so
  each trial can be replayed on its own and trials may run in any order;
* bootstrap resampling uses ``SeedSequence(s, spawn_key=(BOOTSTRAP_KEY, n))``.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .functions import TestProblem, oracle_integral
from .interp import InterpolationOperator, build_interp
from .spaces import SpaceDescriptor, lq, norms

__all__ = [
    "Algorithm",
    "MCConfig",
    "QuadratureRealization",
    "ErrorMoment",
    "RateReport",
    "generator",
    "trial_seed",
    "draw_points",
    "grid_size",
    "standard_mc",
    "sep_mc",
    "run_algorithm",
    "as_quadrature",
    "error_moment",
    "rate_fit",
    "rate_experiment",
    "theoretical_exponent",
    "bootstrap_stderr",
    "mean_zero_ratio_diagnostic",
]

BOOTSTRAP_KEY = 0xB007
MEAN_ZERO_KEY = 0x1E2


class Algorithm(str, Enum):
    STD = "std"
    SEP = "sep"


def generator(seed: int, *key: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=key)))


def trial_seed(seed: int, n: int, trial: int) -> int:
    state = np.random.SeedSequence(seed, spawn_key=(n, trial)).generate_state(1, np.uint64)
    return int(state[0])


def draw_points(seed: int, n: int, d: int) -> np.ndarray:
    """The n uniform points xi_1..xi_n used by every algorithm run with ``seed``."""
    return generator(seed).random((n, d))


def grid_size(n: int, d: int) -> int:
    """k = ceil(n^(1/d)), computed in integers."""
    k = max(1, int(round(n ** (1.0 / d))))
    while k ** d < n:
        k += 1
    while k > 1 and (k - 1) ** d >= n:
        k -= 1
    return k


@dataclass(frozen=True)
class MCConfig:
    n: int
    r: int = 0
    seed: int = 0
    trials: int = 1
    moment_p: float = 2.0

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if self.r < 0:
            raise ValueError("r must be >= 0")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if not 1.0 <= self.moment_p <= 2.0:
            raise ValueError("moment_p must lie in [1, 2]")


def _check_n(n):
    if int(n) != n or n < 1:
        raise ValueError(f"n must be a positive integer, got {n!r}")


def standard_mc(f: TestProblem, n: int, seed: int) -> np.ndarray:
    """Plain Monte Carlo: mean of f over n seeded uniform points."""
    _check_n(n)
    return f.evaluate(draw_points(seed, n, f.d)).mean(axis=0)


class _SepState:
    """Interpolation operator plus the stored node samples f(u_j)."""

    def __init__(self, f: TestProblem, n: int, r: int):
        if r < 1:
            raise ValueError("separation of the main part needs r >= 1")
        if f.smoothness < r:
            raise ValueError(f"problem {f.name} is only certified for r <= {f.smoothness}")
        self.op = build_interp(r, grid_size(n, f.d), f.d)
        self.values = self.op.node_values(f)
        self.main = self.op.integrate(self.values)

    def estimate(self, f: TestProblem, xi: np.ndarray) -> np.ndarray:
        residual = f.evaluate(xi) - self.op.evaluate(self.values, xi)
        return self.main + residual.mean(axis=0)


def sep_mc(f: TestProblem, n: int, r: int, seed: int) -> np.ndarray:
    """Monte Carlo with separation of the main part.

    Integrates the composite interpolant P f (k = ceil(n^(1/d))) exactly and
    adds plain Monte Carlo on f - P f, drawing the same points as
    ``standard_mc`` with the same seed.  Uses M + n values of f.
    """
    _check_n(n)
    state = _SepState(f, n, r)
    return state.estimate(f, draw_points(seed, n, f.d))


def run_algorithm(algo, f: TestProblem, n: int, r: int, seed: int) -> np.ndarray:
    algo = Algorithm(algo)
    if algo is Algorithm.STD or r == 0:
        return standard_mc(f, n, seed)
    return sep_mc(f, n, r, seed)


@dataclass(frozen=True)
class QuadratureRealization:
    """One drawn quadrature sum_i a_i f(t_i)."""

    nodes: np.ndarray
    weights: np.ndarray
    cardinality: int

    def __post_init__(self):
        if len(self.nodes) != len(self.weights):
            raise ValueError("node and weight counts differ")

    def apply(self, f: TestProblem) -> np.ndarray:
        return self.weights @ f.evaluate(self.nodes)


def as_quadrature(f: TestProblem, n: int, r: int, seed: int,
                  op: InterpolationOperator | None = None) -> QuadratureRealization:
    """Explicit node/weight form of ``run_algorithm`` for the same seed.

    For r >= 1 the interpolation nodes u_j get b_j - (1/n) sum_i psi_j(xi_i)
    and the sample points xi_i get 1/n.
    """
    _check_n(n)
    xi = draw_points(seed, n, f.d)
    if r == 0:
        return QuadratureRealization(xi, np.full(n, 1.0 / n), n)
    if op is None:
        op = build_interp(r, grid_size(n, f.d), f.d)
    ids, w = op.basis(xi)
    correction = np.bincount(ids.ravel(), weights=w.ravel(), minlength=op.size) / n
    nodes = np.vstack([op.nodes, xi])
    weights = np.concatenate([op.weights - correction, np.full(n, 1.0 / n)])
    return QuadratureRealization(nodes, weights, op.size + n)


def bootstrap_stderr(samples: np.ndarray, statistic, resamples: int,
                     rng: np.random.Generator, chunk: int = 64) -> float:
    """Bootstrap standard error of ``statistic`` (applied along axis 1)."""
    samples = np.asarray(samples, dtype=np.float64)
    T = len(samples)
    if T < 2 or resamples < 2:
        return 0.0
    stats = np.empty(resamples)
    for lo in range(0, resamples, chunk):
        hi = min(lo + chunk, resamples)
        idx = rng.integers(0, T, size=(hi - lo, T))
        stats[lo:hi] = statistic(samples[idx])
    return float(stats.std(ddof=1))


@dataclass(frozen=True)
class ErrorMoment:
    """Empirical (E ||S f - A f||^p)^(1/p) with a bootstrap standard error.

    ``mean_norm`` is the first moment E ||S f - A f||, reported alongside.
    """

    p: float
    value: float
    stderr: float
    trials: int
    mean_norm: float = math.nan
    n: int = 0


def _moment(p):
    return lambda e: np.mean(e ** p, axis=-1) ** (1.0 / p)


def error_moment(algorithm, f: TestProblem, n: int, r: int, p: float, trials: int,
                 seed: int, reference=None, bootstrap: int = 1000,
                 workers: int = 1) -> ErrorMoment:
    """Estimate the p-th error moment of ``algorithm`` over ``trials`` runs.

    ``reference`` overrides ``f.exact_integral``; pass ``"oracle"`` to use
    the deterministic Gauss-Legendre value.
    """
    _check_n(n)
    if trials < 2:
        raise ValueError("trials must be >= 2")
    if not 1.0 <= p <= 2.0:
        raise ValueError("p must lie in [1, 2]")
    if isinstance(reference, str) and reference == "oracle":
        reference = oracle_integral(f)
    elif reference is None:
        reference = f.exact_integral
    if reference is None:
        raise ValueError(f"problem {f.name} has no exact integral; supply a reference")
    reference = np.asarray(reference, dtype=np.float64)

    algo = Algorithm(algorithm)
    state = _SepState(f, n, r) if (algo is Algorithm.SEP and r >= 1) else None

    def one(t):
        xi = draw_points(trial_seed(seed, n, t), n, f.d)
        if state is None:
            return f.evaluate(xi).mean(axis=0)
        return state.estimate(f, xi)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outputs = list(pool.map(one, range(trials)))
    else:
        outputs = [one(t) for t in range(trials)]
    errs = norms(f.space, reference[None, :] - np.array(outputs))
    stat = _moment(p)
    return ErrorMoment(
        p=float(p),
        value=float(stat(errs)),
        stderr=bootstrap_stderr(errs, stat, bootstrap, generator(seed, BOOTSTRAP_KEY, n)),
        trials=trials,
        mean_norm=float(errs.mean()),
        n=int(n),
    )


@dataclass(frozen=True)
class RateReport:
    """Least-squares fit log(value) = intercept + slope * log(n)."""

    points: list
    slope: float
    intercept: float
    r2: float
    excluded: list = field(default_factory=list)
    notes: list = field(default_factory=list)


def rate_fit(points) -> RateReport:
    """Fit a power law to ``(n, value)`` pairs; values may be ErrorMoments.

    Non-positive values are dropped and listed in ``notes``.
    """
    pts = [(int(n), v.value if isinstance(v, ErrorMoment) else float(v)) for n, v in points]
    ns = [n for n, _ in pts]
    if len(set(ns)) != len(ns):
        raise ValueError("sample sizes must be distinct")
    kept = [(n, v) for n, v in pts if v > 0 and math.isfinite(v)]
    excluded = [(n, v) for n, v in pts if not (v > 0 and math.isfinite(v))]
    notes = [f"excluded n={n}: non-positive or non-finite value {v!r}" for n, v in excluded]
    if len(kept) < 3:
        raise ValueError(f"need at least 3 positive points for a rate fit, got {len(kept)}")
    x = np.log([n for n, _ in kept])
    y = np.log([v for _, v in kept])
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (intercept + slope * x)
    ss_tot = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 if ss_tot == 0.0 else max(0.0, 1.0 - float((resid ** 2).sum()) / ss_tot)
    return RateReport(list(points), float(slope), float(intercept), r2, excluded, notes)


def theoretical_exponent(r: int, d: int, p: float) -> float:
    """-r/d - 1 + 1/p."""
    return -r / d - 1.0 + 1.0 / p


def rate_experiment(algorithm, f: TestProblem, n_grid, r: int, p: float, trials: int,
                    seed: int, **kwargs) -> tuple[list[ErrorMoment], RateReport]:
    moments = [error_moment(algorithm, f, n, r, p, trials, seed, **kwargs) for n in n_grid]
    return moments, rate_fit([(m.n, m) for m in moments])


def mean_zero_ratio_diagnostic(n_grid, p: float = 1.0, dim: int = 1024, trials: int = 200,
                               seed: int = 0) -> list[tuple[int, float, float]]:
    """Ratio (E||sum eta_i||^p)^(1/p) / (n^(1/p) max ||eta_i||_inf) in l_1^dim.

    eta_i = s_i e_{J_i} with independent uniform signs s_i and coordinates
    J_i: bounded by 1 and mean zero.  Returns ``(n, ratio, stderr)`` rows.
    """
    space: SpaceDescriptor = lq(1, dim)
    rows = []
    stat = _moment(p)
    for n in n_grid:
        rng = generator(seed, MEAN_ZERO_KEY, n)
        sums = np.empty((trials, dim))
        for t in range(trials):
            J = rng.integers(0, dim, size=n)
            s = rng.choice((-1.0, 1.0), size=n)
            sums[t] = np.bincount(J, weights=s, minlength=dim)
        vals = norms(space, sums)
        scale = n ** (1.0 / p)
        err = bootstrap_stderr(vals, stat, 200, generator(seed, BOOTSTRAP_KEY, MEAN_ZERO_KEY, n))
        rows.append((int(n), float(stat(vals)) / scale, err / scale))
    return rows
