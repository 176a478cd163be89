"""Test integrands f: [0,1]^d -> X and the bump-based fooling family.

Evaluators are vectorized: they take points of shape ``(N, d)`` and return
values of shape ``(N, space.dim)``.
"""

from __future__ import annotations

import functools
import itertools
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .spaces import SpaceDescriptor, element, norms, scalar

__all__ = [
    "TestProblem",
    "FoolingFamily",
    "REGISTRY",
    "registry_problem",
    "parse_problem",
    "bump_eval",
    "bump_integral",
    "bump_derivative_sups",
    "make_fooling_family",
    "oracle_integral",
    "cr_norm_estimate",
]

SMOOTH = math.inf


@dataclass(frozen=True)
class TestProblem:
    """An integrand with metadata.

    ``smoothness`` is the largest r for which the problem is certified to be in
    C^r (``math.inf`` for C^infinity).  ``cr_norm_bound(r)`` returns an upper
    bound on the C^r(Q, X) norm.
    """

    __test__ = False  # not a pytest class

    name: str
    d: int
    space: SpaceDescriptor
    evaluator: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    smoothness: float = SMOOTH
    cr_norm_bound: Callable[[int], float] | None = field(default=None, repr=False)
    exact_integral: np.ndarray | None = None

    def evaluate(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[1] != self.d:
            raise ValueError(f"points must have shape (N, {self.d}), got {pts.shape}")
        vals = np.asarray(self.evaluator(pts), dtype=np.float64)
        if vals.ndim == 1 and self.space.dim == 1:
            vals = vals[:, None]
        if vals.shape != (pts.shape[0], self.space.dim):
            raise ValueError(f"evaluator returned shape {vals.shape}")
        if not np.all(np.isfinite(vals)):
            raise FloatingPointError(f"{self.name}: non-finite value at a sample point")
        return vals

    def __call__(self, t) -> np.ndarray:
        t = np.atleast_1d(np.asarray(t, dtype=np.float64))
        return self.evaluate(t[None, :])[0]

    def with_evaluator(self, evaluator) -> "TestProblem":
        """Copy with a different evaluator (used to wrap or count calls)."""
        return TestProblem(
            self.name, self.d, self.space, evaluator, self.smoothness,
            self.cr_norm_bound, self.exact_integral,
        )


# ---------------------------------------------------------------------------
# Deterministic oracle quadrature
# ---------------------------------------------------------------------------

@functools.lru_cache(maxsize=None)
def _composite_gauss(panels: int, order: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(order)
    x = (x + 1.0) / 2.0
    w = w / 2.0
    left = np.arange(panels) / panels
    nodes = (left[:, None] + x[None, :] / panels).ravel()
    weights = np.tile(w / panels, panels)
    return nodes, weights


def _tensor_rule(d, panels, order):
    x, w = _composite_gauss(panels, order)
    grids = np.meshgrid(*([x] * d), indexing="ij")
    pts = np.stack([g.ravel() for g in grids], axis=1)
    wts = functools.reduce(np.multiply.outer, [w] * d).ravel()
    return pts, wts


def oracle_integral(f: TestProblem, panels: int | None = None, order: int = 10,
                    batch: int = 1 << 16) -> np.ndarray:
    """Integral of ``f`` over [0,1]^d by tensor composite Gauss-Legendre."""
    if panels is None:
        panels = {1: 256, 2: 48, 3: 12}.get(f.d, 4)
    pts, wts = _tensor_rule(f.d, panels, order)
    acc = np.zeros(f.space.dim)
    for lo in range(0, len(wts), batch):
        acc += wts[lo:lo + batch] @ f.evaluate(pts[lo:lo + batch])
    return acc


# ---------------------------------------------------------------------------
# Registry
# ---------------------------------------------------------------------------

def _vec_bound(space, bounds):
    # Coordinatewise bounds give a norm bound because l_q norms are monotone.
    return float(norms(space, np.asarray(bounds, dtype=np.float64)[None, :])[0])


def _falling_max(e: int, r: int) -> float:
    """max_{j <= r} e (e-1) ... (e-j+1): bound on |D^j t^e| over [0,1]."""
    best, cur = 1.0, 1.0
    for j in range(1, r + 1):
        cur *= max(e - j + 1, 0)
        best = max(best, cur)
    return best


def _const(d, space, value=1.0):
    value = float(value)
    vec = np.full(space.dim, value)
    return TestProblem(
        f"const:value={value!r}", d, space,
        lambda t: np.broadcast_to(vec, (t.shape[0], space.dim)).copy(),
        SMOOTH, lambda r: _vec_bound(space, np.abs(vec)), vec.copy(),
    )


def _poly(d, space, deg=2):
    deg = int(deg)
    if deg < 0:
        raise ValueError("deg must be >= 0")
    m = space.dim
    # Coordinate c is prod_a t_a ** (1 + (c + a) mod deg); constant 1 for deg 0.
    exps = np.array([[0 if deg == 0 else 1 + (c + a) % deg for a in range(d)]
                     for c in range(m)], dtype=np.int64)

    def ev(t):
        return np.prod(t[:, None, :] ** exps[None, :, :], axis=2)

    def bound(r):
        return _vec_bound(space, [math.prod(_falling_max(int(e), r) for e in row)
                                  for row in exps])

    exact = np.prod(1.0 / (exps + 1.0), axis=1)
    return TestProblem(f"poly:deg={deg}", d, space, ev, SMOOTH, bound, exact)


def _expsum(d, space, seed=None):
    m = space.dim
    if seed is None:
        coef = np.ones(m)
        rates = np.tile((1.0 + np.arange(m) / m)[:, None], (1, d))
        label = "expsum"
    else:
        rng = np.random.default_rng(int(seed))
        coef = rng.uniform(0.5, 1.5, size=m)
        rates = rng.uniform(-1.5, 1.5, size=(m, d))
        label = f"expsum:seed={int(seed)}"

    def ev(t):
        return coef[None, :] * np.exp(t @ rates.T)

    def bound(r):
        grow = np.exp(np.clip(rates, 0.0, None).sum(axis=1))
        return _vec_bound(space, np.abs(coef) * grow
                          * np.maximum(1.0, np.abs(rates).max(axis=1)) ** r)

    with np.errstate(divide="ignore", invalid="ignore"):
        per_axis = np.where(rates == 0.0, 1.0, np.expm1(rates) / rates)
    exact = coef * np.prod(per_axis, axis=1)
    return TestProblem(label, d, space, ev, SMOOTH, bound, exact)


def _trig(d, space, freq=1.0, phase=0.0):
    freq = float(freq)
    phase = float(phase)
    if freq <= 0:
        raise ValueError("freq must be positive")
    omega = 2.0 * math.pi * freq
    phases = phase + 0.7 * np.arange(space.dim)

    def ev(t):
        return np.prod(np.sin(omega * t[:, None, :] + phases[None, :, None]), axis=2)

    per_axis = (np.cos(phases) - np.cos(omega + phases)) / omega
    exact = per_axis ** d
    return TestProblem(
        f"trig:freq={freq!r},phase={phase!r}", d, space, ev, SMOOTH,
        lambda r: _vec_bound(space, np.full(space.dim, max(1.0, omega) ** r)),
        exact,
    )


def _coordinate_mix(d, space):
    m = space.dim
    kinds = np.arange(m) % 3
    s = (np.arange(m) + 1.0) / m

    def ev(t):
        out = np.empty((t.shape[0], m))
        for j in range(m):
            if kinds[j] == 0:
                out[:, j] = np.exp(s[j] * t.sum(axis=1))
            elif kinds[j] == 1:
                out[:, j] = np.prod(np.cos((1.0 + s[j]) * t), axis=1)
            else:
                out[:, j] = np.prod(1.0 / (1.0 + (0.5 + s[j]) * t), axis=1)
        return out

    def bound(r):
        b = np.empty(m)
        for j in range(m):
            if kinds[j] == 0:
                b[j] = math.exp(s[j] * d) * max(1.0, s[j]) ** r
            elif kinds[j] == 1:
                b[j] = max(1.0, 1.0 + s[j]) ** r
            else:
                c = 0.5 + s[j]
                b[j] = max(math.factorial(i) * c ** i for i in range(r + 1)) ** d
        return _vec_bound(space, b)

    exact = np.empty(m)
    for j in range(m):
        if kinds[j] == 0:
            exact[j] = (math.expm1(s[j]) / s[j]) ** d
        elif kinds[j] == 1:
            w = 1.0 + s[j]
            exact[j] = (math.sin(w) / w) ** d
        else:
            c = 0.5 + s[j]
            exact[j] = (math.log1p(c) / c) ** d
    return TestProblem("coordinate-mix", d, space, ev, SMOOTH, bound, exact)


def _holder(d, space, s=1.1, base=3, terms=13):
    """1 + sum_j base^(-j s) prod_a cos(2 pi base^j t_a + phi_jc).

    Truncated lacunary series: over the resolvable scales it has Hoelder
    smoothness s exactly, so interpolation errors decay like k^(-s) instead
    of the faster rate a smooth function would show.
    """
    s, base, terms = float(s), int(base), int(terms)
    if s <= 0 or base < 2 or terms < 1:
        raise ValueError("need s > 0, base >= 2, terms >= 1")
    freqs = 2.0 * math.pi * float(base) ** np.arange(terms)
    amps = float(base) ** (-s * np.arange(terms))
    phases = 0.3 + 0.7 * np.arange(terms)[:, None] + np.arange(space.dim)[None, :]

    def ev(t):
        out = np.ones((t.shape[0], space.dim))
        for j in range(terms):
            arg = freqs[j] * t[:, None, :] + phases[j][None, :, None]
            out += amps[j] * np.prod(np.cos(arg), axis=2)
        return out

    def bound(r):
        return _vec_bound(space, np.full(space.dim, 1.0 + float(
            (amps * np.maximum(1.0, freqs) ** r).sum())))

    per_axis = (np.sin(freqs[:, None] + phases) - np.sin(phases)) / freqs[:, None]
    exact = 1.0 + (amps[:, None] * per_axis ** d).sum(axis=0)
    return TestProblem(f"holder:s={s!r},base={base},terms={terms}", d, space, ev,
                       math.ceil(s) - 1, bound, exact)


REGISTRY = {
    "const": _const,
    "poly": _poly,
    "expsum": _expsum,
    "trig": _trig,
    "coordinate-mix": _coordinate_mix,
    "holder": _holder,
}


def registry_problem(name: str, d: int, space: SpaceDescriptor | None = None,
                     **params) -> TestProblem:
    """Build a registered problem.

    ========================  ==================================================
    ``const:value=v``         every coordinate equal to v (default 1)
    ``poly:deg=k``            coordinate c is prod_a t_a^(1 + (c+a) mod k)
    ``expsum[:seed=s]``       coordinate j is c_j exp(w_j . t); unseeded gives
                              c_j = 1, w_j = (1 + j/m) on every axis
    ``trig:freq=w,phase=p``   coordinate j is prod_a sin(2 pi w t_a + p + 0.7 j)
    ``coordinate-mix``        exponential, cosine and rational coordinates
    ``holder:s=,base=,terms=`` 1 + lacunary cosine series of Hoelder order s,
                              certified C^r for r < s
    ========================  ==================================================
    """
    if space is None:
        space = scalar()
    if int(d) != d or d < 1:
        raise ValueError(f"d must be a positive integer, got {d!r}")
    try:
        factory = REGISTRY[name]
    except KeyError:
        raise ValueError(f"unknown problem {name!r}; choose from {sorted(REGISTRY)}") from None
    return factory(int(d), space, **params)


def parse_problem(text: str, d: int, space: SpaceDescriptor | None = None) -> TestProblem:
    """Parse ``name`` or ``name:key=value,key=value``."""
    name, _, rest = text.strip().partition(":")
    params = {}
    for item in filter(None, (p.strip() for p in rest.split(","))):
        key, eq, value = item.partition("=")
        if not eq:
            raise ValueError(f"bad problem parameter {item!r} in {text!r}")
        params[key.strip()] = value.strip()
    try:
        return registry_problem(name, d, space, **params)
    except TypeError as exc:
        raise ValueError(f"bad parameters for problem {name!r}: {exc}") from None


# ---------------------------------------------------------------------------
# Bump function
# ---------------------------------------------------------------------------

def _bump1(s):
    s = np.asarray(s, dtype=np.float64)
    out = np.zeros_like(s)
    inside = (s > 0.0) & (s < 1.0)
    si = s[inside]
    out[inside] = np.exp(-1.0 / (si * (1.0 - si)))
    return out


def bump_eval(t) -> np.ndarray | float:
    """Product bump prod_i g(t_i), g(s) = exp(-1/(s(1-s))) on (0,1), else 0.

    ``t`` may be a single point of shape ``(d,)`` (returns a float) or a batch
    of shape ``(N, d)``.
    """
    t = np.asarray(t, dtype=np.float64)
    if t.ndim <= 1:
        return float(np.prod(_bump1(np.atleast_1d(t))))
    return np.prod(_bump1(t), axis=1)


@functools.lru_cache(maxsize=None)
def _bump_integral_1d(panels: int, order: int = 16) -> float:
    x, w = _composite_gauss(panels, order)
    return float(w @ _bump1(x))


def bump_integral(d: int, panels: int = 256) -> float:
    """sigma = integral of the bump over [0,1]^d, equal to sigma_1 ** d."""
    if d < 1:
        raise ValueError("d must be >= 1")
    return _bump_integral_1d(panels) ** d


@functools.lru_cache(maxsize=None)
def bump_derivative_sups(r: int, grid: int = 1 << 12) -> tuple[float, ...]:
    """Grid estimates of sup |g^(j)| for j = 0..r by central differences.

    The grid has ``grid`` intervals on [0,1]; difference steps are widened for
    high orders to keep cancellation error below the truncation error.
    """
    x = np.linspace(0.0, 1.0, grid + 1)
    eps = np.finfo(np.float64).eps
    sups = []
    for j in range(r + 1):
        if j == 0:
            sups.append(float(_bump1(x).max()))
            continue
        h = max(1.0 / grid, eps ** (1.0 / (j + 2)))
        acc = np.zeros_like(x)
        for i in range(j + 1):
            acc += (-1) ** i * math.comb(j, i) * _bump1(x + (j / 2.0 - i) * h)
        sups.append(float(np.abs(acc).max() / h ** j))
    return tuple(sups)


def _bump_c0(r: int, d: int) -> float:
    """max over |alpha| <= r of sup |D^alpha psi|, using the product structure."""
    sups = bump_derivative_sups(r)
    best = 0.0
    for alpha in itertools.product(range(r + 1), repeat=d):
        if sum(alpha) <= r:
            best = max(best, math.prod(sups[a] for a in alpha))
    return best


# ---------------------------------------------------------------------------
# Fooling family
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FoolingFamily:
    """Scaled bumps f_i = x_i psi(m(t - t_i)) / (c0 m^r max_j ||x_j||).

    Members are indexed row-major over the subcube multi-index; ``corners[i]``
    is the lower corner t_i of subcube Q_i.
    """

    m: int
    d: int
    r: int
    space: SpaceDescriptor
    vectors: np.ndarray
    c0: float
    sigma: float
    scale: float
    corners: np.ndarray
    members: tuple[TestProblem, ...] = field(repr=False)

    @property
    def size(self) -> int:
        return self.m ** self.d

    def integrals(self) -> np.ndarray:
        """Closed-form S f_i = sigma m^(-r-d) x_i / (c0 max ||x_j||), stacked."""
        return self.scale * self.sigma * self.m ** (-self.d) * self.vectors

    def combination_values(self, alpha, points) -> np.ndarray:
        """Values of sum_i alpha_i f_i at ``points``."""
        alpha = np.asarray(alpha, dtype=np.float64)
        pts = np.asarray(points, dtype=np.float64)
        cell = np.clip(np.ceil(pts * self.m).astype(np.int64) - 1, 0, self.m - 1)
        # Only the subcube a point lies in can be nonzero (bumps vanish on faces).
        flat = np.ravel_multi_index(tuple(cell.T), (self.m,) * self.d)
        bump = bump_eval(self.m * (pts - self.corners[flat]))
        return (self.scale * alpha[flat] * bump)[:, None] * self.vectors[flat]

    def combination(self, alpha) -> TestProblem:
        alpha = np.asarray(alpha, dtype=np.float64).copy()
        return TestProblem(
            "fooling-combination", self.d, self.space,
            lambda t: self.combination_values(alpha, t), SMOOTH, lambda r: 1.0,
            alpha @ self.integrals(),
        )


def make_fooling_family(m: int, r: int, d: int, vectors, space: SpaceDescriptor) -> FoolingFamily:
    vecs = np.asarray(vectors, dtype=np.float64)
    if vecs.ndim == 1:
        vecs = vecs[:, None]
    if m < 1 or r < 0 or d < 1:
        raise ValueError("need m >= 1, r >= 0, d >= 1")
    if vecs.shape != (m ** d, space.dim):
        raise ValueError(f"expected {m ** d} vectors of dim {space.dim}, got shape {vecs.shape}")
    for v in vecs:
        element(space, v)
    xmax = float(norms(space, vecs).max())
    if xmax == 0.0:
        raise ValueError("all vectors are zero")
    c0 = _bump_c0(r, d)
    scale = 1.0 / (c0 * m ** r * xmax)
    corners = np.array(list(itertools.product(range(m), repeat=d)), dtype=np.float64) / m

    def member(i):
        xi, ti = vecs[i].copy(), corners[i].copy()

        def ev(t):
            return (scale * bump_eval(m * (t - ti)))[:, None] * xi[None, :]

        return TestProblem(f"fooling[{i}]", d, space, ev, SMOOTH, None,
                           scale * bump_integral(d) * m ** (-d) * xi)

    return FoolingFamily(m, d, r, space, vecs, c0, bump_integral(d), scale, corners,
                         tuple(member(i) for i in range(m ** d)))


# ---------------------------------------------------------------------------
# C^r norm estimate
# ---------------------------------------------------------------------------

def _stencil(j: int, h: float):
    offs = np.array([(j / 2.0 - i) * h for i in range(j + 1)])
    coef = np.array([(-1) ** i * math.comb(j, i) for i in range(j + 1)], dtype=np.float64)
    return offs, coef / h ** j


def cr_norm_estimate(f: TestProblem, r: int, grid_per_axis: int = 257,
                     h: float | None = None) -> float:
    """Grid/finite-difference estimate of max_{|alpha|<=r} sup_t ||D^alpha f(t)||."""
    g = np.linspace(0.0, 1.0, grid_per_axis)
    mesh = np.meshgrid(*([g] * f.d), indexing="ij")
    pts = np.stack([x.ravel() for x in mesh], axis=1)
    if h is None:
        h = min(1e-3, 0.25 / grid_per_axis)
    best = 0.0
    for alpha in itertools.product(range(r + 1), repeat=f.d):
        if sum(alpha) > r:
            continue
        stencils = [_stencil(a, h) for a in alpha]
        acc = np.zeros((pts.shape[0], f.space.dim))
        for combo in itertools.product(*[range(len(s[0])) for s in stencils]):
            shift = np.array([stencils[a][0][c] for a, c in enumerate(combo)])
            coef = math.prod(stencils[a][1][c] for a, c in enumerate(combo))
            acc += coef * f.evaluate(pts + shift)
        best = max(best, float(norms(f.space, acc).max()))
    return best
