"""Rademacher averages, equal-norm type ratios and the block partition demo.

Index sets are 0-based tuples throughout.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .montecarlo import bootstrap_stderr, generator
from .spaces import SpaceDescriptor, norms

__all__ = [
    "EXACT_CUTOFF",
    "SUBSET_CUTOFF",
    "RademacherEstimate",
    "FamilyRatio",
    "TypeConstantEstimate",
    "PartitionTrace",
    "default_gamma",
    "exact_sign_norms",
    "rademacher_moment",
    "make_family",
    "sigma_lower_bound",
    "subset_search",
    "greedy_partition",
    "validate_trace",
    "reconstruct_full_moment",
]

EXACT_CUTOFF = 20
SUBSET_CUTOFF = 14


def default_gamma(d: int) -> float:
    """8^d / (2 * 9^d)."""
    return 8.0 ** d / (2.0 * 9.0 ** d)


def _as_vectors(space: SpaceDescriptor, vectors) -> np.ndarray:
    X = np.asarray(vectors, dtype=np.float64)
    if X.ndim == 1 and space.dim == 1:
        X = X[:, None]
    if X.ndim != 2 or X.shape[1] != space.dim:
        raise ValueError(f"vectors must have shape (n, {space.dim}), got {X.shape}")
    if X.shape[0] < 1:
        raise ValueError("need at least one vector")
    if not np.all(np.isfinite(X)):
        raise ValueError("vectors have non-finite coordinates")
    return np.ascontiguousarray(X)


def exact_sign_norms(space: SpaceDescriptor, vectors) -> np.ndarray:
    """||sum eps_i x_i|| over the 2^(n-1) sign patterns with eps_1 = +1.

    Fixing one sign loses nothing since ||-s|| = ||s||.
    """
    X = _as_vectors(space, vectors)
    if X.shape[0] > EXACT_CUTOFF:
        raise ValueError(f"exact enumeration is limited to n <= {EXACT_CUTOFF}")
    return kernels.sign_norms(X, space.exponent)


def _pmean(values, p):
    return float(np.mean(values ** p) ** (1.0 / p))


@dataclass(frozen=True)
class RademacherEstimate:
    p: float
    value: float
    method: str
    samples: int = 0
    stderr: float = 0.0


def rademacher_moment(space: SpaceDescriptor, vectors, p: float = 1.0, mode: str = "auto",
                      seed: int = 0, samples: int = 100_000,
                      bootstrap: int = 200) -> RademacherEstimate:
    """(E ||sum_i eps_i x_i||^p)^(1/p).

    ``mode`` is ``"exact"`` (enumerate signs, n <= EXACT_CUTOFF),
    ``"sampled"`` (seeded sign draws) or ``"auto"`` (exact iff n <= cutoff).
    """
    if not 1.0 <= p <= 2.0:
        raise ValueError("p must lie in [1, 2]")
    X = _as_vectors(space, vectors)
    n = X.shape[0]
    if mode == "auto":
        mode = "exact" if n <= EXACT_CUTOFF else "sampled"
    if mode == "exact":
        return RademacherEstimate(p, _pmean(exact_sign_norms(space, X), p), "exact")
    if mode != "sampled":
        raise ValueError(f"unknown mode {mode!r}")
    rng = generator(seed)
    vals = np.empty(samples)
    chunk = max(1, (1 << 22) // max(n, 1))
    for lo in range(0, samples, chunk):
        hi = min(lo + chunk, samples)
        signs = rng.choice((-1.0, 1.0), size=(hi - lo, n))
        vals[lo:hi] = norms(space, signs @ X)
    stat = lambda v: np.mean(v ** p, axis=-1) ** (1.0 / p)  # noqa: E731
    err = bootstrap_stderr(vals, stat, bootstrap, generator(seed, 1))
    return RademacherEstimate(p, float(stat(vals)), "sampled", samples, err)


def make_family(space: SpaceDescriptor, name: str, n: int, seed: int = 0) -> np.ndarray:
    """Built-in vector families: ``basis``, ``constant``, ``random`` (unit vectors)."""
    if name == "basis":
        if n > space.dim:
            raise ValueError(f"basis family needs n <= dim = {space.dim}")
        return np.eye(space.dim)[:n]
    if name == "constant":
        x = np.ones(space.dim)
        x /= norms(space, x[None, :])[0]
        return np.tile(x, (n, 1))
    if name == "random":
        X = generator(seed, 7).standard_normal((n, space.dim))
        return X / norms(space, X)[:, None]
    raise ValueError(f"unknown family {name!r}; choose basis, constant or random")


@dataclass(frozen=True)
class FamilyRatio:
    family: str
    ratio: float
    method: str
    stderr: float


@dataclass(frozen=True)
class TypeConstantEstimate:
    """Lower estimate of sigma_{p,n}(X): the largest ratio over the families."""

    p: float
    n: int
    lower_bound: float
    witness_family: str
    ratios: list[FamilyRatio] = field(default_factory=list)


def sigma_lower_bound(space: SpaceDescriptor, p: float, n: int,
                      families=("basis", "constant", "random"), seed: int = 0,
                      mode: str = "auto", samples: int = 100_000) -> TypeConstantEstimate:
    """Max over families of moment / (n^(1/p) max ||x_i||).

    ``families`` holds built-in names or ``(label, array)`` pairs.
    """
    if not families:
        raise ValueError("empty family list")
    ratios = []
    for fam in families:
        if isinstance(fam, str):
            label, X = fam, make_family(space, fam, n, seed)
        else:
            label, X = fam
            X = _as_vectors(space, X)
            if X.shape[0] != n:
                raise ValueError(f"family {label!r} has {X.shape[0]} vectors, expected {n}")
        top = float(norms(space, X).max())
        if top == 0.0:
            raise ValueError(f"family {label!r} is all zero")
        est = rademacher_moment(space, X, p, mode=mode, seed=seed, samples=samples)
        denom = n ** (1.0 / p) * top
        ratios.append(FamilyRatio(label, est.value / denom, est.method, est.stderr / denom))
    best = max(ratios, key=lambda fr: fr.ratio)
    return TypeConstantEstimate(p, n, best.ratio, best.family, ratios)


def _required_size(gamma: float, n: int) -> int:
    # Guard against gamma * n landing a rounding error above an integer.
    return max(1, math.ceil(gamma * n - 1e-9))


def subset_search(space: SpaceDescriptor, vectors, gamma: float,
                  p: float = 1.0) -> tuple[tuple[int, ...], float]:
    """Subset I with |I| >= ceil(gamma n) minimizing E ||sum_{i in I} eps_i x_i||.

    Only subsets of the minimal admissible size are scanned: adding an
    independent symmetric term never lowers the first moment, so a minimizer
    of that size always exists.  ``p`` is accepted for signature symmetry
    with the partition routines; the search criterion is the first moment.
    """
    X = _as_vectors(space, vectors)
    n = X.shape[0]
    if n > SUBSET_CUTOFF:
        raise ValueError(f"subset search is limited to n <= {SUBSET_CUTOFF}")
    if not 0.0 < gamma < 1.0:
        raise ValueError("gamma must lie in (0, 1)")
    s = _required_size(gamma, n)
    best, best_val = None, math.inf
    for subset in itertools.combinations(range(n), s):
        val = float(np.mean(kernels.sign_norms(X[list(subset)], space.exponent)))
        if val < best_val:
            best, best_val = subset, val
    return best, best_val


def _sampled_subset(space, X, gamma, rng, candidates):
    n = X.shape[0]
    s = _required_size(gamma, n)
    best, best_val = None, math.inf
    for _ in range(candidates):
        subset = tuple(sorted(rng.choice(n, size=s, replace=False).tolist()))
        val = rademacher_moment(space, X[list(subset)], 1.0, seed=int(rng.integers(2**63))).value
        if val < best_val:
            best, best_val = subset, val
    return best, best_val


@dataclass(frozen=True)
class PartitionTrace:
    """Blocks I_1..I_l* of {0..n-1} with their first Rademacher moments.

    ``remaining[l]`` is the number of indices left before block l was cut.
    """

    n: int
    gamma: float
    blocks: list[tuple[int, ...]]
    per_block_moment: list[float]
    remaining: list[int]
    p: float = 1.0
    per_block_p_moment: list[float] = field(default_factory=list)

    @property
    def steps(self) -> int:
        return len(self.blocks)

    def step_bound(self) -> int:
        """ceil(log n / -log(1 - gamma)) + 1."""
        if self.n <= 1:
            return 1
        return math.ceil(math.log(self.n) / -math.log1p(-self.gamma)) + 1


def greedy_partition(space: SpaceDescriptor, vectors, gamma: float | None = None,
                     p: float = 1.0, d: int = 1, allow_sampled: bool = False,
                     seed: int = 0, candidates: int = 256) -> PartitionTrace:
    """Cut blocks off the remaining indices with ``subset_search`` until none are left.

    ``gamma`` defaults to ``default_gamma(d)``.  With ``allow_sampled`` a
    remainder larger than SUBSET_CUTOFF is handled by scoring ``candidates``
    random subsets of the required size instead of all of them.
    """
    X = _as_vectors(space, vectors)
    n = X.shape[0]
    if gamma is None:
        gamma = default_gamma(d)
    if not 0.0 < gamma < 1.0:
        raise ValueError("gamma must lie in (0, 1)")
    if n > SUBSET_CUTOFF and not allow_sampled:
        raise ValueError(f"n = {n} > {SUBSET_CUTOFF}; pass allow_sampled=True")
    rng = generator(seed, 0x9A27)
    left = list(range(n))
    blocks, moments, pmoments, remaining = [], [], [], []
    while left:
        sub = X[left]
        if len(left) <= SUBSET_CUTOFF:
            local, moment = subset_search(space, sub, gamma, p)
        else:
            local, moment = _sampled_subset(space, sub, gamma, rng, candidates)
        block = tuple(left[i] for i in local)
        remaining.append(len(left))
        blocks.append(block)
        moments.append(moment)
        pmoments.append(rademacher_moment(space, X[list(block)], p).value)
        chosen = set(block)
        left = [i for i in left if i not in chosen]
    return PartitionTrace(n, gamma, blocks, moments, remaining, p, pmoments)


def validate_trace(trace: PartitionTrace) -> list[str]:
    """Violated invariants of ``trace`` (empty when it is a valid partition)."""
    problems = []
    seen: set[int] = set()
    for l, block in enumerate(trace.blocks):
        if seen.intersection(block):
            problems.append(f"block {l} overlaps earlier blocks")
        seen.update(block)
    if seen != set(range(trace.n)):
        problems.append("blocks do not cover all indices")
    left = trace.n
    for l, block in enumerate(trace.blocks):
        if trace.remaining[l] != left:
            problems.append(f"block {l}: recorded remainder {trace.remaining[l]} != {left}")
        if len(block) < trace.gamma * left - 1e-9:
            problems.append(f"block {l}: size {len(block)} < gamma * {left}")
        left -= len(block)
        if left > (1.0 - trace.gamma) ** (l + 1) * trace.n + 1e-9:
            problems.append(f"block {l}: remainder {left} exceeds (1-gamma)^{l + 1} n")
    return problems


def reconstruct_full_moment(trace: PartitionTrace, space: SpaceDescriptor, vectors) -> float:
    """Sum of the per-block first moments.

    Raises ``ArithmeticError`` if the sum falls below the first moment of the
    full Rademacher sum, which the triangle inequality forbids.
    """
    X = _as_vectors(space, vectors)
    if X.shape[0] != trace.n or validate_trace(trace):
        raise ValueError("trace does not describe a partition of these vectors")
    total = float(sum(trace.per_block_moment))
    full = rademacher_moment(space, X, 1.0).value
    if total < full - 1e-12 * max(1.0, full):
        raise ArithmeticError(f"block sum {total} below full moment {full}")
    return total
