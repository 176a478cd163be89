"""Composite tensor-product Lagrange interpolation on k^d subcubes.

Each subcube carries (r+1)^d equispaced nodes including its faces; nodes on
shared faces are stored once, so the global node set is the uniform grid with
``r*k + 1`` points per axis, flattened row-major.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import kernels
from .functions import TestProblem
from .spaces import norms

__all__ = [
    "InterpolationOperator",
    "newton_cotes_weights",
    "build_interp",
    "apply_interp",
    "integrate_interpolant",
    "sup_error_estimate",
    "DEFAULT_NODE_BUDGET",
]

DEFAULT_NODE_BUDGET = 1 << 24


@functools.lru_cache(maxsize=None)
def newton_cotes_weights(r: int) -> tuple[Fraction, ...]:
    """Exact integrals over [0,1] of the Lagrange basis on nodes i/r, i=0..r."""
    if r < 1:
        raise ValueError("r must be >= 1")
    nodes = [Fraction(i, r) for i in range(r + 1)]
    out = []
    for i, xi in enumerate(nodes):
        # Expand prod_{j != i} (x - x_j)/(x_i - x_j) into monomial coefficients.
        coeffs = [Fraction(1)]
        denom = Fraction(1)
        for j, xj in enumerate(nodes):
            if j == i:
                continue
            coeffs = [Fraction(0)] + coeffs
            for p in range(len(coeffs) - 1):
                coeffs[p] -= xj * coeffs[p + 1]
            denom *= xi - xj
        out.append(sum(c / (p + 1) for p, c in enumerate(coeffs)) / denom)
    return tuple(out)


@dataclass(frozen=True)
class InterpolationOperator:
    """Realized interpolation operator.

    ``axis_nodes`` and ``axis_weights`` describe one axis; the global node
    u_j and its weight b_j = integral of psi_j are tensor products of these.
    """

    r: int
    k: int
    d: int
    axis_nodes: np.ndarray = field(repr=False)
    axis_weights: np.ndarray = field(repr=False)

    @property
    def points_per_axis(self) -> int:
        return self.r * self.k + 1

    @property
    def size(self) -> int:
        """Number M of distinct interpolation nodes."""
        return self.points_per_axis ** self.d

    @functools.cached_property
    def nodes(self) -> np.ndarray:
        mesh = np.meshgrid(*([self.axis_nodes] * self.d), indexing="ij")
        return np.stack([g.ravel() for g in mesh], axis=1)

    @functools.cached_property
    def weights(self) -> np.ndarray:
        return functools.reduce(np.multiply.outer, [self.axis_weights] * self.d).ravel()

    def subcube_nodes(self, cell) -> np.ndarray:
        """Global ids of the (r+1)^d nodes of the subcube with multi-index ``cell``."""
        cell = np.asarray(cell, dtype=np.int64)
        if cell.shape != (self.d,) or np.any(cell < 0) or np.any(cell >= self.k):
            raise ValueError(f"bad subcube index {cell!r}")
        local = np.meshgrid(*[cell[a] * self.r + np.arange(self.r + 1) for a in range(self.d)],
                            indexing="ij")
        return np.ravel_multi_index(tuple(g.ravel() for g in local),
                                    (self.points_per_axis,) * self.d)

    def basis(self, points) -> tuple[np.ndarray, np.ndarray]:
        """Nonzero basis functions at ``points``: ``(ids, values)``, each (N, (r+1)^d)."""
        pts = np.ascontiguousarray(np.atleast_2d(points), dtype=np.float64)
        if pts.shape[1] != self.d:
            raise ValueError(f"points must have {self.d} columns")
        return kernels.local_basis(pts, self.r, self.k)

    def node_values(self, f: TestProblem) -> np.ndarray:
        """f(u_j) for all nodes, shape (M, dim)."""
        if f.d != self.d:
            raise ValueError(f"problem has d={f.d}, operator has d={self.d}")
        return f.evaluate(self.nodes)

    def evaluate(self, values: np.ndarray, points) -> np.ndarray:
        """(P f)(t) at ``points`` given stored node values."""
        ids, w = self.basis(points)
        return np.einsum("nl,nlm->nm", w, values[ids])

    def integrate(self, values: np.ndarray) -> np.ndarray:
        return self.weights @ values


def build_interp(r: int, k: int, d: int, budget: int = DEFAULT_NODE_BUDGET) -> InterpolationOperator:
    if r < 1 or k < 1 or d < 1:
        raise ValueError(f"need r, k, d >= 1, got r={r}, k={k}, d={d}")
    if (r * k + 1) ** d > budget:
        raise MemoryError(f"{(r * k + 1) ** d} interpolation nodes exceed the budget of {budget}")
    G = r * k + 1
    nc = newton_cotes_weights(r)
    acc = [Fraction(0)] * G
    for cell in range(k):
        for i, w in enumerate(nc):
            acc[cell * r + i] += w / k
    nodes = np.array([Fraction(j, r * k) for j in range(G)], dtype=np.float64)
    weights = np.array([float(w) for w in acc])
    return InterpolationOperator(r, k, d, nodes, weights)


def apply_interp(op: InterpolationOperator, f: TestProblem, t) -> np.ndarray:
    """(P f)(t); a single point returns one element, a batch returns (N, dim)."""
    t = np.asarray(t, dtype=np.float64)
    out = op.evaluate(op.node_values(f), np.atleast_2d(t))
    return out[0] if t.ndim == 1 else out


def integrate_interpolant(op: InterpolationOperator, f: TestProblem) -> np.ndarray:
    """sum_j b_j f(u_j), the exact integral of P f."""
    return op.integrate(op.node_values(f))


def sup_error_estimate(op: InterpolationOperator, f: TestProblem, grid_per_axis: int = 257,
                       batch: int = 1 << 16) -> float:
    """max over a uniform grid of ||f(t) - (P f)(t)||."""
    if grid_per_axis < 2:
        raise ValueError("grid_per_axis must be >= 2")
    vals = op.node_values(f)
    g = np.linspace(0.0, 1.0, grid_per_axis)
    mesh = np.meshgrid(*([g] * op.d), indexing="ij")
    pts = np.stack([x.ravel() for x in mesh], axis=1)
    worst = 0.0
    for lo in range(0, len(pts), batch):
        chunk = pts[lo:lo + batch]
        diff = f.evaluate(chunk) - op.evaluate(vals, chunk)
        worst = max(worst, float(norms(f.space, diff).max()))
    return worst
