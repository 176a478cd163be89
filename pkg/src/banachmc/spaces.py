"""Finite-dimensional real Banach spaces: the scalar field and l_q^m.

Elements are plain 1-D float64 numpy arrays of length ``space.dim``.  Batches
of elements are 2-D arrays of shape ``(N, dim)``; every norm routine here
accepts either.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

__all__ = [
    "SpaceKind",
    "SpaceDescriptor",
    "scalar",
    "lq",
    "parse_space",
    "element",
    "norm",
    "norms",
    "axpy",
    "basis_vector",
    "zero",
]

INF = math.inf


class SpaceKind(str, Enum):
    SCALAR = "scalar"
    LQ = "lq"


@dataclass(frozen=True)
class SpaceDescriptor:
    """A concrete Banach space X.

    Attributes
    ----------
    kind : SpaceKind
        ``SCALAR`` for the real line, ``LQ`` for l_q^m.
    q : float or None
        Exponent in ``[1, inf]``; ``math.inf`` is the max-norm.  ``None`` for
        the scalar field, where every exponent gives ``|x|``.
    dim : int
        Number of coordinates m (1 for the scalar field).
    """

    kind: SpaceKind
    q: float | None = None
    dim: int = 1

    def __post_init__(self):
        if self.kind is SpaceKind.SCALAR:
            if self.dim != 1:
                raise ValueError("the scalar field has dim 1")
            object.__setattr__(self, "q", None)
            return
        if self.q is None or not (self.q >= 1.0):
            raise ValueError(f"l_q needs q in [1, inf], got {self.q!r}")
        if int(self.dim) != self.dim or self.dim < 1:
            raise ValueError(f"dim must be a positive integer, got {self.dim!r}")
        object.__setattr__(self, "q", float(self.q))
        object.__setattr__(self, "dim", int(self.dim))

    @property
    def is_scalar(self) -> bool:
        return self.kind is SpaceKind.SCALAR

    @property
    def q_is_inf(self) -> bool:
        return self.q is not None and math.isinf(self.q)

    @property
    def exponent(self) -> float:
        """Exponent handed to the norm kernels (any value works for scalars)."""
        return 1.0 if self.q is None else self.q

    def spelling(self) -> str:
        if self.is_scalar:
            return "scalar"
        qs = "inf" if self.q_is_inf else _fmt_q(self.q)
        return f"lq:{qs}:{self.dim}"

    def __str__(self) -> str:
        return self.spelling()


def _fmt_q(q: float) -> str:
    return str(int(q)) if float(q).is_integer() else repr(q)


def scalar() -> SpaceDescriptor:
    return SpaceDescriptor(SpaceKind.SCALAR)


def lq(q: float | str, dim: int) -> SpaceDescriptor:
    if isinstance(q, str):
        q = INF if q.strip().lower() in ("inf", "infinity", "oo") else float(q)
    return SpaceDescriptor(SpaceKind.LQ, q, dim)


def parse_space(text: str) -> SpaceDescriptor:
    """Parse ``scalar`` or ``lq:<q>:<m>`` (``inf`` allowed for q)."""
    text = text.strip()
    if text == "scalar":
        return scalar()
    parts = text.split(":")
    if len(parts) != 3 or parts[0] != "lq":
        raise ValueError(f"bad space spelling {text!r}; use 'scalar' or 'lq:<q>:<m>'")
    try:
        return lq(parts[1], int(parts[2]))
    except ValueError as exc:
        raise ValueError(f"bad space spelling {text!r}: {exc}") from None


def element(space: SpaceDescriptor, coords) -> np.ndarray:
    """Validate ``coords`` as an element of ``space`` and return a float array."""
    x = np.atleast_1d(np.asarray(coords, dtype=np.float64))
    if x.ndim != 1 or x.shape[0] != space.dim:
        raise ValueError(f"expected {space.dim} coordinates, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError("element has non-finite coordinates")
    return x


def zero(space: SpaceDescriptor) -> np.ndarray:
    return np.zeros(space.dim)


def norms(space: SpaceDescriptor, xs: np.ndarray) -> np.ndarray:
    """Norms of a batch ``xs`` of shape ``(N, dim)``."""
    xs = np.asarray(xs, dtype=np.float64)
    if xs.ndim != 2 or xs.shape[1] != space.dim:
        raise ValueError(f"expected shape (N, {space.dim}), got {xs.shape}")
    a = np.abs(xs)
    if space.is_scalar:
        return a[:, 0]
    q = space.q
    if math.isinf(q):
        return a.max(axis=1)
    if q == 1.0:
        return a.sum(axis=1)
    # Scale by the max coordinate so a**q neither overflows nor underflows.
    scale = a.max(axis=1)
    safe = np.where(scale > 0, scale, 1.0)
    b = a / safe[:, None]
    if q == 2.0:
        return scale * np.sqrt(np.einsum("ij,ij->i", b, b))
    return scale * (b ** q).sum(axis=1) ** (1.0 / q)


def norm(space: SpaceDescriptor, x) -> float:
    x = element(space, x)
    return float(norms(space, x[None, :])[0])


def axpy(space: SpaceDescriptor, a: float, x, y) -> np.ndarray:
    """Return ``a*x + y``."""
    x = element(space, x)
    y = element(space, y)
    return a * x + y


def basis_vector(space: SpaceDescriptor, i: int) -> np.ndarray:
    """Unit vector e_i, 1-based."""
    if not 1 <= i <= space.dim:
        raise IndexError(f"basis index {i} outside 1..{space.dim}")
    e = np.zeros(space.dim)
    e[i - 1] = 1.0
    return e
