"""Pure numpy versions of the compiled kernels in ``_kernels.pyx``."""

import math

import numpy as np

SNAP = 64 * np.finfo(np.float64).eps
_CHUNK = 1 << 14


def _lq_norms(s, q):
    a = np.abs(s)
    if math.isinf(q):
        return a.max(axis=1)
    if q == 1.0:
        return a.sum(axis=1)
    if q == 2.0:
        return np.sqrt((a * a).sum(axis=1))
    scale = a.max(axis=1)
    safe = np.where(scale > 0, scale, 1.0)
    return scale * ((a / safe[:, None]) ** q).sum(axis=1) ** (1.0 / q)


def sign_norms(X, q):
    X = np.ascontiguousarray(X, dtype=np.float64)
    n = X.shape[0]
    if n < 1:
        raise ValueError("need at least one vector")
    if n > 31:
        raise ValueError("too many vectors for enumeration")
    npat = 1 << (n - 1)
    out = np.empty(npat)
    bits = np.arange(n - 1, dtype=np.int64)
    for lo in range(0, npat, _CHUNK):
        i = np.arange(lo, min(lo + _CHUNK, npat), dtype=np.int64)
        g = i ^ (i >> 1)
        signs = 1.0 - 2.0 * ((g[:, None] >> bits[None, :]) & 1)
        s = X[0][None, :] + signs @ X[1:]
        out[lo:lo + len(i)] = _lq_norms(s, q)
    return out


def _axis_basis(y, r, k):
    """Per-axis cell offset and Lagrange values for node coordinates ``y``."""
    y = np.clip(y, 0.0, float(r * k))
    zr = np.floor(y + 0.5)
    y = np.where(np.abs(y - zr) <= SNAP * (1.0 + y), zr, y)
    cell = np.clip(np.ceil(y / r).astype(np.int64) - 1, 0, k - 1)
    z = y - cell * r
    nodes = np.arange(r + 1, dtype=np.float64)
    bary = np.array([(-1.0) ** i * math.comb(r, i) for i in range(r + 1)])
    diff = z[:, None] - nodes[None, :]
    hit = diff == 0.0
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = bary[None, :] / diff
        lval = terms / terms.sum(axis=1, keepdims=True)
    rows = hit.any(axis=1)
    lval[rows] = hit[rows].astype(np.float64)
    return cell * r, lval


def local_basis(points, r, k):
    points = np.ascontiguousarray(points, dtype=np.float64)
    N, d = points.shape
    nl = r + 1
    G = r * k + 1
    idx = np.zeros((N, 1), dtype=np.int64)
    w = np.ones((N, 1))
    parts = [_axis_basis(points[:, a] * (r * k), r, k) for a in range(d)]
    # Build the row-major tensor product from the last axis outwards.
    stride = 1
    for a in range(d - 1, -1, -1):
        base, lval = parts[a]
        gids = (base[:, None] + np.arange(nl)[None, :]) * stride
        idx = (gids[:, :, None] + idx[:, None, :]).reshape(N, -1)
        w = (w[:, None, :] * lval[:, :, None]).reshape(N, -1)
        stride *= G
    return idx, w
