"""Hot numeric kernels: entropy rows, EL2N rows, nearest-centroid assignment.

Each kernel has a plain numpy implementation and a numba @njit twin.
Set MDS_NO_NUMBA=1 to force the numpy path (also the automatic fallback
when numba is absent).  benchmarks/bench_kernels.py compares the two.
"""

from __future__ import annotations

import math
import os

import numpy as np

_ENTROPY_EPS = 1e-12


# ---------------------------------------------------------------- numpy path

def _entropy_dense_np(rows: np.ndarray, vocab_size: int) -> np.ndarray:
    p = rows.astype(np.float64, copy=False)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(p > 0.0, -p * np.log(p), 0.0)
    return terms.sum(axis=1) / vocab_size


def _entropy_sparse_np(probs, offsets, tails, vocab_size, ks):
    out = np.empty(len(tails), dtype=np.float64)
    for l in range(len(tails)):
        p = probs[offsets[l]:offsets[l + 1]].astype(np.float64)
        s = float(np.sum(np.where(p > 0.0, -p * np.log(np.where(p > 0.0, p, 1.0)), 0.0)))
        m = float(tails[l])
        if m > _ENTROPY_EPS and vocab_size > ks[l]:
            s += -m * math.log(m / (vocab_size - ks[l]))
        out[l] = s / vocab_size
    return out


def _el2n_dense_np(rows: np.ndarray, ref_ids: np.ndarray) -> np.ndarray:
    p = rows.astype(np.float64, copy=False)
    sq = np.einsum("ij,ij->i", p, p)
    at_ref = p[np.arange(len(ref_ids)), ref_ids]
    sq = sq - at_ref ** 2 + (1.0 - at_ref) ** 2
    return np.sqrt(np.maximum(sq, 0.0))


def _el2n_sparse_np(indices, probs, offsets, tails, vocab_size, ref_ids):
    out = np.empty(len(ref_ids), dtype=np.float64)
    for l in range(len(ref_ids)):
        idx = indices[offsets[l]:offsets[l + 1]]
        p = probs[offsets[l]:offsets[l + 1]].astype(np.float64)
        k = len(idx)
        n_tail = vocab_size - k
        q = float(tails[l]) / n_tail if n_tail > 0 else 0.0
        sq = float(np.dot(p, p))
        pos = np.searchsorted(idx, ref_ids[l])
        if pos < k and idx[pos] == ref_ids[l]:
            pt = p[pos]
            sq += -pt * pt + (1.0 - pt) ** 2 + n_tail * q * q
        else:
            sq += (1.0 - q) ** 2 + max(n_tail - 1, 0) * q * q
        out[l] = math.sqrt(max(sq, 0.0))
    return out


def _assign_np(points: np.ndarray, centroids: np.ndarray):
    # squared distances in full; argmin takes lowest index on ties
    d2 = ((points[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
    labels = np.argmin(d2, axis=1)
    return labels.astype(np.int64), d2[np.arange(len(points)), labels]


# ---------------------------------------------------------------- numba path

def _build_numba():
    from numba import njit

    @njit(cache=True)
    def entropy_dense(rows, vocab_size):
        n, v = rows.shape
        out = np.empty(n, dtype=np.float64)
        for i in range(n):
            s = 0.0
            for j in range(v):
                p = rows[i, j]
                if p > 0.0:
                    s -= p * math.log(p)
            out[i] = s / vocab_size
        return out

    @njit(cache=True)
    def entropy_sparse(probs, offsets, tails, vocab_size, ks):
        n = len(tails)
        out = np.empty(n, dtype=np.float64)
        for i in range(n):
            s = 0.0
            for j in range(offsets[i], offsets[i + 1]):
                p = probs[j]
                if p > 0.0:
                    s -= p * math.log(p)
            m = tails[i]
            if m > _ENTROPY_EPS and vocab_size > ks[i]:
                s -= m * math.log(m / (vocab_size - ks[i]))
            out[i] = s / vocab_size
        return out

    @njit(cache=True)
    def el2n_dense(rows, ref_ids):
        n, v = rows.shape
        out = np.empty(n, dtype=np.float64)
        for i in range(n):
            sq = 0.0
            for j in range(v):
                p = rows[i, j]
                sq += p * p
            pt = rows[i, ref_ids[i]]
            sq += -pt * pt + (1.0 - pt) * (1.0 - pt)
            if sq < 0.0:
                sq = 0.0
            out[i] = math.sqrt(sq)
        return out

    @njit(cache=True)
    def el2n_sparse(indices, probs, offsets, tails, vocab_size, ref_ids):
        n = len(ref_ids)
        out = np.empty(n, dtype=np.float64)
        for i in range(n):
            lo = offsets[i]
            hi = offsets[i + 1]
            k = hi - lo
            n_tail = vocab_size - k
            q = tails[i] / n_tail if n_tail > 0 else 0.0
            sq = 0.0
            pt = -1.0
            for j in range(lo, hi):
                p = probs[j]
                sq += p * p
                if indices[j] == ref_ids[i]:
                    pt = p
            if pt >= 0.0:
                sq += -pt * pt + (1.0 - pt) * (1.0 - pt) + n_tail * q * q
            else:
                rest = n_tail - 1 if n_tail > 0 else 0
                sq += (1.0 - q) * (1.0 - q) + rest * q * q
            if sq < 0.0:
                sq = 0.0
            out[i] = math.sqrt(sq)
        return out

    @njit(cache=True)
    def assign(points, centroids):
        n, d = points.shape
        k = centroids.shape[0]
        labels = np.empty(n, dtype=np.int64)
        dists = np.empty(n, dtype=np.float64)
        for i in range(n):
            best = 0
            best_d2 = 0.0
            for c in range(k):
                d2 = 0.0
                for j in range(d):
                    diff = points[i, j] - centroids[c, j]
                    d2 += diff * diff
                if c == 0 or d2 < best_d2:
                    best = c
                    best_d2 = d2
            labels[i] = best
            dists[i] = best_d2
        return labels, dists

    return entropy_dense, entropy_sparse, el2n_dense, el2n_sparse, assign


USE_NUMBA = os.environ.get("MDS_NO_NUMBA", "0") not in ("1", "true", "yes")

if USE_NUMBA:
    try:
        (entropy_dense, entropy_sparse, el2n_dense,
         el2n_sparse, assign_nearest) = _build_numba()
    except ImportError:
        USE_NUMBA = False

if not USE_NUMBA:
    entropy_dense = _entropy_dense_np
    entropy_sparse = _entropy_sparse_np
    el2n_dense = _el2n_dense_np
    el2n_sparse = _el2n_sparse_np
    assign_nearest = _assign_np
