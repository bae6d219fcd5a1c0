"""Deterministic k-means (k-means++ init, Lloyd iterations) over embeddings.

All randomness flows through the manifest PRNG; identical
(embeddings, k, seed, tol, max_iter) give bitwise-identical results.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._kernels import assign_nearest
from .distio import EmbeddingMatrix
from .errors import DigestMismatchError, MdsError
from .rng import Xoshiro256StarStar


@dataclass
class Clustering:
    k: int
    centroids: np.ndarray       # (k, D) float64
    assignments: np.ndarray     # (N,) int64
    distances: np.ndarray       # (N,) float64, Euclidean to assigned centroid
    objective: float            # sum of squared assigned distances
    iterations: int
    seed: int
    input_digest: str
    objective_history: list = None  # objective after each assignment pass


def default_k(n: int) -> int:
    """sqrt(N/2) heuristic, clamped to [2, 1024]."""
    return max(2, min(1024, round(math.sqrt(n / 2))))


def kmeans_pp_init(rows: np.ndarray, k: int, rng: Xoshiro256StarStar) -> np.ndarray:
    """k-means++ D^2-weighted seeding; returns k distinct centroids."""
    n = rows.shape[0]
    if k == 0:
        raise MdsError("k must be >= 1")
    if k > n:
        raise MdsError(f"k={k} exceeds point count {n}")
    chosen = np.empty(k, dtype=np.int64)
    chosen[0] = rng.randbelow(n)
    d2 = ((rows - rows[chosen[0]]) ** 2).sum(axis=1)
    for c in range(1, k):
        total = float(d2.sum())
        if total <= 0.0:
            # all remaining mass at already-chosen points; fall back to the
            # first index not yet picked
            taken = set(chosen[:c].tolist())
            chosen[c] = next(i for i in range(n) if i not in taken)
        else:
            u = rng.uniform() * total
            chosen[c] = int(np.searchsorted(np.cumsum(d2), u, side="right"))
            chosen[c] = min(chosen[c], n - 1)
        d2 = np.minimum(d2, ((rows - rows[chosen[c]]) ** 2).sum(axis=1))
    return rows[chosen].copy()


def assign(point: np.ndarray, centroids: np.ndarray) -> tuple[int, float]:
    """Nearest centroid (lowest index on exact ties) and Euclidean distance."""
    point = np.asarray(point, dtype=np.float64)
    if point.shape[-1] != centroids.shape[1]:
        raise MdsError(f"dimension mismatch: point {point.shape[-1]}, centroids {centroids.shape[1]}")
    labels, d2 = assign_nearest(point.reshape(1, -1), centroids)
    return int(labels[0]), math.sqrt(float(d2[0]))


def kmeans_fit(emb: EmbeddingMatrix, k: int, seed: int,
               max_iter: int = 100, tol: float = 1e-6,
               normalize: bool = False) -> Clustering:
    """Lloyd's algorithm; empty clusters reseeded with the farthest point."""
    rows = np.asarray(emb.rows, dtype=np.float64)
    if rows.ndim != 2 or rows.shape[0] == 0:
        raise MdsError("clustering needs a non-empty embedding matrix")
    if normalize:
        norms = np.linalg.norm(rows, axis=1, keepdims=True)
        rows = rows / np.where(norms > 0, norms, 1.0)
    n = rows.shape[0]
    rng = Xoshiro256StarStar(seed)
    centroids = kmeans_pp_init(rows, k, rng)

    labels = np.zeros(n, dtype=np.int64)
    d2 = np.zeros(n, dtype=np.float64)
    iterations = 0
    history = []
    for iterations in range(1, max_iter + 1):
        labels, d2 = assign_nearest(rows, centroids)
        history.append(float(d2.sum()))
        # empty-cluster repair: steal the point farthest from its centroid
        for c in range(k):
            if not np.any(labels == c):
                far = int(np.argmax(d2))
                centroids[c] = rows[far]
                labels[far] = c
                d2[far] = 0.0
        new_centroids = np.empty_like(centroids)
        for c in range(k):
            members = rows[labels == c]
            new_centroids[c] = members.mean(axis=0)
        shift = np.sqrt(((new_centroids - centroids) ** 2).sum(axis=1)).max()
        centroids = new_centroids
        if shift < tol:
            break
    labels, d2 = assign_nearest(rows, centroids)
    history.append(float(d2.sum()))
    distances = np.sqrt(d2)
    return Clustering(k=k, centroids=centroids, assignments=labels,
                      distances=distances, objective=float(d2.sum()),
                      iterations=iterations, seed=seed,
                      input_digest=emb.content_digest(),
                      objective_history=history)


def selfsup_distances(emb: EmbeddingMatrix, clustering: Clustering) -> dict[str, float]:
    """Per-id Euclidean distance to the assigned centroid."""
    if clustering.input_digest != emb.content_digest():
        raise DigestMismatchError(
            "clustering was fitted on a different embedding matrix")
    return {rid: float(clustering.distances[i]) for i, rid in enumerate(emb.ids)}
