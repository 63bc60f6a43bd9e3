"""Squared-exponential kernel, its gradients, and the median-heuristic bandwidth."""

from __future__ import annotations

import numpy as np


def _check_pair(x: np.ndarray, y: np.ndarray, h: float) -> tuple[np.ndarray, np.ndarray]:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.ndim != 1 or y.ndim != 1:
        raise ValueError("kernel inputs must be 1-d points")
    if x.shape != y.shape:
        raise ValueError(f"dimension mismatch: {x.shape} vs {y.shape}")
    if not h > 0:
        raise ValueError(f"bandwidth must be positive, got {h}")
    return x, y


def rbf_eval(x: np.ndarray, y: np.ndarray, h: float) -> float:
    """k(x, y) = exp(-||x - y||^2 / h)."""
    x, y = _check_pair(x, y, h)
    return float(np.exp(-np.sum((x - y) ** 2) / h))


def rbf_grad_first(x: np.ndarray, y: np.ndarray, h: float) -> np.ndarray:
    """Gradient of k(x, y) with respect to x: (-2/h) (x - y) k(x, y)."""
    x, y = _check_pair(x, y, h)
    return (-2.0 / h) * (x - y) * np.exp(-np.sum((x - y) ** 2) / h)


def pairwise_sq_dists(z: np.ndarray) -> np.ndarray:
    """(n, n) matrix of squared Euclidean distances between rows of z.

    Uses the expansion ||a-b||^2 = ||a||^2 + ||b||^2 - 2 a.b, clipped at
    zero to absorb round-off on near-identical rows.
    """
    z = np.asarray(z, dtype=np.float64)
    if z.ndim != 2:
        raise ValueError("expected a (n, d) array of particles")
    sq = np.sum(z * z, axis=1)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (z @ z.T)
    np.maximum(d2, 0.0, out=d2)
    np.fill_diagonal(d2, 0.0)
    return d2


def kernel_matrix(z: np.ndarray, h: float) -> np.ndarray:
    """(n, n) Gram matrix k(z_i, z_j) = exp(-||z_i - z_j||^2 / h)."""
    if not h > 0:
        raise ValueError(f"bandwidth must be positive, got {h}")
    return np.exp(-pairwise_sq_dists(z) / h)


def median_bandwidth(particles: np.ndarray) -> float:
    """Median heuristic: h = med^2 / ln(n) over pairwise Euclidean distances.

    med is the median of the n(n-1)/2 distinct pairwise distances, with an
    even count averaging the two middle order statistics. Degenerate inputs
    (n <= 1, all particles identical, or ln(n) <= 0) fall back to h = 1.
    """
    particles = np.asarray(particles, dtype=np.float64)
    if particles.ndim != 2:
        raise ValueError("expected a (n, d) array of particles")
    n = particles.shape[0]
    if n <= 1:
        return 1.0
    iu = np.triu_indices(n, k=1)
    dists = np.sqrt(pairwise_sq_dists(particles)[iu])
    med = float(np.median(dists))
    logn = np.log(n)
    if med == 0.0 or logn <= 0.0:
        return 1.0
    return med * med / logn
