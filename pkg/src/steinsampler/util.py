"""Shared plumbing: error types, seeded RNG derivation, hashing, formatting."""

from __future__ import annotations

import hashlib
import os

import numpy as np

THREADS_ENV_VAR = "AMORTIZED_SAMPLER_THREADS"


class DivergenceError(RuntimeError):
    """Raised when an iterative routine produces a non-finite value.

    Carries the iteration (outer loop) or step (sampler layer) index at
    which the blow-up was detected, when known.
    """

    def __init__(self, message: str, iteration: int | None = None):
        super().__init__(message)
        self.iteration = iteration


def worker_count() -> int:
    """Number of worker threads for embarrassingly parallel evaluation loops.

    Defaults to the available core count; the AMORTIZED_SAMPLER_THREADS
    environment variable caps it. Results do not depend on the value: work
    units carry pre-derived rng streams and are reduced in a fixed order.
    """
    cores = os.cpu_count() or 1
    raw = os.environ.get(THREADS_ENV_VAR)
    if raw is None:
        return cores
    try:
        n = int(raw)
    except ValueError:
        return cores
    return max(1, min(n, cores))


def child_rng(root_seed: int, *key: int) -> np.random.Generator:
    """Independent generator derived from a root seed and an integer key path.

    The same (root_seed, *key) always yields the same stream, and distinct
    key paths yield statistically independent streams.
    """
    return np.random.default_rng(np.random.SeedSequence([int(root_seed), *map(int, key)]))


def format_float(x: float) -> str:
    """Shortest decimal form that round-trips a double (17 significant digits)."""
    return "%.17g" % float(x)


def array_hash(*arrays: np.ndarray) -> str:
    """Short hex digest of the shapes and bytes of one or more arrays."""
    digest = hashlib.sha256()
    for a in arrays:
        a = np.ascontiguousarray(np.asarray(a, dtype=np.float64))
        digest.update(str(a.shape).encode())
        digest.update(a.tobytes())
    return digest.hexdigest()[:12]


def logsumexp(a: np.ndarray, axis: int = -1) -> np.ndarray:
    """Stable log(sum(exp(a))) along an axis."""
    a = np.asarray(a, dtype=np.float64)
    amax = np.max(a, axis=axis, keepdims=True)
    amax = np.where(np.isfinite(amax), amax, 0.0)
    out = np.log(np.sum(np.exp(a - amax), axis=axis)) + np.squeeze(amax, axis=axis)
    return out


def softmax(a: np.ndarray, axis: int = -1) -> np.ndarray:
    """Stable exp(a) / sum(exp(a)) along an axis."""
    a = np.asarray(a, dtype=np.float64)
    amax = np.max(a, axis=axis, keepdims=True)
    e = np.exp(a - amax)
    return e / np.sum(e, axis=axis, keepdims=True)


def require_finite(arr: np.ndarray, what: str, iteration: int | None = None) -> None:
    """Raise DivergenceError if any entry of arr is NaN or infinite."""
    if not np.all(np.isfinite(arr)):
        where = "" if iteration is None else f" at iteration {iteration}"
        raise DivergenceError(f"non-finite values in {what}{where}", iteration=iteration)
