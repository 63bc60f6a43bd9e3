"""Target densities: unnormalized log-density, score, and Hessian-vector products.

Every target accepts a single point of shape (d,) or a batch of shape (n, d)
and returns an array of matching shape (scalar / (n,) for log-densities).
Targets whose score is estimated on data minibatches take an `indices`
argument; the others ignore it.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .util import logsumexp, softmax


def _as_batch(z: np.ndarray, dim: int) -> tuple[np.ndarray, bool]:
    """Promote (d,) to (1, d); return (batch, was_single)."""
    z = np.asarray(z, dtype=np.float64)
    if z.ndim == 1:
        if z.shape[0] != dim:
            raise ValueError(f"point has dimension {z.shape[0]}, target has {dim}")
        return z[None, :], True
    if z.ndim != 2 or z.shape[1] != dim:
        raise ValueError(f"expected (n, {dim}) batch, got shape {z.shape}")
    return z, False


def sigmoid(x: np.ndarray) -> np.ndarray:
    """Numerically stable logistic function."""
    x = np.asarray(x, dtype=np.float64)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def _log1p_exp(x: np.ndarray) -> np.ndarray:
    """log(1 + e^x), stable for large |x|."""
    return np.maximum(x, 0.0) + np.log1p(np.exp(-np.abs(x)))


def finite_difference_score_jvp(score_fn, z, v, step_scale: float = 1e-5):
    """Directional derivative of a score field by central differences.

    The step is 1e-5 * (1 + ||z||_inf) per point, taken along the normalized
    direction and rescaled by ||v||, so the result is linear in v.
    """
    z = np.asarray(z, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    single = z.ndim == 1
    zb = z[None, :] if single else z
    vb = v[None, :] if single else v
    norms = np.linalg.norm(vb, axis=1, keepdims=True)
    safe = np.where(norms > 0, norms, 1.0)
    unit = vb / safe
    step = step_scale * (1.0 + np.max(np.abs(zb), axis=1, keepdims=True))
    diff = (score_fn(zb + step * unit) - score_fn(zb - step * unit)) / (2.0 * step)
    out = diff * norms
    return out[0] if single else out


class TargetDensity:
    """Interface for an unnormalized density on R^d.

    Subclasses provide `dim`, `log_density_unnorm`, `score`, and optionally an
    analytic `score_jvp`; the default jvp falls back to central finite
    differences of the score.
    """

    dim: int
    minibatch_size: int | None = None

    def log_density_unnorm(self, z, indices=None):
        raise NotImplementedError

    def score(self, z, indices=None):
        raise NotImplementedError

    def score_jvp(self, z, v, indices=None):
        """Hessian-of-log-density times v, H(z) @ v."""
        return finite_difference_score_jvp(lambda x: self.score(x, indices=indices), z, v)

    def param_arrays(self) -> tuple[np.ndarray, ...]:
        """Arrays identifying this target instance, for hashing/logging."""
        raise NotImplementedError


@dataclass(frozen=True)
class GaussianMixture(TargetDensity):
    """Equal-weight Gaussian mixture with shared isotropic stdev sigma."""

    means: np.ndarray  # (K, d)
    sigma: float = 0.1

    def __post_init__(self):
        means = np.atleast_2d(np.asarray(self.means, dtype=np.float64))
        object.__setattr__(self, "means", means)
        if means.ndim != 2 or means.shape[0] < 1:
            raise ValueError("means must be a (K, d) array with K >= 1")
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")

    @property
    def dim(self) -> int:
        return self.means.shape[1]

    def _component_logs(self, z: np.ndarray) -> np.ndarray:
        # (n, K) log N(z; mean_k, sigma^2 I) up to the shared normalizer
        diff = z[:, None, :] - self.means[None, :, :]
        return -0.5 * np.sum(diff * diff, axis=2) / (self.sigma**2)

    def log_density_unnorm(self, z, indices=None):
        zb, single = _as_batch(z, self.dim)
        out = logsumexp(self._component_logs(zb), axis=1) - np.log(self.means.shape[0])
        return float(out[0]) if single else out

    def score(self, z, indices=None):
        zb, single = _as_batch(z, self.dim)
        w = softmax(self._component_logs(zb), axis=1)  # (n, K)
        out = (w @ self.means - zb) / (self.sigma**2)
        return out[0] if single else out

    def score_jvp(self, z, v, indices=None):
        # H = -I/s2 + sum_k w_k g_k g_k^T - g_bar g_bar^T, g_k = (mean_k - z)/s2
        zb, single = _as_batch(z, self.dim)
        vb, _ = _as_batch(v, self.dim)
        s2 = self.sigma**2
        w = softmax(self._component_logs(zb), axis=1)
        g = (self.means[None, :, :] - zb[:, None, :]) / s2  # (n, K, d)
        gv = np.einsum("nkd,nd->nk", g, vb)
        gbar = np.einsum("nk,nkd->nd", w, g)
        out = (
            -vb / s2
            + np.einsum("nk,nk,nkd->nd", w, gv, g)
            - gbar * np.sum(gbar * vb, axis=1, keepdims=True)
        )
        return out[0] if single else out

    def param_arrays(self):
        return (self.means, np.array([self.sigma]))


def gaussian_target(mean, sigma: float = 1.0) -> GaussianMixture:
    """Single isotropic Gaussian N(mean, sigma^2 I) as a one-component mixture."""
    mean = np.atleast_1d(np.asarray(mean, dtype=np.float64))
    return GaussianMixture(means=mean[None, :], sigma=sigma)


@dataclass(frozen=True)
class GaussBernoulliRBM(TargetDensity):
    """Gaussian-Bernoulli restricted Boltzmann machine marginal over z.

    log p(z) = b.z - ||z||^2/2 + sum_i log(2 cosh((B^T z + c)_i)) + const,
    the hidden units h in {-1, +1}^l summed out analytically.
    """

    coupling: np.ndarray  # B, (d, l)
    visible_bias: np.ndarray  # b, (d,)
    hidden_bias: np.ndarray  # c, (l,)

    def __post_init__(self):
        B = np.atleast_2d(np.asarray(self.coupling, dtype=np.float64))
        b = np.atleast_1d(np.asarray(self.visible_bias, dtype=np.float64))
        c = np.atleast_1d(np.asarray(self.hidden_bias, dtype=np.float64))
        if B.shape != (b.shape[0], c.shape[0]):
            raise ValueError("coupling must be (len(visible_bias), len(hidden_bias))")
        object.__setattr__(self, "coupling", B)
        object.__setattr__(self, "visible_bias", b)
        object.__setattr__(self, "hidden_bias", c)

    @property
    def dim(self) -> int:
        return self.visible_bias.shape[0]

    @property
    def n_hidden(self) -> int:
        return self.hidden_bias.shape[0]

    def log_density_unnorm(self, z, indices=None):
        zb, single = _as_batch(z, self.dim)
        u = zb @ self.coupling + self.hidden_bias  # (n, l)
        # log(2 cosh u) = |u| + log1p(exp(-2|u|)), overflow-free
        soft = np.abs(u) + np.log1p(np.exp(-2.0 * np.abs(u)))
        out = zb @ self.visible_bias - 0.5 * np.sum(zb * zb, axis=1) + np.sum(soft, axis=1)
        return float(out[0]) if single else out

    def score(self, z, indices=None):
        zb, single = _as_batch(z, self.dim)
        u = zb @ self.coupling + self.hidden_bias
        out = self.visible_bias - zb + np.tanh(u) @ self.coupling.T
        return out[0] if single else out

    def score_jvp(self, z, v, indices=None):
        zb, single = _as_batch(z, self.dim)
        vb, _ = _as_batch(v, self.dim)
        u = zb @ self.coupling + self.hidden_bias
        sech2 = 1.0 - np.tanh(u) ** 2
        out = -vb + (sech2 * (vb @ self.coupling)) @ self.coupling.T
        return out[0] if single else out

    def param_arrays(self):
        return (self.coupling, self.visible_bias, self.hidden_bias)


@dataclass(frozen=True)
class BayesLogReg(TargetDensity):
    """Bayesian logistic regression posterior with Gaussian prior N(0, I/prior_precision).

    `features` is the final design matrix (bias column, if any, already
    appended). Minibatch scores rescale the data term by N/|batch|, so they
    are unbiased estimates of the full-data score.
    """

    features: np.ndarray  # (N, p)
    labels: np.ndarray  # (N,) in {0, 1}
    prior_precision: float = 1.0
    minibatch_size: int | None = None
    test_features: np.ndarray | None = None
    test_labels: np.ndarray | None = None

    _chunk: int = field(default=1024, repr=False)

    def __post_init__(self):
        X = np.atleast_2d(np.asarray(self.features, dtype=np.float64))
        y = np.atleast_1d(np.asarray(self.labels, dtype=np.float64))
        if X.shape[0] != y.shape[0] or X.shape[0] < 1:
            raise ValueError("features and labels must share a positive first dimension")
        if not np.all((y == 0) | (y == 1)):
            raise ValueError("labels must be 0/1")
        if not self.prior_precision > 0:
            raise ValueError("prior_precision must be positive")
        if self.minibatch_size is not None and not 1 <= self.minibatch_size <= X.shape[0]:
            raise ValueError("minibatch_size out of range")
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "labels", y)

    @classmethod
    def from_data(
        cls,
        features,
        labels,
        prior_precision: float = 1.0,
        add_bias: bool = True,
        minibatch_size: int | None = None,
        test_features=None,
        test_labels=None,
    ) -> "BayesLogReg":
        """Build a posterior from raw features, optionally appending a bias column."""
        X = np.atleast_2d(np.asarray(features, dtype=np.float64))
        if add_bias:
            X = np.hstack([X, np.ones((X.shape[0], 1))])
        tX = None
        if test_features is not None:
            tX = np.atleast_2d(np.asarray(test_features, dtype=np.float64))
            if add_bias:
                tX = np.hstack([tX, np.ones((tX.shape[0], 1))])
        ty = None if test_labels is None else np.asarray(test_labels, dtype=np.float64)
        return cls(X, np.asarray(labels), prior_precision, minibatch_size, tX, ty)

    @property
    def dim(self) -> int:
        return self.features.shape[1]

    @property
    def n_data(self) -> int:
        return self.features.shape[0]

    def _batch_views(self, indices):
        """Resolve indices to (X, y, scale) with X (M, p) or (n, M, p)."""
        if indices is None:
            return self.features, self.labels, 1.0
        idx = np.asarray(indices)
        if idx.ndim not in (1, 2) or idx.size == 0:
            raise ValueError("minibatch indices must be a non-empty 1-d or 2-d index array")
        scale = self.n_data / idx.shape[-1]
        return self.features[idx], self.labels[idx], scale

    def log_density_unnorm(self, z, indices=None):
        zb, single = _as_batch(z, self.dim)
        X, y, scale = self._batch_views(indices)
        if X.ndim == 2:
            logits = zb @ X.T  # (n, N)
            fit = logits @ y - np.sum(_log1p_exp(logits), axis=1)
        else:
            logits = np.einsum("nmp,np->nm", X, zb)
            fit = np.sum(y * logits - _log1p_exp(logits), axis=1)
        out = -0.5 * self.prior_precision * np.sum(zb * zb, axis=1) + scale * fit
        return float(out[0]) if single else out

    def score(self, z, indices=None):
        zb, single = _as_batch(z, self.dim)
        X, y, scale = self._batch_views(indices)
        out = np.empty_like(zb)
        for lo in range(0, zb.shape[0], self._chunk):
            hi = min(lo + self._chunk, zb.shape[0])
            zc = zb[lo:hi]
            if X.ndim == 2:
                resid = y - sigmoid(zc @ X.T)  # (c, N)
                grad = resid @ X
            else:
                Xc, yc = X[lo:hi], y[lo:hi]
                resid = yc - sigmoid(np.einsum("nmp,np->nm", Xc, zc))
                grad = np.einsum("nm,nmp->np", resid, Xc)
            out[lo:hi] = -self.prior_precision * zc + scale * grad
        return out[0] if single else out

    def score_jvp(self, z, v, indices=None):
        zb, single = _as_batch(z, self.dim)
        vb, _ = _as_batch(v, self.dim)
        X, y, scale = self._batch_views(indices)
        out = np.empty_like(zb)
        for lo in range(0, zb.shape[0], self._chunk):
            hi = min(lo + self._chunk, zb.shape[0])
            zc, vc = zb[lo:hi], vb[lo:hi]
            if X.ndim == 2:
                s = sigmoid(zc @ X.T)
                hv = (s * (1.0 - s) * (vc @ X.T)) @ X
            else:
                Xc = X[lo:hi]
                s = sigmoid(np.einsum("nmp,np->nm", Xc, zc))
                t = np.einsum("nmp,np->nm", Xc, vc)
                hv = np.einsum("nm,nmp->np", s * (1.0 - s) * t, Xc)
            out[lo:hi] = -self.prior_precision * vc - scale * hv
        return out[0] if single else out

    def param_arrays(self):
        return (self.features, self.labels, np.array([self.prior_precision]))


@dataclass(frozen=True)
class TemperedTarget(TargetDensity):
    """Target raised to the power 1/(1+alpha); score scales by the same factor."""

    inner: TargetDensity
    alpha: float

    def __post_init__(self):
        if self.alpha < 0:
            raise ValueError("alpha must be nonnegative")

    @property
    def dim(self) -> int:
        return self.inner.dim

    @property
    def minibatch_size(self):
        return self.inner.minibatch_size

    def log_density_unnorm(self, z, indices=None):
        return self.inner.log_density_unnorm(z, indices=indices) / (1.0 + self.alpha)

    def score(self, z, indices=None):
        return self.inner.score(z, indices=indices) / (1.0 + self.alpha)

    def score_jvp(self, z, v, indices=None):
        return self.inner.score_jvp(z, v, indices=indices) / (1.0 + self.alpha)

    def param_arrays(self):
        return self.inner.param_arrays() + (np.array([self.alpha]),)


# ---------------------------------------------------------------------------
# Target families: distributions over target parameters for amortized training.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GMMFamily:
    """Equal-weight mixtures with means drawn Uniform(mean_low, mean_high)."""

    dim: int
    components: int = 10
    sigma: float = 0.1
    mean_low: float = -1.0
    mean_high: float = 1.0

    def draw(self, rng: np.random.Generator) -> GaussianMixture:
        means = rng.uniform(self.mean_low, self.mean_high, size=(self.components, self.dim))
        return GaussianMixture(means=means, sigma=self.sigma)


@dataclass(frozen=True)
class RBMFamily:
    """RBMs with b, c ~ N(0, I) and coupling entries uniform on {-scale, +scale}."""

    dim: int = 100
    hidden: int = 10
    coupling_scale: float = 0.1

    def draw(self, rng: np.random.Generator) -> GaussBernoulliRBM:
        b = rng.standard_normal(self.dim)
        c = rng.standard_normal(self.hidden)
        signs = 2.0 * rng.integers(0, 2, size=(self.dim, self.hidden)) - 1.0
        return GaussBernoulliRBM(self.coupling_scale * signs, b, c)


@dataclass(frozen=True)
class LogRegFamily:
    """Synthetic logistic-regression posteriors.

    Each draw samples ground-truth weights w ~ N(0, I_p), features
    x_i ~ N(0, I_p), labels y_i ~ Bernoulli(sigmoid(x_i . w)), then splits off
    a held-out test fraction. The model appends a bias feature.
    """

    n_points: int = 1000
    n_features: int = 20
    prior_precision: float = 1.0
    add_bias: bool = True
    minibatch_size: int | None = 100
    test_fraction: float = 0.2

    def draw(self, rng: np.random.Generator) -> BayesLogReg:
        w = rng.standard_normal(self.n_features)
        X = rng.standard_normal((self.n_points, self.n_features))
        y = (rng.uniform(size=self.n_points) < sigmoid(X @ w)).astype(np.float64)
        n_test = int(round(self.test_fraction * self.n_points))
        n_train = self.n_points - n_test
        return BayesLogReg.from_data(
            X[:n_train],
            y[:n_train],
            prior_precision=self.prior_precision,
            add_bias=self.add_bias,
            minibatch_size=self.minibatch_size,
            test_features=X[n_train:] if n_test else None,
            test_labels=y[n_train:] if n_test else None,
        )


@dataclass(frozen=True)
class FixedTargetFamily:
    """Degenerate family whose every draw is the same target.

    Useful for running family-based evaluation protocols against one held-out
    target: the per-trial rng then varies only the seed bundles and resolved
    test functions, never the target itself.
    """

    target: TargetDensity

    def draw(self, rng: np.random.Generator) -> TargetDensity:
        return self.target


def draw_family_params(family, rng: np.random.Generator) -> TargetDensity:
    """Draw a fresh target from a family; deterministic given the rng state."""
    return family.draw(rng)
