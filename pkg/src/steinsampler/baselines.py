"""Power-decay Langevin baselines with grid search, exact moment oracles for
the mixture-structured targets, and the MSE / classification evaluation
protocols used to compare samplers."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .langevin import LangevinSampler, draw_seed_bundle, forward
from .targets import BayesLogReg, GaussBernoulliRBM, GaussianMixture, sigmoid
from .util import child_rng, softmax, worker_count

RBM_ENUM_CAP = 20  # 2^l mixture components; the paper-scale l=10 is cheap


# ---------------------------------------------------------------------------
# Power-decay schedule.
# ---------------------------------------------------------------------------


def power_decay_step(a: int, b: int, gamma: float, t: int) -> float:
    """eta^t = 10^a / (t + b)^gamma."""
    if t < 0:
        raise ValueError("step index must be nonnegative")
    if t + b <= 0:
        raise ValueError(f"invalid schedule cell: t + b = {t + b} <= 0")
    return 10.0**a / (t + b) ** gamma


@dataclass(frozen=True)
class PowerDecaySchedule:
    """Scalar step-size schedule eta^t = 10^a/(t+b)^gamma, broadcast over d."""

    a: int
    b: int
    gamma: float = 0.55

    def step_size(self, t: int) -> float:
        return power_decay_step(self.a, self.b, self.gamma, t)

    def valid_for(self, steps: int) -> bool:
        return all(t + self.b > 0 for t in (0, steps - 1))

    def log_step_sizes(self, steps: int) -> np.ndarray:
        """(steps, 1) log-step array for driving a LangevinSampler."""
        if not self.valid_for(steps):
            raise ValueError(f"schedule (a={self.a}, b={self.b}) invalid for t in [0, {steps})")
        t = np.arange(steps, dtype=np.float64)
        lam = self.a * math.log(10.0) - self.gamma * np.log(t + self.b)
        return lam[:, None]

    @property
    def label(self) -> str:
        return f"power(a={self.a},b={self.b})"


# ---------------------------------------------------------------------------
# Moment specs and exact oracles.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MomentSpec:
    """Coordinatewise test function: z_j, z_j^2, or cos(w z_j + b).

    A cosine spec with unresolved (w, b) draws them per trial via
    `resolved(rng)`: w ~ N(0,1), b ~ Uniform(0, 2pi).
    """

    kind: str  # identity | square | cosine
    w: float | None = None
    b: float | None = None

    def __post_init__(self):
        if self.kind not in ("identity", "square", "cosine"):
            raise ValueError(f"unknown moment spec kind {self.kind!r}")

    @property
    def label(self) -> str:
        return self.kind

    def resolved(self, rng: np.random.Generator) -> "MomentSpec":
        if self.kind != "cosine" or (self.w is not None and self.b is not None):
            return self
        return MomentSpec("cosine", w=float(rng.standard_normal()),
                          b=float(rng.uniform(0.0, 2.0 * math.pi)))

    def apply(self, samples: np.ndarray) -> np.ndarray:
        """Sample estimate of E[h(z_j)] per coordinate j."""
        z = np.asarray(samples, dtype=np.float64)
        if self.kind == "identity":
            return z.mean(axis=0)
        if self.kind == "square":
            return (z * z).mean(axis=0)
        if self.w is None or self.b is None:
            raise ValueError("cosine spec must be resolved before use")
        return np.cos(self.w * z + self.b).mean(axis=0)


IDENTITY = MomentSpec("identity")
SQUARE = MomentSpec("square")
COSINE = MomentSpec("cosine")


def _gaussian_mixture_moments(weights: np.ndarray, means: np.ndarray, sigma: float,
                              spec: MomentSpec) -> np.ndarray:
    """Exact coordinatewise moments of sum_c weights_c N(means_c, sigma^2 I)."""
    if spec.kind == "identity":
        return weights @ means
    if spec.kind == "square":
        return sigma**2 + weights @ (means * means)
    if spec.w is None or spec.b is None:
        raise ValueError("cosine spec must be resolved before use")
    damp = math.exp(-0.5 * (spec.w * sigma) ** 2)
    return damp * (weights @ np.cos(spec.w * means + spec.b))


def exact_moments_gmm(gmm: GaussianMixture, spec: MomentSpec) -> np.ndarray:
    """Closed-form E[h(z_j)] for an equal-weight Gaussian mixture."""
    k = gmm.means.shape[0]
    return _gaussian_mixture_moments(np.full(k, 1.0 / k), gmm.means, gmm.sigma, spec)


def rbm_mixture_components(rbm: GaussBernoulliRBM) -> tuple[np.ndarray, np.ndarray]:
    """The RBM marginal as a mixture: weights (2^l,) and means (2^l, d).

    Summing the hidden units out of the joint leaves p(z) proportional to
    sum_h exp(c.h + ||Bh + b||^2 / 2) N(z; Bh + b, I); weights are normalized
    with log-sum-exp. Enumeration is capped at l <= 20.
    """
    ell = rbm.n_hidden
    if ell > RBM_ENUM_CAP:
        raise ValueError(f"hidden unit count {ell} exceeds enumeration cap {RBM_ENUM_CAP}")
    codes = np.arange(2**ell)[:, None] >> np.arange(ell)[None, :]
    h = 2.0 * (codes & 1) - 1.0  # (2^l, l) in {-1, +1}
    means = h @ rbm.coupling.T + rbm.visible_bias  # (2^l, d)
    logw = h @ rbm.hidden_bias + 0.5 * np.sum(means * means, axis=1)
    return softmax(logw, axis=0), means


def exact_moments_rbm(rbm: GaussBernoulliRBM, spec: MomentSpec) -> np.ndarray:
    """Exact E[h(z_j)] by enumerating the RBM's 2^l Gaussian components."""
    weights, means = rbm_mixture_components(rbm)
    return _gaussian_mixture_moments(weights, means, 1.0, spec)


def exact_moments(target, spec: MomentSpec) -> np.ndarray:
    if isinstance(target, GaussianMixture):
        return exact_moments_gmm(target, spec)
    if isinstance(target, GaussBernoulliRBM):
        return exact_moments_rbm(target, spec)
    raise TypeError(f"no exact moment oracle for {type(target).__name__}")


def moment_mse(estimate: np.ndarray, exact: np.ndarray) -> float:
    """Squared error averaged over coordinates."""
    diff = np.asarray(estimate) - np.asarray(exact)
    return float(np.mean(diff * diff))


# ---------------------------------------------------------------------------
# Sample sources: anything that can draw n samples against a target.
# ---------------------------------------------------------------------------


class LangevinSource:
    """Draws by running a Langevin sampler with a fixed log-step schedule.

    Built either from trained (T, d) or (T, 1) log steps or from a
    PowerDecaySchedule; optional refinement appends extra power-decay steps
    after the base schedule.
    """

    def __init__(self, log_step_sizes: np.ndarray | None = None,
                 schedule: PowerDecaySchedule | None = None, steps: int | None = None,
                 init_scale: float = 1.0, refine_schedule: PowerDecaySchedule | None = None,
                 refine_steps: int = 0, label: str | None = None):
        if (log_step_sizes is None) == (schedule is None):
            raise ValueError("provide exactly one of log_step_sizes or schedule")
        if schedule is not None:
            if steps is None:
                raise ValueError("steps is required with a schedule")
            self._lam = schedule.log_step_sizes(steps)
            default_label = schedule.label
        else:
            self._lam = np.atleast_2d(np.asarray(log_step_sizes, dtype=np.float64))
            default_label = "trained"
        if refine_steps:
            if refine_schedule is None:
                raise ValueError("refine_steps requires a refine_schedule")
            refine = np.broadcast_to(
                refine_schedule.log_step_sizes(refine_steps), (refine_steps, self._lam.shape[1])
            )
            self._lam = np.vstack([self._lam, refine])
        self.init_scale = float(init_scale)
        self.label = label if label is not None else default_label

    @classmethod
    def from_sampler(cls, sampler: LangevinSampler, label: str = "trained",
                     **kwargs) -> "LangevinSource":
        return cls(log_step_sizes=sampler.log_step_sizes, init_scale=sampler.init_scale,
                   label=label, **kwargs)

    @property
    def steps(self) -> int:
        return self._lam.shape[0]

    def draw(self, target, n: int, rng: np.random.Generator) -> np.ndarray:
        lam = self._lam
        if lam.shape[1] not in (1, target.dim):
            raise ValueError(f"schedule has {lam.shape[1]} columns, target dimension {target.dim}")
        sampler = LangevinSampler(lam.shape[0], target.dim, block_size=lam.shape[0],
                                  init_scale=self.init_scale, log_step_sizes=lam)
        seeds = sampler.draw_seeds(rng, n, target=target)
        z, _ = forward(sampler, target, seeds)
        return z


class ExactMixtureSource:
    """I.i.d. control sampler for targets with enumerable mixture structure."""

    label = "exact"
    steps = 0

    def draw(self, target, n: int, rng: np.random.Generator) -> np.ndarray:
        if isinstance(target, GaussianMixture):
            weights = np.full(target.means.shape[0], 1.0 / target.means.shape[0])
            means, sigma = target.means, target.sigma
        elif isinstance(target, GaussBernoulliRBM):
            weights, means = rbm_mixture_components(target)
            sigma = 1.0
        else:
            raise TypeError(f"no exact sampler for {type(target).__name__}")
        comp = rng.choice(means.shape[0], size=n, p=weights)
        return means[comp] + sigma * rng.standard_normal((n, means.shape[1]))


@dataclass
class PointMassSource:
    """Deterministic point repeated n times (degenerate control)."""

    point: np.ndarray
    label: str = "point_mass"
    steps: int = 0

    def draw(self, target, n: int, rng: np.random.Generator) -> np.ndarray:
        point = np.atleast_1d(np.asarray(self.point, dtype=np.float64))
        return np.tile(point, (n, 1))


@dataclass
class GaussianNoiseSource:
    """z ~ N(0, scale^2 I): the random-guess control for classification."""

    scale: float = 1.0
    label: str = "noise"
    steps: int = 0

    def draw(self, target, n: int, rng: np.random.Generator) -> np.ndarray:
        return self.scale * rng.standard_normal((n, target.dim))


# ---------------------------------------------------------------------------
# Evaluation protocols.
# ---------------------------------------------------------------------------


def _run_parallel(fn, args_list):
    workers = worker_count()
    if workers <= 1 or len(args_list) <= 1:
        return [fn(args) for args in args_list]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, args_list))


def mse_table(sources, family, specs, n_list, trials: int, seed: int,
              family_label: str = "family") -> list[dict]:
    """Moment-MSE comparison table, rows (family, method, T, spec, n, trial, value).

    Per trial: a fresh target is drawn from the family, cosine specs are
    resolved once (shared across all sources: paired comparison), each source
    draws each n with its own derived rng, and every spec's sample estimate
    is scored against the exact oracle, averaged over coordinates.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    sources = list(sources) if isinstance(sources, (list, tuple)) else [sources]
    n_list = list(n_list)

    def one_trial(trial: int) -> list[dict]:
        rng_trial = child_rng(seed, 5, trial)
        target = family.draw(rng_trial)
        resolved = [spec.resolved(rng_trial) for spec in specs]
        rows = []
        for si, src in enumerate(sources):
            for ni, n in enumerate(n_list):
                z = src.draw(target, n, child_rng(seed, 6, trial, si, ni))
                for spec in resolved:
                    rows.append({
                        "family": family_label,
                        "method": src.label,
                        "T": src.steps,
                        "spec": spec.label,
                        "n": n,
                        "trial": trial,
                        "value": moment_mse(spec.apply(z), exact_moments(target, spec)),
                    })
        return rows

    out: list[dict] = []
    for rows in _run_parallel(one_trial, list(range(trials))):
        out.extend(rows)
    return out


@dataclass
class GridSearchResult:
    best: PowerDecaySchedule
    score: float
    rows: list


def grid_search_baseline(family, steps: int, seed: int,
                         a_values=tuple(range(-6, 3)), b_values=tuple(range(0, 10)),
                         gamma: float = 0.55, n_train_draws: int = 10,
                         n_samples: int = 1000, specs=(IDENTITY, SQUARE),
                         objective: str = "moments", n_posterior: int = 100,
                         init_scale: float = 1.0,
                         family_label: str = "family") -> GridSearchResult:
    """Exhaustive power-decay grid search for the best baseline schedule.

    Invalid cells (t + b <= 0 somewhere) are skipped. Shared per-draw targets
    and seed bundles pair every cell against identical randomness. The
    moments objective scores a cell by its mean moment-MSE over the draws and
    specs at n_samples; the classify objective by mean negative held-out
    log-likelihood with n_posterior chains. Ties break to smaller a, then b.
    """
    cells = [PowerDecaySchedule(a, b, gamma) for a in sorted(a_values) for b in sorted(b_values)
             if PowerDecaySchedule(a, b, gamma).valid_for(steps)]
    if not cells:
        raise ValueError("no valid grid cells")
    if objective not in ("moments", "classify"):
        raise ValueError(f"unknown grid objective {objective!r}")

    m = n_samples if objective == "moments" else n_posterior
    targets, bundles, resolved = [], [], []
    for i in range(n_train_draws):
        rng_i = child_rng(seed, 11, i)
        target = family.draw(rng_i)
        targets.append(target)
        resolved.append([spec.resolved(rng_i) for spec in specs])
        bundles.append(draw_seed_bundle(child_rng(seed, 13, i), m, steps, target.dim,
                                        target=target, init_scale=init_scale))

    def eval_cell(cell: PowerDecaySchedule):
        lam = cell.log_step_sizes(steps)
        rows, values = [], []
        for i, target in enumerate(targets):
            sampler = LangevinSampler(steps, target.dim, block_size=steps,
                                      init_scale=init_scale, log_step_sizes=lam)
            z, _ = forward(sampler, target, bundles[i])
            if objective == "moments":
                for spec in resolved[i]:
                    value = moment_mse(spec.apply(z), exact_moments(target, spec))
                    values.append(value)
                    rows.append({"family": family_label, "method": cell.label, "T": steps,
                                 "spec": spec.label, "n": m, "trial": i, "value": value})
            else:
                _, loglik = _predictive_scores(target, z)
                values.append(-loglik)
                rows.append({"family": family_label, "method": cell.label, "T": steps,
                             "spec": "neg_test_loglik", "n": m, "trial": i, "value": -loglik})
        return float(np.mean(values)), rows

    results = _run_parallel(eval_cell, cells)
    best_idx, best_score = 0, math.inf
    all_rows: list[dict] = []
    for idx, (score, rows) in enumerate(results):
        all_rows.extend(rows)
        if score < best_score:
            best_idx, best_score = idx, score
    return GridSearchResult(best=cells[best_idx], score=best_score, rows=all_rows)


def _predictive_scores(task: BayesLogReg, z: np.ndarray) -> tuple[float, float]:
    """Accuracy and mean test log-likelihood of posterior-averaged predictions."""
    if task.test_features is None or task.test_labels is None or task.test_labels.size == 0:
        raise ValueError("classification evaluation needs a held-out test set")
    probs = sigmoid(task.test_features @ z.T).mean(axis=1)  # (n_test,)
    y = task.test_labels
    accuracy = float(np.mean((probs > 0.5) == (y > 0.5)))
    p = np.clip(probs, 1e-12, 1.0 - 1e-12)
    loglik = float(np.mean(y * np.log(p) + (1.0 - y) * np.log1p(-p)))
    return accuracy, loglik


@dataclass
class ClassifyResult:
    accuracy: float
    log_likelihood: float
    rows: list


def classify_eval(source, tasks, n_samples: int, seed: int,
                  family_label: str = "logreg") -> ClassifyResult:
    """Posterior-predictive evaluation over held-out classification tasks.

    Draws n_samples weight vectors per task, averages predictive
    probabilities over them, and reports accuracy and mean test
    log-likelihood averaged over tasks (plus per-task CSV rows).
    """
    tasks = list(tasks)
    if not tasks:
        raise ValueError("need at least one task")

    def one_task(item):
        i, task = item
        z = source.draw(task, n_samples, child_rng(seed, 21, i))
        return _predictive_scores(task, z)

    scores = _run_parallel(one_task, list(enumerate(tasks)))
    rows = []
    for i, (acc, ll) in enumerate(scores):
        rows.append({"family": family_label, "method": source.label, "T": source.steps,
                     "spec": "accuracy", "n": n_samples, "trial": i, "value": acc})
        rows.append({"family": family_label, "method": source.label, "T": source.steps,
                     "spec": "test_loglik", "n": n_samples, "trial": i, "value": ll})
    accs = [s[0] for s in scores]
    lls = [s[1] for s in scores]
    return ClassifyResult(accuracy=float(np.mean(accs)),
                          log_likelihood=float(np.mean(lls)), rows=rows)
