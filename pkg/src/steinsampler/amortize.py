"""Training loops that project Stein variational gradients onto sampler
parameters: the chain-rule, full-projection, linearized least-squares, and
amortized-KSD update rules, over single targets or target families."""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .kernels import median_bandwidth
from .ksd import amortized_ksd_update, ksd_u_statistic
from .svgd import stein_gradient_entropy
from .util import array_hash, child_rng, require_finite

UPDATE_RULES = ("chain", "full", "linearized", "aksd")


class SamplerModel:
    """A parametric sampler z = f(xi; params) with reverse-mode support.

    Implementations provide `dim`, a flat `params` property (get/set),
    `draw_seeds(rng, m, target)`, `forward(target, seeds) -> (z, tape)` with
    z of shape (m, d), and `jacobian_transpose_apply(tape, v, aggregate)`
    returning sum_i J_i^T v_i (aggregate) or the per-seed rows J_i^T v_i.
    Forward is a deterministic function of (params, seeds).
    """

    dim: int

    @property
    def params(self) -> np.ndarray:
        raise NotImplementedError

    @params.setter
    def params(self, value):
        raise NotImplementedError

    def draw_seeds(self, rng: np.random.Generator, m: int, target=None):
        raise NotImplementedError

    def forward(self, target, seeds):
        raise NotImplementedError

    def jacobian_transpose_apply(self, tape, v, aggregate: bool = True):
        raise NotImplementedError

    def stein_param_grad(self, target, seeds, alpha: float = 0.0, bandwidth: float | None = None):
        """Ascent direction sum_i J_i^T phi(z_i); the chain-rule projection.

        Subclasses with structured parameters (blockwise Langevin) override
        this; the default differentiates through the whole network.
        """
        z, tape = self.forward(target, seeds)
        phi = stein_gradient_entropy(z, target, bandwidth=bandwidth, alpha=alpha)
        return self.jacobian_transpose_apply(tape, phi)


@dataclass
class AffineTape:
    noise: np.ndarray  # (m, d)
    sigma: np.ndarray  # (d,), exp(log_sigma) snapshot


class AffineSampler(SamplerModel):
    """Tractable test instrument: z = mu + exp(log_sigma) * xi."""

    def __init__(self, mu, log_sigma):
        mu = np.atleast_1d(np.asarray(mu, dtype=np.float64))
        log_sigma = np.atleast_1d(np.asarray(log_sigma, dtype=np.float64))
        if mu.shape != log_sigma.shape or mu.ndim != 1:
            raise ValueError("mu and log_sigma must be equal-length vectors")
        self.mu = mu.copy()
        self.log_sigma = log_sigma.copy()

    @property
    def dim(self) -> int:
        return self.mu.shape[0]

    @property
    def params(self) -> np.ndarray:
        return np.concatenate([self.mu, self.log_sigma])

    @params.setter
    def params(self, value):
        value = np.asarray(value, dtype=np.float64)
        d = self.dim
        if value.shape != (2 * d,):
            raise ValueError(f"expected {2 * d} parameters")
        self.mu = value[:d].copy()
        self.log_sigma = value[d:].copy()

    def draw_seeds(self, rng: np.random.Generator, m: int, target=None) -> np.ndarray:
        return rng.standard_normal((m, self.dim))

    def forward(self, target, seeds):
        xi = np.asarray(seeds, dtype=np.float64)
        sigma = np.exp(self.log_sigma)
        return self.mu + sigma * xi, AffineTape(noise=xi, sigma=sigma)

    def jacobian_transpose_apply(self, tape: AffineTape, v, aggregate: bool = True):
        v = np.asarray(v, dtype=np.float64)
        sig_rows = tape.sigma * tape.noise * v  # d z / d log_sigma = sigma * xi
        if aggregate:
            return np.concatenate([np.sum(v, axis=0), np.sum(sig_rows, axis=0)])
        return np.hstack([v, sig_rows])


# ---------------------------------------------------------------------------
# Update rules.
# ---------------------------------------------------------------------------


def update_chain(model, target, seeds, step_size: float, alpha: float = 0.0,
                 bandwidth: float | None = None) -> np.ndarray:
    """One ascent step along the projected Stein gradient; returns new params."""
    return model.params + step_size * model.stein_param_grad(
        target, seeds, alpha=alpha, bandwidth=bandwidth
    )


def update_full(model, target, seeds, step_size: float, inner_steps: int = 1,
                inner_step_size: float = 0.5, alpha: float = 0.0,
                bandwidth: float | None = None) -> np.ndarray:
    """Full projection: chase the moved particles with an inner least-squares solve.

    Freezes per-seed targets z' = z + eps*phi(z), then runs `inner_steps`
    gradient-descent steps (rate `inner_step_size`) on sum_i ||f(xi_i) - z'_i||^2
    over the sampler parameters, seeds fixed. With one inner step at rate 1/2
    the move equals the chain-rule update. The model is left unchanged; the
    resulting parameters are returned.
    """
    if inner_steps < 1:
        raise ValueError("need at least one inner step")
    z0, _ = model.forward(target, seeds)
    phi = stein_gradient_entropy(z0, target, bandwidth=bandwidth, alpha=alpha)
    z_target = z0 + step_size * phi
    original = model.params
    params = original.copy()
    try:
        for _ in range(inner_steps):
            model.params = params
            z, tape = model.forward(target, seeds)
            grad = 2.0 * model.jacobian_transpose_apply(tape, z - z_target)
            params = params - inner_step_size * grad
    finally:
        model.params = original
    return params


def update_linearized(model, target, seeds, step_size: float, ridge: float = 1e-6,
                      alpha: float = 0.0, bandwidth: float | None = None,
                      max_params: int = 2000) -> np.ndarray:
    """Least-squares projection: solve min_delta sum_i ||J_i delta - phi_i||^2 + ridge||delta||^2.

    Assembles the dense (m*d, P) Jacobian via one reverse sweep per output
    coordinate and solves the normal equations; refuses parameter counts
    above `max_params`. With ridge=0 a singular normal matrix raises
    numpy.linalg.LinAlgError. Returns params + step_size * delta.
    """
    p_count = model.params.size
    if p_count > max_params:
        raise ValueError(f"parameter count {p_count} exceeds dense-solve cap {max_params}")
    z, tape = model.forward(target, seeds)
    m, d = z.shape
    phi = stein_gradient_entropy(z, target, bandwidth=bandwidth, alpha=alpha)
    jac = np.empty((m, d, p_count))
    basis = np.zeros((m, d))
    for l in range(d):
        basis[:, l] = 1.0
        jac[:, l, :] = model.jacobian_transpose_apply(tape, basis, aggregate=False)
        basis[:, l] = 0.0
    a = jac.reshape(m * d, p_count)
    normal = a.T @ a
    if ridge:
        normal[np.diag_indices_from(normal)] += ridge
    delta = np.linalg.solve(normal, a.T @ phi.reshape(-1))
    return model.params + step_size * delta


# ---------------------------------------------------------------------------
# Training loop.
# ---------------------------------------------------------------------------


@dataclass
class TrainConfig:
    """Knobs for the amortized training loop.

    `rule` is one of chain | full | linearized | aksd. Seeds (and the target,
    when training on a family) are redrawn every iteration from streams
    derived from `seed`; the held-out KSD monitor uses its own fixed batch.
    `eval_every` thins the metrics log; a row is always written for the last
    iteration. With `record_timings` False the seconds column is written as
    0.0 so repeated runs are byte-identical.
    """

    iterations: int
    batch_size: int = 100
    step_size: float = 1e-3
    rule: str = "chain"
    alpha: float = 0.0
    inner_steps: int = 1
    inner_step_size: float = 0.5
    ridge: float = 1e-6
    seed: int = 0
    eval_every: int = 1
    eval_batch_size: int = 200
    record_timings: bool = False

    def __post_init__(self):
        if self.iterations < 0:
            raise ValueError("iterations must be nonnegative")
        if self.batch_size < 1 or self.eval_batch_size < 2:
            raise ValueError("batch sizes out of range")
        if not self.step_size > 0:
            raise ValueError("step_size must be positive")
        if self.rule not in UPDATE_RULES:
            raise ValueError(f"unknown update rule {self.rule!r}")
        if self.inner_steps < 1 or self.eval_every < 1:
            raise ValueError("inner_steps and eval_every must be >= 1")
        if self.alpha < 0:
            raise ValueError("alpha must be nonnegative")


@dataclass
class TrainResult:
    params: np.ndarray
    metrics: list = field(default_factory=list)


def _one_update(model, target, seeds, cfg: TrainConfig) -> np.ndarray:
    if cfg.rule == "chain":
        return update_chain(model, target, seeds, cfg.step_size, alpha=cfg.alpha)
    if cfg.rule == "full":
        return update_full(model, target, seeds, cfg.step_size,
                           inner_steps=cfg.inner_steps,
                           inner_step_size=cfg.inner_step_size, alpha=cfg.alpha)
    if cfg.rule == "linearized":
        return update_linearized(model, target, seeds, cfg.step_size, ridge=cfg.ridge,
                                 alpha=cfg.alpha)
    return model.params + amortized_ksd_update(model, target, seeds, cfg.step_size)


def train(model, target_or_family, cfg: TrainConfig) -> TrainResult:
    """Amortized training over a fixed target or a family of targets.

    Families are anything with a draw(rng) -> TargetDensity method; a fresh
    target is drawn each iteration. Metrics rows carry (iteration, rule,
    held-out KSD U-statistic, seconds, target-parameter hash). Non-finite
    parameters abort with DivergenceError carrying the iteration index.
    """
    is_family = hasattr(target_or_family, "draw")
    eval_target = (
        target_or_family.draw(child_rng(cfg.seed, 101)) if is_family else target_or_family
    )
    eval_seeds = model.draw_seeds(child_rng(cfg.seed, 102), cfg.eval_batch_size,
                                  target=eval_target)

    def held_out_ksd() -> float:
        z, _ = model.forward(eval_target, eval_seeds)
        return ksd_u_statistic(z, eval_target, median_bandwidth(z)).value

    metrics: list[dict] = []
    start = time.perf_counter()
    for t in range(cfg.iterations):
        rng_t = child_rng(cfg.seed, 7, t)
        target = target_or_family.draw(rng_t) if is_family else target_or_family
        seeds = model.draw_seeds(rng_t, cfg.batch_size, target=target)
        new_params = _one_update(model, target, seeds, cfg)
        require_finite(new_params, "sampler parameters", iteration=t)
        model.params = new_params
        if t % cfg.eval_every == 0 or t == cfg.iterations - 1:
            metrics.append({
                "iteration": t,
                "rule": cfg.rule,
                "ksd_u": held_out_ksd(),
                "seconds": time.perf_counter() - start if cfg.record_timings else 0.0,
                "theta_hash": array_hash(*target.param_arrays()),
            })
    return TrainResult(params=model.params, metrics=metrics)
