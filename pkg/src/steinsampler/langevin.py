"""Langevin dynamics as a T-layer stochastic network with learnable per-step
log step sizes, including tape-recorded forwards and blockwise reverse-mode
parameter gradients."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .amortize import SamplerModel
from .svgd import stein_gradient_entropy
from .util import DivergenceError

CHECKPOINT_VERSION = 1
DEFAULT_INIT_LOG_STEP = math.log(1e-3)


@dataclass
class SeedBundle:
    """All randomness of one forward batch: initial states, per-step noises,
    and (for stochastic-score targets) per-step minibatch indices.

    Arrays are batched over m chains: init_state (m, d), noise (T, m, d),
    minibatches (T, m, M) integer indices or None.
    """

    init_state: np.ndarray
    noise: np.ndarray
    minibatches: np.ndarray | None = None

    def __post_init__(self):
        self.init_state = np.asarray(self.init_state, dtype=np.float64)
        self.noise = np.asarray(self.noise, dtype=np.float64)
        if self.init_state.ndim != 2 or self.noise.ndim != 3:
            raise ValueError("init_state must be (m, d) and noise (T, m, d)")
        if self.noise.shape[1:] != self.init_state.shape:
            raise ValueError("noise and init_state shapes disagree")
        if self.minibatches is not None:
            self.minibatches = np.asarray(self.minibatches)
            if self.minibatches.shape[:2] != self.noise.shape[:2]:
                raise ValueError("minibatches must be (T, m, M)")

    @property
    def batch_size(self) -> int:
        return self.init_state.shape[0]

    @property
    def steps(self) -> int:
        return self.noise.shape[0]


def draw_seed_bundle(rng: np.random.Generator, m: int, steps: int, dim: int,
                     target=None, init_scale: float = 1.0) -> SeedBundle:
    """Draw a SeedBundle: z0 ~ init_scale * N(0, I), noises ~ N(0, I), and,
    when the target subsamples data, uniform-with-replacement minibatch
    indices per step per chain. Draw order is fixed for determinism."""
    z0 = init_scale * rng.standard_normal((m, dim))
    noise = rng.standard_normal((steps, m, dim))
    minibatches = None
    mb_size = getattr(target, "minibatch_size", None)
    if mb_size is not None:
        minibatches = rng.integers(0, target.n_data, size=(steps, m, mb_size))
    return SeedBundle(init_state=z0, noise=noise, minibatches=minibatches)


@dataclass
class ExecutionTape:
    """Record of one forward batch sufficient for exact reverse passes.

    states has T+1 entries (z^0 .. z^T); scores holds s(z^0) .. s(z^{T-1})
    as evaluated during the forward (on the recorded minibatches, if any);
    step_sizes is the eta = exp(lambda) snapshot the forward actually used.
    """

    states: np.ndarray  # (T+1, m, d)
    scores: np.ndarray  # (T, m, d)
    seeds: SeedBundle
    step_sizes: np.ndarray  # (T, d) or (T, 1)
    target: object
    blocks: tuple


def _block_bounds(steps: int, block_size: int) -> tuple:
    bounds = []
    t0 = 0
    while t0 < steps:
        bounds.append((t0, min(t0 + block_size, steps)))
        t0 = bounds[-1][1]
    return tuple(bounds)


class LangevinSampler(SamplerModel):
    """z^{t+1} = z^t + eta^t * score(z^t) + sqrt(2 eta^t) * xi^t, t < T,
    with eta^t = exp(lambda^t) learnable per step (and per coordinate unless
    scalar mode is chosen). Backprop is truncated at block boundaries of
    `block_size` layers; the final block is the remainder when T % K != 0.
    """

    def __init__(self, steps: int, dim: int, block_size: int = 5,
                 per_coordinate: bool = True, init_scale: float = 1.0,
                 init_log_step: float = DEFAULT_INIT_LOG_STEP,
                 log_step_sizes: np.ndarray | None = None):
        if steps < 1 or dim < 1:
            raise ValueError("steps and dim must be positive")
        if block_size < 1:
            raise ValueError("block_size must be positive")
        self.steps = steps
        self.dim = dim
        self.block_size = min(block_size, steps)
        self.init_scale = float(init_scale)
        if log_step_sizes is None:
            cols = dim if per_coordinate else 1
            self.log_step_sizes = np.full((steps, cols), float(init_log_step))
        else:
            lam = np.asarray(log_step_sizes, dtype=np.float64)
            if lam.shape not in ((steps, dim), (steps, 1)):
                raise ValueError(f"log_step_sizes must be ({steps}, {dim}) or ({steps}, 1)")
            self.log_step_sizes = lam.copy()

    @property
    def per_coordinate(self) -> bool:
        return self.log_step_sizes.shape[1] == self.dim

    @property
    def params(self) -> np.ndarray:
        return self.log_step_sizes.ravel().copy()

    @params.setter
    def params(self, value):
        value = np.asarray(value, dtype=np.float64)
        if value.size != self.log_step_sizes.size:
            raise ValueError(f"expected {self.log_step_sizes.size} parameters")
        self.log_step_sizes = value.reshape(self.log_step_sizes.shape).copy()

    def block_bounds(self) -> tuple:
        return _block_bounds(self.steps, self.block_size)

    def draw_seeds(self, rng: np.random.Generator, m: int, target=None) -> SeedBundle:
        return draw_seed_bundle(rng, m, self.steps, self.dim, target=target,
                                init_scale=self.init_scale)

    def forward(self, target, seeds: SeedBundle):
        return forward(self, target, seeds)

    def jacobian_transpose_apply(self, tape: ExecutionTape, v, aggregate: bool = True):
        grad = _reverse_sweep(tape, v, 0, tape.seeds.steps, aggregate=aggregate)
        if aggregate:
            return grad.ravel()
        return grad.reshape(tape.seeds.batch_size, -1)

    def stein_param_grad(self, target, seeds: SeedBundle, alpha: float = 0.0,
                         bandwidth: float | None = None) -> np.ndarray:
        return param_grad(self, target, seeds, alpha=alpha, bandwidth=bandwidth).ravel()

    # -- checkpointing ------------------------------------------------------

    def save(self, path) -> None:
        payload = {
            "format_version": CHECKPOINT_VERSION,
            "kind": "langevin_sampler",
            "steps": self.steps,
            "dim": self.dim,
            "block_size": self.block_size,
            "init_dist": {"kind": "normal", "scale": self.init_scale},
            "log_step_sizes": [[float(x) for x in row] for row in self.log_step_sizes],
        }
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            json.dump(payload, fh, indent=2)
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "LangevinSampler":
        with open(path, "r", encoding="utf-8") as fh:
            payload = json.load(fh)
        version = payload.get("format_version")
        if version != CHECKPOINT_VERSION:
            raise ValueError(f"unsupported checkpoint format_version: {version!r}")
        if payload.get("kind") != "langevin_sampler":
            raise ValueError(f"not a langevin sampler checkpoint: {payload.get('kind')!r}")
        lam = np.asarray(payload["log_step_sizes"], dtype=np.float64)
        return cls(
            steps=int(payload["steps"]),
            dim=int(payload["dim"]),
            block_size=int(payload["block_size"]),
            init_scale=float(payload["init_dist"]["scale"]),
            log_step_sizes=lam,
        )


def forward(sampler: LangevinSampler, target, seeds: SeedBundle):
    """Run the T Langevin steps, recording every intermediate on a tape.

    The result is a deterministic function of (lambda, seeds); a non-finite
    state raises DivergenceError carrying the offending step index.
    """
    if target.dim != sampler.dim:
        raise ValueError(f"target dimension {target.dim} != sampler dimension {sampler.dim}")
    if seeds.steps != sampler.steps or seeds.init_state.shape[1] != sampler.dim:
        raise ValueError("seed bundle shaped for a different sampler")
    eta = np.exp(sampler.log_step_sizes)  # (T, cols) snapshot
    root2 = np.sqrt(2.0 * eta)
    m = seeds.batch_size
    states = np.empty((sampler.steps + 1, m, sampler.dim))
    scores = np.empty((sampler.steps, m, sampler.dim))
    z = seeds.init_state.copy()
    states[0] = z
    for t in range(sampler.steps):
        idx = None if seeds.minibatches is None else seeds.minibatches[t]
        s = target.score(z, indices=idx)
        scores[t] = s
        z = z + eta[t] * s + root2[t] * seeds.noise[t]
        if not np.all(np.isfinite(z)):
            raise DivergenceError(f"non-finite state at step {t}", iteration=t)
        states[t + 1] = z
    tape = ExecutionTape(states=states, scores=scores, seeds=seeds, step_sizes=eta,
                         target=target, blocks=_block_bounds(sampler.steps, sampler.block_size))
    return states[-1], tape


def _reverse_sweep(tape: ExecutionTape, upstream, t_lo: int, t_hi: int,
                   aggregate: bool = True) -> np.ndarray:
    """Adjoint sweep from layer t_hi-1 down to t_lo.

    upstream is (m, d) at the output z^{t_hi}. Per layer, the lambda^t
    gradient is [eta^t * s(z^t) + (1/2) sqrt(2 eta^t) * xi^t] * a^{t+1}, and
    the adjoint propagates as a^t = a^{t+1} + H(z^t)(eta^t * a^{t+1}) using
    the tape's minibatch for the Hessian-vector product. Returns
    (t_hi - t_lo, cols) aggregated over the batch, or (m, t_hi - t_lo, cols).
    """
    a = np.asarray(upstream, dtype=np.float64)
    m, d = a.shape
    cols = tape.step_sizes.shape[1]
    rows = t_hi - t_lo
    out = np.empty((rows, cols)) if aggregate else np.empty((m, rows, cols))
    for t in range(t_hi - 1, t_lo - 1, -1):
        eta_t = tape.step_sizes[t]
        dz_dlam = eta_t * tape.scores[t] + 0.5 * np.sqrt(2.0 * eta_t) * tape.seeds.noise[t]
        contrib = dz_dlam * a  # (m, d)
        if cols == 1:
            row = contrib.sum(axis=1, keepdims=True)  # shared lambda across coords
        else:
            row = contrib
        if aggregate:
            out[t - t_lo] = row.sum(axis=0)
        else:
            out[:, t - t_lo, :] = row
        if t > t_lo:
            idx = None if tape.seeds.minibatches is None else tape.seeds.minibatches[t]
            a = a + tape.target.score_jvp(tape.states[t], eta_t * a, indices=idx)
    return out


def backprop(tape: ExecutionTape, upstream, block_index: int) -> np.ndarray:
    """Gradient of <upstream, block output> over the lambda rows of one block.

    The adjoint never crosses the block's input boundary; upstream is the
    (m, d) cotangent at the block's output states.
    """
    if not 0 <= block_index < len(tape.blocks):
        raise ValueError(f"block index {block_index} out of range")
    t_lo, t_hi = tape.blocks[block_index]
    return _reverse_sweep(tape, upstream, t_lo, t_hi, aggregate=True)


def param_grad(sampler: LangevinSampler, target, seeds: SeedBundle,
               alpha: float = 0.0, bandwidth: float | None = None) -> np.ndarray:
    """Blockwise-projected Stein gradient over the full (T, cols) lambda array.

    For each block, the Stein variational gradient of the m block-output
    particles is backpropagated through that block only, and batch
    contributions are summed. This is the ascent direction on lambda.
    """
    _, tape = forward(sampler, target, seeds)
    grad = np.empty_like(sampler.log_step_sizes)
    for b, (t_lo, t_hi) in enumerate(tape.blocks):
        z_out = tape.states[t_hi]
        phi = stein_gradient_entropy(z_out, target, bandwidth=bandwidth, alpha=alpha)
        grad[t_lo:t_hi] = backprop(tape, phi, b)
    return grad
