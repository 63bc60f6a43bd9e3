"""Unrolled Langevin sampler: forward pass, seed bundles, blockwise reverse mode."""

import json

import numpy as np
import pytest

from steinsampler.langevin import (LangevinSampler, SeedBundle, backprop,
                                   draw_seed_bundle, forward, param_grad)
from steinsampler.svgd import stein_gradient_entropy
from steinsampler.targets import (BayesLogReg, GaussianMixture, gaussian_target)
from steinsampler.util import DivergenceError


def make_gmm(rng, d=2):
    return GaussianMixture(rng.uniform(-1, 1, (3, d)), 0.5)


# ---------------------------------------------------------------------------
# Seed bundles.
# ---------------------------------------------------------------------------


def test_seed_bundle_shapes_and_determinism():
    rng1 = np.random.default_rng(0)
    rng2 = np.random.default_rng(0)
    b1 = draw_seed_bundle(rng1, m=7, steps=4, dim=3)
    b2 = draw_seed_bundle(rng2, m=7, steps=4, dim=3)
    assert b1.init_state.shape == (7, 3)
    assert b1.noise.shape == (4, 7, 3)
    assert b1.minibatches is None
    np.testing.assert_array_equal(b1.init_state, b2.init_state)
    np.testing.assert_array_equal(b1.noise, b2.noise)


def test_seed_bundle_init_scale_multiplies_start_state():
    b1 = draw_seed_bundle(np.random.default_rng(1), m=5, steps=2, dim=2, init_scale=1.0)
    b3 = draw_seed_bundle(np.random.default_rng(1), m=5, steps=2, dim=2, init_scale=3.0)
    np.testing.assert_allclose(b3.init_state, 3.0 * b1.init_state, rtol=1e-15)


def test_seed_bundle_draws_minibatches_only_for_minibatched_targets():
    rng = np.random.default_rng(2)
    X = rng.standard_normal((30, 2))
    y = (rng.uniform(size=30) < 0.5).astype(float)
    task = BayesLogReg.from_data(X, y, add_bias=False, minibatch_size=6)
    b = draw_seed_bundle(np.random.default_rng(3), m=4, steps=5, dim=2, target=task)
    assert b.minibatches is not None
    assert b.minibatches.shape == (5, 4, 6)
    assert b.minibatches.dtype.kind == "i"
    assert b.minibatches.min() >= 0 and b.minibatches.max() < 30

    plain = make_gmm(rng)
    b2 = draw_seed_bundle(np.random.default_rng(3), m=4, steps=5, dim=2, target=plain)
    assert b2.minibatches is None


def test_seed_bundle_validates_shapes():
    with pytest.raises(ValueError):
        SeedBundle(np.zeros((3, 2)), np.zeros((4, 5, 2)))   # m mismatch
    with pytest.raises(ValueError):
        SeedBundle(np.zeros((3, 2)), np.zeros((4, 3, 1)))   # dim mismatch


# ---------------------------------------------------------------------------
# Forward pass.
# ---------------------------------------------------------------------------


def test_forward_matches_manual_unroll():
    rng = np.random.default_rng(4)
    target = make_gmm(rng)
    s = LangevinSampler(steps=6, dim=2, block_size=3, init_log_step=np.log(0.02))
    s.log_step_sizes += 0.2 * rng.standard_normal(s.log_step_sizes.shape)
    seeds = s.draw_seeds(np.random.default_rng(5), 8, target=target)
    got, tape = forward(s, target, seeds)

    z = seeds.init_state.copy()
    for t in range(6):
        eta = np.exp(s.log_step_sizes[t])
        z = z + eta * target.score(z) + np.sqrt(2 * eta) * seeds.noise[t]
    np.testing.assert_array_equal(got, z)
    np.testing.assert_array_equal(tape.states[0], seeds.init_state)
    np.testing.assert_array_equal(tape.states[-1], got)
    assert tape.states.shape == (7, 8, 2)
    assert tape.scores.shape == (6, 8, 2)


def test_forward_consumes_per_step_minibatch_indices():
    rng = np.random.default_rng(6)
    X = rng.standard_normal((40, 2))
    y = (rng.uniform(size=40) < 0.5).astype(float)
    task = BayesLogReg.from_data(X, y, add_bias=False, minibatch_size=8)
    s = LangevinSampler(steps=4, dim=2, init_log_step=np.log(0.01))
    seeds = s.draw_seeds(np.random.default_rng(7), 5, target=task)
    got, _ = forward(s, task, seeds)

    z = seeds.init_state.copy()
    for t in range(4):
        eta = np.exp(s.log_step_sizes[t])
        z = z + eta * task.score(z, indices=seeds.minibatches[t]) \
            + np.sqrt(2 * eta) * seeds.noise[t]
    np.testing.assert_array_equal(got, z)


def test_forward_raises_structured_divergence_error():
    # enormous step sizes amplify the linear score until states overflow
    target = gaussian_target(np.zeros(1), 1e-4)
    s = LangevinSampler(steps=5, dim=1, init_log_step=368.0)
    seeds = s.draw_seeds(np.random.default_rng(8), 3, target=target)
    with np.errstate(all="ignore"):
        with pytest.raises(DivergenceError) as exc:
            forward(s, target, seeds)
    assert 0 <= exc.value.iteration < 5


def test_block_partitioning_covers_steps_with_remainder_last():
    s = LangevinSampler(steps=7, dim=1, block_size=3)
    target = gaussian_target(np.zeros(1), 1.0)
    seeds = s.draw_seeds(np.random.default_rng(9), 2, target=target)
    _, tape = forward(s, target, seeds)
    assert tape.blocks == ((0, 3), (3, 6), (6, 7))


def test_block_size_clamps_to_horizon():
    s = LangevinSampler(steps=3, dim=1, block_size=10)
    assert s.block_size == 3
    target = gaussian_target(np.zeros(1), 1.0)
    seeds = s.draw_seeds(np.random.default_rng(10), 2, target=target)
    _, tape = forward(s, target, seeds)
    assert tape.blocks == ((0, 3),)


# ---------------------------------------------------------------------------
# Reverse mode.
# ---------------------------------------------------------------------------


def block_output_fd(sampler, target, seeds, tape, block_index, upstream, eps=1e-6):
    """Finite differences of <upstream, block output> in the block's own
    log-step parameters, holding the block's input state frozen."""
    t_lo, t_hi = tape.blocks[block_index]
    lam0 = sampler.log_step_sizes.copy()
    cols = lam0.shape[1]

    def run_block(lam):
        z = tape.states[t_lo].copy()
        for t in range(t_lo, t_hi):
            idx = None if seeds.minibatches is None else seeds.minibatches[t]
            eta = np.exp(lam[t])
            z = z + eta * target.score(z, indices=idx) + np.sqrt(2 * eta) * seeds.noise[t]
        return float(np.sum(upstream * z))

    grad = np.zeros((t_hi - t_lo, cols))
    for t in range(t_lo, t_hi):
        for c in range(cols):
            lp = lam0.copy()
            lp[t, c] += eps
            lm = lam0.copy()
            lm[t, c] -= eps
            grad[t - t_lo, c] = (run_block(lp) - run_block(lm)) / (2 * eps)
    return grad


def test_backprop_matches_finite_differences_per_block():
    rng = np.random.default_rng(11)
    target = make_gmm(rng, d=3)
    s = LangevinSampler(steps=7, dim=3, block_size=3, init_log_step=np.log(0.03))
    s.log_step_sizes += 0.3 * rng.standard_normal(s.log_step_sizes.shape)
    seeds = s.draw_seeds(np.random.default_rng(12), 5, target=target)
    zT, tape = forward(s, target, seeds)
    for b in range(len(tape.blocks)):
        upstream = np.random.default_rng(20 + b).standard_normal(zT.shape)
        got = backprop(tape, upstream, b)
        fd = block_output_fd(s, target, seeds, tape, b, upstream)
        np.testing.assert_allclose(got, fd, rtol=1e-5, atol=1e-8)


def test_backprop_scalar_step_mode_sums_coordinate_contributions():
    rng = np.random.default_rng(13)
    target = make_gmm(rng, d=3)
    lam = np.log(0.02) + 0.1 * rng.standard_normal((5, 1))
    scalar = LangevinSampler(steps=5, dim=3, block_size=5, per_coordinate=False,
                             log_step_sizes=lam)
    vector = LangevinSampler(steps=5, dim=3, block_size=5, per_coordinate=True,
                             log_step_sizes=np.tile(lam, (1, 3)))
    seeds = scalar.draw_seeds(np.random.default_rng(14), 6, target=target)
    _, tape_s = forward(scalar, target, seeds)
    _, tape_v = forward(vector, target, seeds)
    upstream = rng.standard_normal((6, 3))
    gs = backprop(tape_s, upstream, 0)
    gv = backprop(tape_v, upstream, 0)
    np.testing.assert_allclose(gs[:, 0], gv.sum(axis=1), rtol=1e-12, atol=1e-14)


def test_backprop_rejects_bad_block_index():
    target = gaussian_target(np.zeros(1), 1.0)
    s = LangevinSampler(steps=4, dim=1, block_size=2)
    seeds = s.draw_seeds(np.random.default_rng(15), 3, target=target)
    _, tape = forward(s, target, seeds)
    with pytest.raises(ValueError):
        backprop(tape, np.zeros((3, 1)), 2)
    with pytest.raises(ValueError):
        backprop(tape, np.zeros((3, 1)), -1)


def test_param_grad_matches_blockwise_surrogate_finite_differences():
    rng = np.random.default_rng(16)
    target = make_gmm(rng, d=2)
    s = LangevinSampler(steps=6, dim=2, block_size=3, init_log_step=np.log(0.03))
    seeds = s.draw_seeds(np.random.default_rng(17), 5, target=target)
    _, tape = forward(s, target, seeds)
    got = param_grad(s, target, seeds)
    assert got.shape == s.log_step_sizes.shape
    fd = np.zeros_like(got)
    for b, (lo, hi) in enumerate(tape.blocks):
        phi = stein_gradient_entropy(tape.states[hi], target)
        fd[lo:hi] = block_output_fd(s, target, seeds, tape, b, phi)
    np.testing.assert_allclose(got, fd, rtol=1e-5, atol=1e-8)


def test_jacobian_transpose_apply_matches_full_depth_finite_differences():
    rng = np.random.default_rng(18)
    target = make_gmm(rng, d=2)
    s = LangevinSampler(steps=5, dim=2, block_size=2, per_coordinate=False,
                        init_log_step=np.log(0.02))
    seeds = s.draw_seeds(np.random.default_rng(19), 4, target=target)
    zT, tape = forward(s, target, seeds)
    v = rng.standard_normal(zT.shape)
    got = s.jacobian_transpose_apply(tape, v)
    lam0 = s.params.copy()

    def endpoint(lam):
        s.params = lam
        z, _ = forward(s, target, seeds)
        return float(np.sum(v * z))

    eps = 1e-6
    fd = np.array([(endpoint(lam0 + eps * e) - endpoint(lam0 - eps * e)) / (2 * eps)
                   for e in np.eye(lam0.size)])
    s.params = lam0
    np.testing.assert_allclose(got, fd, rtol=1e-5, atol=1e-8)


def test_jacobian_rows_sum_to_aggregate():
    rng = np.random.default_rng(20)
    target = make_gmm(rng, d=2)
    s = LangevinSampler(steps=4, dim=2, block_size=2)
    seeds = s.draw_seeds(np.random.default_rng(21), 6, target=target)
    zT, tape = forward(s, target, seeds)
    v = rng.standard_normal(zT.shape)
    rows = s.jacobian_transpose_apply(tape, v, aggregate=False)
    total = s.jacobian_transpose_apply(tape, v)
    assert rows.shape == (6, s.params.size)
    np.testing.assert_allclose(rows.sum(axis=0), total, rtol=1e-12, atol=1e-14)


# ---------------------------------------------------------------------------
# Parameter vector and checkpointing.
# ---------------------------------------------------------------------------


def test_params_round_trip_through_flat_vector():
    s = LangevinSampler(steps=3, dim=2)
    flat = s.params
    assert flat.shape == (6,)
    s2 = LangevinSampler(steps=3, dim=2)
    s2.params = flat + 1.0
    np.testing.assert_array_equal(s2.log_step_sizes, s.log_step_sizes + 1.0)


def test_checkpoint_round_trip_preserves_exact_floats(tmp_path):
    rng = np.random.default_rng(22)
    s = LangevinSampler(steps=4, dim=3, block_size=2, init_scale=1.5)
    s.log_step_sizes += rng.standard_normal(s.log_step_sizes.shape)
    path = tmp_path / "ckpt.json"
    s.save(path)
    s2 = LangevinSampler.load(path)
    assert s2.steps == 4 and s2.dim == 3 and s2.block_size == 2
    assert s2.init_scale == 1.5
    np.testing.assert_array_equal(s2.log_step_sizes, s.log_step_sizes)


def test_checkpoint_rejects_unknown_format_version(tmp_path):
    s = LangevinSampler(steps=2, dim=1)
    path = tmp_path / "ckpt.json"
    s.save(path)
    blob = json.loads(path.read_text())
    blob["format_version"] = 99
    path.write_text(json.dumps(blob))
    with pytest.raises(ValueError):
        LangevinSampler.load(path)


def test_scalar_mode_stores_one_column():
    s = LangevinSampler(steps=5, dim=4, per_coordinate=False)
    assert s.log_step_sizes.shape == (5, 1)
    assert not s.per_coordinate
    v = LangevinSampler(steps=5, dim=4, per_coordinate=True)
    assert v.log_step_sizes.shape == (5, 4)
    assert v.per_coordinate
