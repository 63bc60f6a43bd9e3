"""Power-decay baselines, moment oracles, sample sources, and eval protocols."""

import math

import numpy as np
import pytest

from steinsampler.baselines import (COSINE, IDENTITY, SQUARE, ExactMixtureSource,
                                    GaussianNoiseSource, LangevinSource, MomentSpec,
                                    PointMassSource, PowerDecaySchedule, classify_eval,
                                    exact_moments, exact_moments_gmm, exact_moments_rbm,
                                    grid_search_baseline, moment_mse, mse_table,
                                    power_decay_step, rbm_mixture_components)
from steinsampler.langevin import LangevinSampler, forward
from steinsampler.targets import (BayesLogReg, FixedTargetFamily, GaussBernoulliRBM,
                                  GaussianMixture, GMMFamily, LogRegFamily, sigmoid)
from steinsampler.util import child_rng


# ---------------------------------------------------------------------------
# Power-decay schedule.
# ---------------------------------------------------------------------------


def test_power_decay_step_closed_form():
    assert power_decay_step(0, 1, 0.55, 0) == 1.0
    assert power_decay_step(-2, 3, 0.5, 1) == pytest.approx(10.0**-2 / 2.0)
    assert power_decay_step(1, 0, 1.0, 4) == pytest.approx(10.0 / 4.0)


def test_power_decay_step_rejects_bad_indices():
    with pytest.raises(ValueError):
        power_decay_step(0, 0, 0.55, 0)  # t + b = 0
    with pytest.raises(ValueError):
        power_decay_step(0, 5, 0.55, -1)


def test_schedule_log_step_sizes_match_pointwise_steps():
    sched = PowerDecaySchedule(-1, 2, gamma=0.7)
    lam = sched.log_step_sizes(6)
    assert lam.shape == (6, 1)
    for t in range(6):
        assert math.exp(lam[t, 0]) == pytest.approx(sched.step_size(t), rel=1e-12)


def test_schedule_validity_window():
    assert PowerDecaySchedule(0, 1).valid_for(5)
    assert not PowerDecaySchedule(0, 0).valid_for(5)  # t=0 invalid
    assert not PowerDecaySchedule(0, -3).valid_for(5)
    with pytest.raises(ValueError):
        PowerDecaySchedule(0, 0).log_step_sizes(5)


def test_schedule_label():
    assert PowerDecaySchedule(-2, 4).label == "power(a=-2,b=4)"


# ---------------------------------------------------------------------------
# Moment specs.
# ---------------------------------------------------------------------------


def test_moment_spec_rejects_unknown_kind():
    with pytest.raises(ValueError):
        MomentSpec("cube")


def test_moment_spec_apply_matches_numpy():
    rng = np.random.default_rng(0)
    z = rng.standard_normal((40, 3))
    np.testing.assert_allclose(IDENTITY.apply(z), z.mean(axis=0), rtol=1e-15)
    np.testing.assert_allclose(SQUARE.apply(z), (z**2).mean(axis=0), rtol=1e-15)
    spec = MomentSpec("cosine", w=0.7, b=1.3)
    np.testing.assert_allclose(spec.apply(z), np.cos(0.7 * z + 1.3).mean(axis=0), rtol=1e-15)


def test_unresolved_cosine_rejects_apply_and_resolves_in_range():
    z = np.zeros((5, 2))
    with pytest.raises(ValueError):
        COSINE.apply(z)
    spec = COSINE.resolved(np.random.default_rng(3))
    assert spec.kind == "cosine" and spec.w is not None
    assert 0.0 <= spec.b < 2.0 * math.pi
    # resolving again is a no-op once (w, b) are set
    assert spec.resolved(np.random.default_rng(4)) is spec
    assert IDENTITY.resolved(np.random.default_rng(5)) is IDENTITY


def test_moment_spec_resolution_is_seeded():
    a = COSINE.resolved(np.random.default_rng(11))
    b = COSINE.resolved(np.random.default_rng(11))
    assert (a.w, a.b) == (b.w, b.b)


# ---------------------------------------------------------------------------
# Exact moment oracles, checked against 1-d quadrature.
# ---------------------------------------------------------------------------


def quad_moment_gmm_1d(means, sigma, fn, span=12.0, points=240_001):
    """Trapezoid quadrature of E[fn(z)] under an equal-weight 1-d mixture."""
    z = np.linspace(-span, span, points)
    dens = np.zeros_like(z)
    for m in np.asarray(means).ravel():
        dens += np.exp(-0.5 * ((z - m) / sigma) ** 2)
    dens /= sigma * math.sqrt(2.0 * math.pi) * len(np.asarray(means).ravel())
    return float(np.trapezoid(fn(z) * dens, z))


def test_gmm_moments_match_quadrature():
    means = np.array([[-1.2], [0.3], [2.0]])
    gmm = GaussianMixture(means, sigma=0.6)
    spec_cos = MomentSpec("cosine", w=1.4, b=0.5)
    for spec, fn in ((IDENTITY, lambda z: z), (SQUARE, lambda z: z * z),
                     (spec_cos, lambda z: np.cos(1.4 * z + 0.5))):
        exact = exact_moments_gmm(gmm, spec)
        quad = quad_moment_gmm_1d(means, 0.6, fn)
        assert exact.shape == (1,)
        assert exact[0] == pytest.approx(quad, abs=1e-9)


def test_gmm_cosine_moment_unit_case():
    # single component at 0, sigma=1, w=1, b=0: E[cos z] = exp(-1/2)
    gmm = GaussianMixture(np.zeros((1, 1)), sigma=1.0)
    spec = MomentSpec("cosine", w=1.0, b=0.0)
    assert exact_moments_gmm(gmm, spec)[0] == pytest.approx(math.exp(-0.5), rel=1e-12)


def test_gmm_moments_are_coordinatewise():
    means = np.array([[0.5, -1.0], [1.5, 2.0]])
    gmm = GaussianMixture(means, sigma=0.3)
    out = exact_moments_gmm(gmm, IDENTITY)
    np.testing.assert_allclose(out, means.mean(axis=0), rtol=1e-14)
    out2 = exact_moments_gmm(gmm, SQUARE)
    np.testing.assert_allclose(out2, 0.09 + (means**2).mean(axis=0), rtol=1e-14)


def example_rbm():
    rng = np.random.default_rng(7)
    coupling = 0.2 * rng.choice([-1.0, 1.0], size=(2, 3))
    return GaussBernoulliRBM(coupling, rng.standard_normal(2), rng.standard_normal(3))


def test_rbm_mixture_weights_normalized():
    rbm = example_rbm()
    weights, means = rbm_mixture_components(rbm)
    assert weights.shape == (8,) and means.shape == (8, 2)
    assert np.all(weights > 0)
    assert weights.sum() == pytest.approx(1.0, rel=1e-14)


def test_rbm_moments_match_grid_quadrature():
    """Enumeration oracle vs direct 2-d quadrature of the stated log-density."""
    rbm = example_rbm()
    span, n = 9.0, 601
    g = np.linspace(-span, span, n)
    zz = np.stack(np.meshgrid(g, g, indexing="ij"), axis=-1).reshape(-1, 2)
    logd = rbm.log_density_unnorm(zz)
    dens = np.exp(logd - logd.max()).reshape(n, n)
    cell = (g[1] - g[0]) ** 2
    total = dens.sum() * cell
    for spec, fn in ((IDENTITY, lambda z: z), (SQUARE, lambda z: z * z)):
        exact = exact_moments_rbm(rbm, spec)
        h = fn(zz).reshape(n, n, 2)
        quad = (h * dens[..., None]).sum(axis=(0, 1)) * cell / total
        np.testing.assert_allclose(exact, quad, atol=5e-7)


def test_rbm_enumeration_cap():
    rbm = GaussBernoulliRBM(np.zeros((2, 21)), np.zeros(2), np.zeros(21))
    with pytest.raises(ValueError):
        rbm_mixture_components(rbm)


def test_exact_moments_dispatch():
    gmm = GaussianMixture(np.zeros((1, 2)), sigma=1.0)
    np.testing.assert_allclose(exact_moments(gmm, SQUARE), np.ones(2), rtol=1e-14)
    rbm = example_rbm()
    np.testing.assert_allclose(exact_moments(rbm, IDENTITY), exact_moments_rbm(rbm, IDENTITY))
    with pytest.raises(TypeError):
        exact_moments(object(), IDENTITY)


def test_moment_mse_hand_value():
    assert moment_mse(np.array([1.0, 2.0]), np.zeros(2)) == pytest.approx(2.5)


# ---------------------------------------------------------------------------
# Sample sources.
# ---------------------------------------------------------------------------


def test_langevin_source_requires_exactly_one_spec():
    with pytest.raises(ValueError):
        LangevinSource()
    with pytest.raises(ValueError):
        LangevinSource(log_step_sizes=np.zeros((3, 1)), schedule=PowerDecaySchedule(0, 1),
                       steps=3)
    with pytest.raises(ValueError):
        LangevinSource(schedule=PowerDecaySchedule(0, 1))  # steps missing


def test_langevin_source_draw_matches_manual_forward():
    target = GaussianMixture(np.array([[0.4, -0.2]]), sigma=0.8)
    sched = PowerDecaySchedule(-1, 1)
    src = LangevinSource(schedule=sched, steps=5)
    z = src.draw(target, 7, np.random.default_rng(99))

    sampler = LangevinSampler(5, 2, block_size=5, log_step_sizes=sched.log_step_sizes(5))
    seeds = sampler.draw_seeds(np.random.default_rng(99), 7, target=target)
    z_manual, _ = forward(sampler, target, seeds)
    np.testing.assert_array_equal(z, z_manual)
    assert z.shape == (7, 2)


def test_langevin_source_refinement_appends_steps():
    base = PowerDecaySchedule(-1, 1)
    refine = PowerDecaySchedule(-2, 1)
    src = LangevinSource(schedule=base, steps=4, refine_schedule=refine, refine_steps=3)
    assert src.steps == 7

    manual = np.vstack([base.log_step_sizes(4), refine.log_step_sizes(3)])
    twin = LangevinSource(log_step_sizes=manual)
    target = GaussianMixture(np.array([[1.0]]), sigma=0.5)
    np.testing.assert_array_equal(src.draw(target, 5, np.random.default_rng(1)),
                                  twin.draw(target, 5, np.random.default_rng(1)))
    with pytest.raises(ValueError):
        LangevinSource(schedule=base, steps=4, refine_steps=3)


def test_langevin_source_labels_and_from_sampler():
    assert LangevinSource(schedule=PowerDecaySchedule(0, 1), steps=2).label == "power(a=0,b=1)"
    assert LangevinSource(log_step_sizes=np.zeros((2, 1))).label == "trained"
    sampler = LangevinSampler(3, 2, block_size=3, init_scale=0.5)
    src = LangevinSource.from_sampler(sampler, label="mine")
    assert src.label == "mine" and src.steps == 3 and src.init_scale == 0.5


def test_langevin_source_dimension_mismatch():
    src = LangevinSource(log_step_sizes=np.zeros((2, 3)))
    target = GaussianMixture(np.zeros((1, 2)), sigma=1.0)
    with pytest.raises(ValueError):
        src.draw(target, 4, np.random.default_rng(0))


def test_exact_mixture_source_hits_exact_moments():
    gmm = GaussianMixture(np.array([[-1.0, 0.5], [1.0, 1.5]]), sigma=0.4)
    z = ExactMixtureSource().draw(gmm, 200_000, np.random.default_rng(5))
    exact = exact_moments_gmm(gmm, IDENTITY)
    se = z.std(axis=0) / math.sqrt(z.shape[0])
    assert np.all(np.abs(z.mean(axis=0) - exact) < 4.0 * se)
    with pytest.raises(TypeError):
        ExactMixtureSource().draw(object(), 3, np.random.default_rng(0))


def test_point_mass_and_noise_sources():
    target = GaussianMixture(np.zeros((1, 3)), sigma=1.0)
    z = PointMassSource(np.array([1.0, 2.0, 3.0])).draw(target, 4, np.random.default_rng(0))
    np.testing.assert_array_equal(z, np.tile([1.0, 2.0, 3.0], (4, 1)))

    rng = np.random.default_rng(8)
    z2 = GaussianNoiseSource(scale=2.0).draw(target, 6, rng)
    np.testing.assert_array_equal(
        z2, 2.0 * np.random.default_rng(8).standard_normal((6, 3)))


# ---------------------------------------------------------------------------
# MSE table protocol.
# ---------------------------------------------------------------------------


def small_gmm_family():
    return GMMFamily(dim=2, components=3, sigma=0.5)


def test_mse_table_shape_and_columns():
    fam = small_gmm_family()
    rows = mse_table([ExactMixtureSource(), PointMassSource(np.zeros(2))], fam,
                     [IDENTITY, SQUARE], [50, 100], trials=3, seed=2)
    assert len(rows) == 2 * 2 * 2 * 3
    expected = {"family", "method", "T", "spec", "n", "trial", "value"}
    assert all(set(r) == expected for r in rows)
    assert {r["method"] for r in rows} == {"exact", "point_mass"}
    assert {r["n"] for r in rows} == {50, 100}


def test_mse_table_is_deterministic():
    fam = small_gmm_family()
    args = ([ExactMixtureSource()], fam, [IDENTITY], [40])
    rows_a = mse_table(*args, trials=2, seed=9)
    rows_b = mse_table(*args, trials=2, seed=9)
    assert rows_a == rows_b


def test_mse_table_separates_good_from_degenerate_source():
    """The i.i.d. sampler must dominate a point mass on second moments."""
    fam = small_gmm_family()
    rows = mse_table([ExactMixtureSource(), PointMassSource(np.zeros(2))], fam,
                     [SQUARE], [400], trials=4, seed=12)
    mean = {m: np.mean([r["value"] for r in rows if r["method"] == m])
            for m in ("exact", "point_mass")}
    assert mean["exact"] < mean["point_mass"]
    assert mean["point_mass"] > 0.0625  # at least sigma^2 squared per coordinate


def test_mse_table_requires_trials():
    with pytest.raises(ValueError):
        mse_table([ExactMixtureSource()], small_gmm_family(), [IDENTITY], [10],
                  trials=0, seed=0)


def test_mse_table_resolves_cosine_per_trial_shared_across_sources():
    fam = small_gmm_family()
    rows = mse_table([ExactMixtureSource()], fam, [COSINE], [100_000], trials=2, seed=4)
    # an i.i.d. sampler at n=1e5 must nail whatever (w, b) was resolved
    assert all(r["value"] < 1e-3 for r in rows)


# ---------------------------------------------------------------------------
# Grid search.
# ---------------------------------------------------------------------------


def test_grid_search_single_cell():
    fam = small_gmm_family()
    res = grid_search_baseline(fam, steps=4, seed=1, a_values=(0,), b_values=(1,),
                               n_train_draws=2, n_samples=50)
    assert res.best == PowerDecaySchedule(0, 1)
    assert len(res.rows) == 2 * 2  # draws x specs
    assert res.score == pytest.approx(np.mean([r["value"] for r in res.rows]))


def test_grid_search_skips_invalid_cells_and_scans_sorted():
    fam = small_gmm_family()
    res = grid_search_baseline(fam, steps=3, seed=1, a_values=(0, -1), b_values=(0, 1),
                               n_train_draws=1, n_samples=30)
    # b=0 cells are invalid at t=0 and must be skipped; scan order sorted by (a, b)
    seen = []
    for r in res.rows:
        if r["method"] not in seen:
            seen.append(r["method"])
    assert seen == ["power(a=-1,b=1)", "power(a=0,b=1)"]


def test_grid_search_no_valid_cells():
    with pytest.raises(ValueError):
        grid_search_baseline(small_gmm_family(), steps=3, seed=0,
                             a_values=(0,), b_values=(0,))


def test_grid_search_rejects_unknown_objective():
    with pytest.raises(ValueError):
        grid_search_baseline(small_gmm_family(), steps=3, seed=0, objective="banana")


def test_grid_search_picks_obviously_better_cell():
    """A schedule too small to move the chains loses to a working one."""
    target = GaussianMixture(np.array([[4.0]]), sigma=0.4)
    fam = FixedTargetFamily(target)
    res = grid_search_baseline(fam, steps=8, seed=3, a_values=(-6, -1), b_values=(1,),
                               n_train_draws=3, n_samples=200)
    assert res.best == PowerDecaySchedule(-1, 1)


def test_grid_search_classify_objective_runs():
    fam = LogRegFamily(n_points=60, n_features=3, minibatch_size=10)
    res = grid_search_baseline(fam, steps=3, seed=5, a_values=(-2, -1), b_values=(1,),
                               objective="classify", n_train_draws=2, n_posterior=20)
    assert math.isfinite(res.score)
    assert {r["spec"] for r in res.rows} == {"neg_test_loglik"}
    assert len(res.rows) == 2 * 2  # cells x draws


# ---------------------------------------------------------------------------
# Classification evaluation.
# ---------------------------------------------------------------------------


def synthetic_task(seed, n=80, p=3):
    rng = np.random.default_rng(seed)
    w = rng.standard_normal(p)
    X = rng.standard_normal((n, p))
    y = (rng.uniform(size=n) < sigmoid(X @ w)).astype(np.float64)
    task = BayesLogReg.from_data(X[:60], y[:60], test_features=X[60:], test_labels=y[60:])
    return task, w


def test_classify_eval_scores_and_rows():
    task, w = synthetic_task(21)
    point = PointMassSource(np.append(w, 0.0), label="truth")  # bias coordinate 0
    res = classify_eval(point, [task], n_samples=10, seed=0)
    assert 0.0 <= res.accuracy <= 1.0
    assert res.log_likelihood <= 0.0
    assert len(res.rows) == 2
    assert {r["spec"] for r in res.rows} == {"accuracy", "test_loglik"}


def test_classify_eval_true_weights_beat_noise():
    tasks = [synthetic_task(s)[0] for s in (31, 32, 33)]
    w_point = PointMassSource(np.append(synthetic_task(31)[1], 0.0))
    # use per-task truth: evaluate each separately so the point mass matches
    noise = GaussianNoiseSource(scale=5.0)
    wins = 0
    for s, task in zip((31, 32, 33), tasks):
        truth = PointMassSource(np.append(synthetic_task(s)[1], 0.0))
        r_truth = classify_eval(truth, [task], n_samples=5, seed=1)
        r_noise = classify_eval(noise, [task], n_samples=200, seed=1)
        wins += r_truth.log_likelihood > r_noise.log_likelihood
    assert wins == 3
    assert w_point.steps == 0


def test_classify_eval_requires_tasks_and_test_split():
    with pytest.raises(ValueError):
        classify_eval(GaussianNoiseSource(), [], n_samples=5, seed=0)
    rng = np.random.default_rng(0)
    no_test = BayesLogReg.from_data(rng.standard_normal((20, 2)),
                                    (rng.uniform(size=20) < 0.5).astype(np.float64))
    with pytest.raises(ValueError):
        classify_eval(GaussianNoiseSource(), [no_test], n_samples=5, seed=0)


def test_classify_eval_paired_rng_by_task_index():
    task, _ = synthetic_task(41)
    src = LangevinSource(schedule=PowerDecaySchedule(-2, 1), steps=3)
    a = classify_eval(src, [task], n_samples=8, seed=6)
    b = classify_eval(src, [task], n_samples=8, seed=6)
    assert a.rows == b.rows
    manual = src.draw(task, 8, child_rng(6, 21, 0))
    probs = sigmoid(task.test_features @ manual.T).mean(axis=1)
    acc = float(np.mean((probs > 0.5) == (task.test_labels > 0.5)))
    assert a.accuracy == pytest.approx(acc)
