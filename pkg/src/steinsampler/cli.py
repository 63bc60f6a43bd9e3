"""Command-line front end: svgd-demo | train | eval | baseline | inspect.

Every command takes a JSON config (strictly validated: unknown keys are
rejected), an optional --seed override, and an output directory; each run
writes a manifest with the fully resolved configuration so it can be
reproduced byte-for-byte.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from . import __version__
from .amortize import UPDATE_RULES, AffineSampler, TrainConfig, train
from .baselines import (COSINE, IDENTITY, SQUARE, ExactMixtureSource, LangevinSource,
                        MomentSpec, PowerDecaySchedule, classify_eval, grid_search_baseline,
                        mse_table)
from .data_io import (METRICS_COLUMNS, MSE_COLUMNS, load_libsvm, write_csv,
                      write_manifest, write_particles_csv)
from .langevin import DEFAULT_INIT_LOG_STEP, LangevinSampler
from .svgd import svgd_run
from .targets import (BayesLogReg, GaussBernoulliRBM, GaussianMixture, GMMFamily,
                      LogRegFamily, RBMFamily, gaussian_target)
from .util import child_rng

_REQUIRED = object()


class ConfigError(Exception):
    """Configuration problem: exit code 2."""


class _Section:
    """Dict view that pops known keys and rejects leftovers."""

    def __init__(self, data, where: str):
        if not isinstance(data, dict):
            raise ConfigError(f"{where}: expected an object")
        self._data = dict(data)
        self._where = where

    def take(self, key: str, default=_REQUIRED, kind=None):
        if key not in self._data:
            if default is _REQUIRED:
                raise ConfigError(f"{self._where}: missing required key '{key}'")
            return default
        value = self._data.pop(key)
        if kind is not None and not self._matches(value, kind):
            raise ConfigError(f"{self._where}.{key}: expected {kind}")
        return value

    @staticmethod
    def _matches(value, kind) -> bool:
        if kind == "number":
            return isinstance(value, (int, float)) and not isinstance(value, bool)
        if kind == "int":
            return isinstance(value, int) and not isinstance(value, bool)
        if kind == "str":
            return isinstance(value, str)
        if kind == "bool":
            return isinstance(value, bool)
        if kind == "list":
            return isinstance(value, list)
        raise AssertionError(kind)

    def section(self, key: str, default=_REQUIRED) -> "_Section | None":
        value = self.take(key, default=default)
        if value is None:
            return None
        return _Section(value, f"{self._where}.{key}")

    def has(self, key: str) -> bool:
        return key in self._data

    def finish(self) -> None:
        if self._data:
            keys = ", ".join(sorted(self._data))
            raise ConfigError(f"{self._where}: unknown key(s): {keys}")


# ---------------------------------------------------------------------------
# Target / family builders.
# ---------------------------------------------------------------------------


def build_target(section: _Section, base_dir: str):
    """Construct a TargetDensity from a config object; returns (target, resolved)."""
    kind = section.take("kind", kind="str")
    if kind == "gaussian":
        mean = np.atleast_1d(np.asarray(section.take("mean", default=0.0), dtype=np.float64))
        sigma = float(section.take("sigma", default=1.0, kind="number"))
        section.finish()
        return gaussian_target(mean, sigma), {"kind": kind, "mean": mean.tolist(), "sigma": sigma}
    if kind == "gmm":
        means = np.asarray(section.take("means", kind="list"), dtype=np.float64)
        sigma = float(section.take("sigma", default=0.1, kind="number"))
        section.finish()
        return (GaussianMixture(means=np.atleast_2d(means), sigma=sigma),
                {"kind": kind, "means": np.atleast_2d(means).tolist(), "sigma": sigma})
    if kind == "rbm":
        coupling = np.asarray(section.take("coupling", kind="list"), dtype=np.float64)
        visible = np.asarray(section.take("visible_bias", kind="list"), dtype=np.float64)
        hidden = np.asarray(section.take("hidden_bias", kind="list"), dtype=np.float64)
        section.finish()
        return (GaussBernoulliRBM(coupling, visible, hidden),
                {"kind": kind, "coupling": coupling.tolist(), "visible_bias": visible.tolist(),
                 "hidden_bias": hidden.tolist()})
    if kind == "logreg":
        path = section.take("path", kind="str")
        dim_hint = section.take("dim_hint", default=None)
        prior = float(section.take("prior_precision", default=1.0, kind="number"))
        add_bias = bool(section.take("add_bias", default=True, kind="bool"))
        minibatch = section.take("minibatch_size", default=None)
        test_path = section.take("test_path", default=None)
        section.finish()
        full = os.path.join(base_dir, path)
        try:
            data = load_libsvm(full, dim_hint=dim_hint)
        except (OSError, ValueError) as exc:
            raise ConfigError(f"cannot load libsvm data from {full}: {exc}") from exc
        test_X = test_y = None
        if test_path is not None:
            test = load_libsvm(os.path.join(base_dir, test_path), dim_hint=data.dim)
            test_X, test_y = test.features, test.labels
        target = BayesLogReg.from_data(data.features, data.labels, prior_precision=prior,
                                       add_bias=add_bias, minibatch_size=minibatch,
                                       test_features=test_X, test_labels=test_y)
        return target, {"kind": kind, "path": path, "dim_hint": dim_hint,
                        "prior_precision": prior, "add_bias": add_bias,
                        "minibatch_size": minibatch, "test_path": test_path}
    raise ConfigError(f"unknown target kind {kind!r}")


def build_family(section: _Section):
    """Construct a target family; returns (family, resolved, sampler_dim)."""
    kind = section.take("kind", kind="str")
    if kind == "gmm":
        family = GMMFamily(
            dim=int(section.take("dim", kind="int")),
            components=int(section.take("components", default=10, kind="int")),
            sigma=float(section.take("sigma", default=0.1, kind="number")),
            mean_low=float(section.take("mean_low", default=-1.0, kind="number")),
            mean_high=float(section.take("mean_high", default=1.0, kind="number")),
        )
        section.finish()
        resolved = {"kind": kind, "dim": family.dim, "components": family.components,
                    "sigma": family.sigma, "mean_low": family.mean_low,
                    "mean_high": family.mean_high}
        return family, resolved, family.dim
    if kind == "rbm":
        family = RBMFamily(
            dim=int(section.take("dim", default=100, kind="int")),
            hidden=int(section.take("hidden", default=10, kind="int")),
            coupling_scale=float(section.take("coupling_scale", default=0.1, kind="number")),
        )
        section.finish()
        resolved = {"kind": kind, "dim": family.dim, "hidden": family.hidden,
                    "coupling_scale": family.coupling_scale}
        return family, resolved, family.dim
    if kind == "logreg":
        family = LogRegFamily(
            n_points=int(section.take("n_points", default=1000, kind="int")),
            n_features=int(section.take("n_features", default=20, kind="int")),
            prior_precision=float(section.take("prior_precision", default=1.0, kind="number")),
            add_bias=bool(section.take("add_bias", default=True, kind="bool")),
            minibatch_size=section.take("minibatch_size", default=100),
            test_fraction=float(section.take("test_fraction", default=0.2, kind="number")),
        )
        section.finish()
        resolved = {"kind": kind, "n_points": family.n_points, "n_features": family.n_features,
                    "prior_precision": family.prior_precision, "add_bias": family.add_bias,
                    "minibatch_size": family.minibatch_size,
                    "test_fraction": family.test_fraction}
        return family, resolved, family.n_features + (1 if family.add_bias else 0)
    raise ConfigError(f"unknown family kind {kind!r}")


def _load_config(path: str) -> dict:
    if path is None:
        raise ConfigError("--config is required for this command")
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc


def _out_dir(args) -> str:
    out = args.out or "."
    os.makedirs(out, exist_ok=True)
    return out


def _resolve_seed(args, cfg: _Section) -> int:
    seed = cfg.take("seed", default=0, kind="int")
    return int(args.seed) if args.seed is not None else int(seed)


_SPEC_NAMES = {"identity": IDENTITY, "square": SQUARE, "cosine": COSINE}


def _parse_specs(names) -> list[MomentSpec]:
    specs = []
    for name in names:
        if name not in _SPEC_NAMES:
            raise ConfigError(f"unknown moment spec {name!r}")
        specs.append(_SPEC_NAMES[name])
    return specs


# ---------------------------------------------------------------------------
# Commands.
# ---------------------------------------------------------------------------


def cmd_svgd_demo(args) -> int:
    cfg = _Section(_load_config(args.config), "config")
    seed = _resolve_seed(args, cfg)
    base_dir = os.path.dirname(os.path.abspath(args.config))
    target, target_resolved = build_target(cfg.section("target"), base_dir)
    particles = int(cfg.take("particles", default=100, kind="int"))
    init_scale = float(cfg.take("init_scale", default=1.0, kind="number"))
    steps = int(cfg.take("steps", default=500, kind="int"))
    step_size = float(cfg.take("step_size", default=1e-2, kind="number"))
    alpha = float(cfg.take("alpha", default=0.0, kind="number"))
    snapshot_every = int(cfg.take("snapshot_every", default=0, kind="int"))
    cfg.finish()

    out = _out_dir(args)
    rng = child_rng(seed, 1)
    init = init_scale * rng.standard_normal((particles, target.dim))

    def snapshot(t, z):
        if snapshot_every > 0 and (t + 1) % snapshot_every == 0:
            write_particles_csv(os.path.join(out, f"particles_{t + 1:06d}.csv"), z)

    final = svgd_run(init, target, steps, step_size, alpha=alpha, callback=snapshot)
    write_particles_csv(os.path.join(out, "particles_final.csv"), final)
    resolved = {"target": target_resolved, "particles": particles, "init_scale": init_scale,
                "steps": steps, "step_size": step_size, "alpha": alpha,
                "snapshot_every": snapshot_every, "seed": seed}
    write_manifest(os.path.join(out, "manifest.json"), "svgd-demo", resolved, seed)
    print(f"svgd-demo: wrote {os.path.join(out, 'particles_final.csv')}")
    return 0


def _build_sampler(section: _Section, dim: int):
    kind = section.take("kind", default="langevin", kind="str")
    if kind == "langevin":
        sampler = LangevinSampler(
            steps=int(section.take("steps", kind="int")),
            dim=dim,
            block_size=int(section.take("block_size", default=5, kind="int")),
            per_coordinate=bool(section.take("per_coordinate", default=True, kind="bool")),
            init_scale=float(section.take("init_scale", default=1.0, kind="number")),
            init_log_step=float(section.take("init_log_step", default=DEFAULT_INIT_LOG_STEP,
                                             kind="number")),
        )
        section.finish()
        resolved = {"kind": kind, "steps": sampler.steps, "block_size": sampler.block_size,
                    "per_coordinate": sampler.per_coordinate,
                    "init_scale": sampler.init_scale,
                    "init_log_step": float(sampler.log_step_sizes[0, 0])}
        return sampler, resolved
    if kind == "affine":
        mu = np.broadcast_to(np.asarray(section.take("mu", default=0.0), dtype=np.float64),
                             (dim,)).copy()
        log_sigma = np.broadcast_to(
            np.asarray(section.take("log_sigma", default=0.0), dtype=np.float64), (dim,)
        ).copy()
        section.finish()
        return AffineSampler(mu, log_sigma), {"kind": kind, "mu": mu.tolist(),
                                              "log_sigma": log_sigma.tolist()}
    raise ConfigError(f"unknown sampler kind {kind!r}")


def cmd_train(args) -> int:
    cfg = _Section(_load_config(args.config), "config")
    seed = _resolve_seed(args, cfg)
    base_dir = os.path.dirname(os.path.abspath(args.config))

    if cfg.has("target") == cfg.has("family"):
        raise ConfigError("config: provide exactly one of 'target' or 'family'")
    if cfg.has("target"):
        target_or_family, tf_resolved = build_target(cfg.section("target"), base_dir)
        dim = target_or_family.dim
        tf_key = "target"
    else:
        target_or_family, tf_resolved, dim = build_family(cfg.section("family"))
        tf_key = "family"

    sampler, sampler_resolved = _build_sampler(cfg.section("sampler"), dim)

    tr = cfg.section("train")
    rule = tr.take("rule", default="chain", kind="str")
    if args.update_rule is not None:
        rule = args.update_rule
    if rule not in UPDATE_RULES:
        raise ConfigError(f"unknown update rule {rule!r}")
    inner_steps = int(tr.take("inner_steps", default=1, kind="int"))
    if args.inner_steps is not None:
        inner_steps = int(args.inner_steps)
    try:
        train_cfg = TrainConfig(
            iterations=int(tr.take("iterations", kind="int")),
            batch_size=int(tr.take("batch_size", default=100, kind="int")),
            step_size=float(tr.take("step_size", default=1e-3, kind="number")),
            rule=rule,
            alpha=float(tr.take("alpha", default=0.0, kind="number")),
            inner_steps=inner_steps,
            inner_step_size=float(tr.take("inner_step_size", default=0.5, kind="number")),
            ridge=float(tr.take("ridge", default=1e-6, kind="number")),
            seed=seed,
            eval_every=int(tr.take("eval_every", default=1, kind="int")),
            eval_batch_size=int(tr.take("eval_batch_size", default=200, kind="int")),
            record_timings=bool(tr.take("record_timings", default=False, kind="bool")),
        )
    except ValueError as exc:
        raise ConfigError(f"config.train: {exc}") from exc
    tr.finish()
    cfg.finish()

    out = _out_dir(args)
    result = train(sampler, target_or_family, train_cfg)
    write_csv(os.path.join(out, "metrics.csv"), METRICS_COLUMNS, result.metrics)
    if isinstance(sampler, LangevinSampler):
        sampler.save(os.path.join(out, "checkpoint.json"))
    else:
        with open(os.path.join(out, "affine_params.json"), "w", encoding="utf-8",
                  newline="\n") as fh:
            json.dump({"format_version": 1, "kind": "affine_sampler",
                       "mu": sampler.mu.tolist(),
                       "log_sigma": sampler.log_sigma.tolist()}, fh, indent=2)
            fh.write("\n")

    resolved = {tf_key: tf_resolved, "sampler": sampler_resolved, "seed": seed,
                "train": {"iterations": train_cfg.iterations,
                          "batch_size": train_cfg.batch_size,
                          "step_size": train_cfg.step_size, "rule": train_cfg.rule,
                          "alpha": train_cfg.alpha, "inner_steps": train_cfg.inner_steps,
                          "inner_step_size": train_cfg.inner_step_size,
                          "ridge": train_cfg.ridge, "eval_every": train_cfg.eval_every,
                          "eval_batch_size": train_cfg.eval_batch_size,
                          "record_timings": train_cfg.record_timings}}
    write_manifest(os.path.join(out, "manifest.json"), "train", resolved, seed)
    last = result.metrics[-1]["ksd_u"] if result.metrics else float("nan")
    print(f"train: {train_cfg.iterations} iterations ({train_cfg.rule}), "
          f"final held-out ksd_u={last:.6g}")
    return 0


def _build_eval_source(cfg: _Section, args, base_dir: str):
    has_ckpt = cfg.has("checkpoint")
    has_sched = cfg.has("schedule")
    if has_ckpt == has_sched:
        raise ConfigError("config: provide exactly one of 'checkpoint' or 'schedule'")
    refine_sec = cfg.section("refine", default=None)
    refine_steps = 0
    refine_schedule = None
    refine_resolved = None
    if refine_sec is not None:
        refine_steps = int(refine_sec.take("steps", default=0, kind="int"))
        refine_schedule = PowerDecaySchedule(
            a=int(refine_sec.take("a", default=-2, kind="int")),
            b=int(refine_sec.take("b", default=1, kind="int")),
            gamma=float(refine_sec.take("gamma", default=0.55, kind="number")),
        )
        refine_sec.finish()
    if args.refine_steps is not None:
        refine_steps = int(args.refine_steps)
        if refine_schedule is None:
            refine_schedule = PowerDecaySchedule(a=-2, b=1, gamma=0.55)
    if refine_schedule is not None:
        refine_resolved = {"steps": refine_steps, "a": refine_schedule.a,
                           "b": refine_schedule.b, "gamma": refine_schedule.gamma}
    kwargs = {"refine_schedule": refine_schedule, "refine_steps": refine_steps}

    if has_ckpt:
        path = os.path.join(base_dir, cfg.take("checkpoint", kind="str"))
        try:
            sampler = LangevinSampler.load(path)
        except (OSError, ValueError, KeyError) as exc:
            raise ConfigError(f"cannot load checkpoint {path}: {exc}") from exc
        source = LangevinSource.from_sampler(sampler, label="trained", **kwargs)
        resolved = {"checkpoint": path}
    else:
        sched_sec = cfg.section("schedule")
        schedule = PowerDecaySchedule(a=int(sched_sec.take("a", kind="int")),
                                      b=int(sched_sec.take("b", kind="int")),
                                      gamma=float(sched_sec.take("gamma", default=0.55,
                                                                 kind="number")))
        steps = int(sched_sec.take("steps", kind="int"))
        init_scale = float(sched_sec.take("init_scale", default=1.0, kind="number"))
        sched_sec.finish()
        source = LangevinSource(schedule=schedule, steps=steps, init_scale=init_scale, **kwargs)
        resolved = {"schedule": {"a": schedule.a, "b": schedule.b, "gamma": schedule.gamma,
                                 "steps": steps, "init_scale": init_scale}}
    if refine_resolved is not None:
        resolved["refine"] = refine_resolved
    return source, resolved


def cmd_eval(args) -> int:
    cfg = _Section(_load_config(args.config), "config")
    seed = _resolve_seed(args, cfg)
    base_dir = os.path.dirname(os.path.abspath(args.config))
    source, source_resolved = _build_eval_source(cfg, args, base_dir)
    family, family_resolved, _ = build_family(cfg.section("family"))

    proto = cfg.section("protocol")
    proto_kind = proto.take("kind", default="moments", kind="str")
    out = _out_dir(args)
    if proto_kind == "moments":
        spec_names = proto.take("specs", default=["identity", "square", "cosine"], kind="list")
        n_list = [int(n) for n in proto.take("n_list", default=[100, 1000], kind="list")]
        trials = int(proto.take("trials", default=20, kind="int"))
        include_exact = bool(proto.take("include_exact", default=False, kind="bool"))
        proto.finish()
        cfg.finish()
        sources = [source] + ([ExactMixtureSource()] if include_exact else [])
        rows = mse_table(sources, family, _parse_specs(spec_names), n_list, trials, seed,
                         family_label=family_resolved["kind"])
        write_csv(os.path.join(out, "mse.csv"), MSE_COLUMNS, rows)
        resolved_proto = {"kind": proto_kind, "specs": spec_names, "n_list": n_list,
                          "trials": trials, "include_exact": include_exact}
        outfile = "mse.csv"
    elif proto_kind == "classify":
        n_tasks = int(proto.take("tasks", default=8, kind="int"))
        n_samples = int(proto.take("n_samples", default=100, kind="int"))
        proto.finish()
        cfg.finish()
        tasks = [family.draw(child_rng(seed, 20, i)) for i in range(n_tasks)]
        result = classify_eval(source, tasks, n_samples, seed,
                               family_label=family_resolved["kind"])
        write_csv(os.path.join(out, "classify.csv"), MSE_COLUMNS, result.rows)
        print(f"eval: accuracy={result.accuracy:.6g} test_loglik={result.log_likelihood:.6g}")
        resolved_proto = {"kind": proto_kind, "tasks": n_tasks, "n_samples": n_samples}
        outfile = "classify.csv"
    else:
        raise ConfigError(f"unknown protocol kind {proto_kind!r}")

    resolved = dict(source_resolved)
    resolved.update({"family": family_resolved, "protocol": resolved_proto, "seed": seed})
    write_manifest(os.path.join(out, "manifest.json"), "eval", resolved, seed)
    print(f"eval: wrote {os.path.join(out, outfile)}")
    return 0


def cmd_baseline(args) -> int:
    cfg = _Section(_load_config(args.config), "config")
    seed = _resolve_seed(args, cfg)
    family, family_resolved, _ = build_family(cfg.section("family"))
    steps = int(cfg.take("steps", kind="int"))
    grid_sec = cfg.section("grid", default=None)
    a_values = list(range(-6, 3))
    b_values = list(range(0, 10))
    gamma = 0.55
    if grid_sec is not None:
        a_values = [int(a) for a in grid_sec.take("a_values", default=a_values, kind="list")]
        b_values = [int(b) for b in grid_sec.take("b_values", default=b_values, kind="list")]
        gamma = float(grid_sec.take("gamma", default=0.55, kind="number"))
        grid_sec.finish()
    objective = cfg.take("objective", default="moments", kind="str")
    n_train_draws = int(cfg.take("n_train_draws", default=10, kind="int"))
    n_samples = int(cfg.take("n_samples", default=1000, kind="int"))
    n_posterior = int(cfg.take("n_posterior", default=100, kind="int"))
    spec_names = cfg.take("specs", default=["identity", "square"], kind="list")
    init_scale = float(cfg.take("init_scale", default=1.0, kind="number"))
    cfg.finish()
    if objective not in ("moments", "classify"):
        raise ConfigError(f"unknown grid objective {objective!r}")

    out = _out_dir(args)
    result = grid_search_baseline(family, steps, seed, a_values=a_values, b_values=b_values,
                                  gamma=gamma, n_train_draws=n_train_draws,
                                  n_samples=n_samples, specs=_parse_specs(spec_names),
                                  objective=objective, n_posterior=n_posterior,
                                  init_scale=init_scale,
                                  family_label=family_resolved["kind"])
    write_csv(os.path.join(out, "grid.csv"), MSE_COLUMNS, result.rows)
    with open(os.path.join(out, "best.json"), "w", encoding="utf-8", newline="\n") as fh:
        json.dump({"a": result.best.a, "b": result.best.b, "gamma": result.best.gamma,
                   "score": result.score}, fh, indent=2, sort_keys=True)
        fh.write("\n")
    resolved = {"family": family_resolved, "steps": steps,
                "grid": {"a_values": a_values, "b_values": b_values, "gamma": gamma},
                "objective": objective, "n_train_draws": n_train_draws,
                "n_samples": n_samples, "n_posterior": n_posterior, "specs": spec_names,
                "init_scale": init_scale, "seed": seed}
    write_manifest(os.path.join(out, "manifest.json"), "baseline", resolved, seed)
    print(f"baseline: best {result.best.label} score={result.score:.6g}")
    return 0


def cmd_inspect(args) -> int:
    try:
        sampler = LangevinSampler.load(args.checkpoint)
    except (OSError, ValueError, KeyError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot load checkpoint {args.checkpoint}: {exc}") from exc
    lam = sampler.log_step_sizes
    print(f"langevin sampler: steps={sampler.steps} dim={sampler.dim} "
          f"block_size={sampler.block_size} init_scale={sampler.init_scale} "
          f"per_coordinate={sampler.per_coordinate}")
    print("step  mean(lambda)  mean(eta)")
    for t in range(sampler.steps):
        print(f"{t:4d}  {float(np.mean(lam[t])):12.6f}  {float(np.mean(np.exp(lam[t]))):.6e}")
    return 0


# ---------------------------------------------------------------------------
# Parser and entry point.
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="steinsampler",
        description="Train and evaluate Langevin samplers with learnable step sizes "
                    "driven by Stein variational gradients.",
    )
    parser.add_argument("--version", action="version", version=f"steinsampler {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, refine=False, train_flags=False):
        p.add_argument("--config", help="path to the JSON run configuration")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--out", default=None, help="output directory (default: cwd)")
        if refine:
            p.add_argument("--refine-steps", type=int, default=None,
                           help="append N power-decay refinement steps before sampling")
        if train_flags:
            p.add_argument("--update-rule", choices=UPDATE_RULES, default=None,
                           help="override the configured update rule")
            p.add_argument("--inner-steps", type=int, default=None,
                           help="override the full-projection inner step count")

    p = sub.add_parser("svgd-demo", help="run plain SVGD and dump particle CSVs")
    common(p)
    p.set_defaults(func=cmd_svgd_demo)

    p = sub.add_parser("train", help="train a sampler; writes checkpoint + metrics.csv")
    common(p, train_flags=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint or schedule; writes CSV tables")
    common(p, refine=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("baseline", help="grid-search the power-decay baseline")
    common(p)
    p.set_defaults(func=cmd_baseline)

    p = sub.add_parser("inspect", help="print a checkpoint's step-size schedule")
    p.add_argument("checkpoint", help="path to a sampler checkpoint")
    p.set_defaults(func=cmd_inspect)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # runtime failure
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


def entrypoint() -> None:
    sys.exit(main())
