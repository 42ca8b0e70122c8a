"""Command line front end: batch experiments driven by small config files.

Configs are flat ``key = value`` text (``#`` starts a comment).  Keys are
dotted and strict: anything unrecognized is rejected so a typo cannot
silently fall back to a default.  Every output table echoes the fully
resolved configuration in its comment header, so a results file can be
regenerated from itself plus the package version.

Exit codes: 0 success, 2 config error, 3 certified-truncation failure,
4 more than half of the simulated runs hit the step cap.
"""

from __future__ import annotations

import argparse
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import __version__, _rng
from .environment import (
    BircParams,
    Environment,
    ModelParams,
    R1mParams,
    TailSpec,
    dump_environment,
    environment_seed,
    sample_log_rho0,
    sample_side_sums,
)
from .errors import CertificationError, ConfigError, PreconditionError, WindowCapError
from .exact import annealed_velocity, log_expected_hitting_time, predicted_exponent
from .stats import default_thresholds, scaling_slope, tail_exponent
from .walk import DEFAULT_STEP_CAP, final_position, simulate_hitting_times

_S_WALK = 29   # seed stream for walk replicas
_S_SWEEP = 31  # seed stream for sweep sub-experiments

_EXPERIMENTS = ("gen-env", "simulate", "exact-et", "scaling", "tails", "velocity", "sweep")
_TAIL_KINDS = ("rho0", "left-sum", "right-sum")

_BIRC_KEYS = frozenset({"model.delta", "model.alpha_inf", "model.alpha_zero", "model.weight_inf"})
_R1M_KEYS = frozenset({"model.lam", "model.lambda_c"})
_GLOBAL_KEYS = frozenset({
    "experiment", "model", "master_seed", "out",
    "environments", "replicas", "levels", "grid.n",
    "steps", "samples", "step_cap",
    "window.k_min", "window.k_max", "tails.kind",
    "tolerances.left_tol", "tolerances.sum_tol",
    "sweep.param", "sweep.values", "sweep.experiment",
})


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    params: ModelParams
    master_seed: int = 0
    out: str | None = None
    environments: int = 1
    replicas: int = 1
    levels: tuple[int, ...] = ()
    grid_n: tuple[int, ...] = ()
    steps: int = 1_000_000
    samples: int = 100_000
    step_cap: int = DEFAULT_STEP_CAP
    window: tuple[int, int] = (-64, 64)
    tails_kind: str = "rho0"
    left_tol: float = 1e-10
    sum_tol: float = 1e-10
    sweep_param: str | None = None
    sweep_values: tuple[float, ...] = ()
    sweep_experiment: str | None = None


# -- config parsing -------------------------------------------------------------


def parse_config_text(text: str) -> dict[str, str]:
    raw: dict[str, str] = {}
    for num, line in enumerate(text.splitlines(), 1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        key, sep, value = body.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key or not value:
            raise ConfigError(f"line {num}: expected 'key = value', got {line.strip()!r}")
        if key in raw:
            raise ConfigError(f"line {num}: duplicate key {key!r}")
        raw[key] = value
    return raw


def _get_int(raw, key, default):
    if key not in raw:
        return default
    try:
        return int(raw[key], 10)
    except ValueError:
        raise ConfigError(f"{key} must be an integer, got {raw[key]!r}") from None


def _get_float(raw, key, default=None):
    if key not in raw:
        if default is None:
            raise ConfigError(f"missing required key {key}")
        return default
    try:
        return float(raw[key])
    except ValueError:
        raise ConfigError(f"{key} must be a number, got {raw[key]!r}") from None


def _get_int_list(raw, key):
    if key not in raw:
        return ()
    try:
        vals = tuple(int(part.strip(), 10) for part in raw[key].split(","))
    except ValueError:
        raise ConfigError(f"{key} must be comma-separated integers, got {raw[key]!r}") from None
    if not vals or any(v < 1 for v in vals) or any(b <= a for a, b in zip(vals, vals[1:])):
        raise ConfigError(f"{key} must be positive and strictly increasing")
    return vals


def _build_params(raw) -> ModelParams:
    model = raw.get("model")
    if model not in ("birc", "r1m"):
        raise ConfigError("model must be 'birc' or 'r1m'")
    foreign = _R1M_KEYS if model == "birc" else _BIRC_KEYS
    bad = sorted(foreign & raw.keys())
    if bad:
        raise ConfigError(f"keys {bad} do not belong to model {model!r}")
    try:
        if model == "birc":
            if "model.delta" not in raw:
                raise ConfigError("model birc requires model.delta")
            tails = TailSpec(
                _get_float(raw, "model.alpha_inf"),
                _get_float(raw, "model.alpha_zero"),
                _get_float(raw, "model.weight_inf", math.nan)
                if "model.weight_inf" in raw else None,
            )
            return BircParams(_get_float(raw, "model.delta"), tails)
        if "model.lam" not in raw or "model.lambda_c" not in raw:
            raise ConfigError("model r1m requires model.lam and model.lambda_c")
        return R1mParams(_get_float(raw, "model.lam"), _get_float(raw, "model.lambda_c"))
    except PreconditionError as exc:
        raise ConfigError(str(exc)) from None


def build_config(
    raw: dict[str, str],
    experiment: str | None = None,
    master_seed: int | None = None,
    out: str | None = None,
) -> ExperimentConfig:
    """Resolve a raw key-value mapping (plus CLI overrides) into a validated
    ExperimentConfig.  Unknown keys, malformed values, missing required keys,
    and invalid model parameters all raise ConfigError."""
    unknown = sorted(set(raw) - _GLOBAL_KEYS - _BIRC_KEYS - _R1M_KEYS)
    if unknown:
        raise ConfigError(f"unknown keys: {unknown}")
    exp = experiment or raw.get("experiment")
    if exp is None:
        raise ConfigError("no experiment given (config key or subcommand)")
    if "experiment" in raw and experiment is not None and raw["experiment"] != experiment:
        raise ConfigError(
            f"config says experiment = {raw['experiment']!r} but {experiment!r} was requested"
        )
    if exp not in _EXPERIMENTS:
        raise ConfigError(f"unknown experiment {exp!r}")

    params = _build_params(raw)
    kind = raw.get("tails.kind", "rho0")
    if kind not in _TAIL_KINDS:
        raise ConfigError(f"tails.kind must be one of {_TAIL_KINDS}")
    k_min = _get_int(raw, "window.k_min", -64)
    k_max = _get_int(raw, "window.k_max", 64)
    if k_min > 0 or k_max < 0 or k_min >= k_max:
        raise ConfigError("window must satisfy k_min <= 0 <= k_max and k_min < k_max")

    cfg = ExperimentConfig(
        experiment=exp,
        params=params,
        master_seed=master_seed if master_seed is not None else _get_int(raw, "master_seed", 0),
        out=out if out is not None else raw.get("out"),
        environments=_get_int(raw, "environments", 1),
        replicas=_get_int(raw, "replicas", 1),
        levels=_get_int_list(raw, "levels"),
        grid_n=_get_int_list(raw, "grid.n"),
        steps=_get_int(raw, "steps", 1_000_000),
        samples=_get_int(raw, "samples", 100_000),
        step_cap=_get_int(raw, "step_cap", DEFAULT_STEP_CAP),
        window=(k_min, k_max),
        tails_kind=kind,
        left_tol=_get_float(raw, "tolerances.left_tol", 1e-10),
        sum_tol=_get_float(raw, "tolerances.sum_tol", 1e-10),
        sweep_param=raw.get("sweep.param"),
        sweep_values=tuple(
            float(p.strip()) for p in raw.get("sweep.values", "").split(",") if p.strip()
        ),
        sweep_experiment=raw.get("sweep.experiment"),
    )

    if cfg.environments < 1 or cfg.replicas < 1 or cfg.steps < 1 or cfg.step_cap < 1:
        raise ConfigError("environments, replicas, steps, step_cap must be >= 1")
    if not (cfg.left_tol > 0.0 and cfg.sum_tol > 0.0):
        raise ConfigError("tolerances must be positive")
    if exp == "simulate" and not cfg.levels:
        raise ConfigError("simulate requires levels")
    if exp in ("exact-et", "scaling") and not cfg.grid_n:
        raise ConfigError(f"{exp} requires grid.n")
    if exp == "scaling" and len(cfg.grid_n) < 3:
        raise ConfigError("scaling requires at least 3 grid points")
    if exp == "tails" and cfg.samples < 1000:
        raise ConfigError("tails requires samples >= 1000")
    if exp == "gen-env" and cfg.out is None:
        raise ConfigError("gen-env requires an output path")
    if exp == "sweep":
        if cfg.sweep_experiment not in _EXPERIMENTS or cfg.sweep_experiment in ("sweep", "gen-env"):
            raise ConfigError("sweep.experiment must name a non-sweep, non-gen-env experiment")
        legal = _BIRC_KEYS if params.model == "birc" else _R1M_KEYS
        if cfg.sweep_param not in legal:
            raise ConfigError(f"sweep.param must be one of {sorted(legal)}")
        if not cfg.sweep_values:
            raise ConfigError("sweep.values must be a nonempty comma list")
        if cfg.sweep_experiment == "simulate" and not cfg.levels:
            raise ConfigError("sweep over simulate requires levels")
        if cfg.sweep_experiment in ("exact-et", "scaling") and not cfg.grid_n:
            raise ConfigError("sweep over grid experiments requires grid.n")
    return cfg


def _with_param(params: ModelParams, name: str, value: float) -> ModelParams:
    try:
        if isinstance(params, BircParams):
            t = params.tails
            if name == "model.delta":
                return BircParams(value, t)
            if name == "model.alpha_inf":
                return BircParams(params.delta, TailSpec(value, t.alpha_zero, t.weight_inf))
            if name == "model.alpha_zero":
                return BircParams(params.delta, TailSpec(t.alpha_inf, value, t.weight_inf))
            if name == "model.weight_inf":
                return BircParams(params.delta, TailSpec(t.alpha_inf, t.alpha_zero, value))
        else:
            if name == "model.lam":
                return R1mParams(value, params.lambda_c)
            if name == "model.lambda_c":
                return R1mParams(params.lam, value)
    except PreconditionError as exc:
        raise ConfigError(f"sweep value {value!r} for {name}: {exc}") from None
    raise ConfigError(f"cannot sweep {name!r} for model {params.model!r}")


# -- output ---------------------------------------------------------------------


def _echo(cfg: ExperimentConfig) -> dict[str, str]:
    p = cfg.params
    e = {
        "experiment": cfg.experiment,
        "model": p.model,
        "master_seed": str(cfg.master_seed),
        "environments": str(cfg.environments),
        "replicas": str(cfg.replicas),
        "steps": str(cfg.steps),
        "samples": str(cfg.samples),
        "step_cap": str(cfg.step_cap),
        "window.k_min": str(cfg.window[0]),
        "window.k_max": str(cfg.window[1]),
        "tails.kind": cfg.tails_kind,
        "tolerances.left_tol": repr(float(cfg.left_tol)),
        "tolerances.sum_tol": repr(float(cfg.sum_tol)),
    }
    if isinstance(p, BircParams):
        e["model.delta"] = repr(float(p.delta))
        e["model.alpha_inf"] = repr(float(p.tails.alpha_inf))
        e["model.alpha_zero"] = repr(float(p.tails.alpha_zero))
        if p.tails.weight_inf is not None:
            e["model.weight_inf"] = repr(float(p.tails.weight_inf))
    else:
        e["model.lam"] = repr(float(p.lam))
        e["model.lambda_c"] = repr(float(p.lambda_c))
    if cfg.levels:
        e["levels"] = ",".join(str(v) for v in cfg.levels)
    if cfg.grid_n:
        e["grid.n"] = ",".join(str(v) for v in cfg.grid_n)
    if cfg.sweep_param is not None:
        e["sweep.param"] = cfg.sweep_param
        e["sweep.values"] = ",".join(repr(float(v)) for v in cfg.sweep_values)
        e["sweep.experiment"] = str(cfg.sweep_experiment)
    return e


def _format_value(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _render_table(cfg: ExperimentConfig, columns, rows) -> str:
    echo = _echo(cfg)
    lines = [f"# rwrc {__version__}"]
    lines.extend(f"# {k} = {echo[k]}" for k in sorted(echo))
    lines.append(",".join(columns))
    lines.extend(",".join(_format_value(v) for v in row) for row in rows)
    return "\n".join(lines) + "\n"


def _map_ordered(fn, tasks, threads: int) -> list:
    if threads > 1 and len(tasks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            return list(ex.map(fn, tasks))
    return [fn(t) for t in tasks]


# -- experiment builders ----------------------------------------------------------


def _build_simulate(cfg: ExperimentConfig, threads: int):
    envs = [
        Environment(cfg.params, cfg.window, environment_seed(cfg.master_seed, e))
        for e in range(cfg.environments)
    ]
    tasks = [(e, r) for e in range(cfg.environments) for r in range(cfg.replicas)]

    def work(task):
        e, r = task
        seed = _rng.derive_key(cfg.master_seed, _S_WALK, e, r)
        return simulate_hitting_times(envs[e], list(cfg.levels), seed, cfg.step_cap)

    summaries = _map_ordered(work, tasks, threads)
    rows, capped = [], 0
    for (e, r), s in zip(tasks, summaries):
        capped += int(s.capped)
        for lv in cfg.levels:
            rows.append((e, r, lv, s.hit_times.get(lv, -1), int(s.capped), s.total_steps))
    cols = ["env_index", "replica", "level", "hit_time", "capped", "total_steps"]
    return cols, rows, {"runs": len(tasks), "capped": capped}


def _env_log_ets(cfg: ExperimentConfig, threads: int) -> list[list[float]]:
    envs = [
        Environment(cfg.params, cfg.window, environment_seed(cfg.master_seed, e))
        for e in range(cfg.environments)
    ]

    def work(env):
        return [log_expected_hitting_time(env, n, cfg.left_tol) for n in cfg.grid_n]

    return _map_ordered(work, envs, threads)


def _build_exact_et(cfg: ExperimentConfig, threads: int):
    logs = _env_log_ets(cfg, threads)
    rows = [
        (e, n, lg, math.exp(lg) if lg < 709.0 else math.inf)
        for e, per_env in enumerate(logs)
        for n, lg in zip(cfg.grid_n, per_env)
    ]
    return ["env_index", "n", "log_expected_t", "expected_t"], rows, {}


def _build_scaling(cfg: ExperimentConfig, threads: int):
    logs = np.asarray(_env_log_ets(cfg, threads))
    mean_log = logs.mean(axis=0)
    geo = np.exp(mean_log)
    est = scaling_slope(list(zip(cfg.grid_n, geo)))
    try:
        alpha = predicted_exponent(cfg.params).alpha
    except PreconditionError:
        alpha = math.nan
    rows = [
        (n, float(ml), float(g), float(est.slope), float(est.stderr), float(alpha))
        for n, ml, g in zip(cfg.grid_n, mean_log, geo)
    ]
    cols = ["n", "mean_log_et", "geo_mean_et", "slope", "slope_stderr", "predicted_alpha"]
    return cols, rows, {}


def _predicted_tail_alpha(cfg: ExperimentConfig) -> float:
    p = cfg.params
    if isinstance(p, BircParams):
        if cfg.tails_kind == "left-sum":
            return p.tails.alpha_inf
        if cfg.tails_kind == "right-sum":
            return p.tails.alpha_zero
        return p.tails.alpha_min
    return p.nu / (1.0 - p.lam)


def _build_tails(cfg: ExperimentConfig, threads: int):
    if cfg.tails_kind == "rho0":
        values = np.exp(sample_log_rho0(cfg.params, cfg.samples, cfg.master_seed))
    else:
        side = "left" if cfg.tails_kind == "left-sum" else "right"
        values = sample_side_sums(
            cfg.params, cfg.samples, cfg.master_seed, side, rel_tol=cfg.sum_tol
        )
    report = tail_exponent(values, default_thresholds(values))
    rows = [(
        cfg.tails_kind,
        cfg.samples,
        float(report.alpha),
        float(report.estimate.slope),
        float(report.estimate.stderr),
        float(report.hill_alpha),
        report.hill_k,
        float(_predicted_tail_alpha(cfg)),
    )]
    cols = ["kind", "samples", "fitted_alpha", "slope", "slope_stderr",
            "hill_alpha", "hill_k", "predicted_alpha"]
    return cols, rows, {}


def _build_velocity(cfg: ExperimentConfig, threads: int):
    env = Environment(cfg.params, cfg.window, environment_seed(cfg.master_seed, 0))
    seed = _rng.derive_key(cfg.master_seed, _S_WALK, 0, 0)
    x = final_position(env, cfg.steps, seed)
    vr = annealed_velocity(cfg.params)
    rows = [(cfg.steps, x, x / cfg.steps, float(vr.v), float(vr.sbar_mean), vr.ballistic)]
    cols = ["steps", "final_position", "v_sim", "v_pred", "sbar_mean", "ballistic"]
    return cols, rows, {}


def _build_sweep(cfg: ExperimentConfig, threads: int):
    builder = _BUILDERS[cfg.sweep_experiment]
    all_rows, sub_cols = [], None
    meta = {"runs": 0, "capped": 0}
    for i, v in enumerate(cfg.sweep_values):
        sub = replace(
            cfg,
            experiment=cfg.sweep_experiment,
            params=_with_param(cfg.params, cfg.sweep_param, v),
            master_seed=int(_rng.derive_key(cfg.master_seed, _S_SWEEP, i)),
            sweep_param=None,
            sweep_values=(),
            sweep_experiment=None,
        )
        sub_cols, rows, m = builder(sub, threads)
        meta["runs"] += m.get("runs", 0)
        meta["capped"] += m.get("capped", 0)
        all_rows.extend((cfg.sweep_param, float(v)) + tuple(r) for r in rows)
    return ["sweep_param", "sweep_value"] + sub_cols, all_rows, meta


_BUILDERS = {
    "simulate": _build_simulate,
    "exact-et": _build_exact_et,
    "scaling": _build_scaling,
    "tails": _build_tails,
    "velocity": _build_velocity,
    "sweep": _build_sweep,
}


# -- driver -----------------------------------------------------------------------


def run(config: ExperimentConfig, threads: int = 1) -> int:
    """Execute one experiment; write its output; return the exit code.

    Truncation-certificate failures propagate as CertificationError (the
    command line wrapper maps them to exit code 3).  The thread count only
    parallelizes independent runs; output bytes do not depend on it.
    """
    threads = max(1, int(threads))
    if config.experiment == "gen-env":
        env = Environment(config.params, config.window, environment_seed(config.master_seed, 0))
        dump_environment(env, config.out)
        return 0
    cols, rows, meta = _BUILDERS[config.experiment](config, threads)
    text = _render_table(config, cols, rows)
    if config.out is None:
        sys.stdout.write(text)
    else:
        Path(config.out).write_text(text)
    if meta.get("runs", 0) and 2 * meta.get("capped", 0) > meta["runs"]:
        return 4
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="rwrc",
        description="simulation and exact computation for biased random-conductance walks",
    )
    sub = parser.add_subparsers(dest="experiment", required=True, metavar="experiment")
    briefs = {
        "gen-env": "sample one environment and write it to a file",
        "simulate": "walk replicas across environments, recording level hitting times",
        "exact-et": "quenched expected hitting times from the conductance formula",
        "scaling": "log-log slope of quenched mean hitting times over an n grid",
        "tails": "tail-index fit for rho_0 or for the one-sided series",
        "velocity": "closed-form velocity against a long simulated run",
        "sweep": "repeat an experiment over a grid of one model parameter",
    }
    for name in _EXPERIMENTS:
        p = sub.add_parser(name, help=briefs[name])
        p.add_argument("--config", required=True, help="path to a 'key = value' config file")
        p.add_argument("--seed", type=int, default=None, help="master seed (overrides config)")
        p.add_argument("--threads", type=int, default=1,
                       help="worker threads; never affects output bytes")
        p.add_argument("--out", default=None, help="output path (overrides config)")
    args = parser.parse_args(argv)
    try:
        text = Path(args.config).read_text()
    except OSError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    try:
        cfg = build_config(
            parse_config_text(text),
            experiment=args.experiment,
            master_seed=args.seed,
            out=args.out,
        )
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    try:
        return run(cfg, threads=args.threads)
    except (CertificationError, WindowCapError) as exc:
        print(f"certification failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
