"""Command line front end: configuration, presets and CSV output."""
from __future__ import annotations

import argparse
import csv
import io
import math
import os
import sys
from dataclasses import dataclass, fields

from . import estimate as E
from . import oracle, tilt
from .ppp import ParameterError, SeedSpec, derive_replicate_seed
from .sinr import EventSpec, ModelParams

EXPERIMENTS = ("avg-count", "isolation", "opt-pair", "lambda-curve", "validate")
TILTS = ("none", "pair", "ldp", "radial")
CSV_HEADER = ["experiment", "estimator", "mu_r", "mu_t", "t", "n", "a", "runs", "seed",
              "estimate", "variance", "std_error", "hits", "wall_s"]
SEED_ENV = "SINRMC_SEED"
# stream tag for the pilot run's master seed
_PILOT_TAG = 101
_DEFAULT_RUNS = {"avg-count": 10_000, "isolation": 2_000, "validate": 100_000}


class ConfigError(ParameterError):
    """Malformed configuration file or invalid option combination."""


@dataclass(frozen=True)
class RunConfig:
    experiment: str = "avg-count"
    alpha: float = 4.0
    w: float = 1.0
    t: float = 1.0
    n: float = 25.0
    a: float = 0.5
    mu_r: float = 1.0
    mu_t: float = 1.0
    runs: int | None = None
    seed: int | None = None
    margin: float | None = None
    trunc_b: float = 20.0
    tail: bool = True
    r_out: float = E.DEFAULT_R_OUT
    grid_h: float = 0.05
    far_field: bool = False
    tilt: str = "none"
    pilot: int = 0
    points: int = 201
    workers: int = 1
    out: str | None = None


_HELP = {
    "experiment": "one of " + ", ".join(EXPERIMENTS),
    "alpha": "path-loss exponent",
    "w": "noise power",
    "t": "SINR threshold",
    "n": "side of the observation window (avg-count)",
    "a": "event threshold on the mean connection count per area",
    "mu_r": "tilted receiver intensity (tilt = pair)",
    "mu_t": "tilted transmitter intensity (tilt = pair)",
    "runs": "replicates; default 10000 (avg-count), 2000 (isolation), 100000 (validate)",
    "seed": f"master seed; falls back to ${SEED_ENV}, then 0",
    "margin": "untilted frame width around the window; none means connection radius + trunc_b",
    "trunc_b": "path-loss truncation radius (inf for none)",
    "tail": "add the mean interference from beyond trunc_b",
    "r_out": "radius of the transmitter disk for isolation",
    "grid_h": "cell size of the good-region area grid",
    "far_field": "isolation: add the mean interference from beyond r_out to the noise",
    "tilt": "none, pair (mu_r, mu_t), ldp (entropy-optimal pair for a) or radial (isolation)",
    "pilot": "cross-entropy pilot replicates before the tilted run (avg-count)",
    "points": "radii in the lambda profile",
    "workers": "worker processes",
    "out": "output file; none means stdout",
}

PRESETS = {
    # n=25, a=0.5, t=1, basic estimator
    "table1-basic": dict(experiment="avg-count", n=25.0, a=0.5, t=1.0, runs=1_000_000, margin=1.0,
                         trunc_b=math.inf, tail=False, tilt="none"),
    # same setting, entropy-optimal (mu_R, mu_T) under the connection constraint
    "table1-ldp": dict(experiment="avg-count", n=25.0, a=0.5, t=1.0, runs=1_000_000, margin=1.0,
                       trunc_b=math.inf, tail=False, tilt="ldp"),
    # same setting, pair tilt from a 1e5-replicate cross-entropy pilot
    "table1-ce": dict(experiment="avg-count", n=25.0, a=0.5, t=1.0, runs=1_000_000, margin=1.0,
                      trunc_b=math.inf, tail=False, tilt="none", pilot=100_000),
    # isolation of the origin at t = 0.002, conditional MC without tilt
    "table2-basic": dict(experiment="isolation", t=0.002, runs=1_000_000, grid_h=0.05, r_out=35.0,
                         trunc_b=math.inf, tail=False, tilt="none"),
    # same with the radial lambda_opt profile
    "table2-is": dict(experiment="isolation", t=0.002, runs=1_000_000, grid_h=0.05, r_out=35.0,
                      trunc_b=math.inf, tail=False, tilt="radial"),
    # the lambda_opt curve on [0, 1]
    "figure2": dict(experiment="lambda-curve", points=201),
}

_FIELD_TYPES = {f.name: f.type for f in fields(RunConfig)}


def _parse_bool(s: str) -> bool:
    v = s.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _parse_float(s: str) -> float:
    v = float(s)
    if math.isnan(v):
        raise ValueError("nan is not allowed")
    return v


def _parse_int(s: str) -> int:
    v = float(s)
    if not v.is_integer():
        raise ValueError(f"not an integer: {s!r}")
    return int(v)


def _optional(parse):
    def inner(s: str):
        return None if s.strip().lower() == "none" else parse(s)
    return inner


def _choice(options):
    def inner(s: str):
        s = s.strip()
        if s not in options:
            raise ValueError(f"{s!r} not in {', '.join(options)}")
        return s
    return inner


_PARSERS = {
    "experiment": _choice(EXPERIMENTS),
    "tilt": _choice(TILTS),
    "runs": _optional(_parse_int),
    "seed": _optional(_parse_int),
    "margin": _optional(_parse_float),
    "out": _optional(str),
    "tail": _parse_bool,
    "far_field": _parse_bool,
    "pilot": _parse_int,
    "points": _parse_int,
    "workers": _parse_int,
}


def parse_value(key: str, text: str):
    if key not in _FIELD_TYPES:
        raise KeyError(key)
    return _PARSERS.get(key, _parse_float)(text)


def parse_config_text(text: str) -> dict:
    """Key/value pairs from ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in _FIELD_TYPES:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        try:
            out[key] = parse_value(key, value)
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: bad value for {key}: {exc}") from None
    return out


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise ConfigError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(
        prog="sinrmc",
        description="Rare-event Monte Carlo for SINR connectivity. Presets: " + ", ".join(PRESETS) + ".",
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    p.add_argument("command", nargs="?", choices=EXPERIMENTS + tuple(PRESETS),
                   help="experiment or preset (may instead be set by 'experiment' in the config file)")
    p.add_argument("--config", help="key = value configuration file")
    p.add_argument("--cross-entropy-pilot", dest="pilot", type=_parse_int, default=argparse.SUPPRESS,
                   metavar="N", help="alias of --pilot")
    defaults = RunConfig()
    for f in fields(RunConfig):
        if f.name == "experiment":
            continue
        kw = dict(dest=f.name, default=argparse.SUPPRESS,
                  help=f"{_HELP[f.name]} (default: {getattr(defaults, f.name)})")
        if f.name in ("tail", "far_field"):
            p.add_argument("--" + f.name.replace("_", "-"), type=_parse_bool, metavar="BOOL", **kw)
        else:
            p.add_argument("--" + f.name.replace("_", "-"), type=_PARSERS.get(f.name, _parse_float),
                           metavar=f.name.upper(), **kw)
    return p


def parse_config(argv=None, env=None) -> RunConfig:
    """Defaults, then preset, then config file, then flags; later sources win."""
    env = os.environ if env is None else env
    ns = vars(build_parser().parse_args(argv))
    command = ns.pop("command")
    path = ns.pop("config", None)
    values: dict = {}
    if command in PRESETS:
        values.update(PRESETS[command])
    if path is not None:
        try:
            with open(path) as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError(f"cannot read config file: {exc}") from None
        values.update(parse_config_text(text))
    values.update(ns)
    if command in EXPERIMENTS:
        values["experiment"] = command
    if values.get("seed") is None and env.get(SEED_ENV):
        try:
            values["seed"] = _parse_int(env[SEED_ENV])
        except ValueError:
            raise ConfigError(f"{SEED_ENV} is not an integer: {env[SEED_ENV]!r}") from None
    cfg = RunConfig(**values)
    check_config(cfg)
    return cfg


def check_config(cfg: RunConfig) -> None:
    if cfg.experiment == "avg-count" and cfg.tilt == "radial":
        raise ConfigError("radial tilt applies to isolation only")
    if cfg.experiment == "isolation" and cfg.tilt in ("pair", "ldp"):
        raise ConfigError("pair tilts apply to avg-count only")
    if cfg.pilot and cfg.experiment != "avg-count":
        raise ConfigError("a cross-entropy pilot applies to avg-count only")
    if cfg.pilot and cfg.tilt != "none":
        raise ConfigError("a cross-entropy pilot chooses the tilt itself; leave tilt = none")
    if cfg.pilot < 0:
        raise ConfigError("pilot must be nonnegative")
    if cfg.workers < 1:
        raise ConfigError("workers must be at least 1")
    if cfg.runs is not None and cfg.runs < 2 and cfg.experiment in _DEFAULT_RUNS:
        raise ConfigError("runs must be at least 2")


def _runs(cfg: RunConfig) -> int:
    return cfg.runs if cfg.runs is not None else _DEFAULT_RUNS[cfg.experiment]


def _seed(cfg: RunConfig) -> int:
    return 0 if cfg.seed is None else cfg.seed


def model_params(cfg: RunConfig) -> ModelParams:
    return ModelParams(alpha=cfg.alpha, w=cfg.w, t=cfg.t, trunc_b=cfg.trunc_b, tail_compensation=cfg.tail)


def _num(x) -> str:
    if x is None:
        return ""
    if isinstance(x, str):
        return x
    if isinstance(x, (int,)) and not isinstance(x, bool):
        return str(x)
    return f"{float(x):.17g}"


def result_row(cfg: RunConfig, estimator: str, mu_r, mu_t, rep: E.EstimatorReport | None = None,
               runs=None, seed=None, estimate=None, variance=None, std_error=None, hits=None,
               wall_s=None) -> list[str]:
    window = cfg.experiment == "avg-count"
    if rep is not None:
        runs, seed, estimate, variance = rep.n_runs, rep.master_seed, rep.estimate, rep.single_run_variance
        std_error, hits, wall_s = rep.std_error, rep.hits, rep.wall_seconds
    return [cfg.experiment, estimator, _num(mu_r), _num(mu_t), _num(cfg.t),
            _num(cfg.n if window else None), _num(cfg.a if window else None),
            _num(runs), _num(seed), _num(estimate), _num(variance), _num(std_error), _num(hits), _num(wall_s)]


def _write_rows(rows, stream) -> None:
    wr = csv.writer(stream, lineterminator="\n")
    wr.writerow(CSV_HEADER)
    wr.writerows(rows)


def _avg_count(cfg: RunConfig) -> list[list[str]]:
    params = model_params(cfg)
    event = EventSpec(threshold=cfg.a)
    seed, N = _seed(cfg), _runs(cfg)
    rows = []
    if cfg.pilot:
        pilot_seed = derive_replicate_seed(SeedSpec(seed, _PILOT_TAG), 0) >> 1
        sample = E.simulate_event(event, params, cfg.n, tilt.TiltSpec(), cfg.pilot, pilot_seed,
                                  cfg.margin, cfg.workers)
        pr = tilt.pilot_from_sample(sample, cfg.n)
        mean, var, se = E.summarize(sample.values) if cfg.pilot >= 2 else (float(sample.occurred.mean()), None, None)
        rows.append(result_row(cfg, "ce-pilot", pr.mu_R, pr.mu_T, runs=cfg.pilot, seed=pilot_seed,
                               estimate=mean, variance=var, std_error=se, hits=pr.hits,
                               wall_s=sample.wall_seconds))
        spec, label = tilt.TiltSpec.pair(pr.mu_R, pr.mu_T), "ce"
    elif cfg.tilt == "pair":
        spec, label = tilt.TiltSpec.pair(cfg.mu_r, cfg.mu_t), "pair"
    elif cfg.tilt == "ldp":
        mu_R, mu_T = tilt.optimal_pair(cfg.a)
        spec, label = tilt.TiltSpec.pair(mu_R, mu_T), "ldp"
    else:
        spec, label = tilt.TiltSpec(), "basic"
    rep = E.estimate_event(event, params, cfg.n, spec, N, seed, cfg.margin, cfg.workers, label)
    mu = (spec.mu_R, spec.mu_T) if spec.kind == "pair" else (1.0, 1.0)
    rows.append(result_row(cfg, label, *mu, rep))
    return rows


def _isolation(cfg: RunConfig) -> list[list[str]]:
    params = model_params(cfg)
    if cfg.tilt == "radial":
        spec = tilt.TiltSpec.radial(tilt.tabulate_lambda_profile(cfg.points))
    else:
        spec = tilt.TiltSpec()
    rep = E.estimate_isolation(params, spec, _runs(cfg), cfg.grid_h, _seed(cfg), cfg.r_out,
                               cfg.far_field, cfg.workers)
    return [result_row(cfg, rep.label, 1.0, "radial" if spec.kind == "radial" else 1.0, rep)]


def run(cfg: RunConfig, stdout=None) -> int:
    """Execute one configured experiment; returns the process exit code."""
    stdout = sys.stdout if stdout is None else stdout
    check_config(cfg)
    buf = io.StringIO()
    status = 0
    if cfg.experiment in ("avg-count", "isolation"):
        _write_rows(_avg_count(cfg) if cfg.experiment == "avg-count" else _isolation(cfg), buf)
    elif cfg.experiment == "opt-pair":
        mu_R, mu_T = tilt.optimal_pair(cfg.a)
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(["a", "mu_r", "mu_t"])
        wr.writerow([_num(cfg.a), _num(mu_R), _num(mu_T)])
    elif cfg.experiment == "lambda-curve":
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(["r", "lambda"])
        prof = tilt.tabulate_lambda_profile(cfg.points)
        wr.writerows([_num(r), _num(v)] for r, v in zip(prof.grid, prof.values))
    else:
        checks = oracle.validate(_runs(cfg), seed=_seed(cfg), workers=cfg.workers)
        for c in checks:
            buf.write(c.line() + "\n")
        status = 0 if all(c.passed for c in checks) else 2
    if cfg.out is None:
        stdout.write(buf.getvalue())
    else:
        with open(cfg.out, "w", newline="") as fh:
            fh.write(buf.getvalue())
    return status


def main(argv=None) -> int:
    try:
        cfg = parse_config(argv)
        return run(cfg)
    except (ParameterError, tilt.NoHitsError, tilt.SolverError) as exc:
        print(f"sinrmc: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
