"""Command-line front end: ``qwalk <experiment> [--flag value ...] [--config path]``.

Configuration comes from an optional ``key = value`` file with flags layered on
top.  Every run writes ``manifest.txt`` in the same format, so
``qwalk --config out/manifest.txt`` repeats it exactly.

Exit codes: 0 success, 1 usage or configuration error, 2 numerical failure,
3 I/O error.
"""
from __future__ import annotations

import argparse
import logging
import math
import sys
from dataclasses import dataclass, fields, replace
from pathlib import Path

import numpy as np

from .disorder import DisorderSpec
from .ensemble import run_ensemble
from .experiments import crossover_ensemble, crossover_plan
from .integrator import (
    IntegrationConfig,
    NormDriftError,
    WindowCapError,
    geometric_times,
    run_trajectory,
    white_noise_schedule,
)
from .lattice import ExpansionPolicy, centered_window, init_delta, init_uniform
from .observables import (
    NotSaturated,
    accumulate_carpet,
    ensemble_mean,
    fit_crossover,
    localization_saturation,
)
from .qubit import QubitParams, ensemble_qubit

log = logging.getLogger("qwalk")

EXPERIMENTS = ("carpet", "crossover", "qubit", "ballistic-check", "localization")
DISORDERS = ("clean", "static", "white", "sin")
EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_IO = 0, 1, 2, 3
BALLISTIC_TOLERANCE = 0.01


class ConfigError(ValueError):
    """Bad configuration; the message names the offending key."""


class NumericalFailure(RuntimeError):
    pass


@dataclass(frozen=True)
class RunConfig:
    experiment: str
    N: int
    W: float
    disorder: str
    amp: float | None
    dt: float | None
    tmax: float | None
    dtu: float | None
    ensemble: int
    seed: int
    out: str
    log_scale: bool
    initial: str
    expanding: bool
    samples: int
    W_list: tuple
    samples_per_decade: float
    gamma: float

    def manifest(self) -> str:
        lines = []
        for f in fields(self):
            lines.append(f"{f.name} = {_show(getattr(self, f.name))}")
        return "\n".join(lines) + "\n"


# Per-experiment defaults; ``None`` for dt, tmax, dtu means "choose automatically".
_COMMON = dict(N=101, W=0.0, disorder="clean", amp=None, dt=None, tmax=None, dtu=None,
               ensemble=1, seed=0, out="qwalk-out", log_scale=False, initial="delta",
               expanding=False, samples=201, W_list=(2.0, 5.0, 10.0, 20.0),
               samples_per_decade=5.0, gamma=1.0)
DEFAULTS = {
    "carpet": dict(_COMMON, tmax=100.0),
    "ballistic-check": dict(_COMMON, tmax=20.0, expanding=True),
    "crossover": dict(_COMMON, disorder="white", ensemble=32, expanding=True),
    "localization": dict(_COMMON, W=5.0, disorder="static", ensemble=32, tmax=2000.0,
                         expanding=True, samples=200),
    "qubit": dict(_COMMON, W=2.0, disorder="white", ensemble=100, tmax=10.0, samples=400),
}


def _show(value) -> str:
    if value is None:
        return "auto"
    if isinstance(value, bool):
        return "on" if value else "off"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, tuple):
        return ",".join(repr(float(v)) for v in value)
    return str(value)


def _parse_bool(key, text):
    low = str(text).strip().lower()
    if low in ("on", "true", "yes", "1"):
        return True
    if low in ("off", "false", "no", "0"):
        return False
    raise ConfigError(f"{key}: expected on/off, got {text!r}")


def _parse_number(key, text, kind, optional=False):
    if isinstance(text, (int, float)) and not isinstance(text, bool):
        return kind(text)
    s = str(text).strip()
    if optional and s.lower() in ("auto", "none", ""):
        return None
    try:
        value = float(s)
    except ValueError:
        raise ConfigError(f"{key}: not a number: {text!r}") from None
    if not math.isfinite(value):
        raise ConfigError(f"{key}: must be finite, got {text!r}")
    if kind is int:
        if value != int(value):
            raise ConfigError(f"{key}: expected an integer, got {text!r}")
        return int(value)
    return value


def _coerce(key: str, text):
    if key == "experiment":
        if text not in EXPERIMENTS:
            raise ConfigError(f"experiment: unknown experiment {text!r}")
        return text
    if key == "disorder":
        if text not in DISORDERS:
            raise ConfigError(f"disorder: expected one of {', '.join(DISORDERS)}, got {text!r}")
        return text
    if key == "initial":
        if text not in ("delta", "uniform"):
            raise ConfigError(f"initial: expected delta or uniform, got {text!r}")
        return text
    if key in ("log_scale", "expanding"):
        return text if isinstance(text, bool) else _parse_bool(key, text)
    if key in ("N", "ensemble", "seed", "samples"):
        return _parse_number(key, text, int)
    if key in ("amp", "dt", "tmax", "dtu"):
        return _parse_number(key, text, float, optional=True)
    if key in ("W", "samples_per_decade", "gamma"):
        return _parse_number(key, text, float)
    if key == "W_list":
        if isinstance(text, tuple):
            return text
        parts = [p for p in str(text).replace(" ", "").split(",") if p]
        if not parts:
            raise ConfigError("W_list: empty list")
        return tuple(_parse_number("W_list", p, float) for p in parts)
    if key == "out":
        return str(text)
    raise ConfigError(f"{key}: unknown key")


KEYS = tuple(f.name for f in fields(RunConfig))


def read_config_file(path) -> dict:
    """``key = value`` lines; ``#`` starts a comment. Dashes in keys read as underscores."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"config: cannot read {path}: {exc.strerror}") from None
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"config line {lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in KEYS:
            raise ConfigError(f"{key}: unknown key (config line {lineno})")
        values[key] = value
    return values


def _validate(cfg: RunConfig) -> RunConfig:
    def need(cond, key, msg):
        if not cond:
            raise ConfigError(f"{key}: {msg}")

    need(cfg.N >= 1, "N", f"must be >= 1, got {cfg.N}")
    need(cfg.W >= 0, "W", f"must be >= 0, got {cfg.W}")
    for key in ("amp", "dt", "tmax", "dtu"):
        v = getattr(cfg, key)
        need(v is None or v > 0 or (key == "amp" and v == 0), key, f"must be > 0, got {v}")
    need(cfg.ensemble >= 1, "ensemble", f"must be >= 1, got {cfg.ensemble}")
    need(cfg.seed >= 0, "seed", f"must be >= 0, got {cfg.seed}")
    need(cfg.samples >= 2, "samples", f"must be >= 2, got {cfg.samples}")
    need(cfg.samples_per_decade > 0, "samples_per_decade", "must be > 0")
    need(cfg.gamma > 0, "gamma", f"must be > 0, got {cfg.gamma}")
    need(all(w > 0 for w in cfg.W_list), "W_list", "all entries must be > 0")
    if cfg.disorder in ("static", "white", "sin") and cfg.experiment not in ("crossover", "qubit"):
        strength = cfg.amp if cfg.disorder == "sin" and cfg.amp is not None else cfg.W
        need(strength > 0, "W", f"{cfg.disorder} disorder needs W > 0")
    if cfg.experiment == "crossover":
        need(cfg.disorder == "white", "disorder", "crossover sweeps use white noise")
    if cfg.experiment == "ballistic-check":
        need(cfg.disorder == "clean", "disorder", "the ballistic check needs a clean chain")
        need(cfg.initial == "delta", "initial", "the ballistic check needs a delta start")
    if cfg.initial == "uniform":
        need(cfg.experiment == "carpet", "initial", "uniform starts are only used for carpets")
    return cfg


def parse_config(argv=None) -> RunConfig:
    """Resolve flags plus optional config file into a validated RunConfig."""
    return parse_command_line(argv)[0]


def parse_command_line(argv=None) -> tuple[RunConfig, int]:
    """(RunConfig, worker count); the worker count never enters the manifest."""
    parser = _ArgParser(prog="qwalk", description="Quantum walks on disordered chains.")
    parser.add_argument("experiment", nargs="?", choices=EXPERIMENTS)
    parser.add_argument("--config")
    parser.add_argument("--N")
    parser.add_argument("--W")
    parser.add_argument("--disorder")
    parser.add_argument("--amp")
    parser.add_argument("--dt")
    parser.add_argument("--tmax")
    parser.add_argument("--dtu")
    parser.add_argument("--ensemble")
    parser.add_argument("--seed")
    parser.add_argument("--out")
    parser.add_argument("--log-scale", dest="log_scale", action="store_const", const=True)
    parser.add_argument("--initial")
    parser.add_argument("--expanding")
    parser.add_argument("--samples")
    parser.add_argument("--samples-per-decade", dest="samples_per_decade")
    parser.add_argument("--W-list", dest="W_list")
    parser.add_argument("--gamma")
    parser.add_argument("--workers", type=int, default=1,
                        help="worker processes; does not change any output")
    args = parser.parse_args(argv)

    layered = read_config_file(args.config) if args.config else {}
    for key in KEYS:
        value = getattr(args, key, None)
        if value is not None:
            layered[key] = value
    experiment = layered.get("experiment")
    if experiment is None:
        raise ConfigError("experiment: missing (give it as the first argument or in the config file)")
    experiment = _coerce("experiment", experiment)
    values = dict(DEFAULTS[experiment], experiment=experiment)
    for key, raw in layered.items():
        values[key] = _coerce(key, raw)
    cfg = _validate(RunConfig(**values))
    return cfg, max(1, args.workers)


class _ArgParser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


# ---------------------------------------------------------------- output ---

def fmt(value) -> str:
    if value is None:
        return ""
    return format(float(value), ".17g")


class OutputDir:
    """Collects files for one run; removes everything it wrote if the run aborts."""

    def __init__(self, path):
        self.path = Path(path)
        self.created_dir = False
        self.written: list[Path] = []

    def __enter__(self):
        if not self.path.exists():
            self.path.mkdir(parents=True)
            self.created_dir = True
        return self

    def __exit__(self, exc_type, exc, tb):
        if exc_type is not None:
            for p in self.written:
                try:
                    p.unlink()
                except OSError:
                    pass
            if self.created_dir:
                try:
                    self.path.rmdir()
                except OSError:
                    pass
        return False

    def write_bytes(self, name: str, data: bytes):
        p = self.path / name
        self.written.append(p)
        p.write_bytes(data)

    def write_text(self, name: str, text: str):
        self.write_bytes(name, text.encode())

    def write_csv(self, name: str, header: str, rows):
        body = "".join(",".join(fmt(v) for v in row) + "\n" for row in rows)
        self.write_text(name, header + "\n" + body)


def series_rows(series):
    return zip(series.times, series.sigma2, series.p0, series.c_of_t)


def carpet_pixels(grid: np.ndarray, log_scale: bool = False) -> np.ndarray:
    """8-bit pixels: round(255 P/Pmax), or the log(1 + P/Pmin) variant."""
    grid = np.asarray(grid, dtype=np.float64)
    p_max = grid.max()
    if p_max <= 0:
        return np.zeros(grid.shape, dtype=np.uint8)
    if log_scale:
        positive = grid[grid > 0]
        p_min = positive.min()
        if p_min == p_max:
            scaled = (grid > 0).astype(np.float64)
        else:
            scaled = np.log1p(grid / p_min) / np.log1p(p_max / p_min)
    else:
        scaled = grid / p_max
    return np.clip(np.rint(255.0 * scaled), 0, 255).astype(np.uint8)


def pgm_bytes(pixels: np.ndarray) -> bytes:
    height, width = pixels.shape
    return f"P5\n{width} {height}\n255\n".encode() + np.ascontiguousarray(pixels, dtype=np.uint8).tobytes()


# ------------------------------------------------------------ experiments ---

def _disorder(cfg: RunConfig, W: float | None = None) -> DisorderSpec:
    kind = cfg.disorder
    strength = cfg.W if W is None else W
    if kind == "sin" and cfg.amp is not None:
        strength = cfg.amp
    dtu = cfg.dtu
    if dtu is None:
        dtu = white_noise_schedule(strength)[1] if kind == "white" and strength > 0 else 1.0
    return DisorderSpec(kind, strength, dtu, seed=cfg.seed)


def _step(cfg: RunConfig, spec: DisorderSpec, fallback: float = 0.01) -> float:
    """dt from the config, else small enough that dt*(2+max|eps|) <= 0.02."""
    if cfg.dt is not None:
        return cfg.dt
    dt = min(fallback, 0.02 / (2.0 + spec.max_abs()))
    if spec.kind.value == "white":
        dt = spec.update_interval / math.ceil(spec.update_interval / dt - 1e-9)
    return dt


def _initial(cfg: RunConfig):
    if cfg.initial == "uniform":
        return init_uniform(cfg.N, centered_window(cfg.N)[0])
    if cfg.expanding:
        return init_delta(0)
    return init_delta(0, centered_window(cfg.N))


def run_carpet(cfg: RunConfig, out: OutputDir, workers: int):
    spec = _disorder(cfg)
    times = np.linspace(0.0, cfg.tmax, cfg.samples)
    icfg = IntegrationConfig(dt=_step(cfg, spec), t_max=cfg.tmax, sample_times=times)
    policy = ExpansionPolicy() if cfg.expanding else None
    lo, hi = centered_window(cfg.N)
    grids, series = [], []
    for r in range(cfg.ensemble):
        traj = run_trajectory(_initial(cfg), spec, icfg, policy, realization=r, keep_packets=True)
        grids.append(accumulate_carpet(traj.packets, (lo, hi)))
        series.append(traj.series)
    grid = np.mean(np.stack([c.grid for c in grids]), axis=0)
    carpet = grids[0]
    out.write_bytes("carpet.pgm", pgm_bytes(carpet_pixels(grid, cfg.log_scale)))
    header = "x," + ",".join(fmt(t) for t in carpet.t_samples)
    out.write_csv("carpet.csv", header, ([x, *row] for x, row in zip(carpet.x_range, grid)))
    if cfg.initial == "delta":
        out.write_csv("series.csv", "t,sigma2,p0,c", series_rows(ensemble_mean(series)))


def run_ballistic_check(cfg: RunConfig, out: OutputDir, workers: int):
    spec = _disorder(cfg)
    times = np.linspace(0.0, cfg.tmax, cfg.samples)
    icfg = IntegrationConfig(dt=_step(cfg, spec, 1e-3), t_max=cfg.tmax, sample_times=times)
    policy = ExpansionPolicy() if cfg.expanding else None
    series = run_trajectory(_initial(cfg), spec, icfg, policy).series
    out.write_csv("series.csv", "t,sigma2,p0,c", series_rows(series))
    t = series.times[series.times > 0]
    ratio = series.sigma2[series.times > 0] / (2.0 * t * t)
    worst = float(np.max(np.abs(ratio - 1.0)))
    log.info("ballistic check: max |sigma2/2t^2 - 1| = %.3g", worst)
    if worst > BALLISTIC_TOLERANCE:
        # the outputs stay: they document the failure
        return EXIT_NUMERIC
    return EXIT_OK


def run_crossover(cfg: RunConfig, out: OutputDir, workers: int):
    rows = []
    for W in cfg.W_list:
        plan = crossover_plan(W, cfg.samples_per_decade, cfg.tmax)
        if cfg.dt is not None or cfg.dtu is not None:
            dtu = cfg.dtu if cfg.dtu is not None else plan.update_interval
            dt = cfg.dt if cfg.dt is not None else min(plan.dt, dtu)
            plan = replace(plan, dt=dt, update_interval=dtu)
        _, ens = crossover_ensemble(W, cfg.ensemble, cfg.seed, workers, plan)
        est = fit_crossover(ens, W, min_realizations=1)
        log.info("W=%g: t_quad_end=%s t_diff_start=%s", W, est.t_quad_end, est.t_diff_start)
        rows.append((W, est.t_quad_end, est.t_diff_start))
        out.write_csv(f"series_W{W:g}.csv", "t,sigma2,p0,c", series_rows(ensemble_mean(ens)))
    out.write_csv("crossover.csv", "W,t_quad_end,t_diff_start", rows)


def run_localization(cfg: RunConfig, out: OutputDir, workers: int):
    spec = _disorder(cfg)
    times = geometric_times(cfg.tmax, cfg.samples, t_min=min(1.0, cfg.tmax / 10))
    icfg = IntegrationConfig(dt=_step(cfg, spec), t_max=cfg.tmax, sample_times=times)
    policy = ExpansionPolicy() if cfg.expanding else None
    ens = run_ensemble(_initial(cfg), spec, icfg, policy, cfg.ensemble, workers=workers)
    out.write_csv("series.csv", "t,sigma2,p0,c", series_rows(ensemble_mean(ens)))
    try:
        sat = localization_saturation(ens)
        row = (cfg.W, sat.sigma2_inf, sat.stderr, sat.doubling_ratio)
    except NotSaturated as exc:
        log.warning("not saturated: %s", exc)
        row = (cfg.W, None, None, None)
    out.write_csv("saturation.csv", "W,sigma2_inf,stderr,doubling_ratio", [row])


def run_qubit(cfg: RunConfig, out: OutputDir, workers: int):
    params = QubitParams(gamma=cfg.gamma, W=cfg.W, seed=cfg.seed, ensemble_size=cfg.ensemble,
                         dt=cfg.dt, t_max=cfg.tmax, update_interval=cfg.dtu)
    res = ensemble_qubit(params, max_samples=cfg.samples, workers=workers)
    rows = zip(res.times, res.rho, res.R, res.J, res.abs_rho12, res.theta)
    out.write_csv("qubit.csv", "t,rho,R,J,abs_rho12,theta",
                  ([v if not (isinstance(v, float) and math.isnan(v)) else None for v in r] for r in rows))


RUNNERS = {
    "carpet": run_carpet,
    "ballistic-check": run_ballistic_check,
    "crossover": run_crossover,
    "localization": run_localization,
    "qubit": run_qubit,
}


def run_experiment(cfg: RunConfig, workers: int = 1) -> int:
    """Run ``cfg`` and write its outputs; returns the exit code."""
    with OutputDir(cfg.out) as out:
        out.write_text("manifest.txt", cfg.manifest())
        code = RUNNERS[cfg.experiment](cfg, out, workers)
    return EXIT_OK if code is None else code


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    try:
        cfg, workers = parse_command_line(argv)
    except ConfigError as exc:
        print(f"qwalk: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return run_experiment(cfg, workers)
    except ValueError as exc:
        print(f"qwalk: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NormDriftError, WindowCapError, ArithmeticError, NumericalFailure) as exc:
        print(f"qwalk: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        where = exc.filename or cfg.out
        print(f"qwalk: I/O error at {where}: {exc.strerror or exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
