"""Experiment orchestration: configs, seeded ensembles, CSV, performance fits.

A run is described by a flat INI-style config (sections [system], [run] and
one optional section per policy). Each trial owns a seed; trials are fully
independent and may be distributed over a worker pool without changing the
emitted bytes, which are sorted by (policy, seed, t) before writing.
"""

import concurrent.futures
import configparser
import csv
import os
import sys as _sys
import time
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, TextIO

import numpy as np

from .criteria import Criterion
from .gradient import POLICIES, Schedule, sequential_identify
from .system import (
    STREAM_SYSTEM_DRAW,
    ControllabilityError,
    IdentMode,
    LtiSystem,
    stream_rng,
)

CSV_HEADER = ["seed", "policy", "t", "sq_error", "plan_seconds", "energy"]
GRID_HEADER = ["policy", "n_grad", "T", "c", "eps_median", "eps_mean", "n_trials"]

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_FAILURES = 3

# Lateral dynamics of a business-jet airframe (discretized and normalized):
# state (sideslip, roll angle, roll rate, yaw rate), inputs (aileron, rudder).
JETSTAR_A = np.array(
    [
        [0.955, -0.0113, 0.0, -0.0284],
        [0.0, 1.0, 0.0568, 0.0],
        [-0.25, 0.0, -0.963, 0.00496],
        [0.168, 0.0, -0.00476, -0.993],
    ]
)
JETSTAR_B = 0.1 * np.array(
    [
        [0.0, 0.0116],
        [0.0, 0.0],
        [1.62, 0.789],
        [0.0, -0.87],
    ]
)


class ConfigError(ValueError):
    """Raised for unparseable or invalid experiment configs."""


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated description of one identification experiment."""

    source: str  # "random-ensemble" | "explicit" | "jetstar-lateral"
    mode: str  # "full" | "known-b"
    policies: tuple
    crit: Criterion
    horizons: tuple
    gamma: float
    sigma: float
    seeds: int
    seed_base: int
    ridge: float
    d: int = 4
    m: int = 4
    b_identity: bool = True
    eigen_scale: float = 0.9
    a_explicit: Optional[np.ndarray] = None
    b_explicit: Optional[np.ndarray] = None
    schedule: str = "0,10,T/2,T"
    n_grad: int = 120
    batch: int = 100
    eta: Optional[float] = None
    stop_tol: float = 0.0
    qp_tol: float = 1e-10
    out: Optional[str] = None

    @property
    def horizon(self) -> int:
        return self.horizons[0]


_SECTION_KEYS = {
    "system": {
        "source", "d", "m", "b_identity", "eigen_scale", "a", "b", "sigma", "gamma",
    },
    "run": {
        "mode", "policy", "criterion", "horizon", "seeds", "seed_base", "ridge", "out",
    },
    "greedy": {"qp_tol"},
    "gradient": {"eta", "n_grad", "batch", "schedule", "stop_tol"},
    "mse-gradient": {"eta", "n_grad", "batch", "schedule", "stop_tol"},
    "oracle": {"eta", "n_grad", "batch", "stop_tol"},
    "random": set(),
}


def _parse_matrix(text: str) -> np.ndarray:
    rows = [r.strip() for r in text.split(";") if r.strip()]
    return np.array([[float(v) for v in row.split()] for row in rows])


def load_config(path: str, overrides: Optional[Dict[str, str]] = None) -> ExperimentConfig:
    """Parse and validate an experiment config file.

    overrides maps flat keys (qp_tol, eta, n_grad, batch, schedule, out,
    workers are handled by the CLI) onto the parsed values.
    """
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        with open(path, "r", encoding="utf-8") as fh:
            parser.read_file(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except configparser.Error as exc:
        raise ConfigError(f"config parse error in {path}: {exc}") from None

    for section in parser.sections():
        if section not in _SECTION_KEYS:
            raise ConfigError(f"unknown config section [{section}]")
        unknown = set(parser[section]) - _SECTION_KEYS[section]
        if unknown:
            raise ConfigError(
                f"unknown keys in [{section}]: {', '.join(sorted(unknown))}"
            )
    if "system" not in parser or "run" not in parser:
        raise ConfigError("config needs [system] and [run] sections")

    sysec, run = parser["system"], parser["run"]
    overrides = overrides or {}

    def run_get(key, fallback=None):
        return overrides.get(key, run.get(key, fallback))

    source = sysec.get("source", "random-ensemble").strip()
    if source not in ("random-ensemble", "explicit", "jetstar-lateral"):
        raise ConfigError(f"unknown system source {source!r}")

    a_explicit = b_explicit = None
    d = sysec.getint("d", fallback=4)
    m = sysec.getint("m", fallback=d)
    if source == "explicit":
        if "a" not in sysec or "b" not in sysec:
            raise ConfigError("explicit source needs matrices a and b")
        a_explicit = _parse_matrix(sysec["a"])
        b_explicit = _parse_matrix(sysec["b"])
        d, m = a_explicit.shape[0], b_explicit.shape[1]
    elif source == "jetstar-lateral":
        a_explicit, b_explicit = JETSTAR_A, JETSTAR_B
        d, m = 4, 2

    sigma_default = "1.0" if source == "jetstar-lateral" else None
    sigma_text = sysec.get("sigma", fallback=sigma_default)
    if sigma_text is None:
        raise ConfigError("missing system sigma")
    gamma_text = sysec.get("gamma", fallback=None)
    if gamma_text is None:
        raise ConfigError("missing system gamma")

    horizon_text = run_get("horizon")
    if horizon_text is None:
        raise ConfigError("missing run horizon")
    try:
        horizons = tuple(int(t.strip()) for t in str(horizon_text).split(","))
    except ValueError:
        raise ConfigError(f"bad horizon list {horizon_text!r}") from None

    policies = tuple(p.strip() for p in run_get("policy", "greedy").split(","))
    for p in policies:
        if p not in POLICIES:
            raise ConfigError(f"unknown policy {p!r}, expected one of {POLICIES}")

    crit = Criterion.from_string(run_get("criterion", "A"))
    mode = run_get("mode", "known-b").strip()
    if mode not in ("full", "known-b"):
        raise ConfigError(f"mode must be 'full' or 'known-b', got {mode!r}")
    if mode == "known-b" and source == "random-ensemble" and not sysec.getboolean(
        "b_identity", fallback=True
    ):
        raise ConfigError("known-b with a random ensemble requires b_identity = true")

    def section_get(section, key, fallback=None):
        if key in overrides:
            return overrides[key]
        if section in parser and key in parser[section]:
            return parser[section][key]
        return fallback

    eta_text = section_get("gradient", "eta", section_get("oracle", "eta"))
    eta = None if eta_text in (None, "auto") else float(eta_text)
    grad_section = "mse-gradient" if "mse-gradient" in parser else "gradient"

    cfg = ExperimentConfig(
        source=source,
        mode=mode,
        policies=policies,
        crit=crit,
        horizons=horizons,
        gamma=float(gamma_text),
        sigma=float(sigma_text),
        seeds=int(run_get("seeds", "1")),
        seed_base=int(run_get("seed_base", "0")),
        ridge=float(run_get("ridge", "1e-6")),
        d=d,
        m=m,
        b_identity=sysec.getboolean("b_identity", fallback=True),
        eigen_scale=sysec.getfloat("eigen_scale", fallback=0.9),
        a_explicit=a_explicit,
        b_explicit=b_explicit,
        schedule=section_get(grad_section, "schedule", "0,10,T/2,T"),
        n_grad=int(section_get(grad_section, "n_grad", "120")),
        batch=int(
            section_get(
                "oracle", "batch",
                section_get("mse-gradient", "batch", section_get("gradient", "batch", "100")),
            )
        ),
        eta=eta,
        stop_tol=float(section_get(grad_section, "stop_tol", section_get("oracle", "stop_tol", "0.0"))),
        qp_tol=float(section_get("greedy", "qp_tol", "1e-10")),
        out=run_get("out"),
    )
    _validate(cfg)
    return cfg


def _validate(cfg: ExperimentConfig):
    if any(t < 1 for t in cfg.horizons):
        raise ConfigError("horizons must be positive")
    if cfg.gamma <= 0 or cfg.sigma < 0:
        raise ConfigError("gamma must be positive and sigma nonnegative")
    if cfg.seeds < 1:
        raise ConfigError("seed count must be >= 1")
    if cfg.ridge < 0:
        raise ConfigError("ridge must be nonnegative")
    if "greedy" in cfg.policies and cfg.crit not in (Criterion.A, Criterion.D):
        raise ConfigError("the greedy policy supports criteria A and D only")
    if any(p in ("gradient", "mse-gradient") for p in cfg.policies):
        for t in cfg.horizons:
            try:
                Schedule.parse(cfg.schedule, t)
            except ValueError as exc:
                raise ConfigError(f"bad schedule {cfg.schedule!r}: {exc}") from None


def random_system(
    seed: int, d: int, m: int, eigen_scale: float = 0.9,
    sigma: float = 1e-2, gamma: float = 1.0, b_identity: bool = True,
) -> LtiSystem:
    """Draw a controllable system: A ~ iid N(0, 1/d), spectral radius capped."""
    rng = stream_rng(seed, STREAM_SYSTEM_DRAW)
    for _ in range(10):
        a = rng.standard_normal((d, d)) / np.sqrt(d)
        rho = float(np.max(np.abs(np.linalg.eigvals(a))))
        if rho > eigen_scale:
            a = a * (eigen_scale / rho)
        b = np.eye(d) if (b_identity and m == d) else rng.standard_normal((d, m)) / np.sqrt(d)
        try:
            return LtiSystem(a=a, b=b, sigma=sigma, gamma=gamma)
        except ControllabilityError:
            continue
    raise ControllabilityError(f"no controllable draw after 10 attempts (seed {seed})")


def build_system(cfg: ExperimentConfig, seed: int) -> LtiSystem:
    if cfg.source == "random-ensemble":
        return random_system(
            seed, cfg.d, cfg.m, cfg.eigen_scale, cfg.sigma, cfg.gamma, cfg.b_identity
        )
    return LtiSystem(a=cfg.a_explicit, b=cfg.b_explicit, sigma=cfg.sigma, gamma=cfg.gamma)


def _run_trial(cfg: ExperimentConfig, policy: str, horizon: int, seed: int):
    """One (policy, seed) trial; returns CSV rows or an error marker row."""
    try:
        sys_ = build_system(cfg, seed)
        mode = IdentMode.with_known_b(sys_.b) if cfg.mode == "known-b" else IdentMode.full()
        result = sequential_identify(
            sys_, mode, policy, Schedule.parse(cfg.schedule, horizon),
            seed=seed, crit=cfg.crit, gamma=cfg.gamma, ridge=cfg.ridge,
            n_grad=cfg.n_grad, batch=cfg.batch, eta=cfg.eta,
            qp_tol=cfg.qp_tol, stop_tol=cfg.stop_tol,
        )
        rows = []
        cum_time = 0.0
        cum_energy = 0.0
        for t in range(horizon):
            cum_time += result.ctrl_seconds[t]
            cum_energy += result.energy[t]
            rows.append((seed, policy, t, result.errors[t], cum_time, cum_energy))
        return rows, None
    except Exception as exc:  # per-trial isolation: the ensemble continues
        return [(seed, policy, -1, float("nan"), float("nan"), float("nan"))], str(exc)


def _format_row(row) -> List[str]:
    seed, policy, t, err, secs, energy = row
    return [str(seed), policy, str(t), repr(float(err)), repr(float(secs)), repr(float(energy))]


def run_ensemble(
    cfg: ExperimentConfig,
    out: TextIO,
    workers: int = 1,
    timestamp: bool = True,
) -> int:
    """Run every (policy, horizon, seed) trial and stream sorted CSV rows.

    Returns a process exit code: 0, or EXIT_FAILURES when more than 5% of
    trials raised. Output bytes are independent of the worker count.
    timestamp=False selects deterministic output: no timestamp header and the
    wall-clock column written as 0.0, so repeated runs are byte-identical.
    """
    jobs = [
        (policy, horizon, cfg.seed_base + i)
        for policy in cfg.policies
        for horizon in cfg.horizons
        for i in range(cfg.seeds)
    ]
    results = {}
    failures = []
    if workers > 1:
        with concurrent.futures.ProcessPoolExecutor(
            max_workers=workers, initializer=_worker_init
        ) as pool:
            futures = {
                pool.submit(_run_trial, cfg, policy, horizon, seed): (policy, horizon, seed)
                for policy, horizon, seed in jobs
            }
            for fut in concurrent.futures.as_completed(futures):
                key = futures[fut]
                rows, err = fut.result()
                results[key] = rows
                if err is not None:
                    failures.append((key, err))
    else:
        for policy, horizon, seed in jobs:
            rows, err = _run_trial(cfg, policy, horizon, seed)
            results[(policy, horizon, seed)] = rows
            if err is not None:
                failures.append(((policy, horizon, seed), err))

    if timestamp:
        out.write(f"# generated: {time.strftime('%Y-%m-%dT%H:%M:%S')}\n")
    out.write(f"# config: {config_summary(cfg)}\n")
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for key in sorted(results, key=lambda k: (k[0], k[1], k[2])):
        for row in results[key]:
            if not timestamp:
                row = row[:4] + (0.0,) + row[5:]
            writer.writerow(_format_row(row))

    for key, err in failures:
        print(f"trial {key} failed: {err}", file=_sys.stderr)
    if len(failures) > 0.05 * len(jobs):
        return EXIT_FAILURES
    return EXIT_OK


def _worker_init():
    os.environ.setdefault("OMP_NUM_THREADS", "1")


def config_summary(cfg: ExperimentConfig) -> str:
    parts = [
        f"source={cfg.source}", f"mode={cfg.mode}", f"policies={'|'.join(cfg.policies)}",
        f"crit={cfg.crit.value}", f"horizons={'|'.join(map(str, cfg.horizons))}",
        f"gamma={cfg.gamma!r}", f"sigma={cfg.sigma!r}", f"seeds={cfg.seeds}",
        f"seed_base={cfg.seed_base}", f"ridge={cfg.ridge!r}", f"n_grad={cfg.n_grad}",
        f"batch={cfg.batch}", f"schedule={cfg.schedule}",
    ]
    return " ".join(parts)


@dataclass
class TrialSummary:
    policy: str
    n_grad: int
    horizon: int
    seed: int
    final_error: float
    ctrl_rate: float  # controller seconds per step


def read_records(path: str) -> List[TrialSummary]:
    """Collapse a harness CSV into per-trial summaries.

    Trials at different horizons in the same file are distinguished by their
    final time index; the per-trial summary keeps the last row of each
    (policy, seed, horizon) trace.
    """
    n_grad = 0
    data_lines = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        for line in fh:
            if line.startswith("#"):
                if line.startswith("# config:"):
                    for token in line.split():
                        if token.startswith("n_grad="):
                            n_grad = int(token.split("=", 1)[1])
                continue
            data_lines.append(line)
    reader = csv.reader(data_lines)
    header = next(reader, None)
    if header != CSV_HEADER:
        raise ValueError(f"unexpected CSV columns {header}, expected {CSV_HEADER}")
    summaries = []
    current = None  # (policy, seed, t, err, secs) of the open trial's last row

    def flush():
        if current is not None:
            policy, seed, t, err, secs = current
            summaries.append(
                TrialSummary(
                    policy=policy, n_grad=n_grad, horizon=t + 1, seed=seed,
                    final_error=err, ctrl_rate=secs / (t + 1),
                )
            )

    for row in reader:
        seed, policy, t = int(row[0]), row[1], int(row[2])
        if t < 0:
            continue  # error marker row
        if current is not None and (
            policy != current[0] or seed != current[1] or t <= current[2]
        ):
            flush()
            current = None
        current = (policy, seed, t, float(row[3]), float(row[4]))
    flush()
    return sorted(summaries, key=lambda s: (s.policy, s.horizon, s.seed))


@dataclass
class PerformanceFit:
    policy: str
    n_grad: int
    c: float  # median controller seconds per step
    eta: float  # fitted error scale in eps = eta / T
    slope: float  # fitted log-log slope of eps vs T


def fit_performance_model(summaries: Sequence[TrialSummary]):
    """Fit eps = eta(c)/T per (policy, n_grad) bucket.

    eps(T) is half the median final squared error over the bucket's trials at
    horizon T; the fit regresses log eps on log T. Buckets with fewer than 3
    distinct horizons are skipped with a warning. Returns (fits, grid_rows)
    where grid_rows carry one (policy, n_grad, T, c, eps) record per cell for
    offline re-plotting.
    """
    buckets = {}
    for s in summaries:
        buckets.setdefault((s.policy, s.n_grad), {}).setdefault(s.horizon, []).append(s)
    fits = []
    grid_rows = []
    for (policy, n_grad), by_horizon in sorted(buckets.items()):
        cells = []
        for horizon, trials in sorted(by_horizon.items()):
            errs = np.array([t.final_error for t in trials])
            rates = np.array([t.ctrl_rate for t in trials])
            cell = {
                "policy": policy, "n_grad": n_grad, "T": horizon,
                "c": float(np.median(rates)),
                "eps_median": 0.5 * float(np.median(errs)),
                "eps_mean": 0.5 * float(np.mean(errs)),
                "n_trials": len(trials),
            }
            cells.append(cell)
            grid_rows.append(cell)
        if len(cells) < 3:
            print(
                f"skipping bucket ({policy}, n_grad={n_grad}): "
                f"{len(cells)} horizon(s) < 3",
                file=_sys.stderr,
            )
            continue
        log_t = np.log([c["T"] for c in cells])
        log_e = np.log([c["eps_median"] for c in cells])
        slope, intercept = np.polyfit(log_t, log_e, 1)
        # eta from the 1/T model: log eps = log eta - log T
        eta = float(np.exp(np.mean(log_e + log_t)))
        fits.append(
            PerformanceFit(
                policy=policy, n_grad=n_grad,
                c=float(np.median([c["c"] for c in cells])),
                eta=eta, slope=float(slope),
            )
        )
    return fits, grid_rows


def write_grid_csv(grid_rows, out: TextIO):
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(GRID_HEADER)
    for cell in grid_rows:
        writer.writerow(
            [
                cell["policy"], str(cell["n_grad"]), str(cell["T"]),
                repr(cell["c"]), repr(cell["eps_median"]), repr(cell["eps_mean"]),
                str(cell["n_trials"]),
            ]
        )
