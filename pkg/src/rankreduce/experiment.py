"""Monte-Carlo experiment runner: config parsing, seeded runs, CSV output.

An experiment is a SimConfig plus a mode. Rank-sweep mode runs the
reduced-rank receiver once per candidate rank (sharing one scenario per run
so comparisons are paired) and reports one aggregate row per sweep point.
Convergence mode runs a single rank and reports one row per symbol index so
the learning curve, including the switch from training to decision-directed
operation, can be plotted.

Runs are numbered 0 .. runs-1 and run r draws everything from its own
generator seeded with seed + r, so results are a pure function of the
config. Runs may execute in a process pool; aggregation iterates the
per-run results in run order regardless of scheduling, which keeps the
output byte-identical for any worker count.
"""

from __future__ import annotations

import dataclasses
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from itertools import repeat

import numpy as np

from .cdma import ScenarioParams, build_scenario, run_ber_trial
from .exceptions import ConfigError
from .rls import full_rank_init, jio_init

RANK_SWEEP = "rank-sweep"
CONVERGENCE = "convergence"

RECEIVER_JIO = "jio"
RECEIVER_FULL_RANK = "full_rank"

# D column value used for the full-rank receiver, which has no reduced rank.
FULL_RANK_D = 0

_MAX_SEED = 2**64 - 1


@dataclass(frozen=True)
class SimConfig:
    """Validated experiment parameters.

    Defaults are desk-scale: a 48-dimensional space-time problem that a
    full Monte-Carlo batch finishes in minutes on one machine. snr_db may
    be `inf` for noiseless runs; doppler 0 freezes the channels.
    """

    N: int = 16
    K: int = 6
    J: int = 2
    Lp: int = 9
    snr_db: float = 12.0
    lam: float = 0.998
    D: tuple = (4,)
    train_symbols: int = 200
    total_symbols: int = 1500
    runs: int = 100
    doppler: float = 0.001
    delta: float = 0.01
    delta_bar: float = 0.01
    delta_w: float = 0.01
    seed: int = 12345
    receivers: tuple = (RECEIVER_JIO, RECEIVER_FULL_RANK)

    def __post_init__(self):
        for name in ("N", "K", "J", "Lp", "train_symbols", "total_symbols", "runs"):
            value = getattr(self, name)
            if not isinstance(value, int) or value < 1:
                raise ConfigError(f"{name} must be a positive integer, got {value!r}")
        if self.total_symbols <= self.train_symbols:
            raise ConfigError(
                f"total_symbols must exceed train_symbols, got "
                f"{self.total_symbols} <= {self.train_symbols}"
            )
        if math.isnan(self.snr_db) or self.snr_db == -math.inf:
            raise ConfigError(f"snr_db must be a real number or inf, got {self.snr_db}")
        if not 0.0 < self.lam <= 1.0:
            raise ConfigError(f"lambda must be in (0, 1], got {self.lam}")
        if not 0.0 <= self.doppler < math.inf:
            raise ConfigError(f"doppler must be finite and non-negative, got {self.doppler}")
        for name in ("delta", "delta_bar", "delta_w"):
            value = getattr(self, name)
            if not 0.0 < value < math.inf:
                raise ConfigError(f"{name} must be finite and positive, got {value}")
        if not self.D:
            raise ConfigError("D must name at least one rank")
        dim = self.J * (self.N + self.Lp - 1)
        for d in self.D:
            if not isinstance(d, int) or not 1 <= d <= dim:
                raise ConfigError(f"D values must be integers in [1, {dim}], got {d!r}")
        if len(set(self.D)) != len(self.D):
            raise ConfigError(f"D values must be distinct, got {self.D}")
        if not isinstance(self.seed, int) or not 0 <= self.seed <= _MAX_SEED:
            raise ConfigError(f"seed must be an unsigned 64-bit integer, got {self.seed!r}")
        if not self.receivers:
            raise ConfigError("receivers must name at least one receiver")
        for name in self.receivers:
            if name not in (RECEIVER_JIO, RECEIVER_FULL_RANK):
                raise ConfigError(
                    f"receivers contains unknown name {name!r}; choose from "
                    f"{RECEIVER_JIO!r}, {RECEIVER_FULL_RANK!r}"
                )
        if len(set(self.receivers)) != len(self.receivers):
            raise ConfigError(f"receivers must be distinct, got {self.receivers}")

    @property
    def stacked_dim(self) -> int:
        return self.J * (self.N + self.Lp - 1)

    def scenario_params(self) -> ScenarioParams:
        return ScenarioParams(
            n_chips=self.N,
            n_users=self.K,
            n_antennas=self.J,
            n_taps=self.Lp,
            snr_db=self.snr_db,
            n_symbols=self.total_symbols,
            doppler=self.doppler,
        )

    def make_receiver(self, name: str, rank: int):
        if name == RECEIVER_JIO:
            return jio_init(
                self.stacked_dim,
                rank,
                lam=self.lam,
                delta=self.delta,
                delta_reduced=self.delta_bar,
                delta_weights=self.delta_w,
            )
        if name == RECEIVER_FULL_RANK:
            return full_rank_init(self.stacked_dim, lam=self.lam, delta=self.delta)
        raise ConfigError(f"unknown receiver {name!r}")


def _parse_int(key: str, raw: str, lineno: int) -> int:
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"line {lineno}: {key} expects an integer, got {raw!r}") from None


def _parse_float(key: str, raw: str, lineno: int) -> float:
    try:
        return float(raw)
    except ValueError:
        raise ConfigError(f"line {lineno}: {key} expects a number, got {raw!r}") from None


def _parse_ranks(key: str, raw: str, lineno: int) -> tuple:
    """Rank lists come as one value, a comma list, or a lo..hi range."""
    if ".." in raw:
        lo_raw, _, hi_raw = raw.partition("..")
        lo = _parse_int(key, lo_raw.strip(), lineno)
        hi = _parse_int(key, hi_raw.strip(), lineno)
        if hi < lo:
            raise ConfigError(f"line {lineno}: empty rank range {raw!r}")
        return tuple(range(lo, hi + 1))
    return tuple(_parse_int(key, part.strip(), lineno) for part in raw.split(","))


def _parse_receivers(key: str, raw: str, lineno: int) -> tuple:
    names = tuple(part.strip() for part in raw.split(","))
    if any(not name for name in names):
        raise ConfigError(f"line {lineno}: empty receiver name in {raw!r}")
    return names


_PARSERS = {
    "N": _parse_int,
    "K": _parse_int,
    "J": _parse_int,
    "Lp": _parse_int,
    "snr_db": _parse_float,
    "lambda": _parse_float,
    "D": _parse_ranks,
    "train_symbols": _parse_int,
    "total_symbols": _parse_int,
    "runs": _parse_int,
    "doppler": _parse_float,
    "delta": _parse_float,
    "delta_bar": _parse_float,
    "delta_w": _parse_float,
    "seed": _parse_int,
    "receivers": _parse_receivers,
}

# Config file key -> SimConfig attribute ('lambda' is reserved in Python).
_KEY_TO_FIELD = {key: ("lam" if key == "lambda" else key) for key in _PARSERS}


def parse_config(text: str) -> SimConfig:
    """Parse key=value text into a SimConfig.

    '#' starts a comment anywhere on a line; blank lines are skipped;
    missing keys take the SimConfig defaults. Unknown keys, repeated keys,
    malformed lines, and out-of-range values raise ConfigError naming the
    line.
    """
    values = {}
    seen_lines = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        key, eq, raw = body.partition("=")
        key, raw = key.strip(), raw.strip()
        if not eq or not key:
            raise ConfigError(f"line {lineno}: expected key=value, got {line.strip()!r}")
        if key not in _PARSERS:
            known = ", ".join(sorted(_PARSERS))
            raise ConfigError(f"line {lineno}: unknown key {key!r} (known keys: {known})")
        if key in seen_lines:
            raise ConfigError(
                f"line {lineno}: duplicate key {key!r} (first set on line {seen_lines[key]})"
            )
        seen_lines[key] = lineno
        values[_KEY_TO_FIELD[key]] = _PARSERS[key](key, raw, lineno)
    try:
        return SimConfig(**values)
    except ConfigError as exc:
        # Validation messages lead with the offending key; recover its line.
        token = str(exc).split(maxsplit=1)[0] if str(exc) else ""
        if token in seen_lines:
            raise ConfigError(f"line {seen_lines[token]}: {exc}") from None
        raise


def _echo_float(value: float) -> str:
    return repr(float(value))


def config_echo_lines(cfg: SimConfig) -> list:
    """Render a config as key=value lines that parse back to an equal one."""
    return [
        f"N={cfg.N}",
        f"K={cfg.K}",
        f"J={cfg.J}",
        f"Lp={cfg.Lp}",
        f"snr_db={_echo_float(cfg.snr_db)}",
        f"lambda={_echo_float(cfg.lam)}",
        "D=" + ",".join(str(d) for d in cfg.D),
        f"train_symbols={cfg.train_symbols}",
        f"total_symbols={cfg.total_symbols}",
        f"runs={cfg.runs}",
        f"doppler={_echo_float(cfg.doppler)}",
        f"delta={_echo_float(cfg.delta)}",
        f"delta_bar={_echo_float(cfg.delta_bar)}",
        f"delta_w={_echo_float(cfg.delta_w)}",
        f"seed={cfg.seed}",
        "receivers=" + ",".join(cfg.receivers),
    ]


@dataclass(frozen=True)
class ResultRow:
    """One aggregated CSV row.

    `index` is the sweep rank in rank-sweep mode and the one-based symbol
    number in convergence mode. Full-rank rows carry D = 0 since no
    reduction is in play.
    """

    experiment: str
    receiver: str
    D: int
    index: int
    ber: float
    sinr_db: float
    runs: int
    seed: int


def _sinr_db(linear_sum: float, count: int) -> float:
    mean = linear_sum / count
    return 10.0 * math.log10(mean) if mean > 0.0 else -math.inf


def _trial_points(cfg: SimConfig) -> list:
    """(receiver, rank) pairs in output order: full-rank baseline first."""
    points = []
    if RECEIVER_FULL_RANK in cfg.receivers:
        points.append((RECEIVER_FULL_RANK, FULL_RANK_D))
    if RECEIVER_JIO in cfg.receivers:
        points.extend((RECEIVER_JIO, d) for d in sorted(cfg.D))
    return points


def _sweep_run(cfg: SimConfig, run_index: int) -> dict:
    """One paired run: every (receiver, rank) sees the same scenario."""
    rng = np.random.default_rng(cfg.seed + run_index)
    scenario = build_scenario(cfg.scenario_params(), rng)
    post = slice(cfg.train_symbols, cfg.total_symbols)
    out = {}
    for name, rank in _trial_points(cfg):
        state = cfg.make_receiver(name, rank)
        result = run_ber_trial(scenario, state, cfg.train_symbols, cfg.total_symbols)
        out[(name, rank)] = (
            int(result.errors[post].sum()),
            float(result.sinr[post].sum()),
        )
    return out


def _convergence_run(cfg: SimConfig, run_index: int) -> dict:
    rng = np.random.default_rng(cfg.seed + run_index)
    scenario = build_scenario(cfg.scenario_params(), rng)
    out = {}
    for name, rank in _trial_points(cfg):
        state = cfg.make_receiver(name, rank)
        result = run_ber_trial(scenario, state, cfg.train_symbols, cfg.total_symbols)
        out[(name, rank)] = (
            result.errors.astype(np.int64),
            result.sinr.astype(np.float64),
        )
    return out


def _worker_count(runs: int) -> int:
    env = os.environ.get("RANKREDUCE_WORKERS", "").strip()
    if env:
        try:
            requested = int(env)
        except ValueError:
            raise ConfigError(f"RANKREDUCE_WORKERS must be an integer, got {env!r}") from None
        return max(1, requested)
    return max(1, min(os.cpu_count() or 1, runs, 8))


def _map_runs(worker, cfg: SimConfig) -> list:
    """Execute one worker call per run, in a process pool when it helps."""
    workers = _worker_count(cfg.runs)
    if workers == 1 or cfg.runs == 1:
        return [worker(cfg, i) for i in range(cfg.runs)]
    chunk = max(1, cfg.runs // (4 * workers))
    try:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(worker, repeat(cfg), range(cfg.runs), chunksize=chunk))
    except (OSError, PermissionError):
        # Restricted environments without process support fall back to serial.
        return [worker(cfg, i) for i in range(cfg.runs)]


def run_rank_sweep(cfg: SimConfig) -> list:
    """Mean post-training BER and SINR per sweep point, paired across runs."""
    per_run = _map_runs(_sweep_run, cfg)
    post_count = cfg.runs * (cfg.total_symbols - cfg.train_symbols)
    rows = []
    for name, rank in _trial_points(cfg):
        errors = sum(run[(name, rank)][0] for run in per_run)
        sinr_sum = sum(run[(name, rank)][1] for run in per_run)
        rows.append(
            ResultRow(
                experiment=RANK_SWEEP,
                receiver=name,
                D=rank,
                index=rank,
                ber=errors / post_count,
                sinr_db=_sinr_db(sinr_sum, post_count),
                runs=cfg.runs,
                seed=cfg.seed,
            )
        )
    return rows


def run_convergence(cfg: SimConfig) -> list:
    """Per-symbol BER and SINR averaged over runs, one block per receiver."""
    if len(cfg.D) != 1:
        raise ConfigError(f"convergence mode needs exactly one D value, got {len(cfg.D)}")
    per_run = _map_runs(_convergence_run, cfg)
    rows = []
    for name, rank in _trial_points(cfg):
        errors = sum(run[(name, rank)][0] for run in per_run)
        sinr_sum = sum(run[(name, rank)][1] for run in per_run)
        for i in range(cfg.total_symbols):
            rows.append(
                ResultRow(
                    experiment=CONVERGENCE,
                    receiver=name,
                    D=rank,
                    index=i + 1,
                    ber=float(errors[i]) / cfg.runs,
                    sinr_db=_sinr_db(float(sinr_sum[i]), cfg.runs),
                    runs=cfg.runs,
                    seed=cfg.seed,
                )
            )
    return rows


CSV_HEADER = "experiment,receiver,D,index,ber,sinr_db,runs,seed"


def _csv_float(value: float) -> str:
    return format(value, ".10g")


def write_csv(rows, destination, echo=()) -> None:
    """Write result rows with the config echoed as leading comment lines.

    Floats are rendered with %.10g and a '.' decimal point regardless of
    locale; a mean linear SINR of zero renders as -inf. Line endings are
    '\\n' on every platform so identical inputs give identical bytes.
    """
    rows = list(rows)
    if not rows:
        raise ValueError("write_csv needs at least one row")
    with open(destination, "w", encoding="utf-8", newline="\n") as fh:
        for line in echo:
            fh.write(f"# {line}\n")
        fh.write(CSV_HEADER + "\n")
        for row in rows:
            fh.write(
                f"{row.experiment},{row.receiver},{row.D},{row.index},"
                f"{_csv_float(row.ber)},{_csv_float(row.sinr_db)},{row.runs},{row.seed}\n"
            )


def replace_config(cfg: SimConfig, **overrides) -> SimConfig:
    """A copy with fields overridden, re-running validation."""
    return dataclasses.replace(cfg, **overrides)
