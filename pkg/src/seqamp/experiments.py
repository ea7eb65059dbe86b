"""Experiment harness: config parsing, seeded sweeps, CSV emission.

The config file is line-oriented ``key = value`` text with ``#`` comments.
Keys mirror the SystemConfig fields (``lambda`` maps to the ``lam`` field;
``r0`` sets ``r_scale = 1/2**r0``; range fields split into ``dist_min_km``
etc.).  Exactly one of the sweepable keys (tx_power_dbm, pilot_len, r0,
lambda, adp_duration_s) may carry a comma-separated list, which becomes the
sweep axis.  CLI flags override file values, which override defaults.

Every (sweep point, trial) pair owns hash-derived streams, all requested
algorithms consume the identical Scenario (paired comparison), and rows are
sorted deterministically before writing, so a repeated run with the same
config and seed produces a byte-identical CSV.
"""

from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import baselines
from .config import SystemConfig
from .detection import detect_sequence, detection_counts
from .scenario import Scenario, make_scenario
from .sequential import s_amp_run
from .state_evolution import SE_TRACE_SAMPLES, se_sequential_trace

__all__ = [
    "ConfigError",
    "ExperimentSpec",
    "MetricsRecord",
    "load_config",
    "run_experiment",
    "run_se",
    "write_csv",
    "write_se_csv",
    "ALGORITHMS",
    "SWEEP_KEYS",
]

ALGORITHMS = ("s_amp", "amp_mmse", "amp_soft", "omp", "oracle_ls", "se_trace")
SWEEP_KEYS = ("tx_power_dbm", "pilot_len", "r0", "lambda", "adp_duration_s")
CSV_HEADER = "sweep_axis,sweep_value,algorithm,adt,nmse_x_db,nmse_h_db,dep,trials,seed"
SE_CSV_HEADER = "t,algorithm,nor_ct,pilot_len,tx_power_dbm"
CALIBRATION_TRIAL = -1  # held-out trial index for soft-threshold tuning

_INT_KEYS = {"n_users", "pilot_len", "n_adts", "amp_iters", "seed", "n_trials"}
_FLOAT_KEYS = {
    "lambda", "r_scale", "r0", "tx_power_dbm", "noise_psd_dbm_hz",
    "bandwidth_hz", "adp_duration_s", "carrier_hz", "dist_min_km",
    "dist_max_km", "speed_min_kmh", "speed_max_kmh", "pathloss_intercept_db",
    "pathloss_slope", "c0_factor", "nor_ref_dbm", "soft_alpha",
}
_STR_KEYS = {"algos", "out"}
_ALL_KEYS = _INT_KEYS | _FLOAT_KEYS | _STR_KEYS


class ConfigError(ValueError):
    """Malformed or contradictory experiment configuration."""


@dataclass(frozen=True)
class ExperimentSpec:
    """A resolved experiment: base config, one optional sweep axis, outputs."""

    base: SystemConfig
    axis: str | None = None
    values: tuple = ()
    algorithms: tuple[str, ...] = ("s_amp", "amp_mmse")
    out: str = "results.csv"
    workers: int = 1

    def __post_init__(self):
        bad = [a for a in self.algorithms if a not in ALGORITHMS]
        if bad:
            raise ConfigError(f"unknown algorithm(s): {', '.join(bad)}")
        if self.axis is not None and self.axis not in SWEEP_KEYS:
            raise ConfigError(f"{self.axis} is not a sweepable key")
        if not self.algorithms:
            raise ConfigError("at least one algorithm is required")

    def sweep_points(self) -> list[tuple[object, SystemConfig]]:
        """(value, config) pairs; a single (None, base) point without an axis."""
        if self.axis is None:
            return [(None, self.base)]
        return [(v, _apply_axis(self.base, self.axis, v)) for v in self.values]


@dataclass(frozen=True)
class MetricsRecord:
    sweep_axis: str
    sweep_value: object
    algorithm: str
    adt: object              # 1-based int or "all"
    nmse_x_db: float
    nmse_h_db: float
    dep: float
    trials: int
    wall_time_s: float
    seed: int


def _apply_axis(cfg: SystemConfig, axis: str, value) -> SystemConfig:
    if axis == "pilot_len":
        return cfg.with_(pilot_len=int(value))
    if axis == "tx_power_dbm":
        return cfg.with_(tx_power_dbm=float(value))
    if axis == "lambda":
        return cfg.with_(lam=float(value))
    if axis == "adp_duration_s":
        return cfg.with_(adp_duration_s=float(value))
    if axis == "r0":
        return cfg.with_(r_scale=1.0 / 2.0 ** float(value))
    raise ConfigError(f"unknown sweep axis {axis}")


def _parse_scalar(key: str, text: str, where: str):
    try:
        if key in _INT_KEYS:
            return int(text)
        if key in _FLOAT_KEYS:
            return float(text)
        return text
    except ValueError:
        raise ConfigError(f"{where}: malformed value {text!r} for key {key!r}") from None


def parse_config_text(text: str) -> dict:
    """Parse ``key = value`` lines into a raw entry dict (lists for sweeps)."""
    entries: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if key not in _ALL_KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        entries[key] = _parse_entry(key, value, f"line {lineno}")
    return entries


def _parse_entry(key: str, value: str, where: str):
    if "," in value and key not in _STR_KEYS:
        if key not in SWEEP_KEYS:
            raise ConfigError(f"{where}: key {key!r} does not accept a list")
        parts = [p.strip() for p in value.split(",") if p.strip()]
        if not parts:
            raise ConfigError(f"{where}: empty list for key {key!r}")
        return [_parse_scalar(key, p, where) for p in parts]
    return _parse_scalar(key, value, where)


def _build_spec(entries: dict, desk: bool, workers: int) -> ExperimentSpec:
    fields = dict(
        n_users=500, pilot_len=125, n_adts=10, n_trials=20,
    ) if desk else {}
    axis, values = None, ()
    for key, val in entries.items():
        if isinstance(val, list):
            if axis is not None:
                raise ConfigError(
                    f"two sweep axes given ({axis} and {key}); exactly one is allowed")
            axis, values = key, tuple(val)
            continue
        if key == "lambda":
            fields["lam"] = val
        elif key == "r0":
            fields["r_scale"] = 1.0 / 2.0 ** float(val)
        elif key == "dist_min_km":
            lo, hi = fields.get("dist_range_km", SystemConfig.dist_range_km)
            fields["dist_range_km"] = (val, hi)
        elif key == "dist_max_km":
            lo, hi = fields.get("dist_range_km", SystemConfig.dist_range_km)
            fields["dist_range_km"] = (lo, val)
        elif key == "speed_min_kmh":
            lo, hi = fields.get("speed_range_kmh", SystemConfig.speed_range_kmh)
            fields["speed_range_kmh"] = (val, hi)
        elif key == "speed_max_kmh":
            lo, hi = fields.get("speed_range_kmh", SystemConfig.speed_range_kmh)
            fields["speed_range_kmh"] = (lo, val)
        elif key in ("algos", "out"):
            continue
        else:
            fields[key] = val
    try:
        base = SystemConfig(**fields)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    algos = entries.get("algos", "s_amp,amp_mmse")
    algorithms = tuple(a.strip() for a in algos.split(",") if a.strip())
    out = entries.get("out", "results.csv")
    return ExperimentSpec(base, axis, values, algorithms, out, workers)


def load_config(path: str | None = None, flags: dict | None = None,
                desk: bool = False, workers: int = 1) -> ExperimentSpec:
    """Resolve an ExperimentSpec from defaults <- desk <- file <- flags."""
    entries: dict = {}
    if path is not None:
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config file {path}: {exc}") from exc
        entries.update(parse_config_text(text))
    for key, value in (flags or {}).items():
        if value is None:
            continue
        if key not in _ALL_KEYS:
            raise ConfigError(f"unknown config key {key!r} from flags")
        entries[key] = _parse_entry(key, str(value), f"flag --{key}")
    return _build_spec(entries, desk, workers)


# ---------------------------------------------------------------------------
# sweep execution


def _algo_matrices(name: str, scenario: Scenario, cfg: SystemConfig):
    """(x_hat, decisions) as (N, T) matrices for one algorithm on one scenario."""
    if name == "s_amp":
        det = detect_sequence(s_amp_run(scenario, cfg))
        return det.channel_est, det.decisions
    if name == "amp_mmse":
        det = detect_sequence(baselines.amp_mmse(scenario, cfg))
        return det.channel_est, det.decisions
    n, t_total = scenario.sparse_signal.shape
    x_hat = np.zeros((n, t_total), dtype=complex)
    dec = np.zeros((n, t_total), dtype=np.int8)
    for t in range(t_total):
        y = scenario.received[:, t]
        if name == "amp_soft":
            res = baselines.amp_soft(y, scenario.pilots, cfg,
                                     noise_var=scenario.noise_var)
        elif name == "omp":
            res = baselines.omp(y, scenario.pilots, cfg,
                                noise_var=scenario.noise_var)
        elif name == "oracle_ls":
            res = baselines.oracle_ls(y, scenario.pilots, scenario.activity[:, t])
        else:
            raise ConfigError(f"unknown algorithm {name!r}")
        x_hat[:, t] = res.estimate
        dec[:, t] = res.support
    return x_hat, dec


def _trial_raw(cfg: SystemConfig, trial: int, algorithms: tuple[str, ...]) -> dict:
    """Per-ADT error/energy/count sums for every algorithm on one scenario."""
    scenario = make_scenario(cfg, trial)
    truth_x = scenario.sparse_signal
    truth_h = scenario.channels
    active = scenario.activity.astype(bool)
    t_total = truth_x.shape[1]
    out: dict = {}
    for name in algorithms:
        try:
            x_hat, decisions = _algo_matrices(name, scenario, cfg)
            raw = np.empty((8, t_total))
            for t in range(t_total):
                m = active[:, t]
                raw[0, t] = np.sum(np.abs(x_hat[:, t] - truth_x[:, t]) ** 2)
                raw[1, t] = np.sum(np.abs(truth_x[:, t]) ** 2)
                raw[2, t] = np.sum(np.abs(x_hat[m, t] - truth_h[m, t]) ** 2)
                raw[3, t] = np.sum(np.abs(truth_h[m, t]) ** 2)
                fa, md, n_in, n_act = detection_counts(decisions[:, t],
                                                       scenario.activity[:, t])
                raw[4:8, t] = fa, md, n_in, n_act
            out[name] = raw
        except Exception as exc:  # error row downstream; other algos continue
            out[name] = f"{type(exc).__name__}: {exc}"
    return out


def _pooled_records(axis_name: str, value, cfg: SystemConfig, algorithms,
                    trial_results: list[dict], elapsed: float):
    """Aggregate pooled metrics into MetricsRecords (per ADT and overall)."""

    def _nmse(err: float, energy: float) -> float:
        if energy <= 0.0:
            return float("nan")
        if err == 0.0:
            return -300.0
        return max(10.0 * float(np.log10(err / energy)), -300.0)

    def _dep(fa, md, n_in, n_act) -> float:
        p_fa = fa / n_in if n_in else 0.0
        p_md = md / n_act if n_act else 0.0
        return p_fa + p_md

    records = []
    errors = []
    n_trials = len(trial_results)
    value_repr = 0 if value is None else value
    for name in algorithms:
        raws = [tr[name] for tr in trial_results]
        failures = [r for r in raws if isinstance(r, str)]
        if failures:
            records.append(MetricsRecord(axis_name, value_repr, name, "all",
                                         float("nan"), float("nan"), float("nan"),
                                         n_trials, elapsed, cfg.seed))
            errors.append(f"{name} @ {axis_name}={value_repr}: {failures[0]}")
            continue
        total = np.sum(np.stack(raws), axis=0)  # (8, T)
        for t in range(total.shape[1]):
            records.append(MetricsRecord(
                axis_name, value_repr, name, t + 1,
                _nmse(total[0, t], total[1, t]), _nmse(total[2, t], total[3, t]),
                _dep(*total[4:8, t]), n_trials, elapsed, cfg.seed))
        s = total.sum(axis=1)
        records.append(MetricsRecord(
            axis_name, value_repr, name, "all",
            _nmse(s[0], s[1]), _nmse(s[2], s[3]), _dep(*s[4:8]),
            n_trials, elapsed, cfg.seed))
    return records, errors


def run_experiment(spec: ExperimentSpec):
    """Execute the sweep; returns (records, errors).  Errors -> exit code 2.

    All algorithms at a sweep point consume identical scenarios (paired
    trials).  The soft-threshold multiplier is calibrated per sweep point on
    a held-out calibration trial before any scoring run.
    """
    mc_algos = tuple(a for a in spec.algorithms if a != "se_trace")
    records: list[MetricsRecord] = []
    errors: list[str] = []
    for value, cfg in spec.sweep_points():
        if not mc_algos:
            continue
        t0 = time.perf_counter()
        if "amp_soft" in mc_algos:
            cal = make_scenario(cfg, CALIBRATION_TRIAL)
            cfg = cfg.with_(soft_alpha=baselines.calibrate_soft_alpha(cal, cfg))
        trials = list(range(cfg.n_trials))
        if spec.workers > 1:
            with ProcessPoolExecutor(max_workers=spec.workers) as pool:
                trial_results = list(pool.map(
                    _trial_raw, [cfg] * len(trials), trials,
                    [mc_algos] * len(trials)))
        else:
            trial_results = [_trial_raw(cfg, tr, mc_algos) for tr in trials]
        elapsed = time.perf_counter() - t0
        axis_name = spec.axis if spec.axis is not None else "none"
        recs, errs = _pooled_records(axis_name, value, cfg, mc_algos,
                                     trial_results, elapsed)
        records.extend(recs)
        errors.extend(errs)
    records.sort(key=_record_sort_key)
    return records, errors


def _record_sort_key(rec: MetricsRecord):
    value = rec.sweep_value if rec.sweep_value is not None else 0
    adt_key = 0 if rec.adt == "all" else int(rec.adt)
    return (float(value), rec.algorithm, adt_key, rec.seed)


def _fmt(x) -> str:
    if isinstance(x, float):
        return format(x, ".17g")
    return str(x)


def write_csv(records: list[MetricsRecord], path: str) -> None:
    lines = [CSV_HEADER]
    for r in records:
        lines.append(",".join([
            r.sweep_axis, _fmt(r.sweep_value), r.algorithm, str(r.adt),
            _fmt(r.nmse_x_db), _fmt(r.nmse_h_db), _fmt(r.dep),
            str(r.trials), str(r.seed),
        ]))
    Path(path).write_text("\n".join(lines) + "\n")


def run_se(spec: ExperimentSpec, n_samples: int = SE_TRACE_SAMPLES):
    """Per-ADT normalised fixpoint rows for the sequential and static priors."""
    rows = []
    for value, cfg in spec.sweep_points():
        trace = se_sequential_trace(cfg, n_samples=n_samples)
        for i, t in enumerate(trace.adt):
            rows.append((int(t), "s_amp", trace.nor_seq[i],
                         cfg.pilot_len, cfg.tx_power_dbm))
            rows.append((int(t), "amp_mmse", trace.nor_static[i],
                         cfg.pilot_len, cfg.tx_power_dbm))
    rows.sort(key=lambda r: (r[3], r[4], r[0], r[1]))
    return rows


def write_se_csv(rows, path: str) -> None:
    lines = [SE_CSV_HEADER]
    for t, algo, nor_ct, pilot_len, power in rows:
        lines.append(f"{t},{algo},{_fmt(float(nor_ct))},{pilot_len},{_fmt(float(power))}")
    Path(path).write_text("\n".join(lines) + "\n")
