"""Monte Carlo link-level experiments: rate versus SNR and versus phase-noise level.

Every trial owns a seed derived from ``(master_seed, trial)``.  The channel,
codebook, phase-noise increments and noise samples are drawn as unit-scale
variables from separate child streams and then scaled, so all methods and
all sweep points of one trial see the same realization.
"""

from __future__ import annotations

import csv
import dataclasses
import io
import itertools
import json
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

import numpy as np
from scipy import stats

from .channel import ChannelParams, draw_channel, synth_on_grid
from .estimator import (
    OmpConfig,
    default_n_iter,
    estimate,
    scale_aligned_nmse,
    select_beams,
    vector_omp,
)
from .frontend import SystemConfig, make_trace, random_codebook, simulate_measurements
from .sensing import build_operator, grid_for, lifted_system
from .tensor_core import unvec

__all__ = [
    "METHODS",
    "CSV_HEADER",
    "ExperimentConfig",
    "TrialRecord",
    "achievable_rate",
    "trial_rngs",
    "run_trial",
    "sweep",
    "write_csv",
    "summarize",
    "paired_difference_ci",
    "format_summary",
    "to_csv_string",
]

logger = logging.getLogger(__name__)

METHODS = ("tensor_omp", "omp_cfo_ignored", "perfect_csi")
CSV_HEADER = [
    "method", "snr_db", "tau_rad", "num_meas", "trial", "seed",
    "rate_bps_hz", "cfo_err_hz", "chan_nmse_db", "omp_iters", "flag",
]


@dataclass(frozen=True)
class ExperimentConfig:
    """Sweep description.  The swept grid is ``snr_db x tau x M x trials``."""

    N_t: int = 32
    N_r: int = 16
    q: int = 8
    T: float = 0.5e-6
    f_c: float = 28e9
    f_max: float = 280e3
    gamma_leak: float = 2.0
    oversampling: int = 2
    N_cl: int = 2
    N_ray: int = 10
    angular_spread_deg: float = 3.0
    d_over_lambda: float = 0.5
    snr_db: tuple[float, ...] = (-10.0, -5.0, 0.0, 5.0, 10.0, 15.0)
    tau: tuple[float, ...] = (0.27,)
    M: tuple[int, ...] = (64,)
    f_e: float = 265.625e3
    methods: tuple[str, ...] = METHODS
    trials: int = 200
    master_seed: int = 0
    K_expected: int = 4

    def __post_init__(self):
        for name in ("snr_db", "tau", "M", "methods"):
            value = getattr(self, name)
            if isinstance(value, (str, int, float)):
                value = (value,)
            object.__setattr__(self, name, tuple(value))
            if not getattr(self, name):
                raise ValueError(f"{name} must be a non-empty list")
        unknown = set(self.methods) - set(METHODS)
        if unknown:
            raise ValueError(f"unknown methods {sorted(unknown)}; choose from {METHODS}")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if any(t < 0 for t in self.tau):
            raise ValueError("tau values must be non-negative")
        if self.master_seed < 0:
            raise ValueError("master_seed must be non-negative")
        # surface invalid link constants at config time
        for M in self.M:
            self.system(M, self.snr_db[0])
        self.channel_params()

    def system(self, M: int, snr_db: float) -> SystemConfig:
        return SystemConfig(
            N_t=self.N_t, N_r=self.N_r, M=M, q=self.q, T=self.T, f_c=self.f_c,
            f_max=self.f_max, gamma_leak=self.gamma_leak, oversampling=self.oversampling,
        ).with_snr_db(snr_db)

    def channel_params(self) -> ChannelParams:
        return ChannelParams(
            N_t=self.N_t, N_r=self.N_r, N_cl=self.N_cl, N_ray=self.N_ray,
            angular_spread_deg=self.angular_spread_deg, d_over_lambda=self.d_over_lambda,
        )

    def points(self) -> list[tuple[float, float, int]]:
        return list(itertools.product(self.snr_db, self.tau, self.M))

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self) -> dict:
        return {k: list(v) if isinstance(v, tuple) else v for k, v in dataclasses.asdict(self).items()}


@dataclass
class TrialRecord:
    method: str
    snr_db: float
    tau_rad: float
    num_meas: int
    trial: int
    seed: int
    rate_bps_hz: float
    cfo_err_hz: float = math.nan
    chan_nmse_db: float = math.nan
    omp_iters: int = 0
    flag: str = ""
    wall_time: float = field(default=0.0, compare=False)

    def row(self) -> list[str]:
        return [
            self.method, repr(float(self.snr_db)), repr(float(self.tau_rad)), str(self.num_meas),
            str(self.trial), str(self.seed), repr(float(self.rate_bps_hz)),
            repr(float(self.cfo_err_hz)), repr(float(self.chan_nmse_db)), str(self.omp_iters),
            self.flag,
        ]


def achievable_rate(H_true, f_est, w_est, rho: float, sigma2: float) -> float:
    """``log2(1 + rho |w^H H f|^2 / sigma2)`` in bits/s/Hz, evaluated on the true channel."""
    gain = abs(np.vdot(w_est, np.asarray(H_true) @ f_est)) ** 2
    if sigma2 == 0:
        return math.inf if gain > 0 else 0.0
    return float(np.log2(1 + rho * gain / sigma2))


def trial_rngs(master_seed: int, trial: int) -> tuple[int, dict[str, np.random.Generator]]:
    """Per-trial seed and independent generators for each random ingredient."""
    ss = np.random.SeedSequence([master_seed, trial])
    seed = int(ss.generate_state(1)[0])
    names = ("channel", "codebook", "phase", "noise")
    return seed, {n: np.random.default_rng(child) for n, child in zip(names, ss.spawn(len(names)))}


def _nmse_db(H, H_est) -> float:
    nmse = scale_aligned_nmse(H, H_est)
    return 10 * math.log10(nmse) if nmse > 0 else -math.inf


def run_trial(cfg: ExperimentConfig, snr_db: float, tau: float, M: int, trial: int) -> list[TrialRecord]:
    """Run every configured method on one realization; failures are flagged, never raised."""
    seed, rngs = trial_rngs(cfg.master_seed, trial)
    sys_cfg = cfg.system(M, snr_db)
    H = draw_channel(cfg.channel_params(), rngs["channel"]).H
    codebook = random_codebook(sys_cfg, rngs["codebook"])
    trace = make_trace(sys_cfg, cfg.f_e, tau, rngs["phase"], check_range=False)
    y = simulate_measurements(H, codebook, trace, sys_cfg, rngs["noise"]).y
    eps = M * sys_cfg.noise_var
    fallback = (codebook.F[0], codebook.W[0])

    records = []
    for method in cfg.methods:
        t0 = time.perf_counter()
        rec = TrialRecord(method, snr_db, tau, M, trial, seed, rate_bps_hz=0.0)
        f, w = fallback
        try:
            if method == "perfect_csi":
                f, w = select_beams(H, sys_cfg.q)
            elif method == "tensor_omp":
                grid = grid_for(sys_cfg)
                op = build_operator(codebook, grid, sys_cfg.oversampling)
                omp_cfg = OmpConfig(eps=eps, n_iter=default_n_iter(cfg.K_expected, grid.size, M))
                est = estimate(y, op, omp_cfg, sys_cfg.N_r, sys_cfg.N_t, sys_cfg.q, sys_cfg.T)
                f, w = est.f_est, est.w_est
                rec.cfo_err_hz = est.f_e_hat - cfg.f_e
                rec.chan_nmse_db = _nmse_db(H, est.H_est)
                rec.omp_iters = est.omp.iterations
                flags = [name for name, on in (("rank_deficient", est.omp.rank_deficient),
                                               ("ambiguous_split", est.ambiguous_split)) if on]
                rec.flag = ";".join(flags)
            elif method == "omp_cfo_ignored":
                op = build_operator(codebook, grid_for(sys_cfg), sys_cfg.oversampling)
                lifted = lifted_system(op)
                omp_cfg = OmpConfig(eps=eps, n_iter=default_n_iter(cfg.K_expected, 1, M))
                x, iters = vector_omp(y, lifted.A, omp_cfg)
                rec.omp_iters = iters
                H_est = synth_on_grid(unvec(x, lifted.grid_shape), sys_cfg.N_r, sys_cfg.N_t,
                                      sys_cfg.oversampling)
                f, w = select_beams(H_est, sys_cfg.q)
                rec.chan_nmse_db = _nmse_db(H, H_est)
        except Exception as exc:  # a single bad trial must not stop a sweep
            logger.debug("trial %d method %s failed: %s", trial, method, exc)
            f, w = fallback
            rec.flag = f"fallback:{type(exc).__name__}"
        rec.rate_bps_hz = achievable_rate(H, f, w, sys_cfg.rho, sys_cfg.sigma2)
        rec.wall_time = time.perf_counter() - t0
        records.append(rec)
    return records


def _run_task(args) -> list[TrialRecord]:
    return run_trial(*args)


def sweep(cfg: ExperimentConfig, workers: int = 1) -> Iterator[TrialRecord]:
    """Yield records for every ``(point, trial, method)`` in sorted order.

    With ``workers > 1`` trials run in a process pool; output order does not
    depend on the worker count.
    """
    tasks = [(cfg, snr, tau, M, t) for (snr, tau, M) in cfg.points() for t in range(cfg.trials)]
    if workers <= 1:
        results: Iterable[list[TrialRecord]] = map(_run_task, tasks)
        for recs in results:
            yield from recs
        return
    with ProcessPoolExecutor(max_workers=workers) as pool:
        for recs in pool.map(_run_task, tasks, chunksize=max(1, len(tasks) // (8 * workers))):
            yield from recs


def write_csv(records: Iterable[TrialRecord], fh) -> list[TrialRecord]:
    """Write the fixed-header CSV, streaming rows; returns the records written."""
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    out = []
    for rec in records:
        writer.writerow(rec.row())
        out.append(rec)
    return out


def to_csv_string(records: Iterable[TrialRecord]) -> str:
    buf = io.StringIO()
    write_csv(records, buf)
    return buf.getvalue()


def _ci_halfwidth(x: np.ndarray, level: float = 0.95) -> float:
    if x.size < 2:
        return math.nan
    return float(stats.t.ppf(0.5 + level / 2, x.size - 1) * x.std(ddof=1) / math.sqrt(x.size))


def summarize(records: Sequence[TrialRecord]) -> list[dict]:
    """Mean rate and 95% CI half-width per ``(method, snr, tau, M)`` cell."""
    cells: dict[tuple, list[float]] = {}
    for r in records:
        cells.setdefault((r.method, r.snr_db, r.tau_rad, r.num_meas), []).append(r.rate_bps_hz)
    rows = []
    for (method, snr, tau, M), rates in cells.items():
        x = np.asarray(rates)
        rows.append(dict(method=method, snr_db=snr, tau_rad=tau, num_meas=M, trials=x.size,
                         mean_rate=float(x.mean()), ci95=_ci_halfwidth(x)))
    return rows


def paired_difference_ci(
    records: Sequence[TrialRecord],
    method_a: str,
    method_b: str,
    snr_db: float,
    tau: float,
    M: int,
    level: float = 0.95,
) -> tuple[float, float, float]:
    """Mean of ``rate_a - rate_b`` over paired trials, with its t-interval ``(mean, lo, hi)``."""
    def rates(method):
        return {r.trial: r.rate_bps_hz for r in records
                if r.method == method and r.snr_db == snr_db and r.tau_rad == tau and r.num_meas == M}

    a, b = rates(method_a), rates(method_b)
    trials = sorted(set(a) & set(b))
    d = np.array([a[t] - b[t] for t in trials])
    if d.size == 0:
        raise ValueError("no paired trials for this cell")
    h = _ci_halfwidth(d, level)
    return float(d.mean()), float(d.mean() - h), float(d.mean() + h)


def format_summary(rows: Sequence[dict]) -> str:
    lines = [f"{'method':<16}{'snr_db':>8}{'tau':>7}{'M':>5}{'n':>6}{'mean_rate':>11}{'ci95':>8}"]
    for r in rows:
        lines.append(f"{r['method']:<16}{r['snr_db']:>8.2f}{r['tau_rad']:>7.2f}{r['num_meas']:>5d}"
                     f"{r['trials']:>6d}{r['mean_rate']:>11.4f}{r['ci95']:>8.4f}")
    return "\n".join(lines)
