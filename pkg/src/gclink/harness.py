"""Monte-Carlo comparison harness.

Sweeps preamble family, preamble length, and Eb/N0 over randomized bursts,
aggregates the error-vector metric, raw BER, carrier-offset error, timing
hit rate, and correlation peak per point, and writes the results as CSV.
Per-trial randomness derives deterministically from the master seed, so a
sweep is reproducible bit for bit.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from gclink.channel import ChannelImpairments, apply_channel
from gclink.preamble import make_preamble
from gclink.rxsync import CfoGrid, RxConfig, receive_burst
from gclink.txchain import TxConfig, transmit

__all__ = [
    "ExperimentSpec",
    "ResultRow",
    "TrialOutcome",
    "compute_pb",
    "compute_ber",
    "run_trial",
    "run_sweep",
    "emit_csv",
    "load_csv",
    "emit_figure_data",
    "CSV_COLUMNS",
]

log = logging.getLogger(__name__)

CSV_COLUMNS = [
    "family",
    "preamble_len",
    "ebn0_db",
    "pb",
    "pb_median",
    "pb_ci95_lo",
    "pb_ci95_hi",
    "ber",
    "ber_ci95_lo",
    "ber_ci95_hi",
    "cfo_rmse_hz",
    "timing_hit_rate",
    "corr_peak",
    "trials",
    "failed_trials",
    "seed",
]


@dataclass
class ExperimentSpec:
    """One sweep: the grid of points plus impairment ranges and seeding.

    Per trial the phase is uniform over [-pi, pi), the integer delay
    uniform over {0..max_integer_delay} channel samples, and the fractional
    delay uniform over (-0.5, 0.5); the carrier offset is a fixed
    per-experiment value. With cfo_hz = 0 the receiver runs without a
    carrier search grid (there is nothing to span); otherwise the grid
    covers twice the injected offset with cfo_grid_points points.

    ``exclude`` removes single (family, length) cells from the grid, e.g.
    a family whose admissible lengths stop short of the longest sweep
    point. Seed cells stay keyed to (length, Eb/N0), so exclusions never
    shift the draws of the remaining families.
    """

    families: tuple[str, ...] = ("cazac", "golay", "zc")
    preamble_lengths: tuple[int, ...] = (64, 256)
    ebn0_points: tuple[float, ...] = (2.0, 4.0, 6.0, 8.0, 10.0, 12.0)
    exclude: tuple = ()  # (family, length) pairs left out of the grid
    trials_per_point: int = 500
    payload_symbols: int = 10000
    cfo_hz: float = 0.0
    cfo_grid_points: int = 65
    max_integer_delay: int = 200
    randomize_phase: bool = True
    zc_root: int = 1
    cazac_k: int = 1
    wiener_taps: int = 11
    master_seed: int = 20260819
    tx: TxConfig = field(default_factory=TxConfig)

    def __post_init__(self):
        if self.trials_per_point < 1:
            raise ValueError("need at least one trial per point")
        if self.max_integer_delay < 0:
            raise ValueError("max integer delay must be >= 0")
        if not self.families or not self.preamble_lengths or not self.ebn0_points:
            raise ValueError("sweep grid must not be empty")
        self.exclude = tuple((str(f), int(length)) for f, length in self.exclude)
        for f, length in self.exclude:
            if f not in self.families or length not in self.preamble_lengths:
                raise ValueError(f"excluded point ({f}, {length}) is not on the grid")

    def points(self):
        """Deterministic point order: family, then length, then Eb/N0."""
        for family in self.families:
            for length in self.preamble_lengths:
                if (family, length) in self.exclude:
                    continue
                for ebn0 in self.ebn0_points:
                    yield family, length, float(ebn0)

    def rx_config(self) -> RxConfig:
        grid = (
            CfoGrid.spanning(abs(self.cfo_hz), self.cfo_grid_points)
            if self.cfo_hz != 0.0
            else None
        )
        span = max(2 * (self.max_integer_delay // self.tx.samples_per_symbol + 2), 16)
        return RxConfig(
            rx_carrier=self.tx.carrier_freq,
            wiener_taps=self.wiener_taps,
            cfo_grid=grid,
            search_span_symbols=span,
        )


@dataclass
class TrialOutcome:
    """Metrics from one burst."""

    pb: float
    bit_errors: int
    bits: int
    cfo_error_hz: float
    timing_hit: bool
    corr_peak: float


@dataclass
class ResultRow:
    """Aggregated metrics for one sweep point, one line of the CSV."""

    family: str
    preamble_len: int
    ebn0_db: float
    pb: float
    pb_median: float
    pb_ci95_lo: float
    pb_ci95_hi: float
    ber: float
    ber_ci95_lo: float
    ber_ci95_hi: float
    cfo_rmse_hz: float
    timing_hit_rate: float
    corr_peak: float
    trials: int
    failed_trials: int
    seed: int

    def as_dict(self) -> dict:
        return {name: getattr(self, name) for name in CSV_COLUMNS}


def compute_pb(c_tx: np.ndarray, c_hat: np.ndarray) -> float:
    """Mean squared distance between power-normalized symbol sequences.

    Pb = mean((c/sqrt(Ptx) - Re(c_hat)/sqrt(Prx))^2) with Ptx, Prx the mean
    powers of the transmitted sequence and of the real part of the
    estimate. Perfect recovery gives 0; a sign-inverted estimate gives 4.
    """
    c = np.real(np.asarray(c_tx, dtype=np.complex128))
    ch = np.real(np.asarray(c_hat, dtype=np.complex128))
    if c.shape != ch.shape or c.size == 0:
        raise ValueError(f"sequence shapes differ: {c.shape} vs {ch.shape}")
    p_tx = float(np.mean(c**2))
    p_rx = float(np.mean(ch**2))
    if p_tx == 0.0 or p_rx == 0.0:
        raise ValueError("zero-power sequence in error metric")
    diff = c / math.sqrt(p_tx) - ch / math.sqrt(p_rx)
    return float(np.mean(diff**2))


def compute_ber(tx_bits: np.ndarray, rx_bits: np.ndarray) -> float:
    """Raw bit error rate between transmitted and decided bits."""
    tx_bits = np.asarray(tx_bits)
    rx_bits = np.asarray(rx_bits)
    if tx_bits.shape != rx_bits.shape or tx_bits.size == 0:
        raise ValueError(f"bit vector shapes differ: {tx_bits.shape} vs {rx_bits.shape}")
    return float(np.mean(tx_bits != rx_bits))


def _trial_seeds(master_seed: int, point_index: int, trial_index: int) -> tuple[int, int, int]:
    """Three independent substream seeds for payload, impairments, noise.

    ``point_index`` identifies the (length, Eb/N0) cell, NOT the family:
    families at a matched sweep point share payload bits, impairment draws,
    and noise, so family comparisons are paired (common random numbers) and
    not clouded by independent Monte-Carlo luck.
    """
    seq = np.random.SeedSequence(entropy=master_seed, spawn_key=(point_index, trial_index))
    payload, impair, noise = seq.generate_state(3, dtype=np.uint64)
    return int(payload), int(impair), int(noise)


def run_trial(
    spec: ExperimentSpec,
    tx_cfg: TxConfig,
    rx_cfg: RxConfig,
    preamble,
    ebn0_db: float,
    point_index: int,
    trial_index: int,
) -> TrialOutcome:
    """Transmit one randomized burst through the channel and receive it."""
    payload_seed, impair_seed, noise_seed = _trial_seeds(
        spec.master_seed, point_index, trial_index
    )
    rng = np.random.default_rng(impair_seed)
    theta = float(rng.uniform(-np.pi, np.pi)) if spec.randomize_phase else 0.0
    mu = int(rng.integers(0, spec.max_integer_delay + 1))
    eps = float(rng.uniform(-0.5, 0.5))
    imp = ChannelImpairments(
        cfo_hz=spec.cfo_hz,
        phase_rad=theta,
        integer_delay=mu,
        fractional_delay=eps,
        ebn0_db=ebn0_db,
        noise_seed=noise_seed,
    )

    frame, passband = transmit(tx_cfg, preamble, payload_seed)
    received = apply_channel(passband, imp, tx_cfg)
    est = receive_burst(received, tx_cfg, rx_cfg, preamble)

    payload_tx = np.real(frame.mapped_symbols[tx_cfg.preamble_symbols :])
    payload_hat = est.recovered_symbols[tx_cfg.preamble_symbols :]
    pb = compute_pb(payload_tx, payload_hat)
    errors = int(np.sum(frame.payload_bits != est.decided_bits))

    dec = tx_cfg.samples_per_symbol // rx_cfg.rx_samples_per_symbol
    timing_hit = abs(est.mu_hat - (mu + eps)) <= dec / 2
    return TrialOutcome(
        pb=pb,
        bit_errors=errors,
        bits=len(frame.payload_bits),
        cfo_error_hz=est.f_hat - spec.cfo_hz,
        timing_hit=timing_hit,
        corr_peak=est.corr_peak,
    )


def _wilson_interval(successes: int, total: int) -> tuple[float, float]:
    """95% Wilson score interval for a binomial proportion."""
    if total == 0:
        return (math.nan, math.nan)
    z = 1.959963984540054
    p = successes / total
    denom = 1.0 + z * z / total
    centre = (p + z * z / (2 * total)) / denom
    half = (z / denom) * math.sqrt(p * (1 - p) / total + z * z / (4 * total * total))
    lo = 0.0 if successes == 0 else max(0.0, centre - half)
    hi = 1.0 if successes == total else min(1.0, centre + half)
    return (lo, hi)


def run_sweep(spec: ExperimentSpec) -> list[ResultRow]:
    """Run every sweep point and aggregate one result row per point.

    A failing trial is logged and counted in failed_trials; it never aborts
    the sweep. Rerunning with the same spec reproduces identical rows.
    """
    rx_cfg = spec.rx_config()
    rows = []
    for family, length, ebn0 in spec.points():
        # seed cell shared by every family at this (length, Eb/N0) point
        point_index = len(spec.ebn0_points) * spec.preamble_lengths.index(length) + spec.ebn0_points.index(ebn0)
        root = spec.zc_root if family.startswith("z") else spec.cazac_k
        preamble = make_preamble(family, length, root=root)
        tx_cfg = replace(
            spec.tx, preamble_symbols=length, payload_symbols=spec.payload_symbols
        )
        outcomes = []
        failed = 0
        for trial_index in range(spec.trials_per_point):
            try:
                outcomes.append(
                    run_trial(spec, tx_cfg, rx_cfg, preamble, ebn0, point_index, trial_index)
                )
            except Exception:
                failed += 1
                log.exception(
                    "trial failed: family=%s L=%d ebn0=%.1f trial=%d",
                    family, length, ebn0, trial_index,
                )
        rows.append(_aggregate(spec, family, length, ebn0, outcomes, failed))
        log.info(
            "point %s L=%d Eb/N0=%.1f dB: pb=%.4g ber=%.3g hits=%.3f",
            family, length, ebn0, rows[-1].pb, rows[-1].ber, rows[-1].timing_hit_rate,
        )
    return rows


def _aggregate(
    spec: ExperimentSpec,
    family: str,
    length: int,
    ebn0: float,
    outcomes: list[TrialOutcome],
    failed: int,
) -> ResultRow:
    if not outcomes:
        nan = math.nan
        return ResultRow(
            family, length, ebn0, nan, nan, nan, nan, nan, nan, nan, nan, nan, nan,
            0, failed, spec.master_seed,
        )
    pbs = np.array([o.pb for o in outcomes])
    pb_mean = float(np.mean(pbs))
    pb_se = float(np.std(pbs, ddof=1) / math.sqrt(len(pbs))) if len(pbs) > 1 else 0.0
    errors = sum(o.bit_errors for o in outcomes)
    bits = sum(o.bits for o in outcomes)
    ber_lo, ber_hi = _wilson_interval(errors, bits)
    cfo_rmse = float(np.sqrt(np.mean([o.cfo_error_hz**2 for o in outcomes])))
    return ResultRow(
        family=family,
        preamble_len=length,
        ebn0_db=ebn0,
        pb=pb_mean,
        pb_median=float(np.median(pbs)),
        pb_ci95_lo=pb_mean - 1.959963984540054 * pb_se,
        pb_ci95_hi=pb_mean + 1.959963984540054 * pb_se,
        ber=errors / bits,
        ber_ci95_lo=ber_lo,
        ber_ci95_hi=ber_hi,
        cfo_rmse_hz=cfo_rmse,
        timing_hit_rate=float(np.mean([o.timing_hit for o in outcomes])),
        corr_peak=float(np.mean([o.corr_peak for o in outcomes])),
        trials=len(outcomes),
        failed_trials=failed,
        seed=spec.master_seed,
    )


def emit_csv(rows: list[ResultRow], path: str | Path) -> Path:
    """Write result rows with the documented stable column order.

    Floats are written with repr so a round-trip parse recovers identical
    values; identical specs and seeds therefore produce bit-identical files.
    """
    path = Path(path)
    try:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(CSV_COLUMNS)
            for row in rows:
                writer.writerow([_format_cell(v) for v in row.as_dict().values()])
    except OSError as exc:
        raise RuntimeError(f"cannot write results to {path}: {exc}") from exc
    return path


def _format_cell(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def load_csv(path: str | Path) -> list[ResultRow]:
    """Read rows written by :func:`emit_csv`."""
    rows = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != CSV_COLUMNS:
            raise ValueError(f"unexpected columns in {path}: {reader.fieldnames}")
        for record in reader:
            rows.append(
                ResultRow(
                    family=record["family"],
                    preamble_len=int(record["preamble_len"]),
                    ebn0_db=float(record["ebn0_db"]),
                    pb=float(record["pb"]),
                    pb_median=float(record["pb_median"]),
                    pb_ci95_lo=float(record["pb_ci95_lo"]),
                    pb_ci95_hi=float(record["pb_ci95_hi"]),
                    ber=float(record["ber"]),
                    ber_ci95_lo=float(record["ber_ci95_lo"]),
                    ber_ci95_hi=float(record["ber_ci95_hi"]),
                    cfo_rmse_hz=float(record["cfo_rmse_hz"]),
                    timing_hit_rate=float(record["timing_hit_rate"]),
                    corr_peak=float(record["corr_peak"]),
                    trials=int(record["trials"]),
                    failed_trials=int(record["failed_trials"]),
                    seed=int(record["seed"]),
                )
            )
    return rows


def emit_figure_data(rows: list[ResultRow], outdir: str | Path) -> list[Path]:
    """Long-format per-figure CSVs: error vs Eb/N0 and error vs length."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    paths = []

    by_ebn0 = outdir / "by_ebn0.csv"
    with open(by_ebn0, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["family", "preamble_len", "ebn0_db", "pb", "pb_ci95_lo", "pb_ci95_hi"])
        for row in sorted(rows, key=lambda r: (r.family, r.preamble_len, r.ebn0_db)):
            writer.writerow(
                [row.family, row.preamble_len] +
                [_format_cell(v) for v in (row.ebn0_db, row.pb, row.pb_ci95_lo, row.pb_ci95_hi)]
            )
    paths.append(by_ebn0)

    by_length = outdir / "by_length.csv"
    with open(by_length, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["family", "ebn0_db", "preamble_len", "pb", "pb_ci95_lo", "pb_ci95_hi"])
        for row in sorted(rows, key=lambda r: (r.family, r.ebn0_db, r.preamble_len)):
            writer.writerow(
                [row.family, _format_cell(row.ebn0_db), row.preamble_len] +
                [_format_cell(v) for v in (row.pb, row.pb_ci95_lo, row.pb_ci95_hi)]
            )
    paths.append(by_length)
    return paths
