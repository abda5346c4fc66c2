"""Command-line front end.

Three subcommands: ``seq`` inspects a preamble family, ``run`` pushes one
burst through the whole chain and dumps diagnostics, ``sweep`` runs a
Monte-Carlo comparison and writes CSV plus rendered figures. The default
output directory comes from --out, falling back to $GCLINK_OUTDIR, then to
./gclink-out.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import logging
import os
import sys
from pathlib import Path

import numpy as np
import yaml

from gclink import harness, plots
from gclink.channel import ChannelImpairments, apply_channel
from gclink.preamble import autocorrelation, generate_golay_pair, make_preamble, papr
from gclink.rxsync import CfoGrid, RxConfig, receive_burst
from gclink.txchain import TxConfig, transmit, write_signal_dump

ENV_OUTDIR = "GCLINK_OUTDIR"

log = logging.getLogger("gclink")


def _outdir(args) -> Path:
    out = args.out or os.environ.get(ENV_OUTDIR) or "gclink-out"
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _load_yaml(path: str) -> dict:
    try:
        with open(path) as fh:
            data = yaml.safe_load(fh)
    except OSError as exc:
        raise SystemExit(f"error: cannot read config {path}: {exc}")
    except yaml.YAMLError as exc:
        raise SystemExit(f"error: invalid YAML in {path}: {exc}")
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise SystemExit(f"error: config {path} must hold a mapping at top level")
    return data


_TX_KEYS = {f.name for f in dataclasses.fields(TxConfig)}
_SPEC_KEYS = {f.name for f in dataclasses.fields(harness.ExperimentSpec)}


def _spec_from_config(config: dict, seed_override: int | None) -> harness.ExperimentSpec:
    config = dict(config)
    tx_section = config.pop("tx", {}) or {}
    unknown = set(config) - (_SPEC_KEYS - {"tx"})
    if unknown:
        raise SystemExit(
            f"error: unknown sweep config keys {sorted(unknown)}; "
            f"valid keys: {sorted(_SPEC_KEYS)}"
        )
    unknown_tx = set(tx_section) - _TX_KEYS
    if unknown_tx:
        raise SystemExit(
            f"error: unknown tx config keys {sorted(unknown_tx)}; "
            f"valid keys: {sorted(_TX_KEYS)}"
        )
    for key in ("families", "preamble_lengths", "ebn0_points"):
        if key in config:
            config[key] = tuple(config[key])
    try:
        tx = TxConfig(**tx_section)
        spec = harness.ExperimentSpec(tx=tx, **config)
    except (TypeError, ValueError, NotImplementedError) as exc:
        raise SystemExit(f"error: bad sweep config: {exc}")
    if seed_override is not None:
        spec.master_seed = seed_override
    return spec


# === seq ==================================================================


def cmd_seq(args) -> int:
    outdir = _outdir(args)
    try:
        seq = make_preamble(args.family, args.length, root=args.root)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    profile = autocorrelation(seq, mode=args.mode)
    norm = profile.peak_normalized()

    seq_path = outdir / "sequence.csv"
    with open(seq_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["n", "re", "im"])
        for n, value in enumerate(seq.elements):
            writer.writerow([n, repr(float(value.real)), repr(float(value.imag))])

    corr_path = outdir / "autocorrelation.csv"
    with open(corr_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["shift", "re", "im", "abs"])
        for shift, value in zip(profile.shifts, profile.values):
            writer.writerow(
                [int(shift), repr(float(value.real)), repr(float(value.imag)),
                 repr(float(abs(value)))]
            )

    print(f"family:           {seq.family.value}")
    print(f"length:           {seq.length} (padding {seq.padding})")
    print(f"root:             {seq.root}")
    print(f"papr:             {papr(seq):.6f}")
    print(f"max off-peak |R|: {norm.max_off_peak():.3e} ({args.mode}, peak-normalized)")
    if args.family.startswith("golay"):
        a, b = generate_golay_pair(args.length)
        ra = autocorrelation(a, "aperiodic").values
        rb = autocorrelation(b, "aperiodic").values
        combined = ra + rb
        mask = np.arange(-(args.length - 1), args.length) != 0
        print(f"max |R_a + R_b|:  {np.max(np.abs(combined[mask])):.3e} (aperiodic, off-peak)")
    print(f"wrote {seq_path} and {corr_path}")
    return 0


# === run ==================================================================


def cmd_run(args) -> int:
    outdir = _outdir(args)
    config = _load_yaml(args.config) if args.config else {}

    def pick(key, flag, default):
        return flag if flag is not None else config.get(key, default)

    family = pick("family", args.preamble, "golay")
    length = int(pick("preamble_length", args.length, 64))
    root = int(pick("root", args.root, 1))
    payload = int(pick("payload_symbols", args.payload, 1000))
    ebn0 = float(pick("ebn0_db", args.ebn0, float("inf")))
    cfo = float(pick("cfo_hz", args.cfo, 0.0))
    phase = float(pick("phase_rad", args.phase, 0.0))
    delay = int(pick("integer_delay", args.delay, 0))
    frac = float(pick("fractional_delay", args.frac_delay, 0.0))
    seed = int(args.seed if args.seed is not None else config.get("seed", 0))

    tx_section = config.get("tx", {}) or {}
    unknown_tx = set(tx_section) - _TX_KEYS
    if unknown_tx:
        raise SystemExit(f"error: unknown tx config keys {sorted(unknown_tx)}")
    try:
        tx = TxConfig(
            **{**tx_section, "preamble_symbols": length, "payload_symbols": payload}
        )
        preamble = make_preamble(family, length, root=root)
        imp = ChannelImpairments(
            cfo_hz=cfo, phase_rad=phase, integer_delay=delay,
            fractional_delay=frac, ebn0_db=ebn0, noise_seed=seed + 1,
        )
    except (ValueError, NotImplementedError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    grid = CfoGrid.spanning(abs(cfo)) if cfo != 0.0 else None
    rx = RxConfig(
        rx_carrier=tx.carrier_freq,
        cfo_grid=grid,
        search_span_symbols=max(16, 2 * (delay // tx.samples_per_symbol + 2)),
    )

    frame, passband = transmit(tx, preamble, seed)
    received = apply_channel(passband, imp, tx)
    est = receive_burst(received, tx, rx, preamble, keep_traces=True)

    pb = harness.compute_pb(
        np.real(frame.mapped_symbols[length:]), est.recovered_symbols[length:]
    )
    ber = harness.compute_ber(frame.payload_bits, est.decided_bits)

    print(f"burst: {family} L={length}, payload {payload} symbols, Eb/N0 {ebn0} dB")
    print(f"injected: cfo {cfo} Hz, phase {imp.phase_rad:.4f} rad, "
          f"delay {delay} + {frac:.3f} samples")
    print(f"estimated: cfo {est.f_hat:.4f} Hz, theta {est.theta_hat:.4f} rad, "
          f"delay {est.mu_hat} samples (rx grid)")
    print(f"corr peak (normalized): {est.corr_peak:.4f}")
    print(f"pb: {pb:.6g}   ber: {ber:.6g}")

    if args.dump_signal:
        dump = write_signal_dump(received, outdir / "received.iq")
        print(f"wrote {dump} (+.hdr)")

    if args.verbose:
        with open(outdir / "wiener_taps.csv", "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["tap", "re", "im", "abs"])
            for i, w in enumerate(est.wiener_w):
                writer.writerow([i, repr(w.real), repr(w.imag), repr(float(abs(w)))])
        with open(outdir / "correlation_trace.csv", "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["offset", "abs"])
            for i, value in enumerate(est.correlation_trace):
                writer.writerow([i, repr(float(value))])
        if est.grid_energies is not None:
            with open(outdir / "cfo_grid.csv", "w", newline="") as fh:
                writer = csv.writer(fh)
                writer.writerow(["freq_hz", "energy"])
                for f, h in zip(rx.cfo_grid.frequencies, est.grid_energies):
                    writer.writerow([repr(float(f)), repr(float(h))])
        print(f"wrote diagnostic CSVs under {outdir}")

    paths = plots.render_burst_diagnostics(est, outdir)
    print(f"wrote {len(paths)} figures under {outdir}")
    return 0


# === sweep ================================================================


def cmd_sweep(args) -> int:
    outdir = _outdir(args)
    config = _load_yaml(args.config) if args.config else {}
    spec = _spec_from_config(config, args.seed)

    log.info("sweep: %d points x %d trials", len(list(spec.points())), spec.trials_per_point)
    rows = harness.run_sweep(spec)

    results = harness.emit_csv(rows, outdir / "results.csv")
    extra = harness.emit_figure_data(rows, outdir)
    figures = plots.render_sweep_figures(rows, outdir)

    print(f"{'family':<10} {'L':>5} {'Eb/N0':>6} {'pb':>12} {'ber':>10} "
          f"{'hits':>6} {'fails':>5}")
    for row in rows:
        print(f"{row.family:<10} {row.preamble_len:>5} {row.ebn0_db:>6.1f} "
              f"{row.pb:>12.4e} {row.ber:>10.3e} {row.timing_hit_rate:>6.3f} "
              f"{row.failed_trials:>5}")
    for path in [results, *extra, *figures]:
        print(f"wrote {path}")
    return 0


# === entry point ==========================================================


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gclink",
        description="Burst-mode link simulator for galvanic-coupling intra-body channels",
    )
    parser.add_argument("--verbose", "-v", action="store_true", help="debug logging and dumps")
    sub = parser.add_subparsers(dest="command", required=True)

    p_seq = sub.add_parser("seq", help="generate a preamble and report its properties")
    p_seq.add_argument("--family", required=True,
                       choices=["cazac", "golay", "golay_b", "zc"])
    p_seq.add_argument("--length", "-L", type=int, required=True)
    p_seq.add_argument("--root", type=int, default=1, help="CAZAC k or Zadoff-Chu root u")
    p_seq.add_argument("--mode", choices=["cyclic", "aperiodic"], default="cyclic")
    p_seq.add_argument("--out", help=f"output directory (default ${ENV_OUTDIR} or ./gclink-out)")
    p_seq.set_defaults(func=cmd_seq)

    p_run = sub.add_parser("run", help="run one burst through the full chain")
    p_run.add_argument("--config", help="YAML config for the burst")
    p_run.add_argument("--preamble", choices=["cazac", "golay", "zc"], help="preamble family")
    p_run.add_argument("--length", "-L", type=int, help="preamble length in symbols")
    p_run.add_argument("--root", type=int, help="CAZAC k or Zadoff-Chu root u")
    p_run.add_argument("--payload", type=int, help="payload symbols")
    p_run.add_argument("--ebn0", type=float, help="Eb/N0 in dB (omit for noise-free)")
    p_run.add_argument("--cfo", type=float, help="carrier offset in Hz")
    p_run.add_argument("--phase", type=float, help="carrier phase in rad")
    p_run.add_argument("--delay", type=int, help="integer delay in channel samples")
    p_run.add_argument("--frac-delay", type=float, help="fractional delay in samples")
    p_run.add_argument("--seed", type=int, help="trial seed")
    p_run.add_argument("--dump-signal", action="store_true",
                       help="dump the received passband signal as raw I/Q")
    p_run.add_argument("--out", help=f"output directory (default ${ENV_OUTDIR} or ./gclink-out)")
    p_run.set_defaults(func=cmd_run)

    p_sweep = sub.add_parser("sweep", help="Monte-Carlo comparison sweep")
    p_sweep.add_argument("--config", help="YAML sweep spec")
    p_sweep.add_argument("--seed", type=int, help="override the master seed")
    p_sweep.add_argument("--out", help=f"output directory (default ${ENV_OUTDIR} or ./gclink-out)")
    p_sweep.set_defaults(func=cmd_sweep)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except SystemExit:
        raise
    except BrokenPipeError:
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
