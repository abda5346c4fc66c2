"""Transmit chain: burst framing, BPSK mapping, SRRC shaping, upconversion.

The burst layout is preamble followed by payload. Payload bits map to BPSK
on the real axis, the frame is upsampled by zero insertion, shaped with a
unit-energy square-root raised cosine, and mixed onto a real carrier.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.signal import fftconvolve

from gclink.preamble import PreambleSequence

__all__ = [
    "TxConfig",
    "BurstFrame",
    "SampledSignal",
    "bpsk_map",
    "build_burst",
    "srrc_taps",
    "upsample_and_shape",
    "upconvert",
    "transmit",
    "write_signal_dump",
    "read_signal_dump",
]


@dataclass
class TxConfig:
    """Link waveform parameters.

    Defaults follow the reference configuration: 10 kHz carrier sampled at
    48 kHz, 16 samples per symbol (3 kSym/s), square-root raised cosine
    with 0.2 roll-off spanning 8 symbols each side, BPSK payload.
    """

    carrier_freq: float = 10e3
    sample_rate: float = 48e3
    samples_per_symbol: int = 16
    srrc_rolloff: float = 0.2
    srrc_delay: int = 8
    payload_symbols: int = 10000
    preamble_symbols: int = 64
    modulation_order: int = 2

    def __post_init__(self):
        if self.sample_rate <= 0:
            raise ValueError(f"sample rate must be positive, got {self.sample_rate}")
        if self.samples_per_symbol < 2:
            raise ValueError(f"need >= 2 samples per symbol, got {self.samples_per_symbol}")
        if not 0.0 < self.srrc_rolloff < 1.0:
            raise ValueError(f"roll-off must lie in (0, 1), got {self.srrc_rolloff}")
        if self.srrc_delay < 1:
            raise ValueError(f"filter delay must be >= 1 symbol, got {self.srrc_delay}")
        if self.carrier_freq <= 0 or self.carrier_freq >= self.sample_rate / 2:
            raise ValueError(
                f"carrier {self.carrier_freq} Hz not representable at {self.sample_rate} Hz"
            )
        if self.modulation_order != 2:
            raise NotImplementedError("only BPSK (modulation order 2) is supported")
        if self.payload_symbols < 0 or self.preamble_symbols < 1:
            raise ValueError("frame needs a preamble and a non-negative payload length")

    @property
    def symbol_rate(self) -> float:
        return self.sample_rate / self.samples_per_symbol

    @property
    def frame_symbols(self) -> int:
        return self.preamble_symbols + self.payload_symbols


@dataclass
class BurstFrame:
    """One burst: known preamble, payload bits, and the mapped symbol vector."""

    preamble: np.ndarray
    payload_bits: np.ndarray
    mapped_symbols: np.ndarray


@dataclass
class SampledSignal:
    """A uniformly sampled signal with rate and framing metadata."""

    samples: np.ndarray
    rate: float
    samples_per_symbol: int
    domain: str
    carrier_freq: float | None = None

    def __post_init__(self):
        if self.rate <= 0:
            raise ValueError("sample rate must be positive")
        if self.domain not in ("baseband", "passband"):
            raise ValueError(f"unknown signal domain {self.domain!r}")

    def __len__(self) -> int:
        return len(self.samples)


def bpsk_map(bits: np.ndarray) -> np.ndarray:
    """Map bits to antipodal symbols on the real axis: 0 -> +1, 1 -> -1."""
    bits = np.asarray(bits)
    if bits.size and np.any((bits != 0) & (bits != 1)):
        raise ValueError("bits must be 0 or 1")
    return 1.0 - 2.0 * bits.astype(np.float64)


def build_burst(cfg: TxConfig, preamble: PreambleSequence, rng_seed: int) -> BurstFrame:
    """Draw random payload bits and assemble the burst symbol vector."""
    if preamble.length != cfg.preamble_symbols:
        raise ValueError(
            f"preamble length {preamble.length} does not match configured "
            f"{cfg.preamble_symbols} symbols"
        )
    rng = np.random.default_rng(rng_seed)
    bits = rng.integers(0, 2, cfg.payload_symbols, dtype=np.int64)
    mapped = np.concatenate([preamble.elements, bpsk_map(bits).astype(np.complex128)])
    return BurstFrame(preamble.elements.copy(), bits, mapped)


def srrc_taps(rolloff: float, delay: int, samples_per_symbol: int) -> np.ndarray:
    """Unit-energy square-root raised cosine taps spanning 2*delay symbols.

    Tap count is 2*delay*samples_per_symbol + 1 and the response is
    symmetric. The two removable singularities (t = 0 and |t| = 1/(4*R)
    symbols) are filled with their analytic limits.
    """
    if not 0.0 < rolloff < 1.0:
        raise ValueError(f"roll-off must lie in (0, 1), got {rolloff}")
    sps = samples_per_symbol
    n = np.arange(2 * delay * sps + 1)
    t = (n - delay * sps) / sps  # in symbols
    taps = np.zeros_like(t)

    at_zero = t == 0.0
    taps[at_zero] = 1.0 - rolloff + 4.0 * rolloff / np.pi

    at_break = np.abs(np.abs(t) - 1.0 / (4.0 * rolloff)) < 1e-12
    taps[at_break] = (rolloff / math.sqrt(2.0)) * (
        (1.0 + 2.0 / np.pi) * math.sin(np.pi / (4.0 * rolloff))
        + (1.0 - 2.0 / np.pi) * math.cos(np.pi / (4.0 * rolloff))
    )

    rest = ~(at_zero | at_break)
    tr = t[rest]
    num = np.sin(np.pi * tr * (1.0 - rolloff)) + 4.0 * rolloff * tr * np.cos(
        np.pi * tr * (1.0 + rolloff)
    )
    den = np.pi * tr * (1.0 - (4.0 * rolloff * tr) ** 2)
    taps[rest] = num / den

    return taps / math.sqrt(np.sum(taps**2))


def upsample_and_shape(frame: BurstFrame, cfg: TxConfig) -> SampledSignal:
    """Zero-insert to the sample rate and convolve with the SRRC."""
    sps = cfg.samples_per_symbol
    up = np.zeros(len(frame.mapped_symbols) * sps, np.complex128)
    up[::sps] = frame.mapped_symbols
    taps = srrc_taps(cfg.srrc_rolloff, cfg.srrc_delay, sps)
    shaped = fftconvolve(up, taps)
    return SampledSignal(shaped, cfg.sample_rate, sps, "baseband")


def upconvert(x: SampledSignal, cfg: TxConfig) -> SampledSignal:
    """Mix the complex envelope onto the real carrier.

    s(n) = Re{x} cos(2 pi fc n Ts) - Im{x} sin(2 pi fc n Ts).
    """
    if cfg.carrier_freq >= cfg.sample_rate / 2:
        raise ValueError("carrier at or above Nyquist")
    if x.domain != "baseband":
        raise ValueError("upconvert expects a baseband signal")
    n = np.arange(len(x.samples))
    ph = 2.0 * np.pi * cfg.carrier_freq * n / cfg.sample_rate
    s = x.samples.real * np.cos(ph) - x.samples.imag * np.sin(ph)
    return SampledSignal(s, cfg.sample_rate, x.samples_per_symbol, "passband", cfg.carrier_freq)


def transmit(cfg: TxConfig, preamble: PreambleSequence, rng_seed: int) -> tuple[BurstFrame, SampledSignal]:
    """Full transmit chain: frame, shape, upconvert."""
    frame = build_burst(cfg, preamble, rng_seed)
    return frame, upconvert(upsample_and_shape(frame, cfg), cfg)


# === raw signal dump ======================================================
#
# Little-endian float32 interleaved I/Q in <path>, plus a text sidecar
# <path>.hdr with one key=value per line: rate, samples_per_symbol, domain,
# kind (real|complex), count, carrier_freq (optional). Real signals store
# zeros in the Q slots.


def write_signal_dump(sig: SampledSignal, path: str | Path) -> Path:
    """Dump a signal as raw interleaved I/Q float32 plus a header sidecar."""
    path = Path(path)
    data = np.empty(2 * len(sig.samples), np.float32)
    data[0::2] = sig.samples.real
    data[1::2] = sig.samples.imag if np.iscomplexobj(sig.samples) else 0.0
    data.astype("<f4").tofile(path)
    kind = "complex" if np.iscomplexobj(sig.samples) else "real"
    lines = [
        f"rate={sig.rate!r}",
        f"samples_per_symbol={sig.samples_per_symbol}",
        f"domain={sig.domain}",
        f"kind={kind}",
        f"count={len(sig.samples)}",
    ]
    if sig.carrier_freq is not None:
        lines.append(f"carrier_freq={sig.carrier_freq!r}")
    Path(str(path) + ".hdr").write_text("\n".join(lines) + "\n")
    return path


def read_signal_dump(path: str | Path) -> SampledSignal:
    """Read a signal written by :func:`write_signal_dump`."""
    path = Path(path)
    header: dict[str, str] = {}
    for line in Path(str(path) + ".hdr").read_text().splitlines():
        if line.strip():
            key, _, value = line.partition("=")
            header[key.strip()] = value.strip()
    raw = np.fromfile(path, dtype="<f4")
    count = int(header["count"])
    if raw.size != 2 * count:
        raise ValueError(f"dump {path} holds {raw.size} floats, header claims {count} samples")
    i = raw[0::2].astype(np.float64)
    q = raw[1::2].astype(np.float64)
    samples = i + 1j * q if header["kind"] == "complex" else i
    carrier = float(header["carrier_freq"]) if "carrier_freq" in header else None
    return SampledSignal(
        samples,
        float(header["rate"]),
        int(header["samples_per_symbol"]),
        header["domain"],
        carrier,
    )
