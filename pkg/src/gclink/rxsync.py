"""Burst synchronization receiver.

Three-step acquisition on the down-converted, matched-filtered, decimated
signal: (1) maximum-likelihood carrier offset search over a frequency grid
anchored by a preliminary correlation pass, (2) parabolic refinement of the
grid peak, (3) timing by correlation against the known preamble followed by
a Wiener equalizer trained on the received preamble. The equalizer absorbs
residual phase, amplitude, and sub-sample timing error.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import toeplitz
from scipy.signal import fftconvolve

from gclink.preamble import PreambleSequence
from gclink.txchain import SampledSignal, TxConfig, srrc_taps

__all__ = [
    "CfoGrid",
    "RxConfig",
    "CoarseCfo",
    "SyncEstimate",
    "reference_preamble",
    "group_delay_rx",
    "downconvert_and_filter",
    "coarse_cfo",
    "fine_cfo",
    "counter_rotate",
    "detect_burst",
    "wiener_equalize",
    "bpsk_decide",
    "receive_burst",
    "ideal_symbol_estimates",
]

WIENER_LOADING = 1e-6  # diagonal loading, relative to mean tap power


@dataclass(frozen=True)
class CfoGrid:
    """Uniform carrier-offset trial grid in Hz."""

    f_min: float
    f_max: float
    n_points: int = 65

    def __post_init__(self):
        if self.n_points < 3:
            raise ValueError(f"grid needs >= 3 points, got {self.n_points}")
        if not self.f_max > self.f_min:
            raise ValueError(f"degenerate grid [{self.f_min}, {self.f_max}]")

    @property
    def frequencies(self) -> np.ndarray:
        return np.linspace(self.f_min, self.f_max, self.n_points)

    @property
    def resolution(self) -> float:
        return (self.f_max - self.f_min) / (self.n_points - 1)

    @classmethod
    def spanning(cls, max_cfo_hz: float, n_points: int = 65) -> "CfoGrid":
        """Grid covering twice the largest offset the experiment injects."""
        if max_cfo_hz <= 0:
            raise ValueError(f"max CFO must be positive, got {max_cfo_hz}")
        return cls(-2.0 * max_cfo_hz, 2.0 * max_cfo_hz, n_points)


@dataclass
class RxConfig:
    """Receiver parameters.

    ``cfo_grid = None`` disables carrier offset acquisition (the counter
    rotation step then applies zero offset). ``search_span_symbols`` bounds
    the timing uncertainty window after the filter group delay.
    """

    rx_carrier: float = 10e3
    rx_samples_per_symbol: int = 2
    wiener_taps: int = 11
    cfo_grid: CfoGrid | None = None
    search_span_symbols: int = 64

    def __post_init__(self):
        if self.rx_samples_per_symbol < 1:
            raise ValueError("receiver needs >= 1 sample per symbol")
        if self.wiener_taps < 1:
            raise ValueError("equalizer needs >= 1 tap")
        if self.search_span_symbols < 1:
            raise ValueError("search span must cover at least one symbol")


@dataclass(frozen=True)
class CoarseCfo:
    """Grid search result: peak frequency, phase at the peak, grid energies.

    ``lag_hint`` is the receiver-rate sample index where the winning trial
    frequency placed the preamble; it seeds the timing stage.
    """

    f_hat: float
    theta_hat: float
    energies: np.ndarray
    lag_hint: int = 0


@dataclass
class SyncEstimate:
    """Everything the receiver recovered from one burst."""

    f_hat: float
    theta_hat: float
    mu_hat: int
    wiener_w: np.ndarray
    recovered_symbols: np.ndarray
    decided_bits: np.ndarray
    mu_hat_rx: int
    corr_peak: float
    cfo_refined: bool
    grid_energies: np.ndarray | None = None
    correlation_trace: np.ndarray | None = None


def group_delay_rx(tx: TxConfig, rx: RxConfig) -> int:
    """Cascaded TX+RX filter group delay, in receiver-rate samples."""
    dec = tx.samples_per_symbol // rx.rx_samples_per_symbol
    return (2 * tx.srrc_delay * tx.samples_per_symbol) // dec


def reference_preamble(preamble: PreambleSequence, tx: TxConfig, rx: RxConfig) -> np.ndarray:
    """Known preamble as the receiver sees it, at the receiver rate.

    Shapes the preamble with the TX filter, applies the ideal RX filter,
    and decimates so sample 2k sits on symbol k's peak. Length is
    rx_samples_per_symbol * preamble length.
    """
    sps = tx.samples_per_symbol
    dec = sps // rx.rx_samples_per_symbol
    taps = srrc_taps(tx.srrc_rolloff, tx.srrc_delay, sps)
    up = np.zeros(preamble.length * sps, np.complex128)
    up[::sps] = preamble.elements
    shaped = fftconvolve(fftconvolve(up, taps), taps)
    start = 2 * tx.srrc_delay * sps
    return shaped[start : start + preamble.length * sps : dec]


def downconvert_and_filter(s_rx: SampledSignal, tx: TxConfig, rx: RxConfig) -> SampledSignal:
    """Quadrature down-conversion, matched filter, decimation.

    d(n) = s(n) cos(2 pi f'c n Ts) - j s(n) sin(2 pi f'c n Ts), scaled by 2
    so the cascaded matched filter returns unit-amplitude symbols, then
    SRRC filtered and decimated to the receiver rate.
    """
    if s_rx.domain != "passband":
        raise ValueError("down-conversion expects a passband signal")
    sps = s_rx.samples_per_symbol
    dec = sps // rx.rx_samples_per_symbol
    if dec < 1 or sps % rx.rx_samples_per_symbol:
        raise ValueError(
            f"cannot decimate {sps} samples/symbol to {rx.rx_samples_per_symbol}"
        )
    n = np.arange(len(s_rx.samples))
    mixed = 2.0 * s_rx.samples * np.exp(-2j * np.pi * rx.rx_carrier * n / s_rx.rate)
    taps = srrc_taps(tx.srrc_rolloff, tx.srrc_delay, sps)
    filtered = fftconvolve(mixed, taps)
    return SampledSignal(
        filtered[::dec], s_rx.rate / dec, rx.rx_samples_per_symbol, "baseband"
    )


def coarse_cfo(
    r: np.ndarray,
    ref: np.ndarray,
    grid: CfoGrid,
    rate: float,
    search_start: int = 0,
    search_len: int | None = None,
) -> CoarseCfo:
    """Maximum-likelihood carrier offset search over the trial grid.

    For each trial frequency evaluates lambda(f) = max over burst positions
    of |sum_n exp(-j 2 pi n f/rate) r[n] conj(ref[n - pos])|, i.e. the trial
    rotation is removed and the preamble located by cross-correlation. The
    joint sweep keeps the metric coherent without needing the burst position
    in advance; the estimate is the grid point with the largest peak.
    """
    if search_len is None:
        search_len = len(r) - len(ref) - search_start
    stop = min(len(r), search_start + search_len + len(ref) - 1)
    window = r[search_start:stop]
    if len(window) < len(ref):
        raise ValueError(f"window holds {len(window)} samples, need {len(ref)}")

    # rotation indexed from the signal start so counter_rotate(r, f_hat)
    # applies the exact inverse of the winning trial
    n = search_start + np.arange(len(window))
    energies = np.empty(grid.n_points)
    peaks = np.empty(grid.n_points, np.complex128)
    lags = np.empty(grid.n_points, np.int64)
    for i, f in enumerate(grid.frequencies):
        derotated = window * np.exp(-2j * np.pi * f * n / rate)
        corr = np.correlate(derotated, ref, mode="valid")
        j = int(np.argmax(np.abs(corr)))
        lags[i] = j
        peaks[i] = corr[j]
        energies[i] = np.abs(corr[j]) ** 2
    best = int(np.argmax(energies))
    return CoarseCfo(
        f_hat=float(grid.frequencies[best]),
        theta_hat=float(np.angle(peaks[best])),
        energies=energies,
        lag_hint=search_start + int(lags[best]),
    )


def fine_cfo(energies: np.ndarray, grid: CfoGrid) -> tuple[float, bool]:
    """Parabolic interpolation of the grid energy peak.

    Fits a parabola through the peak and its neighbours and returns the
    vertex. Falls back to the coarse value (refined=False) when the peak
    sits on a grid edge or the three points are degenerate.
    """
    if len(energies) != grid.n_points:
        raise ValueError("energy vector does not match the grid")
    m = int(np.argmax(energies))
    freqs = grid.frequencies
    if m == 0 or m == grid.n_points - 1:
        return float(freqs[m]), False
    h_prev, h_mid, h_next = energies[m - 1], energies[m], energies[m + 1]
    denom = 2.0 * h_prev - 4.0 * h_mid + 2.0 * h_next
    if denom == 0.0:
        return float(freqs[m]), False
    delta = (h_prev - h_next) / denom
    delta = float(np.clip(delta, -1.0, 1.0))
    return float(freqs[m] + delta * grid.resolution), True


def counter_rotate(r: SampledSignal, f_hat: float) -> SampledSignal:
    """Remove the estimated carrier offset: y(n) = r(n) exp(-j 2 pi f n Ts)."""
    n = np.arange(len(r.samples))
    y = r.samples * np.exp(-2j * np.pi * f_hat * n / r.rate)
    return SampledSignal(y, r.rate, r.samples_per_symbol, r.domain, r.carrier_freq)


def detect_burst(
    y: SampledSignal,
    ref: np.ndarray,
    search_start: int = 0,
    search_len: int | None = None,
) -> tuple[int, np.ndarray]:
    """Timing by correlation: mu_hat = argmax_n |sum_k y[n+k] conj(ref[k])|.

    Returns the receiver-rate sample index where the preamble starts and
    the correlation magnitude trace over the searched window.
    """
    x = y.samples
    if search_len is None:
        search_len = len(x) - len(ref) - search_start
    if search_start < 0 or search_len < 1:
        raise ValueError("empty timing search window")
    stop = min(len(x), search_start + search_len + len(ref) - 1)
    segment = x[search_start:stop]
    if len(segment) < len(ref):
        raise ValueError("signal shorter than the reference preamble")
    corr = np.correlate(segment, ref, mode="valid")
    trace = np.abs(corr)
    return search_start + int(np.argmax(trace)), trace


def wiener_design(yp: np.ndarray, ref: np.ndarray, n_taps: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Solve the preamble-trained Wiener normal equations A w = a.

    A is the Toeplitz matrix of the biased sample autocorrelation of the
    received preamble segment, diagonally loaded by 1e-6 of the mean tap
    power; a is the cross-correlation between the known preamble (delayed
    by the filter centre, so a clean channel yields a centred unit impulse)
    and the received segment. Returns (w, A, a).
    """
    n_ref = len(ref)
    if len(yp) != n_ref:
        raise ValueError(f"training segment holds {len(yp)} samples, need {n_ref}")
    if n_taps > n_ref:
        raise ValueError(f"{n_taps} taps exceed the {n_ref}-sample training span")

    r_yy = np.array(
        [np.sum(yp[k:] * np.conj(yp[: n_ref - k])) for k in range(n_taps)]
    ) / n_ref
    a_mat = toeplitz(r_yy, np.conj(r_yy))
    a_mat[np.diag_indices(n_taps)] += WIENER_LOADING * r_yy[0].real

    delay = (n_taps - 1) // 2
    cross = np.zeros(n_taps, np.complex128)
    for l in range(n_taps):
        j = l - delay  # lag of ref relative to yp
        if j >= 0:
            cross[l] = np.sum(ref[j:] * np.conj(yp[: n_ref - j]))
        else:
            cross[l] = np.sum(ref[: n_ref + j] * np.conj(yp[-j:]))
    cross /= n_ref

    w = np.linalg.solve(a_mat, cross)
    if not np.all(np.isfinite(w)):
        raise np.linalg.LinAlgError("equalizer solution is not finite")
    return w, a_mat, cross


def wiener_equalize(
    y: SampledSignal,
    ref: np.ndarray,
    mu_hat_rx: int,
    n_taps: int,
    frame_symbols: int,
) -> tuple[np.ndarray, np.ndarray]:
    """Train a Wiener filter on the received preamble and equalize the burst.

    Returns the taps and the equalized symbol-rate estimates for the whole
    frame, compensating the filter's built-in centre delay.
    """
    x = y.samples
    n_ref = len(ref)
    if mu_hat_rx < 0:
        raise ValueError("preamble window falls outside the signal")
    delay = (n_taps - 1) // 2
    # a late mis-detection must yield a garbage estimate, not an exception:
    # pad with silence so the frame indices stay in range
    needed = mu_hat_rx + max(n_ref, delay + y.samples_per_symbol * frame_symbols + 1)
    if needed > len(x):
        x = np.concatenate([x, np.zeros(needed - len(x), x.dtype)])
    w, _, _ = wiener_design(x[mu_hat_rx : mu_hat_rx + n_ref], ref, n_taps)

    z = fftconvolve(x, w)
    idx = mu_hat_rx + delay + y.samples_per_symbol * np.arange(frame_symbols)
    return w, z[idx]


def bpsk_decide(symbols: np.ndarray) -> np.ndarray:
    """Hard BPSK decisions: bit 0 for Re >= 0, bit 1 otherwise."""
    return (np.real(symbols) < 0).astype(np.int64)


def receive_burst(
    passband: SampledSignal,
    tx: TxConfig,
    rx: RxConfig,
    preamble: PreambleSequence,
    keep_traces: bool = False,
) -> SyncEstimate:
    """Run the full acquisition chain on one received burst.

    Down-converts and decimates, optionally estimates the carrier offset
    (joint coarse grid/position search plus parabolic refinement),
    counter-rotates, finds the burst by correlation, and equalizes with the
    preamble-trained Wiener filter. ``mu_hat`` is reported in channel-rate
    samples relative to the burst start, quantized to the receiver grid.
    """
    ref = reference_preamble(preamble, tx, rx)
    energy_ref = float(np.sum(np.abs(ref) ** 2))
    r = downconvert_and_filter(passband, tx, rx)
    dec = tx.samples_per_symbol // rx.rx_samples_per_symbol
    gd = group_delay_rx(tx, rx)

    search_start = max(gd - 2, 0)
    search_len = rx.search_span_symbols * rx.rx_samples_per_symbol + 4

    refined = False
    energies = None
    if rx.cfo_grid is not None:
        coarse = coarse_cfo(
            r.samples, ref, rx.cfo_grid, r.rate, search_start, search_len
        )
        f_hat, refined = fine_cfo(coarse.energies, rx.cfo_grid)
        theta_hat = coarse.theta_hat
        energies = coarse.energies
    else:
        f_hat = 0.0
        theta_hat = 0.0

    y = counter_rotate(r, f_hat) if f_hat != 0.0 else r
    n_hat, trace = detect_burst(y, ref, search_start, search_len)
    w, symbols = wiener_equalize(y, ref, n_hat, rx.wiener_taps, tx.frame_symbols)
    bits = bpsk_decide(symbols[tx.preamble_symbols :])

    return SyncEstimate(
        f_hat=f_hat,
        theta_hat=theta_hat,
        mu_hat=max(0, (n_hat - gd) * dec),
        wiener_w=w,
        recovered_symbols=symbols,
        decided_bits=bits,
        mu_hat_rx=n_hat,
        corr_peak=float(np.max(trace)) / energy_ref,
        cfo_refined=refined,
        grid_energies=energies if keep_traces else None,
        correlation_trace=trace if keep_traces else None,
    )


def ideal_symbol_estimates(
    passband: SampledSignal, tx: TxConfig, known_delay: int = 0
) -> np.ndarray:
    """Matched-filter symbol estimates with synchronization forced.

    Down-converts at the true carrier, matched filters, and samples at the
    known symbol instants (group delay plus the known integer channel
    delay). This is the textbook reference receiver used to validate the
    noise calibration; it applies no equalizer and no estimation.
    """
    # index time from the transmit origin so the known delay does not
    # masquerade as a carrier phase shift
    n = np.arange(len(passband.samples)) - known_delay
    mixed = 2.0 * passband.samples * np.exp(-2j * np.pi * tx.carrier_freq * n / passband.rate)
    taps = srrc_taps(tx.srrc_rolloff, tx.srrc_delay, tx.samples_per_symbol)
    filtered = fftconvolve(mixed, taps)
    start = 2 * tx.srrc_delay * tx.samples_per_symbol + known_delay
    idx = start + tx.samples_per_symbol * np.arange(tx.frame_symbols)
    if idx[-1] >= len(filtered):
        raise ValueError("frame extends past the end of the signal")
    return filtered[idx]
