"""Preamble sequence families and their figures of merit.

Three constant-amplitude families are provided: quadratic-phase CAZAC
sequences, binary Golay complementary pairs, and Zadoff-Chu sequences.
All generators return unit-amplitude elements; the correlation and PAPR
helpers quantify the properties the burst synchronizer relies on.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

__all__ = [
    "Family",
    "PreambleSequence",
    "CorrelationProfile",
    "generate_cazac",
    "generate_golay_pair",
    "generate_zadoff_chu",
    "make_preamble",
    "autocorrelation",
    "papr",
    "largest_prime_at_most",
]


class Family(str, Enum):
    """Sequence family tags."""

    CAZAC = "cazac"
    GOLAY_A = "golay_a"
    GOLAY_B = "golay_b"
    ZADOFF_CHU = "zadoff_chu"


@dataclass(frozen=True)
class PreambleSequence:
    """A known training sequence plus the metadata needed to regenerate it.

    ``root`` is the quadratic-phase constant k for CAZAC, the root u for
    Zadoff-Chu, and 0 for Golay. ``padding`` counts trailing zero elements
    appended when a Zadoff-Chu sequence is stretched to a length the family
    does not admit; it is 0 for every directly generated sequence.
    """

    family: Family
    length: int
    root: int
    elements: np.ndarray
    padding: int = 0

    def __post_init__(self):
        if self.length < 1:
            raise ValueError(f"sequence length must be positive, got {self.length}")
        if self.elements.shape != (self.length,):
            raise ValueError(
                f"elements shape {self.elements.shape} does not match length {self.length}"
            )
        if not 0 <= self.padding < self.length:
            raise ValueError(f"padding {self.padding} out of range for length {self.length}")

    @property
    def core(self) -> np.ndarray:
        """Elements without the zero-padding tail."""
        return self.elements[: self.length - self.padding]


@dataclass(frozen=True)
class CorrelationProfile:
    """Correlation values over a range of shifts.

    ``normalization`` is "raw" (values carry the full sum, peak equals the
    sequence energy) or "peak" (divided by the zero-shift value).
    """

    shifts: np.ndarray
    values: np.ndarray
    normalization: str = "raw"

    def __post_init__(self):
        if self.shifts.shape != self.values.shape:
            raise ValueError("shifts and values must align")
        if self.normalization not in ("raw", "peak"):
            raise ValueError(f"unknown normalization {self.normalization!r}")

    def peak_normalized(self) -> "CorrelationProfile":
        peak = self.values[np.nonzero(self.shifts == 0)[0][0]]
        return CorrelationProfile(self.shifts, self.values / peak, "peak")

    def max_off_peak(self) -> float:
        """Largest |value| away from the zero shift."""
        mask = self.shifts != 0
        return float(np.max(np.abs(self.values[mask]))) if np.any(mask) else 0.0


def generate_cazac(length: int, k: int = 1) -> PreambleSequence:
    """Quadratic-phase constant-amplitude sequence with zero cyclic autocorrelation.

    Odd lengths use exp(j*2*pi*k*l^2/L). Even lengths must use the half-rate
    exponent exp(j*pi*k*l^2/L): with the full-rate exponent the cyclic
    autocorrelation returns to L at shift L/2, which defeats the point of
    the family. The zero-autocorrelation property requires gcd(k, L) = 1.
    """
    if length < 2:
        raise ValueError(f"CAZAC length must be >= 2, got {length}")
    if k < 1:
        raise ValueError(f"CAZAC constant k must be >= 1, got {k}")
    l = np.arange(length)
    if length % 2:
        phase = 2.0 * np.pi * k * (l * l) / length
    else:
        phase = np.pi * k * (l * l) / length
    return PreambleSequence(Family.CAZAC, length, k, np.exp(1j * phase))


def generate_golay_pair(length: int) -> tuple[PreambleSequence, PreambleSequence]:
    """Binary complementary pair built by recursive doubling.

    Starting from a = b = [+1], each doubling maps (a, b) -> (a|b, a|-b),
    so the length must be a power of two in [2, 65536]. The pair's aperiodic
    autocorrelations sum to zero at every nonzero shift.
    """
    if length < 2 or length > 65536 or length & (length - 1):
        raise ValueError(f"Golay length must be a power of two in [2, 65536], got {length}")
    a = np.array([1.0])
    b = np.array([1.0])
    while len(a) < length:
        a, b = np.concatenate([a, b]), np.concatenate([a, -b])
    return (
        PreambleSequence(Family.GOLAY_A, length, 0, a.astype(np.complex128)),
        PreambleSequence(Family.GOLAY_B, length, 0, b.astype(np.complex128)),
    )


def generate_zadoff_chu(length: int, root: int) -> PreambleSequence:
    """Zadoff-Chu sequence exp(-j*pi*u*l*(l+1)/L).

    Requires 0 < root < length and gcd(root, length) = 1. The zero cyclic
    autocorrelation property holds for odd lengths; prime lengths
    additionally give flat cross-correlation between distinct roots.
    """
    if length < 2:
        raise ValueError(f"Zadoff-Chu length must be >= 2, got {length}")
    if not 0 < root < length:
        raise ValueError(f"Zadoff-Chu root must satisfy 0 < u < L, got u={root}, L={length}")
    if np.gcd(root, length) != 1:
        raise ValueError(f"Zadoff-Chu root {root} not coprime with length {length}")
    l = np.arange(length)
    phase = -np.pi * root * l * (l + 1) / length
    return PreambleSequence(Family.ZADOFF_CHU, length, root, np.exp(1j * phase))


def largest_prime_at_most(n: int) -> int:
    """Largest prime <= n (n >= 2)."""
    if n < 2:
        raise ValueError(f"no prime at or below {n}")
    for candidate in range(n, 1, -1):
        if candidate == 2 or (candidate % 2 and all(
            candidate % d for d in range(3, int(candidate**0.5) + 1, 2)
        )):
            return candidate
    raise AssertionError("unreachable")


def make_preamble(family: Family | str, length: int, root: int = 1) -> PreambleSequence:
    """Build the transmit preamble for a family at an arbitrary length.

    Golay transmits the first sequence of the pair. Zadoff-Chu keeps its
    correlation properties only at restricted lengths, so a non-prime
    request generates the largest prime length below and zero-pads the
    tail; the pad count is recorded in ``padding``.
    """
    name = family.value if isinstance(family, Family) else str(family).lower()
    if name in ("cazac",):
        return generate_cazac(length, k=root)
    if name in ("golay", "golay_a"):
        return generate_golay_pair(length)[0]
    if name in ("golay_b",):
        return generate_golay_pair(length)[1]
    if name in ("zc", "zadoff_chu", "zadoffchu", "zadoff-chu"):
        core_len = largest_prime_at_most(length)
        if core_len == length:
            return generate_zadoff_chu(length, root)
        if not 0 < root < core_len:
            raise ValueError(
                f"root {root} invalid for effective Zadoff-Chu length {core_len}"
            )
        core = generate_zadoff_chu(core_len, root)
        elements = np.concatenate([core.elements, np.zeros(length - core_len, np.complex128)])
        return PreambleSequence(Family.ZADOFF_CHU, length, root, elements, padding=length - core_len)
    raise ValueError(f"unknown preamble family {family!r}")


def autocorrelation(seq, mode: str = "cyclic") -> CorrelationProfile:
    """Autocorrelation R[m] = sum_l e[l] * conj(e[l-m]).

    Accepts a PreambleSequence or a plain complex vector. ``mode`` is
    "cyclic" (indices wrap, shifts 0..L-1) or "aperiodic" (zero padding
    outside the sequence, shifts -(L-1)..L-1). The zero-shift value equals
    the sequence energy, L for unit-amplitude sequences.
    """
    e = np.asarray(seq.elements if isinstance(seq, PreambleSequence) else seq)
    if len(e) == 0:
        raise ValueError("empty sequence")
    if mode == "cyclic":
        spectrum = np.fft.fft(e)
        values = np.fft.ifft(spectrum * np.conj(spectrum))
        shifts = np.arange(len(e))
    elif mode == "aperiodic":
        # np.correlate(e, e)[k] = sum_j e[k - (L-1) + j] * conj(e[j])
        values = np.correlate(e, e, mode="full")
        shifts = np.arange(-(len(e) - 1), len(e))
    else:
        raise ValueError(f"unknown correlation mode {mode!r}")
    return CorrelationProfile(shifts, values, "raw")


def papr(seq) -> float:
    """Peak-to-average power ratio; takes a PreambleSequence or a vector."""
    elements = seq.elements if isinstance(seq, PreambleSequence) else seq
    power = np.abs(np.asarray(elements)) ** 2
    mean = float(np.mean(power))
    if mean == 0.0:
        raise ValueError("zero-power sequence")
    return float(np.max(power)) / mean
