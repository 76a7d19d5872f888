"""Baseband signal substrate: QPSK mapping, framing and moment statistics."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .streams import RandomStream

SQRT2 = np.sqrt(2.0)

# Gray-coded QPSK: bit pair (b0, b1) -> ((1 - 2*b1) + 1j*(1 - 2*b0)) / sqrt(2)
# 00 -> (+1+1j)/sqrt2, 01 -> (-1+1j)/sqrt2, 11 -> (-1-1j)/sqrt2, 10 -> (+1-1j)/sqrt2
QPSK_ALPHABET = np.array(
    [1 + 1j, -1 + 1j, 1 - 1j, -1 - 1j], dtype=complex
) / SQRT2

DEFAULT_SYMBOLS = 128
DEFAULT_PILOTS = 32
DEFAULT_OVERSAMPLING = 10

PILOT_SEED = 0  # published pilot sequence, shared by transmitter and receiver


def map_qpsk(bits) -> np.ndarray:
    """Map a bit sequence onto Gray-coded unit-modulus QPSK symbols.

    Parameters
    ----------
    bits : sequence of 0/1
        Even number of bits; consecutive pairs form one symbol.

    Returns
    -------
    np.ndarray of complex, length len(bits) // 2
    """
    bits = np.asarray(bits, dtype=int)
    if bits.ndim != 1 or bits.size % 2 != 0:
        raise ValueError(f"bit count must be even, got {bits.size}")
    if np.any((bits != 0) & (bits != 1)):
        raise ValueError("bits must be 0 or 1")
    b0 = bits[0::2]
    b1 = bits[1::2]
    return ((1 - 2 * b1) + 1j * (1 - 2 * b0)) / SQRT2


@dataclass(frozen=True)
class Frame:
    """One burst of QPSK symbols with pilots occupying the leading positions.

    symbols are unit modulus; pilot_mask marks the pilot positions (always a
    prefix of the frame); oversampling is the samples-per-symbol factor used
    when the frame is shaped into a waveform.
    """

    symbols: tuple
    pilot_mask: tuple
    oversampling: int = DEFAULT_OVERSAMPLING

    def __post_init__(self):
        if len(self.symbols) != len(self.pilot_mask):
            raise ValueError("symbols and pilot_mask must have equal length")
        if self.oversampling < 1:
            raise ValueError("oversampling must be >= 1")
        n_pilots = int(np.sum(self.pilot_mask))
        if list(self.pilot_mask[:n_pilots]) != [True] * n_pilots:
            raise ValueError("pilot symbols must occupy the leading positions")

    @property
    def symbol_count(self) -> int:
        return len(self.symbols)

    @property
    def pilot_count(self) -> int:
        return int(np.sum(self.pilot_mask))

    @property
    def sample_count(self) -> int:
        return self.symbol_count * self.oversampling

    def symbol_array(self) -> np.ndarray:
        return np.asarray(self.symbols, dtype=complex)

    def pilot_symbols(self) -> np.ndarray:
        return self.symbol_array()[: self.pilot_count]


def build_frame(data_bits, pilot_bits, oversampling: int = DEFAULT_OVERSAMPLING) -> Frame:
    """Assemble a frame with pilot symbols first and data symbols after.

    Bit counts must be even; the pilot/data split of the frame is implied by
    the two bit sequences.
    """
    pilots = map_qpsk(pilot_bits) if len(pilot_bits) else np.empty(0, dtype=complex)
    data = map_qpsk(data_bits) if len(data_bits) else np.empty(0, dtype=complex)
    symbols = np.concatenate([pilots, data])
    if symbols.size == 0:
        raise ValueError("frame must contain at least one symbol")
    mask = [True] * pilots.size + [False] * data.size
    return Frame(tuple(symbols), tuple(mask), oversampling)


@lru_cache(maxsize=8)
def pilot_symbols(count: int = DEFAULT_PILOTS) -> np.ndarray:
    """The fixed published pilot sequence (seed-0 QPSK symbols)."""
    stream = RandomStream(PILOT_SEED, purpose="pilot-bits")
    return map_qpsk(stream.bits(2 * count))


def pilot_bits(count: int = DEFAULT_PILOTS) -> np.ndarray:
    """Bit form of the published pilot sequence."""
    return RandomStream(PILOT_SEED, purpose="pilot-bits").bits(2 * count)


def standard_frame(data_bits, oversampling: int = DEFAULT_OVERSAMPLING) -> Frame:
    """128-symbol frame with the 32 published pilots followed by data bits."""
    return build_frame(data_bits, pilot_bits(DEFAULT_PILOTS), oversampling)


@dataclass(frozen=True)
class MomentSummary:
    """First four moments of a complex sample sequence.

    variance is the population second central moment E|x - mean|^2.
    skewness and kurtosis (non-excess, E[(x-m)^4]/s^4) are computed per real
    channel and averaged over the channels that actually vary; a channel with
    zero variance contributes nothing, and a fully constant sequence reports
    (0, 0) by convention.
    """

    mean: complex
    variance: float
    skewness: float
    kurtosis: float


def real_skew_kurt(x: np.ndarray) -> tuple:
    """(skewness, kurtosis) of a real sequence; (0, 0) when variance is 0."""
    x = np.asarray(x, dtype=float)
    mu = x.mean()
    d = x - mu
    var = np.mean(d * d)
    if var <= 0.0:
        return 0.0, 0.0
    sd = np.sqrt(var)
    return float(np.mean(d**3) / sd**3), float(np.mean(d**4) / var**2)


def moments(seq) -> MomentSummary:
    """Moment summary of a complex sequence (population statistics)."""
    x = np.asarray(seq, dtype=complex)
    if x.size == 0:
        raise ValueError("moments of an empty sequence are undefined")
    if not np.all(np.isfinite(x)):
        raise ValueError("sequence contains non-finite values")
    mean = complex(x.mean())
    variance = float(np.mean(np.abs(x - mean) ** 2))
    stats = []
    for channel in (x.real, x.imag):
        if np.mean((channel - channel.mean()) ** 2) > 0.0:
            stats.append(real_skew_kurt(channel))
    if not stats:
        return MomentSummary(mean, variance, 0.0, 0.0)
    skew = float(np.mean([s for s, _ in stats]))
    kurt = float(np.mean([k for _, k in stats]))
    return MomentSummary(mean, variance, skew, kurt)
