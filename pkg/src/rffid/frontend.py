"""Channel and per-antenna receiver impairments.

Each antenna carries its own oscillator, so phase noise is drawn
independently per antenna: the post-tracking phase error is stationary with
variance 2*pi*chi, held constant within a frame and redrawn every frame.
Sampling jitter and quantization model the shared ADC behaviour; AWGN
closes the chain.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .streams import RandomStream

DEFAULT_LO_FREQ_NORM = 100.0  # f' * T for a 1 GHz carrier sampled at 10 MHz
DEFAULT_JITTER_DELTA = 0.003
DEFAULT_QUANT_V = 1.0
DEFAULT_QUANT_EPS = 16


@dataclass(frozen=True)
class ChannelConfig:
    """Fading plus AWGN between emitter and each antenna.

    snr_db may be math.inf to switch the noise off.  fading "unit" pins the
    coefficients at 1; "complex-gaussian" redraws a unit-variance circular
    coefficient per antenna per frame.
    """

    snr_db: float
    fading: str = "unit"

    def __post_init__(self):
        if self.fading not in ("unit", "complex-gaussian"):
            raise ValueError(f"unknown fading mode {self.fading!r}")
        if np.isnan(self.snr_db):
            raise ValueError("snr_db must be a number (or inf for noiseless)")

    @property
    def noise_variance(self) -> float:
        """Total complex noise variance for a unit-power, unit-fading signal."""
        if np.isinf(self.snr_db):
            return 0.0
        return float(10.0 ** (-self.snr_db / 10.0))


@dataclass(frozen=True)
class ReceiverProfile:
    """Multi-antenna receiver hardware description.

    chi is the per-antenna phase-noise bandwidth (scalar applies to every
    antenna).  jitter_delta is the relative sampling offset, either constant
    or redrawn uniformly in [-delta, delta] per sample ("uniform" mode).
    quant_v / quant_eps describe the ADC range and bit depth; set either to
    None to bypass quantization.
    """

    n_antennas: int
    chi: object = 0.0
    jitter_delta: float = 0.0
    jitter_mode: str = "constant"
    lo_freq_norm: float = DEFAULT_LO_FREQ_NORM
    quant_v: Optional[float] = None
    quant_eps: Optional[int] = None

    def __post_init__(self):
        if self.n_antennas < 1:
            raise ValueError("receiver needs at least one antenna")
        if self.jitter_mode not in ("constant", "uniform"):
            raise ValueError(f"unknown jitter mode {self.jitter_mode!r}")
        if abs(self.jitter_delta) >= 0.5:
            raise ValueError("|jitter_delta| must be < 0.5 samples")
        if any(c < 0 for c in self.chi_list()):
            raise ValueError("phase-noise bandwidth chi must be >= 0")
        if self.quant_eps is not None and self.quant_eps < 1:
            raise ValueError("quantizer needs at least one bit")
        if self.quant_v is not None and self.quant_v <= 0:
            raise ValueError("quantizer range must be positive")

    def chi_list(self) -> tuple:
        if np.isscalar(self.chi):
            return (float(self.chi),) * self.n_antennas
        chi = tuple(float(c) for c in self.chi)
        if len(chi) != self.n_antennas:
            raise ValueError("per-antenna chi list length must equal n_antennas")
        return chi

    @property
    def quantizer_enabled(self) -> bool:
        return self.quant_v is not None and self.quant_eps is not None

    @property
    def quant_step(self) -> Optional[float]:
        if not self.quantizer_enabled:
            return None
        return 2.0 ** (1 - self.quant_eps) * self.quant_v


@dataclass(frozen=True)
class CaptureTruth:
    """Ground truth of one capture, for oracle-mode processing."""

    h: np.ndarray            # per-antenna fading coefficients
    theta: np.ndarray        # per-antenna oscillator phases (radians)
    x_hat: np.ndarray        # clean jittered waveform common to all antennas
    sigma_w2: float          # configured complex noise variance
    quant_step: Optional[float] = None


@dataclass(frozen=True)
class AntennaCapture:
    """One frame as seen by all antennas: the N x L matrix y."""

    y: np.ndarray
    frame_index: int
    emitter: int = -1
    truth: Optional[CaptureTruth] = None
    saturation_count: int = 0

    @property
    def n_antennas(self) -> int:
        return self.y.shape[0]

    @property
    def n_samples(self) -> int:
        return self.y.shape[1]


def sample_phase_noise(stream: RandomStream, chi: float, frame_index: int) -> float:
    """Residual oscillator phase of one frame (radians).

    The tracking loop keeps the phase error stationary: every frame draws an
    independent N(0, 2*pi*chi) value, constant across the frame's samples
    and independent across antennas (each antenna has its own oscillator).
    chi = 0 models a perfect oscillator.
    """
    if chi < 0:
        raise ValueError("chi must be >= 0")
    if frame_index < 1:
        raise ValueError("frame_index is 1-based")
    if chi == 0.0:
        return 0.0
    draw = stream.at(frame=frame_index, purpose="phase-noise").gaussian(
        0.0, 2 * np.pi * chi, 1
    )
    return float(draw[0])


def apply_jitter(x, delta, lo_freq_norm: float = 0.0) -> np.ndarray:
    """Resample at offsets n + delta(n) and rotate by the LO jitter phase.

    delta may be a scalar or per-sample array; |delta| < 0.5.  Linear
    interpolation between neighbours, extrapolated at the edges so an affine
    signal is reproduced exactly.
    """
    x = np.asarray(x, dtype=complex)
    delta = np.broadcast_to(np.asarray(delta, dtype=float), x.shape)
    if x.size and np.max(np.abs(delta)) >= 0.5:
        raise ValueError("|delta| must be < 0.5 samples")
    if x.size < 2:
        return x * np.exp(-2j * np.pi * lo_freq_norm * delta)
    pos = np.arange(x.size) + delta
    idx = np.clip(np.floor(pos).astype(int), 0, x.size - 2)
    frac = pos - idx
    out = x[idx] * (1.0 - frac) + x[idx + 1] * frac
    return out * np.exp(-2j * np.pi * lo_freq_norm * delta)


def quantize_with_tally(x, v: float, eps: int) -> tuple:
    """Mid-tread uniform quantizer per real channel, clipped to [-v, v].

    Returns (quantized, saturated_channel_count).  Inside the range the
    per-channel error is bounded by 2**-eps * v.
    """
    if v <= 0:
        raise ValueError("quantizer range must be positive")
    if eps < 1:
        raise ValueError("quantizer needs at least one bit")
    x = np.asarray(x, dtype=complex)
    step = 2.0 ** (1 - eps) * v
    saturated = 0
    parts = []
    for channel in (x.real, x.imag):
        q = step * np.round(channel / step)
        clipped = np.clip(q, -v, v)
        saturated += int(np.count_nonzero(q != clipped))
        parts.append(clipped)
    return parts[0] + 1j * parts[1], saturated


def quantize(x, v: float, eps: int) -> np.ndarray:
    """Quantized samples only; see quantize_with_tally for the clip count."""
    return quantize_with_tally(x, v, eps)[0]


def _frame_jitter(receiver: ReceiverProfile, stream: RandomStream, frame_index: int, length: int):
    if receiver.jitter_mode == "uniform" and receiver.jitter_delta != 0.0:
        return stream.at(frame=frame_index, purpose="jitter").uniform(
            -receiver.jitter_delta, receiver.jitter_delta, length
        )
    return receiver.jitter_delta


def receive(
    x2,
    channel: ChannelConfig,
    receiver: ReceiverProfile,
    frame_index: int,
    stream: RandomStream,
    emitter: int = -1,
) -> AntennaCapture:
    """Produce the N x L capture of one transmitted frame.

    Per antenna: a fading coefficient and an oscillator phase are drawn, the
    jittered clean waveform is rotated and attenuated, complex AWGN of
    variance sigma_w^2 = sigma_x^2 * sigma_h^2 * 10^(-SNR/10) is added, and
    the result is quantized.  All randomness is keyed on
    (trial, frame_index, antenna, purpose), so captures are reproducible and
    antenna rows are independent.
    """
    x2 = np.asarray(x2, dtype=complex)
    if x2.size == 0:
        raise ValueError("cannot receive an empty waveform")
    if frame_index < 1:
        raise ValueError("frame_index is 1-based")

    delta = _frame_jitter(receiver, stream, frame_index, x2.size)
    x_hat = apply_jitter(x2, delta, receiver.lo_freq_norm)

    n = receiver.n_antennas
    length = x2.size
    sigma_x2 = float(np.mean(np.abs(x2) ** 2))
    chi = receiver.chi_list()

    # sigma_h^2 is 1 in both fading modes (unit, or CN(0, 1) redraws), so the
    # noise variance is common to all antennas.
    sigma_w2 = sigma_x2 * channel.noise_variance

    h = np.ones(n, dtype=complex)
    theta = np.zeros(n)
    y = np.empty((n, length), dtype=complex)
    saturated = 0
    for i in range(n):
        antenna_stream = stream.at(antenna=i)
        if channel.fading == "complex-gaussian":
            h[i] = antenna_stream.at(frame=frame_index, purpose="fading").complex_gaussian(1.0, 1)[0]
        theta[i] = sample_phase_noise(antenna_stream, chi[i], frame_index)
        row = h[i] * np.exp(-1j * theta[i]) * x_hat
        if sigma_w2 > 0:
            noise = antenna_stream.at(frame=frame_index, purpose="awgn").complex_gaussian(1.0, length)
            row = row + np.sqrt(sigma_w2) * noise
        if receiver.quantizer_enabled:
            row, clipped = quantize_with_tally(row, receiver.quant_v, receiver.quant_eps)
            saturated += clipped
        y[i] = row

    truth = CaptureTruth(
        h=h, theta=theta, x_hat=x_hat,
        sigma_w2=sigma_w2,
        quant_step=receiver.quant_step,
    )
    return AntennaCapture(
        y=y, frame_index=frame_index, emitter=emitter,
        truth=truth, saturation_count=saturated,
    )
