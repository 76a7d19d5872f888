"""Fixed-length feature vectors from complex baseband sequences.

Two extractors are provided.  The intrinsic time-scale decomposition (ITD)
route peels oscillatory "proper rotation" layers off the real and imaginary
parts and summarizes each layer by its skewness and kurtosis.  The LMS route
runs an adaptive filter that maps the known pilot waveform onto the observed
sequence and uses the converged tap vector as the feature, so the taps absorb
the emitter and receiver response.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

import numpy as np

from .emitter import DEFAULT_ROLLOFF, DEFAULT_SPAN, ideal_waveform
from .signal import DEFAULT_OVERSAMPLING, DEFAULT_PILOTS, Frame, pilot_symbols, real_skew_kurt

ITD_ALPHA = 0.5
DEFAULT_ITD_LEVELS = 4
DEFAULT_LMS_ORDER = 11
DEFAULT_LMS_MU = 0.01
DEFAULT_LMS_TOL = 1e-6
DEFAULT_LMS_EPOCHS = 100
MIN_ITD_LENGTH = 8


@dataclass(frozen=True)
class FeatureVector:
    """Real-valued feature vector with its extraction method tag."""

    values: np.ndarray
    method: str
    dim: int
    converged: bool = True


@dataclass(frozen=True)
class ItdDecomposition:
    """Proper rotation layers plus the final baseline of a real sequence."""

    rotations: tuple
    baseline: np.ndarray

    def reconstruct(self) -> np.ndarray:
        total = self.baseline.copy()
        for rot in self.rotations:
            total = total + rot
        return total


def _interior_extrema(x: np.ndarray) -> np.ndarray:
    d = np.diff(x)
    return np.where(d[:-1] * d[1:] < 0)[0] + 1


def _itd_baseline(x: np.ndarray, extrema: np.ndarray) -> np.ndarray:
    """Piecewise-linear baseline through the standard ITD knots.

    Knot positions are the interior extrema; the knot value at each extremum
    blends its own sample with the linear interpolation between its two
    neighbours (endpoints act as outer neighbours and keep their sample
    values).
    """
    n = x.size
    tau = np.concatenate([[0], extrema, [n - 1]])
    vals = x[tau]
    left, mid, right = vals[:-2], vals[1:-1], vals[2:]
    span = (tau[1:-1] - tau[:-2]) / (tau[2:] - tau[:-2])
    knots = ITD_ALPHA * (left + span * (right - left)) + (1 - ITD_ALPHA) * mid
    knot_pos = np.concatenate([[0], tau[1:-1], [n - 1]])
    knot_val = np.concatenate([[x[0]], knots, [x[-1]]])
    return np.interp(np.arange(n), knot_pos, knot_val)


def itd_decompose(x, levels: int = DEFAULT_ITD_LEVELS) -> ItdDecomposition:
    """Decompose a real sequence into `levels` rotations plus a baseline.

    Each level subtracts the piecewise-linear baseline from the current
    signal and recurses on the baseline.  A level with fewer than three
    interior extrema stops the recursion early; the remaining rotations are
    zero and the baseline is the current signal.  The layers always sum back
    to the input.
    """
    x = np.asarray(x, dtype=float)
    if x.size < MIN_ITD_LENGTH:
        raise ValueError(f"sequence too short for decomposition: {x.size} < {MIN_ITD_LENGTH}")
    if levels < 1:
        raise ValueError("levels must be >= 1")
    rotations = []
    current = x.copy()
    for _ in range(levels):
        extrema = _interior_extrema(current)
        if extrema.size < 3:
            rotations.append(np.zeros_like(current))
            continue
        baseline = _itd_baseline(current, extrema)
        rotations.append(current - baseline)
        current = baseline
    return ItdDecomposition(rotations=tuple(rotations), baseline=current)


def itd_features(x, levels: int = DEFAULT_ITD_LEVELS) -> FeatureVector:
    """Skewness and kurtosis of every layer, real and imaginary parts.

    Dimension is 2 stats x (levels + 1) layers x 2 parts; zero-variance
    layers report (0, 0).
    """
    x = np.asarray(x, dtype=complex)
    values = []
    for part in (x.real, x.imag):
        decomp = itd_decompose(part, levels)
        for layer in list(decomp.rotations) + [decomp.baseline]:
            values.extend(real_skew_kurt(layer))
    values = np.asarray(values, dtype=float)
    return FeatureVector(values=values, method="itd", dim=values.size)


def _window_matrix(ref: np.ndarray, order: int) -> np.ndarray:
    """Sliding windows u(n) = [ref(n), ref(n-1), ..., ref(n-order+1)]."""
    n = ref.size
    u = np.zeros((n, order), dtype=complex)
    for k in range(order):
        u[k:, k] = ref[: n - k]
    return u


def lms_features(
    y,
    reference,
    order: int = DEFAULT_LMS_ORDER,
    mu: float = DEFAULT_LMS_MU,
    max_epochs: int = DEFAULT_LMS_EPOCHS,
    tol: float = DEFAULT_LMS_TOL,
) -> FeatureVector:
    """Adaptive-filter tap vector fitting reference -> y, as features.

    The filter predicts y(n) from the sliding reference window u(n); taps
    update by the complex LMS rule w <- w + mu * e(n) * conj(u(n)) with
    e(n) = y(n) - w . u(n), so the converged w approximates the linear
    response mapping the reference onto the observation.  Epochs repeat over
    the sequence until the tap change per epoch drops below tol or
    max_epochs is reached (the convergence flag records which).  Features
    are the concatenated real and imaginary tap parts.
    """
    features, converged = lms_features_batch(
        np.asarray(y, dtype=complex)[None, :], reference, order, mu, max_epochs, tol
    )
    return FeatureVector(
        values=features[0], method="lms", dim=features.shape[1], converged=bool(converged[0])
    )


def _epoch_operator(ref: np.ndarray, order: int, mu: float):
    """Affine map of one LMS epoch over a fixed reference.

    With the reference known, the tap recursion
    w(n+1) = w(n) - mu * (w(n) . u(n)) * conj(u(n)) + mu * y(n) * conj(u(n))
    is linear in w, so a whole epoch collapses to w_end = M w + K y with
    M = A(L-1) ... A(0), A(n) = I - mu * conj(u(n)) u(n)^T, and column n of
    K equal to A(L-1) ... A(n+1) applied to mu * conj(u(n)).
    """
    u = _window_matrix(ref, order)
    uc = np.conj(u)
    n_samples = ref.size
    k = np.empty((order, n_samples), dtype=complex)
    s = np.eye(order, dtype=complex)
    for n in range(n_samples - 1, -1, -1):
        suc = s @ uc[n]
        k[:, n] = mu * suc
        s = s - mu * np.outer(suc, u[n])
    return s, k  # s is the full product M


def lms_features_batch(
    rows,
    reference,
    order: int = DEFAULT_LMS_ORDER,
    mu: float = DEFAULT_LMS_MU,
    max_epochs: int = DEFAULT_LMS_EPOCHS,
    tol: float = DEFAULT_LMS_TOL,
):
    """Vectorized lms_features over a batch of equal-length sequences.

    All sequences share the same reference, so one epoch of the tap
    recursion is the same affine map for every sequence (see
    _epoch_operator) and the batch advances one matrix product per epoch.
    Returns (features, converged) with features of shape (batch, 2*order).
    Sequences whose taps have converged are frozen and skip later epochs,
    matching the per-sequence stopping rule.
    """
    rows = np.asarray(rows, dtype=complex)
    ref = np.asarray(reference, dtype=complex)
    if order < 1:
        raise ValueError("filter order must be >= 1")
    if mu <= 0:
        raise ValueError("step size mu must be > 0")
    if rows.ndim != 2 or rows.shape[1] != ref.size:
        raise ValueError("each sequence must match the reference length")

    m, k = _epoch_operator(ref, order, mu)
    mt = m.T
    g = rows @ k.T  # per-sequence constant epoch offset

    batch = rows.shape[0]
    w = np.zeros((batch, order), dtype=complex)
    converged = np.zeros(batch, dtype=bool)
    active = np.arange(batch)
    for _ in range(max_epochs):
        w_next = w[active] @ mt + g[active]
        done = np.linalg.norm(w_next - w[active], axis=1) < tol
        w[active] = w_next
        converged[active[done]] = True
        active = active[~done]
        if active.size == 0:
            break

    features = np.concatenate([w.real, w.imag], axis=1)
    return features, converged


@lru_cache(maxsize=8)
def pilot_reference(
    pilot_count: int = DEFAULT_PILOTS,
    oversampling: int = DEFAULT_OVERSAMPLING,
    span: int = DEFAULT_SPAN,
    rolloff: float = DEFAULT_ROLLOFF,
) -> np.ndarray:
    """Ideal waveform of the published pilots over the pilot region.

    This is the only transmitted content a receiver knows a priori, so it
    serves both as the LMS reference and as the matched filter for pilot
    variance estimation.
    """
    symbols = pilot_symbols(pilot_count)
    wave = ideal_waveform(symbols, oversampling, span, rolloff)
    wave.flags.writeable = False
    return wave


def pilot_region_length(frame: Frame) -> int:
    return frame.pilot_count * frame.oversampling


def usable_pilot_length(
    pilot_count: int = DEFAULT_PILOTS,
    oversampling: int = DEFAULT_OVERSAMPLING,
    span: int = DEFAULT_SPAN,
) -> int:
    """Pilot samples free of payload leakage through the shaping filter.

    The filter span smears each data symbol half a span backwards, so the
    last span/2 pilot symbols' worth of samples depend on the (unknown)
    payload and are discarded for pilot-matched processing.
    """
    return max((pilot_count - span // 2) * oversampling, oversampling)


def demodulated_residual(
    row,
    oversampling: int = DEFAULT_OVERSAMPLING,
    pilot_count: int = DEFAULT_PILOTS,
    span: int = DEFAULT_SPAN,
    rolloff: float = DEFAULT_ROLLOFF,
) -> np.ndarray:
    """Symbol-rate distortion residual of a received (or recovered) sequence.

    Standard coherent demodulation: matched filter, sample at the symbol
    instants, fit one complex gain on the known pilots, slice the payload
    with hard decisions, and subtract the fitted nominal constellation.
    What is left per symbol is hardware distortion plus channel noise, the
    part that actually fingerprints the emitter, with the common gain and
    oscillator rotation removed.
    """
    from .emitter import _rrc_taps
    from .signal import QPSK_ALPHABET, pilot_symbols

    row = np.asarray(row, dtype=complex)
    taps = _rrc_taps(oversampling, span, rolloff)
    delay = (taps.size - 1) // 2
    filtered = np.convolve(row, np.conj(taps[::-1]))
    symbols = filtered[delay : delay + row.size : oversampling]
    if symbols.size <= pilot_count:
        raise ValueError("sequence too short to carry the pilot preamble")
    pilots = pilot_symbols(pilot_count)
    gain = (symbols[:pilot_count] @ np.conj(pilots)) / np.sum(np.abs(pilots) ** 2)
    if gain == 0:
        raise ValueError("pilot correlation vanished; cannot normalize the frame")
    nearest = np.argmin(
        np.abs(symbols[:, None] / gain - QPSK_ALPHABET[None, :]), axis=1
    )
    nominal = QPSK_ALPHABET[nearest]
    nominal[:pilot_count] = pilots
    return symbols - gain * nominal
