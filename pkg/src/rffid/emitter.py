"""Emitter hardware-distortion synthesis.

A transmitted frame is shaped by a slightly imperfect root-raised-cosine
filter, passed through an imbalanced I/Q modulator, polluted with spurious
tones (carrier leakage and harmonics) and finally compressed by a memoryless
power-amplifier nonlinearity.  The residue of these four stages is the
emitter's fingerprint.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from importlib import resources

import numpy as np

from .signal import Frame

DEFAULT_SPAN = 8
DEFAULT_ROLLOFF = 0.35

PROFILE_KEYS = (
    "rho0", "rho1", "T_A", "q0", "q1", "T_Phi", "G", "zeta_deg",
    "c1_re", "c1_im", "c2_re", "f_zeta1", "f_zeta2", "b1", "b3",
)

BUNDLED_PROFILES = ("T1", "T2", "T3", "T4", "T5")


@dataclass(frozen=True)
class EmitterProfile:
    """Per-emitter distortion parameters.

    rho0/rho1/t_a describe the shaping-filter amplitude ripple, q0/q1/t_phi
    its phase ripple (frequencies normalized to the symbol rate).  g is the
    I/Q gain-mismatch ratio and zeta the quadrature error in radians.  c and
    f_zeta list the spurious-tone amplitudes and frequency offsets (symbol
    rate units, offset 0 = carrier leakage).  b holds the odd-order
    amplifier Taylor coefficients: b[i] multiplies the power 2*i + 1.
    """

    rho0: float
    rho1: float
    t_a: float
    q0: float
    q1: float
    t_phi: float
    g: float
    zeta: float
    c: tuple
    f_zeta: tuple
    b: tuple
    name: str = ""

    def __post_init__(self):
        if self.rho0 <= 0:
            raise ValueError(f"rho0 must be > 0, got {self.rho0}")
        if self.g <= 0:
            raise ValueError(f"gain ratio must be > 0, got {self.g}")
        if abs(self.zeta) >= np.pi / 2:
            raise ValueError("quadrature error must satisfy |zeta| < pi/2")
        if len(self.c) != len(self.f_zeta):
            raise ValueError("tone amplitude and frequency lists differ in length")
        if len(self.b) < 1:
            raise ValueError("amplifier needs at least the linear coefficient")


def identity_profile(name: str = "ideal") -> EmitterProfile:
    """A profile with every distortion stage switched off."""
    return EmitterProfile(
        rho0=1.0, rho1=0.0, t_a=4.0, q0=0.0, q1=0.0, t_phi=4.0,
        g=1.0, zeta=0.0, c=(), f_zeta=(), b=(1.0,), name=name,
    )


def parse_profile(text: str, name: str = "") -> EmitterProfile:
    """Parse the flat key=value emitter profile format.

    Exactly the keys in PROFILE_KEYS must appear once each; zeta_deg is
    converted to radians on load.
    """
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected key = value, got {raw!r}")
        key, _, val = line.partition("=")
        key = key.strip()
        if key not in PROFILE_KEYS:
            raise ValueError(f"line {lineno}: unknown profile key {key!r}")
        if key in values:
            raise ValueError(f"line {lineno}: duplicate profile key {key!r}")
        values[key] = float(val.strip())
    missing = [k for k in PROFILE_KEYS if k not in values]
    if missing:
        raise ValueError(f"profile is missing keys: {', '.join(missing)}")
    return EmitterProfile(
        rho0=values["rho0"], rho1=values["rho1"], t_a=values["T_A"],
        q0=values["q0"], q1=values["q1"], t_phi=values["T_Phi"],
        g=values["G"], zeta=np.deg2rad(values["zeta_deg"]),
        c=(complex(values["c1_re"], values["c1_im"]), complex(values["c2_re"], 0.0)),
        f_zeta=(values["f_zeta1"], values["f_zeta2"]),
        b=(values["b1"], values["b3"]),
        name=name,
    )


def load_profile(path) -> EmitterProfile:
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    name = str(path).rsplit("/", 1)[-1].rsplit(".", 1)[0]
    return parse_profile(text, name=name)


@lru_cache(maxsize=None)
def bundled_profile(name: str) -> EmitterProfile:
    """Load one of the five shipped emitter profiles (T1..T5)."""
    if name not in BUNDLED_PROFILES:
        raise ValueError(f"no bundled profile {name!r}; choose from {BUNDLED_PROFILES}")
    text = resources.files("rffid.profiles").joinpath(f"{name}.txt").read_text()
    return parse_profile(text, name=name)


def amplitude_distortion(profile: EmitterProfile, f) -> np.ndarray:
    """Filter amplitude ripple at frequency f (symbol-rate units)."""
    f = np.asarray(f, dtype=float)
    return profile.rho0 + profile.rho1 * np.cos(2 * np.pi * f / profile.t_a)


def phase_distortion(profile: EmitterProfile, f) -> np.ndarray:
    """Filter phase ripple at frequency f (symbol-rate units, radians)."""
    f = np.asarray(f, dtype=float)
    return 2 * np.pi * profile.q0 * f + profile.q1 * np.sin(2 * np.pi * f / profile.t_phi)


@lru_cache(maxsize=64)
def _rrc_taps(oversampling: int, span: int, rolloff: float) -> np.ndarray:
    """Unit-energy root-raised-cosine taps, span*oversampling + 1 of them."""
    if not 0 < rolloff <= 1:
        raise ValueError("rolloff must lie in (0, 1]")
    n = span * oversampling + 1
    t = (np.arange(n) - (n - 1) / 2) / oversampling  # symbol units
    beta = rolloff
    taps = np.empty(n, dtype=float)
    for i, ti in enumerate(t):
        if abs(ti) < 1e-12:
            taps[i] = 1.0 - beta + 4 * beta / np.pi
        elif beta > 0 and abs(abs(ti) - 1 / (4 * beta)) < 1e-12:
            taps[i] = (beta / np.sqrt(2)) * (
                (1 + 2 / np.pi) * np.sin(np.pi / (4 * beta))
                + (1 - 2 / np.pi) * np.cos(np.pi / (4 * beta))
            )
        else:
            num = np.sin(np.pi * ti * (1 - beta)) + 4 * beta * ti * np.cos(np.pi * ti * (1 + beta))
            den = np.pi * ti * (1 - (4 * beta * ti) ** 2)
            taps[i] = num / den
    taps /= np.linalg.norm(taps)
    taps.flags.writeable = False
    return taps


@dataclass(frozen=True)
class ShapingFilter:
    """Impulse response of the (possibly distorted) transmit shaping filter.

    nominal_delay is the tap index a centred symbol peaks at: the ideal
    window centre shifted by the common linear-phase term of the ripple
    model.  Symbol shaping compensates it so every emitter's waveform is
    time-aligned the way a synchronized receiver would see it, leaving only
    the frequency-dependent ripple as fingerprint.
    """

    taps: np.ndarray
    oversampling: int
    span: int
    rolloff: float
    nominal_delay: int


@lru_cache(maxsize=None)
def build_shaping_filter(
    profile: EmitterProfile,
    oversampling: int = 10,
    span: int = DEFAULT_SPAN,
    rolloff: float = DEFAULT_ROLLOFF,
) -> ShapingFilter:
    """Distorted root-raised-cosine filter for one emitter.

    The ideal taps are multiplied in the frequency domain of the tap window
    by the ripple response A(f) * exp(j*Phi(f)) and renormalized to unit
    energy.  With the ripple parameters at their identity values the ideal
    filter is returned unchanged.
    """
    if span < 4:
        raise ValueError("span must be >= 4 symbols")
    if oversampling < 2:
        raise ValueError("oversampling must be >= 2")
    ideal = _rrc_taps(oversampling, span, rolloff)
    freqs = np.fft.fftfreq(ideal.size, d=1.0 / oversampling)  # symbol-rate units
    response = amplitude_distortion(profile, freqs) * np.exp(
        1j * phase_distortion(profile, freqs)
    )
    taps = np.fft.ifft(np.fft.fft(ideal) * response)
    taps = taps / np.linalg.norm(taps)
    taps.flags.writeable = False
    # exp(+2j*pi*q0*f) advances the response by q0 symbols on the window
    delay = (ideal.size - 1) // 2 - int(round(profile.q0 * oversampling))
    delay = min(max(delay, 0), ideal.size - 1)
    return ShapingFilter(taps, oversampling, span, rolloff, delay)


def shape_symbols(frame: Frame, filt: ShapingFilter) -> np.ndarray:
    """Oversample the frame's symbols and convolve with the filter taps.

    Output length is symbol_count * oversampling; the filter group delay of
    the ideal response is compensated so each symbol peaks at its own
    sampling instant.
    """
    if frame.oversampling != filt.oversampling:
        raise ValueError("frame and filter oversampling factors differ")
    symbols = frame.symbol_array()
    upsampled = np.zeros(symbols.size * filt.oversampling, dtype=complex)
    upsampled[:: filt.oversampling] = symbols
    full = np.convolve(upsampled, filt.taps)
    return full[filt.nominal_delay : filt.nominal_delay + upsampled.size]


def ideal_waveform(
    symbols,
    oversampling: int = 10,
    span: int = DEFAULT_SPAN,
    rolloff: float = DEFAULT_ROLLOFF,
) -> np.ndarray:
    """Undistorted RRC-shaped waveform of a symbol sequence (receiver side)."""
    symbols = np.asarray(symbols, dtype=complex)
    upsampled = np.zeros(symbols.size * oversampling, dtype=complex)
    upsampled[::oversampling] = symbols
    taps = _rrc_taps(oversampling, span, rolloff)
    full = np.convolve(upsampled, taps)
    delay = (taps.size - 1) // 2
    return full[delay : delay + upsampled.size]


def iq_coefficients(g: float, zeta: float) -> tuple:
    """Direct/conjugate mixing coefficients (alpha, beta) of the modulator."""
    c, s = np.cos(zeta / 2), np.sin(zeta / 2)
    alpha = 0.5 * (g + 1) * c + 0.5j * (g - 1) * s
    beta = 0.5 * (g - 1) * c + 0.5j * (g + 1) * s
    return alpha, beta


def apply_iq_imbalance(x, g: float, zeta: float) -> np.ndarray:
    """Gain mismatch g and quadrature error zeta: out = alpha*x + beta*conj(x)."""
    if g <= 0:
        raise ValueError(f"gain ratio must be > 0, got {g}")
    x = np.asarray(x, dtype=complex)
    alpha, beta = iq_coefficients(g, zeta)
    return alpha * x + beta * np.conj(x)


def add_spurious_tones(x, c, f_zeta, sample_rate: float) -> np.ndarray:
    """Add complex tones c_i * exp(2j*pi*f_i*n/sample_rate) to the waveform.

    Frequencies share the units of sample_rate; with frequencies in
    symbol-rate units sample_rate is the oversampling factor.  An offset of
    zero is a plain DC term (carrier leakage).
    """
    c = np.asarray(c, dtype=complex)
    f = np.asarray(f_zeta, dtype=float)
    if c.size != f.size:
        raise ValueError("tone amplitude and frequency lists differ in length")
    x = np.asarray(x, dtype=complex)
    if c.size == 0:
        return x.copy()
    n = np.arange(x.size)
    tones = (c[:, None] * np.exp(2j * np.pi * f[:, None] * n[None, :] / sample_rate)).sum(axis=0)
    return x + tones


def apply_pa_nonlinearity(x, b, literal_power: bool = False) -> np.ndarray:
    """Memoryless odd-order amplifier model.

    Default form sums b[i] * x * |x|^(2i), which distorts the envelope while
    preserving the phase of each sample.  literal_power=True instead raises
    the complex sample itself to odd powers, b[i] * x^(2i+1).
    """
    b = np.asarray(b, dtype=float)
    if b.size == 0:
        raise ValueError("amplifier coefficient list is empty")
    x = np.asarray(x, dtype=complex)
    out = np.zeros_like(x)
    for i, coeff in enumerate(b):
        if literal_power:
            out += coeff * x ** (2 * i + 1)
        else:
            out += coeff * x * np.abs(x) ** (2 * i)
    return out


def emit(
    profile: EmitterProfile,
    frame: Frame,
    span: int = DEFAULT_SPAN,
    rolloff: float = DEFAULT_ROLLOFF,
    literal_pa: bool = False,
) -> np.ndarray:
    """Full distortion chain of one frame, scaled to unit average power."""
    filt = build_shaping_filter(profile, frame.oversampling, span, rolloff)
    x = shape_symbols(frame, filt)
    x = apply_iq_imbalance(x, profile.g, profile.zeta)
    x = add_spurious_tones(x, profile.c, profile.f_zeta, frame.oversampling)
    x = apply_pa_nonlinearity(x, profile.b, literal_power=literal_pa)
    power = np.mean(np.abs(x) ** 2)
    if power <= 0:
        return x
    return x / np.sqrt(power)
