import numpy as np
import pytest

from rffid.emitter import (
    EmitterProfile,
    _rrc_taps,
    add_spurious_tones,
    amplitude_distortion,
    apply_iq_imbalance,
    apply_pa_nonlinearity,
    build_shaping_filter,
    bundled_profile,
    emit,
    identity_profile,
    iq_coefficients,
    load_profile,
    parse_profile,
    shape_symbols,
)
from rffid.signal import build_frame, standard_frame
from rffid.streams import RandomStream


def _frame(seed=0):
    return standard_frame(RandomStream(seed, purpose="data").bits(192))


# --- shaping filter ---------------------------------------------------------


def test_identity_profile_reproduces_ideal_filter():
    filt = build_shaping_filter(identity_profile(), 10, 8, 0.35)
    ideal = _rrc_taps(10, 8, 0.35)
    assert np.max(np.abs(filt.taps - ideal)) < 1e-12


def test_filter_tap_count_and_energy():
    filt = build_shaping_filter(bundled_profile("T1"), 10, 8, 0.35)
    assert filt.taps.size == 8 * 10 + 1
    assert np.sum(np.abs(filt.taps) ** 2) == pytest.approx(1.0, abs=1e-12)


def test_amplitude_ripple_at_dc():
    assert amplitude_distortion(bundled_profile("T1"), 0.0) == pytest.approx(1.03)


def test_phase_ripple_separates_emitters():
    t1 = build_shaping_filter(bundled_profile("T1"), 10, 8, 0.35)
    t2_profile = bundled_profile("T2")
    # isolate the q1 difference: clone T1 with T2's q1 only
    p = bundled_profile("T1")
    q1_only = EmitterProfile(
        rho0=p.rho0, rho1=p.rho1, t_a=p.t_a, q0=p.q0, q1=t2_profile.q1,
        t_phi=p.t_phi, g=p.g, zeta=p.zeta, c=p.c, f_zeta=p.f_zeta, b=p.b,
    )
    other = build_shaping_filter(q1_only, 10, 8, 0.35)
    assert np.linalg.norm(t1.taps - other.taps) > 0


def test_filter_rejects_bad_profile():
    with pytest.raises(ValueError):
        EmitterProfile(rho0=0.0, rho1=0, t_a=4, q0=0, q1=0, t_phi=4,
                       g=1, zeta=0, c=(), f_zeta=(), b=(1.0,))


# --- symbol shaping ---------------------------------------------------------


def test_single_symbol_reproduces_taps():
    frame = build_frame([0, 0], [], oversampling=10)
    filt = build_shaping_filter(identity_profile(), 10, 8, 0.35)
    out = shape_symbols(frame, filt)
    symbol = frame.symbol_array()[0]
    delay = (filt.taps.size - 1) // 2
    expected = symbol * filt.taps[delay : delay + 10]
    assert np.allclose(out, expected, atol=1e-15)


def test_all_zero_symbols():
    frame = build_frame([0, 0, 0, 0], [], oversampling=10)
    zeroed = Frame = frame.__class__(
        symbols=(0j, 0j), pilot_mask=(False, False), oversampling=10
    )
    filt = build_shaping_filter(identity_profile(), 10, 8, 0.35)
    assert np.all(shape_symbols(zeroed, filt) == 0)


def test_standard_frame_waveform_length():
    filt = build_shaping_filter(identity_profile(), 10, 8, 0.35)
    assert shape_symbols(_frame(), filt).size == 1280


def test_shape_oversampling_mismatch():
    frame = build_frame([0, 0], [], oversampling=8)
    filt = build_shaping_filter(identity_profile(), 10, 8, 0.35)
    with pytest.raises(ValueError):
        shape_symbols(frame, filt)


# --- I/Q imbalance ----------------------------------------------------------


def test_iq_balanced_is_identity():
    x = RandomStream(1).complex_gaussian(1.0, 256)
    assert np.allclose(apply_iq_imbalance(x, 1.0, 0.0), x, atol=1e-15)


def test_iq_coefficients_consistency():
    # with a pure real input (s = 1) the output must be G * exp(j*zeta/2)
    g, zeta = 0.998, np.deg2rad(-0.018)
    alpha, beta = iq_coefficients(g, zeta)
    assert alpha + beta == pytest.approx(g * np.exp(1j * zeta / 2), abs=1e-15)


def test_iq_zero_quadrature_real_input():
    x = np.linspace(-1, 1, 32) + 0j
    out = apply_iq_imbalance(x, 0.9, 0.0)
    assert np.allclose(out, 0.9 * x, atol=1e-15)


def test_iq_linearity_in_signal_and_conjugate():
    x = RandomStream(2).complex_gaussian(1.0, 64)
    alpha, beta = iq_coefficients(1.02, 0.01)
    out = apply_iq_imbalance(3.0 * x, 1.02, 0.01)
    assert np.allclose(out, 3.0 * (alpha * x + beta * np.conj(x)), atol=1e-12)


# --- spurious tones ---------------------------------------------------------


def test_no_tones_is_identity():
    x = RandomStream(3).complex_gaussian(1.0, 64)
    assert np.array_equal(add_spurious_tones(x, [], [], 10), x)


def test_dc_tone_is_constant_offset():
    x = np.zeros(16, dtype=complex)
    out = add_spurious_tones(x, [0.0082], [0.0], 10)
    assert np.allclose(out, 0.0082)


def test_quarter_rate_tone_cycles_in_four_samples():
    x = np.zeros(8, dtype=complex)
    out = add_spurious_tones(x, [1.0], [0.25 * 10], 10)  # 0.25 of the sample rate
    assert np.allclose(out, [1, 1j, -1, -1j, 1, 1j, -1, -1j], atol=1e-12)


# --- amplifier --------------------------------------------------------------


def test_pa_linear_is_identity():
    x = RandomStream(4).complex_gaussian(1.0, 64)
    assert np.allclose(apply_pa_nonlinearity(x, [1.0]), x, atol=1e-15)


def test_pa_real_input_both_forms_agree():
    out_env = apply_pa_nonlinearity(np.array([0.5 + 0j]), [1.0, 0.3])
    out_lit = apply_pa_nonlinearity(np.array([0.5 + 0j]), [1.0, 0.3], literal_power=True)
    assert out_env[0] == pytest.approx(0.5375)
    assert out_lit[0] == pytest.approx(0.5375)


def test_pa_imaginary_input_distinguishes_forms():
    x = np.array([0.5j])
    env = apply_pa_nonlinearity(x, [1.0, 0.3])
    lit = apply_pa_nonlinearity(x, [1.0, 0.3], literal_power=True)
    assert env[0] == pytest.approx(0.5375j)
    assert lit[0] == pytest.approx(0.4625j)  # 0.5j + 0.3 * (0.5j)**3


def test_pa_envelope_form_preserves_phase():
    x = RandomStream(5).complex_gaussian(1.0, 128)
    out = apply_pa_nonlinearity(x, [1.0, 0.3])
    assert np.allclose(np.angle(out), np.angle(x), atol=1e-12)


# --- full chain -------------------------------------------------------------


def test_identity_chain_matches_ideal_waveform():
    from rffid.emitter import ideal_waveform

    frame = _frame()
    out = emit(identity_profile(), frame)
    ideal = ideal_waveform(frame.symbol_array())
    ideal = ideal / np.sqrt(np.mean(np.abs(ideal) ** 2))
    assert np.max(np.abs(out - ideal)) < 1e-12


def test_emit_unit_power():
    out = emit(bundled_profile("T1"), _frame())
    assert abs(np.mean(np.abs(out) ** 2) - 1.0) < 1e-12


def test_fingerprints_differ_between_emitters():
    frame = _frame()
    a = emit(bundled_profile("T1"), frame)
    b = emit(bundled_profile("T3"), frame)
    assert np.linalg.norm(a - b) / np.linalg.norm(a) > 1e-3


def test_stage_identity_parameters_are_noops():
    x = RandomStream(6).complex_gaussian(1.0, 128)
    assert np.max(np.abs(apply_iq_imbalance(x, 1.0, 0.0) - x)) < 1e-12
    assert np.max(np.abs(apply_pa_nonlinearity(x, [1.0]) - x)) < 1e-12
    assert np.max(np.abs(add_spurious_tones(x, [], [], 10) - x)) < 1e-12


# --- profile files ----------------------------------------------------------


def test_bundled_profile_values():
    p = bundled_profile("T1")
    assert p.rho0 == 1.0
    assert p.rho1 == 0.03
    assert p.g == 0.998
    assert p.zeta == pytest.approx(np.deg2rad(-0.018))
    assert p.c == ((0.0013 + 0.0082j), (0.0082 + 0j))
    assert p.f_zeta == (0.0, 0.0129)
    assert p.b == (1.0, 0.3)


def test_all_bundled_profiles_load():
    b3 = [bundled_profile(n).b[1] for n in ("T1", "T2", "T3", "T4", "T5")]
    assert b3 == [0.3, 0.6, 0.01, 0.4, 0.08]


def test_profile_round_trip(tmp_path):
    src = parse_profile(open_text_t1())
    path = tmp_path / "custom.txt"
    path.write_text(open_text_t1())
    assert load_profile(path).g == src.g


def open_text_t1():
    from importlib import resources

    return resources.files("rffid.profiles").joinpath("T1.txt").read_text()


def test_profile_unknown_key():
    with pytest.raises(ValueError, match="unknown profile key"):
        parse_profile("bogus = 1\n" + open_text_t1())


def test_profile_missing_key():
    with pytest.raises(ValueError, match="missing keys"):
        parse_profile("rho0 = 1\n")
