"""Multi-antenna radio-frequency fingerprint simulation and identification.

The package simulates an end-to-end fingerprinting link: emitter hardware
distortions (shaping-filter ripple, I/Q imbalance, spurious tones, amplifier
nonlinearity), an AWGN channel, per-antenna receiver impairments (independent
oscillator phase noise, sampling jitter, quantization), and three
identification schemes that fuse the antennas: mutual-information weighting,
cross-antenna distortions filtering, and grouped filtering with weighting.
A closed-form theory relates antenna count, SNR and filtering accuracy, and
an experiment harness reproduces the accuracy sweeps.
"""

from .analysis import erfinv, gain, min_antennas, predicted_residual_std, select_scheme, xi, xi_table
from .classify import LabeledDataset, TrainedModel, evaluate, predict, train
from .emitter import (
    EmitterProfile,
    ShapingFilter,
    apply_iq_imbalance,
    apply_pa_nonlinearity,
    add_spurious_tones,
    build_shaping_filter,
    bundled_profile,
    emit,
    load_profile,
    shape_symbols,
)
from .experiment import ExperimentConfig, gen_dataset, load_config, parse_config, run_experiment
from .features import FeatureVector, ItdDecomposition, itd_decompose, itd_features, lms_features
from .frontend import (
    AntennaCapture,
    ChannelConfig,
    ReceiverProfile,
    apply_jitter,
    quantize,
    receive,
    sample_phase_noise,
)
from .schemes import (
    DfsRecovery,
    MiwsWeights,
    VoteOutcome,
    delta_mi,
    dfs_recover,
    estimate_variances,
    gdfws_identify,
    miws_weights,
    ors_identify,
    uws_identify,
    weighted_vote,
)
from .signal import Frame, MomentSummary, build_frame, map_qpsk, moments
from .streams import RandomStream

__version__ = "0.1.0"
