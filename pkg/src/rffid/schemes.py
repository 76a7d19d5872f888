"""Multi-antenna identification schemes.

Three ways to turn an N-antenna capture into one emitter label:

* mutual-information weighting (MIWS): classify each antenna row on its own
  and fuse the labels by voting, with weights inversely proportional to each
  antenna's mutual-information deficit;
* distortions filtering (DFS): exploit the zero-mean of noise and
  quantization error across antennas to recover a normalized clean waveform
  free of per-antenna gain and oscillator phase;
* grouped filtering and weighting (GDFWS): DFS inside contiguous antenna
  groups, MIWS-style voting across the group labels.

Plain single-antenna classification (ORS) and equal-weight voting (UWS) are
included as baselines.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .frontend import AntennaCapture

DELTA_MI_FLOOR = 1e-9
VARIANCE_FLOOR = 1e-12
DEGENERATE_TOL = 1e-12


class DegenerateRowError(ValueError):
    """A row mean is too close to zero for mean-ratio recovery."""


@dataclass(frozen=True)
class MiwsWeights:
    """Per-antenna mutual-information deficits and the resulting weights."""

    delta: np.ndarray
    omega: np.ndarray


@dataclass(frozen=True)
class DfsRecovery:
    """Output of the cross-antenna filtering step.

    x_tilde is the recovered waveform normalized so its first sample is
    exactly 1.  phi_ratios holds the estimated gain ratios of every antenna
    relative to the first one.  condition_flags marks the rows that were
    reliable enough to enter the final average.
    """

    x_tilde: np.ndarray
    phi_ratios: np.ndarray
    condition_flags: np.ndarray


@dataclass(frozen=True)
class VoteOutcome:
    """Result of a weighted vote over per-unit labels."""

    label: int
    tally: dict
    contributors: tuple


def delta_mi(var_y: float, var_w: float, var_x2: float, var_h: float) -> float:
    """Mutual-information deficit of one antenna (nats).

    0.5 * ln(var_y / (var_w + var_x2 * var_h)), floored at DELTA_MI_FLOOR so
    the distortion-free limit (where the ratio is 1 or finite-sample
    estimates dip below it) never produces a zero or negative deficit.
    """
    for name, v in (("var_y", var_y), ("var_w", var_w),
                    ("var_x2", var_x2), ("var_h", var_h)):
        if v <= 0:
            raise ValueError(f"{name} must be > 0, got {v}")
    raw = 0.5 * np.log(var_y / (var_w + var_x2 * var_h))
    return float(max(raw, DELTA_MI_FLOOR))


def miws_weights(delta: Sequence[float]) -> MiwsWeights:
    """Normalize inverse deficits into voting weights: w_i = (1/d_i) / sum(1/d_j)."""
    delta = np.asarray(delta, dtype=float)
    if delta.size == 0:
        raise ValueError("weight computation needs at least one deficit")
    if np.any(delta < DELTA_MI_FLOOR):
        raise ValueError(f"deficits must be >= {DELTA_MI_FLOOR}")
    inv = 1.0 / delta
    return MiwsWeights(delta=delta, omega=inv / inv.sum())


def estimate_variances(
    capture: AntennaCapture,
    mode: str = "oracle",
    pilot_reference: Optional[np.ndarray] = None,
):
    """Per-antenna (var_y, var_w, var_x2, var_h) for the deficit formula.

    oracle mode reads every quantity from the capture's ground truth: the
    received variance is the clean-signal power times |h_i|^2 plus the
    configured noise and quantizer variances.  pilot mode estimates from the
    samples alone: var_y is the empirical row variance over the pilot
    region, the signal part comes from the matched correlation with the
    known pilot waveform, and var_w is their difference (floored).  In pilot
    mode the signal estimate is returned in var_x2 with var_h = 1 since only
    the product is identifiable.
    """
    n = capture.n_antennas
    if mode == "oracle":
        truth = capture.truth
        if truth is None:
            raise ValueError("oracle mode requires capture ground truth")
        x_hat = truth.x_hat
        var_x2 = float(np.mean(np.abs(x_hat - x_hat.mean()) ** 2))
        var_h = np.abs(truth.h) ** 2
        var_w = np.full(n, max(truth.sigma_w2, VARIANCE_FLOOR))
        quant_var = 0.0
        if truth.quant_step is not None:
            quant_var = truth.quant_step**2 / 6.0  # both channels together
        var_y = var_x2 * var_h + truth.sigma_w2 + quant_var
        return var_y, var_w, np.full(n, var_x2), var_h

    if mode == "pilot":
        if pilot_reference is None:
            raise ValueError("pilot mode requires the reference pilot waveform")
        p = np.asarray(pilot_reference, dtype=complex)
        lp = p.size
        if lp < 2 or capture.n_samples < lp:
            raise ValueError("pilot region longer than the capture")
        energy = float(np.sum(np.abs(p) ** 2))
        rows = capture.y[:, :lp]
        var_y = np.mean(np.abs(rows - rows.mean(axis=1, keepdims=True)) ** 2, axis=1)
        corr = rows @ np.conj(p)
        var_signal = np.abs(corr) ** 2 / (energy * lp)
        var_w = np.maximum(var_y - var_signal, VARIANCE_FLOOR)
        return var_y, var_w, var_signal, np.ones(n)

    raise ValueError(f"unknown variance mode {mode!r} (expected oracle|pilot)")


def antenna_deficits(
    capture: AntennaCapture,
    mode: str = "oracle",
    pilot_reference: Optional[np.ndarray] = None,
) -> np.ndarray:
    """Mutual-information deficit of every antenna of a capture."""
    var_y, var_w, var_x2, var_h = estimate_variances(capture, mode, pilot_reference)
    return np.array(
        [delta_mi(var_y[i], var_w[i], var_x2[i], var_h[i]) for i in range(capture.n_antennas)]
    )


def weighted_vote(labels: Sequence[int], weights: Sequence[float]) -> VoteOutcome:
    """Accumulate weights per label; ties resolve to the lowest label."""
    labels = list(labels)
    weights = list(weights)
    if len(labels) != len(weights):
        raise ValueError("labels and weights must have equal length")
    if not labels:
        raise ValueError("vote needs at least one contributor")
    tally: dict = {}
    for lab, w in zip(labels, weights):
        tally[lab] = tally.get(lab, 0.0) + float(w)
    best = max(tally.values())
    label = min(lab for lab, w in tally.items() if w == best)
    return VoteOutcome(label=label, tally=tally, contributors=tuple(zip(labels, weights)))


def dfs_recover(capture: AntennaCapture, ratio_mode: str = "mean") -> DfsRecovery:
    """Recover the normalized clean waveform from an N x L capture.

    Row means estimate each antenna's complex gain up to the common factor
    mean(x); their pairwise ratios rescale every row into the frame of each
    antenna in turn, and column averages suppress the zero-mean noise and
    quantization error.  Dividing each reconstructed row by its own first
    entry removes the per-antenna gain entirely, and averaging over antennas
    gives x_tilde = x / x(1) with residual error shrinking like 1/sqrt(N).

    ratio_mode "mean" uses row-mean ratios; "xcorr" uses the normalized
    cross-correlation <y_l, y_j> / ||y_j||^2, which stays usable when the
    waveform has no DC content.
    """
    y = capture.y
    n, length = y.shape
    if n < 2:
        raise ValueError("filtering needs at least two antennas")
    if length < 2:
        raise ValueError("filtering needs at least two samples")

    if ratio_mode == "mean":
        row_means = y.mean(axis=1)
        if np.any(np.abs(row_means) < DEGENERATE_TOL):
            raise DegenerateRowError(
                "a row mean is numerically zero; retry with ratio_mode='xcorr'"
            )
        ratios = row_means[:, None] / row_means[None, :]
    elif ratio_mode == "xcorr":
        gram = y @ np.conj(y.T)
        norms = np.real(np.diag(gram))
        if np.any(norms < DEGENERATE_TOL):
            raise DegenerateRowError("a row has numerically zero energy")
        ratios = gram / norms[None, :]
    else:
        raise ValueError(f"unknown ratio mode {ratio_mode!r} (expected mean|xcorr)")

    # ratios[l, j] estimates phi_l / phi_j; rescaling row j by it and
    # averaging the columns reconstructs row l of the rank-one matrix.
    xi = (ratios @ y) / n
    first = xi[:, 0]
    valid = np.abs(first) >= DEGENERATE_TOL
    if not np.any(valid):
        raise ValueError("every reconstructed row has a degenerate first entry")
    x_tilde = np.mean(xi[valid] / first[valid, None], axis=0)
    x_tilde[0] = 1.0
    return DfsRecovery(x_tilde=x_tilde, phi_ratios=ratios[:, 0].copy(), condition_flags=valid)


def dfs_recover_robust(capture: AntennaCapture, ratio_mode: str = "mean") -> DfsRecovery:
    """dfs_recover with automatic fallback to cross-correlation ratios."""
    if ratio_mode == "mean":
        try:
            return dfs_recover(capture, "mean")
        except DegenerateRowError:
            return dfs_recover(capture, "xcorr")
    return dfs_recover(capture, ratio_mode)


def partition_groups(n_antennas: int, group_size: int) -> list:
    """Contiguous, maximally even antenna groups of roughly group_size.

    ceil(n / group_size) groups; the remainder is spread one antenna at a
    time over the leading groups (10 antennas in groups of 4 -> 4, 3, 3).
    """
    if group_size < 2:
        raise ValueError("group_size must be >= 2")
    if group_size > n_antennas:
        raise ValueError(
            f"group_size {group_size} exceeds antenna count {n_antennas}"
        )
    n_groups = -(-n_antennas // group_size)
    base, extra = divmod(n_antennas, n_groups)
    sizes = [base + 1] * extra + [base] * (n_groups - extra)
    bounds = np.cumsum([0] + sizes)
    return [slice(int(bounds[i]), int(bounds[i + 1])) for i in range(n_groups)]


def subcapture(capture: AntennaCapture, rows: slice) -> AntennaCapture:
    """View of a capture restricted to a contiguous antenna slice."""
    truth = capture.truth
    if truth is not None:
        from dataclasses import replace

        truth = replace(truth, h=truth.h[rows], theta=truth.theta[rows])
    return AntennaCapture(
        y=capture.y[rows],
        frame_index=capture.frame_index,
        emitter=capture.emitter,
        truth=truth,
        saturation_count=capture.saturation_count,
    )


FeatureFn = Callable[[np.ndarray], object]


def _predict(model, feature_values) -> int:
    from .classify import predict

    return predict(model, feature_values)[0]


def ors_identify(capture: AntennaCapture, feature_fn: FeatureFn, model, antenna: int = 0) -> VoteOutcome:
    """Classify a single antenna's raw row (the no-processing baseline)."""
    feature = feature_fn(capture.y[antenna])
    label = _predict(model, feature.values)
    return VoteOutcome(label=label, tally={label: 1.0}, contributors=((label, 1.0),))


def _per_antenna_labels(capture: AntennaCapture, feature_fn: FeatureFn, models) -> list:
    n = capture.n_antennas
    if not isinstance(models, (list, tuple)):
        models = [models] * n
    if len(models) != n:
        raise ValueError("need one model per antenna (or a single shared model)")
    return [
        _predict(models[i], feature_fn(capture.y[i]).values) for i in range(n)
    ]


def uws_identify(capture: AntennaCapture, feature_fn: FeatureFn, models) -> VoteOutcome:
    """Equal-weight vote over the per-antenna labels."""
    labels = _per_antenna_labels(capture, feature_fn, models)
    n = len(labels)
    return weighted_vote(labels, [1.0 / n] * n)


def miws_identify(
    capture: AntennaCapture,
    feature_fn: FeatureFn,
    models,
    mi_mode: str = "oracle",
    pilot_reference: Optional[np.ndarray] = None,
) -> VoteOutcome:
    """Deficit-weighted vote over the per-antenna labels."""
    labels = _per_antenna_labels(capture, feature_fn, models)
    deficits = antenna_deficits(capture, mi_mode, pilot_reference)
    return weighted_vote(labels, miws_weights(deficits).omega)


def dfs_identify(
    capture: AntennaCapture,
    feature_fn: FeatureFn,
    model,
    ratio_mode: str = "mean",
) -> VoteOutcome:
    """Classify the filtered waveform recovered from all antennas."""
    recovery = dfs_recover_robust(capture, ratio_mode)
    label = _predict(model, feature_fn(recovery.x_tilde).values)
    return VoteOutcome(label=label, tally={label: 1.0}, contributors=((label, 1.0),))


def gdfws_identify(
    capture: AntennaCapture,
    group_size: int,
    feature_fn: FeatureFn,
    model,
    mi_mode: str = "oracle",
    pilot_reference: Optional[np.ndarray] = None,
    ratio_mode: str = "mean",
) -> VoteOutcome:
    """Group-filtered, deficit-weighted identification.

    Antennas are split into contiguous near-even groups; each group runs the
    filtering recovery and votes with a weight derived from the mean deficit
    of its member antennas.  With a single group this reduces exactly to
    dfs_identify.
    """
    groups = partition_groups(capture.n_antennas, group_size)
    deficits = antenna_deficits(capture, mi_mode, pilot_reference)
    labels = []
    group_deficits = []
    for rows in groups:
        sub = subcapture(capture, rows)
        recovery = dfs_recover_robust(sub, ratio_mode)
        labels.append(_predict(model, feature_fn(recovery.x_tilde).values))
        group_deficits.append(float(np.mean(deficits[rows])))
    omega = miws_weights(group_deficits).omega
    return weighted_vote(labels, omega)
