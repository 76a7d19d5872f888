"""Experiment orchestration: dataset synthesis, scheme sweeps and results.

A run sweeps (scheme, SNR, antenna count) over a number of independent
trials.  Every trial synthesizes fresh training and test frames for each
emitter, pushes them through the transmit chain and the multi-antenna
frontend, trains the classifier on scheme-processed training features and
scores the test frames.  All randomness is keyed on
(seed, trial, frame, antenna, purpose), so the output is byte-identical for
a fixed master seed no matter how many worker processes are used.
"""

from __future__ import annotations

import hashlib
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields, replace

import numpy as np

from . import classify, features, schemes
from .emitter import BUNDLED_PROFILES, EmitterProfile, bundled_profile, emit, load_profile
from .frontend import AntennaCapture, ChannelConfig, ReceiverProfile, receive
from .signal import DEFAULT_OVERSAMPLING, standard_frame
from .streams import RandomStream

RESULTS_HEADER = "scheme,feature,snr_db,n_antennas,group_size,chi,trial,seed,accuracy"

ALL_SCHEMES = ("ORS", "UWS", "MIWS", "DFS", "GDFWS")
DATA_BITS_PER_FRAME = 192  # 96 data symbols after the 32 pilots


@dataclass(frozen=True)
class ExperimentConfig:
    """Flat description of one experiment sweep.

    profiles may be bundled emitter names (T1..T5) or paths to profile
    files.  chi is a scalar applied to every antenna or a per-antenna list
    (in which case every swept antenna count must match its length).
    """

    profiles: tuple
    snr_list: tuple
    n_antennas: tuple
    schemes: tuple = ("ORS", "DFS")
    feature: str = "lms"
    train_frames: int = 200
    test_frames: int = 100
    trials: int = 1000
    chi: object = 0.01
    group_size: int = 128
    jitter_delta: float = 0.003
    jitter_mode: str = "constant"
    quant_v: object = 1.0
    quant_eps: object = 16
    seed: int = 0
    mi_mode: str = "oracle"
    ratio_mode: str = "mean"
    pa_literal_power: bool = False
    fading: str = "unit"
    lo_freq_norm: float = 100.0

    def __post_init__(self):
        if not self.profiles:
            raise ConfigError("at least one emitter profile is required")
        for count, name in ((self.train_frames, "train_frames"),
                            (self.test_frames, "test_frames"),
                            (self.trials, "trials")):
            if count < 1:
                raise ConfigError(f"{name} must be positive")
        if not self.snr_list:
            raise ConfigError("snr_list must not be empty")
        if not self.n_antennas or any(n < 1 for n in self.n_antennas):
            raise ConfigError("n_antennas must list positive antenna counts")
        unknown = [s for s in self.schemes if s not in ALL_SCHEMES]
        if unknown:
            raise ConfigError(f"unknown schemes {unknown}; valid: {ALL_SCHEMES}")
        if self.feature not in ("itd", "lms"):
            raise ConfigError(f"feature must be itd or lms, got {self.feature!r}")
        if self.mi_mode not in ("oracle", "pilot"):
            raise ConfigError(f"mi_mode must be oracle or pilot, got {self.mi_mode!r}")
        if self.ratio_mode not in ("mean", "xcorr"):
            raise ConfigError(f"ratio_mode must be mean or xcorr, got {self.ratio_mode!r}")
        if not np.isscalar(self.chi):
            for n in self.n_antennas:
                if len(self.chi) != n:
                    raise ConfigError(
                        "per-antenna chi list length must equal every swept antenna count"
                    )
        needs_multi = [s for s in ("DFS", "GDFWS") if s in self.schemes]
        if needs_multi and min(self.n_antennas) < 2:
            raise ConfigError(f"{needs_multi} require at least two antennas")
        if "GDFWS" in self.schemes and self.group_size < 2:
            raise ConfigError("group_size must be >= 2")

    def chi_summary(self) -> str:
        if np.isscalar(self.chi):
            return f"{float(self.chi):g}"
        return ";".join(f"{float(c):g}" for c in self.chi)


class ConfigError(ValueError):
    """Bad experiment configuration (unknown key, missing value, bad type)."""


_LIST_KEYS = {"profiles", "snr_list", "n_antennas", "schemes", "chi"}
_INT_KEYS = {"train_frames", "test_frames", "trials", "group_size", "seed", "quant_eps"}
_FLOAT_KEYS = {"jitter_delta", "quant_v", "lo_freq_norm"}
_BOOL_KEYS = {"pa_literal_power"}


def _parse_scalar(key: str, raw: str):
    raw = raw.strip()
    if key in _BOOL_KEYS:
        if raw.lower() in ("true", "1", "yes", "on"):
            return True
        if raw.lower() in ("false", "0", "no", "off"):
            return False
        raise ConfigError(f"{key}: expected a boolean, got {raw!r}")
    if key in ("quant_v", "quant_eps") and raw.lower() in ("none", "off"):
        return None
    try:
        if key in _INT_KEYS:
            return int(raw)
        if key in _FLOAT_KEYS:
            return float(raw)
    except ValueError as exc:
        raise ConfigError(f"{key}: {exc}") from None
    return raw


def parse_config(text: str) -> ExperimentConfig:
    """Parse the flat key=value experiment description.

    Comma-separated values for the list-valued keys; '#' starts a comment;
    unknown keys are errors.
    """
    valid = {f.name for f in fields(ExperimentConfig)}
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value, got {raw!r}")
        key, _, val = line.partition("=")
        key = key.strip()
        if key not in valid:
            raise ConfigError(
                f"line {lineno}: unknown key {key!r}; valid keys: {', '.join(sorted(valid))}"
            )
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        if key in _LIST_KEYS:
            items = [v.strip() for v in val.split(",") if v.strip()]
            if key == "profiles":
                values[key] = tuple(items)
            elif key == "schemes":
                values[key] = tuple(items)
            elif key == "snr_list":
                values[key] = tuple(float(v) for v in items)
            elif key == "n_antennas":
                values[key] = tuple(int(v) for v in items)
            elif key == "chi":
                parsed = tuple(float(v) for v in items)
                values[key] = parsed[0] if len(parsed) == 1 else parsed
        else:
            values[key] = _parse_scalar(key, val)
    missing = [k for k in ("profiles", "snr_list", "n_antennas") if k not in values]
    if missing:
        raise ConfigError(f"config is missing required keys: {', '.join(missing)}")
    return ExperimentConfig(**values)


def load_config(path) -> ExperimentConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read())


def canonical_config_text(config: ExperimentConfig) -> str:
    """Stable textual form of a config, used for dataset manifests."""
    parts = []
    for f in sorted(fields(ExperimentConfig), key=lambda f: f.name):
        value = getattr(config, f.name)
        if isinstance(value, tuple):
            value = ",".join(str(v) for v in value)
        parts.append(f"{f.name}={value}")
    return "\n".join(parts) + "\n"


def resolve_profiles(config: ExperimentConfig) -> list:
    """Load bundled or file-based emitter profiles in config order."""
    out = []
    for entry in config.profiles:
        if entry in BUNDLED_PROFILES:
            out.append(bundled_profile(entry))
        elif os.path.exists(entry):
            out.append(load_profile(entry))
        else:
            raise ConfigError(
                f"profile {entry!r} is neither a bundled name {BUNDLED_PROFILES} nor a file"
            )
    return out


# ---------------------------------------------------------------------------
# single-trial pipeline


def _frame_waveforms(config: ExperimentConfig, profiles, trial: int):
    """Waveforms of every (emitter, slot); slot-major global frame indices."""
    m_count = len(profiles)
    slots = config.train_frames + config.test_frames
    base = RandomStream(config.seed, trial=trial)
    waveforms = {}
    for slot in range(slots):
        for m in range(m_count):
            k = 1 + slot * m_count + m
            bits = base.at(frame=k, purpose="data-bits").bits(DATA_BITS_PER_FRAME)
            frame = standard_frame(bits)
            waveforms[(m, slot)] = (k, emit(profiles[m], frame, literal_pa=config.pa_literal_power))
    return waveforms


def _captures(config, waveforms, trial, n, snr):
    channel = ChannelConfig(snr_db=snr, fading=config.fading)
    receiver = ReceiverProfile(
        n_antennas=n,
        chi=config.chi,
        jitter_delta=config.jitter_delta,
        jitter_mode=config.jitter_mode,
        lo_freq_norm=config.lo_freq_norm,
        quant_v=config.quant_v,
        quant_eps=config.quant_eps,
    )
    base = RandomStream(config.seed, trial=trial)
    captures = {}
    for (m, slot), (k, x2) in waveforms.items():
        captures[(m, slot)] = receive(x2, channel, receiver, k, base.at(frame=k), emitter=m)
    return captures


def _lms_reference() -> np.ndarray:
    """Pilot reference restricted to its payload-free prefix."""
    return features.pilot_reference()[: features.usable_pilot_length()]


def _lms_segments(rows) -> np.ndarray:
    """Unit-rms pilot segments; the scale is receiver gain, not fingerprint."""
    segs = np.asarray(rows)[:, : features.usable_pilot_length()]
    rms = np.sqrt(np.mean(np.abs(segs) ** 2, axis=1, keepdims=True))
    return segs / np.where(rms > 0, rms, 1.0)


def _extract_rows(config, rows):
    """Feature matrix for a stack of equal-length complex sequences.

    The lms route fits adaptive taps mapping the payload-free pilot prefix
    onto its ideal waveform; the itd route decomposes the symbol-rate
    demodulation residual, where the distortion is not buried under the
    nominal waveform.
    """
    if config.feature == "lms":
        feats, _ = features.lms_features_batch(_lms_segments(rows), _lms_reference())
        return feats
    return np.vstack([
        features.itd_features(features.demodulated_residual(row)).values for row in rows
    ])


def _feature_fn(config):
    if config.feature == "lms":
        ref = _lms_reference()

        def fn(row):
            return features.lms_features(_lms_segments([row])[0], ref)

        return fn

    def fn(row):
        return features.itd_features(features.demodulated_residual(row))

    return fn


def _pilot_reference_or_none(config):
    return _lms_reference() if config.mi_mode == "pilot" else None


def _trial_records(config: ExperimentConfig, trial: int) -> list:
    profiles = resolve_profiles(config)
    m_count = len(profiles)
    n_train, n_test = config.train_frames, config.test_frames
    slots = n_train + n_test
    waveforms = _frame_waveforms(config, profiles, trial)

    per_antenna_needed = any(s in config.schemes for s in ("ORS", "UWS", "MIWS"))
    pilot_ref = _pilot_reference_or_none(config)

    records = []
    for n in config.n_antennas:
        for snr in config.snr_list:
            captures = _captures(config, waveforms, trial, n, snr)
            train_keys = [(m, s) for s in range(n_train) for m in range(m_count)]
            test_keys = [(m, s) for s in range(n_train, slots) for m in range(m_count)]
            train_labels = np.array([m for m, _ in train_keys])
            test_labels = np.array([m for m, _ in test_keys])

            scheme_acc = {}

            if per_antenna_needed:
                # one feature matrix per antenna, train one model per antenna
                all_keys = train_keys + test_keys
                stacked = np.vstack([
                    captures[key].y[i] for i in range(n) for key in all_keys
                ])
                feats = _extract_rows(config, stacked)
                per_ant = feats.reshape(n, len(all_keys), -1)
                models = []
                test_label_matrix = np.empty((n, len(test_keys)), dtype=int)
                for i in range(n):
                    train_feats = per_ant[i, : len(train_keys)]
                    test_feats = per_ant[i, len(train_keys):]
                    model = classify.train(
                        classify.LabeledDataset(train_feats, train_labels)
                    )
                    models.append(model)
                    test_label_matrix[i] = classify.predict_batch(model, test_feats)

                if "ORS" in config.schemes:
                    for i in range(n):
                        acc = float(np.mean(test_label_matrix[i] == test_labels))
                        scheme_acc[f"ORS{i + 1}"] = acc
                if "UWS" in config.schemes:
                    hits = 0
                    for j in range(len(test_keys)):
                        vote = schemes.weighted_vote(
                            list(test_label_matrix[:, j]), [1.0 / n] * n
                        )
                        hits += vote.label == test_labels[j]
                    scheme_acc["UWS"] = hits / len(test_keys)
                if "MIWS" in config.schemes:
                    hits = 0
                    for j, key in enumerate(test_keys):
                        deficits = schemes.antenna_deficits(
                            captures[key], config.mi_mode, pilot_ref
                        )
                        omega = schemes.miws_weights(deficits).omega
                        vote = schemes.weighted_vote(list(test_label_matrix[:, j]), omega)
                        hits += vote.label == test_labels[j]
                    scheme_acc["MIWS"] = hits / len(test_keys)

            if "DFS" in config.schemes or "GDFWS" in config.schemes:
                if "DFS" in config.schemes:
                    recov = {
                        key: schemes.dfs_recover_robust(captures[key], config.ratio_mode).x_tilde
                        for key in train_keys + test_keys
                    }
                    feats = _extract_rows(
                        config, np.vstack([recov[key] for key in train_keys + test_keys])
                    )
                    model = classify.train(
                        classify.LabeledDataset(feats[: len(train_keys)], train_labels)
                    )
                    predicted = classify.predict_batch(model, feats[len(train_keys):])
                    scheme_acc["DFS"] = float(np.mean(predicted == test_labels))

                if "GDFWS" in config.schemes:
                    groups = schemes.partition_groups(n, config.group_size)
                    group_rows = []
                    for key in train_keys + test_keys:
                        cap = captures[key]
                        for rows in groups:
                            sub = schemes.subcapture(cap, rows)
                            group_rows.append(
                                schemes.dfs_recover_robust(sub, config.ratio_mode).x_tilde
                            )
                    feats = _extract_rows(config, np.vstack(group_rows))
                    g = len(groups)
                    train_feats = feats[: len(train_keys) * g]
                    test_feats = feats[len(train_keys) * g:]
                    model = classify.train(
                        classify.LabeledDataset(train_feats, np.repeat(train_labels, g))
                    )
                    group_labels = classify.predict_batch(model, test_feats).reshape(-1, g)
                    hits = 0
                    for j, key in enumerate(test_keys):
                        deficits = schemes.antenna_deficits(
                            captures[key], config.mi_mode, pilot_ref
                        )
                        group_deficits = [float(np.mean(deficits[rows])) for rows in groups]
                        omega = schemes.miws_weights(group_deficits).omega
                        vote = schemes.weighted_vote(list(group_labels[j]), omega)
                        hits += vote.label == test_labels[j]
                    scheme_acc["GDFWS"] = hits / len(test_keys)

            for scheme, acc in scheme_acc.items():
                records.append({
                    "scheme": scheme,
                    "feature": config.feature,
                    "snr_db": snr,
                    "n_antennas": n,
                    "group_size": config.group_size if scheme == "GDFWS" else "",
                    "chi": config.chi_summary(),
                    "trial": trial,
                    "seed": config.seed,
                    "accuracy": float(acc),
                })
    return records


def _trial_worker(args):
    config, trial = args
    return _trial_records(config, trial)


def _record_sort_key(rec):
    return (
        rec["scheme"], rec["feature"], float(rec["snr_db"]),
        int(rec["n_antennas"]), str(rec["group_size"]), rec["chi"], int(rec["trial"]),
    )


def run_experiment(
    config: ExperimentConfig,
    workers: int = 1,
    schemes_override=None,
    feature_override=None,
    trials_override=None,
) -> list:
    """Run all trials of a sweep and return canonically ordered records.

    Trials are independent work units; with workers > 1 they execute in a
    process pool.  The record order and content are independent of the
    worker count.
    """
    if schemes_override:
        config = replace(config, schemes=tuple(schemes_override))
    if feature_override:
        config = replace(config, feature=feature_override)
    if trials_override:
        config = replace(config, trials=int(trials_override))

    jobs = [(config, trial) for trial in range(config.trials)]
    if workers > 1 and config.trials > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(_trial_worker, jobs))
    else:
        chunks = [_trial_worker(job) for job in jobs]
    records = [rec for chunk in chunks for rec in chunk]
    records.sort(key=_record_sort_key)
    return records


def format_record(rec) -> str:
    return ",".join([
        rec["scheme"], rec["feature"], str(float(rec["snr_db"])),
        str(int(rec["n_antennas"])), str(rec["group_size"]), rec["chi"],
        str(int(rec["trial"])), str(int(rec["seed"])), repr(float(rec["accuracy"])),
    ])


def write_records_csv(records, path) -> None:
    lines = [RESULTS_HEADER] + [format_record(r) for r in records]
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def mean_accuracy(records, **filters) -> float:
    """Mean accuracy over records matching the given column values.

    The scheme filter accepts a prefix match for the per-antenna expansion
    (scheme="ORS" matches ORS1, ORS2, ...).
    """
    chosen = []
    for rec in records:
        ok = True
        for key, want in filters.items():
            have = rec[key]
            if key == "scheme":
                if not (have == want or (want == "ORS" and str(have).startswith("ORS"))):
                    ok = False
                    break
            elif isinstance(want, float):
                if float(have) != want:
                    ok = False
                    break
            elif have != want:
                ok = False
                break
        if ok:
            chosen.append(float(rec["accuracy"]))
    if not chosen:
        raise ValueError(f"no records match {filters}")
    return float(np.mean(chosen))


# ---------------------------------------------------------------------------
# dataset generation


def _f17(x: float) -> str:
    return format(float(x), ".17g")


def _complex_json(z: complex) -> str:
    return f"[{_f17(z.real)},{_f17(z.imag)}]"


def _capture_json_line(capture: AntennaCapture, emitter_id: str, snr_db: float,
                       include_truth: bool) -> str:
    samples = ",".join(
        "[" + ",".join(_complex_json(z) for z in row) + "]" for row in capture.y
    )
    parts = [
        f'"emitter_id":{json.dumps(emitter_id)}',
        f'"frame_index":{capture.frame_index}',
        f'"snr_db":{_f17(snr_db)}',
        f'"n_antennas":{capture.n_antennas}',
        f'"samples":[{samples}]',
    ]
    if include_truth and capture.truth is not None:
        t = capture.truth
        truth = (
            '{"h":[' + ",".join(_complex_json(z) for z in t.h) + "],"
            + '"theta":[' + ",".join(_f17(v) for v in t.theta) + "],"
            + '"x_hat":[' + ",".join(_complex_json(z) for z in t.x_hat) + "],"
            + f'"sigma_w2":{_f17(t.sigma_w2)},'
            + '"quant_step":' + ("null" if t.quant_step is None else _f17(t.quant_step))
            + "}"
        )
        parts.append(f'"truth":{truth}')
    return "{" + ",".join(parts) + "}"


def read_capture_file(path) -> list:
    """Parse a JSON-lines capture file back into AntennaCapture objects."""
    from .frontend import CaptureTruth

    captures = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            rec = json.loads(line)
            y = np.array([[complex(re, im) for re, im in row] for row in rec["samples"]])
            truth = None
            if "truth" in rec:
                t = rec["truth"]
                truth = CaptureTruth(
                    h=np.array([complex(re, im) for re, im in t["h"]]),
                    theta=np.array(t["theta"], dtype=float),
                    x_hat=np.array([complex(re, im) for re, im in t["x_hat"]]),
                    sigma_w2=float(t["sigma_w2"]),
                    quant_step=None if t["quant_step"] is None else float(t["quant_step"]),
                )
            captures.append((rec["emitter_id"], AntennaCapture(
                y=y, frame_index=int(rec["frame_index"]), truth=truth,
            )))
    return captures


def gen_dataset(config: ExperimentConfig, out_dir, seed=None) -> dict:
    """Synthesize captures to JSON-lines files, one per (emitter, trial).

    Uses the first entries of snr_list and n_antennas.  Ground truth is
    stored only in oracle mode.  Returns the manifest, which is also written
    to manifest.json in out_dir.
    """
    if seed is not None:
        config = replace(config, seed=int(seed))
    os.makedirs(out_dir, exist_ok=True)
    profiles = resolve_profiles(config)
    snr = config.snr_list[0]
    n = config.n_antennas[0]
    include_truth = config.mi_mode == "oracle"

    files = []
    total = 0
    for trial in range(config.trials):
        waveforms = _frame_waveforms(config, profiles, trial)
        captures = _captures(config, waveforms, trial, n, snr)
        slots = config.train_frames + config.test_frames
        for m, profile in enumerate(profiles):
            name = profile.name or f"emitter{m}"
            fname = f"captures_{name}_trial{trial:04d}.jsonl"
            lines = []
            for slot in range(slots):
                cap = captures[(m, slot)]
                lines.append(_capture_json_line(cap, name, snr, include_truth))
                total += 1
            with open(os.path.join(out_dir, fname), "w", encoding="utf-8", newline="\n") as fh:
                fh.write("\n".join(lines) + "\n")
            files.append(fname)

    manifest = {
        "seed": config.seed,
        "config_sha256": hashlib.sha256(canonical_config_text(config).encode()).hexdigest(),
        "snr_db": snr,
        "n_antennas": n,
        "records": total,
        "truth_included": include_truth,
        "files": files,
    }
    with open(os.path.join(out_dir, "manifest.json"), "w", encoding="utf-8", newline="\n") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return manifest
