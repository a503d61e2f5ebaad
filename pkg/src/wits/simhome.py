"""Synthetic smart-home generator with planted structure.

Feature rows for each activity span are sparse nonnegative combinations of
that class's planted atoms (plus Gaussian noise and optional person mixing),
so every learnable behavior has an exact ground truth. A companion raw
stream is produced through a fixed seeded linear lift of each feature row
into window frames; featurizing it preserves labels and class geometry, but
the 12 statistics are not invertible, so it does not reproduce the planted
coordinates. Scripted location/object events accompany the spans.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInputError
from .events import ContextEvent
from .mtdl import _canonical_signs
from .signal_pipeline import N_STATS, SignalStream

DEFAULT_ATOMS = 20
DEFAULT_SUBSPACE = 5


@dataclass
class ActivitySpan:
    label: str
    start_ms: int
    duration_ms: int
    context: list[dict] = field(default_factory=list)   # scripted (entity, attribute, value)

    def __post_init__(self):
        if self.duration_ms <= 0:
            raise InvalidInputError("span durations must be positive")


@dataclass
class ScenarioScript:
    seed: int
    activities: list[ActivitySpan]
    residents: int = 1
    channels: int = 4
    noise_sigma: float = 0.0
    snr_db: float | None = None          # overrides noise_sigma when set
    person_variation: float = 0.0        # orthogonal mixing strength in [0, 1]
    outlier_rate: float = 0.0
    window_ms: int = 10_000
    sample_period_ms: float = 500.0
    atoms: int = DEFAULT_ATOMS
    subspace: int = DEFAULT_SUBSPACE

    def __post_init__(self):
        if not self.activities:
            raise InvalidInputError("script needs at least one activity span")
        ordered = sorted(self.activities, key=lambda s: s.start_ms)
        for a, b in zip(ordered, ordered[1:]):
            if a.start_ms + a.duration_ms > b.start_ms:
                raise InvalidInputError(
                    f"activity spans overlap near t={b.start_ms}")
        if not 0.0 <= self.person_variation <= 1.0:
            raise InvalidInputError("person_variation must lie in [0, 1]")
        if not 0.0 <= self.outlier_rate <= 1.0:
            raise InvalidInputError("outlier_rate must lie in [0, 1]")
        if self.residents != 1:
            raise InvalidInputError("only single-resident scripts are supported")

    @property
    def label_names(self) -> list[str]:
        names = []
        for span in self.activities:
            if span.label not in names:
                names.append(span.label)
        return names

    @property
    def feature_dim(self) -> int:
        return N_STATS * self.channels

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "residents": self.residents,
            "channels": self.channels,
            "noise_sigma": self.noise_sigma,
            "snr_db": self.snr_db,
            "person_variation": self.person_variation,
            "outlier_rate": self.outlier_rate,
            "window_ms": self.window_ms,
            "sample_period_ms": self.sample_period_ms,
            "atoms": self.atoms,
            "subspace": self.subspace,
            "activities": [
                {"label": s.label, "start_ms": s.start_ms,
                 "duration_ms": s.duration_ms, "context": s.context}
                for s in self.activities
            ],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "ScenarioScript":
        try:
            spans = [ActivitySpan(label=a["label"], start_ms=int(a["start_ms"]),
                                  duration_ms=int(a["duration_ms"]),
                                  context=list(a.get("context", [])))
                     for a in doc["activities"]]
            return cls(
                seed=int(doc["seed"]),
                activities=spans,
                residents=int(doc.get("residents", 1)),
                channels=int(doc.get("channels", 4)),
                noise_sigma=float(doc.get("noise_sigma", 0.0)),
                snr_db=doc.get("snr_db"),
                person_variation=float(doc.get("person_variation", 0.0)),
                outlier_rate=float(doc.get("outlier_rate", 0.0)),
                window_ms=int(doc.get("window_ms", 10_000)),
                sample_period_ms=float(doc.get("sample_period_ms", 500.0)),
                atoms=int(doc.get("atoms", DEFAULT_ATOMS)),
                subspace=int(doc.get("subspace", DEFAULT_SUBSPACE)),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidInputError(f"bad scenario script: {exc}") from exc


def load_script(path) -> ScenarioScript:
    with open(path) as fh:
        return ScenarioScript.from_dict(json.load(fh))


def save_script(path, script: ScenarioScript) -> None:
    with open(path, "w") as fh:
        json.dump(script.to_dict(), fh, indent=2)
        fh.write("\n")


@dataclass
class PlantedModel:
    shared: np.ndarray              # d x sd, unit rows
    task_dicts: list[np.ndarray]    # per class, d x m, nonnegative unit rows
    projection: np.ndarray          # m x sd, orthonormal
    seed: int


def plant_model(seed: int, k: int, d: int, m: int, sd: int) -> PlantedModel:
    """Deterministic feasible ground-truth factors.

    Per-class atoms are nonnegative unit rows (samples built from them with
    positive codes keep cosine affinities nonnegative, as real sign-consistent
    channel stats do); the projection has orthonormal columns.
    """
    if sd >= m or d > m:
        raise InvalidInputError("need sd < m and d <= m")
    rng = np.random.default_rng(seed)
    shared = rng.uniform(-1.0, 1.0, size=(d, sd))
    shared /= np.linalg.norm(shared, axis=1, keepdims=True)
    task_dicts = []
    for _ in range(k):
        atoms = np.abs(rng.normal(size=(d, m))) ** 2   # squaring sharpens contrast
        atoms /= np.linalg.norm(atoms, axis=1, keepdims=True)
        task_dicts.append(atoms)
    projection = _canonical_signs(np.linalg.qr(rng.normal(size=(m, sd)))[0])
    return PlantedModel(shared, task_dicts, projection, seed)


@dataclass
class SimOutput:
    stream: SignalStream
    features: np.ndarray            # one row per generated segment
    spans: list[tuple[int, int]]
    label_ids: list[int]            # 1-based, aligned with rows
    label_names: list[str]          # per class
    outliers: list[bool]
    events: list[ContextEvent]
    planted: PlantedModel
    script: ScenarioScript


def _lift_matrix(rng, m: int, frames: int, channels: int) -> np.ndarray:
    return rng.normal(scale=1.0 / np.sqrt(m), size=(m, frames * channels))


def generate(script: ScenarioScript, planted: PlantedModel | None = None) -> SimOutput:
    """Produce a labeled synthetic run from a script.

    Per window inside each activity span: codes with support <= atoms/4 and
    positive weights (a log-uniform per-window scale spreads sample energy),
    times the class's planted atoms, plus Gaussian feature noise. Outliers
    get an extra perturbation at 10x the noise energy. The raw stream lifts
    each feature row linearly into the window's frames.
    """
    names = script.label_names
    m = script.feature_dim
    if planted is None:
        planted = plant_model(script.seed, len(names), script.atoms, m, script.subspace)
    if len(planted.task_dicts) < len(names):
        raise InvalidInputError("planted model has fewer classes than the script")
    if planted.task_dicts[0].shape[1] != m:
        raise InvalidInputError(
            f"planted model is {planted.task_dicts[0].shape[1]}-dimensional, "
            f"script implies m={m}")

    rng = np.random.default_rng(script.seed)
    frames_per_window = int(script.window_ms // script.sample_period_ms)
    lift = _lift_matrix(np.random.default_rng(planted.seed), m,
                        frames_per_window, script.channels)

    d = planted.task_dicts[0].shape[0]
    support = max(1, d // 4)

    rows, spans, label_ids, clean_rows = [], [], [], []
    for span in sorted(script.activities, key=lambda s: s.start_ms):
        class_id = names.index(span.label) + 1
        atoms = planted.task_dicts[class_id - 1]
        n_windows = int(span.duration_ms // script.window_ms)
        for w in range(n_windows):
            start = span.start_ms + w * script.window_ms
            idx = rng.choice(d, size=support, replace=False)
            code = np.zeros(d)
            code[idx] = rng.uniform(0.5, 1.5, size=support)
            code *= np.exp(rng.uniform(np.log(0.5), np.log(2.0)))  # energy spread
            row = code @ atoms
            rows.append(row)
            clean_rows.append(row)
            spans.append((int(start), int(start + script.window_ms)))
            label_ids.append(class_id)

    if not rows:
        raise InvalidInputError("script spans are all shorter than one window")
    features = np.vstack(rows)
    signal_power = float(np.mean(features**2))

    sigma = script.noise_sigma
    if script.snr_db is not None:
        sigma = float(np.sqrt(signal_power / 10.0 ** (script.snr_db / 10.0)))
    if sigma > 0:
        features = features + rng.normal(scale=sigma, size=features.shape)

    outliers = [False] * len(features)
    if script.outlier_rate > 0:
        burst_sigma = (sigma if sigma > 0 else 0.1 * np.sqrt(signal_power)) * np.sqrt(10.0)
        for i in range(len(features)):
            if rng.random() < script.outlier_rate:
                outliers[i] = True
                features[i] = features[i] + rng.normal(scale=burst_sigma, size=m)

    if script.person_variation > 0:
        v = script.person_variation
        mix = _canonical_signs(np.linalg.qr(rng.normal(size=(m, m)))[0])
        features = features @ ((1.0 - v) * np.eye(m) + v * mix)

    # raw stream: per window, frames are a fixed linear image of the feature row
    timestamps, frames = [], []
    for (start, _end), row in zip(spans, features):
        window_frames = (row @ lift).reshape(frames_per_window, script.channels)
        for j in range(frames_per_window):
            timestamps.append(int(start + j * script.sample_period_ms))
            frames.append(window_frames[j])
    stream = SignalStream(
        channels=[f"ch{j:02d}" for j in range(script.channels)],
        timestamps_ms=np.array(timestamps, dtype=np.int64),
        values=np.vstack(frames),
        sample_period_ms=script.sample_period_ms,
    )

    events = _script_events(script, names)
    return SimOutput(stream=stream, features=features, spans=spans,
                     label_ids=label_ids, label_names=names, outliers=outliers,
                     events=events, planted=planted, script=script)


def _script_events(script: ScenarioScript, names: list[str]) -> list[ContextEvent]:
    raw: list[tuple[int, int, ContextEvent]] = []
    seq = 0
    for span in sorted(script.activities, key=lambda s: s.start_ms):
        start, end = span.start_ms, span.start_ms + span.duration_ms
        raw.append((start, seq, ContextEvent(start, "activity", "Activity",
                                             span.label, True)))
        seq += 1
        for ctx in span.context:
            kind = ctx.get("kind", "location")
            value = ctx.get("value", True)
            raw.append((start, seq, ContextEvent(start, kind, ctx["entity"],
                                                 ctx["attribute"], value)))
            seq += 1
            if isinstance(value, bool):
                raw.append((end, seq, ContextEvent(end, kind, ctx["entity"],
                                                   ctx["attribute"], not value)))
                seq += 1
        raw.append((end, seq, ContextEvent(end, "activity", "Activity",
                                           span.label, False)))
        seq += 1
    raw.sort(key=lambda t: (t[0], t[1]))
    return [e for _, _, e in raw]


# ---------------------------------------------------------------------------
# Benchmark scripts
# ---------------------------------------------------------------------------

BASIC_ACTIVITIES = ["Sitting", "Standing", "Lying", "Walking",
                    "ArmMovement", "Kicking", "Crouching", "Falling"]


def block_script(seed: int, labels: list[str], windows_per_class: int,
                 channels: int = 4, window_ms: int = 10_000, **kwargs) -> ScenarioScript:
    """One contiguous span per class, ``windows_per_class`` windows each."""
    spans = []
    cursor = 0
    for label in labels:
        duration = windows_per_class * window_ms
        spans.append(ActivitySpan(label=label, start_ms=cursor, duration_ms=duration))
        cursor += duration
    return ScenarioScript(seed=seed, activities=spans, channels=channels,
                          window_ms=window_ms, **kwargs)


def benchmark_pair(seed: int, k: int = 5, train_windows: int = 200,
                   test_windows: int = 100, channels: int = 4,
                   snr_db: float = 20.0, person_variation: float = 0.3,
                   outlier_rate: float = 0.0, atoms: int = DEFAULT_ATOMS,
                   subspace: int = DEFAULT_SUBSPACE):
    """Train/test runs from one planted model: the training person is the
    identity, the test person mixes features with the given strength."""
    labels = BASIC_ACTIVITIES[:k]
    common = dict(channels=channels, snr_db=snr_db, atoms=atoms, subspace=subspace)
    train_script = block_script(seed, labels, train_windows, **common)
    test_script = block_script(seed + 1, labels, test_windows,
                               person_variation=person_variation,
                               outlier_rate=outlier_rate, **common)
    planted = plant_model(seed, k, atoms, N_STATS * channels, subspace)
    return generate(train_script, planted), generate(test_script, planted)


# ---------------------------------------------------------------------------
# Label CSV (segment truth)
# ---------------------------------------------------------------------------

def write_labels_csv(path, spans, label_ids, label_names, outliers=None) -> None:
    import csv as _csv
    with open(path, "w", newline="") as fh:
        writer = _csv.writer(fh)
        writer.writerow(["start_ms", "end_ms", "label_id", "label_name", "outlier"])
        flags = outliers if outliers is not None else [False] * len(spans)
        for (s, e), lid, flag in zip(spans, label_ids, flags):
            writer.writerow([int(s), int(e), int(lid),
                             label_names[lid - 1], int(bool(flag))])


def load_labels_csv(path):
    """Returns (spans, label_ids, label_names, outlier_flags)."""
    import csv as _csv
    spans, ids, flags = [], [], []
    names: dict[int, str] = {}
    with open(path, newline="") as fh:
        reader = _csv.reader(fh)
        header = next(reader, None)
        if header is None or header[:4] != ["start_ms", "end_ms", "label_id", "label_name"]:
            raise InvalidInputError(
                f"{path}: expected header start_ms,end_ms,label_id,label_name[,outlier]")
        for row in reader:
            if not row:
                continue
            spans.append((int(row[0]), int(row[1])))
            lid = int(row[2])
            ids.append(lid)
            names[lid] = row[3]
            flags.append(bool(int(row[4])) if len(row) > 4 else False)
    if not ids:
        raise InvalidInputError(f"{path}: no rows")
    label_names = [names.get(k, f"class{k}") for k in range(1, max(names) + 1)]
    return spans, ids, label_names, flags
