"""Signal conditioning: trend/cycle smoothing, windowing, statistical features.

Raw multi-channel streams are smoothed per channel (only the slow-moving
growth component is kept), cut into fixed-length windows, and each window is
summarized by 12 statistics per channel. The resulting rows are the feature
matrices consumed by the learning stage.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solveh_banded

from .errors import InvalidInputError

STAT_NAMES = (
    "min", "max", "mean", "rms", "variance", "stddev",
    "kurtosis", "skewness", "entropy", "median",
    "zero_cross_rate", "mean_cross_rate",
)
N_STATS = len(STAT_NAMES)

DEFAULT_WINDOW_MS = 10_000
DEFAULT_SAMPLE_PERIOD_MS = 500.0
DEFAULT_LAMBDA = 100.0
DEFAULT_ENTROPY_BINS = 16


@dataclass
class SignalStream:
    """Multi-channel time series: one value per channel per frame."""

    channels: list[str]
    timestamps_ms: np.ndarray   # (T,) strictly increasing
    values: np.ndarray          # (T, len(channels))
    sample_period_ms: float

    def __post_init__(self):
        self.timestamps_ms = np.asarray(self.timestamps_ms, dtype=np.int64)
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 2 or self.values.shape[1] != len(self.channels):
            raise InvalidInputError(
                f"values must be (T, {len(self.channels)}), got {self.values.shape}")
        if self.values.shape[0] != self.timestamps_ms.shape[0]:
            raise InvalidInputError("timestamps and values disagree on frame count")
        if self.timestamps_ms.size > 1 and not np.all(np.diff(self.timestamps_ms) > 0):
            raise InvalidInputError("timestamps must be strictly increasing")
        if not self.sample_period_ms > 0:
            raise InvalidInputError("sample_period_ms must be positive")

    @property
    def n_frames(self) -> int:
        return int(self.timestamps_ms.size)


@dataclass
class TrendDecomposition:
    """Additive split of a series into growth (trend) and cyclical parts."""

    growth: np.ndarray
    cyclical: np.ndarray
    lam: float


@dataclass
class Segment:
    """One fixed-length window of smoothed frames."""

    start_ms: int
    end_ms: int
    window_ms: int
    frames: np.ndarray  # (n, n_channels)

    def __post_init__(self):
        if self.end_ms - self.start_ms != self.window_ms:
            raise InvalidInputError("segment span must equal its window")
        self.frames = np.asarray(self.frames, dtype=float)
        if self.frames.ndim != 2 or self.frames.shape[0] == 0:
            raise InvalidInputError("segment frames must be a nonempty 2-d array")


@dataclass
class FeatureVector:
    """Per-segment statistics, 12 per channel, channel blocks in channel order."""

    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)


def hp_filter(series, lam) -> TrendDecomposition:
    """Split ``series`` into growth + cyclical components.

    The growth component g minimizes

        sum_t (y_t - g_t)^2 + lam * sum_t ((g_{t+1}-g_t) - (g_t-g_{t-1}))^2,

    i.e. solves (I + lam*K'K) g = y with K the second-difference operator.
    Solved here through the dual system (I + lam*K K') z = K y, so that
    cyclical = lam * K'z vanishes identically for affine inputs.
    """
    y = np.asarray(series, dtype=float)
    if y.ndim != 1:
        raise InvalidInputError(f"series must be 1-d, got shape {y.shape}")
    if y.size < 3:
        raise InvalidInputError(f"series must have length >= 3, got {y.size}")
    if not np.all(np.isfinite(y)):
        raise InvalidInputError("series contains NaN/Inf")
    lam = float(lam)
    if not np.isfinite(lam) or lam < 0:
        raise InvalidInputError(f"lambda must be a finite nonnegative real, got {lam}")

    if lam == 0.0:
        return TrendDecomposition(y.copy(), np.zeros_like(y), 0.0)

    curv = np.diff(y, 2)                       # K y, length T-2
    n = curv.size
    # K K' is pentadiagonal with stencil [1, -4, 6, -4, 1] (rows of K never truncate)
    ab = np.zeros((3, n))
    ab[0, 2:] = lam
    ab[1, 1:] = -4.0 * lam
    ab[2, :] = 1.0 + 6.0 * lam
    z = solveh_banded(ab, curv, lower=False)
    cyclical = lam * np.convolve(z, [1.0, -2.0, 1.0])   # lam * K'z, length T
    return TrendDecomposition(y - cyclical, cyclical, lam)


def split_runs(stream: SignalStream, max_gap_factor: float = 2.0) -> list[SignalStream]:
    """Split a stream at gaps larger than ``max_gap_factor`` sample periods."""
    if stream.n_frames == 0:
        return []
    gaps = np.diff(stream.timestamps_ms)
    breaks = np.nonzero(gaps > max_gap_factor * stream.sample_period_ms)[0]
    if breaks.size == 0:
        return [stream]
    pieces = []
    start = 0
    for b in list(breaks + 1) + [stream.n_frames]:
        pieces.append(SignalStream(
            channels=stream.channels,
            timestamps_ms=stream.timestamps_ms[start:b],
            values=stream.values[start:b],
            sample_period_ms=stream.sample_period_ms,
        ))
        start = b
    return pieces


def segment(stream: SignalStream, window_ms: int = DEFAULT_WINDOW_MS,
            stride_ms: int | None = None) -> list[Segment]:
    """Cut a stream into consecutive fixed-length windows.

    Windows hold ``floor(window / sample_period)`` frames each; a trailing
    partial window is discarded. ``stride_ms`` defaults to the window length
    (non-overlapping). Gaps wider than two sample periods split the stream
    first, so no window straddles missing data.
    """
    if window_ms < 2 * stream.sample_period_ms:
        raise InvalidInputError(
            f"window ({window_ms} ms) must cover at least two samples "
            f"(period {stream.sample_period_ms} ms)")
    if stride_ms is None:
        stride_ms = window_ms
    if stride_ms <= 0:
        raise InvalidInputError("stride must be positive")

    per_window = int(window_ms // stream.sample_period_ms)
    hop = max(1, int(stride_ms // stream.sample_period_ms))
    out = []
    for run in split_runs(stream):
        ts = run.timestamps_ms
        for start in range(0, run.n_frames - per_window + 1, hop):
            t0 = int(ts[start])
            out.append(Segment(
                start_ms=t0,
                end_ms=t0 + int(window_ms),
                window_ms=int(window_ms),
                frames=run.values[start:start + per_window],
            ))
    return out


def _channel_stats(x: np.ndarray, entropy_bins: int) -> list[float]:
    n = x.size
    mn = float(np.min(x))
    mx = float(np.max(x))
    mean = float(np.mean(x))
    rms = float(np.sqrt(np.mean(x * x)))
    median = float(np.median(x))
    zcr = float(np.sum(x[:-1] * x[1:] < 0))
    if mn == mx:
        # constant channel: moments and entropy are zero by convention
        centered = None
        var = std = kurt = skew = entropy = 0.0
    else:
        centered = x - mean
        var = float(np.mean(centered**2))
        std = float(np.sqrt(var))
        kurt = float(np.mean(centered**4) / var**2 - 3.0)
        skew = float(np.mean(centered**3) / std**3)
        counts, _ = np.histogram(x, bins=entropy_bins, range=(mn, mx))
        p = counts[counts > 0] / n
        entropy = float(-np.sum(p * np.log(p)))
    if centered is None:
        mcr = 0.0
    else:
        mcr = float(np.sum(centered[:-1] * centered[1:] < 0))
    return [mn, mx, mean, rms, var, std, kurt, skew, entropy, median, zcr, mcr]


def extract_features(seg: Segment, entropy_bins: int = DEFAULT_ENTROPY_BINS) -> FeatureVector:
    """Compute the 12 per-channel statistics of a segment, in the fixed layout.

    Entropy uses a ``entropy_bins``-bin histogram over the channel's own
    [min, max] range with natural log; zero-cross counts sign changes of the
    values, mean-cross counts crossings of the channel mean.
    """
    if seg.frames.size == 0:
        raise InvalidInputError("cannot featurize an empty segment")
    blocks = [_channel_stats(seg.frames[:, j], entropy_bins)
              for j in range(seg.frames.shape[1])]
    return FeatureVector(np.concatenate(blocks))


def feature_names(channels: list[str]) -> list[str]:
    return [f"{ch}_{stat}" for ch in channels for stat in STAT_NAMES]


def featurize_stream(stream: SignalStream, lam: float = DEFAULT_LAMBDA,
                     window_ms: int = DEFAULT_WINDOW_MS,
                     stride_ms: int | None = None,
                     entropy_bins: int = DEFAULT_ENTROPY_BINS,
                     keep_cyclical: bool = False):
    """Smooth, window, and featurize a stream.

    Per contiguous run, each channel is trend-filtered and only the growth
    component is kept (``keep_cyclical=True`` retains the raw signal instead,
    for ablation). Returns ``(matrix, spans)`` where ``matrix`` has one row
    per segment and ``spans`` is the matching list of (start_ms, end_ms).
    """
    rows = []
    spans = []
    n_ch = len(stream.channels)
    for run in split_runs(stream):
        if run.n_frames < 3:
            continue
        if keep_cyclical:
            smoothed = run.values
        else:
            smoothed = np.column_stack(
                [hp_filter(run.values[:, j], lam).growth for j in range(n_ch)])
        smooth_run = SignalStream(run.channels, run.timestamps_ms, smoothed,
                                  run.sample_period_ms)
        for seg in segment(smooth_run, window_ms, stride_ms):
            rows.append(extract_features(seg, entropy_bins).values)
            spans.append((seg.start_ms, seg.end_ms))
    if rows:
        matrix = np.vstack(rows)
    else:
        matrix = np.zeros((0, N_STATS * n_ch))
    return matrix, spans


# ---------------------------------------------------------------------------
# File formats
# ---------------------------------------------------------------------------

def load_sensor_csv(path, sample_period_ms: float | None = None) -> SignalStream:
    """Read a long-format sensor CSV (``timestamp_ms,channel_id,value``).

    Rows must be sorted by timestamp; channels may interleave freely within a
    timestamp. Every timestamp must carry a value for every channel. Channel
    order in the stream is lexicographic. The sample period is inferred as the
    median timestamp delta unless given.
    """
    by_ts: dict[int, dict[str, float]] = {}
    order: list[int] = []
    channels: set[str] = set()
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header[:3]] != ["timestamp_ms", "channel_id", "value"]:
            raise InvalidInputError(f"{path}: expected header timestamp_ms,channel_id,value")
        prev_ts = None
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                ts = int(row[0])
                ch = row[1]
                val = float(row[2])
            except (ValueError, IndexError) as exc:
                raise InvalidInputError(f"{path}:{lineno}: malformed row {row!r}") from exc
            if prev_ts is not None and ts < prev_ts:
                raise InvalidInputError(f"{path}:{lineno}: timestamps not sorted")
            prev_ts = ts
            if ts not in by_ts:
                by_ts[ts] = {}
                order.append(ts)
            by_ts[ts][ch] = val
            channels.add(ch)
    if not order:
        raise InvalidInputError(f"{path}: no data rows")
    ch_list = sorted(channels)
    values = np.empty((len(order), len(ch_list)))
    for i, ts in enumerate(order):
        frame = by_ts[ts]
        if len(frame) != len(ch_list):
            missing = sorted(set(ch_list) - set(frame))
            raise InvalidInputError(f"{path}: timestamp {ts} missing channels {missing}")
        values[i] = [frame[ch] for ch in ch_list]
    ts_arr = np.array(order, dtype=np.int64)
    if sample_period_ms is None:
        sample_period_ms = float(np.median(np.diff(ts_arr))) if len(order) > 1 else DEFAULT_SAMPLE_PERIOD_MS
    return SignalStream(ch_list, ts_arr, values, sample_period_ms)


def write_sensor_csv(path, stream: SignalStream) -> None:
    """Write a stream in the long sensor format, channels interleaved per frame."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["timestamp_ms", "channel_id", "value"])
        for i in range(stream.n_frames):
            ts = int(stream.timestamps_ms[i])
            for j, ch in enumerate(stream.channels):
                writer.writerow([ts, ch, repr(float(stream.values[i, j]))])


def write_features_csv(path, matrix: np.ndarray, spans, channels: list[str]) -> None:
    matrix = np.asarray(matrix, dtype=float)
    names = feature_names(channels)
    if matrix.shape[1] != len(names):
        raise InvalidInputError(
            f"feature matrix has {matrix.shape[1]} columns, channel list implies {len(names)}")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["start_ms", "end_ms", *names])
        for (s, e), row in zip(spans, matrix):
            writer.writerow([int(s), int(e), *[repr(float(v)) for v in row]])


def load_features_csv(path):
    """Read a feature CSV; returns (matrix, spans, channels)."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or header[:2] != ["start_ms", "end_ms"]:
            raise InvalidInputError(f"{path}: expected header start_ms,end_ms,<channel>_<stat>...")
        names = header[2:]
        channels = []
        for i, name in enumerate(names):
            expected_stat = STAT_NAMES[i % N_STATS]
            if not name.endswith("_" + expected_stat):
                raise InvalidInputError(f"{path}: column {name!r} out of layout order")
            ch = name[: -len(expected_stat) - 1]
            if i % N_STATS == 0:
                channels.append(ch)
            elif channels[-1] != ch:
                raise InvalidInputError(f"{path}: channel block mixes {channels[-1]!r} and {ch!r}")
        rows, spans = [], []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 2 + len(names):
                raise InvalidInputError(f"{path}:{lineno}: expected {2 + len(names)} cells")
            spans.append((int(row[0]), int(row[1])))
            rows.append([float(v) for v in row[2:]])
    matrix = np.array(rows, dtype=float) if rows else np.zeros((0, len(names)))
    return matrix, spans, channels
