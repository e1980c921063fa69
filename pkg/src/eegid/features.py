"""Per-channel window features: seven time-domain statistics plus three
spectral features from a Hann periodogram, assembled channel-major into one
vector per window (8 channels x 10 features = 80 dimensions).

Feature order within a channel is a frozen public contract:

    index  name       quantity
    -----  ---------  ------------------------------------------
    0      rms        root mean square
    1      std        population standard deviation
    2      skew       m3 / m2^(3/2), biased central moments
    3      kurt       m4 / m2^2 (non-excess; Gaussian ~ 3)
    4      hj_act     Hjorth activity (variance)
    5      hj_mob     Hjorth mobility
    6      hj_comp    Hjorth complexity
    7      shan_ent   Shannon entropy, 16 equal-width bins, nat log
    8      spec_ent   spectral entropy of the periodogram, in [0, 1]
    9      band_pow   total band power, 0.1-100 Hz

so a flat vector indexes as channel*10 + feature_id. Degenerate (flat)
inputs return defined constants instead of NaN: skew 0, kurt 3, Hjorth
(0, 0, 0), entropies 0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dsp import Window
from .errors import (
    EegIdError,
    EmptyBand,
    EmptyInput,
    InvalidArgument,
    TooFewSamples,
)

FEATURE_NAMES = (
    "rms", "std", "skew", "kurt", "hj_act",
    "hj_mob", "hj_comp", "shan_ent", "spec_ent", "band_pow",
)
N_FEATURES = len(FEATURE_NAMES)

ENTROPY_BINS = 16
BAND_LO = 0.1
BAND_HI = 100.0

# variance below this fraction of max|x|^2 counts as a flat window
_FLAT_EPS = 1e-24


@dataclass(frozen=True)
class FeatureVector:
    """Channel-major feature values for one window, with its label."""

    values: np.ndarray
    subject_id: int
    start_index: int = 0

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", v)
        if v.ndim != 1 or v.size == 0 or v.size % N_FEATURES != 0:
            raise InvalidArgument(
                f"feature vector length must be a multiple of {N_FEATURES}"
            )
        if not np.isfinite(v).all():
            raise InvalidArgument("feature vector contains NaN/Inf")


@dataclass(frozen=True)
class PsdEstimate:
    """One-sided power spectral density: power[i] at frequencies[i], uV^2/Hz."""

    frequencies: np.ndarray
    power: np.ndarray

    def __post_init__(self):
        f = np.asarray(self.frequencies, dtype=float)
        p = np.asarray(self.power, dtype=float)
        object.__setattr__(self, "frequencies", f)
        object.__setattr__(self, "power", p)
        if f.shape != p.shape or f.ndim != 1:
            raise InvalidArgument("frequencies and power must be matching 1-D arrays")
        if np.any(np.diff(f) <= 0):
            raise InvalidArgument("frequencies must be strictly increasing")
        if np.any(p < 0):
            raise InvalidArgument("power must be nonnegative")


def _as_samples(x, min_len: int, what: str) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise InvalidArgument(f"{what} expects a 1-D sample sequence")
    if x.size == 0:
        raise EmptyInput(f"{what}: empty input")
    if x.size < min_len:
        raise TooFewSamples(f"{what}: need >= {min_len} samples, got {x.size}")
    return x


def _is_flat(m2: float, x: np.ndarray) -> bool:
    peak = np.max(np.abs(x))
    return m2 <= _FLAT_EPS * peak * peak


def rms(x) -> float:
    """Root mean square, sqrt(mean(x^2))."""
    x = _as_samples(x, 1, "rms")
    return float(np.sqrt(np.mean(x * x)))


def std_dev(x) -> float:
    """Population standard deviation (divide by n)."""
    x = _as_samples(x, 2, "std_dev")
    return float(np.std(x))


def skewness(x) -> float:
    """m3 / m2^(3/2) with biased central moments; 0 for flat input."""
    x = _as_samples(x, 3, "skewness")
    d = x - x.mean()
    m2 = np.mean(d * d)
    if _is_flat(m2, x):
        return 0.0
    return float(np.mean(d ** 3) / m2 ** 1.5)


def kurtosis(x) -> float:
    """m4 / m2^2, non-excess (Gaussian ~ 3); 3 for flat input."""
    x = _as_samples(x, 4, "kurtosis")
    d = x - x.mean()
    m2 = np.mean(d * d)
    if _is_flat(m2, x):
        return 3.0
    return float(np.mean(d ** 4) / (m2 * m2))


def hjorth(x) -> tuple[float, float, float]:
    """Hjorth (activity, mobility, complexity) with population variances.

    activity = var(x); mobility = sqrt(var(dx)/var(x)); complexity =
    mobility(dx)/mobility(x), dx the first difference. Flat input gives
    (0, 0, 0); a flat derivative gives (activity, 0, 0).
    """
    x = _as_samples(x, 3, "hjorth")
    var_x = np.var(x)
    if _is_flat(var_x, x):
        return 0.0, 0.0, 0.0
    dx = np.diff(x)
    var_dx = np.var(dx)
    if _is_flat(var_dx, dx):
        return float(var_x), 0.0, 0.0
    var_ddx = np.var(np.diff(dx))
    mobility = np.sqrt(var_dx / var_x)
    complexity = np.sqrt(var_ddx / var_dx) / mobility
    return float(var_x), float(mobility), float(complexity)


def shannon_entropy(x, bins: int = ENTROPY_BINS) -> float:
    """Histogram entropy over [min, max] with equal-width bins, natural log."""
    x = _as_samples(x, 2, "shannon_entropy")
    if bins < 1:
        raise InvalidArgument(f"bins must be >= 1, got {bins}")
    lo, hi = float(np.min(x)), float(np.max(x))
    if lo == hi:
        return 0.0
    counts, _ = np.histogram(x, bins=bins, range=(lo, hi))
    p = counts[counts > 0] / x.size
    return float(-np.sum(p * np.log(p)))


def periodogram(x, fs: float) -> PsdEstimate:
    """Hann-windowed single-segment periodogram, one-sided density.

    Mean-removed input is tapered by a Hann window; the magnitude-squared
    DFT is scaled by 1/(fs * sum(w^2)) and interior bins are doubled, so
    that sum(power) * df equals sum((x_detrended * w)^2) / sum(w^2).
    """
    x = _as_samples(x, 8, "periodogram")
    if fs <= 0:
        raise InvalidArgument(f"fs must be > 0, got {fs}")
    n = x.size
    w = np.hanning(n)
    yw = (x - x.mean()) * w
    power = np.abs(np.fft.rfft(yw)) ** 2 / (fs * np.sum(w * w))
    if n % 2 == 0:
        power[1:-1] *= 2.0  # all but DC and Nyquist
    else:
        power[1:] *= 2.0  # no Nyquist bin
    return PsdEstimate(frequencies=np.fft.rfftfreq(n, d=1.0 / fs), power=power)


def spectral_entropy(p: PsdEstimate) -> float:
    """Normalized entropy of the PSD as a distribution, in [0, 1]."""
    power = p.power
    if power.size < 2:
        raise TooFewSamples("spectral_entropy: need >= 2 bins")
    total = power.sum()
    if total <= 0:
        return 0.0
    q = power / total
    q = q[q > 0]
    return float(-np.sum(q * np.log(q)) / np.log(power.size))


def band_power(p: PsdEstimate, f_lo: float = BAND_LO, f_hi: float = BAND_HI) -> float:
    """Trapezoidal integral of the PSD over f_lo <= f <= f_hi (uV^2)."""
    if not f_lo < f_hi:
        raise InvalidArgument(f"need f_lo < f_hi, got ({f_lo}, {f_hi})")
    mask = (p.frequencies >= f_lo) & (p.frequencies <= f_hi)
    if not mask.any():
        raise EmptyBand(f"no PSD bins inside [{f_lo}, {f_hi}] Hz")
    return float(np.trapezoid(p.power[mask], p.frequencies[mask]))


def channel_features(x, fs: float) -> np.ndarray:
    """The 10 features of one channel's samples, in FEATURE_NAMES order."""
    x = np.asarray(x, dtype=float)
    act, mob, comp = hjorth(x)
    psd = periodogram(x, fs)
    return np.array([
        rms(x),
        std_dev(x),
        skewness(x),
        kurtosis(x),
        act,
        mob,
        comp,
        shannon_entropy(x),
        spectral_entropy(psd),
        band_power(psd),
    ])


def extract_feature_vector(w: Window) -> FeatureVector:
    """All channels' features, channel-major, labeled with the window's subject."""
    blocks = []
    for i, ch in enumerate(w.data):
        try:
            blocks.append(channel_features(ch, w.fs))
        except EegIdError as e:
            raise type(e)(f"channel {i}: {e}") from e
    return FeatureVector(
        values=np.concatenate(blocks),
        subject_id=w.subject_id,
        start_index=w.start_index,
    )


def extract_feature_matrix(windows) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Stack window features: (X: n x 80, labels: n, start indices: n)."""
    vectors = [extract_feature_vector(w) for w in windows]
    if not vectors:
        raise EmptyInput("no windows to extract features from")
    X = np.vstack([v.values for v in vectors])
    y = np.array([v.subject_id for v in vectors], dtype=int)
    starts = np.array([v.start_index for v in vectors], dtype=int)
    return X, y, starts


def feature_column_names(n_channels: int) -> list[str]:
    """Frozen CSV column names: c<ch>_<feat>, channel-major."""
    return [f"c{c}_{name}" for c in range(n_channels) for name in FEATURE_NAMES]


def save_feature_table(path, X, labels, starts, meta: dict | None = None) -> None:
    """Write a feature matrix as CSV: subject_id, start_index, then one
    column per feature (exact decimal text, so loading is lossless).

    Optional metadata (e.g. the preprocessing settings that produced the
    windows) goes into leading ``# key=value`` comment lines.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    labels = np.asarray(labels, dtype=int)
    starts = np.asarray(starts, dtype=int)
    if X.shape[1] % N_FEATURES != 0:
        raise InvalidArgument(
            f"feature count {X.shape[1]} is not a multiple of {N_FEATURES}"
        )
    if not (X.shape[0] == labels.shape[0] == starts.shape[0]):
        raise InvalidArgument("X, labels, and starts must have matching rows")
    names = feature_column_names(X.shape[1] // N_FEATURES)
    with open(path, "w") as fh:
        for key, value in (meta or {}).items():
            fh.write(f"# {key}={value}\n")
        fh.write("subject_id,start_index," + ",".join(names) + "\n")
        for sid, start, row in zip(labels, starts, X):
            values = ",".join(repr(float(v)) for v in row)
            fh.write(f"{sid},{start},{values}\n")


def load_feature_table(path):
    """Load a CSV written by save_feature_table.

    Returns (X, labels, starts, meta). Raises MissingFile, MalformedHeader,
    NonNumericSample, or RaggedRows on damaged input.
    """
    from pathlib import Path

    from .errors import MalformedHeader, MissingFile, NonNumericSample, RaggedRows

    path = Path(path)
    if not path.is_file():
        raise MissingFile(f"no such feature table: {path}")
    meta: dict[str, str] = {}
    with open(path) as fh:
        lines = [ln.rstrip("\n") for ln in fh]
    pos = 0
    while pos < len(lines) and lines[pos].startswith("#"):
        body = lines[pos][1:].strip()
        if "=" in body:
            key, _, value = body.partition("=")
            meta[key.strip()] = value.strip()
        pos += 1
    if pos >= len(lines):
        raise MalformedHeader("feature table has no header row")
    header = lines[pos].split(",")
    if header[:2] != ["subject_id", "start_index"]:
        raise MalformedHeader(
            "feature table must start with subject_id,start_index columns"
        )
    n_cols = len(header)
    if (n_cols - 2) % N_FEATURES != 0 or n_cols <= 2:
        raise MalformedHeader(f"unexpected feature column count {n_cols - 2}")
    if header[2:] != feature_column_names((n_cols - 2) // N_FEATURES):
        raise MalformedHeader("feature columns do not match the frozen order")
    labels, starts, rows = [], [], []
    for r, line in enumerate(lines[pos + 1:], start=1):
        if not line:
            continue
        cells = line.split(",")
        if len(cells) != n_cols:
            raise RaggedRows(f"row {r} has {len(cells)} cells, expected {n_cols}")
        try:
            labels.append(int(cells[0]))
            starts.append(int(cells[1]))
        except ValueError:
            raise NonNumericSample(r, 0, cells[0]) from None
        try:
            rows.append([float(tok) for tok in cells[2:]])
        except ValueError:
            bad = next(i for i, tok in enumerate(cells[2:])
                       if not _is_float(tok))
            raise NonNumericSample(r, bad + 2, cells[bad + 2]) from None
    if not rows:
        raise MalformedHeader("feature table has no data rows")
    return (np.array(rows), np.array(labels, dtype=int),
            np.array(starts, dtype=int), meta)


def _is_float(tok: str) -> bool:
    try:
        float(tok)
        return True
    except ValueError:
        return False
