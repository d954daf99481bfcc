"""Realism metrics for daily profiles.

Shape indexes: near-peak / near-base load (97.5th / 2.5th percentile with the
single extreme sample excluded), high-load duration (longest run strictly
above the midpoint of near-peak and near-base), and rising duration/frequency
(base-band to high-load traversals). Durations are reported in hours at
0.25 h per sample.

Distribution similarity: symmetric pair of KL divergences over shared
equal-width histograms with additive smoothing.

Volatility: sum of absolute first differences (SAFOD), coefficient of
variation (CV, population std over mean), and SAFOD relative to the profile
maximum (RSAFODM).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .data import HOURS_PER_SAMPLE, Profile, ProfileDataset
from .errors import DataError

BASE_BAND_FRACTION = 0.05


def _values(profile) -> np.ndarray:
    if isinstance(profile, Profile):
        return profile.values
    return np.asarray(profile, dtype=np.float64)


def near_peak(profile) -> float:
    """97.5th percentile after removing one occurrence of the maximum."""
    v = _values(profile)
    if v.size < 3:
        raise DataError(f"profile too short for shape indexes: {v.size} samples")
    rest = np.delete(v, int(np.argmax(v)))
    return float(np.percentile(rest, 97.5))


def near_base(profile) -> float:
    """2.5th percentile after removing one occurrence of the minimum."""
    v = _values(profile)
    if v.size < 3:
        raise DataError(f"profile too short for shape indexes: {v.size} samples")
    rest = np.delete(v, int(np.argmin(v)))
    return float(np.percentile(rest, 2.5))


def high_load_threshold(profile) -> float:
    return 0.5 * (near_peak(profile) + near_base(profile))


def high_load_duration(profile) -> float:
    """Longest contiguous stretch strictly above the high-load threshold, in hours."""
    v = _values(profile)
    above = v > high_load_threshold(profile)
    longest = run = 0
    for flag in above:
        run = run + 1 if flag else 0
        longest = max(longest, run)
    return longest * HOURS_PER_SAMPLE


def rising_events(profile) -> list[tuple[int, int]]:
    """(start, reach) index pairs for base-band -> high-load traversals.

    An event starts at the last sample inside the base band (near-base plus
    5% of the peak-base spread) before the series first exceeds the
    high-load threshold; the series must return to the base band before
    another event can start.
    """
    v = _values(profile)
    pk, bs = near_peak(profile), near_base(profile)
    if pk == bs:
        return []
    band_hi = bs + BASE_BAND_FRACTION * (pk - bs)
    threshold = 0.5 * (pk + bs)
    events: list[tuple[int, int]] = []
    last_base: int | None = None
    for i, x in enumerate(v):
        if x <= band_hi:
            last_base = i
        elif x > threshold and last_base is not None:
            events.append((last_base, i))
            last_base = None
    return events


def rising_duration(profile) -> float:
    """Mean event length in hours; 0 when no event occurs."""
    events = rising_events(profile)
    if not events:
        return 0.0
    return float(np.mean([(reach - start) for start, reach in events])) * HOURS_PER_SAMPLE


def rising_frequency(profile) -> int:
    return len(rising_events(profile))


@dataclass(frozen=True)
class ShapeIndexReport:
    n_profiles: int
    near_peak_mean: float
    near_peak_std: float
    near_base_mean: float
    near_base_std: float
    high_load_mean: float
    high_load_std: float
    rising_duration_mean: float
    rising_frequency_mean: float

    def as_rows(self) -> list[tuple[str, float, float]]:
        return [
            ("near_peak", self.near_peak_mean, self.near_peak_std),
            ("near_base", self.near_base_mean, self.near_base_std),
            ("high_load_duration_h", self.high_load_mean, self.high_load_std),
            ("rising_duration_h", self.rising_duration_mean, float("nan")),
            ("rising_frequency", self.rising_frequency_mean, float("nan")),
        ]


def shape_report(ds: ProfileDataset | Sequence) -> ShapeIndexReport:
    """Aggregate the five indexes over a population (mean, population std)."""
    profiles = ds.profiles if isinstance(ds, ProfileDataset) else list(ds)
    if not profiles:
        raise DataError("cannot compute shape indexes of an empty dataset")
    peaks = np.array([near_peak(p) for p in profiles])
    bases = np.array([near_base(p) for p in profiles])
    highs = np.array([high_load_duration(p) for p in profiles])
    rdur = np.array([rising_duration(p) for p in profiles])
    rfreq = np.array([rising_frequency(p) for p in profiles], dtype=np.float64)
    return ShapeIndexReport(
        n_profiles=len(profiles),
        near_peak_mean=float(peaks.mean()),
        near_peak_std=float(peaks.std()),
        near_base_mean=float(bases.mean()),
        near_base_std=float(bases.std()),
        high_load_mean=float(highs.mean()),
        high_load_std=float(highs.std()),
        rising_duration_mean=float(rdur.mean()),
        rising_frequency_mean=float(rfreq.mean()),
    )


@dataclass(frozen=True)
class KLReport:
    d_pq: float
    d_qp: float
    bin_edges: np.ndarray
    smoothing: float
    p_density: np.ndarray
    q_density: np.ndarray


def kl_divergence(p_samples, q_samples, n_bins: int = 30, smoothing: float = 1e-10) -> KLReport:
    """Both KL directions over shared equal-width bins spanning the union range."""
    p = np.asarray(p_samples, dtype=np.float64).reshape(-1)
    q = np.asarray(q_samples, dtype=np.float64).reshape(-1)
    if p.size == 0 or q.size == 0:
        raise DataError("KL divergence needs non-empty sample sets")
    lo = min(p.min(), q.min())
    hi = max(p.max(), q.max())
    if hi == lo:
        raise DataError("degenerate sample range: all values identical, histogram would be a single bin")
    edges = np.linspace(lo, hi, n_bins + 1)
    hp, _ = np.histogram(p, bins=edges)
    hq, _ = np.histogram(q, bins=edges)
    pd = hp.astype(np.float64) + smoothing
    qd = hq.astype(np.float64) + smoothing
    pd /= pd.sum()
    qd /= qd.sum()
    d_pq = float(np.sum(pd * np.log(pd / qd)))
    d_qp = float(np.sum(qd * np.log(qd / pd)))
    return KLReport(d_pq=d_pq, d_qp=d_qp, bin_edges=edges, smoothing=smoothing,
                    p_density=pd, q_density=qd)


def mean_peak_samples(ds: ProfileDataset) -> tuple[np.ndarray, np.ndarray]:
    """Per-profile arithmetic mean and maximum."""
    vals = ds.values()
    if vals.shape[0] == 0:
        raise DataError("cannot compute mean/peak samples of an empty dataset")
    return vals.mean(axis=1), vals.max(axis=1)


def safod(profile) -> float:
    """Sum of absolute first-order differences."""
    v = _values(profile)
    return float(np.sum(np.abs(np.diff(v))))


def cv(profile) -> float:
    """Coefficient of variation: population std over mean."""
    v = _values(profile)
    mu = float(v.mean())
    if mu == 0.0:
        raise DataError("CV undefined: profile mean is zero")
    return float(v.std()) / mu


def rsafodm(profile) -> float:
    """SAFOD divided by the profile maximum."""
    v = _values(profile)
    mx = float(v.max())
    if mx == 0.0:
        raise DataError("RSAFODM undefined: profile maximum is zero")
    return safod(v) / mx


def spearman(x, y) -> float:
    """Spearman rank correlation (scipy)."""
    from scipy.stats import spearmanr

    rho = spearmanr(np.asarray(x, dtype=np.float64), np.asarray(y, dtype=np.float64)).statistic
    return float(rho)


DEFAULT_CODE_GRID = tuple(np.linspace(-2.0, 2.0, 8))


@dataclass(frozen=True)
class VolatilityRow:
    code: float
    safod: float
    cv: float
    rsafodm: float


@dataclass(frozen=True)
class VolatilityReport:
    rows: tuple[VolatilityRow, ...]

    def codes(self) -> np.ndarray:
        return np.array([r.code for r in self.rows])

    def trend(self) -> dict[str, float]:
        codes = self.codes()
        return {
            "safod": spearman(codes, [r.safod for r in self.rows]),
            "cv": spearman(codes, [r.cv for r in self.rows]),
            "rsafodm": spearman(codes, [r.rsafodm for r in self.rows]),
        }
