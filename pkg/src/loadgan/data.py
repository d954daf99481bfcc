"""Daily profile datasets: CSV ingestion, validation, min-max normalization."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import DataError

SAMPLES_PER_DAY = 96
HOURS_PER_SAMPLE = 0.25


@dataclass(frozen=True)
class Profile:
    """One daily series; the class tag is evaluation-only ground truth."""

    values: np.ndarray
    class_tag: int | None = None

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.float64)
        object.__setattr__(self, "values", vals)
        if vals.ndim != 1:
            raise DataError(f"profile must be 1-D, got shape {vals.shape}")
        if not np.all(np.isfinite(vals)):
            raise DataError("profile contains non-finite values")


@dataclass(frozen=True)
class NormStats:
    x_min: float
    x_max: float

    def __post_init__(self):
        if not (np.isfinite(self.x_min) and np.isfinite(self.x_max)):
            raise DataError("normalization stats must be finite")
        if self.x_max <= self.x_min:
            raise DataError(f"degenerate dataset: x_max ({self.x_max}) must exceed x_min ({self.x_min})")


@dataclass(frozen=True)
class ProfileDataset:
    profiles: tuple[Profile, ...]
    norm_stats: NormStats | None = None
    normalized: bool = False
    n_samples: int = SAMPLES_PER_DAY

    def __post_init__(self):
        object.__setattr__(self, "profiles", tuple(self.profiles))
        for i, p in enumerate(self.profiles):
            if len(p.values) != self.n_samples:
                raise DataError(
                    f"profile {i} has {len(p.values)} samples, expected {self.n_samples}"
                )

    def __len__(self) -> int:
        return len(self.profiles)

    def values(self) -> np.ndarray:
        """All profiles stacked as [n, n_samples] float64."""
        if not self.profiles:
            return np.empty((0, self.n_samples))
        return np.stack([p.values for p in self.profiles])

    def tags(self) -> np.ndarray | None:
        """Ground-truth tags, or None unless every profile carries one."""
        tags = [p.class_tag for p in self.profiles]
        if any(t is None for t in tags) or not tags:
            return None
        return np.asarray(tags, dtype=np.int64)


def load_csv(path: str | Path, n_samples: int = SAMPLES_PER_DAY) -> ProfileDataset:
    """Read a profile CSV: one row per profile, n_samples numeric columns,
    optional trailing integer label column, '#'-prefixed header lines ignored.
    """
    path = Path(path)
    if not path.exists():
        raise DataError(f"no such file: {path}")
    profiles: list[Profile] = []
    with open(path, "r", encoding="utf-8") as fh:
        row_idx = 0
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            row_idx += 1
            cells = [c.strip() for c in line.split(",")]
            if len(cells) not in (n_samples, n_samples + 1):
                raise DataError(
                    f"row {row_idx}: expected {n_samples} values"
                    f" (plus optional label), got {len(cells)}"
                )
            try:
                values = np.array([float(c) for c in cells[:n_samples]])
            except ValueError as exc:
                raise DataError(f"row {row_idx}: non-numeric value ({exc})") from None
            tag = None
            if len(cells) == n_samples + 1:
                try:
                    tag = int(cells[n_samples])
                except ValueError:
                    raise DataError(
                        f"row {row_idx}: label column must be an integer, got {cells[n_samples]!r}"
                    ) from None
            profiles.append(Profile(values, tag))
    if not profiles:
        raise DataError(f"empty dataset: no data rows in {path}")
    return ProfileDataset(tuple(profiles), normalized=False, n_samples=n_samples)


def save_csv(ds: ProfileDataset, path: str | Path, header: str | None = None) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tags = ds.tags()
    with open(path, "w", encoding="utf-8") as fh:
        if header:
            fh.write(f"# {header}\n")
        for i, p in enumerate(ds.profiles):
            cells = [repr(float(v)) for v in p.values]
            if tags is not None:
                cells.append(str(int(tags[i])))
            fh.write(",".join(cells) + "\n")


def minmax_normalize(ds: ProfileDataset) -> tuple[ProfileDataset, NormStats]:
    """Scale the whole dataset to [0, 1] with its global min/max."""
    if not ds.profiles:
        raise DataError("cannot normalize an empty dataset")
    if ds.normalized:
        raise DataError("dataset is already normalized")
    vals = ds.values()
    stats = NormStats(float(vals.min()), float(vals.max()))
    scaled = apply_normalization(ds, stats)
    return scaled, stats


def apply_normalization(ds: ProfileDataset, stats: NormStats) -> ProfileDataset:
    """Apply existing stats (e.g. from a checkpoint) to a raw dataset."""
    if ds.normalized:
        raise DataError("dataset is already normalized")
    span = stats.x_max - stats.x_min
    profiles = tuple(
        Profile((p.values - stats.x_min) / span, p.class_tag) for p in ds.profiles
    )
    return ProfileDataset(profiles, norm_stats=stats, normalized=True, n_samples=ds.n_samples)


def denormalize(p: Profile, stats: NormStats) -> Profile:
    """Inverse of min-max normalization."""
    return Profile(p.values * (stats.x_max - stats.x_min) + stats.x_min, p.class_tag)


def denormalize_dataset(ds: ProfileDataset, stats: NormStats) -> ProfileDataset:
    profiles = tuple(denormalize(p, stats) for p in ds.profiles)
    return ProfileDataset(profiles, norm_stats=None, normalized=False, n_samples=ds.n_samples)
