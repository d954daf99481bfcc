"""Deterministic surrogate profile generator.

Stands in for field measurements: each class is a parametric daily envelope
(peaks and/or a plateau) with per-profile magnitude scaling and additive
noise whose amplitude can itself vary per profile (continuous volatility).
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .data import SAMPLES_PER_DAY, Profile, ProfileDataset
from .errors import ConfigError


@dataclass(frozen=True)
class ClassSpec:
    name: str
    base: float
    peak: float
    peak_hours: tuple[float, ...] = ()
    peak_width: float = 2.0
    plateau: tuple[float, float] | None = None
    plateau_ramp: float = 1.5
    noise: float = 0.0
    noise_smooth: int = 1
    scale_jitter: float = 0.0
    volatility_jitter: float = 0.0

    def __post_init__(self):
        if self.noise < 0:
            raise ConfigError(f"class {self.name!r}: noise amplitude must be >= 0")
        if self.base < 0 or self.peak < self.base:
            raise ConfigError(f"class {self.name!r}: need 0 <= base <= peak")
        if self.peak_width <= 0:
            raise ConfigError(f"class {self.name!r}: peak_width must be positive")
        if not 0 <= self.scale_jitter < 1:
            raise ConfigError(f"class {self.name!r}: scale_jitter must lie in [0, 1)")
        if not 0 <= self.volatility_jitter <= 1:
            raise ConfigError(f"class {self.name!r}: volatility_jitter must lie in [0, 1]")
        if self.noise_smooth < 1:
            raise ConfigError(f"class {self.name!r}: noise_smooth must be >= 1")
        if self.plateau is not None and not self.plateau[0] < self.plateau[1]:
            raise ConfigError(f"class {self.name!r}: plateau hours must be ordered")


PRESETS: dict[str, ClassSpec] = {
    # low magnitude, morning + evening peaks, volatile
    "residential": ClassSpec(
        "residential", base=0.5, peak=3.0, peak_hours=(7.5, 19.5), peak_width=1.7,
        noise=0.18, scale_jitter=0.15,
    ),
    # high magnitude, daytime plateau
    "industrial": ClassSpec(
        "industrial", base=3.0, peak=8.0, plateau=(8.0, 18.0), plateau_ramp=1.5,
        noise=0.2, scale_jitter=0.08,
    ),
    # photovoltaic-like bell, zero at night
    "pv": ClassSpec(
        "pv", base=0.0, peak=5.0, peak_hours=(13.0,), peak_width=3.2,
        noise=0.08, scale_jitter=0.1,
    ),
    # erratic all-day output
    "wind": ClassSpec(
        "wind", base=2.5, peak=2.5, noise=1.0, noise_smooth=8, scale_jitter=0.3,
    ),
    # pv-like with per-profile volatility spanning smooth .. jagged
    "pv_volatile": ClassSpec(
        "pv_volatile", base=0.05, peak=5.0, peak_hours=(13.0,), peak_width=3.2,
        noise=0.45, volatility_jitter=0.95, scale_jitter=0.05,
    ),
    # shape-contrast pair with overlapping magnitudes (k-means stressor)
    "twin_peak_overlap": ClassSpec(
        "twin_peak_overlap", base=0.6, peak=3.0, peak_hours=(7.5, 19.5), peak_width=1.6,
        noise=0.12, scale_jitter=0.5,
    ),
    "midday_overlap": ClassSpec(
        "midday_overlap", base=0.6, peak=3.0, peak_hours=(13.0,), peak_width=2.8,
        noise=0.12, scale_jitter=0.5,
    ),
}


def resolve_class_specs(names: list[str]) -> list[ClassSpec]:
    specs = []
    for name in names:
        key = name.strip().lower()
        if key not in PRESETS:
            raise ConfigError(f"unknown class preset {name!r}; available: {', '.join(sorted(PRESETS))}")
        specs.append(PRESETS[key])
    return specs


def _envelope(spec: ClassSpec, hours: np.ndarray) -> np.ndarray:
    env = np.zeros_like(hours)
    for center in spec.peak_hours:
        env = np.maximum(env, np.exp(-0.5 * ((hours - center) / spec.peak_width) ** 2))
    if spec.plateau is not None:
        start, end = spec.plateau
        ramp = max(spec.plateau_ramp, 1e-6)
        trap = np.clip((hours - start) / ramp, 0.0, 1.0) * np.clip((end - hours) / ramp, 0.0, 1.0)
        env = np.maximum(env, trap)
    return env


def _smooth(noise: np.ndarray, window: int) -> np.ndarray:
    if window <= 1:
        return noise
    kernel = np.ones(window) / window
    padded = np.pad(noise, (window // 2, window - 1 - window // 2), mode="wrap")
    return np.convolve(padded, kernel, mode="valid")


def make_surrogate(
    n_per_class: int,
    class_specs: list[ClassSpec],
    seed: int,
    n_samples: int = SAMPLES_PER_DAY,
) -> ProfileDataset:
    """Emit n_per_class profiles per class; pure function of (specs, seed)."""
    if n_per_class < 1:
        raise ConfigError(f"n_per_class must be >= 1, got {n_per_class}")
    if not class_specs:
        raise ConfigError("at least one class spec is required")
    rng = np.random.default_rng(seed)
    hours = (np.arange(n_samples) + 0.5) * (24.0 / n_samples)
    profiles: list[Profile] = []
    for tag, spec in enumerate(class_specs):
        shape = spec.base + (spec.peak - spec.base) * _envelope(spec, hours)
        for _ in range(n_per_class):
            scale = 1.0 + spec.scale_jitter * rng.uniform(-1.0, 1.0)
            vol = spec.noise * (1.0 + spec.volatility_jitter * rng.uniform(-1.0, 1.0))
            noise = _smooth(rng.standard_normal(n_samples), spec.noise_smooth)
            values = np.maximum(scale * shape + vol * noise, 0.0)
            profiles.append(Profile(values, class_tag=tag))
    return ProfileDataset(tuple(profiles), normalized=False, n_samples=n_samples)
