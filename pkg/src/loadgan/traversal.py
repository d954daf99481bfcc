"""Continuous-code traversal: sweep the code over a grid, measure volatility."""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from .data import ProfileDataset
from .errors import ConfigError
from .metrics import DEFAULT_CODE_GRID, VolatilityReport, VolatilityRow, cv, rsafodm, safod
from .synthesis import generate_profiles
from .training import ModelCheckpoint

GeneratorFn = Callable[[float, int, int], np.ndarray]


def traversal_eval(
    ckpt: ModelCheckpoint | None,
    code_grid: Sequence[float] | None = None,
    batch: int = 64,
    seed: int = 0,
    generator_fn: GeneratorFn | None = None,
) -> tuple[VolatilityReport, dict[str, float]]:
    """For each grid code: fix the continuous code, sample z and categories,
    generate a batch, and average SAFOD/CV/RSAFODM. Returns the per-point
    report plus Spearman rank correlation of each index against the code.

    generator_fn(code, batch, point_seed) -> [batch, n_samples] overrides the
    checkpoint path (used to validate the trend statistics themselves).
    """
    grid = list(code_grid) if code_grid is not None else list(DEFAULT_CODE_GRID)
    if len(grid) < 2:
        raise ConfigError("code grid needs at least 2 points")
    if generator_fn is None:
        if ckpt is None:
            raise ConfigError("traversal needs a checkpoint or a generator_fn")
        if ckpt.latent_spec.n_continuous < 1:
            raise ConfigError(
                "checkpoint was trained without a continuous code (n_continuous=0)"
            )

        def generator_fn(code: float, n: int, point_seed: int) -> np.ndarray:
            ds = generate_profiles(ckpt, n, seed=point_seed, cont=float(code))
            return ds.values()

    rows = []
    for i, code in enumerate(grid):
        values = generator_fn(float(code), batch, seed * 100003 + i)
        rows.append(
            VolatilityRow(
                code=float(code),
                safod=float(np.mean([safod(v) for v in values])),
                cv=float(np.mean([cv(v) for v in values])),
                rsafodm=float(np.mean([rsafodm(v) for v in values])),
            )
        )
    report = VolatilityReport(tuple(rows))
    return report, report.trend()
