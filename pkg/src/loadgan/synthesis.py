"""Generate profiles from a trained checkpoint with chosen latent codes."""

from __future__ import annotations

import warnings

import numpy as np

from .data import Profile, ProfileDataset, denormalize_dataset
from .engine import tensor as T
from .errors import ConfigError
from .models import LatentInput, one_hot
from .training import ModelCheckpoint, restore_models, sample_latent


def generate_profiles(
    ckpt: ModelCheckpoint,
    n: int,
    seed: int,
    cat: int | None = None,
    cont: float | None = None,
    keep_normalized: bool = False,
) -> ProfileDataset:
    """Sample z from the seed; optionally pin the categorical index and/or the
    continuous code. Output is denormalized unless keep_normalized."""
    if n < 1:
        raise ConfigError(f"n must be >= 1, got {n}")
    gen, _ = restore_models(ckpt)
    spec = ckpt.latent_spec
    rng = np.random.default_rng([seed, 0x67656E])
    latent = sample_latent(spec, n, rng)
    tag = None
    if cat is not None:
        if spec.n_categories == 0:
            raise ConfigError("checkpoint was trained without categorical codes")
        latent.cat = T.Tensor(one_hot(np.full(n, cat), spec.n_categories))
        tag = int(cat)
    if cont is not None:
        if spec.n_continuous == 0:
            raise ConfigError("checkpoint was trained without a continuous code")
        lo, hi = spec.continuous_range
        if not lo <= cont <= hi:
            warnings.warn(
                f"continuous code {cont} outside the training range [{lo}, {hi}]; extrapolating",
                stacklevel=2,
            )
        latent.cont = T.Tensor(np.full((n, spec.n_continuous), cont, dtype=np.float32))
    from .models import generate  # local import to keep module deps one-way

    values = generate(gen, latent)
    profiles = tuple(Profile(np.asarray(v, dtype=np.float64), tag) for v in values)
    ds = ProfileDataset(profiles, norm_stats=ckpt.norm_stats, normalized=True)
    if keep_normalized:
        return ds
    if ckpt.norm_stats is None:
        raise ConfigError("checkpoint has no normalization stats to denormalize with")
    return denormalize_dataset(ds, ckpt.norm_stats)
