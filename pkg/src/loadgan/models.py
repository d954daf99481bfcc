"""Generator and shared-trunk critic (score head + classifier head).

The generator projects noise+codes to a short wide feature map and upsamples
through transposed-conv blocks (batchnorm + GELU) to a sigmoid output of
length 96. The critic is the mirrored conv stack with LeakyReLU and no batch
norm; its trunk feeds a linear score head (no sigmoid) and, in info mode, a
linear classifier head producing categorical logits and a continuous-code
mean. Both heads share every trunk parameter.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import engine as E
from .data import SAMPLES_PER_DAY
from .engine import tensor as T
from .engine.layers import BatchNorm1d, Conv1d, ConvTranspose1d, Linear, Module
from .errors import ConfigError, DataError


@dataclass(frozen=True)
class LatentSpec:
    z_dim: int = 100
    n_categories: int = 2
    n_continuous: int = 0
    continuous_range: tuple[float, float] = (-2.0, 2.0)

    def __post_init__(self):
        if self.z_dim < 1:
            raise ConfigError(f"z_dim must be >= 1, got {self.z_dim}")
        if self.n_categories != 0 and self.n_categories < 2:
            raise ConfigError(f"n_categories must be 0 or >= 2, got {self.n_categories}")
        if self.n_continuous < 0:
            raise ConfigError(f"n_continuous must be >= 0, got {self.n_continuous}")
        lo, hi = self.continuous_range
        if not lo < hi:
            raise ConfigError(f"continuous_range must be ordered, got {self.continuous_range}")

    @property
    def code_dim(self) -> int:
        return self.n_categories + self.n_continuous

    @property
    def input_dim(self) -> int:
        return self.z_dim + self.code_dim


@dataclass
class LatentInput:
    z: T.Tensor
    cat: T.Tensor
    cont: T.Tensor

    @property
    def batch_size(self) -> int:
        return self.z.shape[0]

    def concat(self) -> T.Tensor:
        return E.concat([self.z, self.cat, self.cont], axis=1)

    def validate(self, spec: LatentSpec) -> None:
        b = self.batch_size
        if self.z.shape != (b, spec.z_dim):
            raise ConfigError(f"z shape {self.z.shape} does not match spec z_dim {spec.z_dim}")
        if self.cat.shape != (b, spec.n_categories):
            raise ConfigError(f"cat shape {self.cat.shape} does not match n_categories {spec.n_categories}")
        if self.cont.shape != (b, spec.n_continuous):
            raise ConfigError(f"cont shape {self.cont.shape} does not match n_continuous {spec.n_continuous}")
        if spec.n_categories:
            c = self.cat.data
            if not (np.all((c == 0) | (c == 1)) and np.all(c.sum(axis=1) == 1)):
                raise ConfigError("categorical code rows must be exactly one-hot")


@dataclass(frozen=True)
class ArchConfig:
    base_channels: int = 256
    trunk_len: int = 6
    n_blocks: int = 4
    kernel: int = 4
    stride: int = 2
    padding: int = 1
    leaky_slope: float = 0.2
    n_samples: int = SAMPLES_PER_DAY

    def __post_init__(self):
        if self.kernel != self.stride + 2 * self.padding:
            raise ConfigError(
                f"kernel ({self.kernel}) must equal stride + 2*padding "
                f"({self.stride} + 2*{self.padding}) for exact length doubling"
            )
        reach = self.trunk_len * self.stride**self.n_blocks
        if reach != self.n_samples:
            raise ConfigError(
                f"architecture reaches length {reach}, not {self.n_samples}: "
                f"trunk_len {self.trunk_len} * stride {self.stride}^{self.n_blocks}"
            )
        if self.base_channels % (2 ** (self.n_blocks - 1)) != 0:
            raise ConfigError(
                f"base_channels {self.base_channels} not divisible by 2^{self.n_blocks - 1}"
            )

    @property
    def trunk_dim(self) -> int:
        return self.base_channels * self.trunk_len

    def generator_channels(self) -> list[int]:
        chans = [self.base_channels // 2**i for i in range(self.n_blocks)]
        return chans + [1]

    def critic_channels(self) -> list[int]:
        return list(reversed(self.generator_channels()))


class GeneratorNet(Module):
    def __init__(self, spec: LatentSpec, arch: ArchConfig, rng: np.random.Generator,
                 conditional: bool = False, dtype=np.float32):
        self.spec = spec
        self.arch = arch
        self.conditional = conditional
        self.proj = Linear(spec.input_dim, arch.trunk_dim, rng, dtype)
        chans = arch.generator_channels()
        self.blocks = [
            ConvTranspose1d(chans[i], chans[i + 1], arch.kernel, arch.stride, arch.padding, rng, dtype)
            for i in range(arch.n_blocks)
        ]
        self.norms = [BatchNorm1d(chans[i + 1], rng, dtype) for i in range(arch.n_blocks - 1)]

    def forward(self, latent_concat: T.Tensor) -> T.Tensor:
        b = latent_concat.shape[0]
        h = self.proj(latent_concat)
        h = T.reshape(h, (b, self.arch.base_channels, self.arch.trunk_len))
        for i, block in enumerate(self.blocks):
            h = block(h)
            if i < len(self.norms):
                h = E.gelu(self.norms[i](h))
        return E.sigmoid(h)


class CriticNet(Module):
    def __init__(self, spec: LatentSpec, arch: ArchConfig, rng: np.random.Generator,
                 conditional: bool = False, dtype=np.float32):
        self.spec = spec
        self.arch = arch
        self.conditional = conditional
        in_ch = 1 + (spec.n_categories if conditional else 0)
        chans = arch.critic_channels()
        chans[0] = in_ch
        self.convs = [
            Conv1d(chans[i], chans[i + 1], arch.kernel, arch.stride, arch.padding, rng, dtype)
            for i in range(arch.n_blocks)
        ]
        self.score_head = Linear(arch.trunk_dim, 1, rng, dtype)
        self.has_q = (not conditional) and spec.code_dim > 0
        if self.has_q:
            self.q_head = Linear(arch.trunk_dim, spec.code_dim, rng, dtype)

    def trunk(self, x: T.Tensor) -> T.Tensor:
        h = x
        for conv in self.convs:
            h = E.leaky_relu(conv(h), self.arch.leaky_slope)
        return T.reshape(h, (x.shape[0], self.arch.trunk_dim))

    def score_from_trunk(self, feat: T.Tensor) -> T.Tensor:
        return T.reshape(self.score_head(feat), (feat.shape[0],))

    def q_from_trunk(self, feat: T.Tensor) -> tuple[T.Tensor, T.Tensor]:
        if not self.has_q:
            raise ConfigError("critic was built without a classifier head")
        out = self.q_head(feat)
        nc = self.spec.n_categories
        logits = T.slice_axis(out, 1, 0, nc)
        cont = T.slice_axis(out, 1, nc, self.spec.code_dim)
        return logits, cont

    def forward(self, x: T.Tensor):
        """One trunk pass; returns (score, cat_logits, cont_mean)."""
        feat = self.trunk(x)
        score = self.score_from_trunk(feat)
        if self.has_q:
            logits, cont = self.q_from_trunk(feat)
        else:
            logits, cont = None, None
        return score, logits, cont

    def trunk_parameters(self) -> list[T.Tensor]:
        return [p for conv in self.convs for p in conv.parameters()]

    def score_parameters(self) -> list[T.Tensor]:
        return self.score_head.parameters()

    def q_parameters(self) -> list[T.Tensor]:
        return self.q_head.parameters() if self.has_q else []


def build_models(spec: LatentSpec, arch: ArchConfig, seed: int,
                 conditional: bool = False) -> tuple[GeneratorNet, CriticNet]:
    """Deterministic construction: same (spec, arch, seed) -> identical weights."""
    rng = np.random.default_rng([seed, 0x6D6F64])
    gen = GeneratorNet(spec, arch, rng, conditional)
    critic = CriticNet(spec, arch, rng, conditional)
    return gen, critic


def _check_series(x: T.Tensor, n_samples: int) -> None:
    if x.data.ndim != 3 or x.shape[1] != 1 or x.shape[2] != n_samples:
        raise DataError(f"expected input of shape [B, 1, {n_samples}], got {x.shape}")


def generate(gen: GeneratorNet, latent: LatentInput) -> np.ndarray:
    """Eval-mode synthesis; returns [B, n_samples] in [0, 1]."""
    latent.validate(gen.spec)
    was_training = gen.training
    gen.eval()
    try:
        with E.no_grad():
            out = gen.forward(latent.concat())
    finally:
        gen.train(was_training)
    return out.data.reshape(latent.batch_size, gen.arch.n_samples).copy()


def critic_score(critic: CriticNet, x: np.ndarray | T.Tensor) -> np.ndarray:
    """Realism scores (unbounded) for normalized series [B, 96]."""
    xt = _as_input(x, critic.arch.n_samples)
    with E.no_grad():
        feat = critic.trunk(xt)
        return critic.score_from_trunk(feat).data.copy()


def q_infer(critic: CriticNet, x: np.ndarray | T.Tensor) -> tuple[np.ndarray, np.ndarray]:
    """Classifier-head inference: (softmax category probs, continuous means)."""
    xt = _as_input(x, critic.arch.n_samples)
    with E.no_grad():
        feat = critic.trunk(xt)
        logits, cont = critic.q_from_trunk(feat)
        probs = E.softmax(logits, axis=1)
        return probs.data.copy(), cont.data.copy()


def _as_input(x, n_samples: int) -> T.Tensor:
    if isinstance(x, T.Tensor):
        data = x.data
    else:
        data = np.asarray(x)
    if data.ndim == 2:
        data = data[:, None, :]
    xt = T.Tensor(data.astype(np.float32, copy=False))
    _check_series(xt, n_samples)
    return xt


def conditioned_input(x: T.Tensor, cat: T.Tensor) -> T.Tensor:
    """Concatenate one-hot codes as constant-valued channels (cGAN critic input)."""
    b, _, length = x.shape
    nc = cat.shape[1]
    channels = T.broadcast_to(T.reshape(cat, (b, nc, 1)), (b, nc, length))
    return E.concat([x, channels], axis=1)


def one_hot(labels: np.ndarray, n_categories: int, dtype=np.float32) -> np.ndarray:
    labels = np.asarray(labels, dtype=np.int64)
    if labels.size and (labels.min() < 0 or labels.max() >= n_categories):
        bad = labels.min() if labels.min() < 0 else labels.max()
        raise DataError(f"label {bad} outside [0, {n_categories})")
    out = np.zeros((labels.size, n_categories), dtype=dtype)
    out[np.arange(labels.size), labels] = 1.0
    return out


def conditioned_latent(spec: LatentSpec, labels: np.ndarray, rng: np.random.Generator) -> LatentInput:
    """cGAN-mode latent: ground-truth one-hot codes (not sampled) plus noise."""
    labels = np.asarray(labels)
    b = labels.size
    z = T.Tensor(rng.standard_normal((b, spec.z_dim)).astype(np.float32))
    cat = T.Tensor(one_hot(labels, spec.n_categories))
    cont = T.Tensor(np.zeros((b, spec.n_continuous), dtype=np.float32))
    return LatentInput(z=z, cat=cat, cont=cont)
