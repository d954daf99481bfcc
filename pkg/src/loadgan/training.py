"""Training engine: latent sampling, losses, alternating loop, monitoring.

The critic minimizes  mean D(fake) - mean D(real) + lambda_gp * GP  where GP
is the gradient penalty on interpolates. The generator (jointly with the
classifier head) minimizes  -mean D(fake) + info reconstruction loss. During
the generator step the info gradients also flow into the shared trunk; the
adversarial part updates generator parameters only.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from . import engine as E
from .data import NormStats, ProfileDataset
from .engine import Adam, tensor as T
from .engine.layers import Module
from .errors import ConfigError, DataError, DivergenceError
from .models import (
    ArchConfig,
    CriticNet,
    GeneratorNet,
    LatentInput,
    LatentSpec,
    build_models,
    conditioned_input,
    one_hot,
)

_EVAL_SALT = 0x6576C1
_LOOP_SALT = 0x106F50

MODES = ("infogan", "cgan", "wgan")


@dataclass(frozen=True)
class TrainingConfig:
    epochs: int = 300
    batch_size: int = 64
    n_critic: int = 5
    lr: float = 1e-4
    beta1: float = 0.5
    beta2: float = 0.9
    eps_adam: float = 1e-8
    lambda_gp: float = 10.0
    lambda_cat: float = 1.0
    lambda_cont: float = 0.1
    seed: int = 0
    checkpoint_every: int = 50
    mode: str = "infogan"

    def __post_init__(self):
        for name in ("epochs", "batch_size", "n_critic", "checkpoint_every"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1, got {getattr(self, name)}")
        for name in ("lr", "beta1", "beta2", "eps_adam", "lambda_gp", "lambda_cat", "lambda_cont"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be >= 0, got {getattr(self, name)}")
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")


@dataclass
class LogRow:
    epoch: int
    wasserstein: float
    critic_loss: float
    gp: float
    info_cat: float
    info_cont: float
    class_ratios: np.ndarray | None = None


class TrainingLog:
    """Per-epoch monitoring rows; CSV columns are fixed in spec order."""

    def __init__(self, n_true_classes: int = 2, n_clusters: int = 2):
        self.n_true_classes = n_true_classes
        self.n_clusters = n_clusters
        self.rows: list[LogRow] = []

    def append(self, row: LogRow) -> None:
        if row.class_ratios is not None:
            sums = row.class_ratios.sum(axis=1)
            if not np.all(np.abs(sums - 1.0) <= 1e-9):
                raise DataError(f"class ratio rows must sum to 1, got {sums}")
        self.rows.append(row)

    def header(self) -> list[str]:
        cols = ["epoch", "wasserstein", "critic_loss", "gp", "info_cat", "info_cont"]
        for c in range(self.n_true_classes):
            for k in range(self.n_clusters):
                cols.append(f"ratio_c{c}_clu{k}")
        return cols

    def to_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(",".join(self.header()) + "\n")
            for row in self.rows:
                cells = [str(row.epoch)] + [
                    repr(float(v)) for v in (row.wasserstein, row.critic_loss, row.gp, row.info_cat, row.info_cont)
                ]
                if row.class_ratios is None:
                    cells += ["nan"] * (self.n_true_classes * self.n_clusters)
                else:
                    cells += [repr(float(v)) for v in row.class_ratios.reshape(-1)]
                fh.write(",".join(cells) + "\n")


@dataclass
class ModelCheckpoint:
    """Snapshot of everything needed to regenerate or resume."""

    version: int
    mode: str
    epoch: int
    config: TrainingConfig
    latent_spec: LatentSpec
    arch: ArchConfig
    norm_stats: NormStats | None
    params: dict[str, np.ndarray]
    adam_critic: dict
    adam_gen: dict

CHECKPOINT_VERSION = 1


# --- latent sampling ---------------------------------------------------------


def sample_latent(spec: LatentSpec, batch: int, rng: np.random.Generator) -> LatentInput:
    """z ~ N(0,1), categorical uniform one-hot, continuous uniform in range."""
    if batch < 1:
        raise ConfigError(f"batch must be >= 1, got {batch}")
    z = T.Tensor(rng.standard_normal((batch, spec.z_dim)).astype(np.float32))
    if spec.n_categories:
        idx = rng.integers(0, spec.n_categories, batch)
        cat = T.Tensor(one_hot(idx, spec.n_categories))
    else:
        cat = T.Tensor(np.zeros((batch, 0), dtype=np.float32))
    lo, hi = spec.continuous_range
    cont = T.Tensor(rng.uniform(lo, hi, (batch, spec.n_continuous)).astype(np.float32))
    return LatentInput(z=z, cat=cat, cont=cont)


# --- losses --------------------------------------------------------------------


def _score_fn(critic: CriticNet, cond_cat: T.Tensor | None) -> Callable[[T.Tensor], T.Tensor]:
    if cond_cat is None:
        return lambda x: critic.score_from_trunk(critic.trunk(x))
    return lambda x: critic.score_from_trunk(critic.trunk(conditioned_input(x, cond_cat)))


def gradient_penalty(critic, x_real: T.Tensor, x_fake: T.Tensor, rng: np.random.Generator,
                     cond_cat: T.Tensor | None = None) -> T.Tensor:
    """Mean (||grad_x D(x_tilde)||_2 - 1)^2 on straight-line interpolates."""
    if x_real.shape != x_fake.shape:
        raise ConfigError(f"real/fake batch shapes differ: {x_real.shape} vs {x_fake.shape}")
    b = x_real.shape[0]
    score_of = _score_fn(critic, cond_cat) if isinstance(critic, CriticNet) else critic
    eps = rng.uniform(0.0, 1.0, (b, 1, 1)).astype(x_real.data.dtype)
    mixed = eps * x_real.data + (1.0 - eps) * x_fake.data
    x_tilde = T.Tensor(mixed, requires_grad=True)
    score = score_of(x_tilde)
    g = E.input_gradient(T.tsum(score), x_tilde)
    g2 = T.reshape(g, (b, -1))
    norm = T.sqrt(T.tsum(T.mul(g2, g2), axis=1))
    one = T.Tensor(np.asarray(1.0, dtype=norm.data.dtype))
    return T.tmean(T.pow_const(T.sub(norm, one), 2))


def critic_loss(critic, x_real: T.Tensor, x_fake: T.Tensor, lambda_gp: float,
                rng: np.random.Generator, cond_cat: T.Tensor | None = None
                ) -> tuple[T.Tensor, float, float]:
    """Returns (loss node, wasserstein gap, gp term); the floats are for logging."""
    score_of = _score_fn(critic, cond_cat) if isinstance(critic, CriticNet) else critic
    s_real = score_of(x_real)
    s_fake = score_of(x_fake)
    gap = T.sub(T.tmean(s_real), T.tmean(s_fake))
    gp = gradient_penalty(critic, x_real, x_fake, rng, cond_cat)
    lam = T.Tensor(np.asarray(lambda_gp, dtype=gp.data.dtype))
    loss = T.add(T.neg(gap), T.mul(lam, gp))
    return loss, gap.item(), gp.item()


def info_loss(cat_probs: T.Tensor | None, cont_mean: T.Tensor | None, latent: LatentInput,
              lambda_cat: float, lambda_cont: float) -> T.Tensor:
    """Code reconstruction loss: cross-entropy for one-hot codes plus MSE for
    continuous codes (fixed-variance Gaussian likelihood up to constants)."""
    terms: list[T.Tensor] = []
    if cat_probs is not None and latent.cat.shape[1]:
        picked = T.tsum(T.mul(cat_probs, latent.cat), axis=1)
        ce = T.neg(T.tmean(T.log(picked)))
        terms.append(T.mul(T.Tensor(np.asarray(lambda_cat, dtype=ce.data.dtype)), ce))
    if cont_mean is not None and latent.cont.shape[1]:
        diff = T.sub(cont_mean, latent.cont)
        mse = T.tmean(T.mul(diff, diff))
        terms.append(T.mul(T.Tensor(np.asarray(lambda_cont, dtype=mse.data.dtype)), mse))
    if not terms:
        return T.Tensor(np.asarray(0.0, dtype=np.float32))
    total = terms[0]
    for t in terms[1:]:
        total = T.add(total, t)
    return total


def generator_loss(score_fake: T.Tensor, cat_probs: T.Tensor | None, cont_mean: T.Tensor | None,
                   latent: LatentInput, lambda_cat: float, lambda_cont: float
                   ) -> tuple[T.Tensor, T.Tensor]:
    """(total, info part): total = -mean D(fake) + info reconstruction loss."""
    adv = T.neg(T.tmean(score_fake))
    info = info_loss(cat_probs, cont_mean, latent, lambda_cat, lambda_cont)
    return T.add(adv, info), info


# --- monitoring ----------------------------------------------------------------


def q_labels(critic: CriticNet, values: np.ndarray, batch: int = 256) -> np.ndarray:
    """Argmax cluster index from the classifier head, batched, eval mode."""
    out = []
    with E.no_grad():
        for i in range(0, len(values), batch):
            chunk = T.Tensor(values[i : i + batch][:, None, :].astype(np.float32))
            feat = critic.trunk(chunk)
            logits, _ = critic.q_from_trunk(feat)
            out.append(np.argmax(logits.data, axis=1))
    return np.concatenate(out) if out else np.empty(0, dtype=np.int64)


def class_ratio_matrix(pred: np.ndarray, tags: np.ndarray, n_clusters: int) -> np.ndarray:
    """Fraction of each ground-truth class assigned to each cluster; rows sum to 1."""
    n_true = int(tags.max()) + 1
    mat = np.zeros((n_true, n_clusters))
    for c in range(n_true):
        sel = pred[tags == c]
        if sel.size == 0:
            raise DataError(f"ground-truth class {c} has no profiles")
        for k in range(n_clusters):
            mat[c, k] = np.mean(sel == k)
    return mat


def _critic_scores(critic: CriticNet, values: np.ndarray, cond: np.ndarray | None,
                   batch: int = 256) -> np.ndarray:
    out = []
    with E.no_grad():
        for i in range(0, len(values), batch):
            chunk = T.Tensor(values[i : i + batch][:, None, :].astype(np.float32))
            if cond is not None:
                chunk = conditioned_input(chunk, T.Tensor(cond[i : i + batch]))
            out.append(critic.score_from_trunk(critic.trunk(chunk)).data)
    return np.concatenate(out)


def wasserstein_estimate(gen: GeneratorNet, critic: CriticNet, real_values: np.ndarray,
                         spec: LatentSpec, seed: int, epoch: int,
                         tags: np.ndarray | None = None, conditional: bool = False) -> float:
    """mean D(real) - mean D(fake) over the full real set and an equal fake batch.

    The fake latents come from an rng derived from (seed, epoch), so the
    estimate is exactly recomputable offline from a checkpoint.
    """
    rng = np.random.default_rng([seed, epoch, _EVAL_SALT])
    n = len(real_values)
    was_training = gen.training
    gen.eval()
    try:
        fakes = []
        conds = []
        with E.no_grad():
            for i in range(0, n, 256):
                b = min(256, n - i)
                latent = sample_latent(spec, b, rng)
                fake = gen.forward(latent.concat())
                fakes.append(fake.data.reshape(b, -1))
                if conditional:
                    conds.append(latent.cat.data)
        fake_values = np.concatenate(fakes)
        cond_fake = np.concatenate(conds) if conditional else None
        cond_real = one_hot(tags, spec.n_categories) if conditional else None
        s_real = _critic_scores(critic, real_values, cond_real)
        s_fake = _critic_scores(critic, fake_values, cond_fake)
    finally:
        gen.train(was_training)
    return float(s_real.mean() - s_fake.mean())


# --- state snapshots -------------------------------------------------------------


def collect_state(gen: Module, critic: Module) -> dict[str, np.ndarray]:
    state: dict[str, np.ndarray] = {}
    for prefix, mod in (("generator.", gen), ("critic.", critic)):
        for name, p in mod.named_parameters():
            state[prefix + name] = p.data.copy()
        for name, b in mod.named_buffers():
            state[prefix + name] = b.copy()
    return state


def load_state(gen: Module, critic: Module, state: dict[str, np.ndarray]) -> None:
    for prefix, mod in (("generator.", gen), ("critic.", critic)):
        for name, p in mod.named_parameters():
            key = prefix + name
            if key not in state:
                raise DataError(f"checkpoint is missing parameter {key}")
            if state[key].shape != p.data.shape:
                raise DataError(f"checkpoint parameter {key} has shape {state[key].shape}, expected {p.data.shape}")
            p.data = state[key].copy()
        for name, _ in mod.named_buffers():
            key = prefix + name
            if key not in state:
                raise DataError(f"checkpoint is missing buffer {key}")
            _set_buffer(mod, name, state[key].copy())


def _set_buffer(mod: Module, dotted: str, value: np.ndarray) -> None:
    parts = dotted.split(".")
    obj = mod
    for part in parts[:-1]:
        obj = obj[int(part)] if part.isdigit() else getattr(obj, part)
    setattr(obj, parts[-1], value)


def _adam_state(opt: Adam, names: list[str]) -> dict:
    return {
        "step": opt.step_count,
        "names": list(names),
        "m": [a.copy() for a in opt.m],
        "v": [a.copy() for a in opt.v],
    }


def restore_models(ckpt: ModelCheckpoint) -> tuple[GeneratorNet, CriticNet]:
    gen, critic = build_models(ckpt.latent_spec, ckpt.arch, ckpt.config.seed,
                               conditional=ckpt.mode == "cgan")
    load_state(gen, critic, ckpt.params)
    gen.eval()
    critic.eval()
    return gen, critic


# --- the loop ---------------------------------------------------------------------


class _DivergenceGuard:
    def __init__(self, patience: int = 3):
        self.patience = patience
        self.streak = 0

    def check(self, *losses: float) -> None:
        if all(np.isfinite(v) for v in losses):
            self.streak = 0
            return
        self.streak += 1
        if self.streak >= self.patience:
            raise DivergenceError(
                f"aborting: {self.streak} consecutive non-finite losses (last: {losses})"
            )


def train(ds: ProfileDataset, cfg: TrainingConfig,
          spec: LatentSpec | None = None, arch: ArchConfig | None = None,
          checkpoint_sink: Callable[[ModelCheckpoint], None] | None = None,
          progress: Callable[[LogRow], None] | None = None,
          ) -> tuple[list[ModelCheckpoint], TrainingLog]:
    """Train per cfg.mode; returns checkpoint series and per-epoch log."""
    spec = spec if spec is not None else LatentSpec()
    arch = arch if arch is not None else ArchConfig()
    if cfg.mode == "wgan":
        spec = replace(spec, n_categories=0, n_continuous=0)
    if cfg.mode == "cgan":
        return train_cgan(ds, cfg, spec, arch, checkpoint_sink, progress)
    return _train_impl(ds, cfg, spec, arch, conditional=False,
                       checkpoint_sink=checkpoint_sink, progress=progress)


def train_cgan(ds: ProfileDataset, cfg: TrainingConfig,
               spec: LatentSpec | None = None, arch: ArchConfig | None = None,
               checkpoint_sink: Callable[[ModelCheckpoint], None] | None = None,
               progress: Callable[[LogRow], None] | None = None,
               ) -> tuple[list[ModelCheckpoint], TrainingLog]:
    """Conditional baseline: ground-truth one-hot on both G and D, no Q head."""
    spec = spec if spec is not None else LatentSpec()
    arch = arch if arch is not None else ArchConfig()
    spec = replace(spec, n_continuous=0)
    if ds.tags() is None:
        raise DataError("cgan mode requires a labeled dataset (label column missing)")
    n_true = int(ds.tags().max()) + 1
    if n_true > spec.n_categories:
        raise DataError(f"dataset has {n_true} classes but latent spec allows {spec.n_categories}")
    cfg = replace(cfg, mode="cgan")
    return _train_impl(ds, cfg, spec, arch, conditional=True,
                       checkpoint_sink=checkpoint_sink, progress=progress)


def _train_impl(ds: ProfileDataset, cfg: TrainingConfig, spec: LatentSpec, arch: ArchConfig,
                conditional: bool,
                checkpoint_sink: Callable[[ModelCheckpoint], None] | None,
                progress: Callable[[LogRow], None] | None,
                ) -> tuple[list[ModelCheckpoint], TrainingLog]:
    if not ds.normalized:
        raise DataError("training requires a normalized dataset")
    n = len(ds)
    if n < 2:
        raise DataError(f"training needs at least 2 profiles, got {n}")
    values = ds.values().astype(np.float32)
    tags = ds.tags()

    gen, critic = build_models(spec, arch, cfg.seed, conditional=conditional)
    gen.train()
    critic.train()

    critic_named = [("convs_score." + n_, p) for n_, p in _named(critic.trunk_parameters(), "trunk")] + \
                   [("score." + n_, p) for n_, p in _named(critic.score_parameters(), "head")]
    critic_params = [p for _, p in critic_named]
    gen_param_list = gen.parameters()
    aux_params = (critic.q_parameters() + critic.trunk_parameters()) if critic.has_q else []
    gen_all = gen_param_list + aux_params

    opt_critic = Adam(critic_params, cfg.lr, cfg.beta1, cfg.beta2, cfg.eps_adam)
    opt_gen = Adam(gen_all, cfg.lr, cfg.beta1, cfg.beta2, cfg.eps_adam)

    rng = np.random.default_rng([cfg.seed, _LOOP_SALT])
    guard = _DivergenceGuard()
    log = TrainingLog(
        n_true_classes=(int(tags.max()) + 1 if tags is not None else 2),
        n_clusters=max(spec.n_categories, 1),
    )
    checkpoints: list[ModelCheckpoint] = []
    it = 0

    for epoch in range(1, cfg.epochs + 1):
        perm = rng.permutation(n)
        closs_acc: list[float] = []
        gp_acc: list[float] = []
        icat_acc: list[float] = []
        icont_acc: list[float] = []
        for start in range(0, n, cfg.batch_size):
            idx = perm[start : start + cfg.batch_size]
            if idx.size < 2:
                continue
            b = idx.size
            x_real = T.Tensor(values[idx][:, None, :])

            latent = sample_latent(spec, b, rng)
            cond_real = T.Tensor(one_hot(tags[idx], spec.n_categories)) if conditional else None
            with E.no_grad():
                fake = gen.forward(latent.concat())
            x_fake = T.Tensor(fake.data)
            cond_for_scores = latent.cat if conditional else None

            # critic step: one loss over real/fake/interpolates; note the
            # interpolates are conditioned on the real batch's labels
            score_of_real = _score_fn(critic, cond_real)
            score_of_fake = _score_fn(critic, cond_for_scores)
            s_real = score_of_real(x_real)
            s_fake = score_of_fake(x_fake)
            gap = T.sub(T.tmean(s_real), T.tmean(s_fake))
            gp = gradient_penalty(critic, x_real, x_fake, rng, cond_cat=cond_real)
            lam = T.Tensor(np.asarray(cfg.lambda_gp, dtype=np.float32))
            c_loss = T.add(T.neg(gap), T.mul(lam, gp))
            grads = E.grad(c_loss, critic_params)
            opt_critic.step([g.data for g in grads])
            closs_acc.append(c_loss.item())
            gp_acc.append(gp.item())
            guard.check(c_loss.item())

            it += 1
            if it % cfg.n_critic == 0:
                g_batch = min(cfg.batch_size, n)
                g_latent = sample_latent(spec, g_batch, rng)
                g_fake = gen.forward(g_latent.concat())
                if conditional:
                    feat = critic.trunk(conditioned_input(g_fake, g_latent.cat))
                else:
                    feat = critic.trunk(g_fake)
                score = critic.score_from_trunk(feat)
                if critic.has_q:
                    logits, cont = critic.q_from_trunk(feat)
                    probs = E.softmax(logits, axis=1)
                else:
                    probs, cont = None, None
                total, info = generator_loss(score, probs, cont, g_latent,
                                             cfg.lambda_cat, cfg.lambda_cont)
                g_grads = E.grad(total, gen_param_list)
                if aux_params:
                    aux_grads = E.grad(info, aux_params)
                    opt_gen.step([g.data for g in g_grads + aux_grads])
                    cat_term = _cat_part(probs, g_latent)
                    cont_term = _cont_part(cont, g_latent)
                    icat_acc.append(cat_term)
                    icont_acc.append(cont_term)
                else:
                    opt_gen.step([g.data for g in g_grads])
                guard.check(total.item())

        w_est = wasserstein_estimate(gen, critic, values, spec, cfg.seed, epoch,
                                     tags=tags, conditional=conditional)
        ratios = None
        if critic.has_q and tags is not None:
            pred = q_labels(critic, values)
            ratios = class_ratio_matrix(pred, tags, spec.n_categories)
        row = LogRow(
            epoch=epoch,
            wasserstein=w_est,
            critic_loss=float(np.mean(closs_acc)) if closs_acc else float("nan"),
            gp=float(np.mean(gp_acc)) if gp_acc else float("nan"),
            info_cat=float(np.mean(icat_acc)) if icat_acc else float("nan"),
            info_cont=float(np.mean(icont_acc)) if icont_acc else float("nan"),
            class_ratios=ratios,
        )
        log.append(row)
        if progress is not None:
            progress(row)

        if epoch % cfg.checkpoint_every == 0 or epoch == cfg.epochs:
            ckpt = ModelCheckpoint(
                version=CHECKPOINT_VERSION,
                mode=cfg.mode,
                epoch=epoch,
                config=cfg,
                latent_spec=spec,
                arch=arch,
                norm_stats=ds.norm_stats,
                params=collect_state(gen, critic),
                adam_critic=_adam_state(opt_critic, [n_ for n_, _ in critic_named]),
                adam_gen=_adam_state(opt_gen, [f"gen.{i}" for i in range(len(gen_all))]),
            )
            checkpoints.append(ckpt)
            if checkpoint_sink is not None:
                checkpoint_sink(ckpt)

    return checkpoints, log


def _named(params: Sequence[T.Tensor], prefix: str) -> list[tuple[str, T.Tensor]]:
    return [(f"{prefix}.{i}", p) for i, p in enumerate(params)]


def _cat_part(probs: T.Tensor | None, latent: LatentInput) -> float:
    if probs is None or latent.cat.shape[1] == 0:
        return float("nan")
    picked = np.sum(probs.data * latent.cat.data, axis=1)
    return float(-np.mean(np.log(picked)))


def _cont_part(cont: T.Tensor | None, latent: LatentInput) -> float:
    if cont is None or latent.cont.shape[1] == 0:
        return float("nan")
    return float(np.mean((cont.data - latent.cont.data) ** 2))
