"""Unsupervised auto-labeling via the classifier head, permutation-matched
scoring against ground truth, and the k-means baseline."""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .data import ProfileDataset, apply_normalization
from .errors import ConfigError, DataError
from .models import q_infer
from .training import ModelCheckpoint, q_labels, restore_models

MAX_PERMUTATION_CLUSTERS = 8


@dataclass(frozen=True)
class LabelReport:
    """Assignment fractions per true class, and accuracy under the best
    relabeling of cluster ids (clusters have no fixed semantics)."""

    assignment: np.ndarray  # [n_true_classes, n_clusters], rows sum to 1
    best_permutation: tuple[int, ...]  # cluster id -> class id
    accuracy: float

    def __post_init__(self):
        sums = self.assignment.sum(axis=1)
        if not np.all(np.abs(sums - 1.0) <= 1e-9):
            raise DataError(f"assignment rows must sum to 1, got {sums}")
        if not 0.0 <= self.accuracy <= 1.0:
            raise DataError(f"accuracy must lie in [0, 1], got {self.accuracy}")


def label_with_q(ckpt: ModelCheckpoint, ds: ProfileDataset) -> np.ndarray:
    """Cluster index per profile (argmax of the classifier head).

    The dataset must be normalized with the checkpoint's stats; a raw dataset
    is normalized here. Ground-truth tags are stripped before inference.
    """
    if ckpt.norm_stats is None:
        raise DataError("checkpoint carries no normalization stats")
    if ds.normalized:
        if ds.norm_stats != ckpt.norm_stats:
            raise DataError(
                f"dataset was normalized with {ds.norm_stats}, "
                f"checkpoint expects {ckpt.norm_stats}"
            )
        normed = ds
    else:
        normed = apply_normalization(ds, ckpt.norm_stats)
    _, critic = restore_models(ckpt)
    if not critic.has_q:
        raise ConfigError(f"checkpoint was trained in {ckpt.mode!r} mode without a classifier head")
    return q_labels(critic, normed.values().astype(np.float32))


def kmeans(ds: ProfileDataset, k: int, seed: int, n_restarts: int = 5,
           max_iter: int = 300, tol: float = 1e-7) -> tuple[np.ndarray, np.ndarray]:
    """Lloyd's algorithm on the raw profile vectors, squared Euclidean.

    Restarts keep the lowest inertia; an emptied cluster is re-seeded from
    the point farthest from its assigned centroid.
    """
    x = ds.values()
    n = len(x)
    if k < 1 or k > n:
        raise ConfigError(f"k must lie in [1, {n}], got {k}")
    master = np.random.default_rng([seed, 0x6B6D])
    best: tuple[float, np.ndarray, np.ndarray] | None = None
    for _ in range(max(n_restarts, 1)):
        rng = np.random.default_rng(master.integers(0, 2**63 - 1))
        centroids = x[rng.choice(n, size=k, replace=False)].copy()
        labels = np.zeros(n, dtype=np.int64)
        for _ in range(max_iter):
            dist = ((x[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
            labels = dist.argmin(axis=1)
            new_centroids = centroids.copy()
            for c in range(k):
                members = x[labels == c]
                if len(members) == 0:
                    point_dist = dist[np.arange(n), labels]
                    new_centroids[c] = x[int(point_dist.argmax())]
                else:
                    new_centroids[c] = members.mean(axis=0)
            shift = float(np.abs(new_centroids - centroids).max())
            centroids = new_centroids
            if shift < tol:
                break
        dist = ((x[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
        labels = dist.argmin(axis=1)
        inertia = float(dist[np.arange(n), labels].sum())
        if best is None or inertia < best[0]:
            best = (inertia, labels.copy(), centroids.copy())
    assert best is not None
    return best[1], best[2]


def kmeans_inertia(x: np.ndarray, labels: np.ndarray, centroids: np.ndarray) -> float:
    return float(((x - centroids[labels]) ** 2).sum())


def score_labels(pred: np.ndarray, truth: np.ndarray) -> LabelReport:
    """Assignment matrix plus accuracy maximized over cluster relabelings."""
    pred = np.asarray(pred, dtype=np.int64)
    truth = np.asarray(truth, dtype=np.int64)
    if pred.shape != truth.shape or pred.size == 0:
        raise DataError(f"pred/truth must be equal-length non-empty, got {pred.shape} vs {truth.shape}")
    n_true = int(truth.max()) + 1
    n_clusters = max(int(pred.max()) + 1, n_true)
    if n_clusters > MAX_PERMUTATION_CLUSTERS:
        raise ConfigError(f"permutation matching supports at most {MAX_PERMUTATION_CLUSTERS} clusters")
    assignment = np.zeros((n_true, n_clusters))
    for c in range(n_true):
        sel = pred[truth == c]
        if sel.size == 0:
            raise DataError(f"true class {c} has no samples")
        for j in range(n_clusters):
            assignment[c, j] = np.mean(sel == j)
    best_perm: tuple[int, ...] = tuple(range(n_clusters))
    best_acc = -1.0
    for perm in itertools.permutations(range(n_true), n_clusters) if n_true >= n_clusters else ():
        acc = float(np.mean(np.array(perm)[pred] == truth))
        if acc > best_acc:
            best_acc = acc
            best_perm = perm
    if best_acc < 0:
        # more clusters than classes: map each cluster to its majority class
        mapping = tuple(int(np.argmax(assignment[:, j] * np.bincount(truth, minlength=n_true)[:, None].squeeze()))
                        for j in range(n_clusters))
        best_perm = mapping
        best_acc = float(np.mean(np.array(mapping)[pred] == truth))
    return LabelReport(assignment=assignment, best_permutation=best_perm, accuracy=best_acc)


def labeling_accuracy(ckpt: ModelCheckpoint, ds: ProfileDataset) -> LabelReport:
    tags = ds.tags()
    if tags is None:
        raise DataError("labeling accuracy needs ground-truth tags")
    return score_labels(label_with_q(ckpt, ds), tags)
