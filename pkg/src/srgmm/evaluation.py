"""Planted-vs-computed comparison: label matching, misclassification, local optimality."""

from __future__ import annotations

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import InvalidInput
from .linalg import squared_distances
from .model import Clustering, EvalReport, Instance, cluster_means

LOCAL_OPT_SLACK = 1e-9


def confusion_matrix(planted, computed, k) -> np.ndarray:
    """``M[p, c]`` = number of points with planted label p and computed label c."""
    planted = np.asarray(planted)
    computed = np.asarray(computed)
    if planted.shape != computed.shape:
        raise InvalidInput("label arrays must have the same length")
    for name, lab in (("planted", planted), ("computed", computed)):
        if lab.size and (lab.min() < 0 or lab.max() >= k):
            raise InvalidInput(f"{name} label out of range [0, {k})")
    M = np.zeros((k, k), dtype=np.int64)
    np.add.at(M, (planted, computed), 1)
    return M


def match_labels(planted, computed, k) -> np.ndarray:
    """Permutation ``perm`` (computed -> planted) minimizing total symmetric difference.

    Because sum_i |C_perm(i)| + |C'_i| = 2N for every permutation, this is
    the assignment that maximizes the agreement counts on the diagonal.
    """
    M = confusion_matrix(planted, computed, k)
    rows, cols = linear_sum_assignment(M, maximize=True)
    perm = np.empty(k, dtype=np.int64)
    perm[cols] = rows
    return perm


def symmetric_differences(planted, computed, k, perm) -> np.ndarray:
    """``|C_perm(i) ^ C'_i|`` for every computed cluster i."""
    M = confusion_matrix(planted, computed, k)
    planted_sizes = M.sum(axis=1)
    computed_sizes = M.sum(axis=0)
    idx = np.arange(k)
    return planted_sizes[perm] + computed_sizes - 2 * M[perm, idx]


def is_locally_optimal(points, labels, k, sigma=1.0, slack=LOCAL_OPT_SLACK):
    """Every point is at least as close to its own cluster mean as to any other.

    Means are recomputed from ``labels``; empty clusters are ignored. A point
    may be farther from its own mean by ``slack * (sigma + distance)``.
    Returns ``(ok, violating_indices)``.
    """
    points = np.asarray(points, dtype=np.float64)
    labels = np.asarray(labels)
    means = cluster_means(points, labels, k)
    nonempty = np.flatnonzero(~np.isnan(means[:, 0]))
    if nonempty.size <= 1:
        return True, np.empty(0, dtype=np.int64)
    D = np.sqrt(squared_distances(points, means[nonempty], exact=True))
    pos = np.searchsorted(nonempty, labels)
    own = D[np.arange(points.shape[0]), pos]
    D[np.arange(points.shape[0]), pos] = np.inf
    best_other = D.min(axis=1)
    bad = own > best_other + slack * (sigma + best_other)
    return bool(not bad.any()), np.flatnonzero(bad)


def kmeans_cost(points, centers) -> float:
    D = squared_distances(points, centers, exact=True)
    return float(D.min(axis=1).sum())


def evaluate(instance: Instance, clustering: Clustering) -> EvalReport:
    k = instance.k
    if clustering.k != k:
        raise InvalidInput(f"clustering has {clustering.k} centers, instance has k={k}")
    if clustering.labels.shape != (instance.N,):
        raise InvalidInput("clustering labels do not match the instance size")
    perm = match_labels(instance.planted_labels, clustering.labels, k)
    symdiff = symmetric_differences(instance.planted_labels, clustering.labels, k, perm)
    counts = np.bincount(clustering.labels, minlength=k)
    empty = tuple(int(i) for i in np.flatnonzero(counts == 0))
    ok, _ = is_locally_optimal(instance.points, clustering.labels, k, instance.sigma)
    inv = np.empty(k, dtype=np.int64)
    inv[perm] = np.arange(k)
    dist = np.linalg.norm(clustering.centers[inv] - instance.params.means, axis=1) / instance.sigma
    return EvalReport(
        permutation=tuple(int(p) for p in perm),
        per_cluster_symdiff=tuple(int(s) for s in symdiff),
        total_misclassified=int(symdiff.sum()),
        kmeans_cost=kmeans_cost(instance.points, clustering.centers),
        locally_optimal=ok,
        center_distances=tuple(float(x) for x in dist),
        empty_clusters=empty,
    )


def planted_clustering(instance: Instance) -> Clustering:
    """The planted partition with its empirical means as centers."""
    return Clustering(instance.empirical_means(), instance.planted_labels, 0, True)


def misclassification_bound(k, d, N, delta, c1=10.0) -> float:
    """Misclassification ceiling ``c1 k d / delta^4 * max(1, log(3(sqrt d + 2 sqrt log N)/delta^2))``."""
    inner = 3.0 * (np.sqrt(d) + 2.0 * np.sqrt(np.log(N))) / delta**2
    return float(c1 * k * d / delta**4 * max(1.0, np.log(inner)))
