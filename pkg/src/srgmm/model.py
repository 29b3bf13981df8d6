"""Domain types for semi-random Gaussian mixture instances.

All arrays are float64 (labels int64) and are frozen read-only on construction,
so instances can be shared across threads without copying.
"""

from __future__ import annotations

import dataclasses
import itertools
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import InvalidInput, InvalidParams

COV_SLACK = 1e-9
CERT_RTOL = 1e-9

COVARIANCE_KINDS = ("spherical", "diagonal", "full")


def _frozen(a, dtype=np.float64):
    out = np.array(a, dtype=dtype, copy=True)
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class Covariance:
    """Covariance of one component.

    ``spherical`` stores the per-direction standard deviation (a scalar),
    ``diagonal`` stores the vector of variances, ``full`` the d x d matrix.
    """

    kind: str = "spherical"
    value: object = 1.0

    def __post_init__(self):
        if self.kind not in COVARIANCE_KINDS:
            raise InvalidParams(f"unknown covariance kind {self.kind!r}")
        if self.kind == "spherical":
            v = float(self.value)
            if not v >= 0:
                raise InvalidParams("spherical std must be non-negative")
            object.__setattr__(self, "value", v)
        elif self.kind == "diagonal":
            v = _frozen(self.value)
            if v.ndim != 1 or np.any(v < 0):
                raise InvalidParams("diagonal covariance needs non-negative variances")
            object.__setattr__(self, "value", v)
        else:
            v = _frozen(self.value)
            if v.ndim != 2 or v.shape[0] != v.shape[1]:
                raise InvalidParams("full covariance must be square")
            if not np.allclose(v, v.T, rtol=0, atol=1e-12 * max(1.0, np.abs(v).max())):
                raise InvalidParams("full covariance must be symmetric")
            if np.linalg.eigvalsh(v)[0] < -1e-12 * max(1.0, np.abs(v).max()):
                raise InvalidParams("full covariance must be positive semidefinite")
            object.__setattr__(self, "value", v)

    @classmethod
    def spherical(cls, std):
        return cls("spherical", std)

    def spectral_norm(self) -> float:
        """Largest variance in any direction."""
        if self.kind == "spherical":
            return self.value**2
        if self.kind == "diagonal":
            return float(self.value.max()) if self.value.size else 0.0
        return float(np.linalg.eigvalsh(self.value)[-1])

    def dim(self) -> Optional[int]:
        if self.kind == "spherical":
            return None
        return self.value.shape[0]

    def to_json(self):
        if self.kind == "spherical":
            return {"kind": "spherical", "std": self.value}
        if self.kind == "diagonal":
            return {"kind": "diagonal", "variances": self.value.tolist()}
        return {"kind": "full", "matrix": self.value.tolist()}

    @classmethod
    def from_json(cls, obj):
        kind = obj["kind"]
        if kind == "spherical":
            return cls(kind, obj["std"])
        if kind == "diagonal":
            return cls(kind, obj["variances"])
        if kind == "full":
            return cls(kind, obj["matrix"])
        raise InvalidParams(f"unknown covariance kind {kind!r}")


@dataclass(frozen=True, eq=False)
class MixtureParams:
    """Ground truth of a mixture: means, the directional std bound and sizes.

    Every component covariance must have spectral norm at most ``sigma**2``.
    Cluster sizes are fixed counts, not mixing weights.
    """

    means: np.ndarray
    sigma: float
    cluster_sizes: tuple
    covariances: tuple = None

    def __post_init__(self):
        means = _frozen(self.means)
        if means.ndim != 2 or means.shape[0] < 1 or means.shape[1] < 1:
            raise InvalidParams("means must be a non-empty k x d array")
        object.__setattr__(self, "means", means)
        k, d = means.shape
        sigma = float(self.sigma)
        if not (sigma > 0 and math.isfinite(sigma)):
            raise InvalidParams("sigma must be a positive finite real")
        object.__setattr__(self, "sigma", sigma)
        sizes = tuple(int(s) for s in self.cluster_sizes)
        if len(sizes) != k:
            raise InvalidParams(f"expected {k} cluster sizes, got {len(sizes)}")
        if any(s <= 0 for s in sizes):
            raise InvalidParams("cluster sizes must be positive")
        object.__setattr__(self, "cluster_sizes", sizes)
        covs = self.covariances
        if covs is None:
            covs = tuple(Covariance.spherical(sigma) for _ in range(k))
        covs = tuple(covs)
        if len(covs) != k:
            raise InvalidParams(f"expected {k} covariances, got {len(covs)}")
        for i, c in enumerate(covs):
            if c.dim() is not None and c.dim() != d:
                raise InvalidParams(f"covariance {i} has dimension {c.dim()}, expected {d}")
            if c.spectral_norm() > sigma**2 + COV_SLACK:
                raise InvalidParams(
                    f"covariance {i} has spectral norm {c.spectral_norm()} > sigma^2 = {sigma**2}"
                )
        object.__setattr__(self, "covariances", covs)
        if k >= 2:
            dmin = _min_pairwise_distance(means)
            if not dmin > 0:
                raise InvalidParams("component means must be pairwise distinct")

    @property
    def k(self) -> int:
        return self.means.shape[0]

    @property
    def d(self) -> int:
        return self.means.shape[1]

    @property
    def N(self) -> int:
        return sum(self.cluster_sizes)

    @property
    def w_min(self) -> float:
        return min(self.cluster_sizes) / self.N


def _min_pairwise_distance(means):
    best = math.inf
    for i, j in itertools.combinations(range(means.shape[0]), 2):
        best = min(best, float(np.linalg.norm(means[i] - means[j])))
    return best


def separation(params: MixtureParams) -> float:
    """Realized separation: min pairwise mean distance in units of sigma."""
    if params.k < 2:
        raise InvalidParams("separation needs at least two components")
    return _min_pairwise_distance(params.means) / params.sigma


@dataclass(frozen=True, eq=False)
class Instance:
    """A clustering instance with its planted partition.

    ``pre_perturbation_points`` holds the Gaussian draws before the adversary
    moved them, when the instance was generated in-process.
    """

    points: np.ndarray
    planted_labels: np.ndarray
    params: MixtureParams
    seed: int = 0
    adversary: str = '{"kind":"identity"}'
    pre_perturbation_points: Optional[np.ndarray] = None

    def __post_init__(self):
        pts = _frozen(self.points)
        if pts.ndim != 2 or pts.shape[1] != self.params.d:
            raise InvalidInput(f"points must be N x {self.params.d}")
        object.__setattr__(self, "points", pts)
        labels = _frozen(self.planted_labels, dtype=np.int64)
        if labels.shape != (pts.shape[0],):
            raise InvalidInput("planted_labels must have one entry per point")
        k = self.params.k
        if labels.size and (labels.min() < 0 or labels.max() >= k):
            raise InvalidInput("planted labels out of range")
        counts = np.bincount(labels, minlength=k)
        if tuple(counts.tolist()) != self.params.cluster_sizes:
            raise InvalidInput(
                f"label counts {counts.tolist()} disagree with cluster sizes "
                f"{list(self.params.cluster_sizes)}"
            )
        object.__setattr__(self, "planted_labels", labels)
        if self.pre_perturbation_points is not None:
            pre = _frozen(self.pre_perturbation_points)
            if pre.shape != pts.shape:
                raise InvalidInput("pre_perturbation_points must match points shape")
            object.__setattr__(self, "pre_perturbation_points", pre)
        seed = int(self.seed)
        if not 0 <= seed < 2**64:
            raise InvalidInput("seed must be an unsigned 64-bit integer")
        object.__setattr__(self, "seed", seed)

    @property
    def N(self) -> int:
        return self.points.shape[0]

    @property
    def d(self) -> int:
        return self.points.shape[1]

    @property
    def k(self) -> int:
        return self.params.k

    @property
    def sigma(self) -> float:
        return self.params.sigma

    def centered(self) -> np.ndarray:
        """Points minus the true mean of their planted component."""
        return self.points - self.params.means[self.planted_labels]

    def empirical_means(self) -> np.ndarray:
        return cluster_means(self.points, self.planted_labels, self.k)

    def replace(self, **changes) -> "Instance":
        return dataclasses.replace(self, **changes)


def cluster_means(points, labels, k, fallback=None):
    """Mean of each labelled group; empty groups take ``fallback`` rows (or NaN)."""
    points = np.asarray(points, dtype=np.float64)
    counts = np.bincount(labels, minlength=k)
    sums = np.zeros((k, points.shape[1]))
    np.add.at(sums, labels, points)
    out = np.full((k, points.shape[1]), np.nan)
    nz = counts > 0
    out[nz] = sums[nz] / counts[nz, None]
    if fallback is not None:
        out[~nz] = np.asarray(fallback)[~nz]
    return out


def monotone_lambdas(instance: Instance, rtol: float = CERT_RTOL):
    """Recover the per-point shrink factor lambda with x - mu = lambda (y - mu).

    Returns ``(lambdas, ok)`` where ``ok[t]`` says the relation holds for some
    lambda in [0, 1] within ``rtol``. Points whose draw sits exactly on the
    mean accept any lambda (reported as 0).
    """
    if instance.pre_perturbation_points is None:
        raise InvalidInput("instance carries no pre-perturbation points")
    mu = instance.params.means[instance.planted_labels]
    xbar = instance.points - mu
    ybar = instance.pre_perturbation_points - mu
    yy = np.einsum("ij,ij->i", ybar, ybar)
    xy = np.einsum("ij,ij->i", xbar, ybar)
    safe = np.where(yy > 0, yy, 1.0)
    lam = np.where(yy > 0, xy / safe, 0.0)
    scale = np.sqrt(yy) + np.linalg.norm(mu, axis=1) + 1e-300
    resid = np.linalg.norm(xbar - lam[:, None] * ybar, axis=1)
    lam_tol = rtol * scale / np.sqrt(safe)
    ok = (resid <= rtol * scale) & (lam >= -lam_tol) & (lam <= 1 + lam_tol)
    return lam, ok


def check_monotone(instance: Instance, rtol: float = CERT_RTOL) -> bool:
    """True iff every point is a radial shrink of its draw toward its mean."""
    _, ok = monotone_lambdas(instance, rtol)
    return bool(ok.all())


@dataclass(frozen=True, eq=False)
class Clustering:
    """Centers plus the label assignment they induce."""

    centers: np.ndarray
    labels: np.ndarray
    iteration_count: int = 0
    converged: bool = True

    def __post_init__(self):
        object.__setattr__(self, "centers", _frozen(self.centers))
        object.__setattr__(self, "labels", _frozen(self.labels, dtype=np.int64))
        k = self.centers.shape[0]
        if self.labels.size and (self.labels.min() < 0 or self.labels.max() >= k):
            raise InvalidInput("clustering labels out of range")

    @property
    def k(self) -> int:
        return self.centers.shape[0]

    def to_json(self):
        return {
            "centers": self.centers.tolist(),
            "labels": self.labels.tolist(),
            "iteration_count": int(self.iteration_count),
            "converged": bool(self.converged),
        }

    @classmethod
    def from_json(cls, obj):
        return cls(
            np.asarray(obj["centers"], dtype=np.float64),
            np.asarray(obj["labels"], dtype=np.int64),
            obj.get("iteration_count", 0),
            obj.get("converged", True),
        )


@dataclass(frozen=True)
class EvalReport:
    """Comparison of a computed clustering against the planted one.

    ``permutation[i]`` is the planted cluster matched to computed cluster i.
    ``total_misclassified`` is the plain sum of per-cluster symmetric
    differences, so every misplaced point is counted twice (once in the
    cluster it left, once in the cluster it joined).
    ``center_distances[j]`` is the distance, in units of sigma, from true mean
    j to the computed center matched to it.
    """

    permutation: tuple
    per_cluster_symdiff: tuple
    total_misclassified: int
    kmeans_cost: float
    locally_optimal: bool
    center_distances: tuple
    empty_clusters: tuple = field(default_factory=tuple)

    def to_json(self):
        return {
            "permutation": list(self.permutation),
            "per_cluster_symdiff": list(self.per_cluster_symdiff),
            "total_misclassified": self.total_misclassified,
            "kmeans_cost": self.kmeans_cost,
            "locally_optimal": self.locally_optimal,
            "center_distances": list(self.center_distances),
            "empty_clusters": list(self.empty_clusters),
        }

    CSV_COLUMNS = (
        "total_misclassified",
        "kmeans_cost",
        "locally_optimal",
        "max_center_distance",
        "empty_clusters",
    )

    def csv_row(self):
        return {
            "total_misclassified": self.total_misclassified,
            "kmeans_cost": repr(self.kmeans_cost),
            "locally_optimal": int(self.locally_optimal),
            "max_center_distance": repr(max(self.center_distances, default=0.0)),
            "empty_clusters": len(self.empty_clusters),
        }


def as_centers(centers: Sequence, d: int) -> np.ndarray:
    c = np.asarray(centers, dtype=np.float64)
    if c.ndim != 2 or c.shape[1] != d:
        raise InvalidInput(f"centers must be k x {d}")
    return c
