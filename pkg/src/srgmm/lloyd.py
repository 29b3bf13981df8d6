"""Lloyd iterations: Voronoi assignment and center re-estimation.

One iteration takes the current labels, replaces every center by the mean of
its cluster, and then reassigns every point to its closest new center. The
run stops when no label changes, when no center moves more than
``drift_tol * sigma``, or after ``max_iters`` iterations.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .linalg import squared_distances
from .model import Clustering, Instance, as_centers

DEFAULT_MAX_ITERS = 200
DEFAULT_DRIFT_TOL = 1e-6
EMPTY_POLICIES = ("retain", "farthest")


def assign(points, centers, exact=False) -> np.ndarray:
    """Index of the closest center for every point; ties go to the lowest index."""
    D = squared_distances(points, centers, exact=exact)
    return np.argmin(D, axis=1)


def _assign_with_cost(points, centers, exact=False):
    D = squared_distances(points, centers, exact=exact)
    labels = np.argmin(D, axis=1)
    return labels, float(D[np.arange(D.shape[0]), labels].sum())


def update_centers(points, labels, k, prev_centers, empty="retain", exact=False):
    """Cluster means; an empty cluster keeps its previous center.

    With ``empty="farthest"`` an empty cluster is instead moved onto the point
    farthest from its assigned center (ties to the lowest index).
    """
    points = np.asarray(points, dtype=np.float64)
    labels = np.asarray(labels)
    prev = np.asarray(prev_centers, dtype=np.float64)
    counts = np.bincount(labels, minlength=k)
    sums = np.zeros((k, points.shape[1]))
    np.add.at(sums, labels, points)
    out = prev.copy()
    nz = counts > 0
    out[nz] = sums[nz] / counts[nz, None]
    if empty == "farthest" and not nz.all():
        D = squared_distances(points, out, exact=exact)
        own = D[np.arange(points.shape[0]), labels]
        taken = set()
        for j in np.flatnonzero(~nz):
            order = np.argsort(-own, kind="stable")
            pick = next(t for t in order if t not in taken)
            taken.add(pick)
            out[j] = points[pick]
            own[pick] = -1.0
    elif empty not in EMPTY_POLICIES:
        raise ValueError(f"unknown empty-cluster policy {empty!r}")
    return out


@dataclass
class IterationRecord:
    iteration: int
    centers: np.ndarray
    max_center_drift: float
    kmeans_cost: float
    reassigned_count: int

    def to_json(self):
        return {
            "iteration": self.iteration,
            "centers": self.centers.tolist(),
            "max_center_drift": self.max_center_drift,
            "kmeans_cost": self.kmeans_cost,
            "reassigned_count": self.reassigned_count,
        }


@dataclass
class LloydTrace:
    records: list = field(default_factory=list)
    initial_cost: float = float("nan")

    def costs(self) -> np.ndarray:
        return np.array([r.kmeans_cost for r in self.records])

    def is_monotone(self, rtol=1e-12) -> bool:
        c = np.concatenate([[self.initial_cost], self.costs()])
        c = c[np.isfinite(c)]
        return bool(np.all(np.diff(c) <= rtol * np.abs(c[:-1]) + 1e-300))

    def to_jsonl(self) -> str:
        return "".join(json.dumps(r.to_json(), separators=(",", ":")) + "\n" for r in self.records)


def lloyd(points, initial_centers, max_iters=DEFAULT_MAX_ITERS, drift_tol=DEFAULT_DRIFT_TOL,
          scale=1.0, empty="retain", exact=False):
    """Array-level Lloyd run. Returns ``(centers, labels, trace, converged)``.

    ``scale`` is the length unit for ``drift_tol`` (sigma for instances).
    """
    if max_iters < 1:
        raise ValueError("max_iters must be at least 1")
    points = np.asarray(points, dtype=np.float64)
    centers = np.array(initial_centers, dtype=np.float64)
    k = centers.shape[0]
    labels, cost0 = _assign_with_cost(points, centers, exact)
    trace = LloydTrace(initial_cost=cost0)
    converged = False
    for r in range(1, max_iters + 1):
        new_centers = update_centers(points, labels, k, centers, empty=empty, exact=exact)
        new_labels, cost = _assign_with_cost(points, new_centers, exact)
        drift = float(np.max(np.linalg.norm(new_centers - centers, axis=1)))
        moved = int(np.count_nonzero(new_labels != labels))
        trace.records.append(IterationRecord(r, new_centers.copy(), drift, cost, moved))
        centers, labels = new_centers, new_labels
        if moved == 0 or drift <= drift_tol * scale:
            converged = True
            break
    return centers, labels, trace, converged


def run_lloyd(instance: Instance, initial_centers, max_iters=DEFAULT_MAX_ITERS,
              drift_tol=DEFAULT_DRIFT_TOL, empty="retain"):
    """Lloyd on an instance; the final labels are the Voronoi cells of the final centers."""
    centers0 = as_centers(initial_centers, instance.d)
    centers, labels, trace, converged = lloyd(
        instance.points, centers0, max_iters, drift_tol, instance.sigma, empty)
    clustering = Clustering(centers, labels, len(trace.records), converged)
    return clustering, trace


def lloyd_step(points, centers, empty="retain") -> np.ndarray:
    """A single assign-then-average update of ``centers``."""
    labels = assign(points, centers)
    return update_centers(points, labels, len(centers), centers, empty=empty)
