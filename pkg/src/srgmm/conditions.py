"""Measurements of the deterministic concentration conditions on an instance.

Each checker returns a :class:`ConditionEntry` comparing a measured value with
the bound the semi-random analysis relies on. Lengths are in units of sigma,
variances in units of sigma^2. ``pass_`` is ``measured <= bound`` (with a
1e-9 relative slack); entries whose hypotheses do not hold carry a non-"ok"
status and are left out of the overall verdict.

The bad-direction count is a witness search, not a proof: a "pass" means no
heuristic found a worse direction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInput
from .linalg import spectral_norm, topk_svd
from .model import Instance
from .rng import SeedTree, as_stream, sample_unit_directions

SLACK = 1e-9
MAX_WITNESSES = 16
BAD_DIRECTION_CONSTANT = 512.0


@dataclass
class ConditionEntry:
    name: str
    bound_value: float
    measured_value: float
    pass_: bool
    witnesses: list = field(default_factory=list)
    status: str = "ok"
    details: dict = field(default_factory=dict)

    @property
    def failed(self) -> bool:
        return self.status == "ok" and not self.pass_

    def to_json(self):
        return {
            "name": self.name,
            "bound_value": self.bound_value,
            "measured_value": self.measured_value,
            "pass": self.pass_,
            "witnesses": [int(w) for w in self.witnesses],
            "status": self.status,
            "details": self.details,
        }


def _entry(name, bound, measured, witnesses=(), status="ok", details=None):
    measured = float(measured)
    bound = float(bound)
    ok = measured <= bound + SLACK * abs(bound)
    return ConditionEntry(name, bound, measured, bool(ok), [int(w) for w in witnesses][:MAX_WITNESSES],
                          status, details or {})


@dataclass
class ConditionReport:
    entries: list

    @property
    def all_pass(self) -> bool:
        return not any(e.failed for e in self.entries)

    def __getitem__(self, name) -> ConditionEntry:
        for e in self.entries:
            if e.name == name:
                return e
        raise KeyError(name)

    def to_json(self):
        return {"all_pass": self.all_pass, "entries": [e.to_json() for e in self.entries]}


def _log_n(instance):
    return math.log(max(instance.N, 2))


def _worst(values, bound):
    order = np.argsort(-values, kind="stable")
    return [int(t) for t in order if values[t] > bound + SLACK * abs(bound)][:MAX_WITNESSES]


def check_length(instance: Instance) -> ConditionEntry:
    """Max distance of a point to its true mean, against ``sqrt d + 2 sqrt log N``."""
    r = np.linalg.norm(instance.centered(), axis=1) / instance.sigma
    bound = math.sqrt(instance.d) + 2.0 * math.sqrt(_log_n(instance))
    return _entry("length", bound, r.max(initial=0.0), _worst(r, bound))


def check_innerprod(instance: Instance, u) -> ConditionEntry:
    """Max |<x - mu_i, u>| for one fixed unit direction, against ``3 sqrt log N``."""
    u = np.asarray(u, dtype=np.float64)
    u = u / np.linalg.norm(u)
    p = np.abs(instance.centered() @ u) / instance.sigma
    bound = 3.0 * math.sqrt(_log_n(instance))
    return _entry("innerprod", bound, p.max(initial=0.0), _worst(p, bound))


def check_innerprod_means(instance: Instance) -> ConditionEntry:
    """Max over points and other means j of |<x - mu_i, unit(mu_i - mu_j)>|."""
    bound = 3.0 * math.sqrt(_log_n(instance))
    k = instance.k
    if k < 2:
        return _entry("innerprod_means", bound, 0.0)
    xbar = instance.centered()
    means = instance.params.means
    best = np.zeros(instance.N)
    for i in range(k):
        idx = np.flatnonzero(instance.planted_labels == i)
        if idx.size == 0:
            continue
        dirs = means[i] - np.delete(means, i, axis=0)
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
        best[idx] = np.abs(xbar[idx] @ dirs.T).max(axis=1)
    best /= instance.sigma
    return _entry("innerprod_means", bound, best.max(initial=0.0), _worst(best, bound))


def _cluster_status(instance):
    need = 4.0 * (instance.d + math.log(max(instance.k, 1)))
    small = [i for i, n in enumerate(instance.params.cluster_sizes) if n < need]
    return ("precondition-unmet" if small else "ok"), small


def check_mean_drift(instance: Instance) -> ConditionEntry:
    """Max distance between a cluster's empirical mean and its true mean (bound 2)."""
    status, small = _cluster_status(instance)
    drift = np.linalg.norm(instance.empirical_means() - instance.params.means, axis=1) / instance.sigma
    return _entry("mean_drift", 2.0, drift.max(), _worst(drift, 2.0), status,
                  {"per_cluster": drift.tolist(), "small_clusters": small})


def check_variance(instance: Instance) -> ConditionEntry:
    """Max directional second moment about the true mean, per cluster (bound 4 sigma^2)."""
    status, small = _cluster_status(instance)
    xbar = instance.centered()
    per = np.zeros(instance.k)
    for i in range(instance.k):
        block = xbar[instance.planted_labels == i]
        if block.size and np.any(block):
            per[i] = spectral_norm(block) ** 2 / block.shape[0]
    per /= instance.sigma**2
    return _entry("variance", 4.0, per.max(), _worst(per, 4.0), status,
                  {"per_cluster": per.tolist(), "small_clusters": small})


def subset_mean_bound(eps) -> float:
    return 4.0 + 2.0 / math.sqrt(1.0 - eps)


def check_subset_mean(instance: Instance, subsets) -> ConditionEntry:
    """Drift of the means of large subsets ``G_i`` of each cluster.

    ``subsets`` maps cluster index to an index array (a list aligned with the
    clusters also works; ``None`` stands for the whole cluster). The largest
    ratio ``drift_i / bound_i`` decides the entry, with
    ``bound_i = 4 + 2 / sqrt(1 - eps_i)`` and ``eps_i = 1 - |G_i| / |C_i|``.
    """
    if not isinstance(subsets, dict):
        subsets = dict(enumerate(subsets))
    labels = instance.planted_labels
    worst = (-1.0, 0.0, 6.0, None)
    per = {}
    for i, G in subsets.items():
        i = int(i)
        if not 0 <= i < instance.k:
            raise InvalidInput(f"subset for unknown cluster {i}")
        members = np.flatnonzero(labels == i)
        G = members if G is None else np.unique(np.asarray(G, dtype=np.int64))
        if G.size == 0 or not np.isin(G, members).all():
            raise InvalidInput(f"subset {i} must be a non-empty subset of cluster {i}")
        eps = 1.0 - G.size / members.size
        if eps >= 0.5:
            raise InvalidInput(f"subset {i} drops a fraction {eps:.3f} >= 1/2 of its cluster")
        drift = float(np.linalg.norm(instance.points[G].mean(axis=0) - instance.params.means[i]))
        drift /= instance.sigma
        bound = subset_mean_bound(eps)
        per[i] = {"eps": eps, "drift": drift, "bound": bound}
        if drift / bound > worst[0]:
            worst = (drift / bound, drift, bound, i)
    _, drift, bound, i = worst
    witnesses = [i] if i is not None and drift > bound else []
    return _entry("subset_mean", bound, drift, witnesses, details={"per_cluster": per})


def extreme_subsets(instance: Instance, eps, direction=None) -> dict:
    """For each cluster, keep the ``1 - eps`` fraction with the largest projection.

    The default direction is the cluster's own mean drift (or its top
    principal direction when the drift is zero), which is where dropping the
    low end moves the subset mean the most.
    """
    out = {}
    xbar = instance.centered()
    for i in range(instance.k):
        idx = np.flatnonzero(instance.planted_labels == i)
        keep = int(math.ceil((1.0 - eps) * idx.size))
        v = direction
        if v is None:
            v = xbar[idx].mean(axis=0)
            if not np.any(v):
                v = topk_svd(xbar[idx], 1).basis[:, 0] if np.any(xbar[idx]) else np.eye(instance.d)[0]
        proj = xbar[idx] @ np.asarray(v)
        out[i] = idx[np.argsort(-proj, kind="stable")[:keep]]
    return out


def check_spectral(instance: Instance) -> ConditionEntry:
    """``||A - M|| / (sigma sqrt N)`` with M the empirical cluster means (bound 4)."""
    M = instance.empirical_means()[instance.planted_labels]
    R = instance.points - M
    val = spectral_norm(R) if np.any(R) else 0.0
    val /= instance.sigma * math.sqrt(instance.N)
    return _entry("spectral", 4.0, val)


def bad_direction_bound(d, N, lam, c=BAD_DIRECTION_CONSTANT) -> float:
    """``(c d / lam^2) * max(1, log(3 (sqrt d + 2 sqrt log N) / lam))``."""
    inner = 3.0 * (math.sqrt(d) + 2.0 * math.sqrt(math.log(max(N, 2)))) / lam
    return c * d / lam**2 * max(1.0, math.log(inner))


@dataclass(frozen=True)
class SearchBudget:
    random_directions: int = 4096
    singular_per_k: int = 2
    ascent_restarts: int = 64
    ascent_steps: int = 100


def _counts(xbar, E, thresh):
    return (np.abs(xbar @ E) > thresh).sum(axis=0)


def _ascent(xbar, starts, thresh, steps, lr=0.5):
    """Projected gradient ascent of a sigmoid-smoothed exceedance count on the sphere."""
    E = starts / np.linalg.norm(starts, axis=0, keepdims=True)
    temp = max(thresh, 1e-12) * 0.05
    best_E = E.copy()
    best_c = _counts(xbar, E, thresh)
    for _ in range(steps):
        P = xbar @ E
        z = np.clip((np.abs(P) - thresh) / temp, -50, 50)
        sig = 1.0 / (1.0 + np.exp(-z))
        w = sig * (1.0 - sig) * np.sign(P) / temp
        G = xbar.T @ w
        G -= E * np.einsum("ij,ij->j", E, G)
        gn = np.linalg.norm(G, axis=0, keepdims=True)
        gn[gn == 0] = 1.0
        E = E + lr * G / gn
        E /= np.linalg.norm(E, axis=0, keepdims=True)
        c = _counts(xbar, E, thresh)
        better = c > best_c
        best_c = np.where(better, c, best_c)
        best_E[:, better] = E[:, better]
    return best_E, best_c


def search_bad_directions(instance: Instance, lam, budget=None, stream=None,
                          directions=None) -> ConditionEntry:
    """Heuristic search for a unit direction with many points projecting beyond ``lam sigma``.

    Candidates: random directions, the top singular directions of the
    centered data, any caller-supplied ``directions`` (rows), and projected
    ascent restarted from the longest points and from the best candidates so
    far. Ties keep the first candidate found; the order is deterministic.
    """
    budget = budget or SearchBudget()
    stream = as_stream(stream if stream is not None else SeedTree(instance.seed).child("baddir"))
    xbar = instance.centered() / instance.sigma
    N, d = xbar.shape
    lam = float(lam)
    bound = bad_direction_bound(d, N, lam)
    status = "ok" if lam > 100.0 * math.sqrt(math.log(max(N, 2))) else "outside-lemma-regime"
    # |<x, e>| <= |x|, so only points longer than lam can ever be counted
    norms = np.linalg.norm(xbar, axis=1)
    reach = np.flatnonzero(norms > lam)
    if reach.size == 0:
        return _entry("bad_directions", bound, 0, (), status,
                      {"lambda": lam, "direction": None, "count": 0, "exact": True})
    full = xbar
    xbar = xbar[reach]
    cands = [sample_unit_directions(d, budget.random_directions, stream.child("random")).T]
    if np.any(xbar):
        ns = min(budget.singular_per_k * instance.k, min(xbar.shape[0], d))
        cands.append(topk_svd(xbar, ns).basis)
    if directions is not None:
        extra = np.atleast_2d(np.asarray(directions, dtype=np.float64)).T
        cands.append(extra / np.linalg.norm(extra, axis=0, keepdims=True))
    E = np.hstack(cands)
    counts = np.concatenate([_counts(xbar, E[:, j:j + 512], lam) for j in range(0, E.shape[1], 512)])
    if budget.ascent_restarts > 0 and np.any(xbar):
        norms = norms[reach]
        half = budget.ascent_restarts // 2
        starts = [xbar[np.argsort(-norms, kind="stable")[:half]].T]
        starts.append(E[:, np.argsort(-counts, kind="stable")[: budget.ascent_restarts - half]])
        S = np.hstack(starts)
        S = S[:, np.linalg.norm(S, axis=0) > 0]
        if S.shape[1]:
            E2, c2 = _ascent(xbar, S, lam, budget.ascent_steps)
            E = np.hstack([E, E2])
            counts = np.concatenate([counts, c2])
    j = int(np.argmax(counts))
    best = E[:, j]
    hits = np.flatnonzero(np.abs(full @ best) > lam)
    return _entry("bad_directions", bound, counts[j], hits, status,
                  {"lambda": lam, "direction": best.tolist(), "count": int(counts[j]),
                   "exact": False})


def check_all(instance: Instance, lam=None, budget=None, stream=None) -> ConditionReport:
    """Every checker on one instance; ``lam`` defaults to ``120 sqrt log N``."""
    if lam is None:
        lam = 120.0 * math.sqrt(math.log(max(instance.N, 2)))
    entries = [
        check_length(instance),
        check_innerprod_means(instance),
        check_mean_drift(instance),
        check_variance(instance),
    ]
    if instance.N >= 2:
        eligible = {i: G for i, G in extreme_subsets(instance, 0.25).items()}
        entries.append(check_subset_mean(instance, eligible))
    entries.append(check_spectral(instance))
    entries.append(search_bad_directions(instance, lam, budget, stream))
    return ConditionReport(entries)
