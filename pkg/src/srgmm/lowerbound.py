"""Paired-cluster construction where locally optimal solutions misplace designated points.

Clusters come in pairs ``(2p, 2p + 1)`` whose means are ``delta * sigma``
apart, with different pairs ``M_factor * delta * sigma`` or more apart. In
the first cluster of each pair the first ``m`` sampled points form ``Z_p``.
Their summed offset fixes a unit direction ``e_p``, and the second cluster is
half-space collapsed along ``e_p``, which drags its empirical mean about
``sigma / sqrt(2 pi)`` toward the points of ``Z_p``. With an odd ``k`` the last
cluster stays unpaired and untouched.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .adversary import HalfspaceCollapse, perturb
from .errors import ConstructionError, InvalidInput, InvalidParams
from .evaluation import is_locally_optimal, match_labels
from .generate import equal_sizes, sample_instance
from .lloyd import DEFAULT_DRIFT_TOL, run_lloyd
from .model import Clustering, Instance, MixtureParams
from .rng import as_stream, sample_unit_direction

PASS_FRACTION = 0.9
MIN_M_FACTOR = 10.0


class LowerBoundWarning(UserWarning):
    """A hypothesis of the construction's analysis is not met (the build still proceeds)."""


@dataclass(frozen=True, eq=False)
class LowerBoundInstance:
    instance: Instance
    m: int
    Z: tuple  # per pair, the designated indices in the first cluster
    e_hats: np.ndarray  # one unit row per pair
    M_factor: float
    pairing: tuple  # (first, second) cluster indices
    u_norms: tuple = ()
    regime: dict = field(default_factory=dict)

    @property
    def designated(self) -> np.ndarray:
        if not self.Z:
            return np.empty(0, dtype=np.int64)
        return np.concatenate([np.asarray(z, dtype=np.int64) for z in self.Z])

    def to_json(self):
        return {
            "m": self.m,
            "M_factor": self.M_factor,
            "pairing": [list(p) for p in self.pairing],
            "Z": [list(map(int, z)) for z in self.Z],
            "e_hats": self.e_hats.tolist(),
            "u_norms": list(self.u_norms),
            "regime": self.regime,
        }


@dataclass(frozen=True)
class LowerBoundCertificate:
    points: tuple  # (index, misclassified) per designated point
    mean_offsets: tuple  # per pair, second-cluster mean shift along e_p in sigma units
    misclassified: int
    designated: int
    threshold: float
    locally_optimal: bool
    passed: bool

    def to_json(self):
        return {
            "points": [{"index": int(i), "misclassified": bool(b)} for i, b in self.points],
            "mean_offsets": list(self.mean_offsets),
            "misclassified": self.misclassified,
            "designated": self.designated,
            "threshold": self.threshold,
            "locally_optimal": self.locally_optimal,
            "pass": self.passed,
        }


def _pair_means(d, k, delta, sigma, M_factor, stream):
    n_groups = (k + 1) // 2
    step = M_factor * delta * sigma
    g = stream.child("anchors").generator()
    if d >= n_groups:
        q, _ = np.linalg.qr(g.standard_normal((d, n_groups)))
        anchors = step * q.T
    else:
        # too few dimensions for orthogonal anchors: space them along a line
        e = sample_unit_direction(d, stream.child("line"))
        anchors = np.outer(np.arange(n_groups) * (step + 2 * delta * sigma), e)
    means = np.empty((k, d))
    for p in range(n_groups):
        means[2 * p] = anchors[p]
        if 2 * p + 1 < k:
            v = sample_unit_direction(d, stream.child("partner", p))
            means[2 * p + 1] = anchors[p] + delta * sigma * v
    return means


def regime_flags(d, k, N, delta, m) -> dict:
    """Which of the analysis' side conditions the parameters satisfy."""
    log_d = math.log(d) if d > 1 else 0.0
    n0 = k**2 * d**1.5 * math.log(k * d) ** 2 if k * d > 1 else 0.0
    return {
        "m_log_m": bool(m <= 1 or 64 * m * math.log(m) <= d),
        "delta_le_d_over_4logd": bool(log_d > 0 and delta <= d / (4 * log_d)),
        "delta_le_d_over_64logd": bool(log_d > 0 and delta <= d / (64 * log_d)),
        "N_ge_N0": bool(N >= n0),
    }


def build_lowerbound(d, k, N, Delta, m, M_factor=100.0, sigma=1.0, stream=0) -> LowerBoundInstance:
    """Build the paired construction (see the module docstring).

    Hard errors: ``k < 2``, ``sqrt(log N) > Delta``, ``m > N / (2k)``,
    ``M_factor < 10``. Unmet analysis hypotheses (``64 m log m <= d``, the
    sample-size and separation regimes) only raise :class:`LowerBoundWarning`
    and are recorded in ``regime``.
    """
    d, k, N, m = int(d), int(k), int(N), int(m)
    if k < 2:
        raise InvalidParams("need k >= 2")
    if math.sqrt(math.log(N)) > Delta:
        raise InvalidParams(f"need sqrt(log N) <= Delta, got {math.sqrt(math.log(N)):.3f} > {Delta}")
    if m < 0 or m > N / (2 * k):
        raise InvalidParams(f"need 0 <= m <= N/(2k) = {N / (2 * k):.1f}, got m={m}")
    if M_factor < MIN_M_FACTOR:
        raise InvalidParams(f"need M_factor >= {MIN_M_FACTOR}, got {M_factor}")
    regime = regime_flags(d, k, N, Delta, m)
    if not regime["m_log_m"]:
        warnings.warn(f"64 m log m = {64 * m * math.log(m):.1f} exceeds d = {d}", LowerBoundWarning,
                      stacklevel=2)
    if not regime["N_ge_N0"]:
        warnings.warn("N is below k^2 d^1.5 log^2(kd)", LowerBoundWarning, stacklevel=2)
    stream = as_stream(stream)
    means = _pair_means(d, k, Delta, sigma, M_factor, stream.child("means"))
    params = MixtureParams(means, sigma, equal_sizes(N, k))
    inst = sample_instance(params, stream.child("sample"), seed=stream.root_seed)

    starts = np.concatenate([[0], np.cumsum(params.cluster_sizes)])
    pairing = tuple((2 * p, 2 * p + 1) for p in range(k // 2))
    Z, e_hats, u_norms = [], [], []
    xbar = inst.centered()
    for first, _ in pairing:
        z = np.arange(starts[first], starts[first] + m)
        Z.append(tuple(int(t) for t in z))
        if m == 0:
            e = sample_unit_direction(d, stream.child("empty_z", first))
            u_norms.append(0.0)
        else:
            u = xbar[z].sum(axis=0) / (sigma * math.sqrt(m * d))
            u_norms.append(float(np.linalg.norm(u)))
            e = u / np.linalg.norm(u)
            floor = 0.5 * sigma * math.sqrt(d / m)
            low = (xbar[z] @ e).min()
            if low < floor:
                raise ConstructionError(
                    f"designated point projects {low / sigma:.3f} sigma on e, below {floor / sigma:.3f}")
        e_hats.append(e)
    e_hats = np.array(e_hats).reshape(len(pairing), d)
    if pairing:
        spec = HalfspaceCollapse(directions=tuple(map(tuple, e_hats)),
                                 clusters=tuple(s for _, s in pairing))
        inst = perturb(inst, spec, stream.child("adversary"))
    return LowerBoundInstance(inst, m, tuple(Z), e_hats, float(M_factor), pairing,
                              tuple(u_norms), regime)


def mean_offsets(lb: LowerBoundInstance, centers=None) -> tuple:
    """Shift of each second cluster's mean along its pair direction, in sigma units.

    Uses the planted empirical means unless ``centers`` (indexed by planted
    cluster) is given.
    """
    inst = lb.instance
    c = inst.empirical_means() if centers is None else np.asarray(centers)
    return tuple(float((c[s] - inst.params.means[s]) @ lb.e_hats[p]) / inst.sigma
                 for p, (_, s) in enumerate(lb.pairing))


def certify(lb: LowerBoundInstance, clustering: Clustering) -> LowerBoundCertificate:
    """Count designated points whose matched label differs from the planted one."""
    inst = lb.instance
    if clustering.labels.shape != (inst.N,) or clustering.k != inst.k:
        raise InvalidInput("clustering does not belong to this instance")
    ok, _ = is_locally_optimal(inst.points, clustering.labels, inst.k, inst.sigma)
    if not ok:
        warnings.warn("certifying a clustering that is not locally optimal", LowerBoundWarning,
                      stacklevel=2)
    perm = match_labels(inst.planted_labels, clustering.labels, inst.k)
    idx = lb.designated
    wrong = perm[clustering.labels[idx]] != inst.planted_labels[idx]
    total = int(idx.size)
    count = int(wrong.sum())
    threshold = PASS_FRACTION * total
    return LowerBoundCertificate(
        points=tuple((int(i), bool(w)) for i, w in zip(idx, wrong)),
        mean_offsets=mean_offsets(lb),
        misclassified=count,
        designated=total,
        threshold=threshold,
        locally_optimal=ok,
        passed=bool(count >= threshold - 1e-9),
    )


def lloyd_from_planted(lb: LowerBoundInstance, max_iters=1000, drift_tol=DEFAULT_DRIFT_TOL):
    """Lloyd started at the planted empirical means; returns ``(clustering, trace)``."""
    return run_lloyd(lb.instance, lb.instance.empirical_means(), max_iters, drift_tol)
