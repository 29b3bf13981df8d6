"""Monotone adversaries: each point may only slide toward its own mean.

Every strategy reduces to one shrink factor ``lam[t]`` in [0, 1] per point,
applied as ``x = mu + lam * (y - mu)``. Factors of exactly 0 and 1 are applied
without arithmetic so collapsed points equal the mean and untouched points
equal their draw bit-for-bit.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .errors import InvalidParams, InvalidSpec
from .model import Instance
from .rng import as_stream, sample_unit_direction

UNIT_TOL = 1e-9


@dataclass(frozen=True)
class Identity:
    kind = "identity"

    def to_json(self):
        return {"kind": self.kind}


@dataclass(frozen=True)
class UniformShrink:
    """Shrink factor drawn per point: ``constant`` lam, or ``uniform`` on [low, high]."""

    dist: str = "constant"
    lam: float = 1.0
    low: float = 0.0
    high: float = 1.0
    kind = "uniform_shrink"

    def __post_init__(self):
        if self.dist == "constant":
            if not 0.0 <= self.lam <= 1.0:
                raise InvalidSpec("constant shrink factor must lie in [0, 1]")
        elif self.dist == "uniform":
            if not 0.0 <= self.low <= self.high <= 1.0:
                raise InvalidSpec("uniform shrink needs 0 <= low <= high <= 1")
        else:
            raise InvalidSpec(f"unknown shrink distribution {self.dist!r}")

    def to_json(self):
        if self.dist == "constant":
            return {"kind": self.kind, "dist": "constant", "lam": self.lam}
        return {"kind": self.kind, "dist": "uniform", "low": self.low, "high": self.high}


@dataclass(frozen=True)
class CoreCollapse:
    """Collapse a ``p`` fraction of every cluster onto its mean, leave the rest."""

    p: float = 0.5
    kind = "core_collapse"

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise InvalidSpec("core fraction must lie in [0, 1]")

    def to_json(self):
        return {"kind": self.kind, "p": self.p}


@dataclass(frozen=True)
class HalfspaceCollapse:
    """Send points on the negative side of a per-cluster direction to the mean.

    ``directions`` is ``"random"`` (one isotropic direction per cluster from the
    stream) or a list of unit vectors aligned with ``clusters``. ``clusters``
    restricts the map to some components; ``None`` means all of them.
    """

    directions: Union[str, tuple] = "random"
    clusters: Optional[tuple] = None
    kind = "halfspace_collapse"

    def __post_init__(self):
        if isinstance(self.directions, str):
            if self.directions != "random":
                raise InvalidSpec(f"unknown direction source {self.directions!r}")
        else:
            dirs = tuple(tuple(float(x) for x in v) for v in self.directions)
            for v in dirs:
                if abs(np.linalg.norm(v) - 1.0) > UNIT_TOL:
                    raise InvalidSpec("halfspace directions must be unit vectors")
            object.__setattr__(self, "directions", dirs)
            if self.clusters is not None and len(self.clusters) != len(dirs):
                raise InvalidSpec("one direction is needed per listed cluster")
        if self.clusters is not None:
            object.__setattr__(self, "clusters", tuple(int(c) for c in self.clusters))
            if any(c < 0 for c in self.clusters):
                raise InvalidSpec("cluster indices must be non-negative")

    def to_json(self):
        out = {"kind": self.kind}
        out["directions"] = (self.directions if isinstance(self.directions, str)
                             else [list(v) for v in self.directions])
        if self.clusters is not None:
            out["clusters"] = list(self.clusters)
        return out


@dataclass(frozen=True)
class MeanShift(HalfspaceCollapse):
    """Move each cluster's empirical mean along its direction.

    Realized exactly as :class:`HalfspaceCollapse`; the shift is fixed at
    ``sigma / sqrt(2 pi)`` for spherical components and has no free strength.
    """

    kind = "mean_shift"


AdversarySpec = Union[Identity, UniformShrink, CoreCollapse, HalfspaceCollapse, MeanShift]

_KINDS = {
    "identity": Identity,
    "uniform_shrink": UniformShrink,
    "core_collapse": CoreCollapse,
    "halfspace_collapse": HalfspaceCollapse,
    "mean_shift": MeanShift,
}

_ALLOWED_KEYS = {
    "identity": set(),
    "uniform_shrink": {"dist", "lam", "low", "high"},
    "core_collapse": {"p"},
    "halfspace_collapse": {"directions", "clusters"},
    "mean_shift": {"directions", "clusters"},
}


def spec_from_json(obj) -> AdversarySpec:
    if isinstance(obj, str):
        obj = json.loads(obj)
    if not isinstance(obj, dict) or "kind" not in obj:
        raise InvalidSpec("adversary spec must be an object with a 'kind'")
    kind = obj["kind"]
    if kind not in _KINDS:
        raise InvalidSpec(f"unknown adversary kind {kind!r}")
    extra = set(obj) - {"kind"} - _ALLOWED_KEYS[kind]
    if extra:
        raise InvalidSpec(f"unknown keys for {kind}: {sorted(extra)}")
    kwargs = {k: v for k, v in obj.items() if k != "kind"}
    if "clusters" in kwargs and kwargs["clusters"] is not None:
        kwargs["clusters"] = tuple(kwargs["clusters"])
    try:
        return _KINDS[kind](**kwargs)
    except TypeError as exc:
        raise InvalidSpec(str(exc)) from None


def describe(spec: AdversarySpec) -> str:
    """Canonical one-line descriptor stored in instance provenance."""
    return json.dumps(spec.to_json(), sort_keys=True, separators=(",", ":"))


def halfspace_collapse_map(y, mu, e_hat):
    """Return ``mu`` if ``<y - mu, e_hat> < 0`` else ``y``; the boundary keeps ``y``."""
    e_hat = np.asarray(e_hat, dtype=np.float64)
    if abs(np.linalg.norm(e_hat) - 1.0) > UNIT_TOL:
        raise InvalidParams("e_hat must be a unit vector")
    y = np.asarray(y, dtype=np.float64)
    mu = np.asarray(mu, dtype=np.float64)
    return mu.copy() if np.dot(y - mu, e_hat) < 0 else y.copy()


def _halfspace_lambdas(spec, inst, stream):
    k = inst.k
    clusters = spec.clusters if spec.clusters is not None else tuple(range(k))
    if any(c >= k for c in clusters):
        raise InvalidSpec(f"adversary references cluster index >= k={k}")
    if isinstance(spec.directions, str):
        dirs = [sample_unit_direction(inst.d, stream.child("direction", c)) for c in clusters]
    else:
        if len(spec.directions) != len(clusters):
            raise InvalidSpec("one direction is needed per cluster")
        dirs = [np.asarray(v) for v in spec.directions]
        if any(v.shape != (inst.d,) for v in dirs):
            raise InvalidSpec(f"directions must have dimension {inst.d}")
    lam = np.ones(inst.N)
    labels = inst.planted_labels
    for c, e in zip(clusters, dirs):
        idx = np.flatnonzero(labels == c)
        proj = (inst.points[idx] - inst.params.means[c]) @ e
        lam[idx[proj < 0]] = 0.0
    return lam


def shrink_factors(spec: AdversarySpec, inst: Instance, stream) -> np.ndarray:
    """Per-point shrink factors in [0, 1] for ``spec`` on ``inst``."""
    stream = as_stream(stream)
    if isinstance(spec, Identity):
        return np.ones(inst.N)
    if isinstance(spec, UniformShrink):
        if spec.dist == "constant":
            return np.full(inst.N, float(spec.lam))
        lam = np.empty(inst.N)
        for i in range(inst.k):
            idx = np.flatnonzero(inst.planted_labels == i)
            lam[idx] = stream.child("shrink", i).generator().uniform(spec.low, spec.high, idx.size)
        return lam
    if isinstance(spec, CoreCollapse):
        lam = np.ones(inst.N)
        for i in range(inst.k):
            idx = np.flatnonzero(inst.planted_labels == i)
            n_core = int(round(spec.p * idx.size))
            chosen = stream.child("core", i).generator().permutation(idx.size)[:n_core]
            lam[idx[chosen]] = 0.0
        return lam
    if isinstance(spec, HalfspaceCollapse):
        return _halfspace_lambdas(spec, inst, stream)
    raise InvalidSpec(f"unsupported adversary {spec!r}")


def apply_shrink(points, means_per_point, lam):
    lam = np.asarray(lam, dtype=np.float64)
    if np.any(lam < 0) or np.any(lam > 1):
        raise InvalidSpec("shrink factors must lie in [0, 1]")
    out = means_per_point + lam[:, None] * (points - means_per_point)
    keep = lam == 1.0
    out[keep] = points[keep]
    zero = lam == 0.0
    out[zero] = means_per_point[zero]
    return out


def perturb(inst: Instance, spec: AdversarySpec, stream) -> Instance:
    """Apply ``spec`` to ``inst``; the input points become the pre-perturbation points."""
    lam = shrink_factors(spec, inst, stream)
    mu = inst.params.means[inst.planted_labels]
    x = apply_shrink(inst.points, mu, lam)
    return inst.replace(points=x, pre_perturbation_points=inst.points, adversary=describe(spec))
