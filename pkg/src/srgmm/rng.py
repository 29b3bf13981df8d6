"""Reproducible random streams addressed by a root seed and a label path.

Every stream is a Philox counter-based generator keyed by a hash of
``(root_seed, path)``, so the draws for ``cluster/3`` do not depend on how
many numbers were consumed by ``cluster/2`` or on evaluation order.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

from .errors import InvalidParams
from .model import Covariance


@dataclass(frozen=True)
class SeedTree:
    root_seed: int
    path: tuple = ()

    def __post_init__(self):
        seed = int(self.root_seed)
        if not 0 <= seed < 2**64:
            raise InvalidParams("root seed must be an unsigned 64-bit integer")
        object.__setattr__(self, "root_seed", seed)
        object.__setattr__(self, "path", tuple(str(p) for p in self.path))

    def child(self, *labels) -> "SeedTree":
        return SeedTree(self.root_seed, self.path + tuple(str(x) for x in labels))

    def key(self) -> np.ndarray:
        h = hashlib.blake2b(digest_size=16, person=b"srgmm-seedtree")
        h.update(self.root_seed.to_bytes(8, "little"))
        for p in self.path:
            b = p.encode("utf-8")
            h.update(len(b).to_bytes(4, "little"))
            h.update(b)
        return np.frombuffer(h.digest(), dtype="<u8").copy()

    def generator(self) -> np.random.Generator:
        return np.random.Generator(np.random.Philox(key=self.key()))

    def __str__(self):
        return "/".join((str(self.root_seed),) + self.path)


def as_stream(stream) -> SeedTree:
    if isinstance(stream, SeedTree):
        return stream
    return SeedTree(int(stream))


def sample_gaussian(mean, covariance, sigma, count, stream) -> np.ndarray:
    """Draw ``count`` independent rows from N(mean, covariance).

    ``covariance`` is a :class:`Covariance` (or a scalar std for the spherical
    case) whose spectral norm must not exceed ``sigma**2``.
    """
    sigma = float(sigma)
    if not sigma > 0:
        raise InvalidParams("sigma must be positive")
    mean = np.asarray(mean, dtype=np.float64)
    if mean.ndim != 1:
        raise InvalidParams("mean must be a vector")
    if not isinstance(covariance, Covariance):
        covariance = Covariance.spherical(covariance)
    if covariance.spectral_norm() > sigma**2 + 1e-9:
        raise InvalidParams("covariance spectral norm exceeds sigma^2")
    d = mean.shape[0]
    count = int(count)
    if count < 0:
        raise InvalidParams("count must be non-negative")
    if count == 0:
        return np.empty((0, d))
    z = as_stream(stream).generator().standard_normal((count, d))
    if covariance.kind == "spherical":
        return mean + covariance.value * z
    if covariance.kind == "diagonal":
        return mean + z * np.sqrt(covariance.value)
    # eigh tolerates singular PSD matrices where Cholesky would not
    w, v = np.linalg.eigh(covariance.value)
    root = v * np.sqrt(np.clip(w, 0.0, None))
    return mean + z @ root.T


def sample_unit_direction(d, stream) -> np.ndarray:
    d = int(d)
    if d < 1:
        raise InvalidParams("dimension must be at least 1")
    g = as_stream(stream).generator()
    while True:
        v = g.standard_normal(d)
        n = np.linalg.norm(v)
        if n > 0:
            return v / n


def sample_unit_directions(d, count, stream) -> np.ndarray:
    """``count`` isotropic unit vectors as rows, from one stream."""
    d = int(d)
    if d < 1:
        raise InvalidParams("dimension must be at least 1")
    v = as_stream(stream).generator().standard_normal((int(count), d))
    n = np.linalg.norm(v, axis=1, keepdims=True)
    n[n == 0] = 1.0
    return v / n
