"""Sampling of planted instances (before and after the adversary)."""

from __future__ import annotations

import numpy as np

from .errors import InvalidParams
from .model import Covariance, Instance, MixtureParams, _min_pairwise_distance
from .rng import as_stream, sample_gaussian


def random_means(k, d, delta, sigma, stream) -> np.ndarray:
    """k random means rescaled so the closest pair is exactly ``delta * sigma`` apart."""
    if k < 1 or d < 1:
        raise InvalidParams("k and d must be positive")
    if k == 1:
        return np.zeros((1, d))
    g = as_stream(stream).generator()
    for _ in range(100):
        m = g.standard_normal((k, d))
        dmin = _min_pairwise_distance(m)
        if dmin > 1e-8:
            return m * (delta * sigma / dmin)
    raise InvalidParams("could not draw distinct means")


def sizes_from_weights(weights, N, stream) -> tuple:
    """Multinomial cluster sizes; every component must receive at least one point."""
    w = np.asarray(weights, dtype=np.float64)
    if w.ndim != 1 or np.any(w < 0) or w.sum() <= 0:
        raise InvalidParams("weights must be non-negative with positive sum")
    sizes = as_stream(stream).generator().multinomial(int(N), w / w.sum())
    if np.any(sizes == 0):
        raise InvalidParams(f"multinomial draw left an empty component: {sizes.tolist()}")
    return tuple(int(s) for s in sizes)


def equal_sizes(N, k) -> tuple:
    base, rem = divmod(int(N), int(k))
    return tuple(base + (1 if i < rem else 0) for i in range(k))


def make_params(k, d, N, delta, sigma=1.0, sizes=None, weights=None, covariance="spherical",
                stream=0) -> MixtureParams:
    """Build mixture parameters from a recipe.

    ``covariance`` is ``"spherical"`` (std sigma in every direction) or
    ``"diagonal"`` (random per-coordinate variances in [sigma^2/4, sigma^2],
    largest pinned to sigma^2).
    """
    stream = as_stream(stream)
    means = random_means(k, d, delta, sigma, stream.child("means"))
    if sizes is None and weights is None:
        sizes = equal_sizes(N, k)
    elif sizes is None:
        sizes = sizes_from_weights(weights, N, stream.child("sizes"))
    elif sum(sizes) != N:
        raise InvalidParams(f"sizes sum to {sum(sizes)}, expected N={N}")
    if covariance == "spherical":
        covs = None
    elif covariance == "diagonal":
        covs = []
        for i in range(k):
            v = stream.child("cov", i).generator().uniform(0.25, 1.0, d) * sigma**2
            v[np.argmax(v)] = sigma**2
            covs.append(Covariance("diagonal", v))
    else:
        raise InvalidParams(f"unsupported covariance recipe {covariance!r}")
    return MixtureParams(means, sigma, sizes, covs)


def sample_instance(params: MixtureParams, stream, seed=None) -> Instance:
    """Draw the Gaussian points of every component, clusters laid out contiguously.

    The result is unperturbed: ``points`` and ``pre_perturbation_points`` coincide.
    """
    stream = as_stream(stream)
    blocks = [
        sample_gaussian(params.means[i], params.covariances[i], params.sigma,
                        params.cluster_sizes[i], stream.child("cluster", i))
        for i in range(params.k)
    ]
    pts = np.vstack(blocks) if blocks else np.empty((0, params.d))
    labels = np.repeat(np.arange(params.k), params.cluster_sizes)
    return Instance(pts, labels, params, seed=stream.root_seed if seed is None else seed,
                    pre_perturbation_points=pts)


def generate(params: MixtureParams, adversary=None, stream=0) -> Instance:
    """Full semi-random pipeline: sample the mixture, then apply the adversary."""
    from .adversary import Identity, perturb

    stream = as_stream(stream)
    inst = sample_instance(params, stream.child("sample"), seed=stream.root_seed)
    return perturb(inst, adversary if adversary is not None else Identity(),
                   stream.child("adversary"))
