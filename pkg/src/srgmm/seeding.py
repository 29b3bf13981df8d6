"""Initial centers for Lloyd: D^2 sampling on a k-SVD projection, plus boosting.

``weak_init`` projects the data onto its top-k right singular subspace, seeds
with D^2 sampling and runs Lloyd to convergence there, then lifts each cell
back to the mean of its original points.

``strong_init`` first maps the data through the boosting transform: points
are split into halves S1, S2, joined in a graph whenever they are within
``gamma`` of each other, and every S1 point becomes the row
``A'[i, j] = <A_i - mu_Q, B_j - mu_Q>`` if S2 point j lies in the same graph
component Q, and a large sentinel ``L`` otherwise. The weak procedure runs on
those rows, and the resulting partition of S1 is averaged in the original
space.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.sparse.csgraph import connected_components
from scipy.sparse.linalg import LinearOperator

from .errors import InvalidInput, SplitError
from .linalg import squared_distances, topk_svd
from .lloyd import lloyd
from .model import Instance, cluster_means
from .rng import as_stream

SPLIT_ATTEMPTS = 8
SENTINEL_FACTOR = 1e6


class SmallSampleWarning(UserWarning):
    """Sample size is below what the boosting analysis asks for."""


class DisconnectedClusterWarning(UserWarning):
    """A planted cluster is split across several distance-graph components."""


def dsquared_seed(points, k, stream) -> np.ndarray:
    """k-means++ seeding: uniform first center, then proportional to D^2.

    Returns ``k`` distinct rows of ``points``.
    """
    X = np.asarray(points, dtype=np.float64)
    n = X.shape[0]
    k = int(k)
    if k < 1 or n < k:
        raise InvalidInput(f"need at least k={k} points, got {n}")
    g = as_stream(stream).generator()
    chosen = [int(g.integers(n))]
    diff = X - X[chosen[0]]
    d2 = np.einsum("ij,ij->i", diff, diff)
    for _ in range(1, k):
        total = d2.sum()
        if not total > 0:
            raise InvalidInput(f"fewer than k={k} distinct points")
        cum = np.cumsum(d2)
        for _attempt in range(n):
            idx = int(np.searchsorted(cum, g.random() * cum[-1], side="right"))
            idx = min(idx, n - 1)
            if d2[idx] > 0:
                break
        else:
            raise InvalidInput("D^2 sampling kept hitting chosen centers")
        chosen.append(idx)
        diff = X - X[idx]
        np.minimum(d2, np.einsum("ij,ij->i", diff, diff), out=d2)
    return X[chosen].copy()


def cluster_in_space(coords, k, stream, max_iters=300):
    """D^2 seeding followed by Lloyd to convergence. Returns ``(centers, labels)``."""
    seeds = dsquared_seed(coords, k, stream)
    centers, labels, _, _ = lloyd(coords, seeds, max_iters=max_iters, drift_tol=0.0,
                                  exact=True)
    return centers, labels


def _lift(points, labels, k, fallback):
    means = cluster_means(points, labels, k)
    empty = np.isnan(means[:, 0])
    means[empty] = fallback[empty]
    return means


def weak_init(instance, k, stream) -> np.ndarray:
    """Centers from k-SVD projection + D^2 seeding + in-space Lloyd."""
    A = instance.points if isinstance(instance, Instance) else np.asarray(instance, np.float64)
    k = int(k)
    if A.shape[0] < k:
        raise InvalidInput(f"need at least k={k} points")
    if k == 1:
        return A.mean(axis=0, keepdims=True)
    proj = topk_svd(A, k)
    coords = proj.project(A)
    centers, labels = cluster_in_space(coords, k, as_stream(stream).child("weak"))
    return _lift(A, labels, k, centers @ proj.basis.T)


def weak_init_bound(instance: Instance, alpha=1.0) -> float:
    """``20 sqrt(k alpha) ||A - M*|| / sqrt(N w_min)``, the guaranteed center radius."""
    from .linalg import spectral_norm

    k = instance.k
    dev = spectral_norm(instance.centered())
    return float(20.0 * math.sqrt(k * alpha) * dev / math.sqrt(instance.N * instance.params.w_min))


def distance_graph_components(points, gamma, block=512) -> np.ndarray:
    """Connected components of the graph joining points at distance <= gamma.

    Points are sorted by their projection on the top principal direction;
    since projection is 1-Lipschitz, a block only needs the points whose
    projection lies within ``gamma`` of its own. The upper triangle is swept
    block by block and only a representative forest is kept between blocks.
    Component ids are ordered by the smallest point index they contain.
    """
    X0 = np.asarray(points, dtype=np.float64)
    n = X0.shape[0]
    if n == 0:
        return np.empty(0, dtype=np.int64)
    centered = X0 - X0.mean(axis=0)
    if n > 1 and np.any(centered):
        axis = topk_svd(centered, 1).basis[:, 0]
        order = np.argsort(centered @ axis, kind="stable")
        proj = (centered @ axis)[order]
    else:
        order = np.arange(n)
        proj = np.zeros(n)
    X = centered[order]
    rep = np.arange(n)
    sq = np.einsum("ij,ij->i", X, X)
    g2 = float(gamma) ** 2
    ident = np.arange(n)
    for s in range(0, n, block):
        e = min(n, s + block)
        hi = int(np.searchsorted(proj, proj[e - 1] + gamma, side="right"))
        D2 = sq[s:e, None] - 2.0 * (X[s:e] @ X[s:hi].T) + sq[None, s:hi]
        r, c = np.nonzero(D2 <= g2)
        a = rep[r + s]
        b = rep[c + s]
        m = a != b
        if not m.any():
            continue
        keys = np.unique(a[m].astype(np.int64) * n + b[m])
        pa, pb = keys // n, keys % n
        rows = np.concatenate([ident, pa])
        cols = np.concatenate([rep, pb])
        G = sparse.coo_matrix((np.ones(rows.size, dtype=np.int8), (rows, cols)), shape=(n, n))
        ncomp, cc = connected_components(G, directed=False)
        smallest = np.full(ncomp, n)
        np.minimum.at(smallest, cc, ident)
        rep = smallest[cc]
    # back to input order, then number components by their smallest member
    rep_orig = np.empty(n, dtype=np.int64)
    rep_orig[order] = order[rep]
    first = np.full(n, n)
    np.minimum.at(first, rep_orig, np.arange(n))
    _, comp = np.unique(first[rep_orig], return_inverse=True)
    return comp.astype(np.int64)


@dataclass(eq=False)
class BoostedSpace:
    """The boosting transform in factored form.

    ``A'`` is never required in memory: :meth:`operator` applies it from the
    centered halves. :attr:`mapped_points` materializes it on demand.
    """

    S1: np.ndarray
    S2: np.ndarray
    graph_components: np.ndarray  # component id of every point of the instance
    component_means: np.ndarray
    L: float
    gamma: float
    A_centered: np.ndarray
    B_centered: np.ndarray

    @property
    def shape(self):
        return (self.S1.size, self.S2.size)

    @property
    def comp1(self):
        return self.graph_components[self.S1]

    @property
    def comp2(self):
        return self.graph_components[self.S2]

    @property
    def n_components(self) -> int:
        return int(self.component_means.shape[0])

    def _apply(self, left, cl, right, cr, V):
        # rows indexed by `left`, contraction over `right`
        q = self.n_components
        V = np.asarray(V, dtype=np.float64)
        if V.ndim == 1:
            return self._apply(left, cl, right, cr, V[:, None])[:, 0]
        P = sparse.csr_matrix((np.ones(cr.size), (cr, np.arange(cr.size))), shape=(q, cr.size))
        s = P @ V
        # sum over the other components via prefix/suffix sums, so the
        # sentinel term is exactly zero with a single component
        zero = np.zeros((1, V.shape[1]))
        prefix = np.vstack([zero, np.cumsum(s, axis=0)[:-1]])
        suffix = np.vstack([np.cumsum(s[::-1], axis=0)[::-1][1:], zero])
        cross = prefix + suffix
        out = np.empty((cl.size, V.shape[1]))
        for j in range(V.shape[1]):
            W = P @ (right * V[:, j:j + 1])
            out[:, j] = np.einsum("id,id->i", left, W[cl]) + self.L * cross[cl, j]
        return out

    def matmat(self, V):
        return self._apply(self.A_centered, self.comp1, self.B_centered, self.comp2, V)

    def rmatmat(self, U):
        return self._apply(self.B_centered, self.comp2, self.A_centered, self.comp1, U)

    def operator(self) -> LinearOperator:
        return LinearOperator(self.shape, matvec=self.matmat, rmatvec=self.rmatmat,
                              matmat=self.matmat, rmatmat=self.rmatmat, dtype=np.float64)

    @property
    def mapped_points(self) -> np.ndarray:
        G = self.A_centered @ self.B_centered.T
        G[self.comp1[:, None] != self.comp2[None, :]] = self.L
        return G

    def mapped_means(self, labels1, k) -> np.ndarray:
        """Mean row of ``A'`` over each group of S1 points (k x |S2|)."""
        labels1 = np.asarray(labels1)
        counts = np.bincount(labels1, minlength=k)
        ind = np.zeros((labels1.size, k))
        ind[np.arange(labels1.size), labels1] = 1.0
        sums = self.rmatmat(ind).T
        out = np.full_like(sums, np.nan)
        nz = counts > 0
        out[nz] = sums[nz] / counts[nz, None]
        return out


def boost_gamma(sigma, d, N) -> float:
    return 4.0 * sigma * (math.sqrt(d) + math.sqrt(math.log(N)))


def boost_transform(instance: Instance, stream, gamma=None) -> BoostedSpace:
    """Random half-split, distance graph, and the component-relative inner-product map."""
    stream = as_stream(stream)
    sizes = np.asarray(instance.params.cluster_sizes)
    if np.any(sizes < 2):
        raise InvalidInput("every cluster needs at least two points to be split")
    N, d, sigma = instance.N, instance.d, instance.sigma
    labels = instance.planted_labels
    for attempt in range(SPLIT_ATTEMPTS):
        perm = stream.child("split", attempt).generator().permutation(N)
        S1 = np.sort(perm[: N // 2])
        S2 = np.sort(perm[N // 2:])
        if (np.bincount(labels[S1], minlength=instance.k).min() > 0
                and np.bincount(labels[S2], minlength=instance.k).min() > 0):
            break
    else:
        raise SplitError(f"no split kept every cluster in both halves after {SPLIT_ATTEMPTS} tries")
    if gamma is None:
        gamma = boost_gamma(sigma, d, N)
    X = instance.points
    comp = distance_graph_components(X, gamma)
    for i in range(instance.k):
        if np.unique(comp[labels == i]).size > 1:
            warnings.warn(f"planted cluster {i} spans several graph components at gamma={gamma:.4g}",
                          DisconnectedClusterWarning, stacklevel=2)
    q = int(comp.max()) + 1
    cmeans = cluster_means(X, comp, q)
    L = SENTINEL_FACTOR * sigma**2 * d * N
    return BoostedSpace(
        S1=S1, S2=S2, graph_components=comp, component_means=cmeans, L=L, gamma=float(gamma),
        A_centered=X[S1] - cmeans[comp[S1]], B_centered=X[S2] - cmeans[comp[S2]],
    )


def strong_init(instance: Instance, k, stream) -> np.ndarray:
    """Boosted initialization for clusters of very different sizes."""
    k = int(k)
    if k == 1:
        return instance.points.mean(axis=0, keepdims=True)
    stream = as_stream(stream)
    w = instance.params.w_min
    if instance.N < k * k * instance.d**2 / w**2:
        warnings.warn("N is below k^2 d^2 / w_min^2; boosting guarantees may not apply",
                      SmallSampleWarning, stacklevel=2)
    space = boost_transform(instance, stream.child("boost"))
    op = space.operator()
    kk = min(k, *space.shape)
    proj = topk_svd(op, kk)
    coords = op.matmat(proj.basis)
    centers_c, labels1 = cluster_in_space(coords, k, stream.child("strong"))
    A = instance.points[space.S1]
    fallback = np.empty((k, instance.d))
    for r in range(k):
        nearest = np.argmin(squared_distances(coords, centers_c[r:r + 1], exact=True)[:, 0])
        fallback[r] = A[nearest]
    return _lift(A, labels1, k, fallback)


SEEDING_METHODS = ("weak", "strong", "auto")


def choose_method(instance: Instance, method="auto") -> str:
    if method not in SEEDING_METHODS:
        raise InvalidInput(f"unknown seeding method {method!r}")
    if method != "auto":
        return method
    return "strong" if instance.params.w_min < 1.0 / (2 * instance.k) else "weak"


def init_centers(instance: Instance, k, stream, method="auto") -> np.ndarray:
    method = choose_method(instance, method)
    if method == "strong":
        return strong_init(instance, k, stream)
    return weak_init(instance, k, stream)
