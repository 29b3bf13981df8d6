"""Truncated SVD and spectral norms by randomized subspace iteration.

Both routines only touch ``A`` through products ``A @ X`` and ``A.T @ Y``, so
they accept dense arrays and anything exposing ``matmat``/``rmatmat``
(e.g. :class:`scipy.sparse.linalg.LinearOperator`).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError, InvalidParams

DEFAULT_TOL = 1e-6
DEFAULT_MAX_ITER = 300
OVERSAMPLE = 10
INTERNAL_SEED = 0x5EED


@dataclass(frozen=True, eq=False)
class LowRankProjection:
    basis: np.ndarray  # d x k, orthonormal columns
    singular_values: np.ndarray
    iterations: int = 0

    @property
    def k(self) -> int:
        return self.basis.shape[1]

    def project(self, X) -> np.ndarray:
        """Coordinates of the rows of ``X`` in the basis (N x k)."""
        return np.asarray(X) @ self.basis

    def reconstruct(self, X) -> np.ndarray:
        """Rows of ``X`` projected onto the subspace, in the ambient space."""
        return self.project(X) @ self.basis.T


def _products(A):
    if isinstance(A, np.ndarray):
        return A.shape, (lambda X: A @ X), (lambda Y: A.T @ Y)
    if hasattr(A, "matmat") and hasattr(A, "rmatmat"):
        return A.shape, A.matmat, A.rmatmat
    A = np.asarray(A, dtype=np.float64)
    return A.shape, (lambda X: A @ X), (lambda Y: A.T @ Y)


def _orth(X):
    q, r = np.linalg.qr(X)
    # drop directions the input did not actually span
    diag = np.abs(np.diag(r))
    if diag.size and diag.max() > 0:
        keep = diag > diag.max() * 1e-14
        q = q[:, keep]
    else:
        q = q[:, :0]
    return q


def topk_svd(A, k, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER, seed=INTERNAL_SEED):
    """Top-k right singular subspace of ``A``.

    Runs block subspace iteration with a fixed-seed Gaussian start. It stops
    once the top-k Ritz values move by at most ``tol^2 * s_1`` for three
    consecutive sweeps, or as soon as every top-k Ritz triple has residual
    ``||A v_j - s_j u_j|| <= tol^2 * s_1``. The projection residual
    ``||A - A V V^T||`` is quadratic in the subspace error, like the Ritz
    values, so nearly tied singular values at the cut do not hold it up.
    Raises :class:`ConvergenceError` after ``max_iter`` sweeps.
    """
    (n, d), mat, rmat = _products(A)
    k = int(k)
    if not 1 <= k <= min(n, d):
        raise InvalidParams(f"k={k} must lie in [1, min(N, d)={min(n, d)}]")
    ell = min(k + OVERSAMPLE, min(n, d))
    rng = np.random.default_rng(seed)
    omega = rng.standard_normal((d, ell))
    Q = _orth(mat(omega))
    if Q.shape[1] == 0:
        return _zero_projection(d, k, rng)
    prev = None
    stalls = 0
    resid = np.inf
    for it in range(1, max_iter + 1):
        Z = _orth(rmat(Q))
        if Z.shape[1] == 0:
            return _zero_projection(d, k, rng)
        AZ = mat(Z)
        Q = _orth(AZ)
        # Rayleigh-Ritz on the pair (Q, Z): A Z = Q (Q^T A Z)
        B = Q.T @ AZ
        ub, s, vbt = np.linalg.svd(B, full_matrices=False)
        V = Z @ vbt.T
        U = Q @ ub
        kk = min(k, s.size)
        AV = mat(V[:, :kk])
        res = np.linalg.norm(AV - U[:, :kk] * s[:kk], axis=0)
        AtU = rmat(U[:, :kk])
        res = np.maximum(res, np.linalg.norm(AtU - V[:, :kk] * s[:kk], axis=0))
        scale = s[0] if s[0] > 0 else 1.0
        resid = float(res.max()) / scale
        top = s[:kk]
        if prev is not None and np.max(np.abs(top - prev)) <= tol * tol * scale:
            stalls += 1
        else:
            stalls = 0
        if s[0] == 0 or resid <= tol * tol or stalls >= 3:
            return _finish(V, s, k, d, rng, it)
        prev = top
    raise ConvergenceError(
        f"topk_svd did not converge in {max_iter} iterations (residual {resid:.3e})",
        residual=resid, iterations=max_iter)


def _finish(V, s, k, d, rng, iterations):
    basis = V[:, :k]
    sv = s[:k]
    if basis.shape[1] < k:
        # rank-deficient input: pad with directions orthogonal to the found ones
        extra = rng.standard_normal((d, k - basis.shape[1]))
        extra -= basis @ (basis.T @ extra)
        basis = np.hstack([basis, _orth(extra)])[:, :k]
        sv = np.concatenate([sv, np.zeros(k - sv.size)])
    return LowRankProjection(np.ascontiguousarray(basis), np.asarray(sv), iterations)


def _zero_projection(d, k, rng):
    basis = _orth(rng.standard_normal((d, k)))
    return LowRankProjection(basis, np.zeros(k), 0)


def spectral_norm(A, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER) -> float:
    """Largest singular value of ``A`` (block power method, top Ritz value)."""
    (n, d), _, _ = _products(A)
    if n == 0 or d == 0:
        raise InvalidParams("spectral norm of an empty matrix")
    return float(topk_svd(A, 1, tol=tol, max_iter=max_iter).singular_values[0])


def frobenius_norm(A) -> float:
    return float(np.linalg.norm(np.asarray(A), "fro"))


def squared_distances(X, C, exact=False) -> np.ndarray:
    """N x k matrix of squared Euclidean distances between rows of X and C.

    The default uses ``|x|^2 - 2<x, c> + |c|^2``; ``exact=True`` forms the
    differences explicitly, which is needed when coordinates are huge relative
    to the distances being compared.
    """
    X = np.asarray(X, dtype=np.float64)
    C = np.asarray(C, dtype=np.float64)
    if exact:
        out = np.empty((X.shape[0], C.shape[0]))
        for j in range(C.shape[0]):
            diff = X - C[j]
            out[:, j] = np.einsum("ij,ij->i", diff, diff)
        return out
    xx = np.einsum("ij,ij->i", X, X)
    cc = np.einsum("ij,ij->i", C, C)
    out = xx[:, None] - 2.0 * (X @ C.T) + cc[None, :]
    np.maximum(out, 0.0, out=out)
    return out
