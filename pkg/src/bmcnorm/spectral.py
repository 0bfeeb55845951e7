"""Matrix-free centered operator and a top-k singular value solver.

The expected count matrix ``N = T Diag(Pi) P`` is dense but has rank K and
is constant on cluster blocks, so products with it cost O(nK). The solver is
a Golub-Kahan-Lanczos bidiagonalisation with full reorthogonalisation and
thick restarts (the scheme popularised by IRLBA).
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import LinearOperator, aslinearoperator

from .errors import DenseTooLarge, NonFinite, ShapeMismatch
from .model import BmcInstance, dense_expected_counts
from .sampler import PathCounts

DENSE_ORACLE_LIMIT = 200


class CenteredOperator(LinearOperator):
    """``N_hat_Gamma - N`` as a linear operator, with ``N = T Diag(Pi) P``."""

    def __init__(self, counts: PathCounts, instance: BmcInstance, T: int | None = None):
        if counts.n != instance.n:
            raise ShapeMismatch(f"counts on {counts.n} states, instance on {instance.n}")
        self.counts = counts
        self.instance = instance
        self.n_steps = counts.T if T is None else int(T)
        self.sparse = counts.counts.astype(np.float64)
        self._sparse_t = self.sparse.T.tocsr()
        # N = expand(row_weight) * (p @ block_sums(v) / sizes)
        self._row_weight = self.n_steps * instance.state_mass
        super().__init__(dtype=np.float64, shape=(instance.n, instance.n))

    def _expected_matvec(self, v):
        inst = self.instance
        sums = inst.cluster_sums(v)
        scaled = sums / (inst.cluster_sizes if v.ndim == 1 else inst.cluster_sizes[:, None])
        per_cluster = inst.model.p @ scaled
        w = self._row_weight if v.ndim == 1 else self._row_weight[:, None]
        return inst.expand(w * per_cluster)

    def _expected_rmatvec(self, u):
        inst = self.instance
        w = self._row_weight if u.ndim == 1 else self._row_weight[:, None]
        per_cluster = inst.model.p.T @ (w * inst.cluster_sums(u))
        sizes = inst.cluster_sizes if u.ndim == 1 else inst.cluster_sizes[:, None]
        return inst.expand(per_cluster / sizes)

    def _matvec(self, v):
        v = np.asarray(v, dtype=np.float64).reshape(-1)
        return self.sparse @ v - self._expected_matvec(v)

    def _rmatvec(self, u):
        u = np.asarray(u, dtype=np.float64).reshape(-1)
        return self._sparse_t @ u - self._expected_rmatvec(u)

    def _matmat(self, X):
        X = np.asarray(X, dtype=np.float64)
        return self.sparse @ X - self._expected_matvec(X)

    def _rmatmat(self, Y):
        Y = np.asarray(Y, dtype=np.float64)
        return self._sparse_t @ Y - self._expected_rmatvec(Y)

    def abs_row_sums(self) -> np.ndarray:
        """Row sums of ``|N_hat_Gamma - N|`` in O(nnz + nK)."""
        return _abs_sums(self.sparse, self._expected_rows(), self.instance, self.instance.sigma)

    def abs_col_sums(self) -> np.ndarray:
        return _abs_sums(self._sparse_t, self._expected_rows().T, self.instance, self.instance.sigma)

    def _expected_rows(self) -> np.ndarray:
        # block value of N on (k, l)
        inst = self.instance
        return self.n_steps * inst.state_mass[:, None] * inst.model.p / inst.cluster_sizes[None, :]

    def norm_upper_bound(self) -> float:
        """``sqrt(||A||_1 ||A||_inf)``, an upper bound on the spectral norm."""
        return float(np.sqrt(self.abs_col_sums().max() * self.abs_row_sums().max()))

    def dense(self, limit: int = DENSE_ORACLE_LIMIT) -> np.ndarray:
        if self.shape[0] > limit:
            raise DenseTooLarge(f"n={self.shape[0]} exceeds dense oracle limit {limit}")
        return self.sparse.toarray() - dense_expected_counts(self.instance, self.n_steps, limit)


def _abs_sums(rows: sp.csr_array, block: np.ndarray, inst: BmcInstance, sigma: np.ndarray) -> np.ndarray:
    # |a - b| summed over a row where b is block-constant: start from sum |b| over the
    # row, then correct the stored entries
    sizes = inst.cluster_sizes
    base = (np.abs(block) * sizes[None, :]).sum(axis=1)[sigma]
    indptr, indices, data = rows.indptr, rows.indices, rows.data
    row_of = np.repeat(np.arange(rows.shape[0]), np.diff(indptr))
    b = block[sigma[row_of], sigma[indices]]
    corr = np.abs(data - b) - np.abs(b)
    return base + np.bincount(row_of, weights=corr, minlength=rows.shape[0])


def centered_operator(trimmed: PathCounts, instance: BmcInstance, T: int | None = None) -> CenteredOperator:
    return CenteredOperator(trimmed, instance, T)


@dataclass(frozen=True, eq=False)
class SpectrumEstimate:
    """Top singular values with convergence data.

    ``residuals[i]`` is ``||A^T u_i - s_i v_i|| / s_1`` for the i-th Ritz
    triple (the other residual vanishes by construction). ``iterations``
    counts restart cycles.
    """

    values: np.ndarray
    residuals: np.ndarray
    iterations: int
    converged: bool
    matvecs: int = 0


def top_singular_values(op, k: int = 1, tol: float = 1e-8, max_iter: int | None = None,
                        seed: int = 0, ncv: int | None = None) -> SpectrumEstimate:
    """Largest ``k`` singular values of a linear map.

    Parameters
    ----------
    op : array_like, sparse matrix or LinearOperator
        Anything :func:`scipy.sparse.linalg.aslinearoperator` accepts; needs
        ``matvec`` and ``rmatvec``.
    k : int
        Number of singular values, ``k <= min(op.shape)``.
    tol : float
        Relative residual at which a Ritz value is accepted.
    max_iter : int, optional
        Cap on restart cycles, default ``10 k + 200``.
    seed : int
        Seed of the random starting vector.
    ncv : int, optional
        Krylov subspace dimension, default ``min(2k + 10, min(op.shape))``.

    Returns
    -------
    SpectrumEstimate
        Values are returned even when ``converged`` is false.
    """
    A = aslinearoperator(op)
    m, n = A.shape
    dim = min(m, n)
    if not 1 <= k <= dim:
        raise ValueError(f"k must lie in [1, {dim}], got {k}")
    if tol <= 0:
        raise ValueError("tol must be positive")
    max_iter = 10 * k + 200 if max_iter is None else int(max_iter)
    ncv = min(2 * k + 10, dim) if ncv is None else min(max(int(ncv), k + 1), dim)
    ncv = max(ncv, k)
    rng = np.random.default_rng(seed)

    V = np.zeros((ncv, n))
    W = np.zeros((ncv, m))
    B = np.zeros((ncv, ncv))
    V[0] = _unit(rng.standard_normal(n))
    start = 0
    scale = 0.0
    matvecs = 0
    f = np.zeros(n)
    beta = 0.0
    values = np.zeros(k)
    residuals = np.full(k, np.inf)
    cycles = 0

    while True:
        for j in range(start, ncv):
            w = np.asarray(A.matvec(V[j]), dtype=np.float64).reshape(-1)
            matvecs += 1
            if j > 0 and j != start:
                w -= B[j - 1, j] * W[j - 1]
            w = _reorth(w, W[:j])
            alpha = _norm(w)
            scale = max(scale, alpha)
            if alpha <= 1e-14 * scale:
                # A V_j lies in span(W[:j]); continue from a fresh direction
                alpha = 0.0
                w = _random_orth(rng, W[:j], m)
            else:
                w /= alpha
            W[j] = w
            B[j, j] = alpha

            f = np.asarray(A.rmatvec(W[j]), dtype=np.float64).reshape(-1)
            matvecs += 1
            f -= alpha * V[j]
            f = _reorth(f, V[: j + 1])
            beta = _norm(f)
            scale = max(scale, beta)
            if j + 1 < ncv:
                if beta <= 1e-14 * scale:
                    B[j, j + 1] = 0.0
                    V[j + 1] = _random_orth(rng, V[: j + 1], n)
                else:
                    B[j, j + 1] = beta
                    V[j + 1] = f / beta

        cycles += 1
        U, S, Vt = np.linalg.svd(B)
        if not np.all(np.isfinite(S)):
            raise NonFinite("non-finite value in the bidiagonal projection")
        if beta <= 1e-14 * scale or ncv == n:
            # the basis spans an invariant subspace (or all of R^n): Ritz values are exact
            beta = 0.0
        ref = S[0] if S[0] > 0 else 1.0
        res = np.abs(beta * U[ncv - 1, :k]) / ref
        values, residuals = S[:k].copy(), res
        if np.all(res <= tol):
            return SpectrumEstimate(values, residuals, cycles, True, matvecs)
        if cycles >= max_iter:
            return SpectrumEstimate(values, residuals, cycles, False, matvecs)

        # thick restart: keep the leading Ritz vectors plus the residual direction
        keep = min(ncv - 1, k + (ncv - k) // 2)
        V[:keep] = Vt[:keep] @ V
        W[:keep] = U[:, :keep].T @ W
        coupling = beta * U[ncv - 1, :keep]
        B[:] = 0.0
        B[np.arange(keep), np.arange(keep)] = S[:keep]
        B[:keep, keep] = coupling
        if beta > 1e-14 * scale:
            V[keep] = _reorth(f / beta, V[:keep])
            V[keep] /= _norm(V[keep])
        else:
            B[:keep, keep] = 0.0
            V[keep] = _random_orth(rng, V[:keep], n)
        start = keep


def _norm(x: np.ndarray) -> float:
    nrm = float(np.linalg.norm(x))
    if not np.isfinite(nrm):
        raise NonFinite("non-finite vector encountered in the Lanczos recurrence")
    return nrm


def _unit(x: np.ndarray) -> np.ndarray:
    return x / _norm(x)


def _reorth(x: np.ndarray, basis: np.ndarray) -> np.ndarray:
    if basis.shape[0] == 0:
        return x
    for _ in range(2):
        x = x - (basis @ x) @ basis
    return x


def _random_orth(rng: np.random.Generator, basis: np.ndarray, dim: int) -> np.ndarray:
    for _ in range(10):
        x = _reorth(rng.standard_normal(dim), basis)
        nrm = _norm(x)
        if nrm > 1e-8:
            return x / nrm
    raise NonFinite("could not extend the Krylov basis")


def dense_singular_values(A: np.ndarray) -> np.ndarray:
    return np.linalg.svd(np.asarray(A, dtype=float), compute_uv=False)


def scaled_spectral_norm(trimmed: PathCounts, instance: BmcInstance, T: int | None = None,
                         tol: float = 1e-8, max_iter: int | None = None, seed: int = 0,
                         ncv: int | None = None) -> float:
    """``sqrt(n / T) * sigma_1(N_hat_Gamma - N)``."""
    op = CenteredOperator(trimmed, instance, T)
    if op.n_steps == 0:
        return 0.0
    est = top_singular_values(op, 1, tol=tol, max_iter=max_iter, seed=seed, ncv=ncv)
    return float(np.sqrt(instance.n / op.n_steps) * est.values[0])


def row_lower_bound(counts: PathCounts, instance: BmcInstance, T: int | None = None, row: int = 0) -> float:
    """Euclidean norm of one row of ``N_hat - N``; never exceeds ``sigma_1``."""
    T = counts.T if T is None else T
    k = instance.sigma[row]
    expected = instance.expand(T * instance.state_mass[k] * instance.model.p[k] / instance.cluster_sizes)
    start, stop = counts.counts.indptr[row], counts.counts.indptr[row + 1]
    diff = -expected
    diff[counts.counts.indices[start:stop]] += counts.counts.data[start:stop]
    return float(np.linalg.norm(diff))


def spectral_gap_profile(trimmed: PathCounts, instance: BmcInstance, k: int | None = None,
                         tol: float = 1e-8, max_iter: int | None = None, seed: int = 0) -> np.ndarray:
    """Top ``k`` (default K + 1) singular values of the uncentered counts."""
    k = instance.K + 1 if k is None else k
    if k < instance.K + 1:
        raise ValueError(f"k must be at least K + 1 = {instance.K + 1}")
    est = top_singular_values(trimmed.counts.astype(np.float64), k, tol=tol, max_iter=max_iter, seed=seed)
    return est.values
