"""Block Markov chain model: cluster parameters, n-state instances and the
exact spectrum of the expected transition-count matrix.

States and clusters are 0-based throughout the library. A chain on ``n``
states is never stored densely; every quantity is derived from the K x K
cluster matrix ``p`` and the cluster sizes.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    BadRatios,
    DenseTooLarge,
    NonPositiveEntry,
    NotStochastic,
    RankDeficient,
    TooSmall,
)

ROW_SUM_TOL = 1e-9
RANK_TOL = 1e-10
DENSE_LIMIT = 2000


@dataclass(frozen=True, eq=False)
class ClusterModel:
    """The n-independent parameters of a block Markov chain.

    Attributes
    ----------
    alpha : ndarray, shape (K,)
        Cluster ratios, strictly positive, summing to one.
    p : ndarray, shape (K, K)
        Row-stochastic, strictly positive, full-rank cluster transition matrix.
    pi : ndarray, shape (K,)
        Stationary distribution of ``p`` (left Perron vector).
    eta : float
        Largest ratio between two entries sharing a row or a column of ``p``.
    """

    alpha: np.ndarray
    p: np.ndarray
    pi: np.ndarray
    eta: float

    @property
    def K(self) -> int:
        return len(self.alpha)

    def instance(self, n: int) -> "BmcInstance":
        return build_instance(self, n)


def stationary_distribution(p: np.ndarray) -> np.ndarray:
    """Left Perron vector of a positive stochastic matrix, normalised to sum 1."""
    K = p.shape[0]
    if K <= 64:
        vals, vecs = np.linalg.eig(p.T)
        v = np.real(vecs[:, np.argmin(np.abs(vals - 1.0))])
    else:
        v = np.full(K, 1.0 / K)
        for _ in range(10_000):
            nxt = v @ p
            if np.max(np.abs(nxt - v)) < 1e-15:
                v = nxt
                break
            v = nxt
    v = v / v.sum()
    # one step of the chain polishes the residual of the eigensolver
    v = v @ p
    return v / v.sum()


def transition_ratio(p: np.ndarray) -> float:
    rows = p.max(axis=1) / p.min(axis=1)
    cols = p.max(axis=0) / p.min(axis=0)
    return float(max(rows.max(), cols.max()))


def validate_model(alpha, p) -> ClusterModel:
    """Check ``(alpha, p)`` and return the model with ``pi`` and ``eta`` solved.

    Raises
    ------
    BadRatios, NonPositiveEntry, NotStochastic, RankDeficient
    """
    alpha = np.array(alpha, dtype=float).reshape(-1)
    p = np.array(p, dtype=float)
    K = alpha.size
    if K < 1:
        raise BadRatios("need at least one cluster")
    if p.shape != (K, K):
        raise NotStochastic(f"p must be {K}x{K}, got shape {p.shape}")
    if not (np.all(np.isfinite(alpha)) and np.all(np.isfinite(p))):
        raise BadRatios("non-finite entries in alpha or p")
    if np.any(alpha <= 0) or abs(alpha.sum() - 1.0) > ROW_SUM_TOL:
        raise BadRatios(f"cluster ratios must be positive and sum to 1, got {alpha}")
    if np.any(p <= 0):
        raise NonPositiveEntry("every entry of p must be strictly positive")
    row_err = np.abs(p.sum(axis=1) - 1.0)
    if np.any(row_err > ROW_SUM_TOL):
        raise NotStochastic(f"rows of p must sum to 1 (worst deviation {row_err.max():.3g})")
    smin = np.linalg.svd(p, compute_uv=False)[-1]
    if smin <= RANK_TOL:
        raise RankDeficient(f"p is rank deficient (smallest singular value {smin:.3g})")
    alpha.setflags(write=False)
    p.setflags(write=False)
    pi = stationary_distribution(p)
    pi.setflags(write=False)
    return ClusterModel(alpha=alpha, p=p, pi=pi, eta=transition_ratio(p))


def cluster_sizes(alpha: np.ndarray, n: int) -> np.ndarray:
    sizes = np.floor(n * np.asarray(alpha, dtype=float)).astype(np.int64)
    sizes[0] = n - sizes[1:].sum()
    return sizes


@dataclass(frozen=True, eq=False)
class BmcInstance:
    """A concrete chain on ``n`` states with contiguous cluster blocks.

    States ``offsets[k] .. offsets[k+1]-1`` form cluster ``k``.
    """

    model: ClusterModel
    n: int
    cluster_sizes: np.ndarray
    offsets: np.ndarray = field(repr=False)
    sigma: np.ndarray = field(repr=False)
    Pi: np.ndarray = field(repr=False)

    @property
    def K(self) -> int:
        return self.model.K

    @property
    def state_mass(self) -> np.ndarray:
        """Stationary mass of a single state of each cluster, ``pi_k / |V_k|``."""
        return self.model.pi / self.cluster_sizes

    def cluster_of(self, x) -> np.ndarray:
        return np.searchsorted(self.offsets, x, side="right") - 1

    def cluster_sums(self, v: np.ndarray) -> np.ndarray:
        """Sum of ``v`` over each cluster block (leading axis)."""
        return np.add.reduceat(v, self.offsets[:-1], axis=0)

    def expand(self, per_cluster: np.ndarray) -> np.ndarray:
        """Broadcast a per-cluster value to every state of that cluster."""
        return np.repeat(per_cluster, self.cluster_sizes, axis=0)


def build_instance(model: ClusterModel, n: int) -> BmcInstance:
    n = int(n)
    if n < 1:
        raise TooSmall(f"n must be positive, got {n}")
    sizes = cluster_sizes(model.alpha, n)
    if np.any(sizes < 1):
        raise TooSmall(f"n={n} leaves an empty cluster (sizes {sizes.tolist()})")
    offsets = np.concatenate(([0], np.cumsum(sizes)))
    sigma = np.repeat(np.arange(model.K), sizes)
    Pi = np.repeat(model.pi / sizes, sizes)
    for arr in (sizes, offsets, sigma, Pi):
        arr.setflags(write=False)
    return BmcInstance(model=model, n=n, cluster_sizes=sizes, offsets=offsets, sigma=sigma, Pi=Pi)


def transition_row(instance: BmcInstance, x: int) -> np.ndarray:
    """Cluster masses of the jump distribution out of state ``x``.

    Each state of cluster ``l`` receives ``masses[l] / cluster_sizes[l]``.
    """
    if not 0 <= x < instance.n:
        raise IndexError(f"state {x} outside [0, {instance.n})")
    return instance.model.p[instance.cluster_of(x)].copy()


def apply_transition(instance: BmcInstance, v: np.ndarray) -> np.ndarray:
    """``P @ v`` in O(nK) without forming ``P``."""
    per_cluster = instance.model.p @ (instance.cluster_sums(v) / instance.cluster_sizes)
    return instance.expand(per_cluster)


def apply_transition_transpose(instance: BmcInstance, u: np.ndarray) -> np.ndarray:
    """``P.T @ u`` in O(nK)."""
    per_cluster = instance.model.p.T @ instance.cluster_sums(u)
    return instance.expand(per_cluster / instance.cluster_sizes)


def dense_transition_matrix(instance: BmcInstance, limit: int = DENSE_LIMIT) -> np.ndarray:
    if instance.n > limit:
        raise DenseTooLarge(f"n={instance.n} exceeds dense limit {limit}")
    s = instance.sigma
    return instance.model.p[np.ix_(s, s)] / instance.cluster_sizes[s][None, :]


def dense_expected_counts(instance: BmcInstance, T: int, limit: int = DENSE_LIMIT) -> np.ndarray:
    """``N = T Diag(Pi) P`` materialised; only for oracles."""
    return T * instance.Pi[:, None] * dense_transition_matrix(instance, limit)


@dataclass(frozen=True, eq=False)
class ExpectedSpectrum:
    reduced: np.ndarray
    singular_values: np.ndarray


def expected_spectrum(instance: BmcInstance, T: int) -> ExpectedSpectrum:
    """Non-zero singular values of ``N`` through its K x K block reduction.

    ``N`` is constant on each block ``V_k x V_l``; scaling block (k, l) by
    ``sqrt(|V_k| |V_l|)`` gives a K x K matrix with the same non-zero
    singular values.
    """
    pi, p, sizes = instance.model.pi, instance.model.p, instance.cluster_sizes.astype(float)
    R = T * pi[:, None] * p / np.sqrt(np.outer(sizes, sizes))
    return ExpectedSpectrum(reduced=R, singular_values=np.linalg.svd(R, compute_uv=False))


def entry_bound_constants(model: ClusterModel) -> tuple[float, float]:
    """Constants bracketing ``N_xy n^2 / T`` for large ``n``.

    The limit of ``N_xy n^2 / T`` on block (k, l) is ``pi_k p_kl / (alpha_k alpha_l)``;
    the bracket widens it by a factor two on each side.
    """
    limit = model.pi[:, None] * model.p / np.outer(model.alpha, model.alpha)
    return 0.5 * float(limit.min()), 2.0 * float(limit.max())


def default_degree_constant(model: ClusterModel) -> float:
    return 4.0 * float(np.max(model.pi / model.alpha))


FIGURE1_P = np.array([[2, 3, 5], [3, 5, 2], [5, 2, 3]], dtype=float) / 10
FIGURE1_ALPHA = np.full(3, 1.0 / 3.0)


def figure1_model() -> ClusterModel:
    """Three-cluster model used in the published simulation study."""
    return validate_model(FIGURE1_ALPHA, FIGURE1_P)


def example1_model(a: float, b: float) -> ClusterModel:
    """Symmetric three-cluster family with rows (a, b, 1-a-b) cyclically shifted."""
    c = 1.0 - a - b
    return validate_model(np.full(3, 1.0 / 3.0), [[a, b, c], [b, c, a], [c, a, b]])
