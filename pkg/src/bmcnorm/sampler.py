"""Stationary path simulation and transition-count accumulation.

Random streams come from numpy's PCG64 bit generator seeded with a single
64-bit integer; replication ``r`` of a study with base seed ``s`` uses seed
``s ^ r``. Draw order inside :func:`sample_path_counts` is fixed (start
cluster, T cluster uniforms, T+1 within-cluster offsets), so a seed pins
the output bit for bit.
"""

from bisect import bisect_right
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .errors import DenseTooLarge
from .model import BmcInstance

MAX_T = 2**40


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(int(seed) & 0xFFFFFFFFFFFFFFFF))


def replication_seed(base_seed: int, replication: int) -> int:
    return (int(base_seed) ^ int(replication)) & 0xFFFFFFFFFFFFFFFF


@dataclass(frozen=True, eq=False)
class PathCounts:
    """Transition counts of a length-``T`` path on ``n`` states.

    ``counts`` is a CSR array with ``counts[x, y]`` the number of jumps
    ``x -> y``. Trimmed copies keep ``T`` (the path length) while their total
    mass may drop below it. ``start_state``/``end_state`` are ``None`` when
    the counts were read back from a triplet file.
    """

    n: int
    T: int
    counts: sp.csr_array
    out_degree: np.ndarray = field(repr=False)
    in_degree: np.ndarray = field(repr=False)
    start_state: int | None
    end_state: int | None
    seed: int | None

    @property
    def total(self) -> int:
        return int(self.out_degree.sum())

    @property
    def nnz(self) -> int:
        return int(self.counts.nnz)

    def toarray(self) -> np.ndarray:
        return self.counts.toarray()


def counts_from_matrix(matrix, T: int, start_state=None, end_state=None, seed=None) -> PathCounts:
    """Wrap an integer matrix (dense or sparse) as :class:`PathCounts`."""
    csr = sp.csr_array(matrix, dtype=np.int64)
    csr.sum_duplicates()
    csr.eliminate_zeros()
    csr.sort_indices()
    n = csr.shape[0]
    out_deg = np.asarray(csr.sum(axis=1)).ravel().astype(np.int64)
    in_deg = np.asarray(csr.sum(axis=0)).ravel().astype(np.int64)
    return PathCounts(n=n, T=int(T), counts=csr, out_degree=out_deg, in_degree=in_deg,
                      start_state=start_state, end_state=end_state, seed=seed)


def _cluster_path(p: np.ndarray, start: int, uniforms: np.ndarray) -> np.ndarray:
    # inverse-CDF on each row; the last bucket absorbs round-off in the cumulative sums
    cum = [list(np.cumsum(row)[:-1]) for row in p]
    path = [0] * (len(uniforms) + 1)
    c = start
    path[0] = c
    for t, u in enumerate(uniforms.tolist(), start=1):
        c = bisect_right(cum[c], u)
        path[t] = c
    return np.asarray(path, dtype=np.int64)


def sample_path(instance: BmcInstance, T: int, seed: int) -> np.ndarray:
    """States ``X_0, ..., X_T`` of a stationary path (0-based)."""
    T = int(T)
    if T < 0 or T > MAX_T:
        raise ValueError(f"T must lie in [0, 2**40], got {T}")
    rng = make_rng(seed)
    model = instance.model
    start = int(rng.choice(model.K, p=model.pi))
    clusters = _cluster_path(model.p, start, rng.random(T))
    within = rng.integers(0, instance.cluster_sizes[clusters])
    return instance.offsets[clusters] + within


def sample_path_counts(instance: BmcInstance, T: int, seed: int) -> PathCounts:
    """Simulate a stationary path of ``T`` jumps and count its transitions.

    The start state is drawn from the stationary law ``Pi``; each jump picks
    the destination cluster from the row of ``p`` of the current cluster and
    then a uniform state inside it.
    """
    n = instance.n
    path = sample_path(instance, T, seed)
    codes, mult = np.unique(path[:-1] * n + path[1:], return_counts=True)
    rows, cols = np.divmod(codes, n)
    csr = sp.csr_array((mult.astype(np.int64), (rows, cols)), shape=(n, n))
    csr.sort_indices()
    out_deg = np.bincount(path[:-1], minlength=n).astype(np.int64)
    in_deg = np.bincount(path[1:], minlength=n).astype(np.int64)
    return PathCounts(n=n, T=int(T), counts=csr, out_degree=out_deg, in_degree=in_deg,
                      start_state=int(path[0]), end_state=int(path[-1]), seed=int(seed))


def empirical_mean_counts(instance: BmcInstance, T: int, replications: int, seed: int,
                          limit: int = 2000) -> np.ndarray:
    """Dense average of ``replications`` independent count matrices."""
    if instance.n > limit:
        raise DenseTooLarge(f"n={instance.n} exceeds dense limit {limit}")
    acc = np.zeros((instance.n, instance.n))
    for r in range(replications):
        acc += sample_path_counts(instance, T, replication_seed(seed, r)).toarray()
    return acc / replications


def write_triplets(counts: PathCounts, path) -> None:
    """Write ``n T seed`` then one ``x y count`` line per non-zero (1-based, sorted)."""
    coo = counts.counts.tocoo()
    order = np.lexsort((coo.col, coo.row))
    seed = counts.seed if counts.seed is not None else 0
    lines = [f"{counts.n} {counts.T} {seed}"]
    lines += [f"{r + 1} {c + 1} {v}" for r, c, v in
              zip(coo.row[order].tolist(), coo.col[order].tolist(), coo.data[order].tolist())]
    Path(path).write_text("\n".join(lines) + "\n")


def read_triplets(path) -> PathCounts:
    with open(path) as fh:
        n, T, seed = (int(tok) for tok in fh.readline().split())
        rows = [line.split() for line in fh if line.strip()]
    body = np.array(rows, dtype=np.int64).reshape(-1, 3)
    if body.size == 0:
        matrix = sp.csr_array((n, n), dtype=np.int64)
    else:
        matrix = sp.csr_array((body[:, 2], (body[:, 0] - 1, body[:, 1] - 1)), shape=(n, n))
    return counts_from_matrix(matrix, T, seed=seed)
