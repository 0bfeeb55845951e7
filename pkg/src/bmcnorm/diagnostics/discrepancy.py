"""Discrepancy property checker for transition-count matrices.

For subsets ``A, B`` of states let ``e(A, B)`` be the number of jumps from
``A`` into ``B`` and ``r = e n^2 / (|A| |B| T)`` its density relative to the
average. A pair passes when ``r <= d1`` (condition i) or when
``e ln r <= d2 m ln(n / m)`` with ``m = max(|A|, |B|)`` (condition ii).

Conventions: empty subsets are skipped; a pair with ``r <= 1`` has a
non-positive left side in (ii) and always passes it; when ``m = n`` the right
side of (ii) is zero and only a non-positive left side passes.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Iterator

import numpy as np

from ..errors import BudgetZero, TooLarge
from ..sampler import PathCounts

EXHAUSTIVE_LIMIT = 12


class Mode(Enum):
    EXHAUSTIVE = "exhaustive"
    MONTE_CARLO = "montecarlo"


@dataclass(frozen=True)
class PairStats:
    A: tuple
    B: tuple
    e: int
    ratio: float


@dataclass(frozen=True, eq=False)
class DiscrepancyReport:
    mode: Mode
    pairs_checked: int
    worst_pair: PairStats | None
    minimal_d1: float
    minimal_d2: float
    d1: float
    d2: float
    _evaluate: Callable = field(repr=False)

    def holds_for(self, d1: float, d2: float) -> bool:
        """Whether every checked pair satisfies (i) with ``d1`` or (ii) with ``d2``."""
        return self._evaluate(d1, d2)


def _chunk_stats(e: np.ndarray, a: np.ndarray, b: np.ndarray, n: int, T: int):
    e = e.astype(np.float64)
    denom = np.outer(a, b).astype(np.float64) * T if e.ndim == 2 else a * b * float(T)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(e > 0, e * n * n / denom, 0.0)
        lhs = np.where(ratio > 1, e * np.log(np.where(ratio > 1, ratio, 1.0)), 0.0)
    m = np.maximum.outer(a, b) if e.ndim == 2 else np.maximum(a, b)
    unit = m * np.log(n / m)
    return ratio, lhs, unit


def _required_d2(ratio, lhs, unit, d1):
    failing = ratio > d1
    with np.errstate(divide="ignore", invalid="ignore"):
        need = np.where(lhs <= 0, 0.0, np.where(unit > 0, lhs / np.where(unit > 0, unit, 1.0), np.inf))
    need = np.where(failing, need, 0.0)
    return float(need.max()) if need.size else 0.0


def _passes(ratio, lhs, unit, d1, d2) -> bool:
    return bool(np.all((ratio <= d1) | (lhs <= d2 * unit)))


def _subset_indicators(n: int) -> np.ndarray:
    codes = np.arange(1, 2**n, dtype=np.int64)
    return ((codes[:, None] >> np.arange(n)) & 1).astype(np.int64)


def _exhaustive_chunks(dense: np.ndarray, T: int, chunk: int = 256) -> Iterator:
    n = dense.shape[0]
    S = _subset_indicators(n)
    sizes = S.sum(axis=1)
    right = dense @ S.T
    for lo in range(0, S.shape[0], chunk):
        Sa = S[lo:lo + chunk]
        e = Sa @ right
        yield lo, e, _chunk_stats(e, sizes[lo:lo + chunk], sizes, n, T)


def _members(code_row: np.ndarray) -> tuple:
    return tuple(int(i) for i in np.flatnonzero(code_row))


def discrepancy_report(counts: PathCounts, T: int | None = None, d1: float = 4.0, d2: float = 4.0,
                       mode: Mode | str = Mode.EXHAUSTIVE, subset_budget: int = 100_000,
                       seed: int = 0) -> DiscrepancyReport:
    """Evaluate both discrepancy conditions over subset pairs of ``counts``.

    ``minimal_d1`` is the smallest ``d1`` making every checked pair pass
    condition (i); ``minimal_d2`` is the smallest ``d2`` for which every pair
    failing (i) at the given ``d1`` passes (ii) (``inf`` if none does).
    """
    mode = Mode(mode) if not isinstance(mode, Mode) else mode
    T = counts.T if T is None else T
    n = counts.n
    if mode is Mode.EXHAUSTIVE:
        if n > EXHAUSTIVE_LIMIT:
            raise TooLarge(f"exhaustive discrepancy needs n <= {EXHAUSTIVE_LIMIT}, got {n}")
        return _exhaustive(counts, T, d1, d2)
    if subset_budget <= 0:
        raise BudgetZero("Monte Carlo discrepancy check needs a positive budget")
    return _monte_carlo(counts, T, d1, d2, subset_budget, seed)


def _exhaustive(counts, T, d1, d2) -> DiscrepancyReport:
    dense = counts.toarray().astype(np.int64)
    n = dense.shape[0]
    S = _subset_indicators(n)
    best_ratio, best_at, need_d2 = -1.0, None, 0.0
    for lo, e, (ratio, lhs, unit) in _exhaustive_chunks(dense, T):
        i, j = np.unravel_index(np.argmax(ratio), ratio.shape)
        if ratio[i, j] > best_ratio:
            best_ratio = float(ratio[i, j])
            best_at = (lo + i, j, int(e[i, j]))
        need_d2 = max(need_d2, _required_d2(ratio, lhs, unit, d1))
    a, b, e_best = best_at
    worst = PairStats(_members(S[a]), _members(S[b]), e_best, best_ratio)

    def evaluate(x1, x2):
        return all(_passes(r, l, u, x1, x2) for _, _, (r, l, u) in _exhaustive_chunks(dense, T))

    return DiscrepancyReport(Mode.EXHAUSTIVE, S.shape[0] ** 2, worst, best_ratio, need_d2, d1, d2, evaluate)


def _size_grid(n: int) -> np.ndarray:
    return np.unique(np.rint(np.geomspace(1, n, num=max(2, int(np.log2(n)) + 2))).astype(np.int64))


def _monte_carlo(counts, T, d1, d2, budget, seed) -> DiscrepancyReport:
    n = counts.n
    rng = np.random.default_rng(seed)
    grid = _size_grid(n)
    csr_t = counts.counts.T.tocsr().astype(np.float64)
    ratios, lhss, units, es, subsets = [], [], [], [], []
    batch = 256
    done = 0
    while done < budget:
        size = min(batch, budget - done)
        sa = rng.choice(grid, size=size)
        sb = rng.choice(grid, size=size)
        ranks_a = np.argsort(np.argsort(rng.random((size, n)), axis=1), axis=1)
        ranks_b = np.argsort(np.argsort(rng.random((size, n)), axis=1), axis=1)
        IA = (ranks_a < sa[:, None]).astype(np.float64)
        IB = (ranks_b < sb[:, None]).astype(np.float64)
        # e(A, B) = 1_A^T N 1_B
        e = np.rint(((csr_t @ IA.T).T * IB).sum(axis=1)).astype(np.int64)
        ratio, lhs, unit = _chunk_stats(e, sa, sb, n, T)
        ratios.append(ratio)
        lhss.append(lhs)
        units.append(unit)
        es.append(e)
        k = int(np.argmax(ratio))
        subsets.append((_members(IA[k]), _members(IB[k])))
        done += size
    ratio, lhs, unit, e = (np.concatenate(x) for x in (ratios, lhss, units, es))
    best = int(np.argmax(ratio))
    A, B = subsets[best // batch]
    worst = PairStats(A, B, int(e[best]), float(ratio[best]))

    def evaluate(x1, x2):
        return _passes(ratio, lhs, unit, x1, x2)

    return DiscrepancyReport(Mode.MONTE_CARLO, budget, worst, float(ratio.max()),
                             _required_d2(ratio, lhs, unit, d1), d1, d2, evaluate)
