"""Trimming of the most visited states."""

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .sampler import PathCounts


def default_trim_count(n: int, T: float) -> int:
    """``floor(n * exp(-T / n))``.

    A relative slack of 1e-12 keeps values that are integers in exact
    arithmetic (``T = n ln(n/j)``) from rounding down a unit.
    """
    return min(int(n), math.floor(n * math.exp(-T / n) * (1 + 1e-12)))


@dataclass(frozen=True, eq=False)
class TrimSet:
    """States removed by trimming (the complement of Gamma)."""

    n: int
    gamma_complement: np.ndarray
    criterion: str = "in_degree"

    @property
    def m(self) -> int:
        return len(self.gamma_complement)

    @property
    def keep_mask(self) -> np.ndarray:
        mask = np.ones(self.n, dtype=bool)
        mask[self.gamma_complement] = False
        return mask

    @property
    def gamma(self) -> np.ndarray:
        return np.flatnonzero(self.keep_mask)


def trim_set(counts: PathCounts, m: int) -> TrimSet:
    """The ``m`` states with largest in-degree; ties go to the smaller index."""
    if not 0 <= m <= counts.n:
        raise ValueError(f"m must lie in [0, {counts.n}], got {m}")
    order = np.lexsort((np.arange(counts.n), -counts.in_degree))
    removed = np.sort(order[:m])
    removed.setflags(write=False)
    return TrimSet(n=counts.n, gamma_complement=removed)


def apply_trim(counts: PathCounts, gamma: TrimSet) -> PathCounts:
    """Zero the rows and columns of the trimmed states."""
    if gamma.n != counts.n:
        raise ValueError("trim set built for a different state space")
    if gamma.m == 0:
        return counts
    keep = gamma.keep_mask.astype(np.int64)
    D = sp.diags_array(keep, format="csr")
    trimmed = sp.csr_array(D @ counts.counts @ D)
    trimmed.eliminate_zeros()
    trimmed.sort_indices()
    return PathCounts(
        n=counts.n,
        T=counts.T,
        counts=trimmed,
        out_degree=np.asarray(trimmed.sum(axis=1)).ravel().astype(np.int64),
        in_degree=np.asarray(trimmed.sum(axis=0)).ravel().astype(np.int64),
        start_state=counts.start_state,
        end_state=counts.end_state,
        seed=counts.seed,
    )


@dataclass(frozen=True)
class TrimPolicy:
    """How many states to trim: ``none``, ``auto`` (floor(n e^{-T/n})) or a fixed count."""

    kind: str = "none"
    m: int = 0

    @classmethod
    def parse(cls, text: str) -> "TrimPolicy":
        text = text.strip().lower()
        if text in ("none", "auto"):
            return cls(text)
        if text.startswith("m="):
            try:
                m = int(text[2:])
            except ValueError:
                m = -1
            if m >= 0:
                return cls("fixed", m)
        raise ValueError(f"trim policy must be auto, none or m=<int>, got {text!r}")

    def count(self, n: int, T: int) -> int:
        if self.kind == "none":
            return 0
        if self.kind == "auto":
            return default_trim_count(n, T)
        return min(self.m, n)

    def __str__(self) -> str:
        return f"m={self.m}" if self.kind == "fixed" else self.kind


def trim(counts: PathCounts, policy: TrimPolicy) -> tuple[PathCounts, TrimSet]:
    gamma = trim_set(counts, policy.count(counts.n, counts.T))
    return apply_trim(counts, gamma), gamma
