from dataclasses import dataclass

import numpy as np

from ..sampler import PathCounts


@dataclass(frozen=True)
class DegreeReport:
    max_scaled_degree: float
    bound: float
    holds: bool


def degree_bound_report(counts: PathCounts, T: int | None = None, b: float = 4.0) -> DegreeReport:
    """``max_y (in_degree ∨ out_degree) * n / T`` compared with ``b``.

    Pass trimmed counts to get the degrees restricted to Gamma.
    """
    T = counts.T if T is None else T
    if T == 0:
        return DegreeReport(0.0, b, True)
    top = int(np.maximum(counts.in_degree, counts.out_degree).max())
    value = top * counts.n / T
    return DegreeReport(value, b, value <= b)
