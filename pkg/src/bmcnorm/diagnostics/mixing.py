"""Total-variation mixing profile and pseudo-spectral gap of a BMC."""

from dataclasses import dataclass, field

import numpy as np

from ..errors import DenseTooLarge
from ..model import BmcInstance, dense_transition_matrix


@dataclass(frozen=True, eq=False)
class MixingReport:
    """Exact mixing diagnostics.

    ``t_mix[eps]`` is ``None`` when ``d(t) > eps`` for every computed ``t``.
    """

    d_values: np.ndarray
    t_mix: dict = field(default_factory=dict)
    gamma_ps: float = float("nan")
    eta: float = float("nan")
    geometric_bound_ok: bool = False

    @property
    def gamma_ps_lower_bound(self) -> float:
        return 1.0 / (2.0 * (1.0 + 4.0 * self.eta))


def exact_distance_profile(instance: BmcInstance, t_max: int, limit: int = 2000) -> np.ndarray:
    """``d(t) = max_x TV(P^t(x, .), Pi)`` for ``t = 0..t_max`` from dense powers of ``P``."""
    if instance.n > limit:
        raise DenseTooLarge(f"n={instance.n} exceeds dense limit {limit}")
    P = dense_transition_matrix(instance, limit)
    Pi = instance.Pi
    Pt = np.eye(instance.n)
    d = np.empty(t_max + 1)
    for t in range(t_max + 1):
        d[t] = 0.5 * np.abs(Pt - Pi[None, :]).sum(axis=1).max()
        Pt = Pt @ P
    return d


def cluster_distance_profile(instance: BmcInstance, t_max: int) -> np.ndarray:
    """Same profile through K x K powers of ``p``.

    For ``t >= 1`` the law of ``X_t`` given ``X_0 = x`` is uniform inside each
    cluster with cluster masses ``(p^t)[sigma(x)]``, so the distance reduces
    to a cluster-level one. ``d(0) = 1 - min Pi``.
    """
    p, pi = instance.model.p, instance.model.pi
    d = np.empty(t_max + 1)
    d[0] = 1.0 - instance.Pi.min()
    pt = np.eye(instance.K)
    for t in range(1, t_max + 1):
        pt = pt @ p
        d[t] = 0.5 * np.abs(pt - pi[None, :]).sum(axis=1).max()
    return d


def mixing_time(d_values: np.ndarray, eps: float) -> int | None:
    hits = np.flatnonzero(d_values <= eps)
    return int(hits[0]) if hits.size else None


def geometric_bound(eta: float, t_max: int) -> np.ndarray:
    return (1.0 - 1.0 / (2.0 * eta)) ** np.arange(t_max + 1)


def pseudo_spectral_gap(instance: BmcInstance, i_max: int | None = None, limit: int = 500) -> float:
    """``max_i (1 - lambda_2((P*)^i P^i)) / i``.

    ``(P*)^i P^i`` is self-adjoint in ``L2(Pi)`` and similar to ``Q^T Q`` with
    ``Q = D^{1/2} P^i D^{-1/2}``, ``D = Diag(Pi)``; its eigenvalues are the
    squared singular values of ``Q``. Each term is at most ``1 / i``, so the
    scan stops once ``1 / i`` cannot beat the running maximum; ``i_max``
    caps it further.
    """
    if instance.n > limit:
        raise DenseTooLarge(f"n={instance.n} exceeds dense limit {limit}")
    P = dense_transition_matrix(instance, limit)
    root = np.sqrt(instance.Pi)
    Q0 = root[:, None] * P / root[None, :]
    Q = np.eye(instance.n)
    best = -np.inf
    i = 0
    while True:
        i += 1
        if (i_max is not None and i > i_max) or 1.0 / i <= best:
            break
        Q = Q @ Q0
        s = np.linalg.svd(Q, compute_uv=False)
        lam2 = s[1] ** 2 if len(s) > 1 else 0.0
        best = max(best, (1.0 - lam2) / i)
    return float(best)


def absolute_spectral_gap(instance: BmcInstance, limit: int = 500) -> float:
    """``1 - max |lambda|`` over the non-unit eigenvalues of ``P``."""
    lam = np.linalg.eigvals(dense_transition_matrix(instance, limit))
    lam = lam[np.argsort(-np.abs(lam))]
    return float(1.0 - np.abs(lam[1])) if len(lam) > 1 else 1.0


def mixing_report(instance: BmcInstance, t_max: int = 50, epsilons=(0.5, 0.25, 0.1),
                  i_max: int | None = None) -> MixingReport:
    d = exact_distance_profile(instance, t_max)
    eps_set = sorted(set(epsilons) | {e / 2 for e in epsilons}, reverse=True)
    t_mix = {e: mixing_time(d, e) for e in eps_set}
    eta = instance.model.eta
    bound_ok = bool(np.all(d <= geometric_bound(eta, t_max) + 1e-12))
    return MixingReport(d_values=d, t_mix=t_mix, gamma_ps=pseudo_spectral_gap(instance, i_max),
                        eta=eta, geometric_bound_ok=bound_ok)
