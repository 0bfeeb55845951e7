"""Grid epsilon-nets of the unit ball and the light/heavy pair split."""

from dataclasses import dataclass

import numpy as np
from scipy.spatial import ConvexHull, QhullError

from ..errors import TooLarge

NET_DIM_LIMIT = 8
NET_POINT_LIMIT = 5_000_000


@dataclass(frozen=True, eq=False)
class EpsilonNet:
    """All points of ``(eps / sqrt(n)) Z^n`` with Euclidean norm at most one."""

    epsilon: float
    n: int
    points: np.ndarray

    @property
    def step(self) -> float:
        return self.epsilon / np.sqrt(self.n)

    def __len__(self) -> int:
        return self.points.shape[0]

    @property
    def cardinality_bound(self) -> float:
        return (9.0 / self.epsilon) ** self.n


def _lattice_points(n: int, radius_sq: float, limit: int) -> np.ndarray:
    # integer vectors z with |z|^2 <= radius_sq, grown one coordinate at a time
    r = int(np.floor(np.sqrt(radius_sq) + 1e-12))
    values = np.arange(-r, r + 1)
    pts = np.zeros((1, 0), dtype=np.int64)
    norms = np.zeros(1, dtype=np.int64)
    for _ in range(n):
        new_norms = norms[:, None] + values[None, :] ** 2
        keep = new_norms <= radius_sq + 1e-9
        rows, cols = np.nonzero(keep)
        if rows.size > limit:
            raise TooLarge(f"net would exceed {limit} points")
        pts = np.hstack([pts[rows], values[cols, None]])
        norms = new_norms[rows, cols]
    return pts


def epsilon_net(n: int, epsilon: float, limit: int = NET_POINT_LIMIT) -> EpsilonNet:
    if n > NET_DIM_LIMIT:
        raise TooLarge(f"epsilon nets are enumerated only for n <= {NET_DIM_LIMIT}")
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    # x = z * eps / sqrt(n) with |x| <= 1  <=>  |z|^2 <= n / eps^2
    z = _lattice_points(n, n / epsilon**2, limit)
    points = z * (epsilon / np.sqrt(n))
    points.setflags(write=False)
    return EpsilonNet(float(epsilon), int(n), points)


def net_witness(x: np.ndarray, epsilon: float) -> np.ndarray:
    """Net point obtained by truncating each coordinate of ``x`` toward zero.

    Stays in the unit ball whenever ``x`` does and lies within ``epsilon`` of ``x``.
    """
    x = np.asarray(x, dtype=float)
    step = epsilon / np.sqrt(x.shape[-1])
    return np.trunc(x / step) * step


def _hull_vertices(points: np.ndarray) -> np.ndarray:
    if points.shape[1] == 1:
        return points[[np.argmin(points[:, 0]), np.argmax(points[:, 0])]]
    try:
        return points[ConvexHull(points).vertices]
    except QhullError:
        return points


@dataclass(frozen=True)
class NetBoundCheck:
    true_norm: float
    net_max: float
    net_bound: float
    holds: bool


def net_maximum(A: np.ndarray, net: EpsilonNet) -> float:
    """``max_{x, y in net} |x^T A y|``.

    A bilinear form attains its maximum over a finite set at vertices of the
    convex hulls of each factor, so only hull vertices are scanned.
    """
    H = _hull_vertices(net.points)
    AH = A @ H.T
    best = 0.0
    for lo in range(0, H.shape[0], 512):
        best = max(best, float(np.abs(H[lo:lo + 512] @ AH).max()))
    return best


def net_norm_bound_check(A: np.ndarray, epsilon: float, net: EpsilonNet | None = None) -> NetBoundCheck:
    """Compare ``||A||`` with ``max_net |x^T A y| / (1 - 3 eps)``."""
    A = np.asarray(A, dtype=float)
    n = A.shape[0]
    if A.shape != (n, n):
        raise ValueError("A must be square")
    if n > 6:
        raise TooLarge(f"net norm check enumerates nets only for n <= 6, got {n}")
    net = epsilon_net(n, epsilon) if net is None else net
    true_norm = float(np.linalg.norm(A, 2))
    net_max = net_maximum(A, net)
    bound = net_max / (1.0 - 3.0 * epsilon)
    return NetBoundCheck(true_norm, net_max, bound, true_norm <= bound + 1e-9)


@dataclass(frozen=True)
class LightHeavySplit:
    light: float
    heavy: float
    total: float


def light_pair_threshold(n: int, T: float) -> float:
    return np.sqrt(T / n) / n


def light_heavy_split(x: np.ndarray, y: np.ndarray, T: float, A, limit: int = 200) -> LightHeavySplit:
    """Split ``|x^T A y|`` into light (``|x_i y_j| <= sqrt(T/n)/n``) and heavy pair sums."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    n = x.shape[0]
    if n > limit:
        raise TooLarge(f"pair enumeration limited to n <= {limit}")
    A = A.toarray() if hasattr(A, "toarray") else np.asarray(A, dtype=float)
    outer = np.outer(x, y)
    light = np.abs(outer) <= light_pair_threshold(n, T)
    terms = outer * A
    L = abs(float(terms[light].sum()))
    H = abs(float(terms[~light].sum()))
    return LightHeavySplit(L, H, abs(float(x @ A @ y)))


def heavy_mass(x: np.ndarray, y: np.ndarray, T: float) -> float:
    """``sum |x_i y_j|`` over heavy pairs."""
    outer = np.abs(np.outer(x, y))
    return float(outer[outer > light_pair_threshold(len(x), T)].sum())
