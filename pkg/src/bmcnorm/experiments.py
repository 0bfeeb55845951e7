"""Replication harness for the scaled spectral norm across trajectory regimes.

Trajectory length in regime ``a`` is ``T_n = round(n (ln n)^a)`` (half-up).
Replication ``r`` of every ``(a, n)`` cell uses sampler seed
``base_seed ^ r``; workers may run in any order but results are reduced
in replication order, so output is identical for any thread count.
"""

import csv
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import stats

from .errors import TooFewSamples, TooSmall
from .model import ClusterModel, build_instance
from .sampler import replication_seed, sample_path_counts
from .spectral import scaled_spectral_norm
from .trim import TrimPolicy, trim

CSV_HEADER = ["regime_a", "n", "T", "replications", "mean", "ci_halfwidth", "min", "max"]
SAMPLES_HEADER = ["regime_a", "n", "replication", "value"]

# Published Figure-1 points: regime exponent -> n -> (mean, 95% CI halfwidth)
FIGURE1_REFERENCE = {
    -0.5: {500: (3.28725, 0.0677924), 1000: (3.45281, 0.0666286), 1500: (4.14365, 0.300585),
           2000: (3.71451, 0.145113), 2500: (4.15558, 0.194073), 3000: (4.22415, 0.197321),
           3500: (4.25139, 0.297361), 4000: (4.17051, 0.146184), 4500: (4.10913, 0.141477),
           5000: (4.34357, 0.192181), 5500: (4.27352, 0.137885), 6000: (4.21774, 0.140526),
           6500: (4.42559, 0.215131), 7000: (4.54515, 0.290811), 7500: (4.42334, 0.244211),
           8000: (4.57703, 0.218095), 8500: (4.44615, 0.235822), 9000: (4.50155, 0.185001),
           9500: (4.45586, 0.220145), 10000: (4.50057, 0.25157)},
    0.0: {500: (2.87541, 0.0764689), 1000: (3.04789, 0.107064), 1500: (2.85443, 0.0491279),
          2000: (3.00511, 0.0843903), 2500: (3.13723, 0.0982087), 3000: (3.04822, 0.070324),
          3500: (3.11049, 0.0913454), 4000: (3.03615, 0.0630791), 4500: (3.10517, 0.0947568),
          5000: (3.07314, 0.0695527), 5500: (3.08741, 0.0636043), 6000: (3.09882, 0.0655236),
          6500: (3.08125, 0.0581683), 7000: (3.1629, 0.101004), 7500: (3.13404, 0.0743088),
          8000: (3.1126, 0.0655446), 8500: (3.22785, 0.11261), 9000: (3.17123, 0.0728403),
          9500: (3.1675, 0.0864455), 10000: (3.12255, 0.0663986)},
    0.5: {500: (2.38347, 0.0339093), 1000: (2.48488, 0.0676725), 1500: (2.45595, 0.0466396),
          2000: (2.50103, 0.0453305), 2500: (2.46123, 0.0302165), 3000: (2.45217, 0.0330478),
          3500: (2.44731, 0.0340509), 4000: (2.45727, 0.0271101), 4500: (2.47696, 0.0370446),
          5000: (2.4534, 0.0252748), 5500: (2.46593, 0.0339955), 6000: (2.46015, 0.0312743),
          6500: (2.45796, 0.0255426), 7000: (2.48182, 0.0301296), 7500: (2.4737, 0.0341746),
          8000: (2.48062, 0.0320543), 8500: (2.46073, 0.0296586), 9000: (2.45516, 0.0184123),
          9500: (2.48719, 0.0257293), 10000: (2.46401, 0.0252067)},
    1.0: {500: (2.19652, 0.0208963), 1000: (2.18045, 0.0126127), 1500: (2.17169, 0.0118441),
          2000: (2.18613, 0.0238793), 2500: (2.16892, 0.0120181), 3000: (2.15511, 0.010495),
          3500: (2.14637, 0.00713497), 4000: (2.15018, 0.00763181), 4500: (2.16042, 0.0148203),
          5000: (2.15281, 0.010126), 5500: (2.16514, 0.0234025), 6000: (2.15046, 0.00908857),
          6500: (2.14705, 0.00811444), 7000: (2.14941, 0.00836024), 7500: (2.15186, 0.0100032),
          8000: (2.14572, 0.00855014), 8500: (2.14873, 0.00732343), 9000: (2.15439, 0.0118692),
          9500: (2.14562, 0.0081208), 10000: (2.14981, 0.00909546)},
}
FIGURE1_REGIMES = (-0.5, 0.0, 0.5, 1.0)


def trajectory_length(n: int, a: float) -> int:
    return int(math.floor(n * math.log(n) ** a + 0.5))


@dataclass(frozen=True)
class SolverParams:
    tol: float = 1e-8
    max_iter: int | None = None
    ncv: int | None = None
    seed: int = 0


@dataclass(frozen=True)
class RegimeSpec:
    exponent: float
    n_grid: tuple
    replications: int = 48
    trim_policy: TrimPolicy = field(default_factory=TrimPolicy)
    base_seed: int = 0

    def __post_init__(self):
        for n in self.n_grid:
            if n < 3 or trajectory_length(n, self.exponent) < 1:
                raise TooSmall(f"n={n} is too small for regime a={self.exponent}")
        if self.replications < 1:
            raise ValueError("need at least one replication")


@dataclass(frozen=True, eq=False)
class ReplicationStats:
    exponent: float
    n: int
    T: int
    samples: np.ndarray
    mean: float
    ci_halfwidth: float

    @property
    def replications(self) -> int:
        return len(self.samples)


def confidence_interval(samples, level: float = 0.95) -> tuple[float, float]:
    """Student-t interval ``(mean, t_{(1+level)/2, R-1} sd / sqrt(R))``."""
    x = np.asarray(samples, dtype=float)
    if x.size < 2:
        raise TooFewSamples("a confidence interval needs at least two samples")
    mean = float(x.mean())
    sd = float(x.std(ddof=1))
    q = float(stats.t.ppf(0.5 + level / 2, x.size - 1))
    return mean, q * sd / math.sqrt(x.size)


def replicate(model: ClusterModel, n: int, T: int, policy: TrimPolicy, seed: int,
              solver: SolverParams = SolverParams()) -> float:
    """One sample of ``sqrt(n / T) sigma_1(N_hat_Gamma - N)``."""
    instance = build_instance(model, n)
    trimmed, _ = trim(sample_path_counts(instance, T, seed), policy)
    return scaled_spectral_norm(trimmed, instance, T, tol=solver.tol, max_iter=solver.max_iter,
                                seed=solver.seed, ncv=solver.ncv)


def _replicate_args(args):
    return replicate(*args)


def default_threads() -> int:
    env = os.environ.get("BMCNORM_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def _summarise(exponent, n, T, samples) -> ReplicationStats:
    samples = np.asarray(samples, dtype=float)
    if samples.size >= 2:
        mean, hw = confidence_interval(samples)
    else:
        mean, hw = float(samples.mean()), float("nan")
    return ReplicationStats(exponent, n, T, samples, mean, hw)


def run_regimes(model: ClusterModel, specs, solver: SolverParams = SolverParams(),
                threads: int | None = None) -> list[ReplicationStats]:
    """Run every (regime, n, replication) task, in parallel when ``threads > 1``."""
    threads = default_threads() if threads is None else max(1, int(threads))
    cells, tasks = [], []
    for spec in specs:
        for n in spec.n_grid:
            T = trajectory_length(n, spec.exponent)
            cells.append((spec.exponent, n, T, spec.replications))
            tasks += [(model, n, T, spec.trim_policy, replication_seed(spec.base_seed, r), solver)
                      for r in range(spec.replications)]
    if threads == 1 or len(tasks) <= 1:
        values = [_replicate_args(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            values = list(pool.map(_replicate_args, tasks, chunksize=4))
    out, pos = [], 0
    for exponent, n, T, reps in cells:
        out.append(_summarise(exponent, n, T, values[pos:pos + reps]))
        pos += reps
    return out


def run_regime(model: ClusterModel, spec: RegimeSpec, solver: SolverParams = SolverParams(),
               threads: int | None = None) -> list[ReplicationStats]:
    return run_regimes(model, [spec], solver, threads)


def _fmt(x) -> str:
    return f"{x:.9g}"


def emit_csv(stats_list, path) -> None:
    """Summary table sorted by regime then ``n``, numbers at 9 significant digits."""
    rows = sorted(stats_list, key=lambda s: (s.exponent, s.n))
    with open(Path(path), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for s in rows:
            w.writerow([_fmt(s.exponent), s.n, s.T, s.replications, _fmt(s.mean),
                        _fmt(s.ci_halfwidth), _fmt(s.samples.min()), _fmt(s.samples.max())])


def emit_samples_csv(stats_list, path) -> None:
    rows = sorted(stats_list, key=lambda s: (s.exponent, s.n))
    with open(Path(path), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SAMPLES_HEADER)
        for s in rows:
            for r, v in enumerate(s.samples):
                w.writerow([_fmt(s.exponent), s.n, r, _fmt(v)])


def read_csv(path) -> list[dict]:
    with open(Path(path), newline="") as fh:
        rows = list(csv.DictReader(fh))
    ints = {"n", "T", "replications"}
    return [{k: int(v) if k in ints else float(v) for k, v in row.items()} for row in rows]


def figure1_comparison(stats_list) -> list[dict]:
    """Pair each reproduced cell with the published point, if one exists.

    ``ok`` is true when the means differ by at most three times the sum of
    both confidence halfwidths.
    """
    out = []
    for s in sorted(stats_list, key=lambda s: (s.exponent, s.n)):
        ref = FIGURE1_REFERENCE.get(float(s.exponent), {}).get(s.n)
        if ref is None:
            continue
        slack = 3.0 * (ref[1] + s.ci_halfwidth)
        out.append(dict(exponent=s.exponent, n=s.n, mean=s.mean, ci_halfwidth=s.ci_halfwidth,
                        paper_mean=ref[0], paper_halfwidth=ref[1], slack=slack,
                        ok=abs(s.mean - ref[0]) <= slack))
    return out
