"""Command-line interface.

Exit codes: 0 success, 1 ``verify`` found a failing hard check, 2 bad
configuration or model, 3 runtime failure. Data goes to stdout (each run
first echoes its resolved configuration as ``# key = value`` lines);
diagnostics go to stderr.
"""

import argparse
import math
import sys

import numpy as np

from . import __version__
from .config import exact, format_number, load_config, model_from_mapping, parse_matrix, parse_vector
from .diagnostics import (
    Mode,
    cluster_distance_profile,
    degree_bound_report,
    discrepancy_report,
    geometric_bound,
    mixing_report,
)
from .errors import BmcError, ConfigError, ModelError
from .experiments import (
    FIGURE1_REGIMES,
    RegimeSpec,
    SolverParams,
    default_threads,
    emit_csv,
    emit_samples_csv,
    figure1_comparison,
    run_regimes,
)
from .model import (
    FIGURE1_P,
    apply_transition_transpose,
    build_instance,
    default_degree_constant,
    dense_expected_counts,
    entry_bound_constants,
    expected_spectrum,
)
from .sampler import sample_path_counts, write_triplets
from .spectral import (
    CenteredOperator,
    dense_singular_values,
    row_lower_bound,
    top_singular_values,
)
from .trim import TrimPolicy, apply_trim, trim

EXIT_OK, EXIT_CHECK_FAILED, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2, 3


def _fmt(x) -> str:
    return f"{x:.12g}"


def _fmt_list(values) -> str:
    return ",".join(_fmt(v) for v in values)


class Settings:
    """Config-file values overlaid with command-line flags (flags win)."""

    def __init__(self, args):
        self.args = args
        self.file = load_config(args.config) if getattr(args, "config", None) else {}
        self.resolved = {}

    def get(self, key, flag=None, default=None, table=None, cast=None):
        flag = key if flag is None else flag
        value = getattr(self.args, flag, None)
        if value is None:
            src = self.file.get(table, {}) if table else self.file
            value = src.get(key, default)
        if cast is not None and value is not None:
            try:
                value = cast(value)
            except ConfigError:
                raise
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"bad value for {key}: {value!r}") from exc
        self.resolved[f"{table}.{key}" if table else key] = value
        return value

    def model(self):
        a = self.args
        if a.alpha is not None or a.p is not None:
            if a.alpha is None or a.p is None:
                raise ConfigError("--alpha and --p must be given together")
            data = {"alpha": parse_vector(a.alpha), "p": parse_matrix(a.p)}
            source = "flags"
        elif "alpha" in self.file or "p" in self.file:
            data = self.file
            source = a.config
        else:
            data = {"alpha": ["1/3"] * 3, "p": FIGURE1_P.tolist()}
            source = "preset:figure1"
        model = model_from_mapping(data)
        self.resolved["model.source"] = source
        self.resolved["K"] = model.K
        self.resolved["alpha"] = "[" + ", ".join(format_number(exact(x)) for x in data["alpha"]) + "]"
        self.resolved["p"] = "[" + "; ".join(", ".join(format_number(exact(v)) for v in row) for row in data["p"]) + "]"
        return model

    def echo(self, out=None):
        out = out or sys.stdout
        for key in sorted(self.resolved):
            print(f"# {key} = {self.resolved[key]}", file=out)
        out.flush()


def _default_T(n: int) -> int:
    return int(math.floor(n * math.log(n))) if n > 1 else 1


def _common(settings):
    model = settings.model()
    n = settings.get("n", default=100, cast=int)
    T = settings.get("T", default=_default_T(n), cast=int)
    seed = settings.get("seed", default=0, cast=int)
    return model, n, T, seed


def cmd_simulate(args) -> int:
    s = Settings(args)
    model, n, T, seed = _common(s)
    out = s.get("out", cast=str)
    if out is None:
        raise ConfigError("simulate needs --out")
    instance = build_instance(model, n)
    s.echo()
    counts = sample_path_counts(instance, T, seed)
    write_triplets(counts, out)
    print(f"total={counts.total}")
    print(f"nnz={counts.nnz}")
    print(f"start_state={counts.start_state + 1}")
    print(f"end_state={counts.end_state + 1}")
    return EXIT_OK


def cmd_spectrum(args) -> int:
    s = Settings(args)
    model, n, T, seed = _common(s)
    policy = s.get("trim", default="none", cast=_policy)
    k = s.get("k", default=model.K + 1, table="spectral", cast=int)
    tol = s.get("tol", default=1e-8, table="spectral", cast=float)
    max_iter = s.get("max_iter", default=None, table="spectral", cast=int)
    s.resolved["dense"] = bool(args.dense)
    instance = build_instance(model, n)
    k = min(k, n)
    s.echo()
    counts = sample_path_counts(instance, T, seed)
    trimmed, gamma = trim(counts, policy)
    op = CenteredOperator(trimmed, instance, T)
    if args.dense:
        centered = dense_singular_values(op.dense(limit=2000))[:k]
        raw = dense_singular_values(trimmed.toarray())[:k]
    else:
        centered = top_singular_values(op, k, tol=tol, max_iter=max_iter, seed=seed).values
        raw = top_singular_values(trimmed.counts.astype(float), k, tol=tol, max_iter=max_iter, seed=seed).values
    print(f"m={gamma.m}")
    print(f"sigma_centered={_fmt_list(centered)}")
    print(f"sigma_counts={_fmt_list(raw)}")
    print(f"sigma_expected={_fmt_list(expected_spectrum(instance, T).singular_values)}")
    print(f"scaled_norm={_fmt(math.sqrt(n / T) * centered[0]) if T > 0 else 0}")
    return EXIT_OK


def _policy(text):
    if isinstance(text, TrimPolicy):
        return text
    try:
        return TrimPolicy.parse(str(text))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _float_list(text):
    if isinstance(text, (list, tuple)):
        return [float(x) for x in text]
    return [float(x) for x in str(text).split(",") if x.strip()]


def _int_list(text):
    if isinstance(text, (list, tuple)):
        return [int(x) for x in text]
    return [int(x) for x in str(text).split(",") if x.strip()]


def cmd_experiment(args) -> int:
    s = Settings(args)
    model = s.model()
    regimes = s.get("regimes", default=list(FIGURE1_REGIMES), table="experiment", cast=_float_list)
    grid = s.get("n_grid", flag="n_grid", default=[500, 1000, 2000, 4000], table="experiment", cast=_int_list)
    reps = s.get("replications", default=48, table="experiment", cast=int)
    policy = s.get("trim", default="none", cast=_policy)
    seed = s.get("seed", default=0, cast=int)
    tol = s.get("tol", default=1e-8, table="spectral", cast=float)
    max_iter = s.get("max_iter", default=None, table="spectral", cast=int)
    out = s.get("out", cast=str)
    if out is None:
        raise ConfigError("experiment needs --out")
    s.resolved["samples_out"] = args.samples_out
    s.resolved["threads"] = args.threads
    if reps < 1:
        raise ConfigError("need at least one replication")
    specs = [RegimeSpec(a, tuple(grid), reps, policy, seed) for a in regimes]
    s.echo()
    stats = run_regimes(model, specs, SolverParams(tol=tol, max_iter=max_iter), threads=args.threads)
    emit_csv(stats, out)
    if args.samples_out:
        emit_samples_csv(stats, args.samples_out)
    print(f"rows={len(stats)}")
    if args.compare:
        for c in figure1_comparison(stats):
            status = "ok" if c["ok"] else "off"
            print(f"figure1 a={_fmt(c['exponent'])} n={c['n']} mean={_fmt(c['mean'])} "
                  f"paper={_fmt(c['paper_mean'])} slack={_fmt(c['slack'])} {status}")
    return EXIT_OK


class _Checks:
    def __init__(self):
        self.rows = []

    def add(self, name, ok, value="", hard=True):
        self.rows.append((name, None if ok is None else bool(ok), value, hard))

    def failed(self):
        return any(hard and ok is False for _, ok, _, hard in self.rows)

    def emit(self, fmt, out=None):
        out = out or sys.stdout
        for name, ok, value, hard in self.rows:
            status = "skip" if ok is None else ("pass" if ok else "fail")
            if fmt == "kv":
                print(f"check={name} status={status} hard={int(hard)} value={value}", file=out)
            else:
                tag = "" if hard else " (reported)"
                print(f"{status.upper():4s}  {name}{tag}: {value}", file=out)


def cmd_verify(args) -> int:
    s = Settings(args)
    model = s.model()
    n = s.get("n", default=30, cast=int)
    T = s.get("T", default=_default_T(n), cast=int)
    seed = s.get("seed", default=0, cast=int)
    t_max = s.get("t_max", default=50, cast=int)
    budget = s.get("budget", default=10_000, cast=int)
    fmt = s.get("format", default="text", cast=str)
    instance = build_instance(model, n)
    s.echo()
    checks = _Checks()
    rng = np.random.default_rng(seed)

    checks.add("model_stationary", np.max(np.abs(model.pi @ model.p - model.pi)) <= 1e-12,
               _fmt(np.max(np.abs(model.pi @ model.p - model.pi))))
    res = np.max(np.abs(apply_transition_transpose(instance, instance.Pi) - instance.Pi))
    checks.add("instance_stationary", res <= 1e-12, _fmt(res))
    spec = expected_spectrum(instance, T).singular_values
    if n <= 300:
        dense = dense_singular_values(dense_expected_counts(instance, T))
        rel = np.max(np.abs(dense[:model.K] - spec) / spec)
        tail = dense[model.K] / dense[0] if n > model.K else 0.0
        checks.add("expected_spectrum_dense", rel <= 1e-10 and tail <= 1e-10, f"rel={_fmt(rel)} tail={_fmt(tail)}")
    else:
        checks.add("expected_spectrum_dense", None, "n > 300")
    n1, n2 = entry_bound_constants(model)
    entries = instance.state_mass[:, None] * model.p / instance.cluster_sizes[None, :] * n * n
    checks.add("entry_bounds", n1 <= entries.min() and entries.max() <= n2,
               f"range=[{_fmt(entries.min())},{_fmt(entries.max())}] bounds=[{_fmt(n1)},{_fmt(n2)}]", hard=False)

    counts = sample_path_counts(instance, T, seed)
    flow = counts.out_degree - counts.in_degree
    ends = {counts.start_state, counts.end_state}
    inner_ok = all(flow[x] == 0 for x in range(n) if x not in ends)
    checks.add("flow_conservation", counts.total == T and inner_ok and np.all(np.abs(flow) <= 1),
               f"total={counts.total}")

    op = CenteredOperator(counts, instance, T)
    worst = 0.0
    for _ in range(10):
        u, v = rng.standard_normal(n), rng.standard_normal(n)
        lhs, rhs = u @ op.matvec(v), op.rmatvec(u) @ v
        worst = max(worst, abs(lhs - rhs) / max(abs(lhs), abs(rhs), 1e-300))
    checks.add("operator_adjoint", worst <= 1e-10, _fmt(worst))
    if n <= 200:
        D = op.dense()
        v = rng.standard_normal(n)
        rel = np.linalg.norm(op.matvec(v) - D @ v) / max(np.linalg.norm(D @ v), 1e-300)
        checks.add("operator_dense", rel <= 1e-12, _fmt(rel))
    est = top_singular_values(op, 1, seed=seed)
    bound = op.norm_upper_bound()
    checks.add("solver_converged", est.converged, f"residual={_fmt(est.residuals[0])}")
    checks.add("solver_upper_bound", est.values[0] <= bound * (1 + 1e-12),
               f"sigma1={_fmt(est.values[0])} bound={_fmt(bound)}")
    lower = row_lower_bound(counts, instance, T)
    checks.add("row_lower_bound", lower <= est.values[0] * (1 + 1e-8) + 1e-12,
               f"row={_fmt(lower)} sigma1={_fmt(est.values[0])}")

    trimmed, gamma = trim(counts, TrimPolicy("auto"))
    checks.add("trim_idempotent",
               (apply_trim(trimmed, gamma).counts != trimmed.counts).nnz == 0, f"m={gamma.m}")
    deg = degree_bound_report(trimmed, T, default_degree_constant(model))
    checks.add("degree_bound", deg.holds, f"max_scaled={_fmt(deg.max_scaled_degree)} b={_fmt(deg.bound)}", hard=False)
    mode = Mode.EXHAUSTIVE if n <= 10 else Mode.MONTE_CARLO
    disc = discrepancy_report(counts, T, mode=mode, subset_budget=budget, seed=seed)
    checks.add("discrepancy", disc.holds_for(disc.d1, disc.d2),
               f"mode={mode.value} pairs={disc.pairs_checked} min_d1={_fmt(disc.minimal_d1)} "
               f"min_d2={_fmt(disc.minimal_d2)}", hard=False)

    if n <= 500:
        rep = mixing_report(instance, t_max)
        d = rep.d_values
        checks.add("mixing_monotone", np.all(np.diff(d) <= 1e-12) and d[0] <= 1, f"d1={_fmt(d[1]) if t_max else ''}")
        alt = cluster_distance_profile(instance, t_max)
        checks.add("mixing_two_routes", np.max(np.abs(alt - d)) <= 1e-12, _fmt(np.max(np.abs(alt - d))))
        ok = True
        for eps in (0.5, 0.25):
            t = rep.t_mix.get(eps / 2)
            ok = ok and t is not None and (t == 0 or rep.gamma_ps >= (1 - eps) / t - 1e-12)
        checks.add("gamma_ps_vs_tmix", ok, f"gamma_ps={_fmt(rep.gamma_ps)}")
        bound_ok = np.all(d <= geometric_bound(rep.eta, t_max) + 1e-12)
        checks.add("geometric_mixing_bound", bound_ok, f"eta={_fmt(rep.eta)}", hard=False)
        checks.add("gamma_ps_lower_bound", rep.gamma_ps >= rep.gamma_ps_lower_bound,
                   f"gamma_ps={_fmt(rep.gamma_ps)} bound={_fmt(rep.gamma_ps_lower_bound)}", hard=False)
    else:
        checks.add("mixing", None, "n > 500")

    checks.emit(fmt)
    failed = checks.failed()
    print(f"# verdict = {'fail' if failed else 'pass'}", file=sys.stderr)
    return EXIT_CHECK_FAILED if failed else EXIT_OK


def cmd_mixing(args) -> int:
    s = Settings(args)
    model = s.model()
    n = s.get("n", default=30, cast=int)
    t_max = s.get("t_max", default=20, cast=int)
    eps = s.get("eps", default=[0.5, 0.25, 0.1], cast=_float_list)
    instance = build_instance(model, n)
    s.echo()
    rep = mixing_report(instance, t_max, epsilons=eps)
    geo = geometric_bound(rep.eta, t_max)
    print("t,d,geometric_bound")
    for t, (dv, gv) in enumerate(zip(rep.d_values, geo)):
        print(f"{t},{_fmt(dv)},{_fmt(gv)}")
    for e in sorted(rep.t_mix, reverse=True):
        print(f"# t_mix({_fmt(e)}) = {rep.t_mix[e]}")
    print(f"# gamma_ps = {_fmt(rep.gamma_ps)}")
    print(f"# gamma_ps_lower_bound = {_fmt(rep.gamma_ps_lower_bound)}")
    return EXIT_OK


def _add_model_args(p):
    p.add_argument("--config", help="TOML model/config file")
    p.add_argument("--alpha", help="cluster ratios, comma separated (fractions allowed)")
    p.add_argument("--p", help="cluster transition matrix, rows separated by ';'")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bmcnorm", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(name, help_):
        p = sub.add_parser(name, help=help_)
        _add_model_args(p)
        p.add_argument("--threads", type=int, default=None,
                       help="worker cap (default: $BMCNORM_THREADS or all cores)")
        return p

    p = common("simulate", "sample a path and write its transition-count triplets")
    p.add_argument("--n", type=int)
    p.add_argument("--T", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.set_defaults(func=cmd_simulate)

    p = common("spectrum", "singular values of the centered and raw count matrices")
    p.add_argument("--n", type=int)
    p.add_argument("--T", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--trim", help="auto | none | m=<int>")
    p.add_argument("--k", type=int)
    p.add_argument("--tol", type=float)
    p.add_argument("--max-iter", dest="max_iter", type=int)
    p.add_argument("--dense", action="store_true", help="use dense SVD instead of the iterative solver")
    p.set_defaults(func=cmd_spectrum)

    p = common("experiment", "replicate the scaled spectral norm over regimes and sizes")
    p.add_argument("--regimes", help="comma separated exponents a in T = round(n (ln n)^a)")
    p.add_argument("--n-grid", dest="n_grid")
    p.add_argument("--replications", type=int)
    p.add_argument("--trim")
    p.add_argument("--seed", type=int)
    p.add_argument("--tol", type=float)
    p.add_argument("--max-iter", dest="max_iter", type=int)
    p.add_argument("--out")
    p.add_argument("--samples-out", dest="samples_out")
    p.add_argument("--compare", action="store_true", help="compare against the published Figure-1 points")
    p.set_defaults(func=cmd_experiment)

    p = common("verify", "run the diagnostic suite")
    p.add_argument("--n", type=int)
    p.add_argument("--T", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--t-max", dest="t_max", type=int)
    p.add_argument("--budget", type=int, help="Monte Carlo subset-pair budget for discrepancy")
    p.add_argument("--format", choices=["text", "kv"])
    p.set_defaults(func=cmd_verify)

    p = common("mixing", "exact total-variation mixing profile")
    p.add_argument("--n", type=int)
    p.add_argument("--t-max", dest="t_max", type=int)
    p.add_argument("--eps")
    p.set_defaults(func=cmd_mixing)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.threads is None:
        args.threads = default_threads()
    try:
        return args.func(args)
    except ModelError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (BmcError, OSError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
