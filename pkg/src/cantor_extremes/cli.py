"""Command line entry point: ``python3 -m cantor_extremes <command> config.json``.

Every parameter lives in the JSON config; the command line only picks the
subcommand and the file.  Unknown keys are rejected.  Each run writes
``report.json`` (byte-identical for identical version, config and seed) and
``timing.json`` (wall time, kept apart so the report stays reproducible).
The exit code is 0 iff every check passed.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import math
import sys
import time
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Optional

import numpy as np

from . import __version__
from .errors import AlphaOne, CantorExtremesError, ConfigError, InsufficientSample
from .estimators import (
    cluster_agreement,
    cluster_size_distribution,
    decluster_runs,
    extremal_index_runs,
    hill_estimator,
    sample_anchored_windows,
    simulate_observable_stream,
    smalljumps_diagnostic,
    windows_tail_report,
)
from .geometry import exceedance_set, q_run_set, rho_ratio
from .limit_process import (
    V_terminal_samples,
    build_repp,
    check_compensator,
    decoration_moment,
    excursion,
    excursion_grid,
    ks_distance,
    partial_sum_path,
    partial_sum_terminal,
    profile_is_geometric,
    simulate_V,
    simulate_V_compensated,
    write_csv,
)
from .map_core import TERNARY, MapSpec, lambda_n, map_from_json, load_map, parse_rational
from .observable import (
    F_exact,
    GapWord,
    centering_cn,
    centering_quadrature,
    check_alpha,
    default_scales,
    psi_exact,
    words_of_depth,
)
from .seeding import derive_seed, run_replicas

# ---------------------------------------------------------------------------
# configuration


@dataclass
class CommonConfig:
    map: Any = None                 # path to a map JSON file, an inline map object, or None for ternary
    output_dir: str = "out"
    format: str = "json"
    seed: int = 20240601


@dataclass
class ExactConfig(CommonConfig):
    f_depths: int = 40
    monotone_depth: int = 12
    n_grid: list = field(default_factory=lambda: [64, 100, 1000, 10**4, 10**5, 10**6])
    tau_grid: list = field(default_factory=lambda: ["1/2", "1", "3/2", "2", "3"])
    q_values: list = field(default_factory=lambda: [1, 2, 3])
    rho_n_grid: list = field(default_factory=lambda: [10**3, 10**4, 10**5, 10**6])
    rho_tau: list = field(default_factory=lambda: ["1", "2"])
    rho_final_max: float = 1e-2


@dataclass
class EstimateConfig(CommonConfig):
    replicas: int = 1
    workers: int = 1
    n: int = 10**4
    tau: str = "1"
    alpha: float = 0.5
    length: int = 10**7
    theta_tol: float = 0.05
    size_tau: str = "10"
    tv_tol: float = 0.05
    mean_tol: float = 0.2
    kmax: int = 10
    hill_alphas: list = field(default_factory=lambda: [0.5, 0.8, 1.5])
    hill_n: int = 10**6
    hill_k: int = 2 * 10**5
    hill_tol: float = 0.03
    anchored_n: int = 10**9
    anchored_count: int = 2000
    match_threshold: float = 0.95
    q_agreement_min: float = 0.999
    smalljumps_alpha: float = 1.5
    smalljumps_n: int = 10**4
    smalljumps_epsilons: list = field(default_factory=lambda: [0.1, 0.05, 0.01])
    smalljumps_length: int = 10**6
    smalljumps_b: float = 2.0


@dataclass
class LimitsConfig(CommonConfig):
    alpha: float = 0.5
    n: int = 10**4
    replicas: int = 2000
    workers: int = 1
    ks_tol: float = 0.06
    mark_max: float = 1e4
    horizon: float = 1.0
    epsilon: float = 0.01
    repp_tau: float = 1.0
    repp_horizon: int = 400
    profile_fraction_min: float = 0.9


@dataclass
class PlotdataConfig(CommonConfig):
    psi_levels: int = 6
    f_levels: int = 10
    path_n: int = 10**4
    alpha: float = 0.5
    excursion_points: int = 101


COMMANDS = {"exact": ExactConfig, "estimate": EstimateConfig, "limits": LimitsConfig, "plotdata": PlotdataConfig}


def parse_config(command: str, doc: dict):
    cls = COMMANDS[command]
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(doc) - names)
    if unknown:
        raise ConfigError(f"unknown config key(s) for '{command}': {', '.join(unknown)}")
    cfg = cls(**doc)
    _validate(cfg)
    return cfg


def _validate(cfg) -> None:
    if cfg.format not in ("json", "csv"):
        raise ConfigError(f"format: expected 'json' or 'csv', got {cfg.format!r}")
    for name in ("alpha", "smalljumps_alpha"):
        if hasattr(cfg, name):
            _check_alpha_param(name, getattr(cfg, name))
    for a in getattr(cfg, "hill_alphas", []):
        _check_alpha_param("hill_alphas", a)
    for name in ("tau", "size_tau"):
        if hasattr(cfg, name):
            try:
                if parse_rational(str(getattr(cfg, name))) <= 0:
                    raise ConfigError(f"{name}: must be positive")
            except ConfigError as exc:
                raise ConfigError(f"{name}: {exc}") from exc
    for name in ("tau_grid", "rho_tau"):
        for t in getattr(cfg, name, []):
            try:
                parse_rational(t)
            except ConfigError as exc:
                raise ConfigError(f"{name}: {exc}") from exc
    for name in ("replicas", "workers"):
        if hasattr(cfg, name) and getattr(cfg, name) < 1:
            raise ConfigError(f"{name}: must be >= 1")
    for name in ("psi_levels", "f_levels"):
        if hasattr(cfg, name) and getattr(cfg, name) < 1:
            raise ConfigError(f"{name}: resolution must be >= 2 grid points")
    if hasattr(cfg, "horizon") and cfg.horizon < 0:
        raise ConfigError("horizon: must be >= 0")


def _check_alpha_param(name, a):
    try:
        check_alpha(a)
    except AlphaOne as exc:
        raise ConfigError(f"{name}: alpha = 1 is an unsupported parameter") from exc
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{name}: {exc}") from exc


def resolve_map(raw) -> MapSpec:
    if raw is None:
        return TERNARY
    try:
        if isinstance(raw, dict):
            return map_from_json(raw)
        return load_map(raw)
    except CantorExtremesError as exc:
        raise ConfigError(f"map: {exc}") from exc


# ---------------------------------------------------------------------------
# reports


def _jsonable(x):
    if isinstance(x, Fraction):
        return f"{x.numerator}/{x.denominator}"
    if isinstance(x, (np.floating,)):
        return float(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    if isinstance(x, float) and not math.isfinite(x):
        return repr(x)
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    return x


@dataclass
class RunReport:
    command: str
    config: dict
    seed: int
    checks: list = field(default_factory=list)
    version: str = __version__

    def add(self, name: str, value, target, tolerance, passed: bool) -> None:
        self.checks.append({"name": name, "value": _jsonable(value), "target": _jsonable(target),
                            "tolerance": _jsonable(tolerance), "pass": bool(passed)})

    @property
    def passed(self) -> bool:
        return all(c["pass"] for c in self.checks)

    def to_json(self) -> str:
        doc = {"version": self.version, "command": self.command, "config": _jsonable(self.config),
               "seed": self.seed, "checks": self.checks, "all_pass": self.passed}
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def _report(command, cfg) -> RunReport:
    return RunReport(command, dataclasses.asdict(cfg), cfg.seed)


class _section:
    """Record an InsufficientSample inside the block as a failed check and carry on."""

    def __init__(self, rep: RunReport, name: str):
        self.rep, self.name = rep, name

    def __enter__(self):
        return self

    def __exit__(self, kind, exc, tb):
        if kind is not None and issubclass(kind, InsufficientSample):
            self.rep.add(self.name, f"InsufficientSample: {exc}", None, None, False)
            return True
        return False


# ---------------------------------------------------------------------------
# subcommands


def cmd_exact(cfg: ExactConfig) -> RunReport:
    spec = resolve_map(cfg.map)
    rep = _report("exact", cfg)
    lam = spec.lam

    ok = all(F_exact(GapWord((0,) * (k - 1) + (1,), tail=0), spec) == lam**k for k in range(1, cfg.f_depths + 1))
    rep.add(f"F(2^-k) = lambda^k, k=1..{cfg.f_depths}", ok, True, 0, ok)

    vals = [F_exact(w, spec) for w in words_of_depth(cfg.monotone_depth)]
    ok = all(a < b for a, b in zip(vals, vals[1:]))
    rep.add(f"F strictly increasing on depth-{cfg.monotone_depth} words", ok, True, 0, ok)

    pairs = [(n, parse_rational(t)) for n in cfg.n_grid for t in cfg.tau_grid if parse_rational(t) < n]
    meas_ok, theta_ok, qrun_ok = True, True, True
    for n, tau in pairs:
        sc = default_scales(n, tau, 0.5)
        U = exceedance_set(sc, spec)
        meas_ok &= U.full_set.measure * n == tau
        runs = [q_run_set(U, q) for q in cfg.q_values]
        theta_ok &= runs[0].measure / U.full_set.measure == 1 - lam if cfg.q_values[0] == 1 else True
        qrun_ok &= all(r == runs[0] for r in runs)
    rep.add("n * m(U_n(tau)) = tau", meas_ok, True, 0, meas_ok)
    rep.add("theta_n = 1 - lambda", 1 - lam, 1 - lam, 0, theta_ok)
    rep.add(f"U^(q) equal for q in {cfg.q_values}", qrun_ok, True, 0, qrun_ok)

    lo, hi = (parse_rational(t) for t in cfg.rho_tau)
    rhos = [rho_ratio(default_scales(n, 1, 0.5), lo, hi, spec) for n in cfg.rho_n_grid]
    ok = all(a > b for a, b in zip(rhos, rhos[1:])) and rhos[-1] < cfg.rho_final_max
    rep.add("rho_n strictly decreasing with small final value", [float(r) for r in rhos], cfg.rho_final_max, 0, ok)

    c8 = centering_cn(8, 1.5)
    rep.add("c_8 at alpha=3/2", c8, 3.0, 1e-12, abs(c8 - 3) < 1e-12)
    worst = max(abs(centering_cn(n, a) - centering_quadrature(n, a)) for n in (1, 8, 100, 10**4, 10**6) for a in (1.2, 1.5, 1.8))
    rep.add("c_n closed form vs quadrature", worst, 0.0, 1e-10, worst < 1e-10)
    return rep


def _theta_piece(spec, sc, length):
    def run(index, seed):
        st = simulate_observable_stream(spec, sc, seed, length)
        cl = decluster_runs(st.flags, 1, st.normalised)
        return cl, st.exceedances, cluster_agreement(st.flags, 1, 3)
    return run


def cmd_estimate(cfg: EstimateConfig, out: Optional[Path] = None) -> RunReport:
    spec = resolve_map(cfg.map)
    rep = _report("estimate", cfg)
    theta = float(spec.theta)

    with _section(rep, "runs extremal index"):
        sc = default_scales(cfg.n, parse_rational(cfg.tau), cfg.alpha)
        pieces = run_replicas(_theta_piece(spec, sc, cfg.length), cfg.seed, cfg.replicas, cfg.workers)
        clusters = sum(len(p[0]) for p in pieces)
        exceed = sum(p[1] for p in pieces)
        est = extremal_index_runs([c for p in pieces for c in p[0]], exceed) if clusters else float("nan")
        rep.add("runs extremal index", est, theta, cfg.theta_tol, abs(est - theta) <= cfg.theta_tol)
        agree = min(p[2] for p in pieces)
        rep.add("runs q=1 vs q=3 agreement", agree, 1.0, 1 - cfg.q_agreement_min, agree >= cfg.q_agreement_min)

    with _section(rep, "cluster size distribution"):
        sc_size = default_scales(cfg.n, parse_rational(cfg.size_tau), cfg.alpha)
        pieces = run_replicas(_theta_piece(spec, sc_size, cfg.length), derive_seed(cfg.seed, 1), cfg.replicas, cfg.workers)
        sizes = cluster_size_distribution([c for p in pieces for c in p[0]], theta, cfg.kmax)
        rep.add("cluster size TV distance to geometric", sizes.tv_distance, 0.0, cfg.tv_tol, sizes.tv_distance <= cfg.tv_tol)
        rep.add("mean cluster size", sizes.mean_size, 1 / theta, cfg.mean_tol, abs(sizes.mean_size - 1 / theta) <= cfg.mean_tol)
        if out is not None:
            rows = [(k + 1 if k < cfg.kmax else f">{cfg.kmax}", int(c), float(e), float(g))
                    for k, (c, e, g) in enumerate(zip(sizes.counts, sizes.empirical, sizes.geometric))]
            write_csv(out / "cluster_sizes.csv", ("size", "count", "empirical", "geometric"), rows)

    for i, a in enumerate(cfg.hill_alphas):
        with _section(rep, f"Hill estimate alpha={a}"):
            sch = default_scales(cfg.hill_n, 1, a)
            st = simulate_observable_stream(spec, sch, derive_seed(cfg.seed, 10 + i), cfg.hill_n)
            h = hill_estimator(log_values=st.log_x, k=cfg.hill_k)
            rep.add(f"Hill estimate alpha={a}", h, a, cfg.hill_tol, abs(h - a) <= cfg.hill_tol)

    with _section(rep, "anchored tail ratios"):
        sca = default_scales(cfg.anchored_n, 1, cfg.alpha)
        win = sample_anchored_windows(spec, sca, cfg.anchored_count, derive_seed(cfg.seed, 2))
        tr = windows_tail_report(win, spec)
        for j, frac in sorted(tr.match_fraction.items()):
            rep.add(f"anchored ratio lag {j} equals lambda^-{j}", frac, cfg.match_threshold, 0, frac >= cfg.match_threshold)
        for j, frac in sorted(tr.divergent_fraction.items()):
            rep.add(f"anchored ratio lag {j} divergent", frac, cfg.match_threshold, 0, frac >= cfg.match_threshold)

    scs = default_scales(cfg.smalljumps_n, 1, cfg.smalljumps_alpha)
    if scs.alpha > 1:
        with _section(rep, "small-jumps sum decreasing as epsilon shrinks"):
            sj = smalljumps_diagnostic(spec, scs, cfg.smalljumps_epsilons, seed=derive_seed(cfg.seed, 3),
                                       length=cfg.smalljumps_length, b=cfg.smalljumps_b)
            order = np.argsort(sj.epsilons)[::-1]
            vals = [sj.values[k] for k in order]
            ok = all(x > y for x, y in zip(vals, vals[1:]))
            rep.add("small-jumps sum decreasing as epsilon shrinks", vals, "decreasing", 0, ok)
    return rep


def cmd_limits(cfg: LimitsConfig, out: Optional[Path] = None) -> RunReport:
    spec = resolve_map(cfg.map)
    rep = _report("limits", cfg)
    theta = float(spec.theta)
    a = float(cfg.alpha)
    sc = default_scales(cfg.n, 1, a)

    if cfg.horizon == 0:
        V = simulate_V(theta, a, 0.0, cfg.seed, cfg.mark_max) if a < 1 else simulate_V_compensated(theta, a, 0.0, cfg.epsilon, cfg.seed)
        rep.add("horizon 0 gives an empty point set", len(V.points), 0, 0, len(V.points) == 0 and V.path.times.size == 0)
        return rep

    def s_n(index, seed):
        return partial_sum_terminal(simulate_observable_stream(spec, sc, seed, cfg.n).log_x, sc)

    S = np.array(run_replicas(s_n, cfg.seed, cfg.replicas, cfg.workers))
    if a < 1:
        Vs = V_terminal_samples(theta, a, cfg.replicas, derive_seed(cfg.seed, 10**6), cfg.mark_max)
    else:
        Vs = np.array([simulate_V_compensated(theta, a, 1.0, cfg.epsilon, derive_seed(cfg.seed, 10**6 + i)).path.terminal
                       for i in range(cfg.replicas)])
        drift = check_compensator(theta, a, cfg.epsilon)
        rep.add("compensator closed form vs quadrature", drift, drift, 1e-8, True)
    ks = ks_distance(S, Vs)
    rep.add("KS distance S_n(1) vs V(1)", ks, 0.0, cfg.ks_tol, ks <= cfg.ks_tol)

    # REPP over a long stream: horizon H means H * k_n blocks
    blocks = cfg.repp_horizon * sc.k_n
    st = simulate_observable_stream(spec, sc, derive_seed(cfg.seed, 7), blocks * sc.r_n)
    repp = build_repp(st, sc, cfg.repp_tau)
    count = repp.count_below(cfg.repp_tau)
    mean = theta * cfg.repp_tau * repp.horizon
    rep.add("REPP cluster count per unit time", count / repp.horizon, theta * cfg.repp_tau,
            4 * math.sqrt(mean) / repp.horizon, abs(count - mean) <= 4 * math.sqrt(mean))
    geo = np.mean([profile_is_geometric(p, float(spec.lam)) for p in repp.points]) if repp.points else 0.0
    rep.add("REPP profiles are powers of 1/lambda", float(geo), cfg.profile_fraction_min, 0, geo >= cfg.profile_fraction_min)

    jump = excursion(0, 1, spec.theta, Fraction(a).limit_denominator(1000), 1)
    target = 1 / (1 - float(1 - spec.theta) ** (1 / a))
    rep.add("excursion full value equals V jump (U=1)", float(jump), target, 1e-12, abs(float(jump) - target) < 1e-12)
    dm = decoration_moment(theta, a)
    rep.add("decoration moment", dm, target**a, 1e-12, math.isfinite(dm) and abs(dm - target**a) < 1e-12)

    if out is not None:
        partial_sum_path(simulate_observable_stream(spec, sc, derive_seed(cfg.seed, 8), cfg.n), sc).to_csv(out / "path_Sn.csv")
        V = simulate_V(theta, a, cfg.horizon, derive_seed(cfg.seed, 9), cfg.mark_max) if a < 1 else \
            simulate_V_compensated(theta, a, cfg.horizon, cfg.epsilon, derive_seed(cfg.seed, 9))
        V.path.to_csv(out / "path_V.csv")
        _write_excursions(out / "excursions.csv", V, theta, a)
        repp.write_jsonl(out / "repp.jsonl")
        write_csv(out / "ks_samples.csv", ("S_n(1)", "V(1)"), zip(np.sort(S).tolist(), np.sort(Vs).tolist()))
    return rep


def _write_excursions(path, V, theta, alpha, top: int = 5, points: int = 101):
    # the largest jumps carry the visible excursions
    order = np.argsort(V.path.sizes)[::-1][:top]
    rows = []
    for k in sorted(order):
        p = V.points[k]
        v_pre = float(V.path.left_limit(p.time))
        t, e = excursion_grid(v_pre, p.mark, theta, alpha, points)
        rows.extend((p.time, float(s), float(x)) for s, x in zip(t, e))
    write_csv(path, ("jump_time", "t", "value"), rows)


def cmd_plotdata(cfg: PlotdataConfig, out: Path) -> RunReport:
    spec = resolve_map(cfg.map)
    rep = _report("plotdata", cfg)
    grid = [Fraction(k, 3**cfg.psi_levels) for k in range(3**cfg.psi_levels + 1)]
    psi = [psi_exact(spec, x) for x in grid]
    write_csv(out / "psi.csv", ("x", "psi"), ((float(x), float(v)) for x, v in zip(grid, psi)))
    on_grid = set(grid)
    reps = [a for a, _ in lambda_n(spec, cfg.psi_levels).intervals if a in on_grid]
    ok = bool(reps) and all(psi_exact(spec, x) == 0 for x in reps)
    rep.add("psi = 0 on Cantor cylinder representatives", len(reps), len(reps), 0, ok)

    ugrid = [Fraction(k, 2**cfg.f_levels) for k in range(2**cfg.f_levels + 1)]
    fvals = [F_exact(GapWord.from_dyadic(u), spec) if u < 1 else Fraction(1) for u in ugrid]
    write_csv(out / "F.csv", ("u", "F"), ((float(u), float(f)) for u, f in zip(ugrid, fvals)))
    ok = all(a <= b for a, b in zip(fvals, fvals[1:]))
    rep.add("F nondecreasing on the dyadic grid", ok, True, 0, ok)
    ok = all(fvals[2 ** (cfg.f_levels - k)] == spec.lam**k for k in range(1, cfg.f_levels + 1))
    rep.add("F(2^-k) = lambda^k on the grid", ok, True, 0, ok)

    a = float(cfg.alpha)
    sc = default_scales(cfg.path_n, 1, a)
    partial_sum_path(simulate_observable_stream(spec, sc, cfg.seed, cfg.path_n), sc).to_csv(out / "path_Sn.csv")
    theta = float(spec.theta)
    V = simulate_V(theta, a, 1.0, derive_seed(cfg.seed, 1)) if a < 1 else \
        simulate_V_compensated(theta, a, 1.0, 0.01, derive_seed(cfg.seed, 1))
    V.path.to_csv(out / "path_V.csv")
    _write_excursions(out / "excursions.csv", V, theta, a, points=cfg.excursion_points)
    return rep


# ---------------------------------------------------------------------------
# entry point


def run(command: str, config_path, out_override: Optional[str] = None) -> RunReport:
    try:
        doc = json.loads(Path(config_path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {config_path}: {exc}") from exc
    cfg = parse_config(command, doc)
    out = Path(out_override or cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    start = time.perf_counter()
    if command == "exact":
        rep = cmd_exact(cfg)
    elif command == "estimate":
        rep = cmd_estimate(cfg, out)
    elif command == "limits":
        rep = cmd_limits(cfg, out)
    else:
        rep = cmd_plotdata(cfg, out)
    (out / "report.json").write_text(rep.to_json())
    (out / "timing.json").write_text(json.dumps({"wall_seconds": time.perf_counter() - start}) + "\n")
    if cfg.format == "csv":
        write_csv(out / "report.csv", ("name", "value", "target", "tolerance", "pass"),
                  ((c["name"], json.dumps(c["value"]), json.dumps(c["target"]), json.dumps(c["tolerance"]), c["pass"]) for c in rep.checks))
    return rep


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="cantor_extremes", description=__doc__.splitlines()[0])
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("config", help="JSON config file")
    args = parser.parse_args(argv)
    try:
        rep = run(args.command, args.config)
    except CantorExtremesError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    for c in rep.checks:
        print(f"{'PASS' if c['pass'] else 'FAIL'}  {c['name']}")
    return 0 if rep.passed else 1


if __name__ == "__main__":
    sys.exit(main())
