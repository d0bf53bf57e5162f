"""Command-line driver: configuration, seeded sweeps and data emission.

Seed splitting: every random draw derives from ``disorder.base_seed`` through
``numpy.random.SeedSequence(base_seed, spawn_key=key)``, reduced to one 32-bit
word. Keys are ``(0, sweep_index)`` for the structure search and
``(1, sweep_index, realization, attempt)`` for disorder draws, where
``attempt`` counts draws rejected as unstable.

Precedence of settings: command-line flags > ``--set`` overrides > config
file > defaults. Exit codes: 0 success, 1 configuration error, 2 numeric
failure.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import itertools
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import yaml

from . import crystal, network, oracle, qep, transport
from .errors import ConfigError, FitError, NumericError

EXPERIMENTS = ("equilibrate", "modes", "transport", "sweep-length", "sweep-disorder",
               "profile", "scan-transition", "oracle-check")
OUTPUT_ENV = "IONTRANSPORT_OUTPUT"

SWEEP_COLUMNS = ["N", "L", "d", "realization", "kappa", "central_gradient", "seed"]
SUMMARY_COLUMNS = ["N", "L", "d", "realizations", "kappa_mean", "kappa_std",
                   "central_gradient_mean", "central_gradient_std"]
MODES_COLUMNS = ["index", "re_omega", "im_omega", "damping_rate"]
PROFILE_COLUMNS = ["ion", "z", "temperature"]
SCAN_COLUMNS = ["alpha", "R", "Delta", "mean_azimuthal_step", "phase"]
CRITICAL_COLUMNS = ["N", "alpha_c", "seed"]


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------

@dataclass
class CrystalSection:
    n_ions: int = 30
    n_range: list | None = None
    phase_path: str = "1D"
    alpha: float | None = None


@dataclass
class BathSection:
    gamma0: float = 1e-6
    t_left: float = 2.0
    t_right: float = 1.0
    region_fraction: float = 0.1


@dataclass
class DisorderSection:
    d: float = 0.0
    d_range: list | None = None
    realizations: int = 20
    disorder_axes: str = "xy"
    base_seed: int = 0
    max_attempts: int = 1000


@dataclass
class ScanSection:
    alpha_start: float | None = None  # default: 1D path value
    alpha_stop: float | None = None  # default: 3D path value
    points: int = 25
    selector: str = "R"
    critical_tolerance: float = 1e-3


@dataclass
class OracleSection:
    gamma0: float = 1e-3
    n_ions: int = 4
    rel_tol: float = 1e-9


@dataclass
class OutputSection:
    directory: str | None = None
    formats: list = field(default_factory=lambda: ["csv", "json"])


@dataclass
class RunConfig:
    experiment: str = "equilibrate"
    crystal: CrystalSection = field(default_factory=CrystalSection)
    bath: BathSection = field(default_factory=BathSection)
    disorder: DisorderSection = field(default_factory=DisorderSection)
    scan: ScanSection = field(default_factory=ScanSection)
    oracle: OracleSection = field(default_factory=OracleSection)
    output: OutputSection = field(default_factory=OutputSection)
    temperature_mode: str = "high_t"
    workers: int = 1

    def validate(self) -> "RunConfig":
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}")
        if self.crystal.alpha is None and self.crystal.phase_path not in crystal.PATHS:
            raise ConfigError(f"phase_path must be one of {sorted(crystal.PATHS)}")
        if self.disorder.disorder_axes not in network.DISORDER_AXES:
            raise ConfigError(f"disorder_axes must be one of {sorted(network.DISORDER_AXES)}")
        if self.disorder.realizations < 1:
            raise ConfigError("realizations must be at least 1")
        if self.temperature_mode not in ("high_t", "coth"):
            raise ConfigError("temperature_mode must be high_t or coth")
        bad = set(self.output.formats) - {"csv", "json"}
        if bad:
            raise ConfigError(f"unsupported output formats {sorted(bad)}")
        if self.workers < 1:
            raise ConfigError("workers must be at least 1")
        return self

    @property
    def out_dir(self) -> Path:
        return Path(self.output.directory or os.environ.get(OUTPUT_ENV) or "results")


def _merge(obj, updates: dict, where: str = ""):
    """Recursively apply a mapping onto a (nested) dataclass."""
    if not isinstance(updates, dict):
        raise ConfigError(f"section {where or 'root'} must be a mapping")
    names = {f.name: f for f in dataclasses.fields(obj)}
    for key, value in updates.items():
        key = key.replace("-", "_")
        if key not in names:
            raise ConfigError(f"unknown setting {where + key!r}")
        current = getattr(obj, key)
        if dataclasses.is_dataclass(current):
            _merge(current, value, f"{where}{key}.")
        else:
            setattr(obj, key, _numeric(value))


def _numeric(value):
    """YAML 1.1 reads ``1e-6`` as a string; turn numeric-looking strings into floats."""
    if isinstance(value, list):
        return [_numeric(v) for v in value]
    if isinstance(value, str):
        try:
            return float(value)
        except ValueError:
            return value
    return value


def _parse_override(text: str) -> dict:
    if "=" not in text:
        raise ConfigError(f"--set expects key=value, got {text!r}")
    key, raw = text.split("=", 1)
    value = yaml.safe_load(raw)
    return _nest(key.strip(), value)


def load_config(path: str | None = None, overrides=(), **flags) -> RunConfig:
    cfg = RunConfig()
    if path:
        try:
            data = yaml.safe_load(Path(path).read_text()) or {}
        except (OSError, yaml.YAMLError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        _merge(cfg, data)
    for text in overrides:
        _merge(cfg, _parse_override(text))
    for dotted, value in flags.items():
        if value is not None:
            _merge(cfg, _nest(dotted, value))
    return cfg.validate()


def _nest(dotted: str, value) -> dict:
    out: dict = {}
    node = out
    parts = dotted.split(".")
    for p in parts[:-1]:
        node = node.setdefault(p, {})
    node[parts[-1]] = value
    return out


# ---------------------------------------------------------------------------
# seeds and emission
# ---------------------------------------------------------------------------

def derive_seed(base_seed: int, *key: int) -> int:
    ss = np.random.SeedSequence(int(base_seed), spawn_key=tuple(int(k) for k in key))
    return int(ss.generate_state(1)[0])


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x) + 0.0, ".17g")  # + 0.0 turns -0 into 0
    return str(x)


def _write_csv(path: Path, columns, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_fmt(row[c]) for c in columns])
    path.write_text(buf.getvalue())


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if np.isfinite(x) else None
    if dataclasses.is_dataclass(obj):
        return _jsonable(asdict(obj))
    return obj


def _write_json(path: Path, payload):
    # json writes floats with repr, the shortest string that round-trips exactly
    path.write_text(json.dumps(_jsonable(payload), indent=2, sort_keys=True) + "\n")


class Emitter:
    def __init__(self, cfg: RunConfig):
        self.dir = cfg.out_dir
        self.formats = set(cfg.output.formats)
        self.dir.mkdir(parents=True, exist_ok=True)
        self.written: list[str] = []

    def csv(self, name, columns, rows):
        if "csv" in self.formats:
            _write_csv(self.dir / name, columns, rows)
            self.written.append(name)

    def json(self, name, payload):
        if "json" in self.formats:
            _write_json(self.dir / name, payload)
            self.written.append(name)


# ---------------------------------------------------------------------------
# building blocks
# ---------------------------------------------------------------------------

def _alpha(cfg: RunConfig, n: int) -> float:
    if cfg.crystal.alpha is not None:
        return float(cfg.crystal.alpha)
    return crystal.path_alpha(cfg.crystal.phase_path, n)


def _equilibrium(n: int, alpha: float, seed: int):
    return crystal.find_equilibrium(crystal.CrystalParams(int(n), float(alpha)), seed=seed)


def _equilibrium_task(args):
    return _equilibrium(*args)


def _pool_map(fn, items, workers: int):
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))  # ordered


def _bath(cfg: RunConfig, n: int, gamma0: float | None = None):
    b = cfg.bath
    return network.make_bath(b.gamma0 if gamma0 is None else gamma0, b.t_left, b.t_right,
                             n, region_fraction=b.region_fraction)


def _disordered(cm, cfg: RunConfig, d: float, sweep_index: int, realization: int):
    """Coupling matrix for one realization, the seed used, and rejected draws."""
    if d == 0:
        return cm, None, 0
    base = cfg.disorder.base_seed
    seeds = (derive_seed(base, 1, sweep_index, realization, a)
             for a in range(cfg.disorder.max_attempts))
    out, spec, rejected = network.draw_stable_disorder(
        cm, d, seeds, axes=cfg.disorder.disorder_axes)
    return out, spec.seed, rejected


def equilibrium_record(cfg_eq) -> dict:
    rep = crystal.order_parameters(cfg_eq)
    return {
        "n_ions": cfg_eq.n_ions,
        "alpha": cfg_eq.params.alpha,
        "seed": cfg_eq.seed,
        "positions": cfg_eq.positions,
        "energy": cfg_eq.energy,
        "residual_gradient_norm": cfg_eq.residual_gradient_norm,
        "length": cfg_eq.length,
        "gauge": cfg_eq.gauge,
        "structure": rep,
    }


def modes_rows(modes: qep.ModeSet):
    w = modes.frequencies
    return [{"index": i, "re_omega": w[i].real, "im_omega": w[i].imag,
             "damping_rate": modes.damping_rates[i]} for i in range(w.size)]


def _profile(cfg: RunConfig, spp, cm, eq):
    prof = transport.local_temperatures(spp, cm, cfg.temperature_mode)
    cg = None
    if eq.n_ions >= 8 and cfg.bath.t_left != cfg.bath.t_right:
        cg = transport.central_gradient(prof.temperatures, eq.positions,
                                        cfg.bath.t_left, cfg.bath.t_right)
    return prof, cg


# ---------------------------------------------------------------------------
# experiments
# ---------------------------------------------------------------------------

def _single(cfg: RunConfig):
    n = int(cfg.crystal.n_ions)
    seed = derive_seed(cfg.disorder.base_seed, 0, 0)
    eq = _equilibrium(n, _alpha(cfg, n), seed)
    return eq


def run_equilibrate(cfg: RunConfig, out: Emitter):
    eq = _single(cfg)
    out.json("equilibrium.json", equilibrium_record(eq))
    return eq


def _single_system(cfg: RunConfig, out: Emitter):
    eq = run_equilibrate(cfg, out)
    cm = network.build_hessian(eq.params, eq)
    cm, dseed, rejected = _disordered(cm, cfg, float(cfg.disorder.d), 0, 0)
    bath = _bath(cfg, eq.n_ions)
    modes = qep.solve_qep(cm, bath)
    out.csv("modes.csv", MODES_COLUMNS, modes_rows(modes))
    out.json("coupling.json", {"n_ions": cm.n_ions, "dim": cm.dim, "layout": "row-major",
                               "disorder_seed": dseed, "v": cm.v.ravel()})
    return eq, cm, dseed, rejected, bath, modes


def run_modes(cfg: RunConfig, out: Emitter):
    _single_system(cfg, out)


def _transport_payload(cfg, eq, cm, dseed, rejected, bath, modes):
    report = transport.steady_state(cm, bath, eq, modes)
    prof, cg = _profile(cfg, report.sigma_pp, cm, eq)
    payload = {
        "q_dot": report.q_dot,
        "q_dot_right": report.q_dot_right,
        "kappa": report.kappa,
        "L": report.crystal_length,
        "central_gradient": cg,
        "gamma0": bath.gamma0, "t_left": bath.t_left, "t_right": bath.t_right,
        "left_ions": bath.left_ions, "right_ions": bath.right_ions,
        "d": float(cfg.disorder.d), "disorder_axes": cfg.disorder.disorder_axes,
        "disorder_seed": dseed, "rejected_draws": rejected,
        "crystal_seed": eq.seed,
        "mode_currents": [{"re_omega": r[0], "q_dot": r[1]} for r in report.q_dot_modes],
    }
    rows = [{"ion": i, "z": eq.positions[i, 2], "temperature": prof.temperatures[i]}
            for i in range(eq.n_ions)]
    return payload, rows


def run_transport(cfg: RunConfig, out: Emitter):
    system = _single_system(cfg, out)
    payload, rows = _transport_payload(cfg, *system)
    out.json("transport.json", payload)
    out.csv("profile.csv", PROFILE_COLUMNS, rows)


def run_profile(cfg: RunConfig, out: Emitter):
    run_transport(cfg, out)


def run_realization(cfg: RunConfig, eq, d: float, sweep_index: int, realization: int) -> dict:
    """One sweep row: disorder draw, steady state, conductivity and profile slope."""
    cm = network.build_hessian(eq.params, eq)
    cm, dseed, _ = _disordered(cm, cfg, d, sweep_index, realization)
    bath = _bath(cfg, eq.n_ions)
    modes = qep.solve_qep(cm, bath)
    sxx, sxp, spp = transport.covariance(modes, bath)
    q = transport.heat_current(modes, bath)
    kappa, length = transport.conductivity(q, bath.t_left, bath.t_right, eq)
    _, cg = _profile(cfg, spp, cm, eq)
    return {"N": eq.n_ions, "L": length, "d": d, "realization": realization,
            "kappa": kappa, "central_gradient": np.nan if cg is None else cg,
            "seed": eq.seed if dseed is None else dseed}


def _realization_task(args):
    return run_realization(*args)


def _summaries(rows):
    out = []
    for key, grp in itertools.groupby(rows, key=lambda r: (r["N"], r["d"])):
        grp = list(grp)
        k = np.array([r["kappa"] for r in grp])
        g = np.array([r["central_gradient"] for r in grp])
        out.append({"N": key[0], "L": grp[0]["L"], "d": key[1], "realizations": len(grp),
                    "kappa_mean": k.mean(), "kappa_std": k.std(ddof=1) if k.size > 1 else 0.0,
                    "central_gradient_mean": g.mean(),
                    "central_gradient_std": g.std(ddof=1) if g.size > 1 else 0.0})
    return out


def _sweep(cfg: RunConfig, out: Emitter, points):
    """``points``: list of (sweep_index, N, d). Structures are shared per N."""
    base = cfg.disorder.base_seed
    ns = sorted({n for _, n, _ in points})
    first_index = {}
    for idx, n, _ in points:
        first_index.setdefault(n, idx)
    eqs = _pool_map(_equilibrium_task,
                    [(n, _alpha(cfg, n), derive_seed(base, 0, first_index[n])) for n in ns],
                    cfg.workers)
    eq_of = dict(zip(ns, eqs))
    tasks = []
    for idx, n, d in points:
        reps = 1 if d == 0 else int(cfg.disorder.realizations)
        tasks += [(cfg, eq_of[n], float(d), idx, r) for r in range(reps)]
    rows = _pool_map(_realization_task, tasks, cfg.workers)
    out.csv("sweep.csv", SWEEP_COLUMNS, rows)
    out.csv("sweep_summary.csv", SUMMARY_COLUMNS, _summaries(rows))
    out.json("sweep.json", {"rows": rows, "summary": _summaries(rows)})
    return rows


def run_sweep_length(cfg: RunConfig, out: Emitter):
    ns = cfg.crystal.n_range or [20, 30, 40, 50, 60]
    d = float(cfg.disorder.d)
    return _sweep(cfg, out, [(i, int(n), d) for i, n in enumerate(ns)])


def run_sweep_disorder(cfg: RunConfig, out: Emitter):
    ds = cfg.disorder.d_range or [0.0, 0.005, 0.01, 0.02, 0.05]
    n = int(cfg.crystal.n_ions)
    return _sweep(cfg, out, [(i, n, float(d)) for i, d in enumerate(ds)])


def _scan_alphas(cfg: RunConfig, n: int) -> np.ndarray:
    s = cfg.scan
    start = s.alpha_start if s.alpha_start is not None else crystal.path_alpha("1D", n)
    stop = s.alpha_stop if s.alpha_stop is not None else crystal.path_alpha("3D", n)
    return np.linspace(start, stop, int(s.points))


def _critical_task(args):
    n, seed, rel_tol = args
    lo = crystal.path_alpha("2D", n)
    hi = crystal.path_alpha("1D", n) * 1.05
    return crystal.critical_alpha(n, lo, hi, seed=seed, rel_tol=rel_tol)


def run_scan_transition(cfg: RunConfig, out: Emitter):
    base = cfg.disorder.base_seed
    n = int(cfg.crystal.n_ions)
    seed = derive_seed(base, 0, 0)
    res = crystal.scan_transition(n, _scan_alphas(cfg, n), cfg.scan.selector, seed=seed)
    rows = []
    for p in res.points:
        rep = p.report
        rows.append({"alpha": p.alpha,
                     "R": rep.radius if rep else np.nan,
                     "Delta": rep.min_z_gap if rep else np.nan,
                     "mean_azimuthal_step": rep.mean_azimuthal_step if rep else np.nan,
                     "phase": rep.phase if rep else "failed"})
    out.csv("scan.csv", SCAN_COLUMNS, rows)
    summary = {"n_ions": n, "seed": seed, "selector": res.selector,
               "critical_alpha": res.critical_alpha,
               "failed_points": [p.alpha for p in res.points if p.error]}
    if cfg.crystal.n_range:
        ns = [int(x) for x in cfg.crystal.n_range]
        seeds = [derive_seed(base, 0, i + 1) for i in range(len(ns))]
        crit = _pool_map(_critical_task,
                         [(m, s, cfg.scan.critical_tolerance) for m, s in zip(ns, seeds)],
                         cfg.workers)
        out.csv("critical.csv", CRITICAL_COLUMNS,
                [{"N": m, "alpha_c": a, "seed": s} for m, a, s in zip(ns, crit, seeds)])
        if len(ns) >= 2:
            c, beta, r2 = fit_power_law(ns, crit)
            summary["power_law"] = {"c": c, "beta": beta, "r_squared": r2}
    out.json("scan.json", summary)


def run_oracle_check(cfg: RunConfig, out: Emitter):
    o = cfg.oracle
    n = int(o.n_ions)
    seed = derive_seed(cfg.disorder.base_seed, 0, 0)
    eq = _equilibrium(n, _alpha(cfg, n), seed)
    cm = network.build_hessian(eq.params, eq)
    b = cfg.bath
    k = max(1, min(n // 2, int(np.ceil(b.region_fraction * n - 1e-12))))
    bath = network.make_bath(o.gamma0, b.t_left, b.t_right, n,
                             left_ions=range(k), right_ions=range(n - k, n))
    modes = qep.solve_qep(cm, bath)
    sxx, sxp, spp = transport.covariance(modes, bath)
    q = transport.heat_current(modes, bath)
    spec = oracle.QuadratureSpec(rel_tol=o.rel_tol)
    q_quad, q_err = oracle.quad_heat_current(cm, bath, spec, return_error=True)

    def rel(a, b):
        a, b = np.asarray(a), np.asarray(b)
        return float(np.max(np.abs(a - b)) / max(np.max(np.abs(b)), 1e-300))

    report = {"n_ions": n, "alpha": eq.params.alpha, "seed": seed, "gamma0": o.gamma0,
              "q_dot": {"residue": q, "quadrature": q_quad, "quadrature_error": q_err,
                        "relative_deviation": rel(q, q_quad)}}
    for name, (j, kk), mine in (("sigma_xx", (0, 0), sxx), ("sigma_xp", (0, 1), sxp),
                               ("sigma_pp", (1, 1), spp)):
        ref, err = oracle.quad_covariance(cm, bath, spec, j, kk, return_error=True)
        report[name] = {"relative_deviation": rel(mine, ref), "quadrature_error": err}
    s_test = complex(1.0, 0.5)
    g_res = qep.green_eval(modes, s_test)
    g_dir = np.linalg.inv(qep.pencil(cm.v, bath.p_total, bath.gamma0, s_test))
    report["green"] = {"s": [s_test.real, s_test.imag], "relative_deviation": rel(g_res, g_dir)}
    out.json("oracle_report.json", report)
    return report


RUNNERS = {
    "equilibrate": run_equilibrate,
    "modes": run_modes,
    "transport": run_transport,
    "profile": run_profile,
    "sweep-length": run_sweep_length,
    "sweep-disorder": run_sweep_disorder,
    "scan-transition": run_scan_transition,
    "oracle-check": run_oracle_check,
}


def run(cfg: RunConfig) -> list[str]:
    """Execute one experiment; returns the names of the files written."""
    cfg.validate()
    out = Emitter(cfg)
    RUNNERS[cfg.experiment](cfg, out)
    out.json("run_config.json", asdict(cfg))
    return out.written


# ---------------------------------------------------------------------------
# power-law fit
# ---------------------------------------------------------------------------

def fit_power_law(x, y):
    """Least squares of log y = log c + beta log x. Returns (c, beta, r_squared)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.size < 2:
        raise FitError("power-law fit needs at least two paired points")
    if np.any(x <= 0) or np.any(y <= 0) or not np.all(np.isfinite(x * y)):
        raise FitError("power-law fit needs positive finite data")
    lx, ly = np.log(x), np.log(y)
    beta, logc = np.polyfit(lx, ly, 1)
    resid = ly - (logc + beta * lx)
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0 else 1.0 - float(np.sum(resid ** 2)) / ss_tot
    if x.size == 2:
        r2 = 1.0
    return float(np.exp(logc)), float(beta), r2


def _fit_file(path: str, xcol: str, ycol: str):
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows or xcol not in rows[0] or ycol not in rows[0]:
        raise ConfigError(f"{path} lacks columns {xcol!r} and {ycol!r}")
    return fit_power_law([float(r[xcol]) for r in rows], [float(r[ycol]) for r in rows])


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="iontransport",
                                description="Heat transport through trapped-ion crystals.")
    sub = p.add_subparsers(dest="command", required=True)
    for name in EXPERIMENTS:
        s = sub.add_parser(name)
        s.add_argument("--config", help="YAML config file")
        s.add_argument("--set", dest="overrides", action="append", default=[],
                       metavar="KEY=VALUE", help="dotted override, e.g. bath.gamma0=1e-5")
        s.add_argument("--output", help=f"output directory (default ${OUTPUT_ENV} or ./results)")
        s.add_argument("--n-ions", type=int)
        s.add_argument("--path", choices=sorted(crystal.PATHS))
        s.add_argument("--alpha", type=float)
        s.add_argument("--d", type=float)
        s.add_argument("--realizations", type=int)
        s.add_argument("--disorder-axes", choices=sorted(network.DISORDER_AXES))
        s.add_argument("--seed", type=int, help="base seed")
        s.add_argument("--workers", type=int)
    f = sub.add_parser("fit", help="power-law fit of two CSV columns")
    f.add_argument("csv")
    f.add_argument("--x", default="N")
    f.add_argument("--y", default="alpha_c")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "fit":
            c, beta, r2 = _fit_file(args.csv, args.x, args.y)
            print(json.dumps({"c": c, "beta": beta, "r_squared": r2}))
            return 0
        cfg = load_config(args.config, args.overrides, **{
            "experiment": args.command,
            "output.directory": args.output,
            "crystal.n_ions": args.n_ions,
            "crystal.phase_path": args.path,
            "crystal.alpha": args.alpha,
            "disorder.d": args.d,
            "disorder.realizations": args.realizations,
            "disorder.disorder_axes": args.disorder_axes,
            "disorder.base_seed": args.seed,
            "workers": args.workers,
        })
        written = run(cfg)
    except (ConfigError, ValueError, TypeError) as exc:
        _report(exc, 1)
        return 1
    except NumericError as exc:
        _report(exc, 2)
        return 2
    print(json.dumps({"status": "ok", "output": str(cfg.out_dir), "files": written}))
    return 0


def _report(exc: Exception, code: int):
    tb = exc.__traceback__
    while tb is not None and tb.tb_next is not None:
        tb = tb.tb_next
    module = Path(tb.tb_frame.f_code.co_filename).stem if tb is not None else "cli"
    print(json.dumps({"status": "error", "exit_code": code, "error": type(exc).__name__,
                      "module": module, "message": str(exc)}), file=sys.stderr)


if __name__ == "__main__":
    sys.exit(main())
