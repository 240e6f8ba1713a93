"""Batch front-end: configuration parsing, run orchestration, deterministic outputs.

Subcommands
-----------
kernel-table      radial heat-kernel table (t, rho, h) for external validation
constants         full constant table for the configured (n, p, q, delta)
simulate          small-data solve; writes norms.csv and iterations.json
verify-estimates  solve, then run the configured estimate checks
decay-report      solve, then a preset decay battery plus the end-state ratio

Exit codes: 0 when everything passes, 1 when the solve or at least one
estimate check fails, 2 on usage or configuration errors; the exit-2
message names the violated constraint.

All artifacts are deterministic: identical configuration and seed give
byte-identical files.  Floats print through repr (shortest round-trip
form), rows are emitted in a fixed order, and every CSV has a header
row plus a sidecar <name>.meta.json recording the configuration hash.
The current probes are themselves deterministic; the seed participates
in the configuration hash and seeds the generator reserved for
randomized probes, so runs remain reproducible if such probes appear.

One invocation is one run and owns its output directory; parameter
sweeps are separate invocations with distinct --out directories.
Within a run, --threads parallelizes over estimate checks (trajectory
norm caches are shared read-mostly; results are collected in
configuration order).

Artifact schemas
----------------
norms.csv        t, q, norm      (trajectory L^q norms, t-major order)
kernel_table.csv t, rho, h       (radial heat kernel values)
reports.csv      estimate_id, params_json, measured, predicted, margin, verdict
iterations.json  list of Picard records {k, M_k, residual, threshold_ok}
constants.json   {config_hash, T_max, table: {gamma, beta1, ..., beta_tilde}}
summary.json     {config_hash, n_pass, n_fail, all_pass, reports, ...}

The configuration file is a single JSON object; every key is optional
and unknown keys are rejected::

    {
      "grid":      {"rho_max": 8.0, "n_rho": 48, "n_theta": 64},
      "constants": {"n_dim": 2, "delta_n": null, "c0": null},
      "solver":    {"T": null, "delta": 0.5, "tol": 1e-6, "max_iter": 25,
                    "amplitude": 0.25, "seed": 0, "shape": 2, "n_lattice": 32},
      "table":     {"p": 2.0, "q": 4.0},
      "norms":     [2.0, 4.0, 8.0],
      "estimates": [{"id": "dispersive", "p": 2.0, "q": 4.0}, ...],
      "output_dir": "out"
    }

solver.T = null resolves to the decay horizon 5 / beta_prime(delta).
Every admissibility constraint an estimate entry needs is checked at
load time, before any grid or solver work starts.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .constants import AdmissibilityError, DecayConstants
from .estimates_harness import (
    ESTIMATE_IDS,
    EstimateReport,
    LARGE_TIME_WINDOW,
    classify_space_time,
    measure_decay,
    tmdcy2_branch,
    verify_G_bound,
    verify_dispersive,
    verify_div_smoothing,
    verify_smoothing,
    verify_space_time_membership,
    verify_tmdcy2,
)
from .geometry import PolarGrid
from .heat_kernel import kernel_h2, kernel_h3
from .mild_solver import (
    DivergenceDetected,
    NonConvergence,
    SolverConfig,
    make_datum,
    picard_solve,
)

COMMANDS = ("kernel-table", "constants", "simulate", "verify-estimates",
            "decay-report")
NORM_HEADER = ("t", "q", "norm")
KERNEL_HEADER = ("t", "rho", "h")
REPORT_HEADER = ("estimate_id", "params_json", "measured", "predicted",
                 "margin", "verdict")
KERNEL_TIMES = (0.05, 0.1, 0.25, 0.5, 1.0, 2.0, 4.0)
DATUM_SHAPES = (0, 1, 2, 3)
END_STATE_THRESHOLD = 0.01

DEFAULT_ESTIMATES = (
    {"id": "dispersive", "p": 2.0, "q": 4.0},
    {"id": "smoothing_p", "p": 2.0, "q": 2.0},
    {"id": "smoothing_pq", "p": 2.0, "q": 4.0},
    {"id": "div_smoothing", "p": 2.0, "q": 4.0},
    {"id": "G_bound", "alpha": 0.5, "gamma": 0.5, "zeta": 0.5, "t": 2.0},
    {"id": "Ln_decay", "q": 2.0},
    {"id": "Lq_weighted", "q": 4.0},
    {"id": "grad_weighted", "q": 4.0, "delta": 0.6},
    {"id": "Lp_decay", "q": 4.0},
    {"id": "LrLq_member", "r": 4.0, "q": 4.0},
    {"id": "tmdcy2_rate", "p": 2.0, "q": 4.0, "deltas": [0.5, 0.75, 0.5]},
)

_SECTION_DEFAULTS = {
    "grid": {"rho_max": 8.0, "n_rho": 48, "n_theta": 64},
    "constants": {"n_dim": 2, "delta_n": None, "c0": None},
    "solver": {"T": None, "delta": 0.5, "tol": 1.0e-6, "max_iter": 25,
               "amplitude": 0.25, "seed": 0, "shape": 2, "n_lattice": 32},
    "table": {"p": 2.0, "q": 4.0},
}


class ConfigError(ValueError):
    """Configuration rejected; the message names the violated constraint."""


# -- configuration -------------------------------------------------------------


def _as_float(section: str, key: str, value) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{section}.{key} must be a number")
    value = float(value)
    if not np.isfinite(value):
        raise ConfigError(f"{section}.{key} must be finite")
    return value


def _as_int(section: str, key: str, value) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{section}.{key} must be an integer")
    return value


def _merge_section(raw: dict, name: str) -> dict:
    merged = dict(_SECTION_DEFAULTS[name])
    given = raw.get(name, {})
    if not isinstance(given, dict):
        raise ConfigError(f"{name} must be a JSON object")
    for key, value in given.items():
        if key not in merged:
            raise ConfigError(f"unknown configuration key '{name}.{key}'")
        merged[key] = value
    return merged


@dataclass
class EstimatePlan:
    """One resolved estimate check: target kind, harness call, arguments."""

    estimate_id: str
    needs: str          # "datum" or "trajectory"
    fn: object
    kwargs: dict


@dataclass
class RunConfig:
    """Fully resolved run configuration; all constraints already checked."""

    grid: dict
    constants: dict
    solver: dict
    table: dict
    norms: list
    estimates: list
    output_dir: str
    plans: list = field(default_factory=list, repr=False)

    def digest(self) -> str:
        payload = {
            "grid": self.grid, "constants": self.constants,
            "solver": self.solver, "table": self.table,
            "norms": self.norms, "estimates": self.estimates,
        }
        blob = json.dumps(payload, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    def decay_constants(self) -> DecayConstants:
        return DecayConstants(self.constants["n_dim"],
                              self.constants["delta_n"],
                              self.constants["c0"])

    def solver_config(self) -> SolverConfig:
        s = self.solver
        return SolverConfig(delta=s["delta"], tol=s["tol"],
                            max_iter=s["max_iter"],
                            n_lattice=s["n_lattice"],
                            norms=tuple(self.norms),
                            delta_n=self.constants["delta_n"],
                            c0=self.constants["c0"])

    def build_grid(self) -> PolarGrid:
        if self.constants["n_dim"] != 2:
            raise ConfigError("simulation requires n_dim = 2")
        g = self.grid
        return PolarGrid(g["rho_max"], g["n_rho"], g["n_theta"], 2)

    def lattice_times(self) -> np.ndarray:
        j = np.arange(self.solver["n_lattice"] + 1)
        return self.solver["T"] * (j / self.solver["n_lattice"]) ** 2


def _validate_grid(grid: dict) -> dict:
    rho_max = _as_float("grid", "rho_max", grid["rho_max"])
    n_rho = _as_int("grid", "n_rho", grid["n_rho"])
    n_theta = _as_int("grid", "n_theta", grid["n_theta"])
    if rho_max < 4.0:
        raise ConfigError("grid.rho_max must be at least 4 (the support "
                          "margin needs 3 units below the truncation radius)")
    if n_rho < 8:
        raise ConfigError("grid.n_rho must be at least 8")
    if n_theta < 8 or n_theta % 2:
        raise ConfigError("grid.n_theta must be an even integer of at least 8")
    return {"rho_max": rho_max, "n_rho": n_rho, "n_theta": n_theta}


def _validate_constants(block: dict) -> dict:
    n_dim = _as_int("constants", "n_dim", block["n_dim"])
    if n_dim not in (2, 3):
        raise ConfigError("constants.n_dim must be 2 or 3")
    out = {"n_dim": n_dim}
    for key in ("delta_n", "c0"):
        value = block[key]
        out[key] = None if value is None else _as_float("constants", key, value)
    resolved = DecayConstants(n_dim, out["delta_n"], out["c0"])
    out["delta_n"] = resolved.delta_n
    out["c0"] = resolved.c0
    return out


def _validate_solver(block: dict, constants: DecayConstants) -> dict:
    out = {
        "delta": _as_float("solver", "delta", block["delta"]),
        "tol": _as_float("solver", "tol", block["tol"]),
        "max_iter": _as_int("solver", "max_iter", block["max_iter"]),
        "amplitude": _as_float("solver", "amplitude", block["amplitude"]),
        "seed": _as_int("solver", "seed", block["seed"]),
        "shape": _as_int("solver", "shape", block["shape"]),
        "n_lattice": _as_int("solver", "n_lattice", block["n_lattice"]),
    }
    try:
        SolverConfig(delta=out["delta"], tol=out["tol"],
                     max_iter=out["max_iter"])
    except ValueError as err:
        raise ConfigError(f"solver: {err}") from err
    if out["amplitude"] <= 0:
        raise ConfigError("solver.amplitude must be positive")
    if out["shape"] not in DATUM_SHAPES:
        raise ConfigError(f"solver.shape must be one of {DATUM_SHAPES}")
    if out["n_lattice"] < 4:
        raise ConfigError("solver.n_lattice must be at least 4")
    if not 0 <= out["seed"] < 2 ** 64:
        raise ConfigError("solver.seed must fit in u64")
    if block["T"] is None:
        rate = constants.beta_prime(out["delta"])
        if rate <= 0:
            raise ConfigError("default T needs beta_prime(delta) > 0; "
                              "set solver.T explicitly")
        out["T"] = 5.0 / rate
    else:
        out["T"] = _as_float("solver", "T", block["T"])
        if out["T"] <= 0:
            raise ConfigError("solver.T must be positive")
    return out


def _validate_table(block: dict) -> dict:
    p = _as_float("table", "p", block["p"])
    q = _as_float("table", "q", block["q"])
    if not 1.0 <= p <= q:
        raise ConfigError("table exponents must satisfy 1 <= p <= q")
    return {"p": p, "q": q}


def _validate_norms(norms) -> list:
    if not isinstance(norms, list) or not norms:
        raise ConfigError("norms must be a non-empty list of exponents")
    out = []
    for i, q in enumerate(norms):
        q = _as_float("norms", f"[{i}]", q)
        if q < 1.0:
            raise ConfigError("norms entries must be at least 1")
        out.append(q)
    return out


def _window_of(entry: dict, solver: dict, estimate_id: str) -> tuple:
    """Fit window for a decay entry, checked against the time lattice."""
    window = entry.pop("window", None)
    if window is None:
        window = LARGE_TIME_WINDOW
    if (not isinstance(window, (list, tuple)) or len(window) != 2):
        raise ConfigError(f"{estimate_id}.window must be [lo, hi]")
    lo = _as_float(estimate_id, "window.lo", window[0])
    hi = _as_float(estimate_id, "window.hi", window[1])
    if not 0 < lo < hi or hi > solver["T"]:
        raise ConfigError(f"{estimate_id}.window must satisfy "
                          f"0 < lo < hi <= T = {solver['T']:g}")
    j = np.arange(solver["n_lattice"] + 1)
    times = solver["T"] * (j / solver["n_lattice"]) ** 2
    inside = np.count_nonzero((times >= lo) & (times <= hi))
    if inside < 2:
        raise ConfigError(f"{estimate_id}.window [{lo:g}, {hi:g}] contains "
                          "fewer than two lattice times")
    return (lo, hi)


def _probe_times(entry: dict, estimate_id: str):
    times = entry.pop("times", None)
    if times is None:
        return None
    if not isinstance(times, list) or len(times) < 2:
        raise ConfigError(f"{estimate_id}.times needs at least two entries")
    values = [_as_float(estimate_id, f"times[{i}]", t)
              for i, t in enumerate(times)]
    if any(t <= 0 for t in values) or any(
            b <= a for a, b in zip(values, values[1:])):
        raise ConfigError(f"{estimate_id}.times must be positive and "
                          "strictly increasing")
    return np.asarray(values)


def _plan_estimate(entry: dict, constants: DecayConstants,
                   solver: dict) -> EstimatePlan:
    """Resolve one estimate entry, checking every constraint it needs."""
    if not isinstance(entry, dict):
        raise ConfigError("estimates entries must be JSON objects")
    entry = dict(entry)
    estimate_id = entry.pop("id", None)
    if estimate_id not in ESTIMATE_IDS:
        raise ConfigError(f"unknown estimate id {estimate_id!r}; "
                          f"expected one of {', '.join(ESTIMATE_IDS)}")
    n = float(constants.n)

    def need(key):
        if key not in entry:
            raise ConfigError(f"{estimate_id} needs parameter '{key}'")
        return _as_float(estimate_id, key, entry.pop(key))

    def done(plan):
        if entry:
            stray = ", ".join(sorted(entry))
            raise ConfigError(f"unknown {estimate_id} parameter(s): {stray}")
        return plan

    if estimate_id == "dispersive":
        p, q = need("p"), need("q")
        constants.beta1(p, q)
        times = _probe_times(entry, estimate_id)
        return done(EstimatePlan(estimate_id, "datum", verify_dispersive,
                                 {"p": p, "q": q, "times": times,
                                  "constants": constants}))

    if estimate_id in ("smoothing_p", "smoothing_pq", "div_smoothing"):
        p, q = need("p"), need("q")
        if p <= 1.0:
            raise AdmissibilityError(
                "smoothing requires 1 < p <= q < inf")
        constants.beta3(p, q)
        if estimate_id == "smoothing_p" and p != q:
            raise ConfigError("smoothing_p requires p = q; use smoothing_pq")
        if estimate_id == "smoothing_pq" and p == q:
            raise ConfigError("smoothing_pq requires p < q; use smoothing_p")
        times = _probe_times(entry, estimate_id)
        fn = (verify_div_smoothing if estimate_id == "div_smoothing"
              else verify_smoothing)
        return done(EstimatePlan(estimate_id, "datum", fn,
                                 {"p": p, "q": q, "times": times,
                                  "constants": constants}))

    if estimate_id == "G_bound":
        alpha, gamma, zeta = need("alpha"), need("gamma"), need("zeta")
        constants.beta4(alpha, gamma, zeta)
        if alpha + zeta - gamma >= 1.0:
            raise AdmissibilityError(
                "G-bound kernel power (alpha + zeta - gamma + 1)/2 >= 1: "
                "the singular factor is not integrable")
        t = entry.pop("t", None)
        t = min(2.0, 0.5 * solver["T"]) if t is None else _as_float(
            estimate_id, "t", t)
        if not 0 < t <= solver["T"]:
            raise ConfigError("G_bound time t must lie in (0, T]")
        return done(EstimatePlan(estimate_id, "trajectory", verify_G_bound,
                                 {"alpha": alpha, "gamma": gamma,
                                  "zeta": zeta, "t": t,
                                  "constants": constants}))

    if estimate_id in ("Ln_decay", "Lq_weighted", "grad_weighted",
                       "Lp_decay"):
        q = need("q")
        delta = entry.pop("delta", None)
        delta = solver["delta"] if delta is None else _as_float(
            estimate_id, "delta", delta)
        window = _window_of(entry, solver, estimate_id)
        gradient = False
        if estimate_id == "Ln_decay":
            if q != n:
                raise ConfigError(f"Ln_decay requires q = n = {n:g}")
            weight, beta = 0.0, constants.beta_prime(delta)
        elif estimate_id == "Lq_weighted":
            if q <= n:
                raise ConfigError(f"Lq_weighted requires q > n = {n:g}")
            weight, beta = 0.5 - n / (2 * q), constants.beta(delta)
        elif estimate_id == "grad_weighted":
            weight, beta = 1.0 - n / (2 * q), constants.beta_dprime(q, delta)
            gradient = True
        else:
            if q == n:
                raise ConfigError("Lp_decay with q = n is Ln_decay; "
                                  "use that id")
            weight, beta = 0.0, constants.beta_star(q, delta)
        return done(EstimatePlan(estimate_id, "trajectory", measure_decay,
                                 {"q": q, "weight_power": weight,
                                  "beta_expected": beta,
                                  "fit_window": window,
                                  "gradient": gradient}))

    if estimate_id == "LrLq_member":
        r, q = need("r"), need("q")
        cls = classify_space_time(int(n), r, q)
        if cls["kind"] == "inadmissible":
            raise AdmissibilityError(
                f"space-time pair (r, q) = ({r:g}, {q:g}) inadmissible: "
                f"1/r < 1/2 - n/(2q) (scaling-critical r = "
                f"{cls['critical_r']:g})")
        return done(EstimatePlan(estimate_id, "trajectory",
                                 verify_space_time_membership,
                                 {"r": r, "q": q}))

    # tmdcy2_rate
    p, q = need("p"), need("q")
    deltas = entry.pop("deltas", None)
    if (not isinstance(deltas, (list, tuple)) or len(deltas) != 3):
        raise ConfigError("tmdcy2_rate needs deltas = "
                          "[delta, delta_prime, delta_star]")
    deltas = tuple(_as_float(estimate_id, f"deltas[{i}]", d)
                   for i, d in enumerate(deltas))
    gradient = bool(entry.pop("gradient", False))
    epsilon = entry.pop("epsilon", None)
    epsilon = 0.25 if epsilon is None else _as_float(
        estimate_id, "epsilon", epsilon)
    branch = tmdcy2_branch(n, p, q, gradient=gradient, epsilon=epsilon)
    if gradient:
        reach = n / branch["p_eff"] - n / q + 1.0 + deltas[0]
        if reach >= 2.0:
            raise AdmissibilityError(
                f"no admissible delta triple: n/p - n/q + 1 + delta = "
                f"{reach:g} >= 2")
    constants.beta_tilde(branch["p_eff"], q, *deltas)
    return done(EstimatePlan(estimate_id, "trajectory", verify_tmdcy2,
                             {"p": p, "q": q, "deltas": deltas,
                              "gradient": gradient, "epsilon": epsilon,
                              "constants": constants}))


def load_config(path: str | None = None, *, out_override: str | None = None,
                seed_override: int | None = None) -> RunConfig:
    """Parse, default-fill, and validate a run configuration.

    Raises ConfigError or AdmissibilityError naming the violated
    constraint; nothing heavier than constant arithmetic runs here.
    """
    if path is None:
        raw = {}
    else:
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as err:
            raise ConfigError(f"cannot read config file: {err}") from err
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as err:
            raise ConfigError(f"config is not valid JSON: {err}") from err
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a JSON object")
    known = {"grid", "constants", "solver", "table", "norms", "estimates",
             "output_dir"}
    for key in raw:
        if key not in known:
            raise ConfigError(f"unknown configuration key '{key}'")

    grid = _validate_grid(_merge_section(raw, "grid"))
    constants_block = _validate_constants(_merge_section(raw, "constants"))
    constants = DecayConstants(constants_block["n_dim"],
                               constants_block["delta_n"],
                               constants_block["c0"])
    solver = _validate_solver(_merge_section(raw, "solver"), constants)
    if seed_override is not None:
        if not 0 <= seed_override < 2 ** 64:
            raise ConfigError("--seed must fit in u64")
        solver["seed"] = seed_override
    table = _validate_table(_merge_section(raw, "table"))
    norms = _validate_norms(raw.get("norms", [2.0, 4.0, 8.0]))

    entries = raw.get("estimates", [dict(e) for e in DEFAULT_ESTIMATES])
    if not isinstance(entries, list):
        raise ConfigError("estimates must be a list")
    plans = [_plan_estimate(e, constants, solver) for e in entries]

    output_dir = out_override if out_override is not None else raw.get(
        "output_dir", "out")
    if not isinstance(output_dir, str) or not output_dir:
        raise ConfigError("output_dir must be a non-empty path string")

    return RunConfig(grid, constants_block, solver, table, norms,
                     entries, output_dir, plans)


# -- deterministic writers ------------------------------------------------------


def _fmt_cell(value) -> str:
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def _write_csv(path: Path, header: tuple, rows: list, config: RunConfig,
               command: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows([[_fmt_cell(cell) for cell in row] for row in rows])
    meta = {"command": command, "config_hash": config.digest(),
            "columns": list(header), "rows": len(rows)}
    _write_json(path.with_name(path.stem + ".meta.json"), meta)


def _write_json(path: Path, payload) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n",
                    encoding="utf-8")


def _write_reports(out_dir: Path, command: str, config: RunConfig,
                   reports: list, extra: dict | None = None) -> None:
    rows = [[report.row()[key] for key in REPORT_HEADER]
            for report in reports]
    _write_csv(out_dir / "reports.csv", REPORT_HEADER, rows, config, command)
    summary = {
        "command": command,
        "config_hash": config.digest(),
        "n_estimates": len(reports),
        "n_pass": sum(1 for r in reports if r.passed),
        "n_fail": sum(1 for r in reports if not r.passed),
        "all_pass": all(r.passed for r in reports),
        "reports": [r.row() for r in reports],
    }
    summary.update(extra or {})
    _write_json(out_dir / "summary.json", summary)


# -- run orchestration ----------------------------------------------------------


def run_estimates(plans: list, datum, trajectory, *,
                  threads: int = 1) -> list:
    """Execute estimate plans, preserving configuration order.

    Thread workers share the trajectory's norm caches; cache races only
    duplicate work, never change values, so outputs stay deterministic.
    """
    def one(plan: EstimatePlan) -> EstimateReport:
        target = datum if plan.needs == "datum" else trajectory
        report = plan.fn(target, **plan.kwargs)
        if report.estimate_id != plan.estimate_id:
            raise RuntimeError(f"estimate id mismatch: planned "
                               f"{plan.estimate_id}, got {report.estimate_id}")
        return report

    if threads <= 1 or len(plans) <= 1:
        return [one(plan) for plan in plans]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(one, plans))


def _solve(config: RunConfig, out_dir: Path, command: str):
    """Run the configured solve and write norms.csv + iterations.json."""
    grid = config.build_grid()
    datum = make_datum(grid, config.solver["amplitude"],
                       config.solver["shape"])
    trajectory, logs = picard_solve(datum, config.solver["T"],
                                    config.solver_config())
    rows = [(trajectory.times[j], q, trajectory.norms[q][j])
            for j in range(trajectory.times.size)
            for q in config.norms]
    _write_csv(out_dir / "norms.csv", NORM_HEADER, rows, config, command)
    _write_json(out_dir / "iterations.json", [asdict(log) for log in logs])
    _write_json(out_dir / "iterations.meta.json",
                {"command": command, "config_hash": config.digest(),
                 "rows": len(logs)})
    return datum, trajectory


def _cmd_kernel_table(config: RunConfig, out_dir: Path) -> int:
    kernel = kernel_h2 if config.constants["n_dim"] == 2 else kernel_h3
    rho = np.linspace(0.0, config.grid["rho_max"], config.grid["n_rho"])
    rows = [(t, r, float(kernel(t, r))) for t in KERNEL_TIMES for r in rho]
    _write_csv(out_dir / "kernel_table.csv", KERNEL_HEADER, rows, config,
               "kernel-table")
    return 0


def _cmd_constants(config: RunConfig, out_dir: Path) -> int:
    constants = config.decay_constants()
    table = constants.table(config.table["p"], config.table["q"],
                            config.solver["delta"])
    payload = {"config_hash": config.digest(),
               "T_max": 5.0 / constants.beta_prime(config.solver["delta"]),
               "table": table}
    _write_json(out_dir / "constants.json", payload)
    print(json.dumps(payload, indent=2, sort_keys=True))
    return 0


def _cmd_simulate(config: RunConfig, out_dir: Path) -> int:
    _solve(config, out_dir, "simulate")
    return 0


def _cmd_verify(config: RunConfig, out_dir: Path, threads: int) -> int:
    datum, trajectory = _solve(config, out_dir, "verify-estimates")
    reports = run_estimates(config.plans, datum, trajectory, threads=threads)
    _write_reports(out_dir, "verify-estimates", config, reports)
    return 0 if all(r.passed for r in reports) else 1


def _decay_entries(n: float, delta: float) -> list:
    """The preset battery for decay-report; q > n entries need their own
    delta because the weighted rate demands q < n/(1 - delta)."""
    def grad_delta(q):
        return max(delta, 1.0 - n / q + 0.1)

    return [
        {"id": "Ln_decay", "q": n, "delta": delta},
        {"id": "Lq_weighted", "q": 4.0, "delta": delta},
        {"id": "Lq_weighted", "q": 8.0, "delta": delta},
        {"id": "grad_weighted", "q": 4.0, "delta": grad_delta(4.0)},
        {"id": "grad_weighted", "q": 8.0, "delta": grad_delta(8.0)},
        {"id": "Lp_decay", "q": 4.0, "delta": delta},
        {"id": "LrLq_member", "r": 4.0, "q": 4.0},
        {"id": "LrLq_member", "r": 2.0, "q": 8.0},
        {"id": "LrLq_member", "r": 1.0, "q": 2.0},
    ]


def _cmd_decay_report(config: RunConfig, out_dir: Path, threads: int) -> int:
    constants = config.decay_constants()
    entries = _decay_entries(float(constants.n), config.solver["delta"])
    plans = [_plan_estimate(e, constants, config.solver) for e in entries]
    datum, trajectory = _solve(config, out_dir, "decay-report")
    reports = run_estimates(plans, datum, trajectory, threads=threads)

    l2 = trajectory.norms[2.0] if 2.0 in trajectory.norms else None
    end_state = {"T": config.solver["T"], "ratio": None, "pass": None}
    horizon = 5.0 / constants.beta_prime(config.solver["delta"])
    end_ok = True
    if l2 is not None and l2[0] > 0:
        end_state["ratio"] = float(l2[-1] / l2[0])
        if config.solver["T"] >= horizon:
            end_state["threshold"] = END_STATE_THRESHOLD
            end_state["pass"] = end_state["ratio"] < END_STATE_THRESHOLD
            end_ok = end_state["pass"]
    _write_reports(out_dir, "decay-report", config, reports,
                   {"end_state": end_state, "decay_horizon": horizon})
    return 0 if end_ok and all(r.passed for r in reports) else 1


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hypflow",
        description="Mild-solution solver and estimate verifier on the "
                    "hyperbolic plane.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        cmd = sub.add_parser(name)
        cmd.add_argument("--config", default=None,
                         help="JSON run configuration (defaults apply "
                              "when omitted)")
        cmd.add_argument("--out", default=None,
                         help="output directory (overrides output_dir)")
        cmd.add_argument("--seed", type=int, default=None,
                         help="u64 seed folded into the configuration hash")
        cmd.add_argument("--threads", type=int, default=1,
                         help="worker threads for estimate checks")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.threads < 1:
            raise ConfigError("--threads must be at least 1")
        config = load_config(args.config, out_override=args.out,
                             seed_override=args.seed)
    except (ConfigError, AdmissibilityError) as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2
    out_dir = Path(config.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    try:
        if args.command == "kernel-table":
            return _cmd_kernel_table(config, out_dir)
        if args.command == "constants":
            return _cmd_constants(config, out_dir)
        if args.command == "simulate":
            return _cmd_simulate(config, out_dir)
        if args.command == "verify-estimates":
            return _cmd_verify(config, out_dir, args.threads)
        return _cmd_decay_report(config, out_dir, args.threads)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2
    except (DivergenceDetected, NonConvergence) as err:
        print(f"run failed: {err}", file=sys.stderr)
        return 1
    except OverflowError as err:
        print(f"run failed: numerical overflow, the configured constants "
              f"are too extreme for the horizon T ({err})", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
