"""Post-hoc figures from the solver CLI's CSV/JSON artifacts.

This package reads only the documented file schemas
(norms.csv = (t, q, norm), reports.csv = (estimate_id, params_json,
measured, predicted, margin, verdict), iterations.json = list of
iteration records, constants.json = {T_max, config_hash, table}) and
never imports the producer.  Schema violations and empty data sets
raise SchemaError, which the entry points turn into a nonzero exit.

Figure building is split from saving so callers and tests can inspect
the artists; the save step is deterministic for fixed inputs and
library versions.
"""

import argparse
import csv
import json
import sys
from dataclasses import dataclass
from pathlib import Path

import matplotlib
import numpy as np

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

NORMS_COLUMNS = ("t", "q", "norm")
REPORTS_COLUMNS = ("estimate_id", "params_json", "measured",
                   "predicted", "margin", "verdict")
VERDICT_COLORS = {"pass": "tab:green", "fail": "tab:red"}
FIGURE_KINDS = ("decay", "ratio", "convergence")


class SchemaError(ValueError):
    """An input file is missing, malformed, or has no data rows."""


# -- readers ----------------------------------------------------------------

def _read_rows(path, required):
    try:
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            header = reader.fieldnames or ()
            missing = [c for c in required if c not in header]
            if missing:
                raise SchemaError(
                    f"{path}: missing column(s) {', '.join(missing)}")
            rows = list(reader)
    except OSError as exc:
        raise SchemaError(f"cannot read {path}: {exc}") from exc
    if not rows:
        raise SchemaError(f"{path}: no data rows")
    return rows


def read_norms(path):
    """Rows of norms.csv as (t, q, norm) float triples."""
    rows = _read_rows(path, NORMS_COLUMNS)
    try:
        return [(float(r["t"]), float(r["q"]), float(r["norm"]))
                for r in rows]
    except (TypeError, ValueError) as exc:
        raise SchemaError(f"{path}: non-numeric norm row") from exc


def read_reports(path):
    """Rows of reports.csv with measured/predicted/margin as floats."""
    rows = _read_rows(path, REPORTS_COLUMNS)
    out = []
    for r in rows:
        if r["verdict"] not in VERDICT_COLORS:
            raise SchemaError(
                f"{path}: verdict must be pass or fail, got {r['verdict']!r}")
        try:
            out.append({
                "estimate_id": r["estimate_id"],
                "measured": float(r["measured"]),
                "predicted": float(r["predicted"]),
                "margin": float(r["margin"]),
                "verdict": r["verdict"],
            })
        except (TypeError, ValueError) as exc:
            raise SchemaError(f"{path}: non-numeric report row") from exc
    return out


def read_constants(path):
    """constants.json payload; the reference rate is table['beta']."""
    try:
        with open(path) as fh:
            payload = json.load(fh)
    except OSError as exc:
        raise SchemaError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: not valid JSON: {exc}") from exc
    table = payload.get("table")
    if not isinstance(table, dict) or not isinstance(
            table.get("beta"), (int, float)):
        raise SchemaError(f"{path}: no numeric table.beta entry")
    return payload


def read_iterations(path):
    """iterations.json as a list of {k, residual, ...} records."""
    try:
        with open(path) as fh:
            records = json.load(fh)
    except OSError as exc:
        raise SchemaError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: not valid JSON: {exc}") from exc
    if not isinstance(records, list) or not records or not all(
            isinstance(r, dict) and {"k", "residual"} <= set(r)
            for r in records):
        raise SchemaError(f"{path}: expected a list of iteration records")
    return records


# -- figure builders --------------------------------------------------------

def build_decay_figure(norms_csv, constants_json, log_x=False, log_y=True):
    """Norm curves per q with the predicted e^{-t beta} reference slopes.

    Reference lines are anchored at each curve's first positive-time
    sample and carry underscore labels, so legend entries count the
    distinct q values only.
    """
    rows = read_norms(norms_csv)
    beta = float(read_constants(constants_json)["table"]["beta"])
    qs = sorted({q for _, q, _ in rows})

    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for q in qs:
        t = np.array([r[0] for r in rows if r[1] == q])
        v = np.array([r[2] for r in rows if r[1] == q])
        order = np.argsort(t)
        t, v = t[order], v[order]
        ax.plot(t, v, marker=".", label=f"q = {q:g}")
        anchor = np.flatnonzero(t > 0.0)
        if anchor.size:
            i = anchor[0]
            ref_t = t[i:]
            ax.plot(ref_t, v[i] * np.exp(-beta * (ref_t - t[i])),
                    linestyle="--", color="0.5",
                    label=f"_ref_q{q:g}")
    if log_x:
        ax.set_xscale("log")
    if log_y:
        ax.set_yscale("log")
    ax.set_xlabel("t")
    ax.set_ylabel("norm")
    ax.set_title(f"norm decay vs predicted rate beta = {beta:g}")
    ax.legend()
    return fig


def build_reports_figure(reports_csv):
    """Paired bars of measured vs predicted, measured colored by verdict."""
    reports = read_reports(reports_csv)
    x = np.arange(len(reports))

    fig, ax = plt.subplots(figsize=(1.5 + 1.2 * len(reports), 4.0))
    ax.bar(x - 0.2, [r["measured"] for r in reports], width=0.4,
           color=[VERDICT_COLORS[r["verdict"]] for r in reports],
           label="measured")
    ax.bar(x + 0.2, [r["predicted"] for r in reports], width=0.4,
           color="0.7", label="predicted")
    ax.set_xticks(x)
    ax.set_xticklabels([r["estimate_id"] for r in reports],
                       rotation=20, ha="right")
    ax.axhline(0.0, color="black", linewidth=0.8)
    ax.set_ylabel("value")
    ax.set_title("estimate checks: measured vs predicted")
    ax.legend()
    return fig


def build_convergence_figure(iterations_json):
    """Iteration residuals on a log axis."""
    records = read_iterations(iterations_json)
    k = [r["k"] for r in records]
    res = [r["residual"] for r in records]

    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.semilogy(k, res, marker="o")
    ax.set_xlabel("iteration k")
    ax.set_ylabel("residual")
    ax.set_title("fixed-point iteration convergence")
    return fig


def _save(fig, out_path):
    out = Path(out_path)
    out.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out, format=out.suffix.lstrip(".") or "png")
    plt.close(fig)
    return out


# -- public operations ------------------------------------------------------

def plot_decay(norms_csv, constants_json, out_path, log_x=False, log_y=True):
    """Write the log-linear decay figure; returns the output path."""
    return _save(build_decay_figure(norms_csv, constants_json,
                                    log_x=log_x, log_y=log_y), out_path)


def plot_reports(reports_csv, out_path):
    """Write the measured-vs-predicted report figure."""
    return _save(build_reports_figure(reports_csv), out_path)


def plot_convergence(iterations_json, out_path):
    """Write the iteration-convergence figure."""
    return _save(build_convergence_figure(iterations_json), out_path)


@dataclass(frozen=True)
class FigureSpec:
    """A renderable figure: input files, kind, output path, axis flags.

    Construction validates that the referenced inputs exist and match
    the schema their kind requires, so a spec that constructs is a spec
    that renders.
    """

    inputs: tuple
    kind: str
    out_path: str
    log_x: bool = False
    log_y: bool = True
    _arity = {"decay": 2, "ratio": 1, "convergence": 1}

    def __post_init__(self):
        if self.kind not in FIGURE_KINDS:
            raise ValueError(f"figure kind must be one of {FIGURE_KINDS}, "
                             f"got {self.kind!r}")
        paths = tuple(str(p) for p in self.inputs)
        object.__setattr__(self, "inputs", paths)
        if len(paths) != self._arity[self.kind]:
            raise ValueError(
                f"{self.kind} figures take {self._arity[self.kind]} "
                f"input(s), got {len(paths)}")
        if self.kind == "decay":
            read_norms(paths[0])
            read_constants(paths[1])
        elif self.kind == "ratio":
            read_reports(paths[0])
        else:
            read_iterations(paths[0])


def render(spec: FigureSpec):
    """Render a validated spec to its output path."""
    if spec.kind == "decay":
        return plot_decay(spec.inputs[0], spec.inputs[1], spec.out_path,
                          log_x=spec.log_x, log_y=spec.log_y)
    if spec.kind == "ratio":
        return plot_reports(spec.inputs[0], spec.out_path)
    return plot_convergence(spec.inputs[0], spec.out_path)


# -- entry points -----------------------------------------------------------

def main_decay(argv=None):
    parser = argparse.ArgumentParser(
        prog="plot-decay",
        description="Plot norm decay curves with predicted rate overlays.")
    parser.add_argument("norms_csv")
    parser.add_argument("constants_json")
    parser.add_argument("out_path")
    parser.add_argument("--linear-y", action="store_true",
                        help="linear instead of log norm axis")
    args = parser.parse_args(argv)
    try:
        plot_decay(args.norms_csv, args.constants_json, args.out_path,
                   log_y=not args.linear_y)
    except SchemaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


def main_reports(argv=None):
    parser = argparse.ArgumentParser(
        prog="plot-reports",
        description="Plot measured vs predicted estimate checks.")
    parser.add_argument("reports_csv")
    parser.add_argument("out_path")
    args = parser.parse_args(argv)
    try:
        plot_reports(args.reports_csv, args.out_path)
    except SchemaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0
