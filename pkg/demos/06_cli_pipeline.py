"""Driving the command-line pipeline end to end.

A JSON config describes the grid, the solver run, and the estimate
battery; each subcommand writes CSV/JSON artifacts with a config-hash
sidecar so downstream tools can trust what they read.
"""

import json
import pathlib
import subprocess
import sys
import tempfile

config = {
    "grid": {"n_rho": 24, "n_theta": 32},
    "solver": {"T": 2.0, "n_lattice": 8},
    "estimates": [
        {"id": "dispersive", "p": 2.0, "q": 4.0},
        {"id": "LrLq_member", "r": 4.0, "q": 4.0},
    ],
}

with tempfile.TemporaryDirectory() as tmp:
    cfg = pathlib.Path(tmp) / "run.json"
    cfg.write_text(json.dumps(config))
    out = pathlib.Path(tmp) / "out"

    for sub in ("constants", "simulate", "verify-estimates"):
        proc = subprocess.run(
            [sys.executable, "-m", "hypflow.cli", sub,
             "--config", str(cfg), "--out", str(out)],
            capture_output=True, text=True)
        print(f"$ hypflow {sub}  -> exit {proc.returncode}")

    print("\nartifacts:")
    for p in sorted(out.iterdir()):
        print(f"  {p.name}  ({p.stat().st_size} bytes)")

    print("\nreports.csv:")
    print((out / "reports.csv").read_text().strip())

    summary = json.loads((out / "summary.json").read_text())
    print(f"\nsummary: all_pass = {summary['all_pass']},"
          f" n_pass = {summary['n_pass']}")
