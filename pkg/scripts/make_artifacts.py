"""Regenerate the CSV artifacts the figure frontend consumes as fixtures.

Runs the CLI on the acceptance-suite instances (refinement study,
sqrt(tau) sweep, alpha-limit study, pipeline uniformity, smoothing
history) and copies the documented CSV/JSON artifacts into
frontend/fixtures/.  Deterministic: rerunning reproduces identical bytes
on the same kernel backend.

Usage:  python3 scripts/make_artifacts.py [destination]
"""

import shutil
import sys
import tempfile
from pathlib import Path

from balpha.cli import main

DEST = Path(sys.argv[1]) if len(sys.argv) > 1 else (
    Path(__file__).resolve().parent.parent / "frontend" / "fixtures"
)


def run(args):
    code = main(args)
    if code != 0:
        raise SystemExit(f"CLI run failed with exit {code}: {args}")


def main_script():
    DEST.mkdir(parents=True, exist_ok=True)
    with tempfile.TemporaryDirectory() as tmp:
        import os

        os.environ["BALPHA_OUT_ROOT"] = tmp
        tmp = Path(tmp)

        run(["control-inviscid", "--n", "401", "--profile", "sin:1:0.3",
             "--target-profile", "sin:2:0.2", "--refine", "101,201,401",
             "--out", "refine"])
        shutil.copy(tmp / "refine" / "refinement.csv", DEST)
        shutil.copy(tmp / "refine" / "refinement.fit.json", DEST)

        run(["approx", "--n", "201", "--T", "0.5", "--profile", "sin:1:0.15",
             "--target-profile", "sin:2:0.05",
             "--taus", "0.16,0.08,0.04,0.02", "--alphas", "0.05,0.5",
             "--out", "tau"])
        shutil.copy(tmp / "tau" / "tau_sweep.csv", DEST)
        shutil.copy(tmp / "tau" / "tau_law.fit.json", DEST)

        run(["alpha-limit", "--n", "101", "--T", "0.3", "--profile",
             "sin:1:1.0", "--alphas", "0.4,0.2,0.1,0.05", "--out", "al"])
        shutil.copy(tmp / "al" / "alpha_limit.csv", DEST)
        shutil.copy(tmp / "al" / "alpha_limit.fit.json", DEST)

        run(["smooth", "--n", "201", "--T", "1", "--profile", "sin:1:1.0",
             "--alpha", "0.1", "--out", "sm"])
        shutil.copy(tmp / "sm" / "smoothing_history.csv", DEST)

        run(["pipeline", "--n", "101", "--N", "0.3", "--profile", "sin:2:1.0",
             "--alphas", "0.05,0.5", "--out", "pl"])
        shutil.copy(tmp / "pl" / "uniformity.csv", DEST)

    print(f"fixtures written to {DEST}")


if __name__ == "__main__":
    main_script()
