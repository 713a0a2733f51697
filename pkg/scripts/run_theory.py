"""Linear-Gaussian experiments: theorem certification, CRLB check, and the budget sweep.

Each step goes through the CLI so every output directory carries a replayable report.

    python scripts/run_theory.py --outdir runs/theory
"""
import argparse
import json
from pathlib import Path

from uml_lab.cli import main


def run(outdir: Path, seed: int, configs: int, trials: int) -> None:
    steps = {
        "verify-theorems": ["--configs", str(configs)],
        "monte-carlo": ["--set", f"trials={trials}"],
        "budget-sweep": ["--set", "mc_trials=2000"],
    }
    for cmd, extra in steps.items():
        code = main([cmd, "--seed", str(seed), "--outdir", str(outdir / cmd)] + extra)
        metrics = json.loads((outdir / cmd / "report.json").read_text())["metrics"]
        if cmd == "verify-theorems":
            summary = f"{metrics['total_failures']} violations"
        elif cmd == "monte-carlo":
            summary = f"max relative Frobenius error {metrics['max_rel_frobenius_error']:.4f}"
        else:
            summary = f"best Y share of the budget: {metrics['argmin_fraction']}"
        print(f"{cmd:16s} exit {code}  {summary}")


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--outdir", type=Path, default=Path("runs/theory"))
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--configs", type=int, default=500)
    ap.add_argument("--trials", type=int, default=20000)
    a = ap.parse_args()
    run(a.outdir, a.seed, a.configs, a.trials)
