"""Write the plot-ready CSVs for every figure preset into one directory.

    python3 scripts/reproduce_figures.py --out figures/ --workers 4
"""
import argparse
import sys
from pathlib import Path

from nonauto_slowfast.cli import main

FIGURES = ("fig1", "fig2-left", "fig2-right", "fig3")


def run():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="figures")
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--only", choices=FIGURES, nargs="*")
    args = ap.parse_args()
    worst = 0
    for name in args.only or FIGURES:
        code = main(["figure", name, "--out", str(Path(args.out) / name), "--workers", str(args.workers)])
        print(f"{name}: exit {code}")
        worst = max(worst, code)
    return worst


if __name__ == "__main__":
    sys.exit(run())
