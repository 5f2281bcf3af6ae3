"""Scan the arctan transition for tipping over a wide epsilon range.

The CLI restricts epsilon to (0, 1]; this script goes beyond it.

    python3 scripts/tipping_scan.py --eps 0.8 1.5 3 10 --bisect
"""
import argparse

from nonauto_slowfast.io import write_csv
from nonauto_slowfast.maps import ArctanGamma
from nonauto_slowfast.tipping import TransitionScenario, classify, critical_rate


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--eps", type=float, nargs="+", default=[0.8, 1.5, 3.0, 10.0])
    ap.add_argument("--amplitude", type=float, default=1.0, help="Gamma = amplitude (2/pi) arctan")
    ap.add_argument("--gamma-tol", type=float, default=1e-3)
    ap.add_argument("--bisect", action="store_true")
    ap.add_argument("--out", default="tipping_scan.csv")
    args = ap.parse_args()

    ts = TransitionScenario(ArctanGamma(args.amplitude), gamma_tol=args.gamma_tol)
    rows = []
    for e in sorted(args.eps):
        v = classify(ts, e)
        rows.append((e, v.outcome, v.evidence))
        print(f"eps={e:g}: {v.outcome} ({v.evidence:.4g})")
    write_csv(args.out, ["epsilon", "outcome", "evidence_value"], rows)
    if args.bisect:
        eps = sorted(args.eps)
        res = critical_rate(ts, eps[0], eps[-1], scan=eps[1:-1])
        if res.found:
            print(f"critical rate ~ {res.epsilon_c:.4f} in {res.bracket}")
        else:
            print(f"no tipping found up to eps={eps[-1]:g}")


if __name__ == "__main__":
    main()
