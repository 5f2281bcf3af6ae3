"""Attraction times of the translated Riccati family over a slow-parameter grid.

    python3 scripts/equi_probe.py --x-max 10 --n 11 --tols 1e-2 1e-3 1e-4
"""
import argparse

import numpy as np

from nonauto_slowfast.hull import canonical_forcing
from nonauto_slowfast.io import write_csv
from nonauto_slowfast.layer import SeedBox, repeller_trajectory, riccati_layer
from nonauto_slowfast.maps import fig2_gamma
from nonauto_slowfast.tracking import equi_attraction_probe


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--x-min", type=float, default=0.0)
    ap.add_argument("--x-max", type=float, default=10.0)
    ap.add_argument("--n", type=int, default=11)
    ap.add_argument("--tols", type=float, nargs="+", default=[1e-3])
    ap.add_argument("--out", default="equi.csv")
    args = ap.parse_args()

    forcing = canonical_forcing()
    layer = riccati_layer(forcing, fig2_gamma())
    r0 = float(repeller_trajectory(riccati_layer(forcing), np.zeros(2), [0.0], 0.0, 1.0).states[0, 0])
    seeds = SeedBox.interval(r0 + 0.1, r0 + 3.0, 0.25, relative=True)
    table = equi_attraction_probe(layer, np.linspace(args.x_min, args.x_max, args.n), seeds, tols=args.tols)
    write_csv(args.out, ["x", "tol", "T"], list(table.rows()))
    for j, tl in enumerate(table.tols):
        print(f"tol={tl:g}: T in [{np.nanmin(table.T[:, j]):.3f}, {np.nanmax(table.T[:, j]):.3f}], spread {table.spread(j):.2%}")


if __name__ == "__main__":
    main()
