#!/usr/bin/env python3
"""Tabulate admissible boundary sets for the scalar fluxes.

For each boundary datum the script prints the closed-form Riemann trace set,
the excluded no-layer point (if any) and cross-checks membership against the
numerical viscous layer oracle on a grid.

Usage: python3 scripts/reproduce_admissible_sets.py [--out DIR]
"""

import argparse
import os

import numpy as np

from quarterplane.admissible import (
    exclusion_set,
    layer_member_oracle,
    riemann_set_scalar,
)
from quarterplane.systems import make_model

CASES = [
    ("burgers", (-1.0, -0.5, 0.5, 1.0, 1.5)),
    ("cubic", (-2.5, -2.0, -1.5, 0.0, 1.5, 2.0, 2.5)),
]


def fmt_set(s):
    parts = []
    for lo, hi, lc, hc in s.intervals:
        parts.append(f"{'[' if lc else '('}{lo:g}, {hi:g}{']' if hc else ')'}")
    parts.extend(f"{{{p:g}}}" for p in s.points)
    return " u ".join(parts) if parts else "(empty)"


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default=None, help="optionally write membership grids as CSV")
    args = ap.parse_args()

    grid = np.linspace(-3.0, 3.0, 121)
    for name, data in CASES:
        model = make_model(name)
        print(f"== {name}")
        for u_B in data:
            s = riemann_set_scalar(model, u_B)
            excl = exclusion_set(model, u_B)
            members = s.member_grid(grid)
            oracle = layer_member_oracle(model, u_B, grid, "viscous")
            # disagreements are confined to a small band around set boundaries
            band = np.ones(grid.shape, dtype=bool)
            for b in s.boundary_values():
                band &= np.abs(grid - b) > 2e-2
            mismatches = int(np.sum(members[band] != oracle[band]))
            tag = f" excluded: {excl[0]:.12g}" if excl else ""
            print(f"  u_B = {u_B:5g}: E = {fmt_set(s)}{tag}"
                  f"  [oracle disagreements off-band: {mismatches}]")
            if args.out:
                os.makedirs(args.out, exist_ok=True)
                path = os.path.join(args.out, f"{name}_uB_{u_B:g}.csv")
                with open(path, "w") as fh:
                    fh.write("u0,riemann_member,viscous_layer_member\n")
                    for x, m, o in zip(grid, members, oracle):
                        fh.write(f"{x!r},{int(m)},{int(o)}\n")


if __name__ == "__main__":
    main()
