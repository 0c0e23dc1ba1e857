#!/usr/bin/env python3
"""Viscous boundary layer convergence experiment.

Runs the viscous scheme for Burgers data u_I = -2, u_B = 1 over a decreasing
sequence of viscosities and reports how the interior trace approaches the
limit -2 and how the rescaled boundary profile approaches the layer ODE
solution.

Usage: python3 scripts/layer_convergence_study.py [--eps 0.04 0.02 0.01]
"""

import argparse

from quarterplane.diagnostics import convergence_study
from quarterplane.layers import viscous_layer_profile
from quarterplane.schemes import run_viscous
from quarterplane.systems import make_model


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--eps", type=float, nargs="+", default=[0.04, 0.02, 0.01])
    args = ap.parse_args()

    model = make_model("burgers")

    def run(eps):
        h = eps * eps / 0.32  # keep h/eps shrinking so the profile resolves
        n = int(round(0.4 / h))
        return run_viscous(model, -2.0, 1.0, h=h, eps=eps, t_end=0.4, n_cells=n)

    ode = viscous_layer_profile(model, 1.0, -2.0, y_max=50.0)
    rows, flags = convergence_study(
        model, run, args.eps, expected_trace=-2.0,
        profile_reference=lambda y: float(ode.interp(y)))

    print(f"{'eps':>8} {'trace':>12} {'trace err':>12} {'profile err':>12} "
          f"{'entropy res':>12}")
    for r in rows:
        print(f"{r.parameter:8g} {float(r.trace):12.6f} {r.trace_error:12.3e} "
              f"{r.profile_error:12.3e} {r.entropy_residual:12.3e}")
    print(f"trace error decreasing:   {flags['trace_error_decreasing']}")
    print(f"profile error decreasing: {flags['profile_error_decreasing']}")


if __name__ == "__main__":
    main()
