"""Sweep the minimizer shape over an area range; write CSV and SVG and locate the transitions."""
import argparse
import sys

from lattice_lab.cli import main as cli_main
from lattice_lab.minimizer import CLASSICAL, locate_transition, minimize_full


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--area-min", type=float, default=0.5)
    ap.add_argument("--area-max", type=float, default=3.0)
    ap.add_argument("--step", type=float, default=0.01)
    ap.add_argument("--out", default="phase_diagram.csv")
    ap.add_argument("--plot", default="phase_diagram.svg")
    ap.add_argument("--jobs", type=int, default=1)
    args = ap.parse_args()

    code = cli_main([
        "sweep", "--area-min", str(args.area_min), "--area-max", str(args.area_max), "--step", str(args.step),
        "--out", args.out, "--plot", args.plot, "--jobs", str(args.jobs),
    ])
    print(f"rows -> {args.out}, plot -> {args.plot}")

    for lo, hi in ((1.13, 1.14), (1.14, 1.15), (1.26, 1.27)):
        A, s_lo, s_hi = locate_transition(CLASSICAL, lo, hi)
        line = f"{s_lo.value:>11s} -> {s_hi.value:<11s} at A = {A:.5f}"
        p = minimize_full(CLASSICAL, A + 1e-5)
        if p.theta_deg is not None:
            line += f"  (theta at A + 1e-5: {p.theta_deg:.3f} deg)"
        print(line)
    for A in (1.141, 1.27):
        p = minimize_full(CLASSICAL, A)
        print(f"A = {A}: {p.shape.value}, x = {p.minimizer.x:.6f}, y = {p.minimizer.y:.6f}, theta = {p.theta_deg}")
    return code


if __name__ == "__main__":
    sys.exit(main())
