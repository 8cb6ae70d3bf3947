"""Print the classical Lennard-Jones area thresholds and cross-check them by bisection."""
import argparse

from lattice_lab.derivatives import area_sign_change
from lattice_lab.lattice_core import LJParams
from lattice_lab.lj_thresholds import compute_thresholds


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--a1", type=float, default=2.0)
    ap.add_argument("--a2", type=float, default=1.0)
    ap.add_argument("--t1", type=float, default=3.0)
    ap.add_argument("--t2", type=float, default=6.0)
    ap.add_argument("--tol", type=float, default=1e-11)
    args = ap.parse_args()

    params = LJParams(args.a1, args.a2, args.t1, args.t2)
    ts = compute_thresholds(params, args.tol)
    f = params.potential
    print(f"{'name':6s} {'closed form':>14s} {'bisection':>14s}")
    for name, val, which in (("A0", ts.A0, "T"), ("A1", ts.A1, "K1"), ("A2", ts.A2, "K2")):
        root = area_sign_change(f, which, tol=args.tol)
        print(f"{name:6s} {val:14.10f} {root:14.10f}")
    print(f"{'A_BZ':6s} {ts.A_BZ:14.10f}   at (x, y) = ({ts.abz.x:.6f}, {ts.abz.y:.6f})")


if __name__ == "__main__":
    main()
