"""Covariance-scorer stress sweeps: surface noise X, point budget P and the dihedral recall floor.

    python scripts/stress_sweep.py
"""
import argparse

from edgecurves.experiments import density_sweep, dihedral_recall, noise_sweep


def show(label, table):
    print(f"{label:>8} {'IoU':>8} {'prec':>8} {'recall':>8}")
    for k, (i, p, r) in table.items():
        print(f"{k:>8} {i:8.4f} {p:8.4f} {r:8.4f}")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--noise", default="0,0.01,0.02,0.05")
    ap.add_argument("--points", default="8096,4096,2048,1024")
    args = ap.parse_args()
    show("X", noise_sweep([float(x) for x in args.noise.split(",")]))
    show("P", density_sweep([int(p) for p in args.points.split(",")]))
    print(f"dihedral recall at X=0: {dihedral_recall():.3f}")


if __name__ == "__main__":
    main()
