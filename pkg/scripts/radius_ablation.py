"""Oracle-scored radius-scale ablation over the fixture suite.

    python scripts/radius_ablation.py --values 1.0,1.5,3.0 --out ablation.csv
"""
import argparse
import csv
import sys

from edgecurves.experiments import radius_ablation
from edgecurves.synthdata import fixture_suite


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--values", default="1.0,1.5,3.0")
    ap.add_argument("--out", help="CSV path (stdout if omitted)")
    args = ap.parse_args()
    values = [float(v) for v in args.values.split(",")]
    table = radius_ablation(values, fixture_suite())
    fh = open(args.out, "w", newline="") if args.out else sys.stdout
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["radius_scale", "segmentation_precision", "ecd"])
    for v, (prec, ecd) in table.items():
        w.writerow([v, f"{prec:.6f}", f"{ecd:.6e}"])
    if args.out:
        fh.close()


if __name__ == "__main__":
    main()
