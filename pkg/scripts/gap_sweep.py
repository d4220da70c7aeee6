"""Gap sweep for two-photon absorption, F = a^2 - alpha^2.

Writes alpha, delta_dg, delta_edg, parent_gap, warning as CSV and prints a
summary of the ordering delta_edg >= delta_dg.

    python scripts/gap_sweep.py --alpha 0:3:0.05 --trunc 60 --out gaps.csv
"""
import argparse
import sys

from fourcorners.cli import emit_csv, gap_sweep, parse_range


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--alpha", default="0:3:0.05", help="start:stop:step or comma list")
    p.add_argument("--trunc", type=int, default=60)
    p.add_argument("--check", action="store_true", help="compare against truncation + 10")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", help="CSV path (default stdout)")
    args = p.parse_args(argv)

    rows = gap_sweep("two_photon", parse_range(args.alpha), {"truncation": args.trunc},
                     check=args.check, workers=args.workers)
    text = emit_csv(rows)
    if args.out:
        with open(args.out, "w") as f:
            f.write(text)
    else:
        sys.stdout.write(text)
    margin = min((r["delta_edg"] - r["delta_dg"] for r in rows), default=float("nan"))
    sys.stderr.write(f"{len(rows)} points; min(delta_edg - delta_dg) = {margin:.3e}\n")


if __name__ == "__main__":
    main()
