#!/usr/bin/env python3
"""Sample the six smoothing curves and their p-th powers to CSV (and PNG).

Writes curves_phi.csv and curves_phi_p.csv under --out; with --render also
saves matching figures.  The curves sit in the pointwise order
|x| <= phi1 <= ... <= phi6 and collapse onto |x| as mu shrinks.
"""

import argparse
import sys
from pathlib import Path

REPO = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(REPO / "src"))

from smoothbilevel import plot_smoothers  # noqa: E402


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--mu", type=float, default=0.25, help="smoothing scale")
    parser.add_argument("--p", type=float, default=0.5, help="power for the second file")
    parser.add_argument("--out", default="curves", help="output directory")
    parser.add_argument("--render", action="store_true", help="also write PNGs")
    args = parser.parse_args(argv)

    for path in plot_smoothers(args.mu, args.p, args.out, render=args.render):
        print(f"wrote {path}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
