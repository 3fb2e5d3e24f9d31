"""Print one pass/fail line per acceptance criterion."""

import argparse
import sys

from typlab import suite


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=suite.DEFAULT_SEED)
    ap.add_argument("--quick", action="store_true", help="reduced sample counts")
    ap.add_argument("--only", default="", help="comma-separated criterion numbers")
    args = ap.parse_args()
    only = [int(k) for k in args.only.split(",") if k.strip()]
    results = suite.run_suite(args.seed, args.quick, only)
    for r in results:
        print(r.line(), flush=True)
    return 0 if all(r.passed for r in results) else 1


if __name__ == "__main__":
    sys.exit(main())
