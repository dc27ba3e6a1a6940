"""Full 64 B to 8 KiB sweep of every bundled benchmark in both hierarchies.

Writes sweep.csv, sweep.txt (table) and claims.txt into the output directory.
"""

import argparse
import sys
from pathlib import Path

from spmwcet.experiment import BENCHMARKS, check_claims, report, run_benchmark


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("outdir", nargs="?", default="results")
    ap.add_argument("--jobs", type=int, default=1)
    args = ap.parse_args(argv)
    out = Path(args.outdir)
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    for name in BENCHMARKS:
        rows += run_benchmark(name, jobs=args.jobs)
    (out / "sweep.csv").write_text(report(rows, "csv"))
    (out / "sweep.txt").write_text(report(rows, "table"))
    claims = check_claims(rows)
    text = "".join(c.line() + "\n" for c in claims)
    (out / "claims.txt").write_text(text)
    sys.stdout.write(text)
    return 0 if all(c.passed for c in claims) else 1


if __name__ == "__main__":
    sys.exit(main())
