#!/usr/bin/env python3
"""Desk-scale yearly benchmark: heteroscedastic non-seasonal fits.

Usage:
    python scripts/run_yearly_benchmark.py path/to/yearly.json out_dir [workers]

The input collection uses the formats described in the README (CSV header
``id,category,m,h,values`` or the JSON array equivalent).  Prints the
summary table and leaves records plus reports in ``out_dir``.
"""

import sys
from pathlib import Path

from lsgt.harness import RunConfig, run_benchmark


def main() -> int:
    if len(sys.argv) < 3:
        print(__doc__)
        return 2
    input_path, out_dir = sys.argv[1], sys.argv[2]
    workers = int(sys.argv[3]) if len(sys.argv) > 3 else 1
    summary = run_benchmark(RunConfig(
        input_path=input_path,
        out_dir=out_dir,
        model_kind="non_seasonal",
        variance_mode="heteroscedastic",
        iterations=5000,
        burn_in=2500,
        chains=2,
        seed=0,
        workers=workers,
    ))
    print((Path(out_dir) / "summary.md").read_text())
    print(f"{summary.n_series - len(summary.errors)}/{summary.n_series} series evaluated")
    return 0


if __name__ == "__main__":
    sys.exit(main())
