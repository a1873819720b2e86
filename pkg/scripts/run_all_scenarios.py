#!/usr/bin/env python3
"""Run every bundled scenario and summarize the verdicts.

Usage: python scripts/run_all_scenarios.py [OUTDIR]
"""

import sys
from pathlib import Path

from dflab.cli import bundled_scenarios, load_config, run_scenario


def main() -> int:
    out_root = Path(sys.argv[1]) if len(sys.argv) > 1 else Path("dflab_out")
    worst = 0
    for name in bundled_scenarios():
        config = load_config(name)
        report, code = run_scenario(config, out_root / name)
        wall = sum(report["timing"]["wall_times"])
        status = "pass" if code == 0 else "FAIL"
        print(f"{name:32s} {status}  ({len(report['tasks'])} tasks, {wall:.2f}s)")
        worst = max(worst, code)
    return worst


if __name__ == "__main__":
    sys.exit(main())
