"""Run the packaged acceptance scenarios and print one line per criterion."""
import argparse
import sys
from pathlib import Path

from nullctrl import cli_harness as ch


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="acceptance-out")
    ap.add_argument("--jobs", type=int, default=4)
    args = ap.parse_args()
    report = ch.run_config(ch.load_config(ch.packaged_config()), Path(args.out), jobs=args.jobs,
                           stream=sys.stdout)
    n_ok = sum(s["passed"] for s in report["scenarios"])
    print(f"{n_ok}/{len(report['scenarios'])} scenarios passed; report in {args.out}/report.json")
    return 0 if report["passed"] else 1


if __name__ == "__main__":
    sys.exit(main())
