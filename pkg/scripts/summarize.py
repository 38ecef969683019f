"""Collect the summary.json files under a results directory into one table.

    python scripts/summarize.py results [--markdown]
"""

import argparse
import json
from pathlib import Path


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("results", type=Path)
    ap.add_argument("--markdown", action="store_true")
    args = ap.parse_args()
    rows = []
    for path in sorted(args.results.glob("*/summary.json")):
        summary = json.loads(path.read_text())
        for c in summary["checks"]:
            rows.append((summary["scenario"], c["id"], c["measured"], c["bound"], "PASS" if c["pass"] else "FAIL"))
    if args.markdown:
        print("| scenario | check | measured | bound | result |")
        print("|---|---|---|---|---|")
        for r in rows:
            print("| " + " | ".join(f"{v:.6g}" if isinstance(v, float) else str(v) for v in r) + " |")
        return
    for s, cid, m, b, ok in rows:
        m = f"{m:.6g}" if isinstance(m, float) else str(m)
        print(f"{ok:4}  {s:20} {cid:28} {m:>14}  {b}")


if __name__ == "__main__":
    main()
