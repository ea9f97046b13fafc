#!/usr/bin/env python3
"""Write the built-in evaluation suite to a directory, or verify that the
committed files still match what the corpus builder produces.

    python scripts/build_cases.py --out cases
    python scripts/build_cases.py --out cases --check
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from reportloom.evaluation import build_suite, case_to_payload, save_case, verify_case


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="cases", help="case directory")
    parser.add_argument(
        "--check",
        action="store_true",
        help="compare against existing files instead of writing",
    )
    args = parser.parse_args(argv)
    out = Path(args.out)

    cases = build_suite()
    bad = 0
    for case in cases:
        for problem in verify_case(case):
            print(f"INVALID {case.id}: {problem}", file=sys.stderr)
            bad += 1
    if bad:
        return 1

    if args.check:
        drifted = []
        for case in cases:
            path = out / f"{case.id}.json"
            expected = json.dumps(case_to_payload(case), indent=2, sort_keys=True) + "\n"
            if not path.exists() or path.read_text() != expected:
                drifted.append(case.id)
        if drifted:
            print(f"drifted: {', '.join(drifted)}", file=sys.stderr)
            print("rerun without --check to rewrite", file=sys.stderr)
            return 1
        print(f"{len(cases)} cases match {out}/")
        return 0

    out.mkdir(parents=True, exist_ok=True)
    for case in cases:
        save_case(case, out)
    print(f"wrote {len(cases)} cases to {out}/")
    return 0


if __name__ == "__main__":
    sys.exit(main())
