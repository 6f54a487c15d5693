#!/usr/bin/env python3
"""Converts an ANLI round file (R1/R2/R3 train/dev/test JSONL from the
official release) to the engine's JSONL schema.

Input fields: uid, context, hypothesis, label in {e, n, c}, reason.
The engine's loader applies the annotation-phrase filter itself, so this
converter keeps every record.

Usage: convert_anli.py INPUT OUTPUT
"""

import json
import sys

LABELS = {"e": "entail", "n": "neutral", "c": "contradict"}


def main():
    if len(sys.argv) != 3:
        sys.exit(__doc__)
    n = 0
    with open(sys.argv[1], encoding="utf-8") as f, open(sys.argv[2], "w", encoding="utf-8") as out:
        for line in f:
            if not line.strip():
                continue
            row = json.loads(line)
            rec = {
                "id": row.get("uid") or f"anli-{n}",
                "premise": row["context"],
                "hypothesis": row["hypothesis"],
                "label": LABELS[row["label"]],
            }
            reason = (row.get("reason") or "").strip()
            if reason:
                rec["explanation"] = reason
            out.write(json.dumps(rec, ensure_ascii=False) + "\n")
            n += 1
    print(f"wrote {n} records to {sys.argv[2]}")


if __name__ == "__main__":
    main()
