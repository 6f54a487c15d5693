#!/usr/bin/env python3
"""Converts an ECQA dump to the engine's JSONL schema.

Input: JSONL with fields q_no (or id), q_text, q_op1..q_op5, q_ans, and
taskA_pos (the positive-properties explanation). Choices become one
"A) ... B) ..." line and the gold answer maps to its letter.

Usage: convert_ecqa.py INPUT OUTPUT
"""

import json
import string
import sys


def main():
    if len(sys.argv) != 3:
        sys.exit(__doc__)
    n = 0
    with open(sys.argv[1], encoding="utf-8") as f, open(sys.argv[2], "w", encoding="utf-8") as out:
        for line in f:
            if not line.strip():
                continue
            row = json.loads(line)
            options = [row[f"q_op{i}"] for i in range(1, 6)]
            answer = row["q_ans"]
            if answer not in options:
                raise SystemExit(f"record {row.get('q_no')}: answer {answer!r} not among the options")
            letter = string.ascii_lowercase[options.index(answer)]
            choices = " ".join(f"{string.ascii_uppercase[i]}) {opt}" for i, opt in enumerate(options))
            rec = {
                "id": str(row.get("q_no") or row.get("id") or f"ecqa-{n}"),
                "question": row["q_text"],
                "choices": choices,
                "label": letter,
            }
            explanation = (row.get("taskA_pos") or "").strip()
            if explanation:
                rec["explanation"] = explanation
            out.write(json.dumps(rec, ensure_ascii=False) + "\n")
            n += 1
    print(f"wrote {n} records to {sys.argv[2]}")


if __name__ == "__main__":
    main()
