#!/usr/bin/env python3
"""Converts an e-SNLI dump to the engine's JSONL schema.

Accepts either the original CSV release (columns Sentence1, Sentence2,
gold_label, Explanation_1) or a Hugging Face JSONL export (fields premise,
hypothesis, label as 0/1/2, explanation_1).

Usage: convert_esnli.py INPUT OUTPUT
"""

import csv
import json
import sys

LABELS_BY_INT = {0: "entail", 1: "neutral", 2: "contradict"}
LABELS_BY_NAME = {"entailment": "entail", "neutral": "neutral", "contradiction": "contradict"}


def rows_from_csv(path):
    with open(path, newline="", encoding="utf-8") as f:
        for row in csv.DictReader(f):
            yield {
                "premise": row["Sentence1"],
                "hypothesis": row["Sentence2"],
                "label": LABELS_BY_NAME[row["gold_label"].strip()],
                "explanation": row.get("Explanation_1", "").strip(),
            }


def rows_from_jsonl(path):
    with open(path, encoding="utf-8") as f:
        for line in f:
            if not line.strip():
                continue
            row = json.loads(line)
            label = row["label"]
            yield {
                "premise": row["premise"],
                "hypothesis": row["hypothesis"],
                "label": LABELS_BY_INT[label] if isinstance(label, int) else LABELS_BY_NAME[label],
                "explanation": (row.get("explanation_1") or "").strip(),
            }


def main():
    if len(sys.argv) != 3:
        sys.exit(__doc__)
    src, dst = sys.argv[1], sys.argv[2]
    rows = rows_from_csv(src) if src.endswith(".csv") else rows_from_jsonl(src)
    n = 0
    with open(dst, "w", encoding="utf-8") as out:
        for i, row in enumerate(rows):
            rec = {"id": f"esnli-{i}", **row}
            if not rec["explanation"]:
                del rec["explanation"]
            out.write(json.dumps(rec, ensure_ascii=False) + "\n")
            n += 1
    print(f"wrote {n} records to {dst}")


if __name__ == "__main__":
    main()
