#!/usr/bin/env python3
"""Converts an OpenBookQA dump to the engine's JSONL schema.

Input: the official JSONL ({"id", "question": {"stem", "choices": [{"text",
"label"}]}, "answerKey", optional "fact1"}) or the flattened Hugging Face
export ({"id", "question_stem", "choices": {"text": [...], "label": [...]},
"answerKey", "fact1"}). The dataset ships no explanations, so the question's
science fact serves as the proxy explanation when present.

Usage: convert_openbookqa.py INPUT OUTPUT
"""

import json
import string
import sys


def parse(row):
    if isinstance(row.get("question"), dict):
        stem = row["question"]["stem"]
        texts = [c["text"] for c in row["question"]["choices"]]
        labels = [c["label"] for c in row["question"]["choices"]]
    else:
        stem = row["question_stem"]
        texts = row["choices"]["text"]
        labels = row["choices"]["label"]
    return stem, texts, labels


def main():
    if len(sys.argv) != 3:
        sys.exit(__doc__)
    n = 0
    with open(sys.argv[1], encoding="utf-8") as f, open(sys.argv[2], "w", encoding="utf-8") as out:
        for line in f:
            if not line.strip():
                continue
            row = json.loads(line)
            stem, texts, labels = parse(row)
            answer = row["answerKey"]
            if answer not in labels:
                raise SystemExit(f"record {row.get('id')}: answerKey {answer!r} not among choice labels")
            choices = " ".join(
                f"{string.ascii_uppercase[i]}) {text}" for i, text in enumerate(texts))
            rec = {
                "id": str(row.get("id") or f"obqa-{n}"),
                "question": stem,
                "choices": choices,
                "label": string.ascii_lowercase[labels.index(answer)],
            }
            fact = (row.get("fact1") or "").strip()
            if fact:
                rec["explanation"] = fact
            out.write(json.dumps(rec, ensure_ascii=False) + "\n")
            n += 1
    print(f"wrote {n} records to {sys.argv[2]}")


if __name__ == "__main__":
    main()
