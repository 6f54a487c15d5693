#!/usr/bin/env python3
"""Converts a StrategyQA dump to the engine's JSONL schema.

Two input shapes are recognized:
  * the BIG-bench question-only task.json ({"examples": [{"input": ...,
    "target_scores": {"Yes": 1, "No": 0}}]}) — no explanations;
  * the original release's train.json (a JSON array of {"qid", "question",
    "answer": bool, "facts": [...]}) — facts join into the explanation.

Usage: convert_strategyqa.py INPUT OUTPUT
"""

import json
import sys


def records(data):
    if isinstance(data, dict) and "examples" in data:
        for i, ex in enumerate(data["examples"]):
            label = "true" if ex["target_scores"].get("Yes", 0) >= 1 else "false"
            yield {"id": f"sqa-{i}", "question": ex["input"].strip(), "label": label}
        return
    for i, row in enumerate(data):
        rec = {
            "id": str(row.get("qid") or f"sqa-{i}"),
            "question": row["question"].strip(),
            "label": "true" if row["answer"] else "false",
        }
        facts = [f.strip() for f in row.get("facts", []) if f.strip()]
        if facts:
            rec["explanation"] = " ".join(facts)
        yield rec


def main():
    if len(sys.argv) != 3:
        sys.exit(__doc__)
    with open(sys.argv[1], encoding="utf-8") as f:
        data = json.load(f)
    n = 0
    with open(sys.argv[2], "w", encoding="utf-8") as out:
        for rec in records(data):
            out.write(json.dumps(rec, ensure_ascii=False) + "\n")
            n += 1
    print(f"wrote {n} records to {sys.argv[2]}")


if __name__ == "__main__":
    main()
