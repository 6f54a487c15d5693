#!/usr/bin/env python3
"""Regenerates the bundled offline demo under data/demo/: a tiny synthetic
binary task plus a scripted mock-backend file that covers every method
(sampling completions, per-explanation class probabilities, scorer odds,
greedy answers, and a mining fallback).
"""

import json
import pathlib
import re

ROOT = pathlib.Path(__file__).resolve().parents[1]
OUT = ROOT / "data" / "demo"

TRAIN = [
    {"id": f"train{i}",
     "question": f"training probe {i}",
     "label": "yes" if i % 2 else "no",
     "explanation": f"training rationale {i}"}
    for i in range(6)
]

EASY_QUESTIONS = [
    ("e0", "Do kettles heat water?", "yes"),
    ("e1", "Can a goldfish file taxes?", "no"),
    ("e2", "Do bicycles have wheels?", "yes"),
    ("e3", "Is the moon made of cheddar?", "no"),
    ("e4", "Can scissors cut paper?", "yes"),
]
SOFTFIX_QUESTIONS = [
    ("s0", "Would a marble sink in honey?", "yes"),
    ("s1", "Could a parrot outlive a mayfly?", "yes"),
]
WEIGHTFIX_QUESTIONS = [
    ("w0", "Would a feather fall slower than a brick on the moon?", "no"),
]
HOPELESS_QUESTIONS = [("h0", "Is every prime number even?", "no")]


def batch(inst_id, gold, spec):
    """spec rows: (count, correct?, p_correct, weight)."""
    wrong = "no" if gold == "yes" else "yes"
    candidates = []
    for tag, (count, correct, p_correct, weight) in spec.items():
        for j in range(count):
            label = gold if correct else wrong
            p_yes = p_correct if gold == "yes" else 1.0 - p_correct
            if not correct:
                p_yes = 1.0 - p_yes
            candidates.append({
                "explanation": f"demo reasoning {inst_id} {tag}{j}",
                "label": label,
                "p_yes": round(p_yes, 6),
                "weight": weight,
            })
    return candidates


def instances():
    out = []
    for inst_id, question, gold in EASY_QUESTIONS:
        out.append({"id": inst_id, "question": question, "gold": gold,
                    "candidates": batch(inst_id, gold, {"r": (7, True, 0.9, 0.8), "w": (2, False, 0.8, 0.2)})})
    for inst_id, question, gold in SOFTFIX_QUESTIONS:
        out.append({"id": inst_id, "question": question, "gold": gold,
                    "candidates": batch(inst_id, gold, {"w": (5, False, 0.35, 0.5), "r": (4, True, 0.7, 0.5)})})
    for inst_id, question, gold in WEIGHTFIX_QUESTIONS:
        out.append({"id": inst_id, "question": question, "gold": gold,
                    "candidates": batch(inst_id, gold, {"w": (5, False, 0.75, 0.25), "r": (4, True, 0.75, 0.85)})})
    for inst_id, question, gold in HOPELESS_QUESTIONS:
        out.append({"id": inst_id, "question": question, "gold": gold,
                    "candidates": batch(inst_id, gold, {"w": (9, False, 0.9, 0.5)})})
    return out


def rules(insts):
    out = []
    verb = {"yes": "Yes", "no": "No"}
    for inst in insts:
        for c in inst["candidates"]:
            out.append({
                "name": f"score-{inst['id']}",
                "match_substring": "good one",
                "match_regex": f"Explanation: {re.escape(c['explanation'])}\nAnswer:$",
                "distributions": [{"Yes": c["weight"], "No": round(1 - c["weight"], 6)}],
                "cycle": True,
            })
    for inst in insts:
        for c in inst["candidates"]:
            out.append({
                "name": f"soft-{inst['id']}",
                "match_regex": f"{re.escape(c['explanation'])}\nAnswer:$",
                "distributions": [{"Yes": c["p_yes"], "No": round(1 - c["p_yes"], 6)}],
                "cycle": True,
            })
    for inst in insts:
        out.append({
            "name": f"sample-{inst['id']}",
            "match_regex": f"Question: {re.escape(inst['question'])}\nExplanation:$",
            "completions": [f" {c['explanation']}\nAnswer: {verb[c['label']]}" for c in inst["candidates"]],
        })
    # Greedy answer for ICL and answer-first prompts: correct on the easy
    # questions, wrong on the rest.
    for inst in insts:
        easy = inst["id"].startswith("e")
        answer = inst["gold"] if easy else ("no" if inst["gold"] == "yes" else "yes")
        out.append({
            "name": f"greedy-{inst['id']}",
            "match_regex": f"Question: {re.escape(inst['question'])}\nAnswer:$",
            "completions": [f" {verb[answer]}\nExplanation: quick take on {inst['id']}"],
            "cycle": True,
        })
    out.append({
        "name": "mining-fallback",
        "match_regex": "\nExplanation:$",
        "completions": [" mined filler reasoning\nAnswer: Yes"],
        "cycle": True,
    })
    out.append({"name": "logprob-fallback", "distributions": [{"Yes": 0.5, "No": 0.5}], "cycle": True})
    return out


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    insts = instances()

    with open(OUT / "train.jsonl", "w") as f:
        for rec in TRAIN:
            f.write(json.dumps(rec) + "\n")
    with open(OUT / "test.jsonl", "w") as f:
        for inst in insts:
            f.write(json.dumps({"id": inst["id"], "question": inst["question"], "label": inst["gold"]}) + "\n")
    with open(OUT / "mock_script.json", "w") as f:
        json.dump({"model": "scripted", "rules": rules(insts)}, f, indent=2)
        f.write("\n")
    with open(OUT / "run.cfg", "w") as f:
        f.write("""# Offline demo configuration; run from the repository root:
#   ease run --config data/demo/run.cfg
task=demo
train=data/demo/train.jsonl
test=data/demo/test.jsonl
templates=templates
backend=mock
mock-script=data/demo/mock_script.json
out=runs/demo
cache-dir=runs/demo/cache
k=6
n=9
splits=1
split-size=9
seed=13
k-exemplars=2
""")
    print(f"wrote demo world to {OUT}")


if __name__ == "__main__":
    main()
