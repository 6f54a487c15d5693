#!/usr/bin/env python3
"""Regenerates the golden prompt files under tests/golden/.

Independent reimplementation of the rendering contract (template sections,
{placeholder} substitution, splitmix64 Fisher-Yates shuffle, blank-line block
assembly). The C++ renderer must byte-match these outputs; keep the two in
sync on purpose, not by copying code.
"""

import pathlib

M64 = (1 << 64) - 1
ROOT = pathlib.Path(__file__).resolve().parents[2]
TEMPLATES = ROOT / "templates"
OUT = ROOT / "tests" / "golden"


def splitmix_seq(seed):
    state = seed

    def nxt():
        nonlocal state
        state = (state + 0x9E3779B97F4A7C15) & M64
        z = state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & M64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & M64
        return z ^ (z >> 31)

    return nxt


def shuffle(items, seed):
    items = list(items)
    nxt = splitmix_seq(seed)
    for i in range(len(items), 1, -1):
        j = nxt() % i
        items[i - 1], items[j] = items[j], items[i - 1]
    return items


def parse_template(path):
    text = path.read_text()
    assert text.startswith("[instruction]\n"), path
    body = text[len("[instruction]\n"):]
    instr, _, rest = body.partition("\n[demo]\n")
    demo, _, query = rest.partition("\n[query]\n")
    if query.endswith("\n"):
        query = query[:-1]
    return instr, demo, query


def substitute(block, fields):
    out = []
    i = 0
    while i < len(block):
        c = block[i]
        if c != "{":
            out.append(c)
            i += 1
            continue
        j = i + 1
        while j < len(block) and (block[j].isalnum() or block[j] == "_"):
            j += 1
        if j == i + 1 or j >= len(block) or block[j] != "}":
            out.append(c)
            i += 1
            continue
        name = block[i + 1:j]
        out.append(fields[name])
        i = j + 1
    return "".join(out)


def render(tpl_path, demo_fields, query_fields, seed):
    instr_b, demo_b, query_b = parse_template(tpl_path)
    demos = shuffle(demo_fields, seed)
    parts = [substitute(instr_b, query_fields)]
    parts += [substitute(demo_b, f) for f in demos]
    parts.append(substitute(query_b, query_fields))
    return "\n\n".join(parts)


SEED = 11

ESNLI_D1 = {
    "premise": "A woman is playing a violin on stage.",
    "hypothesis": "A musician is performing.",
    "explanation": "Playing a violin on stage means performing music.",
    "answer": "Yes",
    "answer_choices": "Yes, Maybe, and No",
}
ESNLI_D2 = {
    "premise": "Two boys are kicking a ball in the yard.",
    "hypothesis": "The boys are sleeping indoors.",
    "explanation": "Kicking a ball outside cannot happen while sleeping indoors.",
    "answer": "No",
    "answer_choices": "Yes, Maybe, and No",
}
ESNLI_Q = {
    "premise": "A chef is chopping onions in a kitchen.",
    "hypothesis": "Someone is preparing food.",
    "answer_choices": "Yes, Maybe, and No",
}

MCQ_D1 = {
    "question": "What do bees collect from flowers?",
    "choices": "A) nectar B) rocks C) glass D) sand E) metal",
    "explanation": "Bees gather nectar to make honey.",
    "answer": "A",
    "answer_choices": "A, B, C, D, and E",
}
MCQ_D2 = {
    "question": "Which item conducts electricity?",
    "choices": "A) wood B) rubber C) copper D) cloth E) paper",
    "explanation": "Copper is a metal and metals conduct electricity.",
    "answer": "C",
    "answer_choices": "A, B, C, D, and E",
}
MCQ_Q = {
    "question": "What melts when heated?",
    "choices": "A) ice B) stone C) iron ore D) sand E) salt",
    "answer_choices": "A, B, C, D, and E",
}

SQA_D1 = {
    "question": "Can a person walk from Paris to London?",
    "explanation": "The English Channel separates France from England and cannot be crossed on foot.",
    "answer": "False",
    "answer_choices": "True or False",
}
SQA_D2 = {
    "question": "Do penguins live in the Southern Hemisphere?",
    "explanation": "Penguins are native to Antarctica and nearby southern regions.",
    "answer": "True",
    "answer_choices": "True or False",
}
SQA_Q = {"question": "Could a violin fit inside a backpack?", "answer_choices": "True or False"}


def score_fields(base, explanation, answer):
    f = dict(base)
    f["explanation"] = explanation
    f["answer"] = answer
    return f


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    cases = {}

    for mode in ["icl", "pe", "ep"]:
        cases[f"esnli_{mode}"] = render(TEMPLATES / "esnli" / f"{mode}.txt", [ESNLI_D1, ESNLI_D2], ESNLI_Q, SEED)
        cases[f"anli_{mode}"] = render(TEMPLATES / "anli" / f"{mode}.txt", [ESNLI_D1, ESNLI_D2], ESNLI_Q, SEED)
        cases[f"mcq_{mode}"] = render(TEMPLATES / "multi_choice" / f"{mode}.txt", [MCQ_D1, MCQ_D2], MCQ_Q, SEED)
        cases[f"strategyqa_{mode}"] = render(TEMPLATES / "strategyqa" / f"{mode}.txt", [SQA_D1, SQA_D2], SQA_Q, SEED)

    for variant in ["format2", "format3"]:
        cases[f"esnli_ep_{variant}"] = render(TEMPLATES / "esnli" / f"ep_{variant}.txt", [ESNLI_D1, ESNLI_D2],
                                              ESNLI_Q, SEED)
        cases[f"strategyqa_ep_{variant}"] = render(TEMPLATES / "strategyqa" / f"ep_{variant}.txt",
                                                   [SQA_D1, SQA_D2], SQA_Q, SEED)

    cases["esnli_ep_zero_demo"] = render(TEMPLATES / "esnli" / "ep.txt", [], ESNLI_Q, SEED)

    # Scoring prompts: one positive + one negative demo, query explanation open.
    esnli_score_q = dict(ESNLI_Q)
    esnli_score_q["explanation"] = "Chopping onions is a step in preparing food."
    cases["esnli_score"] = render(
        TEMPLATES / "esnli" / "score.txt",
        [score_fields(ESNLI_D1, ESNLI_D1["explanation"], "Yes"),
         score_fields(ESNLI_D2, "The boys like games.", "No")],
        esnli_score_q, SEED)
    cases["esnli_score_zeroshot"] = render(TEMPLATES / "esnli" / "score.txt", [], esnli_score_q, SEED)
    anli_score_q = esnli_score_q
    cases["anli_score"] = render(
        TEMPLATES / "anli" / "score.txt",
        [score_fields(ESNLI_D1, ESNLI_D1["explanation"], "Yes"),
         score_fields(ESNLI_D2, "The boys like games.", "No")],
        anli_score_q, SEED)
    mcq_score_q = dict(MCQ_Q)
    mcq_score_q["explanation"] = "Ice turns to water when it warms up."
    cases["mcq_score"] = render(
        TEMPLATES / "multi_choice" / "score.txt",
        [score_fields(MCQ_D1, MCQ_D1["explanation"], "Yes"),
         score_fields(MCQ_D2, "Metal is shiny.", "No")],
        mcq_score_q, SEED)
    sqa_score_q = dict(SQA_Q)
    sqa_score_q["explanation"] = "A violin is small enough to fit in a large backpack."
    cases["strategyqa_score"] = render(
        TEMPLATES / "strategyqa" / "score.txt",
        [score_fields(SQA_D1, SQA_D1["explanation"], "Yes"),
         score_fields(SQA_D2, "Penguins are birds.", "No")],
        sqa_score_q, SEED)

    # Class-probability query: EP prompt with the explanation filled in and
    # the answer slot open.
    ep_q = dict(ESNLI_Q)
    ep_q["explanation"] = "Chopping onions is a step in preparing food."
    instr, demo, query = parse_template(TEMPLATES / "esnli" / "ep.txt")
    soft = render(TEMPLATES / "esnli" / "ep.txt", [ESNLI_D1, ESNLI_D2], ESNLI_Q, SEED)
    cases["esnli_soft_eval"] = soft + " " + ep_q["explanation"] + "\nAnswer:"

    for name, text in sorted(cases.items()):
        (OUT / f"{name}.txt").write_text(text)
    print(f"wrote {len(cases)} golden files to {OUT}")


if __name__ == "__main__":
    main()
