#!/usr/bin/env python3
"""Builds tests/fixtures/analytics/: an evaluation export, impact rows and
expected.json with the report values computed by numpy/scipy. Re-run only
when the fixture must change:

    python3 tests/oracle/make_analytics_fixture.py
"""
import json
import os
import random

import numpy as np
from scipy.stats import fisher_exact

ROOT = os.path.dirname(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))
OUT = os.path.join(ROOT, "tests", "fixtures", "analytics")

rng = random.Random(7)
REASONS = ["incorrect", "trivial", "valuable_tip_reviewer", "valuable_tip_development", "not_sure", "seen_no_reason"]
TEXTS = [
    "Check the return value of fopen before using the handle.",
    "Rename tmp to something that says what it holds.",
    "This loop reads one element past the end of the buffer.",
    "Consider extracting this block into a helper function.",
    "The lock is not released on the early return path.",
    "Use a constant instead of the magic number 42.",
]

comments = []
cid = 0
for p in range(14):
    approach = "code" if p % 2 == 0 else "example"
    created = 1_700_000_000_000 + p * 3_600_000
    for j in range(rng.randint(1, 5)):
        cid += 1
        com = rng.choice(TEXTS)
        c = {"id": str(cid), "patch_id": f"D{100 + p}", "approach": approach, "com": com,
             "line": rng.randint(1, 80), "file": rng.choice(["src/a.c", "src/b.py"]), "created_at": created,
             "opened_at": None, "evaluated_at": None, "decision": None, "reason": None, "published_text": None}
        roll = rng.random()
        if roll < 0.15:
            comments.append(c)
            continue  # never opened
        opened = created + rng.randint(1_000, 600_000)
        c["opened_at"] = opened
        if roll < 0.25:
            comments.append(c)
            continue  # seen, never evaluated
        c["evaluated_at"] = opened + rng.randint(500, 120_000)
        if rng.random() < (0.5 if approach == "code" else 0.3):
            c["decision"] = "accept"
            edit = rng.randrange(4)
            c["published_text"] = [com, com[: len(com) // 2],
                                   com + " See the style guide.", "Please fix this."][edit]
        else:
            c["decision"] = "ignore"
            c["reason"] = rng.choice(REASONS)
        comments.append(c)

with open(os.path.join(OUT, "export.jsonl"), "w") as f:
    for c in comments:
        f.write(json.dumps(c) + "\n")

impact = []
for group, n, p_line, p_chunk, p_thread in [("generated", 30, 0.6, 0.75, 0.2), ("human", 60, 0.65, 0.7, 0.4)]:
    for i in range(n):
        file, line = f"src/{group}.c", i + 1
        rl = [[file, line]] if rng.random() < p_line else []
        rc = [[file, line]] if (rl or rng.random() < (p_chunk - p_line) / (1 - p_line)) else []
        rc += [[file, line + 1]]
        impact.append({"group": group, "file": file, "line": line, "revised_lines": rl,
                       "revised_chunk_lines": rc, "replies": rng.choice([0, 0, 1, 2]) if rng.random() < p_thread else 0})
with open(os.path.join(OUT, "impact.jsonl"), "w") as f:
    for o in impact:
        f.write(json.dumps(o) + "\n")


def counts(cs):
    out = dict(accepted=0, valuable_tip=0, other_rejected=0, not_sure=0, seen_only=0)
    for c in cs:
        if c["decision"] is None:
            out["seen_only"] += c["opened_at"] is not None
        elif c["decision"] == "accept":
            out["accepted"] += 1
        elif c["reason"].startswith("valuable_tip"):
            out["valuable_tip"] += 1
        elif c["reason"] == "not_sure":
            out["not_sure"] += 1
        elif c["reason"] == "seen_no_reason":
            out["seen_only"] += 1
        else:
            out["other_rejected"] += 1
    out["evaluated"] = out["accepted"] + out["valuable_tip"] + out["other_rejected"] + out["seen_only"]
    return out


def classify(g, p):
    g, p = g.rstrip(), p.rstrip()
    if g == p:
        return "as-is"
    if len(p) < len(g) and p in g:
        return "shorten"
    if len(g) < len(p) and g in p:
        return "extended"
    return "other"


def fisher(lh, ln, rh, rn):
    t = [[lh, ln - lh], [rh, rn - rh]]
    one = "less" if lh / ln < rh / rn else "greater"
    return fisher_exact(t)[1], fisher_exact(t, alternative=one)[1]


def durations(xs):
    if not xs:
        return None
    return {"n": len(xs), "median_s": float(np.quantile(xs, 0.5)), "low_s": float(np.quantile(xs, 0.025)),
            "high_s": float(np.quantile(xs, 0.975))}


code = counts([c for c in comments if c["approach"] == "code"])
example = counts([c for c in comments if c["approach"] == "example"])
expected = {"ratios": {"code": code, "example": example, "total": counts(comments)}, "comparisons": {}}
for what, key in [("acceptance", lambda x: x["accepted"]), ("appreciation", lambda x: x["accepted"] + x["valuable_tip"])]:
    expected["comparisons"][what] = fisher(key(code), code["evaluated"], key(example), example["evaluated"])
edits = {"as-is": 0, "shorten": 0, "extended": 0, "other": 0}
for c in comments:
    if c["decision"] == "accept":
        edits[classify(c["com"], c["published_text"])] += 1
expected["edits"] = edits
acc, oth, per_patch = [], [], {}
for c in comments:
    if c["decision"] and c["opened_at"] is not None:
        s = (c["evaluated_at"] - c["opened_at"]) / 1000.0
        (acc if c["decision"] == "accept" else oth).append(s)
        per_patch[c["patch_id"]] = per_patch.get(c["patch_id"], 0.0) + s
expected["durations"] = {"accepted": durations(acc), "others": durations(oth),
                         "per_patch": durations(list(per_patch.values()))}
groups = {}
for o in impact:
    key = (o["file"], o["line"])
    line = [o["file"], o["line"]] in o["revised_lines"]
    chunk = line or [o["file"], o["line"]] in o["revised_chunk_lines"]
    g = groups.setdefault(o["group"], {"n": 0, "revised_line": 0, "revised_chunk": 0, "thread": 0})
    g["n"] += 1
    g["revised_line"] += line
    g["revised_chunk"] += chunk
    g["thread"] += o["replies"] > 0
expected["impact"] = groups
gen, hum = groups["generated"], groups["human"]
for what in ["revised_line", "revised_chunk", "thread"]:
    expected["comparisons"][what.replace("_", " ")] = fisher(gen[what], gen["n"], hum[what], hum["n"])

with open(os.path.join(OUT, "expected.json"), "w") as f:
    json.dump(expected, f, indent=2, sort_keys=True)
    f.write("\n")
