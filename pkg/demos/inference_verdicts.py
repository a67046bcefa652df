"""Limit degrees of belief for the bundled default-reasoning KBs."""

import json

from randworlds.cli import BUNDLED_CORPUS, read_kb
from randworlds.inference import compute_pr_inf
from randworlds.syntax import parse

for path in sorted(BUNDLED_CORPUS.glob("*.json")):
    case = json.loads(path.read_text())
    vocab, kb = read_kb(BUNDLED_CORPUS / case["kb"])
    belief = compute_pr_inf(parse(case["query"], vocab), kb, vocab)
    print(f"{case['name']:16s} {case['query']:28s} {belief}")
