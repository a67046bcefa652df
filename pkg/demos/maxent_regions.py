"""Canonical disjuncts of a KB and the entropy maximizer of each region."""

from randworlds.canonical import atom_label, canonicalize
from randworlds.maxent import InfeasibleRegion, limit_maxent
from randworlds.syntax import Vocabulary, parse

vocab = Vocabulary(["P"], ["c"])
kb = parse("[P(x)]_x ~(1) 3/10 or [P(x)]_x ~(1) 6/10", vocab)
cf = canonicalize(kb, vocab)

for i, d in enumerate(cf.disjuncts):
    print(f"disjunct {i}: {d.description.describe(vocab)}")
    for c in d.region.constraints:
        print("   ", c.render(vocab))
    try:
        lim = limit_maxent(d.region)
    except InfeasibleRegion:
        print("    infeasible")
        continue
    point = ", ".join(f"{atom_label(vocab, a)}={x:.4f}" for a, x in enumerate(lim.point))
    print(f"    H={lim.value:.6f}  at {point}  agreement={lim.agreement}")
