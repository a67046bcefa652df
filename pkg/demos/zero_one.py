"""Asymptotic truth values of first-order sentences with chosen active atoms."""

from randworlds.canonical import AtomicDescription
from randworlds.inference import compute01
from randworlds.syntax import Vocabulary, parse

vocab = Vocabulary(["P", "Q"], ["c"])
# atoms: 0 = ~P&~Q, 1 = P&~Q, 2 = ~P&Q, 3 = P&Q
sentences = [
    "exists x. P(x)",
    "forall x. (P(x) -> Q(x))",
    "exists x. (P(x) and not x = c)",
    "forall x. forall y. (x = y)",
]
settings = [({0, 1, 2, 3}, 3), ({0, 2, 3}, 3), ({0, 2}, 2)]

for active, home in settings:
    named = AtomicDescription((("c",),), (home,))
    print(f"active atoms {sorted(active)}, c in atom {home}")
    for text in sentences:
        print(f"  {compute01(parse(text, vocab), active, named, vocab)}  {text}")
