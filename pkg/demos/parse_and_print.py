"""Parse a few statements, then show their canonical text, NNF and rank."""

from randworlds.syntax import Vocabulary, parse, quantifier_rank, to_nnf, to_text, validate

vocab = Vocabulary(["Bird", "Penguin", "Fly"], ["opus"])

texts = [
    "forall x. (Penguin(x) -> Bird(x))",
    "[Fly(x) || Bird(x)]_x ~(1) 9/10",
    "not forall x. (Bird(x) -> Fly(x))",
    "[Fly(x) || Penguin(x)]_x <~(2) 0 and Penguin(opus)",
]

for text in texts:
    f = parse(text, vocab)
    print(text)
    print("  printed :", to_text(f))
    print("  nnf     :", to_text(to_nnf(f)))
    print("  rank    :", quantifier_rank(f))
    print("  problems:", validate(f, vocab) or "none")
