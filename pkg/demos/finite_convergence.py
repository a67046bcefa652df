"""Exact finite-N degrees of belief for the flying-bird KB."""

from fractions import Fraction

from randworlds.finite import convergence_table
from randworlds.syntax import Vocabulary, parse

vocab = Vocabulary(["Bird", "Fly"], ["tweety"])
kb = parse("[Fly(x) || Bird(x)]_x ~(1) 9/10 and Bird(tweety)", vocab)
query = parse("Fly(tweety)", vocab)

for tau in (Fraction(1, 10), Fraction(1, 20)):
    print(f"tolerance {tau}")
    for N, exact, value in convergence_table(query, kb, vocab, {1: tau}, [5, 10, 20, 40]):
        print(f"  N={N:3d}  Pr_N={value:.6f}  ({exact})")
