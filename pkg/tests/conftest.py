import itertools
import json
from fractions import Fraction

import pytest

from randworlds.cli import BUNDLED_CORPUS, read_kb
from randworlds.syntax import (
    And, Bottom, Eq, Exists, ForAll, Implies, NegProp, Not, Or, Pred, Prop, Top, Var,
)

CORPUS = BUNDLED_CORPUS


def corpus_cases():
    """(case dict, vocab, kb formula) for every bundled case, sorted by name."""
    out = []
    for path in sorted(CORPUS.glob("*.json")):
        case = json.loads(path.read_text())
        vocab, kb = read_kb(CORPUS / case["kb"])
        out.append((case, vocab, kb))
    return out


def corpus_kbs():
    """Distinct bundled KB files as (name, vocab, kb)."""
    out = []
    for path in sorted(CORPUS.glob("*.kb")):
        vocab, kb = read_kb(path)
        out.append((path.stem, vocab, kb))
    return out


# --- brute-force oracle ------------------------------------------------------
# Deliberately shares no code with the summary-based counter: it walks every
# concrete world (an atom per element, an element per constant) and evaluates
# formulas over explicit domain elements.

def raw_holds(f, atom_of, const_of, pred_pos, tau, env):
    N = len(atom_of)

    def el(t, env):
        return env[t.name] if isinstance(t, Var) else const_of[t.name]

    def ev(g, env):
        if isinstance(g, Pred):
            return (atom_of[el(g.term, env)] >> pred_pos[g.predicate]) & 1 == 1
        if isinstance(g, Eq):
            return el(g.left, env) == el(g.right, env)
        if isinstance(g, Not):
            return not ev(g.body, env)
        if isinstance(g, And):
            return all(ev(a, env) for a in g.args)
        if isinstance(g, Or):
            return any(ev(a, env) for a in g.args)
        if isinstance(g, Implies):
            return (not ev(g.left, env)) or ev(g.right, env)
        if isinstance(g, Top):
            return True
        if isinstance(g, Bottom):
            return False
        if isinstance(g, ForAll):
            return all(ev(g.body, {**env, g.var: e}) for e in range(N))
        if isinstance(g, Exists):
            return any(ev(g.body, {**env, g.var: e}) for e in range(N))
        if isinstance(g, Prop):
            den = [e for e in range(N) if ev(g.denominator, {**env, g.var: e})]
            num = sum(1 for e in den if ev(g.numerator, {**env, g.var: e}))
            t = Fraction(tau[g.index])
            lo = (g.coefficient - t) * len(den) <= num
            hi = num <= (g.coefficient + t) * len(den)
            return {"~": lo and hi, "<~": hi, ">~": lo}[g.cmp]
        if isinstance(g, NegProp):
            return not ev(g.prop, env)
        raise TypeError(g)

    return ev(f, env)


def raw_worlds(vocab, N):
    """Every concrete world of size N: (atom_of, const_of)."""
    for atom_of in itertools.product(range(vocab.K), repeat=N):
        for denot in itertools.product(range(N), repeat=len(vocab.constants)):
            yield atom_of, dict(zip(vocab.constants, denot))


def raw_count(f, vocab, N, tau=None):
    pos = {p: i for i, p in enumerate(vocab.predicates)}
    return sum(1 for a, c in raw_worlds(vocab, N) if raw_holds(f, a, c, pos, tau or {}, {}))


@pytest.fixture
def corpus_dir():
    return CORPUS
