from fractions import Fraction

import pytest

from randworlds.canonical import (
    MAX_DISJUNCTS, AtomicDescription, CanonicalFormTooLarge, LinearConstraint, atom_label, atoms,
    canonicalize, disjunct_holds, formula_to_atom_set,
)
from randworlds.finite import enumerate_summaries, eval_summary, set_partitions
from randworlds.syntax import Vocabulary, parse

from conftest import corpus_kbs

EXTRA_KBS = [
    (["P", "Q"], ["c", "d"], "P(c) and not c = d and [P(x) || Q(x)]_x >~(1) 1/2"),
    (["P", "Q"], ["c"], "not ([P(x)]_x ~(1) 1/2) or (forall x. (Q(x) -> x = c))"),
    (["P", "Q"], ["c"], "exists x. exists y. (not x = y and P(x) and P(y) and not P(c))"),
    (["P", "Q"], ["c", "d"], "[P(x) || not x = c]_x <~(1) 1/3 and (Q(c) or Q(d))"),
    (["P"], ["c"], "forall x. (P(x) -> x = c) and [P(x)]_x ~(1) 1/2"),
    (["P", "Q"], [], "(exists x. (P(x) and Q(x))) -> [Q(x) || P(x)]_x ~(2) 1/4"),
]


def _soundness(vocab, kb, tau, N):
    cf = canonicalize(kb, vocab)
    for pattern in set_partitions(vocab.constants):
        for s in enumerate_summaries(vocab, N, pattern):
            truth = eval_summary(kb, s, tau, vocab)
            matched = [d for d in cf.disjuncts if disjunct_holds(d, s, vocab, tau)]
            assert truth == bool(matched), (s, [d.description for d in matched])


class TestAtoms:
    def test_bitmask_order(self):
        v = Vocabulary(["P", "Q"])
        assert atoms(v) == [0, 1, 2, 3]
        assert [atom_label(v, a) for a in atoms(v)] == ["~P&~Q", "P&~Q", "~P&Q", "P&Q"]

    def test_unary_formula_as_atom_set(self):
        v = Vocabulary(["P", "Q"], ["c"])
        psi = parse("[P(x) or x = c]_x ~(1) 1/2", v).numerator
        # c in P&Q agrees with its atom; c in ~P&~Q is an exception that satisfies psi
        assert formula_to_atom_set(psi, "x", AtomicDescription((("c",),), (3,)), v) == ({1, 3}, {})
        assert formula_to_atom_set(psi, "x", AtomicDescription((("c",),), (0,)), v) == ({1, 3}, {0: True})


class TestCanonicalize:
    def test_contradiction_is_empty(self):
        v = Vocabulary(["P"], ["c"])
        assert canonicalize(parse("P(c) and not P(c)", v), v).empty

    def test_forced_empty_atom(self):
        v = Vocabulary(["P"])
        cf = canonicalize(parse("forall x. not P(x)", v), v)
        assert len(cf) == 1
        d = cf.disjuncts[0]
        assert d.forced_empty == {1}
        (c,) = d.region.constraints
        assert c.relation == "=" and c.coeffs == (0, 1) and c.bound == 0

    def test_fly_has_two_descriptions_one_region(self):
        v = Vocabulary(["Bird", "Fly"], ["tweety"])
        kb = parse("[Fly(x) || Bird(x)]_x ~(1) 9/10 and Bird(tweety)", v)
        cf = canonicalize(kb, v)
        assert len(cf) == 2
        assert {d.description.class_atom for d in cf.disjuncts} == {(1,), (3,)}
        assert cf.disjuncts[0].region.key() == cf.disjuncts[1].region.key()

    def test_unconditional_bound_at_zero_is_coefficient(self):
        v = Vocabulary(["P"])
        for q in (Fraction(0), Fraction(3, 10), Fraction(1)):
            cf = canonicalize(parse(f"[P(x)]_x ~(1) {q.numerator}/{q.denominator}", v), v)
            bounds = sorted(abs(c.exact_at({1: 0})[1]) for c in cf.disjuncts[0].region.constraints)
            assert bounds == [q, q]

    def test_conditional_band_collapses(self):
        # at tolerance 0 the band is tight exactly where the conditional equals 9/10
        v = Vocabulary(["Bird", "Fly"])
        cf = canonicalize(parse("[Fly(x) || Bird(x)]_x ~(1) 9/10", v), v)
        u = [Fraction(1, 2), Fraction(1, 20), Fraction(0), Fraction(9, 20)]
        for c in cf.disjuncts[0].region.constraints:
            a, b = c.exact_at({1: 0})
            assert sum(x * y for x, y in zip(a, u)) == b

    def test_descriptions_counted(self):
        v = Vocabulary(["P", "Q"], ["c", "d"])
        cf = canonicalize(parse("c = c and d = d", v), v)
        # Bell(2) patterns: 2 classes in 16 ways, 1 class in 4 ways
        assert len(cf) == 16 + 4
        assert len({d.description for d in cf.disjuncts}) == len(cf)

    def test_size_guard(self):
        preds = ["P", "Q", "R"]
        consts = ["a", "b", "c", "d", "e"]
        v = Vocabulary(preds, consts)
        kb = parse(" and ".join(f"{c} = {c}" for c in consts), v)
        with pytest.raises(CanonicalFormTooLarge):
            canonicalize(kb, v)
        assert MAX_DISJUNCTS == 4096


class TestRender:
    def test_plain_coefficients(self):
        v = Vocabulary(["P"])
        c = LinearConstraint((Fraction(0), Fraction(-1)), bound=Fraction(-3, 10), tau_bound=((1, Fraction(1)),))
        assert c.render(v) == "-u[P] <= -3/10 + t1"

    def test_mixed_signs(self):
        v = Vocabulary(["P"])
        c = LinearConstraint((Fraction(1, 2), Fraction(-1)), relation="=", bound=Fraction(0))
        assert c.render(v) == "1/2*u[~P] - u[P] = 0"

    def test_tau_coefficients(self):
        v = Vocabulary(["Bird", "Fly"])
        cf = canonicalize(parse("[Fly(x) || Bird(x)]_x <~(1) 9/10", v), v)
        (c,) = cf.disjuncts[0].region.constraints
        # terms follow atom order: 1 = Bird&~Fly, 3 = Bird&Fly
        assert c.render(v) == "(-9/10 - t1)*u[Bird&~Fly] + (1/10 - t1)*u[Bird&Fly] <= 0"


class TestSoundness:
    """A summary satisfies the KB iff it lies in some disjunct."""

    @pytest.mark.parametrize("name, vocab, kb", corpus_kbs(), ids=lambda x: x if isinstance(x, str) else "")
    def test_corpus(self, name, vocab, kb):
        for N in range(1, 6):
            _soundness(vocab, kb, {1: Fraction(1, 10)}, N)

    @pytest.mark.parametrize("preds, consts, text", EXTRA_KBS)
    def test_extra(self, preds, consts, text):
        v = Vocabulary(preds, consts)
        kb = parse(text, v)
        for N in range(1, 6):
            _soundness(v, kb, {1: Fraction(1, 10), 2: Fraction(1, 10)}, N)
