import itertools
from fractions import Fraction

import pytest

from randworlds.finite import Structure, evaluate
from randworlds.syntax import (
    TRUE, And, Const, Eq, Exists, ForAll, Implies, NegProp, NestedProportionError, Not, Or,
    ParseError, Pred, Prop, UnknownNameError, Var, Vocabulary, parse, quantifier_rank,
    to_nnf, to_text, validate,
)

from conftest import corpus_cases, corpus_kbs

V = Vocabulary(["Bird", "Fly", "P", "Q"], ["tweety", "c"])


class TestParse:
    def test_literal(self):
        assert parse("Bird(tweety)", V) == Pred("Bird", Const("tweety"))

    def test_conditional_proportion(self):
        f = parse("[Fly(x) || Bird(x)]_x ~(1) 9/10", V)
        assert f == Prop(Pred("Fly", Var("x")), Pred("Bird", Var("x")), "x", "~", 1, Fraction(9, 10))

    def test_unconditional_proportion_has_true_denominator(self):
        f = parse("[P(x)]_x <~(2) 0.25", V)
        assert f == Prop(Pred("P", Var("x")), TRUE, "x", "<~", 2, Fraction(1, 4))

    def test_tautology_shape(self):
        f = parse("forall x. (P(x) or not P(x))", V)
        assert f == ForAll("x", Or(Pred("P", Var("x")), Not(Pred("P", Var("x")))))

    def test_precedence(self):
        f = parse("not P(c) and Q(c) or P(c) -> Q(c) -> P(c)", V)
        p, q = Pred("P", Const("c")), Pred("Q", Const("c"))
        assert f == Implies(Or(And(Not(p), q), p), Implies(q, p))

    def test_equality_and_comments(self):
        f = parse("# a comment\nexists x. (x = c)  # trailing\n", V)
        assert f == Exists("x", Eq(Var("x"), Const("c")))

    def test_syntax_error_position(self):
        with pytest.raises(ParseError) as exc:
            parse("Bird(tweety) and\n  (Fly(tweety)", V)
        assert exc.value.line == 2
        assert exc.value.column is not None

    def test_unknown_name(self):
        with pytest.raises(UnknownNameError):
            parse("Swim(tweety)", V)
        with pytest.raises(UnknownNameError):
            parse("Bird(opus)", V)

    def test_nested_proportion_rejected(self):
        with pytest.raises(NestedProportionError):
            parse("[[P(x)]_x ~(1) 1/2 || Q(y)]_y ~(1) 1/2", V)


class TestValidate:
    def test_ok(self):
        assert validate(parse("Bird(tweety)", V), V) == []

    def test_free_variable(self):
        assert validate(Pred("P", Var("x")), V) == ["free variable x"]

    def test_nested_proportion(self):
        inner = Prop(Pred("P", Var("x")), TRUE, "x", "~", 1, Fraction(1, 2))
        outer = Prop(inner, Pred("Q", Var("y")), "y", "~", 1, Fraction(1, 2))
        assert "nested proportion" in validate(outer, V)

    def test_coefficient_range(self):
        f = Prop(Pred("P", Var("x")), TRUE, "x", "~", 1, Fraction(3, 2))
        assert any("coefficient" in p for p in validate(f, V))


class TestQuantifierRank:
    @pytest.mark.parametrize("text, rank", [
        ("Bird(tweety)", 0),
        ("exists x. P(x)", 1),
        ("forall x. exists y. (P(x) and Q(y))", 2),
        ("[P(x) || exists y. Q(y)]_x ~(1) 1/2", 2),
    ])
    def test_examples(self, text, rank):
        assert quantifier_rank(parse(text, V)) == rank


class TestNNF:
    def test_de_morgan(self):
        f = to_nnf(parse("not (P(c) and Q(c))", V))
        assert f == Or(Not(Pred("P", Const("c"))), Not(Pred("Q", Const("c"))))

    def test_quantifier_dual(self):
        assert to_nnf(parse("not forall x. P(x)", V)) == Exists("x", Not(Pred("P", Var("x"))))

    def test_negated_proportion_marker(self):
        f = to_nnf(parse("not ([P(x)]_x ~(1) 1/2)", V))
        assert isinstance(f, NegProp)
        assert f.prop == parse("[P(x)]_x ~(1) 1/2", V)

    def test_rank_preserved_on_corpus(self):
        for _, _, kb in corpus_kbs():
            assert quantifier_rank(to_nnf(kb)) == quantifier_rank(kb)
            assert quantifier_rank(to_nnf(Not(kb))) == quantifier_rank(kb)


NNF_FORMULAS = [
    "not (P(c) and (Q(c) -> P(c)))",
    "not forall x. (P(x) -> exists y. (Q(y) and not y = x))",
    "not ([P(x)]_x ~(1) 1/2)",
    "not ([P(x) || Q(x)]_x <~(1) 1/3 or [Q(x)]_x >~(2) 1/2)",
    "(exists x. P(x)) -> not ([Q(x) || P(x)]_x ~(1) 1/2)",
    "not (forall x. (P(x) or Q(x)) -> [P(x)]_x ~(1) 0)",
]


class TestNNFPreservesTruth:
    """Exhaustive over all structures with at most four elements."""

    @staticmethod
    def structures(vocab, N):
        K = vocab.K
        for counts in itertools.product(range(N + 1), repeat=K):
            if sum(counts) != N:
                continue
            for a in range(K):
                if counts[a] == 0:
                    continue
                anon = list(counts)
                anon[a] -= 1
                yield Structure(vocab, {"c": 0}, (a,), tuple(anon))

    CASES = [(t, ["P", "Q"]) for t in NNF_FORMULAS] + [
        (t, ["P"]) for t in NNF_FORMULAS if "Q" not in t]

    @pytest.mark.parametrize("text, preds", CASES)
    def test_equivalent(self, text, preds):
        vocab = Vocabulary(preds, ["c"])
        f = parse(text, vocab)
        g = to_nnf(f)
        for tau in (Fraction(1, 10), Fraction(1, 4)):
            taus = {1: tau, 2: tau}
            for N in range(1, 5):
                for st in self.structures(vocab, N):
                    assert evaluate(f, st, taus) == evaluate(g, st, taus), (text, st)


class TestRoundTrip:
    def test_corpus_kbs(self):
        for name, vocab, kb in corpus_kbs():
            text = to_text(kb)
            again = parse(text, vocab)
            assert again == kb, name
            assert to_text(again) == text

    def test_corpus_queries(self):
        for case, vocab, _ in corpus_cases():
            q = parse(case["query"], vocab)
            assert parse(to_text(q), vocab) == q

    @pytest.mark.parametrize("text", NNF_FORMULAS + [
        "forall x. forall y. ((P(x) and P(y)) -> x = y)",
        "[P(x) || Q(x) or not P(x)]_x >~(3) 0.125",
        "true and not false",
    ])
    def test_examples(self, text):
        vocab = Vocabulary(["P", "Q"], ["c"])
        f = parse(text, vocab)
        assert parse(to_text(f), vocab) == f

    @pytest.mark.parametrize("text, printed", [
        ("[P(x)]_x <~(2) 0", "[P(x)]_x <~(2) 0"),
        ("[P(x)]_x >~(1) 1", "[P(x)]_x >~(1) 1"),
        ("[P(x)]_x ~(1) 0.25", "[P(x)]_x ~(1) 1/4"),
    ])
    def test_coefficient_text(self, text, printed):
        assert to_text(parse(text, Vocabulary(["P"]))) == printed
