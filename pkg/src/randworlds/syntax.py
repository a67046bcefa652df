"""Unary statistical first-order language: AST, parser, printer, normal forms.

Formulas are immutable dataclasses, so structural equality and hashing come
for free.  Conditional proportions ``[phi || psi]_x ~(i) a`` compare the
fraction of domain elements satisfying ``phi`` among those satisfying ``psi``
with a rational coefficient ``a`` up to the tolerance with index ``i``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Optional, Union

__all__ = [
    "Vocabulary", "Var", "Const", "Pred", "Eq", "Not", "And", "Or", "Implies",
    "ForAll", "Exists", "Prop", "NegProp", "Top", "Bottom", "TRUE", "FALSE",
    "Formula", "Term", "ParseError", "UnknownNameError", "NestedProportionError",
    "parse", "to_text", "validate", "quantifier_rank", "to_nnf", "free_variables",
    "constants_of", "proportions_of", "has_proportion", "tolerance_indices",
    "COMPARATORS",
]

COMPARATORS = ("~", "<~", ">~")
KEYWORDS = {"forall", "exists", "not", "and", "or", "true", "false", "TRUE", "FALSE"}


@dataclass(frozen=True)
class Vocabulary:
    predicates: tuple
    constants: tuple = ()

    def __init__(self, predicates, constants=()):
        object.__setattr__(self, "predicates", tuple(predicates))
        object.__setattr__(self, "constants", tuple(constants))
        names = self.predicates + self.constants
        if not self.predicates:
            raise ValueError("a vocabulary needs at least one predicate")
        if any(not n for n in names):
            raise ValueError("empty name in vocabulary")
        if len(set(names)) != len(names):
            raise ValueError("duplicate name in vocabulary")
        for n in names:
            if n in KEYWORDS:
                raise ValueError(f"reserved word used as a name: {n}")
        object.__setattr__(self, "_pred_pos", {p: i for i, p in enumerate(self.predicates)})

    @property
    def K(self) -> int:
        return 1 << len(self.predicates)

    def pred_index(self, name: str) -> int:
        try:
            return self._pred_pos[name]
        except KeyError:
            raise ValueError(f"unknown predicate {name}") from None


# --- terms -----------------------------------------------------------------

@dataclass(frozen=True)
class Var:
    name: str

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class Const:
    name: str

    def __str__(self):
        return self.name


Term = Union[Var, Const]


# --- formulas --------------------------------------------------------------

@dataclass(frozen=True)
class Top:
    pass


@dataclass(frozen=True)
class Bottom:
    pass


TRUE = Top()
FALSE = Bottom()


@dataclass(frozen=True)
class Pred:
    predicate: str
    term: Term


@dataclass(frozen=True)
class Eq:
    left: Term
    right: Term


@dataclass(frozen=True)
class Not:
    body: "Formula"


@dataclass(frozen=True)
class And:
    args: tuple

    def __init__(self, *args):
        if len(args) == 1 and isinstance(args[0], (list, tuple)):
            args = args[0]
        object.__setattr__(self, "args", tuple(args))


@dataclass(frozen=True)
class Or:
    args: tuple

    def __init__(self, *args):
        if len(args) == 1 and isinstance(args[0], (list, tuple)):
            args = args[0]
        object.__setattr__(self, "args", tuple(args))


@dataclass(frozen=True)
class Implies:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class ForAll:
    var: str
    body: "Formula"


@dataclass(frozen=True)
class Exists:
    var: str
    body: "Formula"


@dataclass(frozen=True)
class Prop:
    """``[numerator || denominator]_var cmp(index) coefficient``.

    ``denominator`` is ``TRUE`` for an unconditional proportion.
    """
    numerator: "Formula"
    denominator: "Formula"
    var: str
    cmp: str
    index: int
    coefficient: Fraction = field(default=Fraction(0))

    def __post_init__(self):
        if self.cmp not in COMPARATORS:
            raise ValueError(f"unknown comparator {self.cmp!r}")
        object.__setattr__(self, "coefficient", Fraction(self.coefficient))


@dataclass(frozen=True)
class NegProp:
    """Negated proportion comparison, the only negation NNF keeps on a proportion."""
    prop: Prop


Formula = Union[Top, Bottom, Pred, Eq, Not, And, Or, Implies, ForAll, Exists, Prop, NegProp]


# --- errors ----------------------------------------------------------------

class ParseError(ValueError):
    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        where = f" (line {line}, column {column})" if line is not None else ""
        super().__init__(message + where)


class UnknownNameError(ParseError):
    pass


class NestedProportionError(ParseError):
    pass


# --- lexer -----------------------------------------------------------------

_TOKEN_RE = re.compile(r"""
    (?P<ws>[ \t\r\n]+|\#[^\n]*)
  | (?P<num>\d+(?:\.\d+)?)
  | (?P<name>[A-Za-z][A-Za-z0-9_]*)
  | (?P<op>\|\||->|<~|>~|[()\[\]_~.=/])
""", re.VERBOSE)


@dataclass
class _Tok:
    kind: str
    text: str
    line: int
    col: int


def _tokenize(text: str) -> list:
    toks = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        s = m.group()
        if kind != "ws":
            toks.append(_Tok(kind, s, line, pos - line_start + 1))
        for i, ch in enumerate(s):
            if ch == "\n":
                line += 1
                line_start = pos + i + 1
        pos = m.end()
    toks.append(_Tok("eof", "", line, pos - line_start + 1))
    return toks


# --- parser ----------------------------------------------------------------

@dataclass(frozen=True)
class _Sym:
    # unresolved term name, resolved after parsing once the binders are known
    name: str
    line: int
    col: int


class _Parser:
    def __init__(self, text):
        self.toks = _tokenize(text)
        self.i = 0

    def peek(self, k=0):
        return self.toks[self.i + k]

    def error(self, msg, tok=None):
        tok = tok or self.peek()
        raise ParseError(msg, tok.line, tok.col)

    def accept(self, text):
        if self.peek().text == text and self.peek().kind in ("op", "name"):
            self.i += 1
            return True
        return False

    def expect(self, text):
        if not self.accept(text):
            found = self.peek().text or "end of input"
            self.error(f"expected {text!r}, found {found!r}")

    def parse(self):
        f = self.formula()
        if self.peek().kind != "eof":
            self.error(f"unexpected {self.peek().text!r}")
        return f

    def formula(self):
        tok = self.peek()
        if tok.kind == "name" and tok.text in ("forall", "exists"):
            self.i += 1
            var = self.peek()
            if var.kind != "name" or var.text in KEYWORDS:
                self.error("expected a variable after quantifier")
            self.i += 1
            self.expect(".")
            body = self.formula()
            return (ForAll if tok.text == "forall" else Exists)(var.text, body)
        return self.imp()

    def imp(self):
        left = self.disj()
        if self.accept("->"):
            return Implies(left, self.imp_rhs())
        return left

    def imp_rhs(self):
        # a quantifier may follow '->' without parentheses
        tok = self.peek()
        if tok.kind == "name" and tok.text in ("forall", "exists"):
            return self.formula()
        return self.imp()

    def disj(self):
        args = [self.conj()]
        while self.accept("or"):
            args.append(self.conj())
        return args[0] if len(args) == 1 else Or(args)

    def conj(self):
        args = [self.neg()]
        while self.accept("and"):
            args.append(self.neg())
        return args[0] if len(args) == 1 else And(args)

    def neg(self):
        if self.accept("not"):
            return Not(self.neg())
        if self.peek().text in ("forall", "exists"):
            # unparenthesized quantifier: scope extends as far right as possible
            return self.formula()
        return self.atom()

    def term(self):
        tok = self.peek()
        if tok.kind != "name" or tok.text in KEYWORDS:
            self.error("expected a term")
        self.i += 1
        return _Sym(tok.text, tok.line, tok.col)

    def atom(self):
        tok = self.peek()
        if tok.kind == "name" and tok.text in ("true", "TRUE"):
            self.i += 1
            return TRUE
        if tok.kind == "name" and tok.text in ("false", "FALSE"):
            self.i += 1
            return FALSE
        if tok.text == "(" and tok.kind == "op":
            self.i += 1
            f = self.formula()
            self.expect(")")
            return f
        if tok.text == "[" and tok.kind == "op":
            return self.prop()
        if tok.kind == "name" and tok.text not in KEYWORDS:
            if self.peek(1).text == "(" and tok.text[0].isupper():
                self.i += 2
                t = self.term()
                self.expect(")")
                return Pred(tok.text, t)
            left = self.term()
            self.expect("=")
            return Eq(left, self.term())
        self.error(f"unexpected {tok.text or 'end of input'!r}")

    def prop(self):
        open_tok = self.peek()
        self.expect("[")
        num = self.formula()
        den = TRUE
        if self.accept("||"):
            den = self.formula()
        self.expect("]")
        self.expect("_")
        var = self.peek()
        if var.kind != "name" or var.text in KEYWORDS:
            self.error("expected the proportion's variable after '_'")
        self.i += 1
        cmp_tok = self.peek()
        if cmp_tok.text not in COMPARATORS:
            self.error("expected one of '~', '<~', '>~'")
        self.i += 1
        self.expect("(")
        idx = self.peek()
        if idx.kind != "num" or not idx.text.isdigit():
            self.error("expected an integer tolerance index")
        self.i += 1
        self.expect(")")
        coef = self.rational()
        for sub in (num, den):
            if _contains_prop(sub):
                raise NestedProportionError("nested proportion", open_tok.line, open_tok.col)
        return Prop(num, den, var.text, cmp_tok.text, int(idx.text), coef)

    def rational(self):
        tok = self.peek()
        if tok.kind != "num":
            self.error("expected a rational coefficient")
        self.i += 1
        if self.peek().text == "/":
            self.i += 1
            den = self.peek()
            if den.kind != "num" or not den.text.isdigit() or not tok.text.isdigit():
                self.error("expected INT '/' INT")
            self.i += 1
            if int(den.text) == 0:
                self.error("zero denominator", den)
            return Fraction(int(tok.text), int(den.text))
        return Fraction(tok.text)


def _contains_prop(f) -> bool:
    return any(isinstance(g, (Prop, NegProp)) for g in _walk(f))


def _walk(f) -> Iterator:
    yield f
    if isinstance(f, (And, Or)):
        for a in f.args:
            yield from _walk(a)
    elif isinstance(f, Implies):
        yield from _walk(f.left)
        yield from _walk(f.right)
    elif isinstance(f, (Not,)):
        yield from _walk(f.body)
    elif isinstance(f, (ForAll, Exists)):
        yield from _walk(f.body)
    elif isinstance(f, Prop):
        yield from _walk(f.numerator)
        yield from _walk(f.denominator)
    elif isinstance(f, NegProp):
        yield from _walk(f.prop)


def _resolve(f, bound: frozenset, vocab: Optional[Vocabulary]):
    def term(s):
        if isinstance(s, (Var, Const)):
            return s
        if s.name in bound:
            return Var(s.name)
        if vocab is not None and s.name in vocab.constants:
            return Const(s.name)
        if vocab is not None and s.name in vocab.predicates:
            raise UnknownNameError(f"predicate {s.name!r} used as a term", s.line, s.col)
        if len(s.name) == 1 and s.name.islower():
            return Var(s.name)  # free; reported by validate
        if vocab is None:
            return Const(s.name)
        raise UnknownNameError(f"unknown constant {s.name!r}", s.line, s.col)

    if isinstance(f, Pred):
        if vocab is not None and f.predicate not in vocab.predicates:
            t = f.term
            raise UnknownNameError(f"unknown predicate {f.predicate!r}",
                                   getattr(t, "line", None), getattr(t, "col", None))
        return Pred(f.predicate, term(f.term))
    if isinstance(f, Eq):
        return Eq(term(f.left), term(f.right))
    if isinstance(f, Not):
        return Not(_resolve(f.body, bound, vocab))
    if isinstance(f, And):
        return And([_resolve(a, bound, vocab) for a in f.args])
    if isinstance(f, Or):
        return Or([_resolve(a, bound, vocab) for a in f.args])
    if isinstance(f, Implies):
        return Implies(_resolve(f.left, bound, vocab), _resolve(f.right, bound, vocab))
    if isinstance(f, (ForAll, Exists)):
        return type(f)(f.var, _resolve(f.body, bound | {f.var}, vocab))
    if isinstance(f, Prop):
        inner = bound | {f.var}
        return Prop(_resolve(f.numerator, inner, vocab), _resolve(f.denominator, inner, vocab),
                    f.var, f.cmp, f.index, f.coefficient)
    return f


def parse(text: str, vocab: Optional[Vocabulary] = None) -> Formula:
    """Parse ``text`` into a formula, resolving names against ``vocab``.

    A single lowercase letter is a variable where a quantifier or proportion
    binds it; otherwise it names a constant when the vocabulary has one by
    that name.  Unbound leftovers stay variables and ``validate`` flags them.
    """
    raw = _Parser(text).parse()
    return _resolve(raw, frozenset(), vocab)


# --- printer ---------------------------------------------------------------

def _coef_text(q: Fraction) -> str:
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def _wrapped(f) -> str:
    s = to_text(f)
    if isinstance(f, (Pred, Eq, Not, Prop, NegProp, Top, Bottom)):
        return s
    return f"({s})"


def to_text(f: Formula) -> str:
    """Render ``f`` in the concrete grammar; ``parse(to_text(f)) == f``."""
    if isinstance(f, Top):
        return "true"
    if isinstance(f, Bottom):
        return "false"
    if isinstance(f, Pred):
        return f"{f.predicate}({f.term})"
    if isinstance(f, Eq):
        return f"{f.left} = {f.right}"
    if isinstance(f, Not):
        return f"not {_wrapped(f.body)}"
    if isinstance(f, And):
        return " and ".join(_wrapped(a) for a in f.args)
    if isinstance(f, Or):
        return " or ".join(_wrapped(a) for a in f.args)
    if isinstance(f, Implies):
        return f"{_wrapped(f.left)} -> {_wrapped(f.right)}"
    if isinstance(f, ForAll):
        return f"forall {f.var}. {to_text(f.body)}"
    if isinstance(f, Exists):
        return f"exists {f.var}. {to_text(f.body)}"
    if isinstance(f, Prop):
        inner = to_text(f.numerator)
        if not isinstance(f.denominator, Top):
            inner += f" || {to_text(f.denominator)}"
        return f"[{inner}]_{f.var} {f.cmp}({f.index}) {_coef_text(f.coefficient)}"
    if isinstance(f, NegProp):
        return f"not {to_text(f.prop)}"
    raise TypeError(f"not a formula: {f!r}")


# --- analysis --------------------------------------------------------------

def free_variables(f, bound=frozenset()) -> set:
    out = set()
    if isinstance(f, Pred):
        if isinstance(f.term, Var) and f.term.name not in bound:
            out.add(f.term.name)
    elif isinstance(f, Eq):
        for t in (f.left, f.right):
            if isinstance(t, Var) and t.name not in bound:
                out.add(t.name)
    elif isinstance(f, (Not,)):
        out |= free_variables(f.body, bound)
    elif isinstance(f, (And, Or)):
        for a in f.args:
            out |= free_variables(a, bound)
    elif isinstance(f, Implies):
        out |= free_variables(f.left, bound) | free_variables(f.right, bound)
    elif isinstance(f, (ForAll, Exists)):
        out |= free_variables(f.body, bound | {f.var})
    elif isinstance(f, Prop):
        inner = bound | {f.var}
        out |= free_variables(f.numerator, inner) | free_variables(f.denominator, inner)
    elif isinstance(f, NegProp):
        out |= free_variables(f.prop, bound)
    return out


def constants_of(f) -> set:
    out = set()
    for g in _walk(f):
        if isinstance(g, Pred) and isinstance(g.term, Const):
            out.add(g.term.name)
        elif isinstance(g, Eq):
            out.update(t.name for t in (g.left, g.right) if isinstance(t, Const))
    return out


def proportions_of(f) -> list:
    """Distinct proportion comparisons of ``f`` in order of first occurrence."""
    seen = {}
    for g in _walk(f):
        if isinstance(g, Prop):
            seen.setdefault(g, None)
    return list(seen)


def has_proportion(f) -> bool:
    return _contains_prop(f)


def tolerance_indices(f) -> set:
    return {p.index for p in proportions_of(f)}


def validate(f: Formula, vocab: Optional[Vocabulary] = None) -> list:
    """Return the list of invariant violations of ``f``; empty means ok."""
    problems = []

    def visit(g, bound, in_prop):
        if isinstance(g, Pred):
            if vocab is not None and g.predicate not in vocab.predicates:
                problems.append(f"unknown predicate {g.predicate}")
            terms = [g.term]
        elif isinstance(g, Eq):
            terms = [g.left, g.right]
        else:
            terms = []
        for t in terms:
            if isinstance(t, Var) and t.name not in bound:
                problems.append(f"free variable {t.name}")
            if isinstance(t, Const) and vocab is not None and t.name not in vocab.constants:
                problems.append(f"unknown constant {t.name}")
        if isinstance(g, (Not,)):
            visit(g.body, bound, in_prop)
        elif isinstance(g, (And, Or)):
            for a in g.args:
                visit(a, bound, in_prop)
        elif isinstance(g, Implies):
            visit(g.left, bound, in_prop)
            visit(g.right, bound, in_prop)
        elif isinstance(g, (ForAll, Exists)):
            visit(g.body, bound | {g.var}, in_prop)
        elif isinstance(g, NegProp):
            visit(g.prop, bound, in_prop)
        elif isinstance(g, Prop):
            if in_prop:
                problems.append("nested proportion")
            if g.index < 1:
                problems.append(f"tolerance index {g.index} is not positive")
            if not 0 <= g.coefficient <= 1:
                problems.append(f"coefficient {g.coefficient} outside [0, 1]")
            inner = bound | {g.var}
            if g.var not in (free_variables(g.numerator, bound - {g.var})
                             | free_variables(g.denominator, bound - {g.var})):
                problems.append(f"proportion variable {g.var} does not occur")
            visit(g.numerator, inner, True)
            visit(g.denominator, inner, True)

    visit(f, frozenset(), False)
    return list(dict.fromkeys(problems))


def quantifier_rank(f: Formula) -> int:
    if isinstance(f, (Pred, Eq, Top, Bottom)):
        return 0
    if isinstance(f, Not):
        return quantifier_rank(f.body)
    if isinstance(f, (And, Or)):
        return max(quantifier_rank(a) for a in f.args)
    if isinstance(f, Implies):
        return max(quantifier_rank(f.left), quantifier_rank(f.right))
    if isinstance(f, (ForAll, Exists)):
        return 1 + quantifier_rank(f.body)
    if isinstance(f, Prop):
        return 1 + max(quantifier_rank(f.numerator), quantifier_rank(f.denominator))
    if isinstance(f, NegProp):
        return quantifier_rank(f.prop)
    raise TypeError(f"not a formula: {f!r}")


def to_nnf(f: Formula, negate: bool = False) -> Formula:
    """Negation normal form; ``not [..]`` becomes a ``NegProp`` marker.

    Proportion bodies are normalized too (they are evaluated per element,
    so the same rewriting applies inside).
    """
    if isinstance(f, Top):
        return FALSE if negate else TRUE
    if isinstance(f, Bottom):
        return TRUE if negate else FALSE
    if isinstance(f, (Pred, Eq)):
        return Not(f) if negate else f
    if isinstance(f, Not):
        return to_nnf(f.body, not negate)
    if isinstance(f, And):
        args = [to_nnf(a, negate) for a in f.args]
        return Or(args) if negate else And(args)
    if isinstance(f, Or):
        args = [to_nnf(a, negate) for a in f.args]
        return And(args) if negate else Or(args)
    if isinstance(f, Implies):
        if negate:
            return And(to_nnf(f.left), to_nnf(f.right, True))
        return Or(to_nnf(f.left, True), to_nnf(f.right))
    if isinstance(f, ForAll):
        return (Exists if negate else ForAll)(f.var, to_nnf(f.body, negate))
    if isinstance(f, Exists):
        return (ForAll if negate else Exists)(f.var, to_nnf(f.body, negate))
    if isinstance(f, Prop):
        p = Prop(to_nnf(f.numerator), to_nnf(f.denominator), f.var, f.cmp, f.index, f.coefficient)
        return NegProp(p) if negate else p
    if isinstance(f, NegProp):
        return to_nnf(f.prop, not negate)
    raise TypeError(f"not a formula: {f!r}")
