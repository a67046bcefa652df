"""Atoms, atomic descriptions, and the canonical form of a knowledge base.

For each way of placing the KB's constants (merged by equality) into atoms,
the KB is expanded into a boolean combination of two kinds of literal:

* cardinality literals on the unnamed part of an atom, ``#a >= j`` and
  ``#a < j`` (quantifiers over unnamed elements only ever ask these), and
* proportion literals, each a conjunction of linear constraints over the
  atom-proportion vector.

The expansion is exact at every finite domain size.  Its DNF is the list of
disjuncts handed to the maximum-entropy stage; an atom with an upper
cardinality bound has asymptotic proportion 0.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Optional

from .finite import Structure, WorldSummary, atom_holds, evaluate, set_partitions
from .syntax import (
    And, Bottom, Eq, Exists, ForAll, Formula, NegProp, Not, Or, Pred, Prop, Top,
    Vocabulary, constants_of, free_variables, quantifier_rank, to_nnf, to_text,
    validate, _walk,
)

__all__ = [
    "AtomicDescription", "LinearConstraint", "ConstraintRegion", "Disjunct",
    "CanonicalForm", "UnsupportedFormula", "CanonicalFormTooLarge", "atoms",
    "atom_label", "formula_to_atom_set", "extract_region", "canonicalize",
    "disjunct_holds", "MAX_DISJUNCTS",
]

MAX_DISJUNCTS = 4096


class UnsupportedFormula(ValueError):
    pass


class CanonicalFormTooLarge(RuntimeError):
    pass


def atoms(vocab: Vocabulary) -> list:
    """Atom indices in bitmask order: bit p set iff predicate p holds."""
    return list(range(vocab.K))


def atom_label(vocab: Vocabulary, atom: int) -> str:
    return "&".join(p if atom_holds(atom, i) else "~" + p
                    for i, p in enumerate(vocab.predicates))


@dataclass(frozen=True)
class AtomicDescription:
    pattern: tuple      # classes of constants, each a tuple of names
    class_atom: tuple   # atom of each class

    @property
    def const_class(self) -> dict:
        return {c: j for j, cls in enumerate(self.pattern) for c in cls}

    def atom_of(self, const: str) -> int:
        return self.class_atom[self.const_class[const]]

    def named_per_atom(self, K: int) -> list:
        out = [0] * K
        for a in self.class_atom:
            out[a] += 1
        return out

    def describe(self, vocab: Vocabulary) -> str:
        parts = []
        for cls, a in zip(self.pattern, self.class_atom):
            parts.append(f"{'='.join(cls)} in {atom_label(vocab, a)}")
        return ", ".join(parts) if parts else "(no constants)"


def _affine(const, terms, tau) -> Fraction:
    out = Fraction(const)
    for i, q in terms:
        out += q * Fraction(tau[i])
    return out


@dataclass(frozen=True)
class LinearConstraint:
    """``sum_a (coeffs[a] + sum_i t_i c_ia) u_a  rel  bound + sum_i t_i b_i``.

    ``named_offset`` is the contribution of named elements whose membership
    differs from their atom's, in element counts (it scales as 1/N in
    proportion units and is dropped asymptotically).
    """
    coeffs: tuple
    tau_coeffs: tuple = ()        # ((index, vector), ...)
    relation: str = "<="
    bound: Fraction = Fraction(0)
    tau_bound: tuple = ()         # ((index, q), ...)
    strict: bool = False
    named_offset: tuple = (Fraction(0), ())
    provenance: str = ""
    decided: Optional[bool] = None   # asymptotic truth when no proportion term is left

    def indices(self) -> set:
        return {i for i, _ in self.tau_coeffs} | {i for i, _ in self.tau_bound} \
            | {i for i, _ in self.named_offset[1]}

    def exact_at(self, tau) -> tuple:
        a = list(self.coeffs)
        for i, vec in self.tau_coeffs:
            t = Fraction(tau[i])
            a = [x + t * y for x, y in zip(a, vec)]
        return a, _affine(self.bound, self.tau_bound, tau)

    def at(self, tau) -> tuple:
        a, b = self.exact_at(tau)
        return [float(x) for x in a], float(b)

    def holds_on_counts(self, counts, tau) -> bool:
        """Exact finite-N test with ``u = counts / N``, named offsets included."""
        a, b = self.exact_at(tau)
        N = sum(counts)
        lhs = sum(x * c for x, c in zip(a, counts)) + _affine(*self.named_offset, tau)
        rhs = b * N
        if self.relation == "=":
            return lhs == rhs
        return lhs < rhs if self.strict else lhs <= rhs

    def is_zero(self) -> bool:
        return all(x == 0 for x in self.coeffs) and all(
            all(y == 0 for y in vec) for _, vec in self.tau_coeffs)

    def render(self, vocab: Vocabulary) -> str:
        def linear(pairs):
            # pairs of (coefficient, symbol); symbol "" is the constant term
            out = ""
            for q, sym in pairs:
                if not q:
                    continue
                mag = abs(q)
                body = f"{mag}*{sym}" if sym and mag != 1 else (sym or str(mag))
                if not out:
                    out = ("-" if q < 0 else "") + body
                else:
                    out += (" - " if q < 0 else " + ") + body
            return out or "0"

        lhs = ""
        for a in range(len(self.coeffs)):
            u = f"u[{atom_label(vocab, a)}]"
            tau_part = [(vec[a], f"t{i}") for i, vec in self.tau_coeffs if vec[a]]
            if tau_part:
                term = f"({linear([(self.coeffs[a], '')] + tau_part)})*{u}"
            elif self.coeffs[a]:
                term = linear([(self.coeffs[a], u)])
            else:
                continue
            if not lhs:
                lhs = term
            else:
                lhs += f" - {term[1:]}" if term.startswith("-") else f" + {term}"
        rhs = linear([(self.bound, "")] + [(q, f"t{i}") for i, q in self.tau_bound])
        rel = "=" if self.relation == "=" else ("<" if self.strict else "<=")
        return f"{lhs or '0'} {rel} {rhs}"


@dataclass(frozen=True)
class ConstraintRegion:
    K: int
    constraints: tuple

    def indices(self) -> set:
        out = set()
        for c in self.constraints:
            out |= c.indices()
        return out

    def key(self) -> tuple:
        """Identity of the region as a set of inequalities (provenance ignored)."""
        return tuple(sorted({(c.coeffs, c.tau_coeffs, c.relation, c.bound, c.tau_bound, c.strict, c.decided is None, bool(c.decided))
                             for c in self.constraints}))

    def holds_on_counts(self, counts, tau) -> bool:
        return all(c.holds_on_counts(counts, tau) for c in self.constraints
                   if c.provenance != "bounded")


@dataclass(frozen=True)
class Disjunct:
    description: AtomicDescription
    region: ConstraintRegion
    lower: tuple    # minimum unnamed count per atom
    upper: tuple    # strict upper bound on unnamed count per atom, or None
    branch: int = 0

    @property
    def forced_empty(self) -> frozenset:
        return frozenset(a for a, h in enumerate(self.upper) if h == 1)

    @property
    def forced_nonempty(self) -> frozenset:
        return frozenset(a for a, lo in enumerate(self.lower) if lo >= 1)

    @property
    def bounded(self) -> frozenset:
        return frozenset(a for a, h in enumerate(self.upper) if h is not None)


@dataclass(frozen=True)
class CanonicalForm:
    vocab: Vocabulary
    constants: tuple
    disjuncts: tuple

    def __len__(self):
        return len(self.disjuncts)

    @property
    def empty(self) -> bool:
        return not self.disjuncts


# --- unary formulas as atom sets --------------------------------------------

def _description_structure(vocab, D: AtomicDescription, anon=1) -> Structure:
    return Structure(vocab, D.const_class, tuple(D.class_atom), (anon,) * vocab.K)


def formula_to_atom_set(psi: Formula, var: str, D: AtomicDescription, vocab: Vocabulary):
    """Atoms whose unnamed elements satisfy ``psi(var)``, plus the exceptions.

    Returns ``(atom_set, exceptions)`` where ``exceptions`` maps each class
    index whose named element disagrees with its atom's unnamed members to
    the named element's own truth value.
    """
    if free_variables(psi) - {var}:
        raise UnsupportedFormula(f"{to_text(psi)} is not unary in {var}")
    if any(isinstance(g, (ForAll, Exists, Prop, NegProp)) for g in _walk(psi)):
        raise UnsupportedFormula(f"{to_text(psi)} is not quantifier-free")
    st = _description_structure(vocab, D)
    atom_set = frozenset(a for a in range(vocab.K) if evaluate(psi, st, env={var: ("a", a, 0)}))
    exceptions = {}
    for j, a in enumerate(D.class_atom):
        t = evaluate(psi, st, env={var: ("n", j)})
        if t != (a in atom_set):
            exceptions[j] = t
    return atom_set, exceptions


def _delta(atom_set, exceptions, D) -> int:
    # named count minus what the atom-level count attributes to named elements
    return sum((1 if t else 0) - (1 if D.class_atom[j] in atom_set else 0)
               for j, t in exceptions.items())


def _indicator(K, s):
    return tuple(Fraction(1) if a in s else Fraction(0) for a in range(K))


def _prop_constraints(p: Prop, sense: str, D: AtomicDescription, vocab: Vocabulary) -> list:
    K = vocab.K
    i, alpha = p.index, p.coefficient
    num_f = And(p.numerator, p.denominator) if not isinstance(p.denominator, Top) else p.numerator
    n_set, n_exc = formula_to_atom_set(num_f, p.var, D, vocab)
    n = _indicator(K, n_set)
    dn = Fraction(_delta(n_set, n_exc, D))
    label = to_text(p)
    out = []
    neg = tuple(-x for x in n)
    if isinstance(p.denominator, Top):
        # the denominator counts every element, and the proportions sum to 1
        off = (dn, ())
        mneg = (-dn, ())
        if sense == "in" and p.cmp in ("~", ">~"):
            out.append(LinearConstraint(neg, (), "<=", -alpha, ((i, Fraction(1)),), False, mneg, label + " [lower]"))
        if sense == "in" and p.cmp in ("~", "<~"):
            out.append(LinearConstraint(n, (), "<=", alpha, ((i, Fraction(1)),), False, off, label + " [upper]"))
        if sense == "below":
            out.append(LinearConstraint(n, (), "<=", alpha, ((i, Fraction(-1)),), True, off, label + " [below]"))
        if sense == "above":
            out.append(LinearConstraint(neg, (), "<=", -alpha, ((i, Fraction(-1)),), True, mneg, label + " [above]"))
        return out
    d_set, d_exc = formula_to_atom_set(p.denominator, p.var, D, vocab)
    d = _indicator(K, d_set)
    dd = Fraction(_delta(d_set, d_exc, D))
    ad_minus_n = tuple(alpha * y - x for x, y in zip(n, d))
    n_minus_ad = tuple(x - alpha * y for x, y in zip(n, d))
    minus_d = tuple(-y for y in d)
    if sense == "in" and p.cmp in ("~", ">~"):
        # (a - t) den - num <= 0
        out.append(LinearConstraint(ad_minus_n, ((i, minus_d),), "<=", Fraction(0), (), False,
                                    (alpha * dd - dn, ((i, -dd),)), label + " [lower]"))
    if sense == "in" and p.cmp in ("~", "<~"):
        # num - (a + t) den <= 0
        out.append(LinearConstraint(n_minus_ad, ((i, minus_d),), "<=", Fraction(0), (), False,
                                    (dn - alpha * dd, ((i, -dd),)), label + " [upper]"))
    if sense == "below":
        # num - (a - t) den < 0
        out.append(LinearConstraint(n_minus_ad, ((i, d),), "<=", Fraction(0), (), True,
                                    (dn - alpha * dd, ((i, dd),)), label + " [below]"))
    if sense == "above":
        # (a + t) den - num < 0
        out.append(LinearConstraint(ad_minus_n, ((i, d),), "<=", Fraction(0), (), True,
                                    (alpha * dd - dn, ((i, dd),)), label + " [above]"))
    return out


def _named_only_holds(c: LinearConstraint) -> bool:
    """Truth of ``offset(t) rel 0`` for every small equal tolerance ``t > 0``."""
    off0, off_terms = c.named_offset
    slope = sum(q for _, q in off_terms)
    if off0 != 0:
        return off0 < 0
    return slope < 0 or (slope == 0 and not c.strict)


def extract_region(literals, D: AtomicDescription, vocab: Vocabulary, upper=None) -> ConstraintRegion:
    """Linear constraints for a conjunction of proportion literals.

    ``literals`` holds ``(Prop, sense)`` pairs with sense ``"in"`` (the
    comparison holds), ``"below"`` or ``"above"`` (strict complements).
    ``upper`` adds ``u_a = 0`` for atoms with bounded unnamed count.
    """
    K = vocab.K
    cons = []
    for p, sense in sorted(literals, key=lambda ps: (to_text(ps[0]), ps[1])):
        for c in _prop_constraints(p, sense, D, vocab):
            if c.is_zero() and c.bound == 0 and not c.tau_bound:
                # the denominator has no unnamed members: named elements decide it
                c = replace(c, decided=_named_only_holds(c))
            cons.append(c)
    if upper is not None:
        for a, h in enumerate(upper):
            if h is not None:
                e = tuple(Fraction(1) if b == a else Fraction(0) for b in range(K))
                cons.append(LinearConstraint(e, (), "=", Fraction(0), provenance="bounded"))
    return ConstraintRegion(K, tuple(cons))


# --- symbolic expansion ----------------------------------------------------

_TRUE, _FALSE = True, False


def _mk(op, parts):
    flat = []
    unit, zero = (_TRUE, _FALSE) if op == "and" else (_FALSE, _TRUE)
    for p in parts:
        if p is zero:
            return zero
        if p is unit:
            continue
        if isinstance(p, tuple) and p[0] == op:
            flat.extend(p[1])
        else:
            flat.append(p)
    if not flat:
        return unit
    if len(flat) == 1:
        return flat[0]
    return (op, tuple(flat))


def _ge(a, j):
    return ("ge", a, j)


def _lt(a, j):
    return ("lt", a, j)


def _expand(f, st: Structure, env: dict):
    if isinstance(f, (Pred, Eq)):
        return evaluate(f, st, env=env)
    if isinstance(f, Not):
        if not isinstance(f.body, (Pred, Eq)):
            raise AssertionError("expected negation normal form")
        return not evaluate(f.body, st, env=env)
    if isinstance(f, Top):
        return _TRUE
    if isinstance(f, Bottom):
        return _FALSE
    if isinstance(f, And):
        return _mk("and", [_expand(a, st, env) for a in f.args])
    if isinstance(f, Or):
        return _mk("or", [_expand(a, st, env) for a in f.args])
    if isinstance(f, (ForAll, Exists)):
        is_ex = isinstance(f, Exists)
        parts = []
        for j in range(len(st.class_atom)):
            parts.append(_expand(f.body, st, {**env, f.var: ("n", j)}))
        used = {}
        for el in env.values():
            if el[0] == "a":
                used.setdefault(el[1], set()).add(el[2])
        for a in range(len(st.anon)):
            taken = used.get(a, set())
            for k in sorted(taken):
                parts.append(_expand(f.body, st, {**env, f.var: ("a", a, k)}))
            body = _expand(f.body, st, {**env, f.var: ("a", a, len(taken))})
            if is_ex:
                parts.append(_mk("and", [_ge(a, len(taken) + 1), body]))
            else:
                parts.append(_mk("or", [_lt(a, len(taken) + 1), body]))
        return _mk("or" if is_ex else "and", parts)
    if isinstance(f, Prop):
        if free_variables(f):
            raise UnsupportedFormula(f"proportion with outer variables: {to_text(f)}")
        return ("prop", f, "in")
    if isinstance(f, NegProp):
        p = f.prop
        if free_variables(p):
            raise UnsupportedFormula(f"proportion with outer variables: {to_text(p)}")
        if p.cmp == "~":
            return _mk("or", [("prop", p, "below"), ("prop", p, "above")])
        return ("prop", p, "above" if p.cmp == "<~" else "below")
    raise TypeError(f"not in negation normal form: {f!r}")


@dataclass(frozen=True)
class _Conj:
    props: frozenset
    lower: tuple
    upper: tuple

    def merge(self, other) -> Optional["_Conj"]:
        props = self.props | other.props
        seen = {}
        for p, s in props:
            if seen.setdefault(p, s) != s:
                return None
        lower = tuple(max(a, b) for a, b in zip(self.lower, other.lower))
        upper = tuple(b if a is None else a if b is None else min(a, b)
                      for a, b in zip(self.upper, other.upper))
        for lo, hi in zip(lower, upper):
            if hi is not None and lo >= hi:
                return None
        return _Conj(props, lower, upper)

    def implies(self, other) -> bool:
        """True when every model of ``self`` is a model of ``other``."""
        if not other.props <= self.props:
            return False
        for lo, hi, olo, ohi in zip(self.lower, self.upper, other.lower, other.upper):
            if lo < olo:
                return False
            if ohi is not None and (hi is None or hi > ohi):
                return False
        return True


def _dnf(e, K) -> list:
    top = _Conj(frozenset(), (0,) * K, (None,) * K)
    if e is _TRUE:
        return [top]
    if e is _FALSE:
        return []
    kind = e[0]
    if kind == "ge":
        lower = list(top.lower)
        lower[e[1]] = e[2]
        return [_Conj(frozenset(), tuple(lower), top.upper)]
    if kind == "lt":
        upper = list(top.upper)
        upper[e[1]] = e[2]
        return [_Conj(frozenset(), top.lower, tuple(upper))]
    if kind == "prop":
        return [_Conj(frozenset([(e[1], e[2])]), top.lower, top.upper)]
    if kind == "or":
        out = {}
        for part in e[1]:
            for c in _dnf(part, K):
                out.setdefault(c, None)
                if len(out) > MAX_DISJUNCTS:
                    raise CanonicalFormTooLarge(f"more than {MAX_DISJUNCTS} disjuncts")
        return list(out)
    if kind == "and":
        acc = [top]
        for part in e[1]:
            branch = _dnf(part, K)
            nxt = {}
            for c1 in acc:
                for c2 in branch:
                    m = c1.merge(c2)
                    if m is not None:
                        nxt.setdefault(m, None)
                        if len(nxt) > MAX_DISJUNCTS:
                            raise CanonicalFormTooLarge(f"more than {MAX_DISJUNCTS} disjuncts")
            acc = list(nxt)
            if not acc:
                return []
        return acc
    raise TypeError(e)


def _drop_subsumed(conjs: list) -> list:
    if len(conjs) > 512:
        return conjs
    keep = []
    for i, c in enumerate(conjs):
        if not any(j != i and c.implies(o) and (not o.implies(c) or j < i)
                   for j, o in enumerate(conjs)):
            keep.append(c)
    return keep


def descriptions(constants, K: int):
    """All atomic descriptions of ``constants`` over ``K`` atoms."""
    for pattern in set_partitions(constants):
        for placement in itertools.product(range(K), repeat=len(pattern)):
            yield AtomicDescription(tuple(pattern), tuple(placement))


def canonicalize(kb: Formula, vocab: Vocabulary) -> CanonicalForm:
    """Disjunction of (atomic description, region, cardinality bounds) covering ``kb``."""
    problems = validate(kb, vocab)
    if problems:
        raise ValueError("invalid knowledge base: " + "; ".join(problems))
    nnf = to_nnf(kb)
    consts = tuple(c for c in vocab.constants if c in constants_of(kb))
    K = vocab.K
    out = []
    for D in descriptions(consts, K):
        st = _description_structure(vocab, D, anon=0)
        expr = _expand(nnf, st, {})
        conjs = _drop_subsumed(_dnf(expr, K))
        for b, c in enumerate(conjs):
            region = extract_region(c.props, D, vocab, c.upper)
            out.append(Disjunct(D, region, c.lower, c.upper, b))
            if len(out) > MAX_DISJUNCTS:
                raise CanonicalFormTooLarge(f"more than {MAX_DISJUNCTS} disjuncts")
    return CanonicalForm(vocab, consts, tuple(out))


def disjunct_holds(d: Disjunct, s: WorldSummary, vocab: Vocabulary, tau) -> bool:
    """Does the finite world summary ``s`` lie in disjunct ``d`` at tolerance ``tau``?"""
    D = d.description
    s_class = {c: j for j, cls in enumerate(s.pattern) for c in cls}
    for c in D.const_class:
        if s.placement[s_class[c]] != D.atom_of(c):
            return False
        for e in D.const_class:
            if (s_class[c] == s_class[e]) != (D.const_class[c] == D.const_class[e]):
                return False
    named = D.named_per_atom(vocab.K)
    for a in range(vocab.K):
        anon = s.counts[a] - named[a]
        if anon < d.lower[a] or (d.upper[a] is not None and anon >= d.upper[a]):
            return False
    return d.region.holds_on_counts(s.counts, tau)


def canonical_rank(kb: Formula) -> int:
    return quantifier_rank(kb)
