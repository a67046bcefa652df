"""Exact world counting over finite domains.

A world of size N over a unary vocabulary is determined up to a domain
permutation by how many elements fall in each atom, which constants
coincide, and the atoms their denotations occupy.  Truth of every formula in
the language is invariant under such permutations, so counting worlds only
needs one evaluation per summary, weighted by the number of worlds it stands
for.

Proportion comparisons use cross-multiplied semantics:
``[phi || psi]_x ~(i) a`` holds iff ``(a - t_i)|psi| <= |phi and psi| <= (a + t_i)|psi|``,
so an empty ``psi`` satisfies every comparison vacuously.
"""

from __future__ import annotations

import functools
import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterator, Optional

from .syntax import (
    And, Bottom, Const, Eq, Exists, ForAll, Formula, Implies, NegProp, Not, Or,
    Pred, Prop, Top, Var, Vocabulary, constants_of, tolerance_indices,
)

__all__ = [
    "Structure", "WorldSummary", "FiniteProbability", "UNDEFINED",
    "MissingToleranceError", "atom_holds", "evaluate", "eval_summary",
    "set_partitions", "compositions", "enumerate_summaries", "count_worlds",
    "pr_finite", "convergence_table", "compare_counts", "practical_max_n",
]


class MissingToleranceError(KeyError):
    pass


def atom_holds(atom: int, pred_index: int) -> bool:
    return bool((atom >> pred_index) & 1)


@functools.lru_cache(maxsize=1024)
def _band(coef: Fraction, tau: Fraction) -> tuple:
    lo, hi = coef - tau, coef + tau
    return lo.numerator, lo.denominator, hi.numerator, hi.denominator


def compare_counts(cmp: str, coef, tau, num, den) -> bool:
    """Cross-multiplied proportion test on (possibly fractional) counts."""
    if type(num) is int and type(den) is int:
        lp, lq, hp, hq = _band(Fraction(coef), Fraction(tau))
        lo_ok = lp * den <= lq * num
        hi_ok = hq * num <= hp * den
        if cmp == "~":
            return lo_ok and hi_ok
        return hi_ok if cmp == "<~" else lo_ok
    lo_ok = (coef - tau) * den <= num
    hi_ok = num <= (coef + tau) * den
    if cmp == "~":
        return lo_ok and hi_ok
    if cmp == "<~":
        return hi_ok
    return lo_ok


@dataclass(frozen=True)
class Structure:
    """Symmetry-reduced unary structure.

    ``class_atom[j]`` is the atom of the j-th named element (a class of
    constants that denote it); ``anon[a]`` is how many unnamed elements sit in
    atom ``a``.  Unnamed elements of one atom are interchangeable.
    """
    vocab: Vocabulary
    const_class: dict
    class_atom: tuple
    anon: tuple

    def __hash__(self):
        return hash((self.class_atom, self.anon, tuple(sorted(self.const_class.items()))))


# Elements: ("n", j) for named class j, ("a", atom, k) for the k-th distinct
# unnamed element of an atom introduced so far.

def _candidates(st: Structure, env: dict) -> Iterator[tuple]:
    """Elements a quantified variable may take, one per equivalence type.

    Yields ``(element, weight)``; fresh unnamed elements of an atom stand for
    all of its not-yet-mentioned members at once.
    """
    for j in range(len(st.class_atom)):
        yield ("n", j), 1
    used = {}
    for el in env.values():
        if el[0] == "a":
            used.setdefault(el[1], set()).add(el[2])
    if not used:
        for a, left in enumerate(st.anon):
            if left > 0:
                yield ("a", a, 0), left
        return
    for a in range(len(st.anon)):
        taken = used.get(a, ())
        for k in sorted(taken):
            yield ("a", a, k), 1
        left = st.anon[a] - len(taken)
        if left > 0:
            yield ("a", a, len(taken)), left


def _element(st: Structure, t, env):
    if isinstance(t, Var):
        return env[t.name]
    return ("n", st.const_class[t.name])


def _atom_of(st: Structure, el) -> int:
    return st.class_atom[el[1]] if el[0] == "n" else el[1]


def evaluate(f: Formula, st: Structure, tau=None, env=None,
             prop_eval: Optional[Callable] = None) -> bool:
    """Truth of ``f`` in ``st``.

    Proportions are counted exactly against ``tau`` unless ``prop_eval`` is
    given, in which case ``prop_eval(prop, env)`` decides them.
    """
    env = {} if env is None else env
    return _ev(f, st, tau, env, prop_eval)


def _ev(f, st, tau, env, prop_eval):
    if isinstance(f, Pred):
        el = _element(st, f.term, env)
        return (_atom_of(st, el) >> st.vocab.pred_index(f.predicate)) & 1 == 1
    if isinstance(f, Eq):
        return _element(st, f.left, env) == _element(st, f.right, env)
    if isinstance(f, Not):
        return not _ev(f.body, st, tau, env, prop_eval)
    if isinstance(f, And):
        return all(_ev(a, st, tau, env, prop_eval) for a in f.args)
    if isinstance(f, Or):
        return any(_ev(a, st, tau, env, prop_eval) for a in f.args)
    if isinstance(f, Implies):
        return (not _ev(f.left, st, tau, env, prop_eval)) or _ev(f.right, st, tau, env, prop_eval)
    if isinstance(f, Top):
        return True
    if isinstance(f, Bottom):
        return False
    if isinstance(f, (ForAll, Exists)):
        want = isinstance(f, Exists)
        for el, _ in _candidates(st, env):
            inner = dict(env)
            inner[f.var] = el
            if _ev(f.body, st, tau, inner, prop_eval) == want:
                return want
        return not want
    if isinstance(f, Prop):
        if prop_eval is not None:
            return prop_eval(f, env)
        if tau is None or f.index not in tau:
            raise MissingToleranceError(f"no tolerance for index {f.index}")
        num = den = 0
        for el, w in _candidates(st, env):
            inner = dict(env)
            inner[f.var] = el
            if _ev(f.denominator, st, tau, inner, prop_eval):
                den += w
                if _ev(f.numerator, st, tau, inner, prop_eval):
                    num += w
        return compare_counts(f.cmp, f.coefficient, tau[f.index], num, den)
    if isinstance(f, NegProp):
        return not _ev(f.prop, st, tau, env, prop_eval)
    raise TypeError(f"not a formula: {f!r}")


# --- summaries -------------------------------------------------------------

@dataclass(frozen=True)
class WorldSummary:
    N: int
    counts: tuple          # elements per atom, named ones included
    pattern: tuple         # equality classes of constants, tuples of names
    placement: tuple       # atom of each class
    multiplicity: int

    def structure(self, vocab: Vocabulary) -> Structure:
        anon = list(self.counts)
        for a in self.placement:
            anon[a] -= 1
        const_class = {c: j for j, cls in enumerate(self.pattern) for c in cls}
        return Structure(vocab, const_class, tuple(self.placement), tuple(anon))


@dataclass(frozen=True)
class FiniteProbability:
    numerator: int
    denominator: int

    @property
    def defined(self) -> bool:
        return self.denominator > 0

    @property
    def value(self):
        """Exact ``Fraction``, or ``UNDEFINED`` when no world satisfies the KB."""
        if self.denominator == 0:
            return UNDEFINED
        return Fraction(self.numerator, self.denominator)

    def __float__(self):
        return float(self.value) if self.defined else math.nan


class _Undefined:
    def __repr__(self):
        return "UNDEFINED"

    __str__ = __repr__


UNDEFINED = _Undefined()


def set_partitions(items) -> Iterator[tuple]:
    """All set partitions of ``items``, blocks in first-occurrence order."""
    items = list(items)
    if not items:
        yield ()
        return
    first, rest = items[0], items[1:]
    for part in set_partitions(rest):
        yield ((first,),) + part
        for i in range(len(part)):
            yield part[:i] + ((first,) + part[i],) + part[i + 1:]


def compositions(n: int, k: int, lower=None) -> Iterator[tuple]:
    """Vectors of ``k`` naturals summing to ``n`` with optional lower bounds."""
    lower = lower or (0,) * k
    rest = n - sum(lower)
    if rest < 0:
        return

    def rec(i, left):
        if i == k - 1:
            yield (left,)
            return
        for v in range(left + 1):
            for tail in rec(i + 1, left - v):
                yield (v,) + tail

    for c in rec(0, rest):
        yield tuple(a + b for a, b in zip(c, lower))


def _multinomial(n, counts):
    out, left = 1, n
    for c in counts:
        out *= math.comb(left, c)
        left -= c
    return out


def enumerate_summaries(vocab: Vocabulary, N: int, pattern=None) -> Iterator[WorldSummary]:
    """Every summary of size-``N`` worlds for one equality pattern of the constants.

    ``pattern`` defaults to all constants distinct.
    """
    if N < 1:
        raise ValueError("domain size must be at least 1")
    if pattern is None:
        pattern = tuple((c,) for c in vocab.constants)
    K = vocab.K
    m = len(pattern)
    for placement in itertools.product(range(K), repeat=m):
        named = [0] * K
        for a in placement:
            named[a] += 1
        for counts in compositions(N, K, named):
            mult = _multinomial(N, counts)
            for a in range(K):
                if named[a]:
                    mult *= math.perm(counts[a], named[a])
            yield WorldSummary(N, counts, tuple(pattern), tuple(placement), mult)


def eval_summary(f: Formula, s: WorldSummary, tau, vocab: Vocabulary) -> bool:
    """Truth of closed ``f`` in every world summarized by ``s``."""
    _check_tau(f, tau)
    tau = {i: Fraction(v) for i, v in (tau or {}).items()}
    return evaluate(f, s.structure(vocab), tau)


def _check_tau(f, tau):
    missing = tolerance_indices(f) - set(tau or {})
    if missing:
        raise MissingToleranceError(f"no tolerance for indices {sorted(missing)}")


def _all_summaries(vocab, N):
    for pattern in set_partitions(vocab.constants):
        yield from enumerate_summaries(vocab, N, pattern)


def count_worlds(theta: Formula, vocab: Vocabulary, N: int, tau=None) -> int:
    """Number of size-``N`` worlds satisfying ``theta`` (constants over all equality patterns)."""
    _check_tau(theta, tau)
    tau = {i: Fraction(v) for i, v in (tau or {}).items()}
    total = 0
    for s in _all_summaries(vocab, N):
        if evaluate(theta, s.structure(vocab), tau):
            total += s.multiplicity
    return total


def pr_finite(phi: Formula, kb: Formula, vocab: Vocabulary, N: int, tau=None) -> FiniteProbability:
    """Exact ``#worlds(phi and KB) / #worlds(KB)`` at domain size ``N``."""
    _check_tau(phi, tau)
    _check_tau(kb, tau)
    tau = {i: Fraction(v) for i, v in (tau or {}).items()}
    num = den = 0
    for s in _all_summaries(vocab, N):
        st = s.structure(vocab)
        if evaluate(kb, st, tau):
            den += s.multiplicity
            if evaluate(phi, st, tau):
                num += s.multiplicity
    return FiniteProbability(num, den)


def convergence_table(phi, kb, vocab, tau, Ns) -> list:
    """Rows ``(N, exact value or UNDEFINED, float value)`` for ascending ``Ns``."""
    Ns = list(Ns)
    if Ns != sorted(Ns):
        raise ValueError("domain sizes must be ascending")
    rows = []
    for N in Ns:
        p = pr_finite(phi, kb, vocab, N, tau)
        rows.append((N, p.value, float(p)))
    return rows


# Bounds the CLI enforces: beyond them the composition count outgrows desk budgets.
_MAX_N = {2: 200, 4: 60, 8: 20, 16: 6}


def practical_max_n(vocab: Vocabulary) -> int:
    bound = _MAX_N.get(vocab.K, 0)
    if len(vocab.constants) > 2:
        bound = min(bound, 12)
    return bound


def constants_needed(*formulas) -> set:
    out = set()
    for f in formulas:
        out |= constants_of(f)
    return out
