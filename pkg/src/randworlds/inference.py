"""Degrees of belief in the limit of large domains.

Worlds satisfying a KB concentrate, as the domain grows, around the
maximum-entropy proportion vectors of the KB's canonical disjuncts.  Only
disjuncts of globally maximal entropy matter.  Within them:

* named elements land in atoms with probability proportional to the
  atom's proportion at the maximizer,
* first-order sentences are decided by a small canonical structure (0-1 law),
* proportion statements are decided by the maximizer itself.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import numpy as np

from .canonical import (
    AtomicDescription, CanonicalForm, Disjunct, UnsupportedFormula, atom_label,
    canonicalize, formula_to_atom_set,
)
from .finite import Structure, evaluate
from .maxent import DEFAULT_GRID, TIE_TOL, InfeasibleRegion, LimitMaxEnt, limit_maxent
from .syntax import (
    And, Formula, Prop, Top, Vocabulary, constants_of, free_variables, has_proportion,
    quantifier_rank, to_text, validate,
)

__all__ = [
    "POINT", "ZERO_ONE", "TIE_INTERVAL", "UNDEFINED", "DEGENERATE_KB",
    "ILL_CONDITIONED_LIMIT", "Belief", "Winner", "WinnerSet", "LARGE",
    "compute01", "winners", "compute_pr_inf", "rw_entails", "as_rational",
]

POINT, ZERO_ONE, TIE_INTERVAL, UNDEFINED = "POINT", "ZERO_ONE", "TIE_INTERVAL", "UNDEFINED"
DEGENERATE_KB, ILL_CONDITIONED_LIMIT = "DEGENERATE_KB", "ILL_CONDITIONED_LIMIT"

LARGE = "large"          # atom holds a positive fraction of a large domain
_POSITIVE = 1e-12        # maximizer coordinates above this count as positive
_QUERY_TOL = 1e-9        # closed-boundary tolerance for proportions in queries


def as_rational(x: float, tol: float = 1e-9, max_den: int = 1000) -> Optional[Fraction]:
    """Small-denominator rational within ``tol`` of ``x``, if there is one."""
    q = Fraction(x).limit_denominator(max_den)
    return q if abs(float(q) - x) <= tol else None


@dataclass
class Belief:
    kind: str
    value: Optional[float] = None
    lo: Optional[float] = None
    hi: Optional[float] = None
    reason: Optional[str] = None
    diagnostics: dict = field(default_factory=dict)

    @property
    def rational(self) -> Optional[Fraction]:
        return None if self.value is None else as_rational(self.value)

    def __str__(self):
        if self.kind in (POINT, ZERO_ONE):
            return f"{self.kind} {self.value:g}"
        if self.kind == TIE_INTERVAL:
            return f"{self.kind} {self.lo:g} {self.hi:g}"
        return f"{self.kind} {self.reason}"


def compute01(phi: Formula, active, named: Optional[AtomicDescription] = None,
              vocab: Optional[Vocabulary] = None) -> int:
    """Limit probability (0 or 1) of first-order ``phi`` when exactly ``active`` atoms are large.

    ``named`` places the constants of ``phi``.  The verdict is read off a
    structure with ``quantifier_rank(phi) + #classes`` unnamed elements in
    every active atom and none elsewhere.
    """
    if vocab is None:
        raise ValueError("a vocabulary is required")
    if has_proportion(phi):
        raise ValueError("compute01 takes first-order sentences only")
    active = frozenset(active)
    if not active:
        raise ValueError("at least one atom must be active")
    named = named or AtomicDescription((), ())
    missing = constants_of(phi) - set(named.const_class)
    if missing:
        raise ValueError(f"constants without a placement: {sorted(missing)}")
    for a in named.class_atom:
        if a not in active:
            raise ValueError(f"named element placed in inactive atom {atom_label(vocab, a)}")
    m = quantifier_rank(phi) + len(named.pattern)
    anon = tuple(m if a in active else 0 for a in range(vocab.K))
    st = Structure(vocab, named.const_class, tuple(named.class_atom), anon)
    return int(evaluate(phi, st))


@dataclass
class Winner:
    index: int
    disjunct: Disjunct
    limit: LimitMaxEnt
    cardinalities: tuple     # per atom: LARGE or a small unnamed count

    @property
    def point(self) -> np.ndarray:
        return self.limit.point

    @property
    def value(self) -> float:
        return self.limit.value

    @property
    def active(self) -> frozenset:
        return frozenset(a for a, c in enumerate(self.cardinalities) if c == LARGE)

    @property
    def weight(self) -> float:
        """Product of the maximizer's proportions over the atoms of named classes."""
        return float(np.prod([self.point[a] for a in self.disjunct.description.class_atom]))


@dataclass
class WinnerSet:
    status: str                    # "ok", DEGENERATE_KB or ILL_CONDITIONED_LIMIT
    winners: list
    best: Optional[float]
    solves: dict                   # disjunct index -> LimitMaxEnt or None
    candidates: list = field(default_factory=list)


def _cardinalities(d: Disjunct, lim: LimitMaxEnt) -> tuple:
    small = lim.smallest_grid_result()
    support = small.support if small is not None else lim.closure.support
    out = []
    for a in range(len(d.upper)):
        if d.upper[a] is not None:
            out.append(d.upper[a] - 1)
        elif support[a]:
            out.append(LARGE)
        else:
            out.append(d.lower[a])
    return tuple(out)


def winners(cf: CanonicalForm, grid=DEFAULT_GRID) -> WinnerSet:
    """Disjuncts of maximal limiting entropy.

    Closure values within ``TIE_TOL`` of the best are candidates.  A
    candidate that is beaten by more than ``TIE_TOL`` at every grid tolerance
    is dropped: at each fixed tolerance it carries a vanishing share of worlds.
    """
    solves, cache = {}, {}
    for i, d in enumerate(cf.disjuncts):
        key = d.region.key()
        if key not in cache:
            try:
                cache[key] = limit_maxent(d.region, grid)
            except InfeasibleRegion:
                cache[key] = None
        solves[i] = cache[key]
    feasible = [i for i, s in solves.items() if s is not None]
    if not feasible:
        return WinnerSet(DEGENERATE_KB, [], None, solves)
    best = max(solves[i].value for i in feasible)
    cands = [i for i in feasible if solves[i].value >= best - TIE_TOL]
    if any(not solves[i].agreement for i in cands):
        return WinnerSet(ILL_CONDITIONED_LIMIT, [], best, solves, cands)

    def grid_values(i):
        return [r.value if r is not None else -np.inf for r in solves[i].grid_results]

    top = np.max([grid_values(i) for i in cands], axis=0)
    keep = [i for i in cands
            if any(v >= t - TIE_TOL for v, t in zip(grid_values(i), top))]
    ws = [Winner(i, cf.disjuncts[i], solves[i], _cardinalities(cf.disjuncts[i], solves[i]))
          for i in keep]
    return WinnerSet("ok", ws, best, solves, cands)


def _point_prop_eval(vocab, D, u, notes):
    def prop_eval(p: Prop, env):
        if free_variables(p):
            raise UnsupportedFormula(f"proportion with outer variables: {to_text(p)}")
        num_f = p.numerator if isinstance(p.denominator, Top) else And(p.numerator, p.denominator)
        n_set, _ = formula_to_atom_set(num_f, p.var, D, vocab)
        num = float(sum(u[a] for a in n_set))
        if isinstance(p.denominator, Top):
            den = 1.0
        else:
            d_set, _ = formula_to_atom_set(p.denominator, p.var, D, vocab)
            den = float(sum(u[a] for a in d_set))
        gap = num - float(p.coefficient) * den
        if abs(gap) <= _QUERY_TOL and p.cmp != "~":
            notes.add(f"query proportion on its boundary, taken as satisfied: {to_text(p)}")
        if p.cmp == "~":
            return abs(gap) <= _QUERY_TOL
        if p.cmp == "<~":
            return gap <= _QUERY_TOL
        return gap >= -_QUERY_TOL
    return prop_eval


def _group(ws: list) -> list:
    groups = []
    for w in ws:
        for g in groups:
            rep = g[0]
            if (rep.cardinalities == w.cardinalities
                    and np.max(np.abs(rep.point - w.point)) <= TIE_TOL):
                g.append(w)
                break
        else:
            groups.append([w])
    return groups


def _description_order(D: AtomicDescription, u) -> tuple:
    """(#classes in positive atoms, product of their proportions).

    Each class in a positive atom contributes a factor of order N to the
    world count, so descriptions with fewer such classes are negligible.
    """
    pos = [u[a] for a in D.class_atom if u[a] > _POSITIVE]
    return len(pos), float(np.prod(pos)) if pos else 1.0


def _group_probability(group, phi, vocab, new_consts, notes) -> float:
    u = group[0].point
    members = {}
    for w in group:
        members.setdefault(w.disjunct.description, w)
    orders = {D: _description_order(D, u) for D in members}
    top = max(o[0] for o in orders.values())
    positive = [a for a in range(vocab.K) if u[a] > _POSITIVE]
    qr = quantifier_rank(phi)
    yes = total = 0.0
    for D, w in members.items():
        n_pos, weight = orders[D]
        if n_pos < top:
            continue
        classes = len(D.pattern) + len(new_consts)
        m = qr + classes
        anon = tuple(m if c == LARGE else c for c in w.cardinalities)
        for placement in itertools.product(positive, repeat=len(new_consts)):
            ext = AtomicDescription(D.pattern + tuple((c,) for c in new_consts),
                                    D.class_atom + tuple(placement))
            wt = weight * float(np.prod([u[a] for a in placement]))
            st = Structure(vocab, ext.const_class, ext.class_atom, anon)
            holds = evaluate(phi, st, prop_eval=_point_prop_eval(vocab, ext, u, notes))
            total += wt
            if holds:
                yes += wt
    return yes / total


def compute_pr_inf(phi: Formula, kb: Formula, vocab: Vocabulary, grid=DEFAULT_GRID) -> Belief:
    """Random-worlds degree of belief in ``phi`` given ``kb``."""
    for f, what in ((phi, "query"), (kb, "knowledge base")):
        problems = validate(f, vocab)
        if problems:
            raise ValueError(f"invalid {what}: " + "; ".join(problems))
    cf = canonicalize(kb, vocab)
    diag = {"tau_grid": list(grid), "disjuncts": len(cf)}
    if cf.empty:
        return Belief(UNDEFINED, reason=DEGENERATE_KB, diagnostics=diag)
    ws = winners(cf, grid)
    diag["best_entropy"] = ws.best
    diag["candidates"] = ws.candidates
    if ws.status != "ok":
        return Belief(UNDEFINED, reason=ws.status, diagnostics=diag)
    new_consts = [c for c in vocab.constants if c in constants_of(phi) and c not in cf.constants]
    notes = set()
    groups = _group(ws.winners)
    probs = [_group_probability(g, phi, vocab, new_consts, notes) for g in groups]
    diag["winners"] = [
        {"disjunct": w.index, "description": w.disjunct.description.describe(vocab),
         "entropy": w.value, "point": [float(x) for x in w.point],
         "active": sorted(w.active), "group": gi}
        for gi, g in enumerate(groups) for w in g
    ]
    diag["group_probabilities"] = probs
    diag["notes"] = sorted(notes)
    lo, hi = min(probs), max(probs)
    if hi - lo > TIE_TOL:
        return Belief(TIE_INTERVAL, lo=lo, hi=hi, diagnostics=diag)
    p = min(max(probs[0], 0.0), 1.0)
    zero_one_law = not has_proportion(kb) and not has_proportion(phi) and not constants_of(phi)
    if zero_one_law and (p <= 1e-12 or p >= 1 - 1e-12):
        return Belief(ZERO_ONE, value=float(round(p)), diagnostics=diag)
    return Belief(POINT, value=p, diagnostics=diag)


def rw_entails(kb: Formula, phi: Formula, vocab: Vocabulary, grid=DEFAULT_GRID) -> bool:
    """Random-worlds entailment: the degree of belief in ``phi`` is 1."""
    b = compute_pr_inf(phi, kb, vocab, grid)
    if b.kind in (POINT, ZERO_ONE):
        return abs(b.value - 1.0) <= TIE_TOL
    return False
