"""Entropy maximization over polytopes in the probability simplex.

The solver reduces the region to its relative interior first (linear
programs find the atoms that can be positive and the inequalities that are
tight everywhere), then runs a log-barrier Newton method on the remaining
inequalities and polishes the result with an equality-constrained Newton
solve on the active set.  Entropy is its own barrier at ``u_a = 0`` because
its gradient diverges there.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.linalg import null_space
from scipy.optimize import linprog

__all__ = [
    "FEASIBILITY_TOL", "VALUE_TOL", "TIE_TOL", "AGREEMENT_TOL", "DEFAULT_GRID",
    "InfeasibleRegion", "MaxEntResult", "LimitMaxEnt", "entropy",
    "entropy_gradient", "maximize_entropy", "solve_arrays", "limit_maxent",
    "region_arrays", "projected_gradient_norm",
]

FEASIBILITY_TOL = 1e-10
VALUE_TOL = 1e-9
TIE_TOL = 1e-9
AGREEMENT_TOL = 1e-6
DEFAULT_GRID = (1e-2, 1e-3, 1e-4)

_ZERO = 1e-10          # LP optimum below this: coordinate or slack is identically 0
_ACTIVE = 1e-9         # slack below this at the barrier solution: constraint is active
_LP_OPTIONS = {"primal_feasibility_tolerance": 1e-10, "dual_feasibility_tolerance": 1e-10}


class InfeasibleRegion(ValueError):
    pass


def entropy(u) -> float:
    """Shannon entropy in nats, with ``0 ln 0 = 0``."""
    u = np.asarray(u, dtype=float)
    if np.any(u < -1e-12):
        raise ValueError("negative coordinate")
    if abs(u.sum() - 1.0) > 1e-9:
        raise ValueError("point is not on the simplex")
    pos = u[u > 0]
    return float(-np.sum(pos * np.log(pos))) + 0.0   # no negative zero


def entropy_gradient(u) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    if np.any(u <= 0):
        raise ValueError("gradient is unbounded on the simplex boundary")
    return -(1.0 + np.log(u))


@dataclass
class MaxEntResult:
    point: np.ndarray
    value: float
    residual: float
    boundary: bool
    support: np.ndarray = field(repr=False)   # atoms that can be positive in the region
    active: tuple = ()                        # inequality rows tight at the optimum


@dataclass
class LimitMaxEnt:
    value: float
    point: np.ndarray
    agreement: bool
    grid: tuple
    grid_results: tuple
    extrapolated: Optional[float]
    closure: MaxEntResult

    def smallest_grid_result(self) -> Optional[MaxEntResult]:
        for tau, r in sorted(zip(self.grid, self.grid_results)):
            if r is not None:
                return r
        return None


def _tau_map(region, tau):
    idx = region.indices()
    if tau is None:
        return {i: 0 for i in idx}
    if isinstance(tau, dict):
        missing = idx - set(tau)
        if missing:
            raise KeyError(f"no tolerance for indices {sorted(missing)}")
        return tau
    return {i: tau for i in idx}


def region_arrays(region, tau=None):
    """``(A_ub, b_ub, strict, A_eq, b_eq)`` for ``region`` at tolerance ``tau``.

    ``tau`` is a map from index to value, a single value for every index, or
    ``None`` for the zero-tolerance closure.
    """
    tau = _tau_map(region, tau)
    K = region.K
    ub, bu, strict, eq, be = [], [], [], [], []
    for c in region.constraints:
        if c.decided is not None:
            if not c.decided:
                raise InfeasibleRegion(c.provenance)
            continue
        a, b = c.at(tau)
        if c.relation == "=":
            eq.append(a)
            be.append(b)
        else:
            ub.append(a)
            bu.append(b)
            strict.append(c.strict)
    return (np.array(ub, dtype=float).reshape(-1, K), np.array(bu, dtype=float),
            np.array(strict, dtype=bool), np.array(eq, dtype=float).reshape(-1, K),
            np.array(be, dtype=float))


def _lp(c, A_ub, b_ub, A_eq, b_eq):
    res = linprog(c, A_ub=A_ub if len(A_ub) else None, b_ub=b_ub if len(A_ub) else None,
                  A_eq=A_eq, b_eq=b_eq, bounds=(0, None), method="highs", options=_LP_OPTIONS)
    return res


def _barrier(x0, Z, G, h, t_final=1e14):
    """Minimize sum x ln x subject to G x < h along x0 + Z y."""
    y = np.zeros(Z.shape[1])

    def state(y):
        x = x0 + Z @ y
        s = h - G @ x
        return x, s

    def obj(x, s, t):
        if np.any(x <= 0) or np.any(s <= 0):
            return math.inf
        return t * float(np.sum(x * np.log(x))) - float(np.sum(np.log(s)))

    m = len(h)
    t = 1.0 if m else t_final
    while True:
        for _ in range(200):
            x, s = state(y)
            gx = t * (np.log(x) + 1.0)
            Hx = t * np.diag(1.0 / x)
            if m:
                gx = gx + G.T @ (1.0 / s)
                Hx = Hx + G.T @ np.diag(1.0 / s ** 2) @ G
            gy = Z.T @ gx
            Hy = Z.T @ Hx @ Z
            try:
                dy = -np.linalg.solve(Hy, gy)
            except np.linalg.LinAlgError:
                dy = -np.linalg.lstsq(Hy, gy, rcond=None)[0]
            dec = -float(gy @ dy)
            if dec / 2 <= 1e-15:
                break
            f0 = obj(x, s, t)
            step = 1.0
            while step > 1e-16:
                xn, sn = state(y + step * dy)
                fn = obj(xn, sn, t)
                if fn <= f0 - 0.25 * step * dec:
                    break
                step *= 0.5
            else:
                break
            y = y + step * dy
        if not m or m / t < 1e-14 or t >= t_final:
            break
        t *= 10.0
    return x0 + Z @ y


def _polish(x, M, r):
    """Newton ascent of entropy on ``{M x = r}`` from a nearby point."""
    if len(M):
        x = x - np.linalg.pinv(M) @ (M @ x - r)
        Z = null_space(M)
    else:
        Z = np.eye(len(x))
    if np.any(x <= 0):
        return None
    for _ in range(100):
        g = -(np.log(x) + 1.0)
        gz = Z.T @ g
        if Z.shape[1] == 0 or np.linalg.norm(gz) < 1e-15:
            break
        Hz = Z.T @ np.diag(1.0 / x) @ Z
        dz = np.linalg.solve(Hz, gz)
        dx = Z @ dz
        step = 1.0
        h0 = -float(np.sum(x * np.log(x)))
        while step > 1e-16:
            xn = x + step * dx
            if np.all(xn > 0) and -float(np.sum(xn * np.log(xn))) >= h0 - 1e-16:
                break
            step *= 0.5
        else:
            break
        x = xn
        if step * np.linalg.norm(dx) < 1e-17:
            break
    return x


def solve_arrays(K, A_ub, b_ub, A_eq, b_eq, strict=None, start=None) -> MaxEntResult:
    """Maximize entropy on ``{u in simplex : A_ub u <= b_ub, A_eq u = b_eq}``."""
    A_ub = np.asarray(A_ub, dtype=float).reshape(-1, K)
    b_ub = np.asarray(b_ub, dtype=float)
    A_eq = np.vstack([np.asarray(A_eq, dtype=float).reshape(-1, K), np.ones(K)])
    b_eq = np.append(np.asarray(b_eq, dtype=float), 1.0)
    strict = np.zeros(len(b_ub), dtype=bool) if strict is None else np.asarray(strict, dtype=bool)

    first = _lp(np.zeros(K), A_ub, b_ub, A_eq, b_eq)
    if first.status == 2:
        raise InfeasibleRegion("region is empty")
    if first.status != 0:
        raise RuntimeError(f"linear program failed: {first.message}")
    points = [first.x]
    support = np.zeros(K, dtype=bool)
    for i in range(K):
        c = np.zeros(K)
        c[i] = -1.0
        res = _lp(c, A_ub, b_ub, A_eq, b_eq)
        if res.status == 0 and -res.fun > _ZERO:
            support[i] = True
            points.append(res.x)
    implicit = np.zeros(len(b_ub), dtype=bool)
    for k in range(len(b_ub)):
        res = _lp(A_ub[k], A_ub, b_ub, A_eq, b_eq)
        slack = b_ub[k] - res.fun if res.status == 0 else 0.0
        if slack <= _ZERO * (1.0 + np.abs(A_ub[k]).sum()):
            implicit[k] = True
        else:
            points.append(res.x)
    interior = np.mean(points, axis=0)

    S = np.flatnonzero(support)
    E = np.vstack([A_eq[:, S], A_ub[implicit][:, S]])
    f = np.concatenate([b_eq, b_ub[implicit]])
    keep = ~implicit & (np.abs(A_ub[:, S]).sum(axis=1) > 0) if len(b_ub) else implicit
    G, h = A_ub[keep][:, S], b_ub[keep]
    rows = np.flatnonzero(keep)

    x0 = interior[S]
    x0 = x0 - np.linalg.pinv(E) @ (E @ x0 - f)
    if start is not None:
        cand = np.asarray(start, dtype=float)[S]
        if (np.all(cand > 0) and np.all(h - G @ cand > 0)
                and np.abs(E @ cand - f).max() < 1e-12):
            x0 = cand
    Z = null_space(E)
    x = _barrier(x0, Z, G, h) if Z.shape[1] else x0

    slack = h - G @ x
    act = slack <= _ACTIVE
    M = np.vstack([E, G[act]])
    r = np.concatenate([f, h[act]])
    xp = _polish(x.copy(), M, r)
    if xp is not None:
        g = -(np.log(xp) + 1.0)
        mult = np.linalg.lstsq(M.T, g, rcond=None)[0][len(f):]
        ok = (np.all(h[~act] - G[~act] @ xp >= -1e-13) and np.all(mult >= -1e-9)
              and entropy_of(xp) >= entropy_of(x) - 1e-13)
        if ok:
            x = xp

    u = np.zeros(K)
    u[S] = x
    u = np.clip(u, 0.0, None)
    resid = _residual(u, A_ub, b_ub, A_eq, b_eq)
    slack_all = b_ub - A_ub @ u
    boundary = bool(np.any(strict & (np.abs(slack_all) <= 1e-9) & (np.abs(A_ub).sum(axis=1) > 0)))
    active = tuple(int(k) for k in rows[act]) + tuple(int(k) for k in np.flatnonzero(implicit))
    return MaxEntResult(u, entropy_of(u), resid, boundary, support, tuple(sorted(active)))


def entropy_of(x) -> float:
    x = x[x > 0]
    return float(-np.sum(x * np.log(x))) + 0.0


def _residual(u, A_ub, b_ub, A_eq, b_eq) -> float:
    r = [float(np.max(np.abs(A_eq @ u - b_eq)))]
    if len(b_ub):
        r.append(float(np.max(np.clip(A_ub @ u - b_ub, 0.0, None))))
    r.append(float(np.max(np.clip(-u, 0.0, None))))
    return max(r)


def maximize_entropy(region, tau=None, start=None) -> MaxEntResult:
    """Maximum-entropy point of ``region`` (strict constraints taken as closed).

    Raises ``InfeasibleRegion`` when the closed region is empty.
    """
    A_ub, b_ub, strict, A_eq, b_eq = region_arrays(region, tau)
    return solve_arrays(region.K, A_ub, b_ub, A_eq, b_eq, strict, start)


def projected_gradient_norm(region, tau, result: MaxEntResult) -> float:
    """Norm of the entropy gradient projected onto the active constraints' null space."""
    A_ub, b_ub, _, A_eq, b_eq = region_arrays(region, tau)
    K = region.K
    S = np.flatnonzero(result.point > 0)
    rows = [np.ones(K)] + list(A_eq)
    rows += [A_ub[k] for k in result.active]
    M = np.array(rows)[:, S]
    g = entropy_gradient(result.point[S])
    Z = null_space(M)
    return float(np.linalg.norm(Z.T @ g)) if Z.shape[1] else 0.0


def limit_maxent(region, grid=DEFAULT_GRID) -> LimitMaxEnt:
    """Solve at each grid tolerance and at the closure; check they agree.

    The grid maximizers are extrapolated linearly to tolerance 0 from the two
    smallest feasible grid points; the entropy of the extrapolated point must
    match the closure value within ``AGREEMENT_TOL``.
    """
    grid = tuple(sorted(grid, reverse=True))
    closure = maximize_entropy(region, None)
    results = []
    for tau in grid:
        try:
            results.append(maximize_entropy(region, tau))
        except InfeasibleRegion:
            results.append(None)
    feasible = sorted((t, r) for t, r in zip(grid, results) if r is not None)
    extrap = None
    if len(feasible) >= 2:
        (t1, r1), (t2, r2) = feasible[0], feasible[1]
        p = r1.point - t1 * (r2.point - r1.point) / (t2 - t1)
        p = np.clip(p, 0.0, None)
        extrap = entropy_of(p / p.sum())
    elif len(feasible) == 1:
        extrap = feasible[0][1].value
    agreement = extrap is not None and abs(extrap - closure.value) <= AGREEMENT_TOL
    return LimitMaxEnt(closure.value, closure.point, agreement, grid, tuple(results),
                       extrap, closure)
