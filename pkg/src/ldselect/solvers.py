"""Polytope machinery: an exact LP oracle and an away-step Frank-Wolfe loop.

Polytopes are ``{x >= 0 : A_ub x <= b_ub, A_eq x = b_eq}``.  The LP oracle is
HiGHS' dual simplex, so every answer is a vertex.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq, linprog, lsq_linear

log = logging.getLogger(__name__)

_HIGHS = {
    "primal_feasibility_tolerance": 1e-10,
    "dual_feasibility_tolerance": 1e-10,
}


@dataclass(frozen=True, eq=False)
class Polytope:
    A_ub: np.ndarray
    b_ub: np.ndarray
    A_eq: np.ndarray
    b_eq: np.ndarray

    @property
    def dim(self) -> int:
        return self.A_eq.shape[1]

    def with_equalities(self, A, b) -> "Polytope":
        A = np.atleast_2d(np.asarray(A, dtype=float))
        return Polytope(self.A_ub, self.b_ub, np.vstack([self.A_eq, A]), np.concatenate([self.b_eq, np.ravel(b)]))

    def violation(self, x: np.ndarray) -> float:
        v = max(0.0, float(-x.min()))
        if self.A_ub.size:
            v = max(v, float((self.A_ub @ x - self.b_ub).max()))
        if self.A_eq.size:
            v = max(v, float(np.abs(self.A_eq @ x - self.b_eq).max()))
        return v


def lp_vertex(poly: Polytope, c: np.ndarray) -> np.ndarray | None:
    """Vertex minimising ``c . x`` over ``poly``; ``None`` if the polytope is empty."""
    res = linprog(
        c,
        A_ub=poly.A_ub if poly.A_ub.size else None,
        b_ub=poly.b_ub if poly.A_ub.size else None,
        A_eq=poly.A_eq,
        b_eq=poly.b_eq,
        bounds=(0, None),
        method="highs-ds",
        options=_HIGHS,
    )
    if res.status == 2:
        return None
    if res.status != 0:
        raise RuntimeError(f"LP oracle failed: {res.message}")
    return np.clip(res.x, 0.0, None)


def is_feasible(poly: Polytope) -> bool:
    return lp_vertex(poly, np.zeros(poly.dim)) is not None


@dataclass
class FWResult:
    x: np.ndarray
    value: float
    gap: float
    iterations: int
    converged: bool
    history: list = field(default_factory=list)


def _line_search(dderiv, gmax: float) -> float:
    """Minimiser on ``[0, gmax]`` of a convex function given its derivative."""
    d0 = dderiv(0.0)
    if d0 >= 0.0:
        return 0.0
    d1 = dderiv(gmax)
    if d1 <= 0.0:
        return gmax
    return brentq(dderiv, 0.0, gmax, xtol=1e-16, rtol=1e-15, maxiter=200)


def frank_wolfe(fun, grad, poly: Polytope, x0: np.ndarray, tol: float = 1e-12, max_iter: int = 5000) -> FWResult:
    """Minimise a convex ``fun`` over ``poly`` with away steps and exact line search.

    ``x0`` must be a vertex of ``poly``.  The returned ``gap`` is the Frank-Wolfe
    duality gap, an upper bound on ``fun(x) - min fun``.
    """
    x = x0.astype(float).copy()
    active = {x.tobytes(): [x.copy(), 1.0]}
    gap = np.inf
    it = 0
    for it in range(1, max_iter + 1):
        g = grad(x)
        s = lp_vertex(poly, g)
        gap = float(g @ (x - s))
        if gap <= tol:
            break
        keys = list(active)
        away_key = max(keys, key=lambda k: float(g @ active[k][0]))
        v, wv = active[away_key]
        d_fw = s - x
        d_aw = x - v
        if len(keys) > 1 and g @ d_aw < g @ d_fw:
            d, gmax, away = d_aw, wv / (1.0 - wv), True
        else:
            d, gmax, away = d_fw, 1.0, False
        step = _line_search(lambda t: float(grad(x + t * d) @ d), gmax)
        if step <= 0.0:
            if away:
                # drop a useless away vertex and retry with the FW direction
                step = _line_search(lambda t: float(grad(x + t * d_fw) @ d_fw), 1.0)
                d, away = d_fw, False
            if step <= 0.0:
                break
        x = x + step * d
        if away:
            for k in keys:
                active[k][1] *= 1.0 + step
            active[away_key][1] -= step
            if active[away_key][1] <= 1e-15 or step >= gmax:
                del active[away_key]
        else:
            for k in keys:
                active[k][1] *= 1.0 - step
            key = s.tobytes()
            if key in active:
                active[key][1] += step
            else:
                active[key] = [s, step]
            if step >= 1.0:
                active = {key: [s, 1.0]}
        x = np.clip(x, 0.0, None)
    value = float(fun(x))
    return FWResult(x, value, gap, it, gap <= tol)


def kkt_residual(poly: Polytope, x: np.ndarray, ascent: np.ndarray, active_tol: float = 1e-8) -> float:
    """Stationarity residual for ``max`` of a concave function with gradient ``ascent`` at ``x``.

    Finds multipliers ``mu >= 0`` on active inequality rows, free ``nu`` on
    equalities and ``rho >= 0`` on active bounds minimising
    ``|ascent - A_ub' mu - A_eq' nu + rho|`` and returns its sup-norm.
    """
    cols, lo, hi = [], [], []
    if poly.A_ub.size:
        slack = poly.b_ub - poly.A_ub @ x
        for row, sl in zip(poly.A_ub, slack):
            if sl <= active_tol * max(1.0, np.abs(row).max()):
                cols.append(row)
                lo.append(0.0)
                hi.append(np.inf)
    for row in poly.A_eq:
        cols.append(row)
        lo.append(-np.inf)
        hi.append(np.inf)
    for i in np.flatnonzero(x <= active_tol):
        e = np.zeros(x.size)
        e[i] = -1.0
        cols.append(e)
        lo.append(0.0)
        hi.append(np.inf)
    M = np.array(cols).T
    res = lsq_linear(M, ascent, bounds=(lo, hi), method="bvls", tol=1e-14, lsmr_tol=None)
    return float(np.abs(M @ res.x - ascent).max())
