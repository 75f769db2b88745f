"""Compression exponents of selected string sets.

The limit sets of occupancy measures are polytopes.  Pair (and block) measures
of long strings are shift-invariant: the first and last marginals of a pair
measure differ by at most ``2/(n-1)``, so every limit point is balanced.  The
builders below therefore always carry the balance equalities alongside the
utility and information constraints.

Two convex programs are solved over these sets:

* ``gamma = sup H(y)``, the growth rate of the number of selected strings when
  storage is counted uniformly;
* ``kappa = -inf Pi*(z)``, the decay rate of the storage probability of the
  selected set under a Markov storage chain.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import ldr
from . import markov as mk
from .empirical import WeightSpec, additive
from .errors import SpecError
from .markov import TransitionModel
from .solvers import Polytope, frank_wolfe, is_feasible, kkt_residual, lp_vertex

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
AT_BOUNDARY = "at_boundary"
AT_UNIFORM = "at_uniform"

KKT_TOL = 1e-6


@dataclass(frozen=True, eq=False)
class ConstrainedSet:
    """Linear constraint system over a simplex of (possibly lifted) measures.

    ``constraints`` holds the utility/information inequalities as
    ``(coeffs, bound, sense)``; ``equalities`` holds balance rows and forced
    zeros.  ``image`` maps the variable to the single-symbol marginal ``y`` on
    which the objective acts.
    """

    name: str
    ell: int
    dimension: int
    constraints: list
    equalities: list
    image: np.ndarray
    lifted: bool

    def polytope(self) -> Polytope:
        ub_rows, ub_rhs = [], []
        for c, b, sense in self.constraints:
            c = np.asarray(c, dtype=float)
            if sense == "<=":
                ub_rows.append(c)
                ub_rhs.append(b)
            elif sense == ">=":
                ub_rows.append(-c)
                ub_rhs.append(-b)
            else:
                raise SpecError(f"unknown constraint sense {sense!r}")
        eq_rows = [np.ones(self.dimension)] + [np.asarray(c, dtype=float) for c, _ in self.equalities]
        eq_rhs = [1.0] + [b for _, b in self.equalities]
        A_ub = np.array(ub_rows) if ub_rows else np.zeros((0, self.dimension))
        return Polytope(A_ub, np.array(ub_rhs, dtype=float), np.array(eq_rows), np.array(eq_rhs, dtype=float))


@dataclass
class RateResult:
    value: float
    optimizer: np.ndarray | None
    status: str
    v: float
    point: np.ndarray | None = None
    gap: float = 0.0
    kkt: float | None = None
    extra: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "value": self.value,
            "status": self.status,
            "optimizer": None if self.optimizer is None else self.optimizer.tolist(),
            "v": self.v,
        }


# ----------------------------------------------------------------------------
# set builders


def _additive_values(weight: WeightSpec, k: int = 1) -> np.ndarray:
    if weight.kind == "multiplicative":
        raise SpecError("multiplicative weights must be converted with log psi first")
    if weight.k != k:
        raise SpecError(f"weight block length {weight.k} does not match {k}")
    return weight.values


def _pair_cost(source: TransitionModel) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return -np.log(source.rows)


def _info_rows(cost: np.ndarray, bound: float):
    """Information inequality plus equalities forcing mass off forbidden transitions."""
    finite = np.isfinite(cost)
    coeffs = np.where(finite, cost, 0.0)
    zeros = []
    for i in np.flatnonzero(~finite):
        e = np.zeros(cost.size)
        e[i] = 1.0
        zeros.append((e, 0.0))
    return (coeffs, bound, "<="), zeros


def _balance_rows(ell: int, k: int = 1) -> list:
    """First-k marginal equals last-k marginal for measures on (k+1)-blocks."""
    m = ell**k
    w = np.arange(ell ** (k + 1))
    head, tail = w // ell, w % m
    rows = []
    for v in range(m - 1):  # the last row is implied by the simplex equation
        c = (head == v).astype(float) - (tail == v).astype(float)
        rows.append((c, 0.0))
    return rows


def _first_symbol_image(ell: int, blocks: int) -> np.ndarray:
    w = np.arange(ell**blocks)
    first = w // ell ** (blocks - 1)
    return (first[None, :] == np.arange(ell)[:, None]).astype(float)


def build_set_B(source: TransitionModel, weight: WeightSpec, eta: float, eps: float) -> ConstrainedSet:
    """Pair-measure polytope; the objective acts on the second-index marginal."""
    if source.order != 1:
        raise SpecError("build_set_B needs a first-order source")
    phi = _additive_values(weight)
    ell = source.alphabet_size
    h = mk.entropy_rate(source)
    info, zeros = _info_rows(_pair_cost(source).ravel(), h + eps)
    util = (np.repeat(phi, ell), float(eta), ">=")
    image = np.tile(np.eye(ell), ell)
    return ConstrainedSet("B", ell, ell * ell, [info, util], zeros + _balance_rows(ell), image, True)


def build_set_A(source: TransitionModel, weight: WeightSpec, eta: float, eps: float) -> ConstrainedSet:
    """Same pair polytope as :func:`build_set_B`, objective on the row marginal."""
    B = build_set_B(source, weight, eta, eps)
    return replace(B, name="A", image=_first_symbol_image(B.ell, 2))


def build_set_D(source: TransitionModel, weight: WeightSpec, eta: float, eps: float) -> ConstrainedSet:
    """Single-symbol polytope for an IID source."""
    if source.kind not in ("iid", "uniform"):
        raise SpecError("build_set_D needs an IID source")
    phi = _additive_values(weight)
    ell = source.alphabet_size
    h = mk.entropy_rate(source)
    with np.errstate(divide="ignore"):
        cost = -np.log(source.rows[0])
    info, zeros = _info_rows(cost, h + eps)
    util = (phi.copy(), float(eta), ">=")
    return ConstrainedSet("D", ell, ell, [util, info], zeros, np.eye(ell), False)


def build_set_Blk(source: TransitionModel, weight: WeightSpec, eta: float, eps: float) -> ConstrainedSet:
    """Block polytope for an order-k source and a k-digit weight.

    Variables are shift-invariant measures ``w`` on (k+1)-blocks; the k-block
    occupancy is ``zeta(v) = sum_j w(v, j)`` and each step of the block chain
    emits one symbol.
    """
    k = source.order
    if weight.kind == "additive" and k == 1:
        return replace(build_set_A(source, weight, eta, eps), name="Blk")
    phi = _additive_values(weight, k)
    ell = source.alphabet_size
    h = mk.entropy_rate(source)
    w = np.arange(ell ** (k + 1))
    with np.errstate(divide="ignore"):
        cost = -np.log(source.rows[w // ell, w % ell**k])
    info, zeros = _info_rows(cost, h + eps)
    util = (phi[w // ell], float(eta), ">=")
    image = _first_symbol_image(ell, k + 1)
    return ConstrainedSet("Blk", ell, ell ** (k + 1), [info, util], zeros + _balance_rows(ell, k), image, True)


def build_set(source: TransitionModel, weight: WeightSpec, eta: float, eps: float) -> ConstrainedSet:
    """Pick the set matching the source: D for IID, Blk for order k > 1, else A."""
    if weight.kind == "multiplicative":
        weight = additive(weight.log_table())
    if source.order > 1 or weight.kind == "additive_k":
        return build_set_Blk(source, weight, eta, eps)
    if source.kind in ("iid", "uniform"):
        return build_set_D(source, weight, eta, eps)
    return build_set_A(source, weight, eta, eps)


# ----------------------------------------------------------------------------
# gamma


def _entropy_grad(y: np.ndarray) -> np.ndarray:
    return -np.log(np.maximum(y, 1e-300)) - 1.0


def _uniform_point(S: ConstrainedSet, poly: Polytope) -> np.ndarray | None:
    target = np.full(S.ell, 1.0 / S.ell)
    return lp_vertex(poly.with_equalities(S.image, target), np.zeros(S.dimension))


def gamma_max_entropy(S: ConstrainedSet, v: float | None = None, tol: float = 1e-13, max_iter: int = 5000) -> RateResult:
    """``sup H(y)`` over the set, with the uniform-point dichotomy as a fast path."""
    v = math.log(S.ell) if v is None else v
    poly = S.polytope()
    start = lp_vertex(poly, np.zeros(S.dimension))
    if start is None:
        return RateResult(-math.inf, None, INFEASIBLE, v)
    z = _uniform_point(S, poly)
    if z is not None:
        return RateResult(math.log(S.ell), np.full(S.ell, 1.0 / S.ell), AT_UNIFORM, v, point=z, kkt=0.0)
    R = S.image

    def fun(x):
        return -ldr.entropy(R @ x)

    def grad(x):
        return -(R.T @ _entropy_grad(R @ x))

    fw = frank_wolfe(fun, grad, poly, start, tol=tol, max_iter=max_iter)
    y = R @ fw.x
    kkt = kkt_residual(poly, fw.x, -grad(fw.x))
    return RateResult(ldr.entropy(y), y, AT_BOUNDARY, v, point=fw.x, gap=fw.gap, kkt=kkt,
                      extra={"iterations": fw.iterations, "converged": fw.converged})


def gamma_binary_interval(source: TransitionModel, weight: WeightSpec, eta: float, eps: float) -> RateResult:
    """Two-letter alphabet: reduce to an interval for ``y_1`` and clip 1/2 into it."""
    if source.alphabet_size != 2 or source.order != 1:
        raise SpecError("gamma_binary_interval needs a first-order binary source")
    if weight.kind == "multiplicative":
        weight = additive(weight.log_table())
    phi = _additive_values(weight)
    h = mk.entropy_rate(source)
    if source.kind in ("iid", "uniform"):
        lo, hi = _interval_D2(source.rows[0], phi, eta, h + eps)
    else:
        lo, hi = _interval_A2(source, weight, eta, eps)
    if lo is None or lo > hi:
        return RateResult(-math.inf, None, INFEASIBLE, math.log(2))
    u = min(max(0.5, lo), hi)
    y = np.array([1.0 - u, u])
    status = AT_UNIFORM if u == 0.5 else AT_BOUNDARY
    value = math.log(2) if u == 0.5 else ldr.entropy(y)
    return RateResult(value, y, status, math.log(2), extra={"interval": (lo, hi)})


def _halfline(a: float, b: float, lo: float, hi: float):
    """Intersect ``[lo, hi]`` with ``{u : a u >= b}``."""
    if a > 0:
        lo = max(lo, b / a)
    elif a < 0:
        hi = min(hi, b / a)
    elif b > 0:
        return 1.0, 0.0
    return lo, hi


def _interval_D2(p: np.ndarray, phi: np.ndarray, eta: float, bound: float):
    lo, hi = 0.0, 1.0
    # (1-u) phi0 + u phi1 >= eta
    lo, hi = _halfline(phi[1] - phi[0], eta - phi[0], lo, hi)
    with np.errstate(divide="ignore"):
        c0, c1 = -np.log(p[0]), -np.log(p[1])
    if not np.isfinite(c1):
        hi = min(hi, 0.0)
        c1 = 0.0
    if not np.isfinite(c0):
        lo = max(lo, 1.0)
        c0 = 0.0
    # (1-u) c0 + u c1 <= bound
    lo, hi = _halfline(c0 - c1, c0 - bound, lo, hi)
    return lo, hi


def _interval_A2(source, weight, eta, eps):
    S = build_set_A(source, weight, eta, eps)
    poly = S.polytope()
    y1 = S.image[1]
    zmin = lp_vertex(poly, y1)
    if zmin is None:
        return None, None
    zmax = lp_vertex(poly, -y1)
    return float(y1 @ zmin), float(y1 @ zmax)


def iota_multiplicative(source: TransitionModel, psi: WeightSpec, eta: float, eps: float) -> RateResult:
    """Growth rate for a product utility: the additive pipeline run on ``log psi``."""
    if psi.kind != "multiplicative":
        raise SpecError("iota_multiplicative expects a multiplicative weight")
    return gamma_max_entropy(build_set(source, additive(psi.log_table()), eta, eps))


# ----------------------------------------------------------------------------
# kappa


def kappa_inf_rate(storage: TransitionModel, S: ConstrainedSet, v: float | None = None,
                   tol: float = 1e-12, max_iter: int = 2000) -> RateResult:
    """``kappa = -inf Pi*(z)`` over the set (``-inf`` when the set is empty)."""
    v = math.log(S.ell) if v is None else v
    if storage.n_states != S.ell:
        raise SpecError("storage chain and selection set have different alphabets")
    if storage.kind == "uniform":
        g = gamma_max_entropy(S, v=v)
        if g.status == INFEASIBLE:
            return RateResult(-math.inf, None, INFEASIBLE, v)
        return RateResult(g.value - math.log(S.ell), g.optimizer, g.status, v, point=g.point, gap=g.gap)
    poly = S.polytope()
    start = lp_vertex(poly, np.zeros(S.dimension))
    if start is None:
        return RateResult(-math.inf, None, INFEASIBLE, v)
    R = S.image
    pi = mk.stationary_distribution(storage)
    z0 = lp_vertex(poly.with_equalities(R, pi), np.zeros(S.dimension))
    if z0 is not None:
        return RateResult(0.0, pi, OPTIMAL, v, point=z0)

    def fun(x):
        return ldr.rate_and_argmax(storage, _marginal(R @ x))[0]

    def grad(x):
        u = ldr.rate_and_argmax(storage, _marginal(R @ x))[1]
        u = np.maximum(u, 1e-300)
        return R.T @ (np.log(u) - np.log(storage.rows @ u))

    fw = frank_wolfe(fun, grad, poly, start, tol=tol, max_iter=max_iter)
    y = R @ fw.x
    return RateResult(-fw.value, y, OPTIMAL, v, point=fw.x, gap=fw.gap,
                      extra={"iterations": fw.iterations, "converged": fw.converged})


def _marginal(y: np.ndarray) -> np.ndarray:
    y = np.clip(y, 0.0, None)
    return y / y.sum()


def volume_exponent(kappa: RateResult | float, v: float) -> float:
    """``gamma = v + kappa``."""
    k = kappa.value if isinstance(kappa, RateResult) else float(kappa)
    if k == -math.inf:
        return -math.inf
    return v + k


def kkt_check(S: ConstrainedSet, result: RateResult) -> float:
    """Stationarity residual of an entropy-maximising result over ``S``."""
    if result.point is None:
        raise SpecError("result has no optimizer")
    R = S.image
    return kkt_residual(S.polytope(), result.point, R.T @ _entropy_grad(R @ result.point))
