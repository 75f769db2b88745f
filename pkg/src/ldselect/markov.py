"""Finite-alphabet Markov chains used as information sources and storage laws.

All logarithms are natural.  A model is immutable once built; the
constructors :func:`markov`, :func:`iid`, :func:`uniform`, :func:`lift_to_order_k`
and :func:`lift_first_order` are the intended entry points.

Order-k chains are stored as their one-step shift chain on blocks
``(u_1, ..., u_k)``: a block may only move to ``(u_2, ..., u_k, j)``.  Blocks are
indexed big-endian, ``index(u) = sum(u_i * ell**(k - i))``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import reduce
from typing import Sequence

import numpy as np

from .errors import (
    AperiodicityError,
    DomainError,
    IrreducibilityError,
    ShiftConsistencyError,
    StochasticityError,
)

ROW_TOL = 1e-12
KINDS = ("markov", "iid", "uniform", "markov_order_k")


@dataclass(frozen=True, eq=False)
class TransitionModel:
    alphabet_size: int
    kind: str
    rows: np.ndarray
    initial: np.ndarray
    order: int = 1

    def __post_init__(self):
        rows = np.array(self.rows, dtype=float)
        initial = np.array(self.initial, dtype=float)
        rows.setflags(write=False)
        initial.setflags(write=False)
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "initial", initial)
        _check_shape_and_stochastic(self)

    @property
    def n_states(self) -> int:
        return self.rows.shape[0]

    def __repr__(self):
        return (
            f"TransitionModel(kind={self.kind!r}, alphabet_size={self.alphabet_size}, "
            f"order={self.order}, n_states={self.n_states})"
        )


@dataclass(frozen=True)
class ValidationReport:
    row_stochastic: bool
    irreducible: bool
    aperiodic: bool
    period: int
    n_states: int
    messages: tuple = field(default_factory=tuple)

    @property
    def valid(self) -> bool:
        return self.row_stochastic and self.irreducible and self.aperiodic

    def as_dict(self) -> dict:
        return {
            "valid": self.valid,
            "row_stochastic": self.row_stochastic,
            "irreducible": self.irreducible,
            "aperiodic": self.aperiodic,
            "period": self.period,
            "n_states": self.n_states,
        }


def _check_shape_and_stochastic(model: TransitionModel) -> None:
    ell, k = model.alphabet_size, model.order
    if model.kind not in KINDS:
        raise DomainError(f"unknown model kind {model.kind!r}")
    if ell < 2:
        raise DomainError("alphabet size must be at least 2")
    if k < 1:
        raise DomainError("order must be at least 1")
    if model.kind != "markov_order_k" and k != 1:
        raise DomainError(f"kind {model.kind!r} requires order 1")
    m = ell**k
    if model.rows.shape != (m, m):
        raise DomainError(f"rows must be {m}x{m}, got {model.rows.shape}")
    if model.initial.shape != (m,):
        raise DomainError(f"initial must have length {m}")
    P = model.rows
    if not np.all(np.isfinite(P)) or P.min() < 0.0 or P.max() > 1.0:
        raise StochasticityError("row-stochastic: entries must lie in [0, 1]")
    bad = np.abs(P.sum(axis=1) - 1.0) > ROW_TOL
    if bad.any():
        i = int(np.flatnonzero(bad)[0])
        raise StochasticityError(f"row-stochastic: row {i} sums to {P[i].sum()!r}")
    lam = model.initial
    if lam.min() < 0.0 or abs(lam.sum() - 1.0) > ROW_TOL:
        raise StochasticityError("row-stochastic: initial vector is not a probability vector")
    if model.kind == "uniform" and not np.all(P == 1.0 / ell):
        raise StochasticityError("row-stochastic: uniform model must have entries 1/ell")
    if model.kind == "iid" and not np.all(P == P[0]):
        raise StochasticityError("row-stochastic: iid model must have identical rows")
    if model.kind == "markov_order_k":
        _check_shift_consistent(P, ell, k)


def _check_shift_consistent(P: np.ndarray, ell: int, k: int) -> None:
    m = ell**k
    allowed = np.zeros((m, m), dtype=bool)
    src = np.arange(m)
    for j in range(ell):
        allowed[src, (src % ell ** (k - 1)) * ell + j] = True
    bad = (P > 0) & ~allowed
    if bad.any():
        u, v = map(int, np.argwhere(bad)[0])
        raise ShiftConsistencyError(
            f"shift-consistent: block {block_digits(u, ell, k)} cannot move to {block_digits(v, ell, k)}"
        )


# ----------------------------------------------------------------------------
# constructors


def markov(rows, initial=None) -> TransitionModel:
    """First-order chain; ``initial`` defaults to the stationary distribution."""
    P = np.array(rows, dtype=float)
    ell = P.shape[0]
    lam = np.full(ell, 1.0 / ell) if initial is None else initial
    model = TransitionModel(ell, "markov", P, lam)
    if initial is None:
        model = TransitionModel(ell, "markov", P, stationary_distribution(model))
    return model


def binary(alpha: float, beta: float, initial=None) -> TransitionModel:
    """Two-state chain ``[[1-alpha, alpha], [beta, 1-beta]]``."""
    return markov([[1.0 - alpha, alpha], [beta, 1.0 - beta]], initial)


def iid(p, initial=None) -> TransitionModel:
    p = np.array(p, dtype=float)
    rows = np.tile(p, (p.size, 1))
    return TransitionModel(p.size, "iid", rows, p if initial is None else initial)


def uniform(ell: int) -> TransitionModel:
    rows = np.full((ell, ell), 1.0 / ell)
    return TransitionModel(ell, "uniform", rows, np.full(ell, 1.0 / ell))


def block_digits(index: int, ell: int, k: int) -> tuple:
    digits = []
    for _ in range(k):
        index, d = divmod(index, ell)
        digits.append(d)
    return tuple(reversed(digits))


def block_index(block: Sequence[int], ell: int) -> int:
    return reduce(lambda acc, d: acc * ell + int(d), block, 0)


def lift_to_order_k(rows, ell: int, k: int, initial=None) -> TransitionModel:
    """Wrap a shift-consistent block transition assignment as an order-k model.

    ``rows`` is the ``ell**k x ell**k`` one-step matrix over blocks.  For
    ``k == 1`` this is just :func:`markov`.
    """
    if k == 1:
        return markov(rows, initial)
    P = np.array(rows, dtype=float)
    m = ell**k
    if P.shape != (m, m):
        raise DomainError(f"order-{k} assignment over {ell} symbols must be {m}x{m}")
    _check_shift_consistent(P, ell, k)
    lam = np.full(m, 1.0 / m) if initial is None else initial
    model = TransitionModel(ell, "markov_order_k", P, lam, order=k)
    if initial is None:
        model = TransitionModel(ell, "markov_order_k", P, stationary_distribution(model), order=k)
    return model


def lift_first_order(model: TransitionModel, k: int) -> TransitionModel:
    """Re-express a first-order chain as an order-k chain on blocks.

    The block initial law is ``lambda(u_1) p(u_1, u_2) ... p(u_{k-1}, u_k)``, so
    string probabilities are unchanged.
    """
    if model.order != 1:
        raise DomainError("lift_first_order expects a first-order model")
    if k == 1:
        return model
    ell = model.alphabet_size
    m = ell**k
    P = model.rows
    rows = np.zeros((m, m))
    lam = np.zeros(m)
    for u in range(m):
        digits = block_digits(u, ell, k)
        for j in range(ell):
            rows[u, (u % ell ** (k - 1)) * ell + j] = P[digits[-1], j]
        lam[u] = model.initial[digits[0]] * math.prod(P[a, b] for a, b in zip(digits, digits[1:]))
    return lift_to_order_k(rows, ell, k, initial=lam)


# ----------------------------------------------------------------------------
# structure


def _support_graph(P: np.ndarray) -> list[np.ndarray]:
    return [np.flatnonzero(P[i] > 0) for i in range(P.shape[0])]


def _reachable(adj: list[np.ndarray], start: int = 0) -> np.ndarray:
    seen = np.zeros(len(adj), dtype=bool)
    seen[start] = True
    stack = [start]
    while stack:
        v = stack.pop()
        for w in adj[v]:
            if not seen[w]:
                seen[w] = True
                stack.append(int(w))
    return seen


def _period(adj: list[np.ndarray]) -> int:
    # BFS levels from state 0; every edge u->v contributes level[u] + 1 - level[v].
    level = np.full(len(adj), -1)
    level[0] = 0
    queue = [0]
    for v in queue:
        for w in adj[v]:
            if level[w] < 0:
                level[w] = level[v] + 1
                queue.append(int(w))
    g = 0
    for v, nbrs in enumerate(adj):
        if level[v] < 0:
            continue
        for w in nbrs:
            g = math.gcd(g, int(abs(level[v] + 1 - level[w])))
    return g


def validate(model: TransitionModel) -> ValidationReport:
    """Check irreducibility and aperiodicity of the support digraph.

    Row-stochasticity is enforced when the model is built.  Raises
    :class:`IrreducibilityError` or :class:`AperiodicityError` naming the first
    violated property; otherwise returns the report.
    """
    adj = _support_graph(model.rows)
    radj = _support_graph(model.rows.T)
    irreducible = bool(_reachable(adj).all() and _reachable(radj).all())
    if not irreducible:
        raise IrreducibilityError("irreducible: support digraph is not strongly connected")
    period = _period(adj)
    if period != 1:
        raise AperiodicityError(f"aperiodic: chain has period {period}")
    return ValidationReport(True, True, True, period, model.n_states)


def stationary_distribution(model: TransitionModel) -> np.ndarray:
    """Unique invariant law ``pi P = pi`` of a valid chain."""
    if model.kind == "iid":
        return model.rows[0].copy()
    if model.kind == "uniform":
        return np.full(model.alphabet_size, 1.0 / model.alphabet_size)
    validate(model)
    P = model.rows
    m = P.shape[0]
    A = P.T - np.eye(m)
    A[-1, :] = 1.0
    b = np.zeros(m)
    b[-1] = 1.0
    pi = np.linalg.solve(A, b)
    # a few power steps absorb the solver's rounding and the sign noise
    for _ in range(8):
        nxt = pi @ P
        nxt = np.clip(nxt, 0.0, None)
        nxt /= nxt.sum()
        if np.max(np.abs(nxt - pi)) <= 1e-16:
            pi = nxt
            break
        pi = nxt
    return pi


def pair_measure(model: TransitionModel) -> np.ndarray:
    """Stationary pair law ``pi_i p_ij`` as an ``ell x ell`` array."""
    pi = stationary_distribution(model)
    return pi[:, None] * model.rows


def _xlogx_rows(P: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(P > 0, P * np.log(np.where(P > 0, P, 1.0)), 0.0)
    return t.sum(axis=1)


def entropy_rate(model: TransitionModel) -> float:
    """Entropy rate in nats per symbol.

    For an order-k chain the k-step block transition matrix ``Q = P**k`` is
    used with the ``1/k`` normalisation, ``-(1/k) sum pi_u Q_uv log Q_uv``.
    """
    if model.kind == "uniform":
        return math.log(model.alphabet_size)
    if model.kind == "iid":
        return float(-_xlogx_rows(model.rows[:1])[0])
    pi = stationary_distribution(model)
    if model.kind == "markov_order_k":
        k = model.order
        Q = np.linalg.matrix_power(model.rows, k)
        Q[Q < 1e-300] = 0.0
        return float(-(pi @ _xlogx_rows(Q)) / k)
    return float(-(pi @ _xlogx_rows(model.rows)))


def _as_symbols(x, ell: int) -> np.ndarray:
    arr = np.asarray(x, dtype=np.int64).ravel()
    if arr.size and (arr.min() < 0 or arr.max() >= ell):
        raise DomainError(f"symbol out of range for alphabet of size {ell}")
    return arr


def block_path(x: np.ndarray, ell: int, k: int) -> np.ndarray:
    """Indices of the overlapping k-blocks of ``x`` (length ``n - k + 1``)."""
    n = x.shape[-1]
    idx = np.zeros(x.shape[:-1] + (n - k + 1,), dtype=np.int64)
    for i in range(k):
        idx = idx * ell + x[..., i : n - k + 1 + i]
    return idx


def string_log_prob(model: TransitionModel, x) -> float:
    """``log lambda(x_0) + sum log p(x_i, x_{i+1})``; ``-inf`` on a zero factor."""
    ell = model.alphabet_size
    xs = _as_symbols(x, ell)
    if xs.size < model.order:
        raise DomainError(f"string must have length at least {model.order}")
    states = block_path(xs, ell, model.order) if model.order > 1 else xs
    factors = [model.initial[states[0]]]
    factors.extend(model.rows[states[:-1], states[1:]])
    with np.errstate(divide="ignore"):
        logs = np.log(np.asarray(factors, dtype=float))
    if np.isneginf(logs).any():
        return -math.inf
    return float(logs.sum())


def _emit(states: np.ndarray, ell: int, k: int) -> np.ndarray:
    """Symbol strings from block-state paths (last axis is time)."""
    if k == 1:
        return states
    first = np.stack([(states[..., 0] // ell ** (k - 1 - i)) % ell for i in range(k)], axis=-1)
    return np.concatenate([first, states[..., 1:] % ell], axis=-1)


def sample_paths(model: TransitionModel, n: int, trials: int, rng: np.random.Generator) -> np.ndarray:
    """``trials`` independent length-``n`` strings as a ``(trials, n)`` uint8/int array."""
    k = model.order
    if n < k:
        raise DomainError(f"n must be at least the model order {k}")
    steps = n - k + 1
    cum_init = np.cumsum(model.initial)
    cum_rows = np.cumsum(model.rows, axis=1)
    cum_init[-1] = 1.0
    cum_rows[:, -1] = 1.0
    draws = rng.random((trials, steps))
    dtype = np.uint8 if model.n_states <= 256 else np.int64
    states = np.empty((trials, steps), dtype=dtype)
    states[:, 0] = np.searchsorted(cum_init, draws[:, 0], side="right")
    for t in range(1, steps):
        c = cum_rows[states[:, t - 1]]
        states[:, t] = (draws[:, t, None] >= c).sum(axis=1)
    if k == 1:
        return states
    return _emit(states.astype(np.int64), model.alphabet_size, k)


def sample_string(model: TransitionModel, n: int, seed: int) -> np.ndarray:
    """One length-``n`` realisation, deterministic in ``seed``."""
    if n < 1:
        raise DomainError("n must be positive")
    if model.kind in ("markov", "markov_order_k"):
        validate(model)
    rng = np.random.default_rng(seed)
    return sample_paths(model, n, 1, rng)[0].astype(np.int64)
