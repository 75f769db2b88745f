"""Occupancy statistics of strings and the selection rule for high-utility strings.

A string ``x`` of length ``n`` is *selected* when its utility rate clears the
threshold ``eta`` and its information rate does not exceed ``h + eps``, where
``h`` is the source entropy rate.  The batch helpers here work on ``(m, n)``
integer arrays so that the exhaustive enumerator in :mod:`ldselect.oracle`
and the single-string :func:`select` share one arithmetic path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import markov as mk
from .errors import DomainError, SpecError
from .markov import TransitionModel

GUARD = 1e-12


@dataclass(frozen=True, eq=False)
class EmpiricalMeasure:
    u: np.ndarray
    t: np.ndarray | None
    n: int
    zeta: np.ndarray | None = None


@dataclass(frozen=True, eq=False)
class WeightSpec:
    kind: str
    values: np.ndarray
    k: int = 1

    def __post_init__(self):
        vals = np.array(self.values, dtype=float).ravel()
        object.__setattr__(self, "values", vals)
        if self.kind not in ("additive", "additive_k", "multiplicative"):
            raise SpecError(f"unknown weight kind {self.kind!r}")
        if self.kind != "additive_k" and self.k != 1:
            raise SpecError(f"{self.kind} weights are one-digit (k=1)")
        if self.kind == "multiplicative" and not np.all(vals > 0):
            raise SpecError("multiplicative weights must be strictly positive")
        if not np.all(np.isfinite(vals)):
            raise SpecError("weights must be finite")

    @property
    def alphabet_size(self) -> int:
        if self.kind == "additive_k":
            ell = round(self.values.size ** (1.0 / self.k))
            if ell**self.k != self.values.size:
                raise SpecError(f"additive_k table of size {self.values.size} is not ell**{self.k}")
            return ell
        return self.values.size

    def log_table(self) -> np.ndarray:
        """Additive per-symbol (or per-block) utility; ``log psi`` for multiplicative."""
        if self.kind == "multiplicative":
            return np.log(self.values)
        return self.values


def additive(phi) -> WeightSpec:
    return WeightSpec("additive", phi)


def additive_k(phi, k: int) -> WeightSpec:
    """Block utility; ``phi`` is a length ``ell**k`` table or a k-dimensional array."""
    return WeightSpec("additive_k", np.asarray(phi, dtype=float).ravel(), k)


def multiplicative(psi) -> WeightSpec:
    return WeightSpec("multiplicative", psi)


@dataclass(frozen=True, eq=False)
class SelectionSpec:
    eta: float
    eps: float
    weight: WeightSpec
    source: TransitionModel
    h: float

    def __post_init__(self):
        if not self.eps > 0:
            raise SpecError("eps must be positive")
        if self.weight.alphabet_size != self.source.alphabet_size:
            raise SpecError("weight table does not match the source alphabet")


def selection(source: TransitionModel, weight: WeightSpec, eta: float, eps: float) -> SelectionSpec:
    return SelectionSpec(float(eta), float(eps), weight, source, mk.entropy_rate(source))


# ----------------------------------------------------------------------------
# batch arithmetic


def _block_counts(X: np.ndarray, ell: int, k: int) -> np.ndarray:
    """Counts of every overlapping k-block, shape ``(m, ell**k)``."""
    m = X.shape[0]
    codes = mk.block_path(X, ell, k)
    size = ell**k
    flat = codes + (np.arange(m, dtype=np.int64) * size)[:, None]
    return np.bincount(flat.ravel(), minlength=m * size).reshape(m, size)


def weight_rates(X: np.ndarray, weight: WeightSpec) -> np.ndarray:
    ell = weight.alphabet_size
    n = X.shape[1]
    if n < weight.k:
        raise DomainError(f"string shorter than the weight block length {weight.k}")
    counts = _block_counts(X, ell, weight.k)
    return (counts @ weight.log_table()) / (n - weight.k + 1)


def _transition_cost(source: TransitionModel) -> np.ndarray:
    """``-log p`` over the (k+1)-blocks of an order-k source (``+inf`` on zeros)."""
    ell, k = source.alphabet_size, source.order
    w = np.arange(ell ** (k + 1))
    p = source.rows[w // ell, w % ell**k]
    with np.errstate(divide="ignore"):
        return -np.log(p)


def info_rates(X: np.ndarray, source: TransitionModel) -> np.ndarray:
    ell, k = source.alphabet_size, source.order
    n = X.shape[1]
    if n <= k:
        return np.zeros(X.shape[0])
    counts = _block_counts(X, ell, k + 1)
    cost = _transition_cost(source)
    finite = np.isfinite(cost)
    out = (counts[:, finite] @ cost[finite]) / (n - k)
    forbidden = (counts[:, ~finite] > 0).any(axis=1)
    out[forbidden] = math.inf
    return out


def select_mask(X: np.ndarray, spec: SelectionSpec) -> np.ndarray:
    """Vectorised selection predicate over the rows of ``X``."""
    wr = weight_rates(X, spec.weight)
    ir = info_rates(X, spec.source)
    return (wr >= spec.eta - GUARD) & (ir <= spec.h + spec.eps + GUARD)


# ----------------------------------------------------------------------------
# single-string API


def _row(x, ell: int) -> np.ndarray:
    xs = np.asarray(x, dtype=np.int64).ravel()
    if xs.size == 0:
        raise DomainError("empty string")
    if xs.min() < 0 or xs.max() >= ell:
        raise DomainError(f"symbol out of range for alphabet of size {ell}")
    return xs[None, :]


def occupancy(x, ell: int, k: int | None = None) -> EmpiricalMeasure:
    """Symbol, adjacent-pair and (optionally) k-block occupancy fractions.

    >>> m = occupancy([0, 1, 1, 0], 2)
    >>> m.u.tolist(), m.t.ravel().tolist()
    ([0.5, 0.5], [0.0, 0.3333333333333333, 0.3333333333333333, 0.3333333333333333])
    """
    X = _row(x, ell)
    n = X.shape[1]
    u = _block_counts(X, ell, 1)[0] / n
    t = _block_counts(X, ell, 2)[0].reshape(ell, ell) / (n - 1) if n >= 2 else None
    zeta = None
    if k is not None:
        if n < k:
            raise DomainError(f"string shorter than block length {k}")
        zeta = _block_counts(X, ell, k)[0] / (n - k + 1)
    return EmpiricalMeasure(u, t, n, zeta)


def weight_rate(x, weight: WeightSpec) -> float:
    return float(weight_rates(_row(x, weight.alphabet_size), weight)[0])


def info_rate(x, source: TransitionModel) -> float:
    """``-sum t_ij log p_ij``; ``+inf`` if the string uses a forbidden transition."""
    X = _row(x, source.alphabet_size)
    if X.shape[1] < 2:
        raise DomainError("information rate needs n >= 2")
    return float(info_rates(X, source)[0])


def select(x, spec: SelectionSpec) -> bool:
    return bool(select_mask(_row(x, spec.source.alphabet_size), spec)[0])
