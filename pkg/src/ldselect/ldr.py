"""Large-deviation rate functions for occupancy vectors of a Markov storage chain.

``m_star(P; y) = sup_u sum_j y_j log(u_j / (P u)_j)`` over positive ``u``.  The
objective is invariant under scaling of ``u``; in log coordinates
``u = exp(s)`` it reads ``y.s - sum_j y_j logsumexp_l(log p_jl + s_l)``, which
is concave in ``s``, so a damped Newton ascent finds the global supremum.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.special import logsumexp

from .errors import DomainError, SpecError
from .markov import TransitionModel

SIMPLEX_TOL = 1e-9
ENDPOINT_CUTOFF = 1e-10


def _as_simplex(y, size: int | None = None, name: str = "y") -> np.ndarray:
    y = np.asarray(y, dtype=float).ravel()
    if size is not None and y.size != size:
        raise SpecError(f"{name} must have length {size}, got {y.size}")
    if not np.all(np.isfinite(y)) or y.min() < -SIMPLEX_TOL or abs(y.sum() - 1.0) > SIMPLEX_TOL:
        raise SpecError(f"{name} is not a probability vector")
    y = np.clip(y, 0.0, None)
    return y / y.sum()


def entropy(y) -> float:
    y = np.asarray(y, dtype=float).ravel()
    nz = y[y > 0]
    return float(-(nz * np.log(nz)).sum())


def relative_entropy(y, p) -> float:
    """``D(y || p)`` with ``0 log 0 = 0`` and ``+inf`` when ``y`` is not dominated by ``p``."""
    y = np.asarray(y, dtype=float).ravel()
    p = np.asarray(p, dtype=float).ravel()
    if y.shape != p.shape:
        raise SpecError("relative_entropy needs vectors of equal length")
    mask = y > 0
    if np.any(p[mask] <= 0):
        return math.inf
    return float(np.sum(y[mask] * (np.log(y[mask]) - np.log(p[mask]))))


# ----------------------------------------------------------------------------
# general inner supremum


def _objective(logP: np.ndarray, yr: np.ndarray, rows: np.ndarray, s: np.ndarray) -> float:
    return float(yr @ s[rows] - yr @ logsumexp(logP + s[None, :], axis=1))


def inner_sup(P: np.ndarray, y: np.ndarray, max_iter: int = 500) -> tuple[float, np.ndarray]:
    """Return ``(m_star, u_star)`` with ``u_star`` normalised to the simplex.

    When the supremum is only approached at the boundary (``y`` on a face of the
    simplex) the returned ``u_star`` is the last iterate.
    """
    ell = y.size
    rows = np.flatnonzero(y > 0)
    with np.errstate(divide="ignore"):
        logP = np.log(P[rows])
    yr = y[rows]
    ref = int(np.argmax(y))
    free = np.arange(ell) != ref
    s = np.log(np.maximum(y, 1e-12))
    s -= s[ref]
    f = _objective(logP, yr, rows, s)
    mu = 1e-10
    for _ in range(max_iter):
        W = np.exp(logP + s[None, :] - logsumexp(logP + s[None, :], axis=1)[:, None])
        g = -(yr @ W)
        g[rows] += yr
        gf = g[free]
        if np.max(np.abs(gf)) < 1e-14:
            break
        H = (W.T * yr) @ W - np.diag(yr @ W)
        Hf = H[np.ix_(free, free)]
        # Levenberg damping keeps the step an ascent direction when H is singular
        d = np.linalg.solve(Hf - mu * np.eye(Hf.shape[0]), -gf)
        while gf @ d <= 0:
            mu *= 10.0
            d = np.linalg.solve(Hf - mu * np.eye(Hf.shape[0]), -gf)
        step = 1.0
        while step > 1e-12:
            trial = s.copy()
            trial[free] += step * d
            ft = _objective(logP, yr, rows, trial)
            if ft >= f + 1e-4 * step * (gf @ d):
                break
            step *= 0.5
        else:
            break
        gain = ft - f
        s, f = trial, ft
        mu = max(mu * 0.3, 1e-12) if step == 1.0 else mu * 3.0
        if gain < 1e-17:
            break
    u = np.exp(s - s.max())
    return (f if f > 0.0 else 0.0), u / u.sum()


def m_star(storage: TransitionModel, y) -> float:
    """Rate function of the single-symbol occupancy vector under ``storage``."""
    y = _as_simplex(y, storage.n_states)
    return inner_sup(storage.rows, y)[0]


def pi_star(storage: TransitionModel, z) -> float:
    """Rate on the pair simplex; reduces to ``m_star`` of the second-index marginal."""
    ell = storage.n_states
    z = _as_simplex(z, ell * ell, name="z").reshape(ell, ell)
    return m_star(storage, z.sum(axis=0))


# ----------------------------------------------------------------------------
# binary closed form


def binary_root(alpha: float, beta: float, y0: float) -> float:
    """Positive root ``K`` of ``y0 a(1-b) w^2 + a b (y0 - y1) w - y1 b (1-a) = 0``."""
    y1 = 1.0 - y0
    qa = y0 * alpha * (1.0 - beta)
    qb = alpha * beta * (y0 - y1)
    qc = y1 * beta * (1.0 - alpha)
    root = math.sqrt(qb * qb + 4.0 * qa * qc)
    # pick the cancellation-free form of the positive root
    if qb >= 0.0:
        return 2.0 * qc / (qb + root)
    return (-qb + root) / (2.0 * qa)


def _check_binary(alpha, beta, y0):
    if not (0.0 < alpha < 1.0 and 0.0 < beta < 1.0):
        raise DomainError("alpha and beta must lie in (0, 1)")
    if not (0.0 <= y0 <= 1.0):
        raise DomainError("y0 must lie in [0, 1]")


def m_star_binary_argmax(alpha: float, beta: float, y0: float) -> tuple[float, np.ndarray]:
    """Closed-form rate and the maximising ``u = (1/(1+K), K/(1+K))``."""
    _check_binary(alpha, beta, y0)
    y1 = 1.0 - y0
    if y0 < ENDPOINT_CUTOFF:
        return -math.log1p(-beta), np.array([0.0, 1.0])
    if y1 < ENDPOINT_CUTOFF:
        return -math.log1p(-alpha), np.array([1.0, 0.0])
    K = binary_root(alpha, beta, y0)
    val = -y0 * math.log(1.0 - alpha + alpha * K) - y1 * math.log(1.0 - beta + beta / K)
    return (val if val > 0.0 else 0.0), np.array([1.0, K]) / (1.0 + K)


def m_star_binary(alpha: float, beta: float, y0: float) -> float:
    """Closed-form rate for the two-state storage chain ``[[1-a, a], [b, 1-b]]``.

    >>> round(m_star_binary(0.5, 0.1, 1.0), 12) == round(-math.log(0.5), 12)
    True
    """
    return m_star_binary_argmax(alpha, beta, y0)[0]


def rate_and_argmax(storage: TransitionModel, y: np.ndarray) -> tuple[float, np.ndarray]:
    """Fast path used by the optimisers: closed form for two-state chains."""
    if storage.n_states == 2:
        P = storage.rows
        alpha, beta = P[0, 1], P[1, 0]
        if 0.0 < alpha < 1.0 and 0.0 < beta < 1.0:
            return m_star_binary_argmax(alpha, beta, float(y[0]))
    return inner_sup(storage.rows, y)


def curve(alpha: float, beta: float, points: int) -> np.ndarray:
    """Rows ``(y0, closed, numeric, |diff|)`` at ``y0 = i/(points+1)``."""
    from .markov import binary

    model = binary(alpha, beta)
    out = np.empty((points, 4))
    for i in range(points):
        y0 = (i + 1) / (points + 1)
        closed = m_star_binary(alpha, beta, y0)
        numeric = m_star(model, [y0, 1.0 - y0])
        out[i] = (y0, closed, numeric, abs(closed - numeric))
    return out
