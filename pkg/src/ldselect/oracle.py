"""Ground truth for the analytic exponents: exhaustive enumeration and Monte Carlo.

Enumeration walks all ``ell**n`` strings in prefix-partitioned chunks, each chunk
a dense array of strings, and evaluates the selection rule with the same
batch arithmetic as :func:`ldselect.empirical.select`.  Counts are exact
integers; probabilities are summed with :func:`math.fsum`.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import markov as mk
from .empirical import SelectionSpec, select_mask
from .errors import DomainError, SizeError
from .markov import TransitionModel
from .rates import RateResult

MAX_STRINGS = 2**26
CHUNK = 2**16
MC_BLOCK = 2**14


def default_workers() -> int:
    env = os.environ.get("LDP_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


@dataclass
class Enumeration:
    n: int
    count: int
    probability: float | None
    total: int

    @property
    def log_rate(self) -> float:
        return math.log(self.count) / self.n if self.count else -math.inf


def _chunk_strings(start: int, stop: int, n: int, ell: int) -> np.ndarray:
    idx = np.arange(start, stop, dtype=np.int64)
    powers = ell ** np.arange(n - 1, -1, -1, dtype=np.int64)
    return (idx[:, None] // powers[None, :]) % ell


def _chunk_log_probs(X: np.ndarray, storage: TransitionModel) -> np.ndarray:
    k = storage.order
    states = mk.block_path(X, storage.alphabet_size, k) if k > 1 else X
    with np.errstate(divide="ignore"):
        logP = np.log(storage.rows)
        lam = np.log(storage.initial)
    return lam[states[:, 0]] + logP[states[:, :-1], states[:, 1:]].sum(axis=1)


def _guard(ell: int, n: int) -> int:
    if n < 2:
        raise DomainError("enumeration needs n >= 2")
    total = ell**n
    if total > MAX_STRINGS:
        raise SizeError(f"{ell}**{n} strings exceed the enumeration guard of 2**26")
    return total


def _work(spec: SelectionSpec, storage: TransitionModel | None, n: int, start: int, stop: int):
    X = _chunk_strings(start, stop, n, spec.source.alphabet_size)
    mask = select_mask(X, spec)
    count = int(mask.sum())
    probs = np.exp(_chunk_log_probs(X[mask], storage)) if storage is not None and count else np.empty(0)
    return count, probs


def _run(spec: SelectionSpec, n: int, storage: TransitionModel | None, workers: int | None) -> Enumeration:
    ell = spec.source.alphabet_size
    total = _guard(ell, n)
    bounds = [(a, min(a + CHUNK, total)) for a in range(0, total, CHUNK)]
    workers = workers or default_workers()
    if workers > 1 and len(bounds) > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(lambda b: _work(spec, storage, n, *b), bounds))
    else:
        parts = [_work(spec, storage, n, *b) for b in bounds]
    count = sum(c for c, _ in parts)
    prob = None
    if storage is not None:
        prob = math.fsum(p for _, arr in parts for p in arr.tolist())
    return Enumeration(n, count, prob, total)


def enumerate_selected(spec: SelectionSpec, n: int, workers: int | None = None) -> Enumeration:
    """Exact number of selected strings of length ``n``."""
    return _run(spec, n, None, workers)


def selected_strings(spec: SelectionSpec, n: int) -> np.ndarray:
    """All selected strings as rows, in lexicographic order (small ``n`` only)."""
    total = _guard(spec.source.alphabet_size, n)
    out = []
    for a in range(0, total, CHUNK):
        X = _chunk_strings(a, min(a + CHUNK, total), n, spec.source.alphabet_size)
        out.append(X[select_mask(X, spec)])
    return np.concatenate(out)


def exact_probability(storage: TransitionModel, spec: SelectionSpec, n: int, workers: int | None = None) -> float:
    """``p_st(B_n)``: storage probability of the selected set."""
    if storage.alphabet_size != spec.source.alphabet_size:
        raise DomainError("storage and source alphabets differ")
    if storage.kind == "uniform":
        e = _run(spec, n, None, workers)
        return e.count / e.total
    return _run(spec, n, storage, workers).probability


def enumerate_with_probability(storage: TransitionModel, spec: SelectionSpec, n: int,
                               workers: int | None = None) -> Enumeration:
    e = _run(spec, n, storage, workers)
    if storage.kind == "uniform":
        e.probability = e.count / e.total
    return e


# ----------------------------------------------------------------------------
# Monte Carlo


def _mc_block(storage: TransitionModel, spec: SelectionSpec, n: int, seed: int, block: int, size: int) -> int:
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(block,)))
    X = mk.sample_paths(storage, n, size, rng).astype(np.int64)
    return int(select_mask(X, spec).sum())


def monte_carlo_probability(storage: TransitionModel, spec: SelectionSpec, n: int, trials: int, seed: int,
                            workers: int | None = None) -> tuple[float, float]:
    """Fraction of sampled storage strings that are selected, with binomial stderr.

    Trials are cut into fixed blocks of ``MC_BLOCK`` strings; block ``b`` draws
    from the substream ``SeedSequence(seed, spawn_key=(b,))``, so the pooled
    result does not depend on how blocks are spread over workers.
    """
    if trials < 1000:
        raise DomainError("Monte Carlo needs at least 1000 trials")
    sizes = [min(MC_BLOCK, trials - a) for a in range(0, trials, MC_BLOCK)]
    workers = workers or default_workers()
    if workers > 1 and len(sizes) > 1:
        with ThreadPoolExecutor(workers) as pool:
            hits = list(pool.map(lambda b: _mc_block(storage, spec, n, seed, b, sizes[b]), range(len(sizes))))
    else:
        hits = [_mc_block(storage, spec, n, seed, b, s) for b, s in enumerate(sizes)]
    p = sum(hits) / trials
    return p, math.sqrt(p * (1.0 - p) / trials)


# ----------------------------------------------------------------------------
# convergence tables


@dataclass
class ConvergenceRow:
    n: int
    empirical: float
    analytic: float

    @property
    def gap(self) -> float:
        if self.empirical == self.analytic:
            return 0.0
        return abs(self.empirical - self.analytic)


def rate_convergence(spec: SelectionSpec, analytic: RateResult, n_list, mode: str = "count",
                     storage: TransitionModel | None = None, workers: int | None = None) -> list[ConvergenceRow]:
    """Rows ``(n, (1/n) log b_n or (1/n) log p_st(B_n), analytic, gap)``."""
    n_list = list(n_list)
    if n_list != sorted(n_list):
        raise DomainError("n_list must be ascending")
    rows = []
    for n in n_list:
        if mode == "count":
            b = enumerate_selected(spec, n, workers).count
            emp = math.log(b) / n if b else -math.inf
        elif mode == "probability":
            if storage is None:
                raise DomainError("probability mode needs a storage model")
            p = exact_probability(storage, spec, n, workers)
            emp = math.log(p) / n if p > 0 else -math.inf
        else:
            raise DomainError(f"unknown mode {mode!r}")
        rows.append(ConvergenceRow(n, emp, analytic.value))
    return rows
