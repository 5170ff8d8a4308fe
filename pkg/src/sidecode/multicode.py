"""Joint performance of several B-codes decoding the same source.

The miss probability of a tuple of codes is the mass of pairs that
*every* code decodes incorrectly.  The best achievable miss of k+1
equal-size B-codes, written e_B(M; k), is found by searching encoder
binnings; but for a fixed tuple of binnings the decoders have to be
optimized *jointly*, not per code: with two size-1 codes on a two-symbol
source, pointing the decoders at different symbols covers everything,
while two independently optimal decoders both pick the heavy symbol.

For fixed binnings the decoders reduce, per side-information symbol, to
picking one representative source symbol per (code, bin) cell; the set
of symbols that can be covered simultaneously is exactly the family of
partial transversals of the cells, so the heaviest coverable set is a
maximum-weight bipartite assignment (symbols vs. cells).

``best_multi_b`` enumerates canonical binning tuples exhaustively when
the tuple space fits the caller's budget, and otherwise runs a seeded
stochastic local search (random restarts plus single-symbol bin moves)
that reports an upper bound.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from .codes import (
    BCode,
    PairAlphabet,
    correct_set,
    count_partitions,
    error_probability,
    iter_partitions,
)
from .errors import ResourceLimitError
from .measures import Dist

DEFAULT_EXHAUSTIVE_CAP = 10_000_000


@dataclass(frozen=True)
class MultiCodeResult:
    """Outcome of a multi-code search.

    ``miss_probability`` always equals the recomputed joint miss of the
    stored codes.  ``search_mode`` is ``"exhaustive"`` (exact optimum) or
    ``"stochastic"`` (upper bound).
    """

    codes: tuple[BCode, ...]
    miss_probability: float
    search_mode: str
    seed: int


def joint_miss_probability(codes: Sequence[BCode], joint: Dist,
                           alphabet: PairAlphabet) -> float:
    """Mass of pairs decoded incorrectly by every code in the sequence."""
    if not codes:
        raise ValueError("need at least one code")
    missed = None
    for c in codes:
        bits = correct_set(c, alphabet).bits
        missed = ~bits if missed is None else (missed & ~bits)
    return min(max(float(joint.probs[missed].sum()), 0.0), 1.0)


def _cell_members(encoders: Sequence[np.ndarray], M: int,
                  x1_size: int) -> list[np.ndarray]:
    cells = []
    for enc in encoders:
        for m in range(M):
            cells.append(np.flatnonzero(enc == m))
    return cells


def _column_benefit(cells: list[np.ndarray], weights: np.ndarray) -> np.ndarray:
    ben = np.zeros((weights.size, len(cells)))
    for ci, members in enumerate(cells):
        ben[members, ci] = weights[members]
    return ben


def _tuple_kept_mass(encoders: Sequence[np.ndarray], mat: np.ndarray,
                     M: int) -> float:
    """Heaviest total mass the tuple can decode correctly, over the best
    joint choice of decoders (max-weight assignment per column)."""
    cells = _cell_members(encoders, M, mat.shape[0])
    kept = 0.0
    for y in range(mat.shape[1]):
        ben = _column_benefit(cells, mat[:, y])
        rows, cols = linear_sum_assignment(ben, maximize=True)
        kept += float(ben[rows, cols].sum())
    return kept


def _realize_decoders(encoders: Sequence[np.ndarray], mat: np.ndarray,
                      M: int) -> list[BCode]:
    """Build explicit codes whose decoders attain the assignment optimum."""
    n_codes = len(encoders)
    x1, x2 = mat.shape
    cells = _cell_members(encoders, M, x1)
    decoders = [np.zeros((M, x2), dtype=np.int64) for _ in range(n_codes)]
    # default every cell to its smallest member so unassigned bins stay valid
    for ci, members in enumerate(cells):
        i, m = divmod(ci, M)
        if members.size:
            decoders[i][m, :] = members[0]
    for y in range(x2):
        ben = _column_benefit(cells, mat[:, y])
        rows, cols = linear_sum_assignment(ben, maximize=True)
        for s, ci in zip(rows, cols):
            members = cells[ci]
            if members.size and s in members:
                i, m = divmod(ci, M)
                decoders[i][m, y] = s
    return [BCode(M, enc, dec) for enc, dec in zip(encoders, decoders)]


def best_multi_b(joint: Dist, alphabet: PairAlphabet, M: int, k: int,
                 budget: int, seed: int) -> MultiCodeResult:
    """Search for k+1 size-M B-codes minimizing the joint miss probability.

    Exhaustive (exact) when the number of canonical binning tuples is at
    most ``budget``; otherwise a seeded stochastic local search whose
    result is an upper bound on e_B(M; k).  Either way the result is a
    deterministic function of (inputs, seed, budget).
    """
    if M < 1:
        raise ValueError("code size must be positive")
    if k < 0:
        raise ValueError("number of extra codes must be nonnegative")
    if budget < 1:
        raise ValueError("budget must be positive")
    mat = joint.probs.reshape(alphabet.x1_size, alphabet.x2_size)
    n_codes = k + 1
    n_parts = count_partitions(alphabet.x1_size, M)
    tuple_space = n_parts ** n_codes
    if tuple_space <= budget:
        encoders, kept = _exhaustive_search(mat, alphabet, M, n_codes)
        mode = "exhaustive"
    else:
        encoders, kept = _stochastic_search(mat, alphabet, M, n_codes,
                                            budget, seed)
        mode = "stochastic"
    codes = _realize_decoders(encoders, mat, M)
    miss = joint_miss_probability(codes, joint, alphabet)
    return MultiCodeResult(tuple(codes), miss, mode, seed)


def _exhaustive_search(mat: np.ndarray, alphabet: PairAlphabet, M: int,
                       n_codes: int) -> tuple[list[np.ndarray], float]:
    partitions = [np.asarray(p) for p in iter_partitions(alphabet.x1_size, M)]
    best_kept = -1.0
    best: list[np.ndarray] | None = None
    # lexicographic tuple order; the first optimum wins ties
    for combo in itertools.product(partitions, repeat=n_codes):
        kept = _tuple_kept_mass(combo, mat, M)
        if kept > best_kept + 1e-15:
            best_kept = kept
            best = list(combo)
    assert best is not None
    return best, best_kept


def _stochastic_search(mat: np.ndarray, alphabet: PairAlphabet, M: int,
                       n_codes: int, budget: int,
                       seed: int) -> tuple[list[np.ndarray], float]:
    """Random restarts plus first-improvement single-symbol bin moves.

    Each restart draws from a generator seeded by (seed, restart index),
    so the outcome does not depend on how restarts are scheduled.
    """
    x1 = alphabet.x1_size
    evals = 0
    best_kept = -1.0
    best: list[np.ndarray] | None = None
    restart = 0
    while evals < budget:
        rng = np.random.default_rng([seed & 0xFFFFFFFFFFFFFFFF, restart])
        encoders = [rng.integers(0, M, size=x1) for _ in range(n_codes)]
        kept = _tuple_kept_mass(encoders, mat, M)
        evals += 1
        improved = True
        while improved and evals < budget:
            improved = False
            for i in range(n_codes):
                for s in range(x1):
                    old = encoders[i][s]
                    for b in range(M):
                        if b == old or evals >= budget:
                            continue
                        encoders[i][s] = b
                        cand = _tuple_kept_mass(encoders, mat, M)
                        evals += 1
                        if cand > kept + 1e-15:
                            kept = cand
                            old = b
                            improved = True
                        else:
                            encoders[i][s] = old
        if kept > best_kept + 1e-15:
            best_kept = kept
            best = [enc.copy() for enc in encoders]
        restart += 1
    assert best is not None
    return best, best_kept


def k_index(c, joint: Dist, alphabet: PairAlphabet, k_max: int,
            budget: int = DEFAULT_EXHAUSTIVE_CAP) -> int | None:
    """Smallest k <= k_max with e_B(||c||; k) <= error(c), else None.

    Measures how many size-matched B-codes it takes to jointly match the
    given code's error probability.  Requires the exhaustive regime: the
    binning tuple space at every k <= k_max must fit ``budget``.
    """
    if k_max < 0:
        raise ValueError("k_max must be nonnegative")
    err = error_probability(c, joint, alphabet)
    n_parts = count_partitions(alphabet.x1_size, c.M)
    for k in range(k_max + 1):
        if n_parts ** (k + 1) > budget:
            raise ResourceLimitError(
                f"binning tuple space at k={k} exceeds the exhaustive budget"
            )
        result = best_multi_b(joint, alphabet, c.M, k, budget, seed=0)
        if result.miss_probability <= err + 1e-12:
            return k
    return None
