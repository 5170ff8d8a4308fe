"""Independent brute-force verifiers for the optimized constructions.

Everything here recomputes a quantity by raw enumeration or sampling,
sharing as little machinery as possible with the code it certifies:

* ``enumerate_a_codes`` minimizes over literal encoder/decoder table
  pairs, certifying the per-column top-M selection of
  :func:`sidecode.codes.optimal_a_code`.
* ``enumerate_b_tuples`` minimizes the joint miss over labeled encoder
  tuples with decoders optimized by subset enumeration and backtracking
  transversal checks, certifying both :func:`sidecode.codes.optimal_b_code`
  and the exhaustive mode of :func:`sidecode.multicode.best_multi_b`.
* ``sample_variational_identity`` stress-tests the two minimum
  identities min G = 1/mu(B) and min D = -log2 mu(B) over random
  measures supported on B.
* ``b_subadditivity_probe`` searches small instances for a pair of
  B-codes whose correct-set union no size-sum B-code can realize.
  It reports evidence only; a counterexample at one blocklength says
  nothing about other scales.

Caps are enforced up front; exceeding one raises
:class:`~sidecode.errors.ResourceLimitError` (the probe instead returns
an ``inconclusive`` report, since partial evidence is still evidence).
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from .codes import BCode, PairAlphabet, correct_set
from .errors import ResourceLimitError
from .measures import Dist, EventSet, conditional_restriction, g_functional, kl_divergence

A_ENUM_CAP = 100_000_000
A_LITERAL_PAIR_CAP = 200_000
B_TUPLE_CAP = 10_000_000


def _check_joint(joint: Dist, alphabet: PairAlphabet) -> np.ndarray:
    if joint.size != alphabet.total:
        raise ValueError("joint is over a different pair alphabet")
    return joint.probs.reshape(alphabet.x1_size, alphabet.x2_size)


def enumerate_a_codes(joint: Dist, alphabet: PairAlphabet, M: int) -> float:
    """Exact minimum A-code error by enumerating raw tables.

    Small instances run the fully literal double loop over all
    encoder/decoder pairs; larger ones enumerate decoders and minimize
    the encoder cell by cell, which ranges over the same pair space.
    """
    if M < 1:
        raise ValueError("code size must be positive")
    mat = _check_joint(joint, alphabet)
    x1, x2 = alphabet.x1_size, alphabet.x2_size
    enc_count = M ** (x1 * x2)
    dec_count = x1 ** (M * x2)
    if enc_count * dec_count > A_ENUM_CAP:
        raise ResourceLimitError(
            f"{enc_count} encoders x {dec_count} decoders exceed the "
            f"enumeration cap of {A_ENUM_CAP}"
        )
    if enc_count * dec_count <= A_LITERAL_PAIR_CAP:
        return _enumerate_a_literal(mat, x1, x2, M)
    return _enumerate_a_by_decoder(mat, x1, x2, M)


def _enumerate_a_literal(mat: np.ndarray, x1: int, x2: int, M: int) -> float:
    best_kept = -1.0
    for dec in itertools.product(range(x1), repeat=M * x2):
        for enc in itertools.product(range(M), repeat=x1 * x2):
            kept = 0.0
            for x in range(x1):
                for y in range(x2):
                    if dec[enc[x * x2 + y] * x2 + y] == x:
                        kept += mat[x, y]
            if kept > best_kept:
                best_kept = kept
    return min(max(1.0 - best_kept, 0.0), 1.0)


def _enumerate_a_by_decoder(mat: np.ndarray, x1: int, x2: int, M: int) -> float:
    best_kept = -1.0
    for dec in itertools.product(range(x1), repeat=M * x2):
        kept = 0.0
        for x in range(x1):
            for y in range(x2):
                # best message for this cell under the fixed decoder
                if any(dec[m * x2 + y] == x for m in range(M)):
                    kept += mat[x, y]
        if kept > best_kept:
            best_kept = kept
    return min(max(1.0 - best_kept, 0.0), 1.0)


def _iter_rgs(n: int, max_value: int) -> Iterator[tuple[int, ...]]:
    """Restricted growth strings of length n with values < max_value,
    written independently of the enumerator in :mod:`sidecode.codes`."""

    def rec(prefix: list[int], top: int) -> Iterator[tuple[int, ...]]:
        if len(prefix) == n:
            yield tuple(prefix)
            return
        for v in range(min(top + 1, max_value - 1) + 1):
            yield from rec(prefix + [v], max(top, v))

    yield from rec([0], 0)


def _count_rgs(n: int, max_value: int) -> int:
    total = 0
    for _ in _iter_rgs(n, max_value):
        total += 1
        if total > B_TUPLE_CAP:
            break
    return total


def _coverable_mass(bins_per_code: Sequence[Sequence[tuple[int, ...]]],
                    weights: np.ndarray) -> float:
    """Max total weight of a symbol set admitting an injective assignment
    of symbols to (code, bin) cells containing them.

    Enumerates candidate subsets heaviest-first and certifies each with a
    backtracking matching; the first coverable subset of each size bound
    dominates nothing smaller, so all subsets are scanned.
    """
    cells: list[tuple[int, ...]] = []
    for bins in bins_per_code:
        cells.extend(tuple(b) for b in bins)
    n_sym = weights.size

    def assignable(symbols: tuple[int, ...]) -> bool:
        used = [False] * len(cells)

        def place(i: int) -> bool:
            if i == len(symbols):
                return True
            s = symbols[i]
            for ci, cell in enumerate(cells):
                if not used[ci] and s in cell:
                    used[ci] = True
                    if place(i + 1):
                        return True
                    used[ci] = False
            return False

        return place(0)

    best = 0.0
    for r in range(n_sym + 1):
        for combo in itertools.combinations(range(n_sym), r):
            w = float(weights[list(combo)].sum()) if combo else 0.0
            if w > best and assignable(combo):
                best = w
    return best


def enumerate_b_tuples(joint: Dist, alphabet: PairAlphabet, M: int,
                       k: int) -> float:
    """Exact minimum joint miss of k+1 size-M B-codes.

    Enumerates canonical binning tuples and, for each, the best jointly
    chosen decoders by direct subset search.
    """
    if M < 1:
        raise ValueError("code size must be positive")
    if k < 0:
        raise ValueError("number of extra codes must be nonnegative")
    mat = _check_joint(joint, alphabet)
    x1, x2 = alphabet.x1_size, alphabet.x2_size
    n_parts = _count_rgs(x1, M)
    if n_parts ** (k + 1) > B_TUPLE_CAP:
        raise ResourceLimitError(
            f"{n_parts}^{k + 1} binning tuples exceed the cap of {B_TUPLE_CAP}"
        )
    partitions = list(_iter_rgs(x1, M))
    best_kept = -1.0
    for combo in itertools.product(partitions, repeat=k + 1):
        bins_per_code = [
            [tuple(s for s in range(x1) if enc[s] == m) for m in range(M)]
            for enc in combo
        ]
        kept = sum(
            _coverable_mass(bins_per_code, mat[:, y]) for y in range(x2)
        )
        best_kept = max(best_kept, kept)
    return min(max(1.0 - best_kept, 0.0), 1.0)


@dataclass(frozen=True)
class VariationalReport:
    """Worst margins seen while sampling measures supported on an event."""

    trials: int
    event_mass: float
    g_bound: float        # 1 / mu(B)
    d_bound_bits: float   # -log2 mu(B)
    worst_g_margin: float  # min over samples of G(nu||mu) - g_bound
    worst_d_margin: float  # min over samples of D(nu||mu) - d_bound_bits
    restriction_g_gap: float  # |G(mu|B || mu) - g_bound|, relative
    restriction_d_gap: float  # |D(mu|B || mu) - d_bound_bits|, absolute
    ok: bool


def sample_variational_identity(mu: Dist, B: EventSet, trials: int,
                                seed: int) -> VariationalReport:
    """Check that no random measure on B beats the conditional restriction.

    Samples ``trials`` measures supported on B (normalized exponential
    variates), asserting G(nu||mu) >= 1/mu(B) - 1e-9 and
    D(nu||mu) >= -log2 mu(B) - 1e-9, with both bounds attained by the
    restriction itself.
    """
    if trials < 1:
        raise ValueError("need at least one trial")
    mass = mu.mass(B)
    if mass <= 0.0:
        raise ValueError("event must have positive mass under mu")
    g_bound = 1.0 / mass
    d_bound = -math.log2(mass)

    keep = B.bools()
    rng = np.random.default_rng(seed)
    raw = rng.standard_exponential((trials, mu.size)) * keep
    samples = raw / raw.sum(axis=1, keepdims=True)
    m = mu.probs
    on = samples > 0.0
    with np.errstate(divide="ignore", invalid="ignore"):
        g_terms = np.where(on, samples * samples / m[np.newaxis, :], 0.0)
        d_terms = np.where(
            on, samples * np.log2(samples / m[np.newaxis, :]), 0.0
        )
    g_vals = g_terms.sum(axis=1)
    d_vals = d_terms.sum(axis=1)

    restriction = conditional_restriction(mu, B, mu)
    g_at = g_functional(restriction, mu)
    d_at = kl_divergence(restriction, mu)
    g_gap = abs(g_at - g_bound) / g_bound
    d_gap = abs(d_at - d_bound)

    worst_g = float(g_vals.min() - g_bound)
    worst_d = float(d_vals.min() - d_bound)
    ok = (
        worst_g >= -1e-9
        and worst_d >= -1e-9
        and g_gap <= 1e-12
        and d_gap <= 1e-9
    )
    return VariationalReport(
        trials, mass, g_bound, d_bound, worst_g, worst_d, g_gap, d_gap, ok
    )


@dataclass(frozen=True)
class ProbeWitness:
    """A pair of B-codes whose correct-set union defeated the search."""

    c1: BCode
    c2: BCode
    union_rows_per_column: tuple[tuple[int, ...], ...]
    partitions_tried: int


@dataclass(frozen=True)
class ProbeReport:
    instances_checked: int
    counterexample: ProbeWitness | None
    verdict: str  # all_hold | counterexample_found | inconclusive

    def __post_init__(self):
        has = self.counterexample is not None
        if has != (self.verdict == "counterexample_found"):
            raise ValueError("witness present iff a counterexample was found")


PROBE_MAX_X1 = 4
PROBE_MAX_X2 = 3
PROBE_MAX_SIZE = 2


def _union_realizable(union_rows: list[set[int]], x1: int, max_blocks: int) -> bool:
    """Is there a B-code with at most ``max_blocks`` messages whose correct
    set has exactly the given rows in every column?

    A binning works iff no column's row set meets any bin twice, and a
    single-bin code additionally needs exactly one row per column (its
    decoder always outputs something in the bin).
    """
    for enc in _iter_rgs(x1, max_blocks):
        blocks = max(enc) + 1
        if blocks == 1:
            if all(len(rows) == 1 for rows in union_rows):
                return True
            continue
        if all(
            len({enc[s] for s in rows}) == len(rows) for rows in union_rows
        ):
            return True
    return False


def b_subadditivity_probe(alphabet: PairAlphabet, trials: int,
                          seed: int) -> ProbeReport:
    """Look for pairs of B-codes whose union no size-sum B-code matches.

    Enumerates all pairs when the pair space is within ``trials``,
    otherwise samples seeded random pairs.  Sizes of the two codes range
    over {1, ..., PROBE_MAX_SIZE}.  Returns ``inconclusive`` without
    checking anything when the alphabet exceeds the probe caps.
    """
    if trials < 1:
        raise ValueError("need at least one trial")
    x1, x2 = alphabet.x1_size, alphabet.x2_size
    if x1 > PROBE_MAX_X1 or x2 > PROBE_MAX_X2:
        return ProbeReport(0, None, "inconclusive")

    def all_codes(M: int) -> list[BCode]:
        codes = []
        for enc in itertools.product(range(M), repeat=x1):
            for dec in itertools.product(range(x1), repeat=M * x2):
                codes.append(
                    BCode(M, np.array(enc), np.array(dec).reshape(M, x2))
                )
        return codes

    sizes = range(1, PROBE_MAX_SIZE + 1)
    space = {M: (M ** x1) * (x1 ** (M * x2)) for M in sizes}
    total_pairs = sum(space[a] * space[b] for a in sizes for b in sizes)

    def union_rows_of(c1: BCode, c2: BCode) -> list[set[int]]:
        bits = (
            correct_set(c1, alphabet).bits | correct_set(c2, alphabet).bits
        ).reshape(x1, x2)
        return [set(np.flatnonzero(bits[:, y])) for y in range(x2)]

    checked = 0
    if total_pairs <= trials:
        pools = {M: all_codes(M) for M in sizes}
        pair_iter = (
            (c1, c2)
            for a in sizes
            for b in sizes
            for c1 in pools[a]
            for c2 in pools[b]
        )
    else:
        rng = np.random.default_rng(seed)

        def sampled() -> Iterator[tuple[BCode, BCode]]:
            for _ in range(trials):
                ms = rng.integers(1, PROBE_MAX_SIZE + 1, size=2)
                pair = []
                for M in ms:
                    enc = rng.integers(0, M, size=x1)
                    dec = rng.integers(0, x1, size=(int(M), x2))
                    pair.append(BCode(int(M), enc, dec))
                yield pair[0], pair[1]

        pair_iter = sampled()

    for c1, c2 in pair_iter:
        checked += 1
        rows = union_rows_of(c1, c2)
        if not _union_realizable(rows, x1, c1.M + c2.M):
            witness = ProbeWitness(
                c1,
                c2,
                tuple(tuple(sorted(r)) for r in rows),
                sum(1 for _ in _iter_rgs(x1, c1.M + c2.M)),
            )
            return ProbeReport(checked, witness, "counterexample_found")
    return ProbeReport(checked, None, "all_hold")
