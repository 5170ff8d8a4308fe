"""Fixed-length codes for a source with side information.

Two code families over a pair alphabet X1 x X2:

* ``ACode`` -- the encoder sees both the source symbol and the side
  information: encoder (x1, x2) -> message, decoder (message, x2) -> x1.
* ``BCode`` -- the encoder sees only the source symbol: encoder
  x1 -> message, decoder (message, x2) -> x1.  Every B-code embeds into
  an A-code whose encoder ignores x2 (``b_to_a``).

A code's *correct set* is the set of pairs it reproduces exactly, and
its error probability under a joint distribution is the mass of the
complement.  ``optimal_a_code`` realizes the smallest achievable error
of an A-code with M messages by keeping, for every side-information
symbol, the M most probable source symbols.  ``optimal_b_code``
exhaustively searches source binnings (canonicalized as restricted
growth strings) equipped with maximum-a-posteriori decoders.

``merge_a_codes`` combines two A-codes into one whose correct set is
exactly the union and whose size is the sum -- the property that makes
the A-family subadditive.  Whether B-codes admit such a merge is probed
empirically in :mod:`sidecode.oracles`.

Messages are 0-based.  Ties anywhere are broken toward the smallest
index so that all constructions are reproducible.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .errors import ResourceLimitError
from .measures import Dist

# Cap on the number of canonical binnings optimal_b_code may enumerate.
PARTITION_ENUM_CAP = 10_000_000


@dataclass(frozen=True)
class PairAlphabet:
    """Pair alphabet with x1-major flat indexing: index = x1*x2_size + x2."""

    x1_size: int
    x2_size: int

    def __post_init__(self):
        if self.x1_size < 1 or self.x2_size < 1:
            raise ValueError("alphabet sizes must be positive")

    @property
    def total(self) -> int:
        return self.x1_size * self.x2_size

    def index(self, x1: int, x2: int) -> int:
        return x1 * self.x2_size + x2

    def decode(self, pair_index: int) -> tuple[int, int]:
        return divmod(pair_index, self.x2_size)


@dataclass(frozen=True, eq=False)
class ACode:
    """Encoder table (x1, x2) -> message and decoder table (message, x2) -> x1."""

    M: int
    encoder: np.ndarray  # shape (x1_size, x2_size), values in [0, M)
    decoder: np.ndarray  # shape (M, x2_size), values in [0, x1_size)

    def __post_init__(self):
        enc = np.array(self.encoder, dtype=np.int64)
        dec = np.array(self.decoder, dtype=np.int64)
        if self.M < 1:
            raise ValueError("code size must be positive")
        if dec.ndim != 2 or dec.shape[0] != self.M:
            raise ValueError("decoder must have one row per message")
        if enc.ndim != 2 or enc.shape[1] != dec.shape[1]:
            raise ValueError("encoder/decoder side-information sizes differ")
        if enc.min() < 0 or enc.max() >= self.M:
            raise ValueError("encoder emits a message outside [0, M)")
        enc.flags.writeable = False
        dec.flags.writeable = False
        object.__setattr__(self, "encoder", enc)
        object.__setattr__(self, "decoder", dec)


@dataclass(frozen=True, eq=False)
class BCode:
    """Encoder table x1 -> message (side information unseen) and decoder
    table (message, x2) -> x1."""

    M: int
    encoder: np.ndarray  # shape (x1_size,), values in [0, M)
    decoder: np.ndarray  # shape (M, x2_size), values in [0, x1_size)

    def __post_init__(self):
        enc = np.array(self.encoder, dtype=np.int64)
        dec = np.array(self.decoder, dtype=np.int64)
        if self.M < 1:
            raise ValueError("code size must be positive")
        if enc.ndim != 1:
            raise ValueError("B-code encoder depends on x1 only")
        if dec.ndim != 2 or dec.shape[0] != self.M:
            raise ValueError("decoder must have one row per message")
        if enc.min() < 0 or enc.max() >= self.M:
            raise ValueError("encoder emits a message outside [0, M)")
        enc.flags.writeable = False
        dec.flags.writeable = False
        object.__setattr__(self, "encoder", enc)
        object.__setattr__(self, "decoder", dec)


@dataclass(frozen=True, eq=False)
class CorrectSet:
    """Subset of the pair alphabet, as a boolean mask over flat pair indices."""

    bits: np.ndarray
    alphabet: PairAlphabet

    def __post_init__(self):
        arr = np.asarray(self.bits, dtype=bool)
        if arr.shape != (self.alphabet.total,):
            raise ValueError("bit mask length must equal the pair-alphabet size")
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "bits", arr)

    def mass(self, joint: Dist) -> float:
        if joint.size != self.alphabet.total:
            raise ValueError("joint is over a different pair alphabet")
        return float(joint.probs[self.bits].sum())

    def union(self, other: "CorrectSet") -> "CorrectSet":
        self._check(other)
        return CorrectSet(self.bits | other.bits, self.alphabet)

    def intersection(self, other: "CorrectSet") -> "CorrectSet":
        self._check(other)
        return CorrectSet(self.bits & other.bits, self.alphabet)

    def complement(self) -> "CorrectSet":
        return CorrectSet(~self.bits, self.alphabet)

    def count(self) -> int:
        return int(self.bits.sum())

    def indices(self) -> tuple[int, ...]:
        return tuple(int(i) for i in np.flatnonzero(self.bits))

    def _check(self, other: "CorrectSet") -> None:
        if self.alphabet != other.alphabet:
            raise ValueError("correct sets over different alphabets")

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, CorrectSet)
            and self.alphabet == other.alphabet
            and np.array_equal(self.bits, other.bits)
        )


@dataclass(frozen=True)
class CodingSystemView:
    """The abstract face of a code: its size and its correct set."""

    size: int
    correct: CorrectSet


def _check_code(code: ACode | BCode, alphabet: PairAlphabet) -> None:
    if code.decoder.shape[1] != alphabet.x2_size:
        raise ValueError("decoder side-information size does not match alphabet")
    if isinstance(code, ACode):
        if code.encoder.shape != (alphabet.x1_size, alphabet.x2_size):
            raise ValueError("encoder table does not match alphabet")
    else:
        if code.encoder.shape != (alphabet.x1_size,):
            raise ValueError("encoder table does not match alphabet")
    if code.decoder.max() >= alphabet.x1_size:
        raise ValueError("decoder emits a symbol outside the source alphabet")


def decoded_table(code: ACode | BCode, alphabet: PairAlphabet) -> np.ndarray:
    """The (x1, x2) table of symbols the code reproduces."""
    _check_code(code, alphabet)
    x2_grid = np.arange(alphabet.x2_size)[np.newaxis, :]
    if isinstance(code, ACode):
        msgs = code.encoder
    else:
        msgs = np.broadcast_to(
            code.encoder[:, np.newaxis], (alphabet.x1_size, alphabet.x2_size)
        )
    return code.decoder[msgs, np.broadcast_to(x2_grid, msgs.shape)]


def correct_set(code: ACode | BCode, alphabet: PairAlphabet) -> CorrectSet:
    """Pairs (x1, x2) the code decodes back to x1."""
    out = decoded_table(code, alphabet)
    x1_grid = np.arange(alphabet.x1_size)[:, np.newaxis]
    return CorrectSet((out == x1_grid).reshape(-1), alphabet)


def error_probability(code: ACode | BCode, joint: Dist,
                      alphabet: PairAlphabet) -> float:
    """P(decoder output != X1) under the joint distribution.

    Computed as the mass of the complement of the correct set, so that a
    tuple of identical codes has exactly this joint miss probability.
    """
    if joint.size != alphabet.total:
        raise ValueError("joint is over a different pair alphabet")
    missed = float(joint.probs[~correct_set(code, alphabet).bits].sum())
    return min(max(missed, 0.0), 1.0)


def lossy_correct_set(code: ACode | BCode, distortion: np.ndarray, D: float,
                      alphabet: PairAlphabet) -> CorrectSet:
    """Pairs whose reproduction lands within distortion D of the source.

    ``distortion[x1, x1']`` is the per-symbol distortion of reproducing
    x1 as x1'.  With 0/1 Hamming distortion and D = 0 this coincides
    with :func:`correct_set`.
    """
    dist = np.asarray(distortion, dtype=np.float64)
    if dist.shape != (alphabet.x1_size, alphabet.x1_size):
        raise ValueError("distortion table must be x1_size by x1_size")
    if D < 0:
        raise ValueError("distortion level must be nonnegative")
    out = decoded_table(code, alphabet)
    x1_grid = np.arange(alphabet.x1_size)[:, np.newaxis]
    bits = dist[np.broadcast_to(x1_grid, out.shape), out] <= D
    return CorrectSet(bits.reshape(-1), alphabet)


def _joint_matrix(joint: Dist, alphabet: PairAlphabet) -> np.ndarray:
    if joint.size != alphabet.total:
        raise ValueError("joint is over a different pair alphabet")
    return joint.probs.reshape(alphabet.x1_size, alphabet.x2_size)


def optimal_a_error(joint: Dist, alphabet: PairAlphabet, M: int) -> float:
    """Smallest error of any A-code with M messages, without building tables.

    Equals one minus the total mass of the M heaviest source symbols in
    every side-information column.
    """
    if M < 1:
        raise ValueError("code size must be positive")
    mat = _joint_matrix(joint, alphabet)
    x1 = alphabet.x1_size
    if M >= x1:
        return 0.0
    kept = float(np.partition(mat, x1 - M, axis=0)[x1 - M:, :].sum())
    return min(max(1.0 - kept, 0.0), 1.0)


def optimal_a_code(joint: Dist, alphabet: PairAlphabet,
                   M: int) -> tuple[ACode, float]:
    """Best A-code of size M and its error probability.

    For each side-information symbol the M most probable source symbols
    (ties toward the smaller index) get messages 0..M-1 in selection
    order; the decoder inverts the selection.  Unselected symbols encode
    to message 0 and necessarily decode incorrectly.
    """
    if M < 1:
        raise ValueError("code size must be positive")
    mat = _joint_matrix(joint, alphabet)
    x1, x2 = alphabet.x1_size, alphabet.x2_size
    keep = min(M, x1)
    encoder = np.zeros((x1, x2), dtype=np.int64)
    decoder = np.zeros((M, x2), dtype=np.int64)
    kept_mass = 0.0
    for y in range(x2):
        order = np.argsort(-mat[:, y], kind="stable")
        chosen = order[:keep]
        decoder[:keep, y] = chosen
        encoder[chosen, y] = np.arange(keep)
        kept_mass += float(mat[chosen, y].sum())
    code = ACode(M, encoder, decoder)
    return code, min(max(1.0 - kept_mass, 0.0), 1.0)


def iter_partitions(n_items: int, max_blocks: int) -> Iterator[tuple[int, ...]]:
    """Canonical binnings of ``n_items`` into at most ``max_blocks`` labeled
    bins, one per set partition, as restricted growth strings."""
    if n_items < 1 or max_blocks < 1:
        raise ValueError("need at least one item and one block")
    a = [0] * n_items
    while True:
        yield tuple(a)
        # advance to the next restricted growth string
        i = n_items - 1
        while i > 0:
            prefix_max = max(a[:i])
            if a[i] <= min(prefix_max, max_blocks - 2):
                a[i] += 1
                for j in range(i + 1, n_items):
                    a[j] = 0
                break
            i -= 1
        else:
            return


def count_partitions(n_items: int, max_blocks: int) -> int:
    """Number of set partitions of ``n_items`` into at most ``max_blocks``
    blocks (the length of :func:`iter_partitions`)."""
    # S[j] = Stirling2(i, j) built row by row
    limit = min(max_blocks, n_items)
    S = [0] * (limit + 1)
    S[0] = 1
    for _ in range(n_items):
        for j in range(limit, 0, -1):
            S[j] = j * S[j] + S[j - 1]
        S[0] = 0
    return sum(S[1:])


def map_decoder(encoder: np.ndarray, joint: Dist, alphabet: PairAlphabet,
                M: int) -> BCode:
    """The a-posteriori-optimal decoder for a fixed source binning.

    For each (message, x2) the decoder outputs the heaviest source symbol
    in that bin (ties toward the smaller index); empty bins decode to 0.
    """
    enc = np.asarray(encoder, dtype=np.int64)
    if enc.shape != (alphabet.x1_size,):
        raise ValueError("encoder table does not match alphabet")
    if M < 1 or enc.min() < 0 or enc.max() >= M:
        raise ValueError("encoder emits a message outside [0, M)")
    mat = _joint_matrix(joint, alphabet)
    decoder = np.zeros((M, alphabet.x2_size), dtype=np.int64)
    for m in range(M):
        rows = np.flatnonzero(enc == m)
        if rows.size:
            decoder[m, :] = rows[np.argmax(mat[rows, :], axis=0)]
    return BCode(M, enc, decoder)


def optimal_b_code(joint: Dist, alphabet: PairAlphabet,
                   M: int) -> tuple[BCode, float]:
    """Best B-code of size M and its error probability.

    Exhausts canonical source binnings (bin relabelings are skipped via
    restricted-growth-string enumeration) with maximum-a-posteriori
    decoders.  The error can never beat the A-code optimum of the same
    size.  Raises :class:`ResourceLimitError` when the binning count
    exceeds ``PARTITION_ENUM_CAP``.
    """
    if M < 1:
        raise ValueError("code size must be positive")
    n_parts = count_partitions(alphabet.x1_size, M)
    if n_parts > PARTITION_ENUM_CAP:
        raise ResourceLimitError(
            f"{n_parts} binnings exceed the enumeration cap of {PARTITION_ENUM_CAP}"
        )
    mat = _joint_matrix(joint, alphabet)
    best_enc: tuple[int, ...] | None = None
    best_kept = -1.0
    for enc in iter_partitions(alphabet.x1_size, M):
        enc_arr = np.asarray(enc)
        kept = 0.0
        for m in range(min(M, alphabet.x1_size)):
            rows = enc_arr == m
            if rows.any():
                kept += float(mat[rows, :].max(axis=0).sum())
        if kept > best_kept + 1e-15:
            best_kept = kept
            best_enc = enc
    assert best_enc is not None
    code = map_decoder(np.asarray(best_enc), joint, alphabet, M)
    return code, min(max(1.0 - best_kept, 0.0), 1.0)


def b_to_a(b: BCode) -> ACode:
    """Embed a B-code as the A-code whose encoder ignores side information.

    Correct set and error probability are invariant under the embedding.
    """
    x2_size = b.decoder.shape[1]
    encoder = np.repeat(b.encoder[:, np.newaxis], x2_size, axis=1)
    return ACode(b.M, encoder, b.decoder)


def merge_a_codes(c1: ACode, c2: ACode, alphabet: PairAlphabet) -> ACode:
    """One A-code whose correct set is exactly the union of the two inputs.

    Pairs the first code decodes correctly keep its messages; everything
    else is handed to the second code on a disjoint message range.  The
    size adds: ``M = c1.M + c2.M``.
    """
    _check_code(c1, alphabet)
    _check_code(c2, alphabet)
    t1 = correct_set(c1, alphabet).bits.reshape(
        alphabet.x1_size, alphabet.x2_size
    )
    encoder = np.where(t1, c1.encoder, c2.encoder + c1.M)
    decoder = np.vstack([c1.decoder, c2.decoder])
    return ACode(c1.M + c2.M, encoder, decoder)


def min_size_for_error(joint: Dist, alphabet: PairAlphabet, a: float,
                       n: int = 1) -> float:
    """Smallest rate (1/n) log2 M* at which an A-code keeps mass >= a.

    M* is the least size whose optimal error probability is at most
    1 - a; it never exceeds x1_size.  Nondecreasing in ``a``.
    """
    if not 0.0 <= a <= 1.0:
        raise ValueError("target correct mass must lie in [0, 1]")
    if n < 1:
        raise ValueError("blocklength must be >= 1")
    mat = _joint_matrix(joint, alphabet)
    # kept[m] = total mass of the (m+1) heaviest symbols per column
    kept = np.cumsum(np.sort(mat, axis=0)[::-1, :], axis=0).sum(axis=1)
    feasible = np.flatnonzero(kept >= a - 1e-9)
    m_star = int(feasible[0]) + 1 if feasible.size else alphabet.x1_size
    return float(np.log2(m_star)) / n


def random_a_code(rng: np.random.Generator, alphabet: PairAlphabet,
                  M: int) -> ACode:
    encoder = rng.integers(0, M, size=(alphabet.x1_size, alphabet.x2_size))
    decoder = rng.integers(0, alphabet.x1_size, size=(M, alphabet.x2_size))
    return ACode(M, encoder, decoder)


def random_b_code(rng: np.random.Generator, alphabet: PairAlphabet,
                  M: int) -> BCode:
    encoder = rng.integers(0, M, size=alphabet.x1_size)
    decoder = rng.integers(0, alphabet.x1_size, size=(M, alphabet.x2_size))
    return BCode(M, encoder, decoder)
