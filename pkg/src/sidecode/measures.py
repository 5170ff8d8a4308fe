"""Finite probability measures, divergences, and conditional tilting.

Everything in this module works on dense mass tables indexed by integer
outcome ids.  The two functionals of interest are the Kullback-Leibler
divergence

    D(nu || mu) = sum_x nu(x) * log2(nu(x) / mu(x))

and the second-moment functional of the density

    G(nu || mu) = sum_x nu(x)^2 / mu(x),

both taken to be +inf when ``nu`` puts mass where ``mu`` has none.  All
rates and divergences are in bits.  Conventions: 0*log(0/q) = 0 and
0^2/0 = 0; an infinite value is always the explicit float ``inf``, never
a NaN.

``conditional_restriction`` renormalizes a measure to an event, and
``recursive_tilt`` iterates that through a sequence of events, falling
back to a caller-supplied measure ``u`` when a restriction is impossible.
The accumulated ``-log2`` of the successive event masses equals the
divergence of the terminal measure from the starting one whenever no
fallback fired.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import reduce
from typing import Iterable, Sequence

import numpy as np

from .errors import ResourceLimitError

# Mass tables must sum to one within this absolute slack.
PROB_SUM_TOL = 1e-12
# Default absolute tolerance for comparing probabilities.
PROB_ABS_TOL = 1e-9
# Hard cap on the number of outcomes of any materialized table (2**24).
MAX_DENSE_OUTCOMES = 1 << 24

# Extended-real results: a nonnegative float, with math.inf as the
# explicit marker for absolute-continuity failure.
ExtReal = float


@dataclass(frozen=True, eq=False)
class Dist:
    """A probability mass table over outcomes ``{0, ..., size-1}``.

    Entries are nonnegative and sum to one within ``PROB_SUM_TOL``.  The
    underlying array is made read-only, so instances are safe to share.
    """

    probs: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.probs, dtype=np.float64)
        if arr.ndim != 1 or arr.size == 0:
            raise ValueError("probs must be a nonempty 1-d sequence")
        if arr.size > MAX_DENSE_OUTCOMES:
            raise ResourceLimitError(
                f"alphabet of {arr.size} outcomes exceeds the dense cap "
                f"of {MAX_DENSE_OUTCOMES}"
            )
        if np.any(arr < 0.0):
            raise ValueError("probabilities must be nonnegative")
        total = float(arr.sum())
        if abs(total - 1.0) > PROB_SUM_TOL:
            raise ValueError(f"probabilities sum to {total!r}, not 1")
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "probs", arr)

    @property
    def size(self) -> int:
        return int(self.probs.size)

    def mass(self, event: "EventSet") -> float:
        if event.size != self.size:
            raise ValueError("event is over a different alphabet")
        return float(self.probs[event.bools()].sum())

    def close_to(self, other: "Dist", atol: float = PROB_ABS_TOL) -> bool:
        return self.size == other.size and bool(
            np.all(np.abs(self.probs - other.probs) <= atol)
        )

    def __eq__(self, other) -> bool:  # exact, entrywise
        return isinstance(other, Dist) and np.array_equal(self.probs, other.probs)

    def __repr__(self) -> str:
        if self.size <= 8:
            body = ", ".join(f"{p:.6g}" for p in self.probs)
            return f"Dist([{body}])"
        return f"Dist(size={self.size})"


@dataclass(frozen=True)
class EventSet:
    """A subset of outcome ids, stored as a bit mask over the alphabet."""

    mask: int
    size: int

    def __post_init__(self):
        if self.size <= 0:
            raise ValueError("alphabet size must be positive")
        if not 0 <= self.mask < (1 << self.size):
            raise ValueError("mask has bits outside the alphabet")

    @classmethod
    def from_indices(cls, indices: Iterable[int], size: int) -> "EventSet":
        mask = 0
        for i in indices:
            if not 0 <= i < size:
                raise ValueError(f"outcome id {i} outside alphabet of size {size}")
            mask |= 1 << i
        return cls(mask, size)

    @classmethod
    def full(cls, size: int) -> "EventSet":
        return cls((1 << size) - 1, size)

    @classmethod
    def empty(cls, size: int) -> "EventSet":
        return cls(0, size)

    @property
    def is_empty(self) -> bool:
        return self.mask == 0

    def indices(self) -> tuple[int, ...]:
        return tuple(i for i in range(self.size) if (self.mask >> i) & 1)

    def bools(self) -> np.ndarray:
        out = np.zeros(self.size, dtype=bool)
        m = self.mask
        while m:
            low = m & -m
            out[low.bit_length() - 1] = True
            m ^= low
        return out

    def __and__(self, other: "EventSet") -> "EventSet":
        if self.size != other.size:
            raise ValueError("events over different alphabets")
        return EventSet(self.mask & other.mask, self.size)

    def __or__(self, other: "EventSet") -> "EventSet":
        if self.size != other.size:
            raise ValueError("events over different alphabets")
        return EventSet(self.mask | other.mask, self.size)


@dataclass(frozen=True)
class TiltLevel:
    """One step of the tilt recursion: the measure seen at this level,
    the event applied to it, and the mass the measure gave that event."""

    measure: Dist
    event: EventSet
    mass: float


@dataclass(frozen=True)
class TiltTrace:
    """Record of a full tilt recursion.

    ``divergence_bits`` accumulates ``-log2`` of the level masses up to
    the first fallback; a zero-mass trigger makes it +inf.  When no
    fallback fired it equals ``kl_divergence(terminal, start)``.
    """

    levels: tuple[TiltLevel, ...]
    terminal: Dist
    divergence_bits: ExtReal
    fallback_level: int | None


def uniform(size: int) -> Dist:
    if size <= 0:
        raise ValueError("alphabet size must be positive")
    return Dist(np.full(size, 1.0 / size))


def point_mass(index: int, size: int) -> Dist:
    arr = np.zeros(size)
    arr[index] = 1.0
    return Dist(arr)


def random_dist(rng: np.random.Generator, size: int,
                support: EventSet | None = None) -> Dist:
    """Random measure from normalized exponential variates, optionally
    supported on a given event (which must then be nonempty)."""
    raw = rng.standard_exponential(size)
    if support is not None:
        if support.size != size:
            raise ValueError("support over a different alphabet")
        if support.is_empty:
            raise ValueError("support event is empty")
        raw = raw * support.bools()
    return Dist(raw / raw.sum())


def with_padding_outcome(d: Dist) -> Dist:
    """Extend the alphabet by one zero-mass outcome.

    Useful when a construction needs an outcome the base measure never
    hits; all divergence values against the padded measure are unchanged.
    """
    return Dist(np.append(d.probs, 0.0))


def _check_same_alphabet(nu: Dist, mu: Dist) -> None:
    if nu.size != mu.size:
        raise ValueError(f"alphabet mismatch: {nu.size} vs {mu.size}")


def kl_divergence(nu: Dist, mu: Dist) -> ExtReal:
    """D(nu || mu) in bits; +inf if nu charges a mu-null outcome."""
    _check_same_alphabet(nu, mu)
    n = nu.probs
    m = mu.probs
    on = n > 0.0
    if np.any(m[on] == 0.0):
        return math.inf
    val = float(np.sum(n[on] * np.log2(n[on] / m[on])))
    # Rounding can push the value a hair below zero at nu == mu.
    return max(val, 0.0)


def g_functional(nu: Dist, mu: Dist) -> ExtReal:
    """G(nu || mu) = sum nu^2 / mu in the 0^2/0 = 0 convention.

    Always >= 1 by Cauchy-Schwarz, with equality exactly at nu == mu;
    +inf if nu charges a mu-null outcome.
    """
    _check_same_alphabet(nu, mu)
    n = nu.probs
    m = mu.probs
    on = n > 0.0
    if np.any(m[on] == 0.0):
        return math.inf
    return float(np.sum(n[on] * n[on] / m[on]))


def conditional_restriction(mu: Dist, event: EventSet, fallback: Dist) -> Dist:
    """mu conditioned on the event, or ``fallback`` when mu(event) = 0.

    When the event has positive mass the result puts all of its mass on
    the event.
    """
    if event.size != mu.size:
        raise ValueError("event over a different alphabet")
    _check_same_alphabet(fallback, mu)
    mass = mu.mass(event)
    if mass <= 0.0:
        return fallback
    return Dist(mu.probs * event.bools() / mass)


def recursive_tilt(mu: Dist, u: Dist, events: Sequence[EventSet]) -> TiltTrace:
    """Iterated conditional restriction through ``events``.

    Starting from ``mu``, each level restricts the current measure to the
    next event.  If the current measure gives the event zero mass, or the
    current measure already equals ``u``, the recursion falls back to
    ``u`` and stays there.  The terminal measure always equals the
    one-shot restriction of ``mu`` to the intersection of all events
    (with the same fallback), and the accumulated ``-log2`` masses equal
    its divergence from ``mu`` when no fallback fired.
    """
    _check_same_alphabet(u, mu)
    nu = mu
    levels: list[TiltLevel] = []
    div_bits = 0.0
    fallback_level: int | None = None
    for m, ev in enumerate(events):
        if ev.size != mu.size:
            raise ValueError("event over a different alphabet")
        keep = ev.bools()
        mass = float(nu.probs[keep].sum())
        levels.append(TiltLevel(nu, ev, mass))
        if fallback_level is None and mass > 0.0 and nu != u:
            div_bits -= math.log2(mass)
            nu = Dist(nu.probs * keep / mass)
        else:
            if fallback_level is None:
                fallback_level = m
                if mass == 0.0:
                    div_bits = math.inf
            nu = u
    return TiltTrace(tuple(levels), nu, div_bits, fallback_level)


def iid_extension(p: Dist, n: int) -> Dist:
    """n-fold product of ``p`` over blocks of length n.

    Block index is lexicographic with the first symbol most significant:
    outcome ``(s_0, ..., s_{n-1})`` maps to ``sum s_t * size^(n-1-t)``.
    """
    if n < 1:
        raise ValueError("blocklength must be >= 1")
    if p.size ** n > MAX_DENSE_OUTCOMES:
        raise ResourceLimitError(
            f"{p.size}^{n} outcomes exceed the dense cap of {MAX_DENSE_OUTCOMES}"
        )
    out = reduce(np.kron, [p.probs] * n)
    return Dist(out / out.sum())


def mixture_extension(alpha: float, p1: Dist, p2: Dist, n: int) -> Dist:
    """Entrywise mixture ``alpha * p1^n + (1 - alpha) * p2^n``."""
    if not 0.0 < alpha < 1.0:
        raise ValueError("mixture weight must lie strictly inside (0, 1)")
    _check_same_alphabet(p1, p2)
    a = iid_extension(p1, n)
    b = iid_extension(p2, n)
    out = alpha * a.probs + (1.0 - alpha) * b.probs
    return Dist(out / out.sum())


def conditional_entropy(q: Dist, x1_size: int, x2_size: int) -> float:
    """H(X1 | X2) in bits of a joint table with x1-major pair indexing."""
    if x1_size < 1 or x2_size < 1:
        raise ValueError("alphabet sizes must be positive")
    if q.size != x1_size * x2_size:
        raise ValueError(
            f"joint has {q.size} entries, expected {x1_size}*{x2_size}"
        )
    mat = q.probs.reshape(x1_size, x2_size)
    marg2 = mat.sum(axis=0)
    on = mat > 0.0
    ratios = np.divide(mat, marg2[np.newaxis, :], out=np.ones_like(mat), where=on)
    h = -float(np.sum(mat[on] * np.log2(ratios[on])))
    return max(h, 0.0)
