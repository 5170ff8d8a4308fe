"""Reliability-function curves and limiting error for computable sources.

The source models here are memoryless pair sources and two-component
mixtures of them.  For a memoryless source with per-letter joint P, the
best error exponent of encoder-side-informed coding at rate R above the
conditional entropy H_P(X1|X2) is

    rho_hi(R) = min { D(Q || P) : H_Q(X1|X2) >= R },

and below H_P(X1|X2) the decay rate of the correct-decoding probability
is

    rho_lo(R) = min { D(Q || P) : H_Q(X1|X2) <= R },

both minimized over joints Q on the same pair alphabet.  These are the
single-letter values of the corresponding general variational formulas
specialized to the memoryless family; results are restricted-family
values by construction.

The minimizers run a dense simplex grid followed by pairwise
mass-transfer descent with step halving.  ``predicted_eps_mixed`` gives
the limiting error probability of a two-component mixture: components
whose conditional entropy exceeds the rate are asymptotically
undecodable, so the limit is the total weight of those components.

``empirical_exponent_sweep`` materializes block joints at finite
blocklengths and reports the optimal A-code error and its exponent
estimate for direct comparison against the curves.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .codes import PairAlphabet, optimal_a_error
from .errors import ResourceLimitError
from .measures import MAX_DENSE_OUTCOMES, Dist, conditional_entropy

REFINE_MIN_STEP = 1e-7


@dataclass(frozen=True)
class SingleLetterModel:
    """A memoryless pair source (``kind="iid"``) or a two-component
    mixture of memoryless pair sources (``kind="mixture"``)."""

    kind: str
    alphabet: PairAlphabet
    p: Dist | None = None
    alpha: float | None = None
    p1: Dist | None = None
    p2: Dist | None = None

    def __post_init__(self):
        if self.kind == "iid":
            if self.p is None or self.p.size != self.alphabet.total:
                raise ValueError("iid model needs a pair joint matching the alphabet")
        elif self.kind == "mixture":
            if self.p1 is None or self.p2 is None or self.alpha is None:
                raise ValueError("mixture model needs alpha, p1 and p2")
            if not 0.0 < self.alpha < 1.0:
                raise ValueError("mixture weight must lie strictly inside (0, 1)")
            if self.p1.size != self.alphabet.total or self.p2.size != self.alphabet.total:
                raise ValueError("component joints must match the pair alphabet")
        else:
            raise ValueError(f"unknown model kind {self.kind!r}")

    def block_alphabet(self, n: int) -> PairAlphabet:
        return PairAlphabet(self.alphabet.x1_size ** n, self.alphabet.x2_size ** n)

    def block_joint(self, n: int) -> Dist:
        """Joint of (X1 block, X2 block) at blocklength n, x1-major indexed."""
        if n < 1:
            raise ValueError("blocklength must be >= 1")
        if self.alphabet.total ** n > MAX_DENSE_OUTCOMES:
            raise ResourceLimitError(
                f"block pair alphabet {self.alphabet.total}^{n} exceeds the "
                f"dense cap of {MAX_DENSE_OUTCOMES}"
            )
        if self.kind == "iid":
            out = _matrix_power_kron(self._matrix(self.p), n)
        else:
            out = self.alpha * _matrix_power_kron(self._matrix(self.p1), n) + (
                1.0 - self.alpha
            ) * _matrix_power_kron(self._matrix(self.p2), n)
        flat = out.reshape(-1)
        return Dist(flat / flat.sum())

    def component_entropies(self) -> tuple[float, ...]:
        """Per-letter H(X1|X2) of each component (one entry for iid)."""
        a = self.alphabet
        if self.kind == "iid":
            return (conditional_entropy(self.p, a.x1_size, a.x2_size),)
        return (
            conditional_entropy(self.p1, a.x1_size, a.x2_size),
            conditional_entropy(self.p2, a.x1_size, a.x2_size),
        )

    def _matrix(self, p: Dist) -> np.ndarray:
        return p.probs.reshape(self.alphabet.x1_size, self.alphabet.x2_size)


def _matrix_power_kron(mat: np.ndarray, n: int) -> np.ndarray:
    out = mat
    for _ in range(n - 1):
        out = np.kron(out, mat)
    return out


def iid_model(p: Dist, alphabet: PairAlphabet) -> SingleLetterModel:
    return SingleLetterModel("iid", alphabet, p=p)


def mixture_model(alpha: float, p1: Dist, p2: Dist,
                  alphabet: PairAlphabet) -> SingleLetterModel:
    return SingleLetterModel("mixture", alphabet, alpha=alpha, p1=p1, p2=p2)


def dsbs_pair(crossover: float) -> Dist:
    """Doubly symmetric binary pair: X1 uniform, X2 = X1 flipped with the
    given probability."""
    if not 0.0 <= crossover <= 1.0:
        raise ValueError("crossover must lie in [0, 1]")
    c = crossover
    return Dist(np.array([(1 - c) / 2, c / 2, c / 2, (1 - c) / 2]))


def dsbs_model(crossover: float) -> SingleLetterModel:
    return iid_model(dsbs_pair(crossover), PairAlphabet(2, 2))


def messages_for_rate(n: int, R: float) -> int:
    """ceil(2^(nR)), robust to the float representation of n*R."""
    v = 2.0 ** (n * R)
    nearest = round(v)
    if abs(v - nearest) < 1e-6 and nearest >= 1:
        return int(nearest)
    return int(math.ceil(v))


# ---------------------------------------------------------------------------
# constrained divergence minimization over the pair simplex
# ---------------------------------------------------------------------------

def _simplex_grid(dim: int, steps: int) -> np.ndarray:
    """All probability vectors of length ``dim`` with entries k/steps."""
    combos = itertools.combinations(range(steps + dim - 1), dim - 1)
    cuts = np.fromiter(
        (c for combo in combos for c in combo), dtype=np.int64
    ).reshape(-1, dim - 1) if dim > 1 else np.zeros((1, 0), dtype=np.int64)
    bounded = np.hstack(
        [
            np.full((cuts.shape[0], 1), -1, dtype=np.int64),
            cuts,
            np.full((cuts.shape[0], 1), steps + dim - 1, dtype=np.int64),
        ]
    )
    counts = np.diff(bounded, axis=1) - 1
    return counts / float(steps)


def _cond_entropy_rows(Q: np.ndarray, x1: int, x2: int) -> np.ndarray:
    """H(X1|X2) in bits for each row of Q (rows are flat pair joints)."""
    mats = Q.reshape(-1, x1, x2)
    marg2 = mats.sum(axis=1, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(mats > 0, mats / marg2, 1.0)
        terms = np.where(mats > 0, mats * np.log2(ratio), 0.0)
    return np.maximum(-terms.sum(axis=(1, 2)), 0.0)


def _kl_rows(Q: np.ndarray, p: np.ndarray) -> np.ndarray:
    """D(q || p) in bits for each row q of Q; +inf off p's support."""
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(Q > 0, Q * np.log2(Q / p[np.newaxis, :]), 0.0)
    out = terms.sum(axis=1)
    bad = ((Q > 0) & (p[np.newaxis, :] == 0)).any(axis=1)
    out[bad] = math.inf
    return np.maximum(out, 0.0)


def _feasible(h: float, R: float, sense: str) -> bool:
    return h >= R if sense == "ge" else h <= R


def _refine(q: np.ndarray, p: np.ndarray, R: float, sense: str, x1: int,
            x2: int, step0: float) -> tuple[float, np.ndarray]:
    """Pairwise mass-transfer descent with step halving, staying feasible."""
    q = q.copy()
    best = float(_kl_rows(q[np.newaxis, :], p)[0])
    dim = q.size
    step = step0
    while step >= REFINE_MIN_STEP:
        improved = False
        for i in range(dim):
            for j in range(dim):
                if i == j or q[i] < step - 1e-18:
                    continue
                cand = q.copy()
                cand[i] -= step
                cand[j] += step
                if cand[i] < 0.0:
                    cand[i] = 0.0
                h = float(_cond_entropy_rows(cand[np.newaxis, :], x1, x2)[0])
                if not _feasible(h, R, sense):
                    continue
                d = float(_kl_rows(cand[np.newaxis, :], p)[0])
                if d < best - 1e-15:
                    q = cand
                    best = d
                    improved = True
        if not improved:
            step /= 2.0
    return best, q


def _min_divergence(model: SingleLetterModel, R: float, grid_step: float,
                    sense: str) -> tuple[float, np.ndarray]:
    """Two-stage min of D(Q||P) over {H_Q(X1|X2) >= R} or {... <= R}."""
    if model.kind != "iid":
        raise ValueError("exponent curves are defined for iid models")
    a = model.alphabet
    if not 0.0 <= R <= math.log2(a.x1_size) + 1e-12:
        raise ValueError(f"rate {R} outside [0, log2({a.x1_size})]")
    if not 0.0 < grid_step <= 0.1:
        raise ValueError("grid step must lie in (0, 0.1]")
    p = model.p.probs
    h_p = model.component_entropies()[0]
    if _feasible(h_p, R, sense):
        return 0.0, p.copy()
    if sense == "ge" and R >= math.log2(a.x1_size) - 1e-12:
        # Only conditionally uniform joints reach the maximal conditional
        # entropy; minimize over them in closed form.
        return _uniform_conditional_min(p, a)
    steps = max(int(round(1.0 / grid_step)), 1)
    grid = _simplex_grid(a.total, steps)
    h = _cond_entropy_rows(grid, a.x1_size, a.x2_size)
    feas = h >= R if sense == "ge" else h <= R
    if not feas.any():
        raise ValueError("no feasible grid point; decrease the grid step")
    d = _kl_rows(grid[feas], p)
    q0 = grid[feas][int(np.argmin(d))]
    value, q_star = _refine(q0, p, R, sense, a.x1_size, a.x2_size, grid_step)
    return value, q_star


def _uniform_conditional_min(p: np.ndarray, a: PairAlphabet) -> tuple[float, np.ndarray]:
    mat = p.reshape(a.x1_size, a.x2_size)
    if np.any(mat <= 0):
        # a zero entry makes every conditionally uniform joint singular
        # against p unless the whole column is dropped
        log_geo = np.where(
            (mat > 0).all(axis=0), np.log2(np.maximum(mat, 1e-300)).mean(axis=0), -np.inf
        )
    else:
        log_geo = np.log2(mat).mean(axis=0)
    weights = a.x1_size * np.power(2.0, log_geo)
    total = weights.sum()
    if total <= 0:
        return math.inf, np.full(a.total, np.nan)
    q2 = weights / total
    q = np.repeat(q2[np.newaxis, :] / a.x1_size, a.x1_size, axis=0).reshape(-1)
    return -math.log2(total), q


def rho_high_rate(model: SingleLetterModel, R: float, grid_step: float) -> float:
    """min { D(Q||P) : H_Q(X1|X2) >= R }; zero when P itself is feasible."""
    return high_rate_certificate(model, R, grid_step)[0]


def high_rate_certificate(model: SingleLetterModel, R: float,
                          grid_step: float) -> tuple[float, np.ndarray]:
    """The high-rate curve value together with its minimizing joint."""
    return _min_divergence(model, R, grid_step, "ge")


def rho_low_rate(model: SingleLetterModel, R: float, grid_step: float) -> float:
    """min { D(Q||P) : H_Q(X1|X2) <= R }; zero when P itself is feasible."""
    return low_rate_certificate(model, R, grid_step)[0]


def low_rate_certificate(model: SingleLetterModel, R: float,
                         grid_step: float) -> tuple[float, np.ndarray]:
    """The low-rate curve value together with its minimizing joint."""
    return _min_divergence(model, R, grid_step, "le")


def detect_jump(model: SingleLetterModel, R: float, grid_step: float,
                threshold: float = 0.25) -> bool:
    """Heuristic flag: the high-rate curve moves by more than ``threshold``
    bits across [R - grid_step, R + grid_step]."""
    a = model.alphabet
    lo = max(R - grid_step, 0.0)
    hi = min(R + grid_step, math.log2(a.x1_size))
    return abs(
        rho_high_rate(model, hi, grid_step) - rho_high_rate(model, lo, grid_step)
    ) > threshold


def predicted_eps_mixed(model: SingleLetterModel, R: float) -> float:
    """Limiting error probability of a two-component mixture at rate R.

    Exactly the total weight of components whose conditional entropy
    exceeds R: 1 below both entropies, the heavy component's weight in
    between, 0 above both.  R must not sit on either entropy (the value
    jumps there).
    """
    if model.kind != "mixture":
        raise ValueError("limiting error prediction needs a mixture model")
    h1, h2 = model.component_entropies()
    if abs(R - h1) < 1e-12 or abs(R - h2) < 1e-12:
        raise ValueError(
            f"rate {R} sits on a component entropy; the value is discontinuous"
        )
    value = 0.0
    if R < h1:
        value += model.alpha
    if R < h2:
        value += 1.0 - model.alpha
    return value


@dataclass(frozen=True)
class SweepPoint:
    """One blocklength of an empirical exponent sweep."""

    n: int
    M: int
    e_A: float
    exponent_estimate: float  # +inf when e_A == 0


def empirical_exponent_sweep(model: SingleLetterModel, R: float,
                             n_values: Sequence[int],
                             workers: int = 1) -> list[SweepPoint]:
    """Optimal A-code error at size ceil(2^(nR)) for each blocklength.

    Reports -(1/n) log2 e_A per point, with +inf marking exact zero
    error.  Points are computed independently and returned in input
    order, so the result does not depend on ``workers``.
    """
    if R < 0:
        raise ValueError("rate must be nonnegative")
    n_list = list(n_values)
    for n in n_list:
        if n < 1:
            raise ValueError("blocklengths must be >= 1")
        if model.alphabet.total ** n > MAX_DENSE_OUTCOMES:
            raise ResourceLimitError(
                f"blocklength {n} exceeds the materialization cap"
            )

    def point(n: int) -> SweepPoint:
        joint = model.block_joint(n)
        M = messages_for_rate(n, R)
        e = optimal_a_error(joint, model.block_alphabet(n), M)
        est = math.inf if e <= 0.0 else -math.log2(e) / n
        return SweepPoint(n, M, e, est)

    if workers > 1 and len(n_list) > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(point, n_list))
    return [point(n) for n in n_list]
