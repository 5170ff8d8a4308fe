"""Bundled invariant suites.

Each check re-derives a property of one module from scratch (independent
oracle, exhaustive sweep, or randomized stress) and reports pass/fail
with a short detail string.  ``run_all`` executes every suite with
deterministic seeding; the command-line ``verify`` subcommand prints one
line per check and fails if any check fails.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Iterable

import numpy as np

from . import codes, exponents, multicode, oracles
from .codes import PairAlphabet
from .measures import (
    Dist,
    EventSet,
    conditional_entropy,
    conditional_restriction,
    g_functional,
    iid_extension,
    kl_divergence,
    mixture_extension,
    random_dist,
    recursive_tilt,
    uniform,
)


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


def _random_joint(rng: np.random.Generator, alphabet: PairAlphabet) -> Dist:
    return random_dist(rng, alphabet.total)


# ---------------------------------------------------------------------------
# measures
# ---------------------------------------------------------------------------

def check_divergence_bounds(seed: int) -> CheckResult:
    """D >= 0 and G >= 1 on random pairs, equality only at equal measures."""
    rng = np.random.default_rng([seed, 1])
    worst_d, worst_g = math.inf, math.inf
    bad = 0
    for _ in range(10_000):
        size = int(rng.integers(2, 9))
        nu = random_dist(rng, size)
        mu = random_dist(rng, size)
        d = kl_divergence(nu, mu)
        g = g_functional(nu, mu)
        worst_d = min(worst_d, d)
        worst_g = min(worst_g, g)
        if d < -1e-12 or g < 1.0 - 1e-12:
            bad += 1
        # distinct random measures must sit strictly above both bounds
        if not nu.close_to(mu, atol=1e-12) and (d < 1e-12 or g < 1.0 + 1e-12):
            bad += 1
    for size in range(2, 9):
        m = random_dist(rng, size)
        if kl_divergence(m, m) != 0.0 or abs(g_functional(m, m) - 1.0) > 1e-12:
            bad += 1
    ok = bad == 0
    return CheckResult(
        "measures.divergence_bounds",
        ok,
        f"10000 pairs, min D={worst_d:.3e}, min G-1={worst_g - 1.0:.3e}",
    )


def check_variational_identities(seed: int) -> CheckResult:
    """Restriction attains min D = -log2 mu(B) and min G = 1/mu(B); random
    feasible measures never beat either bound."""
    rng = np.random.default_rng([seed, 2])
    worst = math.inf
    bad = 0
    for i in range(100):
        size = int(rng.integers(2, 9))
        mu = random_dist(rng, size)
        n_members = int(rng.integers(1, size + 1))
        members = rng.choice(size, size=n_members, replace=False)
        event = EventSet.from_indices(members.tolist(), size)
        report = oracles.sample_variational_identity(
            mu, event, trials=1000, seed=seed * 1000 + i
        )
        worst = min(worst, report.worst_g_margin, report.worst_d_margin)
        if not report.ok:
            bad += 1
    return CheckResult(
        "measures.variational_identities",
        bad == 0,
        f"100 instances x 1000 samples, worst margin {worst:.3e}",
    )


def tilt_identity_sweep(max_alphabet: int = 6, max_len: int = 4,
                        direct_cap: int = 300_000,
                        samples_per_combo: int = 2000,
                        seed: int = 0) -> tuple[list[str], int, int]:
    """Exhaustive check that iterated tilting equals one-shot restriction.

    For every alphabet size the sweep (a) verifies every single-step
    transition from every reachable intermediate measure under every
    event, which pins the recursion's dynamics exhaustively, and (b)
    drives full event sequences through ``recursive_tilt`` directly --
    all of them when the sequence space is small enough, a seeded sample
    otherwise.  Returns (violations, sequences checked end-to-end,
    transitions checked).
    """
    violations: list[str] = []
    seq_checked = 0
    trans_checked = 0
    rng = np.random.default_rng([seed, 3])
    for k in range(1, max_alphabet + 1):
        # distinct dyadic weights: no restriction of mu is ever uniform
        # (except the k=1 corner where everything is the same point mass)
        weights = np.array([2.0 ** i for i in range(k)])
        mu = Dist(weights / weights.sum())
        u = uniform(k)
        events = [EventSet(mask, k) for mask in range(1 << k)]
        full = (1 << k) - 1

        def expected_terminal(masks: Iterable[int]) -> Dist:
            inter = full
            for m in masks:
                inter &= m
            return conditional_restriction(mu, EventSet(inter, k), u)

        def check_one(trace, masks, label) -> None:
            exp = expected_terminal(masks)
            if not np.allclose(
                trace.terminal.probs, exp.probs, rtol=0.0, atol=1e-12
            ):
                violations.append(f"{label}: terminal != one-shot restriction")
            if trace.fallback_level is None:
                d = kl_divergence(trace.terminal, mu)
                if abs(trace.divergence_bits - d) > 1e-9:
                    violations.append(f"{label}: divergence accumulator off")
            for lev in trace.levels:
                if lev.measure.mass(lev.event) != lev.mass:
                    violations.append(f"{label}: recorded level mass wrong")

        # (a) every (intermediate measure, event) transition
        states = [EventSet(m, k) for m in range(1, 1 << k)]
        for s_event in states:
            nu_s = conditional_restriction(mu, s_event, u)
            for ev in events:
                trace = recursive_tilt(nu_s, u, [ev])
                inter = s_event.mask & ev.mask
                exp = conditional_restriction(mu, EventSet(inter, k), u)
                got = trace.terminal
                # from a fallback state the recursion must stay at u
                if nu_s == u and not (k == 1 or got == u):
                    violations.append(f"k={k}: fallback state escaped")
                elif nu_s != u and not np.allclose(
                    got.probs, exp.probs, rtol=0.0, atol=1e-12
                ):
                    violations.append(
                        f"k={k} state={s_event.mask} event={ev.mask}: bad step"
                    )
                trans_checked += 1
        for ev in events:
            trace = recursive_tilt(u, u, [ev])
            if trace.terminal != u:
                violations.append(f"k={k}: tilting away from u")
            trans_checked += 1

        # (b) full sequences through the real recursion
        for length in range(0, max_len + 1):
            count = (1 << k) ** length
            if count <= direct_cap:
                for seq in itertools.product(events, repeat=length):
                    trace = recursive_tilt(mu, u, list(seq))
                    check_one(trace, [e.mask for e in seq],
                              f"k={k} seq={[e.mask for e in seq]}")
                    seq_checked += 1
            else:
                masks = rng.integers(0, 1 << k,
                                     size=(samples_per_combo, length))
                for row in masks:
                    seq = [EventSet(int(m), k) for m in row]
                    trace = recursive_tilt(mu, u, seq)
                    check_one(trace, [int(m) for m in row],
                              f"k={k} sampled={list(row)}")
                    seq_checked += 1
    return violations, seq_checked, trans_checked


def check_tilt_recursion(seed: int) -> CheckResult:
    violations, seqs, trans = tilt_identity_sweep(seed=seed)
    return CheckResult(
        "measures.tilt_recursion",
        not violations,
        f"{seqs} sequences + {trans} transitions checked"
        + (f"; first violation: {violations[0]}" if violations else ""),
    )


def check_extensions(seed: int) -> CheckResult:
    """Product/mixture extensions are valid tables and conditional entropy
    is additive over independent blocks."""
    rng = np.random.default_rng([seed, 4])
    bad = 0
    for _ in range(50):
        x1 = int(rng.integers(2, 4))
        x2 = int(rng.integers(1, 4))
        p = random_dist(rng, x1 * x2)
        n = int(rng.integers(1, 4))
        if (x1 * x2) ** n > 1 << 24:
            continue
        block = iid_extension(p, n)
        if abs(float(block.probs.sum()) - 1.0) > 1e-9 or block.probs.min() < 0:
            bad += 1
        h1 = conditional_entropy(p, x1, x2)
        # the product over pair symbols keeps blocks independent, so the
        # X1-block given X2-block entropy is n times the per-letter value
        model = exponents.iid_model(p, PairAlphabet(x1, x2))
        hn = conditional_entropy(model.block_joint(n), x1 ** n, x2 ** n)
        if abs(hn - n * h1) > 1e-9:
            bad += 1
        q = random_dist(rng, x1 * x2)
        alpha = float(rng.uniform(0.1, 0.9))
        mix = mixture_extension(alpha, p, q, n)
        if abs(float(mix.probs.sum()) - 1.0) > 1e-9 or mix.probs.min() < 0:
            bad += 1
    return CheckResult("measures.extensions", bad == 0, "50 random models")


# ---------------------------------------------------------------------------
# codes
# ---------------------------------------------------------------------------

def check_error_ordering(seed: int) -> CheckResult:
    """e_A(M) nonincreasing, zero at M = x1_size, and below e_B(M;0)."""
    rng = np.random.default_rng([seed, 5])
    bad = 0
    for _ in range(40):
        x1 = int(rng.integers(2, 5))
        x2 = int(rng.integers(1, 4))
        alphabet = PairAlphabet(x1, x2)
        joint = _random_joint(rng, alphabet)
        prev = 1.1
        for M in range(1, x1 + 1):
            _, e_a = codes.optimal_a_code(joint, alphabet, M)
            if e_a > prev + 1e-12:
                bad += 1
            prev = e_a
            _, e_b = codes.optimal_b_code(joint, alphabet, M)
            if e_a > e_b + 1e-12:
                bad += 1
        if codes.optimal_a_error(joint, alphabet, x1) != 0.0:
            bad += 1
    return CheckResult("codes.error_ordering", bad == 0, "40 random instances")


def check_a_optimality(seed: int) -> CheckResult:
    """Top-M selection beats nothing: exhaustive table search agrees."""
    rng = np.random.default_rng([seed, 6])
    mismatches = 0
    instances = 0
    for x1, x2, M in itertools.product((2, 3), (1, 2), (1, 2)):
        alphabet = PairAlphabet(x1, x2)
        for _ in range(7):
            joint = _random_joint(rng, alphabet)
            instances += 1
            exact = oracles.enumerate_a_codes(joint, alphabet, M)
            _, fast = codes.optimal_a_code(joint, alphabet, M)
            if abs(exact - fast) > 1e-12:
                mismatches += 1
    return CheckResult(
        "codes.a_optimality", mismatches == 0,
        f"{instances} instances vs exhaustive tables, {mismatches} mismatches",
    )


def check_merge_subadditivity(seed: int) -> CheckResult:
    """Merged correct set is the exact union; sizes add."""
    rng = np.random.default_rng([seed, 7])
    bad = 0
    for _ in range(1000):
        x1 = int(rng.integers(2, 6))
        x2 = int(rng.integers(1, 5))
        alphabet = PairAlphabet(x1, x2)
        m1 = int(rng.integers(1, 4))
        m2 = int(rng.integers(1, 4))
        c1 = codes.random_a_code(rng, alphabet, m1)
        c2 = codes.random_a_code(rng, alphabet, m2)
        merged = codes.merge_a_codes(c1, c2, alphabet)
        if merged.M != m1 + m2:
            bad += 1
        want = codes.correct_set(c1, alphabet).union(
            codes.correct_set(c2, alphabet)
        )
        if codes.correct_set(merged, alphabet) != want:
            bad += 1
    return CheckResult("codes.merge_subadditivity", bad == 0, "1000 random pairs")


def check_b_embedding(seed: int) -> CheckResult:
    """b_to_a preserves the correct set bit for bit."""
    rng = np.random.default_rng([seed, 8])
    bad = 0
    for _ in range(300):
        x1 = int(rng.integers(2, 6))
        x2 = int(rng.integers(1, 5))
        alphabet = PairAlphabet(x1, x2)
        b = codes.random_b_code(rng, alphabet, int(rng.integers(1, 4)))
        a = codes.b_to_a(b)
        if codes.correct_set(a, alphabet) != codes.correct_set(b, alphabet):
            bad += 1
        joint = _random_joint(rng, alphabet)
        if codes.error_probability(a, joint, alphabet) != codes.error_probability(
            b, joint, alphabet
        ):
            bad += 1
    return CheckResult("codes.b_embedding", bad == 0, "300 random codes")


def check_min_size_for_error(seed: int) -> CheckResult:
    """Nondecreasing in the target mass and consistent with e_A."""
    rng = np.random.default_rng([seed, 9])
    bad = 0
    for _ in range(40):
        x1 = int(rng.integers(2, 5))
        x2 = int(rng.integers(1, 4))
        alphabet = PairAlphabet(x1, x2)
        joint = _random_joint(rng, alphabet)
        prev = -1.0
        for a in np.linspace(0.0, 1.0, 21):
            r = codes.min_size_for_error(joint, alphabet, float(a))
            if r < prev - 1e-12:
                bad += 1
            prev = r
        for M in range(1, x1 + 1):
            e = codes.optimal_a_error(joint, alphabet, M)
            r = codes.min_size_for_error(joint, alphabet, 1.0 - e)
            if r > math.log2(M) + 1e-12:
                bad += 1
    return CheckResult("codes.min_size_for_error", bad == 0, "40 random instances")


# ---------------------------------------------------------------------------
# multicode
# ---------------------------------------------------------------------------

def check_multicode_monotone(seed: int) -> CheckResult:
    """e_B(M;k) nonincreasing in k and in M; duplicates change nothing."""
    rng = np.random.default_rng([seed, 10])
    bad = 0
    for _ in range(12):
        x1 = int(rng.integers(2, 5))
        x2 = int(rng.integers(1, 3))
        alphabet = PairAlphabet(x1, x2)
        joint = _random_joint(rng, alphabet)
        by_k = []
        for k in range(3):
            r = multicode.best_multi_b(joint, alphabet, 2, k, 10 ** 6, seed)
            by_k.append(r.miss_probability)
            if r.search_mode != "exhaustive":
                bad += 1
        if any(by_k[i + 1] > by_k[i] + 1e-12 for i in range(2)):
            bad += 1
        r2 = multicode.best_multi_b(joint, alphabet, 3, 1, 10 ** 6, seed)
        r1 = multicode.best_multi_b(joint, alphabet, 2, 1, 10 ** 6, seed)
        if r2.miss_probability > r1.miss_probability + 1e-12:
            bad += 1
        b = codes.random_b_code(rng, alphabet, 2)
        single = codes.error_probability(b, joint, alphabet)
        tripled = multicode.joint_miss_probability([b, b, b], joint, alphabet)
        if tripled != single:
            bad += 1
    return CheckResult("multicode.monotonicity", bad == 0, "12 random instances")


def check_stochastic_consistency(seed: int) -> CheckResult:
    """Stochastic search never beats the exhaustive optimum and usually
    matches it on a fixed seeded instance set."""
    rng = np.random.default_rng([seed, 11])
    worse = 0
    matched = 0
    total = 20
    for i in range(total):
        alphabet = PairAlphabet(4, 2)
        joint = _random_joint(rng, alphabet)
        exact = multicode.best_multi_b(joint, alphabet, 2, 1, 10 ** 6, seed + i)
        assert exact.search_mode == "exhaustive"
        approx = multicode.best_multi_b(joint, alphabet, 2, 1, 60, seed + i)
        assert approx.search_mode == "stochastic"
        if approx.miss_probability < exact.miss_probability - 1e-12:
            worse += 1
        if abs(approx.miss_probability - exact.miss_probability) <= 1e-12:
            matched += 1
    ok = worse == 0 and matched >= int(0.9 * total)
    return CheckResult(
        "multicode.stochastic_consistency", ok,
        f"{matched}/{total} matched the exhaustive optimum",
    )


def check_k_index(seed: int) -> CheckResult:
    """k_index finds the smallest k whose joint miss matches the code."""
    bad = 0
    alphabet = PairAlphabet(3, 2)
    joint = Dist(np.array([0.3, 0.05, 0.1, 0.05, 0.1, 0.4]))
    a_code, e_a = codes.optimal_a_code(joint, alphabet, 2)
    _, e_b = codes.optimal_b_code(joint, alphabet, 2)
    k = multicode.k_index(a_code, joint, alphabet, k_max=2)
    if abs(e_a - 0.15) > 1e-12 or abs(e_b - 0.15) > 1e-12 or k != 0:
        bad += 1
    perfect, _ = codes.optimal_a_code(joint, alphabet, 3)
    if multicode.k_index(perfect, joint, alphabet, k_max=1) != 0:
        bad += 1
    return CheckResult("multicode.k_index", bad == 0, "reference instances")


# ---------------------------------------------------------------------------
# exponents
# ---------------------------------------------------------------------------

def check_rho_monotone(seed: int) -> CheckResult:
    """High-rate curve nondecreasing, low-rate nonincreasing, both zero at
    the per-letter conditional entropy."""
    model = exponents.dsbs_model(0.1)
    h = model.component_entropies()[0]
    rates = [0.0, 0.2, h, 0.55, 0.7, 0.85, 1.0]
    hi = [exponents.rho_high_rate(model, r, 0.02) for r in rates]
    lo = [exponents.rho_low_rate(model, r, 0.02) for r in rates]
    bad = 0
    if any(hi[i + 1] < hi[i] - 1e-9 for i in range(len(rates) - 1)):
        bad += 1
    if any(lo[i + 1] > lo[i] + 1e-9 for i in range(len(rates) - 1)):
        bad += 1
    if exponents.rho_high_rate(model, h, 0.02) != 0.0:
        bad += 1
    if exponents.rho_low_rate(model, h, 0.02) != 0.0:
        bad += 1
    if exponents.rho_high_rate(model, 0.0, 0.02) != 0.0:
        bad += 1
    if exponents.rho_low_rate(model, 1.0, 0.02) != 0.0:
        bad += 1
    return CheckResult("exponents.rho_monotone", bad == 0, f"rates={rates}")


def check_rho_certificate(seed: int) -> CheckResult:
    """Reported minima come with a feasible minimizer of matching value."""
    model = exponents.dsbs_model(0.1)
    bad = 0
    for R in (0.6, 0.8, 0.95):
        value, q = exponents.high_rate_certificate(model, R, 0.02)
        h = conditional_entropy(Dist(q), 2, 2)
        d = kl_divergence(Dist(q), model.p)
        if h < R - 1e-6 or abs(d - value) > 1e-4:
            bad += 1
    for R in (0.1, 0.3):
        value, q = exponents.low_rate_certificate(model, R, 0.02)
        h = conditional_entropy(Dist(q), 2, 2)
        d = kl_divergence(Dist(q), model.p)
        if h > R + 1e-6 or abs(d - value) > 1e-4:
            bad += 1
    return CheckResult("exponents.rho_certificate", bad == 0, "5 rates certified")


def check_mixture_prediction(seed: int) -> CheckResult:
    """Predicted limiting error sits in {0, alpha, 1-alpha, 1} and the
    finite-blocklength error lands near it."""
    model = exponents.mixture_model(
        0.5, exponents.dsbs_pair(0.02), exponents.dsbs_pair(0.35),
        PairAlphabet(2, 2),
    )
    h1, h2 = model.component_entropies()
    bad = 0
    for R, want in ((0.05, 1.0), (0.5, 0.5), (0.99, 0.0)):
        got = exponents.predicted_eps_mixed(model, R)
        if got != want:
            bad += 1
    sweep = exponents.empirical_exponent_sweep(model, 0.5, [10])
    if abs(sweep[0].e_A - 0.5) > 0.1:
        bad += 1
    mid = exponents.predicted_eps_mixed(model, (h1 + h2) / 2)
    if mid != 0.5:
        bad += 1
    return CheckResult("exponents.mixture_prediction", bad == 0,
                       f"H1={h1:.4f}, H2={h2:.4f}")


# ---------------------------------------------------------------------------
# oracles
# ---------------------------------------------------------------------------

def check_oracle_agreement(seed: int) -> CheckResult:
    """Optimized searches equal their brute-force counterparts everywhere
    both can run."""
    rng = np.random.default_rng([seed, 12])
    bad = 0
    count = 0
    for _ in range(15):
        x1 = int(rng.integers(2, 4))
        x2 = int(rng.integers(1, 3))
        M = int(rng.integers(1, 3))
        alphabet = PairAlphabet(x1, x2)
        joint = _random_joint(rng, alphabet)
        count += 1
        if abs(
            oracles.enumerate_a_codes(joint, alphabet, M)
            - codes.optimal_a_code(joint, alphabet, M)[1]
        ) > 1e-12:
            bad += 1
        if abs(
            oracles.enumerate_b_tuples(joint, alphabet, M, 0)
            - codes.optimal_b_code(joint, alphabet, M)[1]
        ) > 1e-12:
            bad += 1
        exact = multicode.best_multi_b(joint, alphabet, M, 1, 10 ** 6, seed)
        if abs(
            oracles.enumerate_b_tuples(joint, alphabet, M, 1)
            - exact.miss_probability
        ) > 1e-12:
            bad += 1
    return CheckResult("oracles.agreement", bad == 0,
                       f"{count} instances, {bad} mismatches")


def check_cli_determinism(seed: int) -> CheckResult:
    """Identical (config, seed) gives byte-identical CSV at any worker count."""
    from . import cli

    config = {
        "command": "sweep",
        "model": {"kind": "dsbs", "crossover": 0.1},
        "params": {"R": 0.8, "n_values": [2, 3, 4], "workers": 1},
        "seed": seed,
        "output_path": "unused.csv",
    }
    rows1 = cli.run_experiment(cli.parse_config(config))
    config["params"]["workers"] = 2
    rows2 = cli.run_experiment(cli.parse_config(config))
    text1 = cli.render_csv(rows1)
    text2 = cli.render_csv(rows2)
    return CheckResult(
        "cli.determinism", text1 == text2, f"{len(rows1)} rows compared"
    )


ALL_CHECKS: tuple[Callable[[int], CheckResult], ...] = (
    check_divergence_bounds,
    check_variational_identities,
    check_tilt_recursion,
    check_extensions,
    check_error_ordering,
    check_a_optimality,
    check_merge_subadditivity,
    check_b_embedding,
    check_min_size_for_error,
    check_multicode_monotone,
    check_stochastic_consistency,
    check_k_index,
    check_rho_monotone,
    check_rho_certificate,
    check_mixture_prediction,
    check_oracle_agreement,
    check_cli_determinism,
)


def run_all(seed: int) -> list[CheckResult]:
    return [check(seed) for check in ALL_CHECKS]
