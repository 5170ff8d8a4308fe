"""Configuration-driven experiment runner.

Non-interactive surface: a JSON config names a source model, a command,
and command parameters; results land in a CSV with the fixed header

    experiment,n,M,R,k,metric,value,seed,runtime_ms

Reals are written with 12 significant digits and +inf is spelled
``+inf``.  Output is byte-identical for identical (config, seed)
regardless of worker count; the runtime_ms column is pinned to 0 to keep
that guarantee.  Exit codes: 0 ok, 1 config error, 2 verify failure,
3 resource cap, 4 i/o error.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass
from typing import Any, Sequence

import numpy as np

from . import codes, exponents, multicode, oracles
from .codes import PairAlphabet
from .errors import ConfigError, ResourceLimitError
from .measures import Dist

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_VERIFY = 2
EXIT_RESOURCE = 3
EXIT_IO = 4

CSV_HEADER = "experiment,n,M,R,k,metric,value,seed,runtime_ms"

METRICS = {
    "e_A", "e_B", "e_B_k", "miss", "rho_hi", "rho_lo", "eps_pred",
    "exponent_est", "R_n_a",
}

COMMANDS = {"verify", "optimal", "multi", "sweep", "exponent", "mixed", "probe"}

DEFAULT_SEED = 20240801


class VerifyFailure(Exception):
    """At least one bundled invariant check failed."""


@dataclass(frozen=True)
class ResultRow:
    experiment: str
    n: int
    M: int
    R: float
    k: int
    metric: str
    value: float  # math.inf allowed
    seed: int
    runtime_ms: int = 0

    def __post_init__(self):
        if self.metric not in METRICS:
            raise ValueError(f"metric {self.metric!r} outside the fixed vocabulary")


@dataclass(frozen=True)
class ExperimentConfig:
    command: str
    model: exponents.SingleLetterModel
    params: dict[str, Any]
    seed: int
    output_path: str


# ---------------------------------------------------------------------------
# config parsing
# ---------------------------------------------------------------------------

_PARAM_SPEC: dict[str, tuple[set[str], set[str]]] = {
    # command -> (required params, optional params)
    "verify": (set(), set()),
    "optimal": ({"M"}, {"n", "a"}),
    "multi": ({"M", "k"}, {"n", "budget"}),
    "sweep": ({"R", "n_values"}, {"workers"}),
    "exponent": ({"R"}, {"grid_step"}),
    "mixed": ({"R", "n_values"}, {"workers"}),
    "probe": ({"trials"}, set()),
}


def _parse_pair_dist(obj: Any, alphabet: PairAlphabet, label: str) -> Dist:
    if isinstance(obj, dict) and set(obj) == {"dsbs"}:
        if (alphabet.x1_size, alphabet.x2_size) != (2, 2):
            raise ConfigError(f"{label}: dsbs shorthand needs a 2x2 alphabet")
        return exponents.dsbs_pair(float(obj["dsbs"]))
    if isinstance(obj, list):
        arr = np.asarray(obj, dtype=float)
        if arr.size != alphabet.total:
            raise ConfigError(
                f"{label}: expected {alphabet.total} entries, got {arr.size}"
            )
        try:
            return Dist(arr)
        except ValueError as exc:
            raise ConfigError(f"{label}: {exc}") from exc
    raise ConfigError(f"{label}: expected a flat list or {{'dsbs': c}}")


def _parse_model(obj: Any) -> exponents.SingleLetterModel:
    if not isinstance(obj, dict) or "kind" not in obj:
        raise ConfigError("model must be an object with a 'kind'")
    kind = obj["kind"]
    try:
        if kind == "dsbs":
            return exponents.dsbs_model(float(obj["crossover"]))
        if kind == "iid":
            alphabet = PairAlphabet(int(obj["x1_size"]), int(obj["x2_size"]))
            p = _parse_pair_dist(obj["p"], alphabet, "model.p")
            return exponents.iid_model(p, alphabet)
        if kind == "mixture":
            alphabet = PairAlphabet(int(obj["x1_size"]), int(obj["x2_size"]))
            p1 = _parse_pair_dist(obj["p1"], alphabet, "model.p1")
            p2 = _parse_pair_dist(obj["p2"], alphabet, "model.p2")
            return exponents.mixture_model(float(obj["alpha"]), p1, p2, alphabet)
    except ConfigError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"invalid model: {exc}") from exc
    raise ConfigError(f"unknown model kind {kind!r}")


def parse_config(obj: Any) -> ExperimentConfig:
    if not isinstance(obj, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(obj) - {"command", "model", "params", "seed", "output_path"}
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    command = obj.get("command")
    if command not in COMMANDS:
        raise ConfigError(f"command must be one of {sorted(COMMANDS)}")
    model = _parse_model(obj.get("model"))
    params = obj.get("params", {})
    if not isinstance(params, dict):
        raise ConfigError("params must be an object")
    required, optional = _PARAM_SPEC[command]
    missing = required - set(params)
    if missing:
        raise ConfigError(f"{command}: missing params {sorted(missing)}")
    extra = set(params) - required - optional
    if extra:
        raise ConfigError(f"{command}: unknown params {sorted(extra)}")
    seed = obj.get("seed", DEFAULT_SEED)
    if not isinstance(seed, int) or not 0 <= seed < 2 ** 64:
        raise ConfigError("seed must be an unsigned 64-bit integer")
    output_path = obj.get("output_path", "results.csv")
    if not isinstance(output_path, str) or not output_path:
        raise ConfigError("output_path must be a nonempty string")
    params = dict(params)
    try:
        _validate_params(command, params, model)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{command}: {exc}") from exc
    return ExperimentConfig(command, model, params, seed, output_path)


def _validate_params(command: str, params: dict[str, Any],
                     model: exponents.SingleLetterModel) -> None:
    if "n" in params or command in ("optimal", "multi"):
        params["n"] = int(params.get("n", 1))
        if params["n"] < 1:
            raise ValueError("n must be >= 1")
    if "M" in params:
        params["M"] = int(params["M"])
        if params["M"] < 1:
            raise ValueError("M must be >= 1")
    if "k" in params:
        params["k"] = int(params["k"])
        if params["k"] < 0:
            raise ValueError("k must be >= 0")
    if "budget" in params or command == "multi":
        params["budget"] = int(params.get("budget", 1_000_000))
        if params["budget"] < 1:
            raise ValueError("budget must be >= 1")
    if "R" in params:
        params["R"] = float(params["R"])
    if "grid_step" in params or command == "exponent":
        params["grid_step"] = float(params.get("grid_step", 0.02))
        if not 0.0 < params["grid_step"] <= 0.1:
            raise ValueError("grid_step must lie in (0, 0.1]")
    if "n_values" in params:
        values = [int(v) for v in params["n_values"]]
        if not values or any(v < 1 for v in values):
            raise ValueError("n_values must be a nonempty list of positive ints")
        params["n_values"] = values
    if "workers" in params or command in ("sweep", "mixed"):
        params["workers"] = int(params.get("workers", 1))
        if params["workers"] < 1:
            raise ValueError("workers must be >= 1")
    if "trials" in params:
        params["trials"] = int(params["trials"])
        if params["trials"] < 1:
            raise ValueError("trials must be >= 1")
    if "a" in params:
        params["a"] = float(params["a"])
        if not 0.0 <= params["a"] <= 1.0:
            raise ValueError("a must lie in [0, 1]")
    if command == "exponent":
        if model.kind != "iid":
            raise ValueError("exponent curves need an iid model")
        if not 0.0 <= params["R"] <= math.log2(model.alphabet.x1_size):
            raise ValueError("R outside [0, log2(x1_size)]")
    if command == "mixed":
        if model.kind != "mixture":
            raise ValueError("mixed needs a mixture model")
        h1, h2 = model.component_entropies()
        if abs(params["R"] - h1) < 1e-12 or abs(params["R"] - h2) < 1e-12:
            raise ValueError(
                "R sits on a component entropy where the limit jumps"
            )


def load_config(path: str) -> ExperimentConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            obj = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    return parse_config(obj)


# ---------------------------------------------------------------------------
# experiment dispatch
# ---------------------------------------------------------------------------

def run_experiment(config: ExperimentConfig) -> list[ResultRow]:
    """Dispatch the configured command; deterministic given (config, seed)."""
    runner = {
        "verify": _run_verify,
        "optimal": _run_optimal,
        "multi": _run_multi,
        "sweep": _run_sweep,
        "exponent": _run_exponent,
        "mixed": _run_mixed,
        "probe": _run_probe,
    }[config.command]
    return runner(config)


def _run_verify(config: ExperimentConfig) -> list[ResultRow]:
    from . import verify as verify_mod

    results = verify_mod.run_all(config.seed)
    failed = [r for r in results if not r.passed]
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        print(f"[{status}] {r.name}: {r.detail}")
    if failed:
        raise VerifyFailure(f"{len(failed)} of {len(results)} checks failed")
    return []


def _run_optimal(config: ExperimentConfig) -> list[ResultRow]:
    n = config.params["n"]
    M = config.params["M"]
    joint = config.model.block_joint(n)
    alphabet = config.model.block_alphabet(n)
    rate = math.log2(M) / n
    _, e_a = codes.optimal_a_code(joint, alphabet, M)
    _, e_b = codes.optimal_b_code(joint, alphabet, M)
    rows = [
        ResultRow("optimal", n, M, rate, 0, "e_A", e_a, config.seed),
        ResultRow("optimal", n, M, rate, 0, "e_B", e_b, config.seed),
    ]
    if "a" in config.params:
        a = config.params["a"]
        r_n_a = codes.min_size_for_error(joint, alphabet, a, n)
        rows.append(ResultRow("optimal", n, M, a, 0, "R_n_a", r_n_a, config.seed))
    return rows


def _run_multi(config: ExperimentConfig) -> list[ResultRow]:
    n = config.params["n"]
    M = config.params["M"]
    k = config.params["k"]
    budget = config.params["budget"]
    joint = config.model.block_joint(n)
    alphabet = config.model.block_alphabet(n)
    rate = math.log2(M) / n
    rows = []
    for j in range(k + 1):
        result = multicode.best_multi_b(joint, alphabet, M, j, budget, config.seed)
        metric = "e_B" if j == 0 else "e_B_k"
        if result.search_mode == "stochastic":
            print(
                f"multi: k={j} searched stochastically; value is an upper bound",
                file=sys.stderr,
            )
        rows.append(
            ResultRow("multi", n, M, rate, j, metric,
                      result.miss_probability, config.seed)
        )
    return rows


def _run_sweep(config: ExperimentConfig) -> list[ResultRow]:
    R = config.params["R"]
    points = exponents.empirical_exponent_sweep(
        config.model, R, config.params["n_values"], config.params["workers"]
    )
    rows = []
    for pt in points:
        rows.append(ResultRow("sweep", pt.n, pt.M, R, 0, "e_A", pt.e_A, config.seed))
        rows.append(
            ResultRow("sweep", pt.n, pt.M, R, 0, "exponent_est",
                      pt.exponent_estimate, config.seed)
        )
    return rows


def _run_exponent(config: ExperimentConfig) -> list[ResultRow]:
    R = config.params["R"]
    step = config.params["grid_step"]
    hi = exponents.rho_high_rate(config.model, R, step)
    lo = exponents.rho_low_rate(config.model, R, step)
    if exponents.detect_jump(config.model, R, step):
        print(
            f"exponent: curve moves sharply within {step} of R={R}; "
            "equalities need a continuity point",
            file=sys.stderr,
        )
    return [
        ResultRow("exponent", 0, 0, R, 0, "rho_hi", hi, config.seed),
        ResultRow("exponent", 0, 0, R, 0, "rho_lo", lo, config.seed),
    ]


def _run_mixed(config: ExperimentConfig) -> list[ResultRow]:
    R = config.params["R"]
    predicted = exponents.predicted_eps_mixed(config.model, R)
    rows = [ResultRow("mixed", 0, 0, R, 0, "eps_pred", predicted, config.seed)]
    points = exponents.empirical_exponent_sweep(
        config.model, R, config.params["n_values"], config.params["workers"]
    )
    for pt in points:
        rows.append(ResultRow("mixed", pt.n, pt.M, R, 0, "e_A", pt.e_A, config.seed))
    return rows


def _run_probe(config: ExperimentConfig) -> list[ResultRow]:
    report = oracles.b_subadditivity_probe(
        config.model.alphabet, config.params["trials"], config.seed
    )
    print(f"probe: verdict={report.verdict} "
          f"instances_checked={report.instances_checked}")
    if report.counterexample is not None:
        w = report.counterexample
        print(f"probe: union rows per column {w.union_rows_per_column}, "
              f"{w.partitions_tried} candidate binnings all failed")
    return []


# ---------------------------------------------------------------------------
# CSV emission
# ---------------------------------------------------------------------------

def _fmt_real(v: float) -> str:
    if math.isinf(v):
        return "+inf" if v > 0 else "-inf"
    return format(float(v), ".12g")


def render_csv(rows: Sequence[ResultRow]) -> str:
    lines = [CSV_HEADER]
    for r in rows:
        lines.append(
            f"{r.experiment},{r.n},{r.M},{_fmt_real(r.R)},{r.k},"
            f"{r.metric},{_fmt_real(r.value)},{r.seed},{r.runtime_ms}"
        )
    return "\n".join(lines) + "\n"


def emit_report(rows: Sequence[ResultRow], path: str) -> None:
    text = render_csv(rows)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sidecode",
        description="source coding with side information: experiments and checks",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)
    run = sub.add_parser("run", help="run a configured experiment")
    run.add_argument("--config", required=True, help="path to a JSON config")
    run.add_argument("--seed", type=int, default=None, help="override config seed")
    run.add_argument("--out", default=None, help="override config output path")
    ver = sub.add_parser("verify", help="run every bundled invariant suite")
    ver.add_argument("--seed", type=int, default=DEFAULT_SEED)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.subcommand == "verify":
            config = ExperimentConfig(
                "verify", exponents.dsbs_model(0.1), {}, args.seed, "unused.csv"
            )
            run_experiment(config)
            return EXIT_OK
        config = load_config(args.config)
        if args.seed is not None:
            if not 0 <= args.seed < 2 ** 64:
                raise ConfigError("seed must be an unsigned 64-bit integer")
            config = ExperimentConfig(
                config.command, config.model, config.params, args.seed,
                config.output_path,
            )
        if args.out is not None:
            config = ExperimentConfig(
                config.command, config.model, config.params, config.seed,
                args.out,
            )
        rows = run_experiment(config)
        try:
            emit_report(rows, config.output_path)
        except OSError as exc:
            print(f"error: cannot write {config.output_path}: {exc}",
                  file=sys.stderr)
            return EXIT_IO
        return EXIT_OK
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except VerifyFailure as exc:
        print(f"verify failure: {exc}", file=sys.stderr)
        return EXIT_VERIFY
    except ResourceLimitError as exc:
        print(f"resource error: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
