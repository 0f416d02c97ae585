"""Command-line front end.

Every subcommand emits one result document: a manifest (command, full
parameter echo, seed, version, duration), a pass/fail status and a payload
whose ``rows`` table is what ``--out csv`` prints. ``prepost replay DOC``
re-runs a saved document from its manifest and checks that the payload is
reproduced exactly.

Exit codes: 0 success, 2 validation error, 3 tolerance failure,
4 runtime failure (retry budget exhausted, singular matrix, zero acceptance).
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import time
import warnings
from importlib import metadata, resources
from pathlib import Path

import jsonschema
import numpy as np

from . import covariant, duality, gamesim, scenarios
from .configs import ConfigError, build_setup, load_config
from .errors import PrePostError, RetryExhausted, SingularD, ZeroAcceptance

SCHEMA_VERSION = "1.0.0"
EXIT_OK, EXIT_VALIDATION, EXIT_TOLERANCE, EXIT_RUNTIME = 0, 2, 3, 4

# Reported optimal fidelities with the fixed post-selected state.
ANTIPARALLEL_REPORTED = {2: 0.7887, 4: 0.8873, 6: 0.9306}

DEFAULTS = {
    "parallel": {"tolerance": 1e-9},
    "antiparallel": {"tolerance": 5e-4},
    "duality": {"tolerance": 1e-10, "seed": 0, "instances": 200, "max_dim": 4},
    "game": {"tolerance": 3.0, "seed": 0, "trials": 100_000},
}


class UsageError(Exception):
    """Invalid command-line input (exit code 2)."""


def version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "0+unknown"


def result_schema() -> dict:
    text = (resources.files("prepost") / "schemas" / "result-v1.json").read_text()
    return json.loads(text)


def _num(x):
    """JSON-safe scalar; non-finite floats become strings."""
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if np.isfinite(x) else repr(x)
    if isinstance(x, np.integer):
        return int(x)
    return x


# ---------------------------------------------------------------------------
# commands; each returns (status, payload)


def run_parallel(params: dict):
    rows, seeds = [], {}
    worst = 0.0
    for n in params["n"]:
        if not 1 <= n <= 12:
            raise UsageError(f"N={n} outside 1..12")
        res = covariant.optimal_fidelity(covariant.CovariantProblem(
            n, covariant.Pattern.PARALLEL, params["quadrature_order"]))
        exact = (n + 1) / (n + 2)
        diff = res.fidelity - exact
        worst = max(worst, abs(diff))
        rows.append({"n_spins": n, "quadrature_order": res.order, "lambda_max": res.fidelity,
                     "analytic": exact, "difference": diff,
                     "convergence_delta": res.convergence_delta})
        seeds[str(n)] = res.to_dict()["seed_vector"]
    status = "pass" if worst <= params["tolerance"] else "fail"
    return status, {"rows": rows, "seed_vectors": seeds}


def run_antiparallel(params: dict):
    rows, seeds = [], {}
    ok = True
    for n in params["n"]:
        if n < 2 or n % 2:
            raise UsageError(f"N={n}: the antiparallel state needs an even N >= 2")
        if n > 6:
            warnings.warn(f"N={n} uses a 2^{n}-dimensional space; this may be slow", stacklevel=2)
        res = covariant.optimal_fidelity(covariant.CovariantProblem(
            n, covariant.Pattern.ANTIPARALLEL, params["quadrature_order"]))
        ref = ANTIPARALLEL_REPORTED.get(n)
        within = None if ref is None else bool(abs(res.fidelity - ref) <= params["tolerance"])
        ok &= within is not False
        rows.append({"n_spins": n, "quadrature_order": res.order, "lambda_max": res.fidelity,
                     "convergence_delta": res.convergence_delta, "povm_scale": res.povm_scale,
                     "reported": ref, "no_post_baseline": covariant.ANTIPARALLEL_NO_POST_BASELINE.get(n),
                     "within_tolerance": within})
        seeds[str(n)] = res.to_dict()["seed_vector"]
    return ("pass" if ok else "fail"), {"rows": rows, "seed_vectors": seeds}


def run_use(params: dict):
    try:
        rows = scenarios.use_gap_report(params["alpha_sq"], params["epsilons"])
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    return "info", {"rows": [r.to_dict() for r in rows], "alpha_sq": params["alpha_sq"]}


def run_duality(params: dict):
    if params["instances"] < 1 or params["max_dim"] < 1:
        raise UsageError("instances and max-dim must be positive")
    reports = duality.duality_suite(params["seed"], params["instances"], params["max_dim"],
                                    inject_fault=params["inject_fault"])
    tol = params["tolerance"]
    rows = [{"suite": r.name, "instances": r.instances, "max_deviation": r.max_deviation,
             "tolerance": tol, "passed": bool(r.max_deviation <= tol)} for r in reports]
    status = "pass" if all(r["passed"] for r in rows) else "fail"
    return status, {"rows": rows, "details": [r.to_dict() for r in reports]}


def _load_game(params: dict):
    return build_setup(load_config(params["config"], params.get("instrument")))


def run_game(params: dict):
    if params["trials"] < 1 or params.get("max_retries", 1) < 1:
        raise UsageError("trials and max-retries must be positive")
    setup = _load_game(params)
    analytic = gamesim.analytic_reference(setup.problem, setup.instrument, setup.estimator,
                                          setup.grid, setup.scenario)
    if not 0 <= params["seed"] < 2**64:
        raise UsageError("seed must fit in 64 bits")
    cfg = gamesim.GameConfig(params["trials"], params["seed"], scenario=setup.scenario,
                             max_retries=params.get("max_retries", gamesim.MAX_RETRIES))
    res = gamesim.run_game(setup.problem, setup.instrument, setup.estimator, cfg, analytic)
    info = res.to_dict()
    dev = info.get("deviation_in_stderr")
    row = {"config": setup.name, "scenario": setup.scenario.value, "trials": cfg.trials,
           "seed": cfg.seed, "empirical_merit": res.empirical_merit, "stderr": res.stderr,
           "analytic_merit": analytic, "deviation_in_stderr": _num(dev),
           "mean_attempts": res.mean_attempts}
    status = "pass" if res.within(analytic, params["tolerance"]) else "fail"
    extra = {k: info[k] for k in ("outcome_counts", "pre_gate_branch_counts", "retry_histogram")}
    extra["outcome_labels"] = [str(e) if not hasattr(e, "theta") else [e.theta, e.phi]
                               for e in setup.estimator]
    return status, {"rows": [row], **extra}


COMMANDS = {
    "parallel": run_parallel,
    "antiparallel": run_antiparallel,
    "use": run_use,
    "duality": run_duality,
    "game": run_game,
}


# ---------------------------------------------------------------------------
# documents


def make_document(command: str, params: dict, status: str, payload: dict, duration: float) -> dict:
    rows = [{k: _num(v) for k, v in r.items()} for r in payload["rows"]]
    fields = list(rows[0]) if rows else ["empty"]
    body = {"fields": fields, **payload, "rows": rows}
    doc = {
        "schema_version": SCHEMA_VERSION,
        "manifest": {"command": command, "parameters": params, "seed": params.get("seed"),
                     "version": version(), "duration_s": duration},
        "status": status,
        "payload": json.loads(json.dumps(body, default=_num)),
    }
    jsonschema.validate(doc, result_schema())
    return doc


def rows_to_csv(doc: dict) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=doc["payload"]["fields"], lineterminator="\n")
    writer.writeheader()
    for row in doc["payload"]["rows"]:
        writer.writerow({k: ("" if v is None else repr(v) if isinstance(v, float) else v)
                         for k, v in row.items()})
    return buf.getvalue()


def execute(command: str, params: dict) -> tuple[int, dict]:
    """Run a command from its parameter echo; returns (exit code, document)."""
    t0 = time.perf_counter()
    status, payload = COMMANDS[command](params)
    doc = make_document(command, params, status, payload, time.perf_counter() - t0)
    return (EXIT_TOLERANCE if status == "fail" else EXIT_OK), doc


# ---------------------------------------------------------------------------
# argument parsing


def _eps_list(text: str) -> list[float]:
    out = []
    for tok in text.split(","):
        tok = tok.strip()
        out.append(2**-0.5 if tok in ("1/sqrt2", "1/sqrt(2)") else float(tok))
    return out


def build_parser() -> argparse.ArgumentParser:
    fmt = argparse.ArgumentDefaultsHelpFormatter
    p = argparse.ArgumentParser(prog="prepost", description=__doc__.split("\n\n")[0], formatter_class=fmt)
    p.add_argument("--version", action="version", version=f"%(prog)s {version()}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, out=True):
        sp.add_argument("--out", choices=("json", "csv"), default="json", help="output format")
        sp.add_argument("--output", "-o", type=Path, help="write to this file instead of stdout")

    sp = sub.add_parser("parallel", formatter_class=fmt,
                        help="optimal covariant fidelity for N parallel spins")
    sp.add_argument("n", type=int, nargs="+", metavar="N", help="number of spins, 1..12")
    sp.add_argument("--quadrature-order", type=int, default=None,
                    help="Gauss-Legendre order of the Haar rule (default 2N+4, exact)")
    sp.add_argument("--tolerance", type=float, default=DEFAULTS["parallel"]["tolerance"],
                    help="allowed |lambda_max - (N+1)/(N+2)|")
    common(sp)

    sp = sub.add_parser("antiparallel", formatter_class=fmt,
                        help="optimal covariant fidelity for N/2 up and N/2 down spins")
    sp.add_argument("n", type=int, nargs="*", default=[2, 4, 6], metavar="N", help="even number of spins")
    sp.add_argument("--quadrature-order", type=int, default=None,
                    help="Gauss-Legendre order of the Haar rule (default 2N+4, exact)")
    sp.add_argument("--tolerance", type=float, default=DEFAULTS["antiparallel"]["tolerance"],
                    help="allowed deviation from the reported values (N=2,4,6)")
    common(sp)

    sp = sub.add_parser("use", formatter_class=fmt,
                        help="inconclusive rates of unambiguous discrimination with and without post-selection")
    sp.add_argument("--alpha-sq", type=float, default=scenarios.DEFAULT_ALPHA_SQ, help="alpha^2 in (1/2, 1)")
    sp.add_argument("--eps", type=_eps_list, default=list(scenarios.DEFAULT_EPSILONS),
                    help="comma-separated epsilon values in [0, 1); '1/sqrt2' accepted")
    common(sp)

    sp = sub.add_parser("duality", formatter_class=fmt,
                        help="random-instance checks of the POVM <-> Kraus correspondence")
    sp.add_argument("--seed", type=int, default=DEFAULTS["duality"]["seed"], help="seed of the instance generator")
    sp.add_argument("--instances", type=int, default=DEFAULTS["duality"]["instances"],
                    help="random instances per mapping direction")
    sp.add_argument("--max-dim", type=int, default=DEFAULTS["duality"]["max_dim"], help="largest d and d'")
    sp.add_argument("--tolerance", type=float, default=DEFAULTS["duality"]["tolerance"],
                    help="allowed per-outcome probability deviation")
    sp.add_argument("--inject-fault", action="store_true", help=argparse.SUPPRESS)
    common(sp)

    sp = sub.add_parser("game", formatter_class=fmt,
                        help="Monte-Carlo estimation game from a config file or bundled config name")
    sp.add_argument("config", help="YAML/JSON config path, or one of: orthogonal-pair, use-eps0.1, parallel-N1")
    sp.add_argument("--instrument", help="YAML file whose 'instrument' mapping replaces the config's")
    sp.add_argument("--trials", type=int, default=DEFAULTS["game"]["trials"], help="number of accepted rounds")
    sp.add_argument("--seed", type=int, default=DEFAULTS["game"]["seed"], help="root seed of the trial streams")
    sp.add_argument("--max-retries", type=int, default=gamesim.MAX_RETRIES,
                    help="attempts per round before giving up")
    sp.add_argument("--tolerance", type=float, default=DEFAULTS["game"]["tolerance"],
                    help="allowed |empirical - analytic| in standard errors")
    common(sp)

    sp = sub.add_parser("replay", formatter_class=fmt,
                        help="re-run a saved JSON result document and compare payloads")
    sp.add_argument("document", type=Path)
    return p


def params_from_args(args: argparse.Namespace) -> dict:
    cmd = args.command
    if cmd in ("parallel", "antiparallel"):
        return {"n": list(args.n), "quadrature_order": args.quadrature_order, "tolerance": args.tolerance}
    if cmd == "use":
        return {"alpha_sq": args.alpha_sq, "epsilons": list(args.eps)}
    if cmd == "duality":
        return {"seed": args.seed, "instances": args.instances, "max_dim": args.max_dim,
                "tolerance": args.tolerance, "inject_fault": args.inject_fault}
    return {"config": args.config, "instrument": args.instrument, "trials": args.trials,
            "seed": args.seed, "max_retries": args.max_retries, "tolerance": args.tolerance}


def _emit(text: str, path: Path | None) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        path.write_text(text)


def _replay(path: Path) -> int:
    old = json.loads(path.read_text())
    jsonschema.validate(old, result_schema())
    man = old["manifest"]
    code, new = execute(man["command"], man["parameters"])
    same = new["payload"] == old["payload"]
    print(json.dumps({"command": man["command"], "payload_reproduced": same}))
    return code if same else EXIT_TOLERANCE


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "replay":
            return _replay(args.document)
        code, doc = execute(args.command, params_from_args(args))
    except (UsageError, ConfigError, jsonschema.ValidationError, FileNotFoundError) as exc:
        print(f"prepost: error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except RetryExhausted as exc:
        print(f"prepost: runtime error: {exc} (theta={exc.theta!r}, retries={exc.retries})", file=sys.stderr)
        return EXIT_RUNTIME
    except (SingularD, ZeroAcceptance) as exc:
        theta = getattr(exc, "theta", None)
        print(f"prepost: runtime error: {exc}" + (f" (theta={theta!r})" if theta is not None else ""),
              file=sys.stderr)
        return EXIT_RUNTIME
    except (PrePostError, ValueError) as exc:
        print(f"prepost: error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    text = rows_to_csv(doc) if args.out == "csv" else json.dumps(doc, indent=2) + "\n"
    _emit(text, args.output)
    if code == EXIT_TOLERANCE:
        print(f"prepost: {args.command}: tolerance check failed", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
