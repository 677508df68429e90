"""Command line front end.

Thin client of the service layer: every subcommand builds a request
model, runs it in process (or posts it to a running server via
``--server``) and writes the artifacts.  Data goes to stdout or
``--output``; diagnostics go to stderr.

Exit codes: 0 success, 2 invalid configuration, 3 solver divergence,
4 verification failure beyond tolerance.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from pydantic import ValidationError

from .errors import DivergenceError, ParameterError
from .service import (ParamsIn, SimulateRequest, SolveRequest, SweepAxis,
                      SweepRequest, VerifyRequest, run_simulate, run_solve,
                      run_sweep, run_verify)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DIVERGED = 3
EXIT_VERIFY_FAILED = 4

TABLE_COLUMNS = ("r", "f1", "f2", "feasible1", "feasible2")


def _add_param_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--lambda", dest="lam", type=float, default=None,
                   help="aggression ratio, country 1 over country 2")
    p.add_argument("--beta", type=float, default=None,
                   help="production ratio, country 1 over country 2")
    p.add_argument("--alpha", type=float, default=None,
                   help="forfeiture fraction in [0, 1)")
    p.add_argument("--epsilon", type=float, default=None,
                   help="lower cutoff of the private variable "
                        "(default: 0 when lambda == beta, else 1e-3)")
    p.add_argument("--params-file", type=Path, default=None,
                   help="JSON file with ratio or raw country parameters; "
                        "flags override its entries")
    p.add_argument("--method", default="auto",
                   choices=["auto", "equal", "order0", "order1", "order2",
                            "converge", "root"])
    p.add_argument("--output", type=Path, default=None,
                   help="write data here instead of stdout")
    p.add_argument("--format", default=None, choices=["csv", "json"],
                   help="output format (solve/sweep default csv, others json)")
    p.add_argument("--server", default=None, metavar="URL",
                   help="post the request to a running server instead of "
                        "solving in process")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="apc",
        description="Quasi-equilibrium solver, verifier and simulator for "
                    "two-country all-pay conflicts.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="compute a strategy table")
    _add_param_flags(p_solve)
    p_solve.add_argument("--grid", type=int, default=1024,
                         help="strategy table grid size (>= 2)")

    p_verify = sub.add_parser("verify", help="check a solution against the oracle")
    _add_param_flags(p_verify)
    p_verify.add_argument("--grid", type=int, default=1024)
    p_verify.add_argument("--probes", default="0.25,0.5,0.75",
                          help="comma-separated r values for best-response checks")
    p_verify.add_argument("--tol-best-response", type=float, default=None,
                          help="default 1e-3 equal case, 5e-3 general")
    p_verify.add_argument("--tol-ode", type=float, default=None,
                          help="default 1e-6 equal case, 1e-5 general")
    p_verify.add_argument("--tol-k0", type=float, default=None,
                          help="gap to the zero-cutoff root is reported "
                               "unless a tolerance is given")

    p_sim = sub.add_parser("simulate", help="Monte-Carlo simulate conflicts")
    _add_param_flags(p_sim)
    p_sim.add_argument("--n", type=int, required=True, help="number of draws")
    p_sim.add_argument("--seed", type=int, default=0)
    p_sim.add_argument("--trace", type=Path, default=None,
                       help="stream a per-draw CSV trace to this file")

    p_sweep = sub.add_parser("sweep", help="solve and simulate along one parameter axis")
    _add_param_flags(p_sweep)
    p_sweep.add_argument("--sweep", required=True, metavar="PARAM:FROM:TO:STEPS",
                         help="axis spec, e.g. lambda:1.0:1.5:6")
    p_sweep.add_argument("--n", type=int, default=20000,
                         help="draws per sweep point")
    p_sweep.add_argument("--seed", type=int, default=0)

    p_serve = sub.add_parser("serve", help="run the HTTP service")
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--port", type=int, default=8000)

    return parser


def _params_from_args(args) -> ParamsIn:
    merged: dict = {}
    if args.params_file is not None:
        try:
            merged.update(json.loads(args.params_file.read_text()))
        except (OSError, json.JSONDecodeError) as exc:
            raise ParameterError(f"cannot read params file: {exc}")
    for key, value in (("lambda", args.lam), ("beta", args.beta),
                       ("alpha", args.alpha), ("epsilon", args.epsilon)):
        if value is not None:
            merged[key] = value
    return ParamsIn.model_validate(merged)


def _parse_sweep(spec: str) -> SweepAxis:
    parts = spec.split(":")
    if len(parts) != 4:
        raise ParameterError(f"sweep spec must be PARAM:FROM:TO:STEPS, got {spec!r}")
    try:
        return SweepAxis(param=parts[0], start=float(parts[1]),
                         stop=float(parts[2]), steps=int(parts[3]))
    except (ValueError, ValidationError) as exc:
        raise ParameterError(f"bad sweep spec {spec!r}: {exc}")


def _dump_json(model) -> str:
    return json.dumps(model.model_dump(by_alias=True), indent=2) + "\n"


def _emit(text: str, output: Path | None) -> None:
    if output is None:
        sys.stdout.write(text)
    else:
        output.write_text(text)


def _table_csv(table: dict) -> str:
    lines = [",".join(TABLE_COLUMNS)]
    for i in range(len(table["r"])):
        lines.append(",".join([
            repr(table["r"][i]), repr(table["f1"][i]), repr(table["f2"][i]),
            "true" if table["feasible1"][i] else "false",
            "true" if table["feasible2"][i] else "false",
        ]))
    return "\n".join(lines) + "\n"


def _sweep_csv(payload: dict) -> str:
    cols = ("value", "lambda", "beta", "alpha", "epsilon", "swapped", "k0",
            "residual_bc_left1", "residual_bc_left2", "residual_bc_right",
            "converged", "win_prob_1")
    lines = [",".join(cols)]
    for row in payload["rows"]:
        cells = []
        for col in cols:
            v = row[col]
            if isinstance(v, bool):
                cells.append("true" if v else "false")
            elif isinstance(v, float):
                cells.append(repr(v))
            else:
                cells.append(str(v))
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def _post(server: str, path: str, request_model) -> dict:
    import httpx

    resp = httpx.post(server.rstrip("/") + path,
                      json=request_model.model_dump(by_alias=True),
                      timeout=600.0)
    if resp.status_code == 422:
        raise ParameterError(f"server rejected request: {resp.text}")
    if resp.status_code == 409:
        raise DivergenceError(f"server reported divergence: {resp.text}")
    resp.raise_for_status()
    return resp.json()


def _cmd_solve(args) -> int:
    req = SolveRequest(params=_params_from_args(args), method=args.method,
                       grid_size=args.grid)
    if args.server:
        payload = _post(args.server, "/solve", req)
    else:
        payload = run_solve(req).model_dump(by_alias=True)
    meta = {"ratios": payload["ratios"], "solution": payload["solution"],
            "diagnostics": payload["diagnostics"]}
    sys.stderr.write(json.dumps(meta, indent=2) + "\n")
    fmt = args.format or "csv"
    if fmt == "json":
        _emit(json.dumps(payload, indent=2) + "\n", args.output)
    else:
        _emit(_table_csv(payload["table"]), args.output)
        if args.output is not None:
            args.output.with_suffix(".json").write_text(
                json.dumps(meta, indent=2) + "\n")
    return EXIT_OK


def _cmd_verify(args) -> int:
    try:
        probes = [float(x) for x in args.probes.split(",") if x.strip()]
    except ValueError as exc:
        raise ParameterError(f"bad probes list {args.probes!r}: {exc}")
    req = VerifyRequest(params=_params_from_args(args), method=args.method,
                        grid_size=args.grid, probes=probes,
                        tol_best_response=args.tol_best_response,
                        tol_ode=args.tol_ode, tol_k0=args.tol_k0)
    if args.server:
        payload = _post(args.server, "/verify", req)
    else:
        payload = run_verify(req).model_dump(by_alias=True)
    _emit(json.dumps(payload, indent=2) + "\n", args.output)
    if payload["passed"]:
        sys.stderr.write("verification passed\n")
        return EXIT_OK
    for failure in payload["failures"]:
        sys.stderr.write(f"verification failure: {failure}\n")
    return EXIT_VERIFY_FAILED


def _cmd_simulate(args) -> int:
    req = SimulateRequest(params=_params_from_args(args), method=args.method,
                          n=args.n, seed=args.seed)
    if args.server:
        if args.trace is not None:
            raise ParameterError("--trace is not available with --server")
        payload = _post(args.server, "/simulate", req)
    elif args.trace is not None:
        with open(args.trace, "w", newline="") as stream:
            payload = run_simulate(req, trace=stream).model_dump(by_alias=True)
    else:
        payload = run_simulate(req).model_dump(by_alias=True)
    _emit(json.dumps(payload, indent=2) + "\n", args.output)
    return EXIT_OK


def _cmd_sweep(args) -> int:
    req = SweepRequest(params=_params_from_args(args), axis=_parse_sweep(args.sweep),
                       method=args.method, n=args.n, seed=args.seed)
    if args.server:
        payload = _post(args.server, "/sweep", req)
    else:
        payload = run_sweep(req).model_dump(by_alias=True)
    fmt = args.format or "csv"
    if fmt == "json":
        _emit(json.dumps(payload, indent=2) + "\n", args.output)
    else:
        _emit(_sweep_csv(payload), args.output)
    return EXIT_OK


def _cmd_serve(args) -> int:
    import uvicorn

    uvicorn.run("apconflict.api:app", host=args.host, port=args.port)
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handlers = {"solve": _cmd_solve, "verify": _cmd_verify,
                "simulate": _cmd_simulate, "sweep": _cmd_sweep,
                "serve": _cmd_serve}
    try:
        return handlers[args.command](args)
    except (ParameterError, ValidationError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_CONFIG
    except DivergenceError as exc:
        sys.stderr.write(f"solver divergence: {exc}\n")
        if exc.trace:
            sys.stderr.write(f"k0 trace: {exc.trace}\n")
        return EXIT_DIVERGED


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
