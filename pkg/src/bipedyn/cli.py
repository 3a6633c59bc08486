"""Command-line client of the dynamics service.

All computation happens behind the HTTP surface: by default the CLI talks
to an in-process instance of the FastAPI app (no socket involved); with
--server it targets a running instance instead. File handling, output
formatting and exit codes live here.

Exit codes: 0 success, 1 config error, 2 numerical failure, 3 I/O error.
"""
from __future__ import annotations

import argparse
import json
import sys

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NUMERICAL = 2
EXIT_IO = 3


class ServiceClient:
    """Minimal client: in-process ASGI by default, HTTP with --server."""

    def __init__(self, server: str | None = None):
        if server:
            import httpx

            self._client = httpx.Client(base_url=server, timeout=600.0)
        else:
            from fastapi.testclient import TestClient

            from .service import create_app

            self._client = TestClient(create_app(), raise_server_exceptions=False)

    def get(self, path: str):
        return self._client.get(path)

    def post(self, path: str, payload: dict):
        return self._client.post(path, json=payload)


def _read_file(path: str, what: str) -> str | int:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        print(f"error: cannot read {what} file {path!r}: {exc.strerror}", file=sys.stderr)
        return EXIT_IO


def _error_exit(resp) -> int:
    """Map a service error response to an exit code, printing the message."""
    try:
        body = resp.json()
    except ValueError:
        print(f"error: service returned status {resp.status_code}", file=sys.stderr)
        return EXIT_IO
    if isinstance(body, dict) and body.get("error") == "numerical":
        print(f"numerical failure: {body.get('message')}", file=sys.stderr)
        return EXIT_NUMERICAL
    if isinstance(body, dict) and body.get("error") == "config":
        print(f"config error: {body.get('message')}", file=sys.stderr)
        return EXIT_CONFIG
    if resp.status_code == 422:  # request-shape validation
        print(f"config error: {body}", file=sys.stderr)
        return EXIT_CONFIG
    print(f"error: service returned status {resp.status_code}: {body}", file=sys.stderr)
    return EXIT_IO


def _write_output(path: str | None, text: str) -> int:
    if path is None:
        sys.stdout.write(text)
        return EXIT_OK
    try:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    except OSError as exc:
        print(f"error: cannot write {path!r}: {exc.strerror}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


def _grid_text(name: str, data, rows: int, cols: int) -> str:
    lines = [f"# {name} {rows}x{cols}"]
    for row in data:
        lines.append(" ".join(repr(float(v)) for v in row))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------


def cmd_simulate(args) -> int:
    robot = _read_file(args.model, "model")
    if isinstance(robot, int):
        return robot
    simcfg = _read_file(args.sim, "sim config")
    if isinstance(simcfg, int):
        return simcfg
    client = ServiceClient(args.server)
    resp = client.post("/simulate", {"robot_config": robot, "sim_config": simcfg})
    if resp.status_code != 200:
        return _error_exit(resp)
    body = resp.json()
    summary = body["summary"]

    if args.format == "json":
        doc = {
            "kind": "bipedyn-trajectory",
            "metadata": body["metadata"],
            "columns": body["columns"],
            "samples": body["samples"],
        }
        rc = _write_output(args.out, json.dumps(doc, indent=1) + "\n")
    else:
        lines = [",".join(body["columns"])]
        for row in body["samples"]:
            lines.append(",".join(v if isinstance(v, str) else repr(float(v)) for v in row))
        rc = _write_output(args.out, "\n".join(lines) + "\n")
    if rc != EXIT_OK:
        return rc

    print(f"samples:        {summary['n_samples']}")
    print(f"impact events:  {summary['n_impacts']}")
    print(f"max holonomic drift [m]: {summary['max_drift_holonomic_m']!r}")
    print(f"energy drift [J]:        {summary['energy_drift_J']!r}")
    if summary.get("aborted"):
        print(f"numerical failure: {summary['aborted']}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


def cmd_check(args) -> int:
    robot = _read_file(args.model, "model")
    if isinstance(robot, int):
        return robot
    client = ServiceClient(args.server)
    resp = client.post(
        "/check", {"robot_config": robot, "seed": args.seed, "samples": args.samples}
    )
    if resp.status_code != 200:
        return _error_exit(resp)
    body = resp.json()
    print(f"seed: {body['seed']}  samples: {body['samples']}")
    failed = []
    for item in body["checks"]:
        mark = "PASS" if item["passed"] else "FAIL"
        print(
            f"{mark}  {item['name']:34s} max residual {item['max_residual']:.3e}"
            f"  tolerance {item['tolerance']:.1e}  ({item['samples']} samples)"
        )
        if not item["passed"]:
            failed.append(item["name"])
    if failed:
        print("failed checks: " + ", ".join(failed), file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


def cmd_reduce(args) -> int:
    robot = _read_file(args.model, "model")
    if isinstance(robot, int):
        return robot
    payload = {"robot_config": robot, "dump_all": args.dump_all}
    if args.phi:
        payload["phi"] = [float(x) for x in args.phi.replace(",", " ").split()]
    if args.phidot:
        payload["phi_dot"] = [float(x) for x in args.phidot.replace(",", " ").split()]
    client = ServiceClient(args.server)
    resp = client.post("/reduce", payload)
    if resp.status_code != 200:
        return _error_exit(resp)
    body = resp.json()
    n = body["n"]
    out = []
    out.append(_grid_text("J", body["j"], n, n))
    out.append(_grid_text("H", [[v] for v in body["h"]], n, 1))
    out.append(_grid_text("G", [[v] for v in body["g"]], n, 1))
    out.append(_grid_text("D", body["d"], n, n))
    out.append(f"# cond(D) = {body['d_condition']!r}\n")
    if body.get("dumps"):
        for dump in body["dumps"]:
            out.append(_grid_text(dump["name"], dump["data"], dump["rows"], dump["cols"]))
    return _write_output(args.out, "\n".join(out))


def cmd_version(args) -> int:
    client = ServiceClient(args.server)
    resp = client.get("/version")
    if resp.status_code != 200:
        return _error_exit(resp)
    body = resp.json()
    print(f"{body['name']} {body['version']}")
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    from .service import app

    uvicorn.run(app, host=args.host, port=args.port)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="bipedyn",
        description="Seven-link biped dynamics: simulate, verify and inspect the reduced model.",
    )
    p.add_argument("--server", default=None, help="base URL of a running service (default: in-process)")
    sub = p.add_subparsers(dest="command", required=True)

    ps = sub.add_parser("simulate", help="run a walking-cycle simulation")
    ps.add_argument("--model", required=True, help="robot config file")
    ps.add_argument("--sim", required=True, help="simulation config file")
    ps.add_argument("--out", default=None, help="output path (default: stdout)")
    ps.add_argument("--format", choices=("csv", "json"), default="csv")
    ps.set_defaults(fn=cmd_simulate)

    pc = sub.add_parser("check", help="run the randomized invariant suite")
    pc.add_argument("--model", required=True)
    pc.add_argument("--seed", type=int, default=0)
    pc.add_argument("--samples", type=int, default=1000)
    pc.set_defaults(fn=cmd_check)

    pr = sub.add_parser("reduce", help="dump the reduced model at a state")
    pr.add_argument("--model", required=True)
    pr.add_argument("--phi", default=None, help="active-DOF positions (n numbers)")
    pr.add_argument("--phidot", default=None, help="active-DOF rates (n numbers)")
    pr.add_argument("--dump-all", action="store_true", help="also dump P1..P13")
    pr.add_argument("--out", default=None)
    pr.set_defaults(fn=cmd_reduce)

    pv = sub.add_parser("version", help="print service name and version")
    pv.set_defaults(fn=cmd_version)

    pd = sub.add_parser("serve", help="run the HTTP service")
    pd.add_argument("--host", default="127.0.0.1")
    pd.add_argument("--port", type=int, default=8077)
    pd.set_defaults(fn=cmd_serve)

    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
