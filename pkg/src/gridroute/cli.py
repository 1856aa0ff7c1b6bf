"""Command line client for the routing service.

Every subcommand talks to the HTTP API: by default an in-process application
instance (no socket), or a remote server via ``--server``. Exit codes: 0
success, 1 usage error, 2 validation error, 3 numerical abort.
"""

import argparse
import json
import sys
from pathlib import Path

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3

POLICY_CHOICES = ("network", "random", "greedy-landmark")


class ServiceError(Exception):
    """A non-success HTTP response, mapped to an exit code."""

    def __init__(self, exit_code, detail, payload=None):
        super().__init__(detail)
        self.exit_code = exit_code
        self.detail = detail
        self.payload = payload or {}


class ServiceClient:
    """Minimal POST/GET wrapper over TestClient (in-process) or httpx (remote)."""

    def __init__(self, server=None):
        if server is None:
            import warnings

            with warnings.catch_warnings():
                # fastapi's testclient import warns on some starlette/httpx combos
                warnings.simplefilter("ignore")
                from fastapi.testclient import TestClient

            from .service.app import create_app

            self._client = TestClient(create_app())
        else:
            import httpx

            self._client = httpx.Client(base_url=server, timeout=None)

    def post(self, path, payload):
        return _check(self._client.post(path, json=payload))

    def get(self, path):
        return _check(self._client.get(path))


def _check(response):
    if response.status_code == 200:
        return response.json()
    try:
        body = response.json()
    except ValueError:
        body = {}
    detail = body.get("detail", response.text.strip() or f"HTTP {response.status_code}")
    if response.status_code == 422:
        if not isinstance(detail, str):  # pydantic's structured error list
            detail = "; ".join(
                f"{'.'.join(str(p) for p in e.get('loc', []))}: {e.get('msg', '')}"
                for e in detail
            )
        raise ServiceError(EXIT_VALIDATION, detail, body)
    if response.status_code == 500 and body.get("error") == "numerical":
        raise ServiceError(EXIT_NUMERICAL, detail, body)
    raise ServiceError(EXIT_USAGE, f"unexpected HTTP {response.status_code}: {detail}", body)


class _Parser(argparse.ArgumentParser):
    """argparse defaults to exit code 2 on usage errors; we reserve 2 for validation."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _read_json(path):
    return json.loads(Path(path).read_text())


def _write_text(path, text):
    path = Path(path)
    if path.parent != Path(""):
        path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


def _emit(doc, out_path):
    text = json.dumps(doc, indent=2) + "\n"
    if out_path is None:
        sys.stdout.write(text)
    else:
        _write_text(out_path, text)


def _parse_walls(text):
    text = text.strip()
    if not text:
        return []
    return [int(part) for part in text.split(",")]


def cmd_gen(args, client):
    payload = {
        "count": args.count,
        "num_landmarks": args.landmarks,
        "num_agents": args.agents,
        "seed": args.seed,
        "rows": args.rows,
        "cols": args.cols,
        "depot": args.depot,
    }
    if args.walls is not None:
        payload["walls"] = _parse_walls(args.walls)
    body = client.post("/instances/generate", payload)
    instances = body["instances"]
    if args.out is None:
        _emit({"instances": instances}, None)
    else:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        for doc in instances:
            _write_text(out / f"{doc['name']}.json", json.dumps(doc, indent=2) + "\n")
        print(f"wrote {len(instances)} instance(s) to {out}")
    return EXIT_OK


def cmd_train(args, client):
    config = _read_json(args.config) if args.config else {}
    if args.seed is not None:
        config["master_seed"] = args.seed
    try:
        body = client.post("/train", {"config": config})
    except ServiceError as exc:
        if exc.exit_code == EXIT_NUMERICAL and args.out:
            out = Path(args.out)
            if "checkpoint" in exc.payload:
                _write_text(out / "checkpoint-aborted.json", json.dumps(exc.payload["checkpoint"]) + "\n")
            if "metrics_csv" in exc.payload:
                _write_text(out / "metrics-partial.csv", exc.payload["metrics_csv"])
            print(f"partial artifacts saved to {out}", file=sys.stderr)
        raise
    if args.out:
        out = Path(args.out)
        _write_text(out / "metrics.csv", body["metrics_csv"])
        _write_text(out / "checkpoint.json", json.dumps(body["checkpoint"]) + "\n")
        print(f"wrote metrics.csv and checkpoint.json to {out}")
    print(json.dumps(body["summary"], indent=2))
    return EXIT_OK


def cmd_eval(args, client):
    if args.policy == "network" and not args.checkpoint:
        raise ServiceError(EXIT_USAGE, "--checkpoint is required for the network policy")
    payload = {
        "policy": args.policy,
        "master_seed": args.seed,
        "max_steps": args.max_steps,
    }
    if args.checkpoint:
        payload["checkpoint"] = _read_json(args.checkpoint)
    if args.instances:
        payload["instances"] = [_read_json(p) for p in args.instances]
    else:
        payload["count"] = args.count
    if args.trainer_config:
        payload["trainer_config"] = _read_json(args.trainer_config)
    body = client.post("/evaluate", payload)
    if args.out:
        out = Path(args.out)
        _write_text(out / "report.json", json.dumps(body["report"], indent=2) + "\n")
        _write_text(out / "report.csv", body["rows_csv"])
        print(f"wrote report.json and report.csv to {out}")
    print(json.dumps(body["report"]["aggregates"], indent=2))
    return EXIT_OK


def cmd_solve(args, client):
    body = client.post("/solve", {"instance": _read_json(args.instance)})
    _emit(body, args.out)
    return EXIT_OK


def cmd_rollout(args, client):
    if args.policy == "network" and not args.checkpoint:
        raise ServiceError(EXIT_USAGE, "--checkpoint is required for the network policy")
    payload = {
        "instance": _read_json(args.instance),
        "policy": args.policy,
        "seed": args.seed,
        "max_steps": args.max_steps,
    }
    if args.checkpoint:
        payload["checkpoint"] = _read_json(args.checkpoint)
    body = client.post("/rollout", payload)
    _emit(body["trace"], args.out)
    return EXIT_OK


def cmd_render(args, client):
    body = client.post("/render", {"trace": _read_json(args.trace), "mode": args.mode})
    sys.stdout.write(body["text"])
    return EXIT_OK


def cmd_serve(args, client):
    import uvicorn

    from .service.app import create_app

    uvicorn.run(create_app(), host=args.host, port=args.port)
    return EXIT_OK


def build_parser():
    parser = _Parser(prog="gridroute", description=__doc__.splitlines()[0])
    parser.add_argument(
        "--server",
        default=None,
        metavar="URL",
        help="talk to a running server instead of the in-process app",
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("gen", help="generate problem instances")
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--landmarks", type=int, default=5)
    p.add_argument("--agents", type=int, default=3)
    p.add_argument("--rows", type=int, default=7)
    p.add_argument("--cols", type=int, default=7)
    p.add_argument("--walls", default=None, help="comma-separated wall cells")
    p.add_argument("--depot", type=int, default=24)
    p.add_argument("--out", default=None, help="directory for instance JSON files")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("train", help="run the full training schedule")
    p.add_argument("--config", default=None, help="trainer config JSON (partial allowed)")
    p.add_argument("--seed", type=int, default=None, help="override the master seed")
    p.add_argument("--out", default=None, help="directory for metrics.csv and checkpoint.json")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a policy on unseen instances")
    p.add_argument("--policy", choices=POLICY_CHOICES, default="network")
    p.add_argument("--checkpoint", default=None, help="checkpoint JSON (network policy)")
    p.add_argument("--count", type=int, default=50, help="number of unseen instances")
    p.add_argument("--instances", nargs="+", default=None, help="explicit instance files")
    p.add_argument("--trainer-config", default=None, help="config whose training problems to avoid")
    p.add_argument("--seed", type=int, default=0, help="evaluation master seed")
    p.add_argument("--max-steps", type=int, default=50)
    p.add_argument("--out", default=None, help="directory for report.json and report.csv")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("solve", help="solve an instance exactly")
    p.add_argument("--instance", required=True, help="instance JSON file")
    p.add_argument("--out", default=None, help="solution JSON file (default stdout)")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("rollout", help="roll a policy out on one instance")
    p.add_argument("--instance", required=True, help="instance JSON file")
    p.add_argument("--policy", choices=POLICY_CHOICES, default="network")
    p.add_argument("--checkpoint", default=None, help="checkpoint JSON (network policy)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-steps", type=int, default=50)
    p.add_argument("--out", default=None, help="trace JSON file (default stdout)")
    p.set_defaults(func=cmd_rollout)

    p = sub.add_parser("render", help="pretty-print a stored trace")
    p.add_argument("--trace", required=True, help="trace JSON file")
    p.add_argument("--mode", choices=("frames", "summary"), default="frames")
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("serve", help="run the HTTP server")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        client = None if args.func is cmd_serve else ServiceClient(args.server)
        return args.func(args, client)
    except ServiceError as exc:
        print(f"error: {exc.detail}", file=sys.stderr)
        return exc.exit_code
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
