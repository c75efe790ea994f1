"""Command-line front door.

Subcommands call the HTTP service; by default an in-process client is used,
so no server needs to be running, and `--server URL` points the same client
at a remote instance. Exit codes: 0 ok, 1 check or diff failure, 2 usage.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path


def _read_source(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    return Path(path).read_text()


class Client:
    def __init__(self, server: str | None):
        if server:
            import httpx

            self._client = httpx.Client(base_url=server, timeout=600.0)
        else:
            import warnings

            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                from fastapi.testclient import TestClient

            from .service import app

            self._client = TestClient(app)

    def post(self, path: str, payload: dict) -> dict:
        r = self._client.post(path, json=payload)
        if r.status_code != 200:
            raise SystemExit(f"service error {r.status_code}: {r.text}")
        return r.json()


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="corolab", description=__doc__)
    parser.add_argument("--server", help="use a running service at this URL instead of in-process")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("typecheck", help="typecheck a calculus program")
    p.add_argument("file")
    p.add_argument("--subtyping", action="store_true")

    p = sub.add_parser("eval", help="evaluate a calculus program")
    p.add_argument("file")
    p.add_argument("--trace", action="store_true")
    p.add_argument("--fuel", type=int, default=10_000)
    p.add_argument("--subtyping", action="store_true")

    p = sub.add_parser("transform", help="emit the reference-calculus translation")
    p.add_argument("file")

    p = sub.add_parser("eval-target", help="evaluate a target-calculus program")
    p.add_argument("file")
    p.add_argument("--fuel", type=int, default=400_000)

    p = sub.add_parser("difftest", help="differential test: source vs transformed")
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--count", type=int, default=200)
    p.add_argument("--fuel", type=int, default=10_000)

    mini = sub.add_parser("mini", help="MiniLang pipeline commands")
    minisub = mini.add_subparsers(dest="mini_command", required=True)

    p = minisub.add_parser("compile", help="compile and dump pipeline stages")
    p.add_argument("file")
    p.add_argument("--coroutine", required=True)
    p.add_argument("--dump", choices=["cfg", "segments", "entries"], default="entries")
    p.add_argument("--no-opt", action="store_true")

    p = minisub.add_parser("run", help="run a compiled coroutine")
    p.add_argument("file")
    p.add_argument("--coroutine", required=True)
    p.add_argument("--args", default="")
    p.add_argument("--snapshot-at", type=int, default=None)
    p.add_argument("--no-opt", action="store_true")

    p = minisub.add_parser("difftest", help="differential test: oracle vs compiled")
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--count", type=int, default=300)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)

    args = parser.parse_args(argv)

    if args.command == "serve":
        import uvicorn

        from .service import app

        uvicorn.run(app, host=args.host, port=args.port)
        return 0

    client = Client(args.server)

    if args.command == "typecheck":
        out = client.post(
            "/typecheck",
            {"source": _read_source(args.file), "subtyping": args.subtyping},
        )
        if not out["ok"]:
            print(f"type error: {out['error']}", file=sys.stderr)
            return 1
        print(out["type"])
        return 0

    if args.command == "eval":
        out = client.post(
            "/eval",
            {
                "source": _read_source(args.file),
                "fuel": args.fuel,
                "trace": args.trace,
                "subtyping": args.subtyping,
            },
        )
        for line in out.get("trace") or []:
            print(line)
        if out["status"] == "finished":
            print(out["value"])
            return 0
        print(f"{out['status']}: {out.get('error') or out.get('value') or ''}", file=sys.stderr)
        return 1

    if args.command == "transform":
        out = client.post("/transform", {"source": _read_source(args.file)})
        if not out["ok"]:
            print(f"transform error: {out['error']}", file=sys.stderr)
            return 1
        print(out["target"])
        return 0

    if args.command == "eval-target":
        out = client.post(
            "/eval-target", {"source": _read_source(args.file), "fuel": args.fuel}
        )
        if out["status"] == "finished":
            print(out["value"])
            return 0
        print(f"{out['status']}: {out.get('error') or ''}", file=sys.stderr)
        return 1

    if args.command == "difftest":
        out = client.post(
            "/difftest",
            {"seed": args.seed, "count": args.count, "fuel": args.fuel},
        )
        print(json.dumps(out, indent=2))
        return 0 if out["ok"] else 1

    if args.command == "mini":
        if args.mini_command == "compile":
            out = client.post(
                "/mini/compile",
                {
                    "source": _read_source(args.file),
                    "coroutine": args.coroutine,
                    "dump": args.dump,
                    "no_opt": args.no_opt,
                },
            )
            if not out["ok"]:
                print(f"compile error: {out['error']}", file=sys.stderr)
                return 1
            print(out["dump"])
            return 0
        if args.mini_command == "run":
            out = client.post(
                "/mini/run",
                {
                    "source": _read_source(args.file),
                    "coroutine": args.coroutine,
                    "args": args.args,
                    "snapshot_at": args.snapshot_at,
                    "no_opt": args.no_opt,
                },
            )
            if not out["ok"]:
                print(f"run error: {out['error']}", file=sys.stderr)
                return 1
            for y in out["yields"]:
                print(f"yield {y}")
            if out.get("exception") is not None:
                print(f"exception {out['exception']}")
            elif out.get("result") is not None:
                print(f"result {out['result']}")
            if out.get("snapshot_yields") is not None:
                tail = ", ".join(out["snapshot_yields"])
                print(f"snapshot tail: [{tail}]")
                if out.get("snapshot_exception") is not None:
                    print(f"snapshot exception {out['snapshot_exception']}")
                elif out.get("snapshot_result") is not None:
                    print(f"snapshot result {out['snapshot_result']}")
            return 0
        if args.mini_command == "difftest":
            out = client.post(
                "/mini/difftest", {"seed": args.seed, "count": args.count}
            )
            print(json.dumps(out, indent=2))
            return 0 if out["ok"] else 1

    parser.error("unknown command")
    return 2


if __name__ == "__main__":
    sys.exit(main())
