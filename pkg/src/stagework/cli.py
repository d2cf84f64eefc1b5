"""Command line entry point: ``stagework serve``."""

from __future__ import annotations

import argparse
import getpass
import json
import socket
import sys
from pathlib import Path

import uvicorn

from .api import create_app
from .bootstrap import build_services
from .errors import DuplicateUser

_FRONTEND_DIR_NAMES = ("frontend/dist", "frontend")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stagework",
        description="Workflow manager with an embedded compute cluster.")
    sub = parser.add_subparsers(dest="command", required=True)
    serve = sub.add_parser("serve", help="run the API server")
    serve.add_argument("--port", type=int, default=8080,
                       help="listen port; 0 picks a free port (default 8080)")
    serve.add_argument("--host", default="127.0.0.1",
                       help="listen address (default 127.0.0.1)")
    serve.add_argument("--data-dir", default="./data",
                       help="state directory, created if missing (default ./data)")
    serve.add_argument("--poll-interval-secs", type=float, default=30.0,
                       help="resource poller cadence (default 30)")
    serve.add_argument("--config", metavar="FILE",
                       help="JSON file whose keys override the flags")
    serve.add_argument("--create-admin", metavar="USER",
                       help="create an admin account (prompts for password), "
                            "then exit")
    serve.add_argument("--frontend-dir", default=None,
                       help="static files served at / (default: bundled "
                            "frontend build if present)")
    return parser


def _apply_config(args: argparse.Namespace, path: str) -> None:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise SystemExit(f"stagework: cannot read config {path}: {exc}")
    if not isinstance(doc, dict):
        raise SystemExit(f"stagework: config {path} must hold a JSON object")
    known = {"port": int, "host": str, "data_dir": str,
             "poll_interval_secs": float, "frontend_dir": str}
    for key, value in doc.items():
        if key not in known:
            raise SystemExit(f"stagework: unknown config key {key!r}")
        setattr(args, key, known[key](value))


def _find_frontend() -> str | None:
    for name in _FRONTEND_DIR_NAMES:
        candidate = Path(name)
        if (candidate / "index.html").is_file():
            return str(candidate)
    return None


def serve(args: argparse.Namespace) -> int:
    if args.config:
        _apply_config(args, args.config)

    try:
        services = build_services(args.data_dir,
                                  poll_interval=args.poll_interval_secs)
    except OSError as exc:
        print(f"stagework: cannot use data dir {args.data_dir}: {exc}",
              file=sys.stderr)
        return 1

    if args.create_admin:
        try:
            password = getpass.getpass(f"password for {args.create_admin}: ")
            services.auth.create_user(args.create_admin, password,
                                      is_admin=True)
        except DuplicateUser:
            print(f"stagework: user {args.create_admin} already exists",
                  file=sys.stderr)
            return 1
        print(f"created admin user {args.create_admin}")
        return 0

    frontend = args.frontend_dir or _find_frontend()
    app = create_app(services, Path(frontend) if frontend else None)

    sock = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    sock.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
    try:
        sock.bind((args.host, args.port))
    except OSError as exc:
        print(f"stagework: cannot bind {args.host}:{args.port}: {exc}",
              file=sys.stderr)
        sock.close()
        return 1
    host, port = sock.getsockname()[:2]
    print(f"stagework: listening on {host}:{port}", flush=True)

    services.start()
    try:
        config = uvicorn.Config(app, log_level="warning")
        server = uvicorn.Server(config)
        server.run(sockets=[sock])
    finally:
        services.stop()
        sock.close()
    return 0


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "serve":
        return serve(args)
    return 2


if __name__ == "__main__":
    sys.exit(main())
