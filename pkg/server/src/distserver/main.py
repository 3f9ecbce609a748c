"""Entry point: load the model and serve."""

from __future__ import annotations

import argparse
import os

import uvicorn

from .app import create_app
from .backend import ModelBackend, ServerConfig


def build_config(argv: list[str] | None = None) -> ServerConfig:
    parser = argparse.ArgumentParser(prog="shimer-dist-server")
    parser.add_argument(
        "--model",
        default=os.environ.get("DISTSERVER_MODEL"),
        required=os.environ.get("DISTSERVER_MODEL") is None,
        help="path to a locally stored causal LM",
    )
    parser.add_argument("--host", default=os.environ.get("DISTSERVER_HOST", "127.0.0.1"))
    parser.add_argument("--port", type=int, default=int(os.environ.get("DISTSERVER_PORT", "8731")))
    parser.add_argument("--max-context", type=int, default=None)
    parser.add_argument(
        "--device",
        default="cpu",
        help="cpu (default, deterministic); anything else downgrades the advertised determinism mode",
    )
    parser.add_argument("--name", default=None, help="serving alias for the model")
    args = parser.parse_args(argv)
    return ServerConfig(
        model_path=args.model,
        device=args.device,
        max_context=args.max_context,
        host=args.host,
        port=args.port,
        model_name=args.name,
    )


def main(argv: list[str] | None = None) -> None:
    config = build_config(argv)
    backend = ModelBackend(config)
    uvicorn.run(create_app(backend), host=config.host, port=config.port, log_level="warning")


if __name__ == "__main__":
    main()
