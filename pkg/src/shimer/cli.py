"""Command-line surface: keygen, encode, decode, bench, analyze."""

from __future__ import annotations

import argparse
import os
import sys

from . import analysis
from .channel import ChannelSource, synthetic_channel
from .client import AdapterChannel
from .codec import Settings, decode, encode
from .container import StegoContainer
from .errors import (
    BadChannelSpec,
    ContainerError,
    Incomplete,
    KeyFormatError,
    NonDeterministicServer,
    PaddingMismatch,
    ServerError,
    SettingsMismatch,
    ShimerError,
    TransportError,
    UnknownToken,
)
from .prg import StegoKey, keygen

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_INCOMPLETE = 3
EXIT_PADDING_MISMATCH = 4
EXIT_UNKNOWN_TOKEN = 5
EXIT_CHANNEL = 6
EXIT_CONTAINER_MISMATCH = 7
EXIT_EXISTS = 8
EXIT_OTHER = 9

_ERROR_CODES: list[tuple[type, int]] = [
    (PaddingMismatch, EXIT_PADDING_MISMATCH),
    (UnknownToken, EXIT_UNKNOWN_TOKEN),
    (Incomplete, EXIT_INCOMPLETE),
    (SettingsMismatch, EXIT_CONTAINER_MISMATCH),
    (ContainerError, EXIT_CONTAINER_MISMATCH),
    (TransportError, EXIT_CHANNEL),
    (ServerError, EXIT_CHANNEL),
    (NonDeterministicServer, EXIT_CHANNEL),
    (BadChannelSpec, EXIT_USAGE),
    (KeyFormatError, EXIT_USAGE),
]


def _fail(exc: Exception) -> int:
    code = EXIT_OTHER
    for klass, mapped in _ERROR_CODES:
        if isinstance(exc, klass):
            code = mapped
            break
    print(f"error {type(exc).__name__}: {exc}", file=sys.stderr)
    return code


def _load_key(value: str) -> StegoKey:
    if os.path.exists(value):
        with open(value, "r", encoding="utf-8") as fh:
            return StegoKey.from_hex(fh.read())
    return StegoKey.from_hex(value)


def _resolve_channel(args) -> ChannelSource:
    spec = args.channel
    if spec is None and getattr(args, "endpoint", None):
        spec = args.endpoint
    if spec is None:
        raise BadChannelSpec("no channel given (--channel or --endpoint)")
    if spec.startswith("http://") or spec.startswith("https://"):
        return AdapterChannel.connect(spec, top_k=args.top_k)
    return synthetic_channel(spec)


def _resolve_prompt(args, channel: ChannelSource) -> tuple[int, ...]:
    raw = args.prompt or ""
    if not raw:
        return ()
    if isinstance(channel, AdapterChannel):
        return tuple(channel.tokenize(raw))
    return tuple(int(tok) for tok in raw.replace(",", " ").split())


def _read_payload(args) -> bytes:
    if args.infile == "-":
        data = sys.stdin.buffer.read()
    else:
        with open(args.infile, "rb") as fh:
            data = fh.read()
    if args.hex:
        return bytes.fromhex(data.decode("ascii").strip())
    return data


def _write_payload(args, payload: bytes) -> None:
    data = payload.hex().encode("ascii") + b"\n" if args.hex else payload
    if args.outfile == "-":
        sys.stdout.buffer.write(data)
        sys.stdout.buffer.flush()
    else:
        with open(args.outfile, "wb") as fh:
            fh.write(data)


def _settings(args) -> Settings:
    return Settings(
        q_bits=args.q,
        top_k=args.top_k,
        reorder=args.reorder == "on",
        finish=args.finish,
        max_tokens=args.max_tokens,
    )


def cmd_keygen(args) -> int:
    if os.path.exists(args.out) and not args.force:
        print(f"error RefuseOverwrite: {args.out} exists (use --force)", file=sys.stderr)
        return EXIT_EXISTS
    key = keygen(seed=args.seed)
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write(key.to_hex() + "\n")
    print(f"wrote {args.out}")
    return EXIT_OK


def cmd_encode(args) -> int:
    key = _load_key(args.key)
    channel = _resolve_channel(args)
    prompt = _resolve_prompt(args, channel)
    payload = _read_payload(args)
    settings = _settings(args)
    container = encode(key, channel, prompt, payload, settings)
    container.write(args.out)
    rendered = channel.detokenize(list(container.tokens))
    if rendered is not None:
        with open(args.out + ".txt", "w", encoding="utf-8") as fh:
            fh.write(rendered)
    if container.incomplete:
        print(
            f"error Incomplete: token budget {settings.max_tokens} reached before "
            f"the full frame was embedded; container written with a warning flag",
            file=sys.stderr,
        )
        return EXIT_INCOMPLETE
    print(f"embedded {len(payload)} bytes into {len(container.tokens)} tokens -> {args.out}")
    return EXIT_OK


def cmd_decode(args) -> int:
    key = _load_key(args.key)
    container = StegoContainer.read(args.infile)
    for name, given, stored in (
        ("--q", args.q, container.q_bits),
        ("--top-k", args.top_k, container.top_k),
    ):
        if given is not None and given != stored:
            raise SettingsMismatch(f"{name}={given} disagrees with container ({stored})")
    if args.reorder is not None and (args.reorder == "on") != container.reorder:
        raise SettingsMismatch(
            f"--reorder={args.reorder} disagrees with container "
            f"({'on' if container.reorder else 'off'})"
        )
    args.top_k = container.top_k  # container settings are authoritative
    channel = _resolve_channel(args)
    prompt = _resolve_prompt(args, channel)
    payload = decode(key, channel, prompt, container)
    _write_payload(args, payload)
    if args.outfile != "-":
        print(f"recovered {len(payload)} bytes -> {args.outfile}")
    return EXIT_OK


def cmd_bench(args) -> int:
    channel = _resolve_channel(args)
    sweep = (
        [int(k) for k in args.sweep_top_k.split(",")] if args.sweep_top_k else [args.top_k]
    )
    reports = []
    for k in sweep:
        run_settings = Settings(
            q_bits=args.q,
            top_k=k,
            reorder=args.reorder == "on",
            max_tokens=args.max_tokens,
        )
        report = analysis.run_benchmark(
            channel, run_settings, token_budget=args.tokens, seed=args.seed or 0
        )
        reports.append(report)
        print(report.format_table())
        print()
    if args.report:
        with open(args.report, "a", encoding="utf-8") as fh:
            for report in reports:
                fh.write(report.to_json() + "\n")
        print(f"appended {len(reports)} record(s) to {args.report}")
    return EXIT_OK


def cmd_analyze(args) -> int:
    if args.p_max is not None:
        bound = analysis.split_bound_high(args.p_max)
        print(f"split bound (p_max={args.p_max}): {bound:.6f}")
    if args.n is not None and args.p_max is not None:
        general = analysis.split_bound_general(args.p_max, args.n)
        raw = analysis.split_bound_general(args.p_max, args.n, clamp=False)
        flag = "" if general == raw else " (clamped)"
        print(f"general bound (n={args.n}): {general:.6f}{flag}")
    if args.curve:
        print("p_max,bound")
        for i in range(50, 101):
            p = i / 100
            print(f"{p:.2f},{analysis.split_bound_high(p):.6f}")
    if args.dist:
        with open(args.dist, "r", encoding="utf-8") as fh:
            probs = [float(line.strip()) for line in fh if line.strip()]
        h = analysis.entropy(probs)
        expected = analysis.expected_embedding_no_reorder(probs)
        print(f"entropy: {h:.6f} bits/token")
        print(f"expected embedding without reorder: {expected:.6f} bits/token")
        if args.as_printed:
            print(
                "extracted-bits closed form (as printed): "
                f"{analysis.extracted_bits_bound_as_printed(expected):.6f}"
            )
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="shimer",
        description="Shift-merge steganographic codec over token channels",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("keygen", help="generate a 32-byte key file")
    p.add_argument("--out", required=True)
    p.add_argument("--force", action="store_true")
    p.add_argument("--seed", type=int, default=None, help="test mode: reproducible key")
    p.set_defaults(func=cmd_keygen)

    def channel_opts(p: argparse.ArgumentParser) -> None:
        p.add_argument("--channel", help="uniform:K | zipf:S:K | markov:K[:SEED] | scripted:PATH | http(s)://...")
        p.add_argument("--endpoint", help="distribution server URL (same as --channel http...)")
        p.add_argument("--prompt", default="", help="prompt text (adapter) or token ids")

    p = sub.add_parser("encode", help="embed a payload into a token sequence")
    p.add_argument("--key", required=True, help="64 hex chars or a key file path")
    channel_opts(p)
    p.add_argument("--hex", action="store_true", help="payload input as hex text")
    p.add_argument("--top-k", type=int, default=100)
    p.add_argument("--q", type=int, default=24)
    p.add_argument("--reorder", choices=["on", "off"], default="on")
    p.add_argument("--finish", choices=["stop", "natural"], default="stop")
    p.add_argument("--max-tokens", type=int, default=512)
    p.add_argument("--in", dest="infile", required=True, help="payload file or '-'")
    p.add_argument("--out", required=True, help="container output path")
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("decode", help="recover a payload from a container")
    p.add_argument("--key", required=True, help="64 hex chars or a key file path")
    channel_opts(p)
    p.add_argument("--hex", action="store_true", help="payload output as hex text")
    p.add_argument("--top-k", type=int, default=None, help="must match the container if given")
    p.add_argument("--q", type=int, default=None, help="must match the container if given")
    p.add_argument("--reorder", choices=["on", "off"], default=None)
    p.add_argument("--in", dest="infile", required=True, help="container path")
    p.add_argument("--out", dest="outfile", required=True, help="payload output or '-'")
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("bench", help="measure capacity and timing on a channel")
    channel_opts(p)
    p.add_argument("--top-k", type=int, default=100)
    p.add_argument("--q", type=int, default=24)
    p.add_argument("--reorder", choices=["on", "off"], default="on")
    p.add_argument("--max-tokens", type=int, default=512)
    p.add_argument("--tokens", type=int, default=20000, help="token budget")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--report", help="append JSON records to this file")
    p.add_argument("--sweep-top-k", help="comma-separated top-k values (plot data)")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("analyze", help="closed-form bounds and expectations")
    p.add_argument("--p-max", type=float, default=None)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--curve", action="store_true", help="print the bound curve")
    p.add_argument("--dist", help="file with one probability per line")
    p.add_argument("--as-printed", action="store_true", help="include the verbatim printed closed form")
    p.set_defaults(func=cmd_analyze)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ShimerError as exc:
        return _fail(exc)
    except OSError as exc:
        return _fail(exc)


if __name__ == "__main__":
    sys.exit(main())
