"""Stego container file format: versioned header plus token varints."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

from .errors import ContainerError

_MAGIC = b"SMC\x01"
_VERSION = 1

_FLAG_REORDER = 0x01
_FLAG_NATURAL = 0x02
_FLAG_INCOMPLETE = 0x04


def hash_prompt(prompt: tuple[int, ...]) -> bytes:
    """Canonical SHA-256 over the prompt token ids."""
    h = hashlib.sha256(b"prompt:")
    for t in prompt:
        h.update(str(t).encode("ascii"))
        h.update(b",")
    return h.digest()


def _write_varint(out: bytearray, value: int) -> None:
    if value < 0:
        raise ContainerError("token ids must be non-negative")
    while True:
        byte = value & 0x7F
        value >>= 7
        if value:
            out.append(byte | 0x80)
        else:
            out.append(byte)
            return


def _read_varint(data: bytes, pos: int) -> tuple[int, int]:
    value = 0
    shift = 0
    while True:
        if pos >= len(data):
            raise ContainerError("truncated varint")
        byte = data[pos]
        pos += 1
        value |= (byte & 0x7F) << shift
        if not byte & 0x80:
            return value, pos
        shift += 7
        if shift > 70:
            raise ContainerError("varint too long")


@dataclass(frozen=True)
class StegoContainer:
    """Token sequence plus the settings echo needed to decode it."""

    q_bits: int
    top_k: int
    reorder: bool
    finish: str
    incomplete: bool
    prompt_hash: bytes
    model_id: str
    tokens: tuple[int, ...]
    version: int = _VERSION

    def to_bytes(self) -> bytes:
        flags = (
            (_FLAG_REORDER if self.reorder else 0)
            | (_FLAG_NATURAL if self.finish == "natural" else 0)
            | (_FLAG_INCOMPLETE if self.incomplete else 0)
        )
        model = self.model_id.encode("utf-8")
        if len(model) > 0xFFFF:
            raise ContainerError("model identifier too long")
        out = bytearray()
        out += _MAGIC
        out.append(self.version)
        out.append(self.q_bits)
        out += self.top_k.to_bytes(4, "big")
        out.append(flags)
        out += self.prompt_hash
        out += len(model).to_bytes(2, "big")
        out += model
        out += len(self.tokens).to_bytes(4, "big")
        for t in self.tokens:
            _write_varint(out, t)
        return bytes(out)

    @staticmethod
    def from_bytes(data: bytes) -> "StegoContainer":
        if data[:4] != _MAGIC:
            raise ContainerError("not a stego container (bad magic)")
        if len(data) < 4 + 1 + 1 + 4 + 1 + 32 + 2 + 4:
            raise ContainerError("truncated container header")
        pos = 4
        version = data[pos]
        pos += 1
        if version != _VERSION:
            raise ContainerError(f"unsupported container version {version}")
        q_bits = data[pos]
        pos += 1
        top_k = int.from_bytes(data[pos : pos + 4], "big")
        pos += 4
        flags = data[pos]
        pos += 1
        prompt_hash = data[pos : pos + 32]
        pos += 32
        model_len = int.from_bytes(data[pos : pos + 2], "big")
        pos += 2
        model_id = data[pos : pos + model_len].decode("utf-8")
        pos += model_len
        count = int.from_bytes(data[pos : pos + 4], "big")
        pos += 4
        tokens = []
        for _ in range(count):
            value, pos = _read_varint(data, pos)
            tokens.append(value)
        if pos != len(data):
            raise ContainerError("trailing bytes after token list")
        return StegoContainer(
            q_bits=q_bits,
            top_k=top_k,
            reorder=bool(flags & _FLAG_REORDER),
            finish="natural" if flags & _FLAG_NATURAL else "stop",
            incomplete=bool(flags & _FLAG_INCOMPLETE),
            prompt_hash=prompt_hash,
            model_id=model_id,
            tokens=tuple(tokens),
            version=version,
        )

    def write(self, path: str) -> None:
        with open(path, "wb") as fh:
            fh.write(self.to_bytes())

    @staticmethod
    def read(path: str) -> "StegoContainer":
        with open(path, "rb") as fh:
            return StegoContainer.from_bytes(fh.read())


__all__ = ["StegoContainer", "hash_prompt"]
