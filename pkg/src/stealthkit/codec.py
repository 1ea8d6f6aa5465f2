"""Public-key compression, stealth meta-address strings, and address derivation."""

from __future__ import annotations

import re
from dataclasses import dataclass

from .curve import Point, keccak256, lift_x
from .errors import FormatError, GrammarError, LengthError, PrefixError

COMPRESSED_LEN = 33
META_BYTES_LEN = 2 * COMPRESSED_LEN
ADDRESS_LEN = 20

_META_RE = re.compile(r"st:([0-9]+):0x([0-9a-fA-F]*)")
_HEX_RE = re.compile(r"0x([0-9a-fA-F]*)")


def to_hex(data: bytes) -> str:
    return "0x" + bytes(data).hex()


def from_hex(text: str, length: int | None = None) -> bytes:
    """Parse ``0x``-prefixed hex (any case), optionally enforcing a byte length."""
    m = _HEX_RE.fullmatch(text) if isinstance(text, str) else None
    if m is None or len(m.group(1)) % 2:
        raise FormatError(f"not 0x-prefixed hex: {text!r}")
    raw = bytes.fromhex(m.group(1))
    if length is not None and len(raw) != length:
        raise LengthError(f"expected {length} bytes, got {len(raw)}")
    return raw


def compress(point: Point) -> bytes:
    if point.is_identity:
        raise FormatError("cannot encode the point at infinity")
    return bytes([2 + (point.y & 1)]) + point.x.to_bytes(32, "big")


def decompress(data: bytes) -> Point:
    if len(data) != COMPRESSED_LEN:
        raise LengthError(f"compressed key must be 33 bytes, got {len(data)}")
    if data[0] not in (2, 3):
        raise PrefixError(f"bad compressed-key prefix {data[0]:#04x}")
    return lift_x(int.from_bytes(data[1:], "big"), data[0] == 3)


def encode_uncompressed(point: Point) -> bytes:
    """64-byte x || y, no 0x04 prefix."""
    if point.is_identity:
        raise FormatError("cannot encode the point at infinity")
    return point.x.to_bytes(32, "big") + point.y.to_bytes(32, "big")


def to_eth_address(point: Point) -> bytes:
    return keccak256(encode_uncompressed(point))[-ADDRESS_LEN:]


def parse_address(text: str) -> bytes:
    return from_hex(text, ADDRESS_LEN)


@dataclass(frozen=True)
class StealthMetaAddress:
    chain_id: str
    spending_pub: bytes
    scanning_pub: bytes

    def __post_init__(self):
        if not re.fullmatch(r"[0-9]+", str(self.chain_id)):
            raise GrammarError(f"chain id must be decimal digits: {self.chain_id!r}")
        object.__setattr__(self, "chain_id", str(self.chain_id))

    @classmethod
    def from_points(cls, chain_id, spending: Point, scanning: Point) -> StealthMetaAddress:
        return cls(str(chain_id), compress(spending), compress(scanning))

    @classmethod
    def from_bytes(cls, chain_id, meta_bytes: bytes) -> StealthMetaAddress:
        if len(meta_bytes) != META_BYTES_LEN:
            raise LengthError(f"meta-address payload must be 66 bytes, got {len(meta_bytes)}")
        meta = cls(str(chain_id), bytes(meta_bytes[:33]), bytes(meta_bytes[33:]))
        meta.points()
        return meta

    def to_bytes(self) -> bytes:
        return self.spending_pub + self.scanning_pub

    def points(self) -> tuple[Point, Point]:
        """Decompress (spending, scanning); raises on bad prefix or off-curve x."""
        return decompress(self.spending_pub), decompress(self.scanning_pub)

    def __str__(self) -> str:
        return encode_meta(self)


def encode_meta(meta: StealthMetaAddress) -> str:
    return f"st:{meta.chain_id}:0x{meta.spending_pub.hex()}{meta.scanning_pub.hex()}"


def decode_meta(text: str) -> StealthMetaAddress:
    m = _META_RE.fullmatch(text.strip()) if isinstance(text, str) else None
    if m is None:
        raise GrammarError(f"not a stealth meta-address: {text!r}")
    keys = m.group(2)
    if len(keys) != 2 * META_BYTES_LEN:
        raise GrammarError(f"expected {2 * META_BYTES_LEN} hex chars after 0x, got {len(keys)}")
    return StealthMetaAddress.from_bytes(m.group(1), bytes.fromhex(keys))
