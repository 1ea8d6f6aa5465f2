"""Append-only announcement log with a JSON Lines backing file.

Each line is one record, field order fixed::

    {"index":0,"schemeId":1,"stealthAddress":"0x..","caller":"0x..","ephemeralPubKey":"0x..","metadata":"0x.."}
"""

from __future__ import annotations

import enum
import json
import os
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Optional, Union

from .codec import ADDRESS_LEN, COMPRESSED_LEN, from_hex, to_hex
from .errors import AppendError, DataError, FormatError, LengthError, RangeError

# keccak256("transfer(address,uint256)")[:4], keccak256("transferFrom(address,address,uint256)")[:4]
ERC20_TRANSFER = bytes.fromhex("a9059cbb")
ERC721_TRANSFER_FROM = bytes.fromhex("23b872dd")

_FIELDS = ("index", "schemeId", "stealthAddress", "caller", "ephemeralPubKey", "metadata")


class AssetKind(str, enum.Enum):
    ETHER = "ether"
    ERC20 = "erc20"
    ERC721 = "erc721"


@dataclass(frozen=True)
class MetadataPayload:
    view_tag: int
    kind: AssetKind = AssetKind.ETHER
    method_id: bytes = b""
    token_contract: bytes = b""
    value: int = 0

    @classmethod
    def ether(cls, view_tag: int) -> MetadataPayload:
        return cls(view_tag)

    @classmethod
    def erc20(cls, view_tag: int, token: bytes, amount: int, method_id: bytes = ERC20_TRANSFER):
        return cls(view_tag, AssetKind.ERC20, method_id, token, amount)

    @classmethod
    def erc721(cls, view_tag: int, token: bytes, token_id: int, method_id: bytes = ERC721_TRANSFER_FROM):
        return cls(view_tag, AssetKind.ERC721, method_id, token, token_id)

    def to_bytes(self) -> bytes:
        if not 0 <= self.view_tag < 256:
            raise FormatError(f"view tag must be one byte, got {self.view_tag}")
        tag = bytes([self.view_tag])
        if self.kind is AssetKind.ETHER:
            return tag
        if len(self.method_id) != 4:
            raise LengthError("method id must be 4 bytes")
        if len(self.token_contract) != ADDRESS_LEN:
            raise LengthError("token contract must be 20 bytes")
        if not 0 <= self.value < 2**256:
            raise FormatError("value does not fit in 32 bytes")
        return tag + self.method_id + self.token_contract + self.value.to_bytes(32, "big")

    @classmethod
    def from_bytes(cls, data: bytes) -> MetadataPayload:
        """Decode the two known layouts; 57-byte payloads are reported as token transfers."""
        if len(data) == 1:
            return cls(data[0])
        if len(data) != 57:
            raise LengthError(f"metadata layout unknown for {len(data)} bytes")
        method = data[1:5]
        kind = AssetKind.ERC721 if method == ERC721_TRANSFER_FROM else AssetKind.ERC20
        return cls(data[0], kind, method, data[5:25], int.from_bytes(data[25:57], "big"))


@dataclass(frozen=True)
class Announcement:
    index: int
    scheme_id: int
    stealth_address: bytes
    caller: bytes
    ephemeral_pub: bytes
    metadata: bytes

    @property
    def view_tag(self) -> Optional[int]:
        return self.metadata[0] if self.metadata else None

    def to_json(self) -> str:
        record = {
            "index": self.index,
            "schemeId": self.scheme_id,
            "stealthAddress": to_hex(self.stealth_address),
            "caller": to_hex(self.caller),
            "ephemeralPubKey": to_hex(self.ephemeral_pub),
            "metadata": to_hex(self.metadata),
        }
        return json.dumps(record, separators=(",", ":"))

    @classmethod
    def from_json(cls, text: str) -> Announcement:
        try:
            record = json.loads(text)
        except json.JSONDecodeError as exc:
            raise DataError(f"invalid JSON: {exc.msg}") from exc
        if not isinstance(record, dict) or tuple(record) != _FIELDS:
            raise DataError(f"expected fields {', '.join(_FIELDS)}")
        index, scheme = record["index"], record["schemeId"]
        if not (isinstance(index, int) and isinstance(scheme, int)) or index < 0 or scheme < 0:
            raise DataError("index and schemeId must be non-negative integers")
        try:
            return cls(
                index,
                scheme,
                from_hex(record["stealthAddress"], ADDRESS_LEN),
                from_hex(record["caller"], ADDRESS_LEN),
                from_hex(record["ephemeralPubKey"]),
                from_hex(record["metadata"]),
            )
        except FormatError as exc:
            raise DataError(str(exc)) from exc


class AnnouncementLog:
    """Announcement store, in memory or mirrored to a JSON Lines file.

    Writes go through one lock; readers see an immutable prefix.
    """

    def __init__(self, path: Union[str, os.PathLike, None] = None, fsync: bool = True):
        self.path = Path(path) if path is not None else None
        self.fsync = fsync
        self._records: list[Announcement] = []
        self._lock = threading.Lock()
        if self.path is not None and self.path.exists():
            self._records = list(_read_file(self.path))

    def __len__(self) -> int:
        return len(self._records)

    def __iter__(self) -> Iterator[Announcement]:
        return iter(list(self._records))

    def announce(
        self,
        scheme_id: int,
        stealth_address: bytes,
        ephemeral_pub: bytes,
        metadata: bytes,
        *,
        caller: bytes,
    ) -> Announcement:
        """Append one announcement; ``caller`` is the identity making the call."""
        if len(metadata) < 1:
            raise FormatError("metadata must hold at least the view tag")
        if len(ephemeral_pub) != COMPRESSED_LEN:
            raise LengthError(f"ephemeral key must be {COMPRESSED_LEN} bytes")
        if len(stealth_address) != ADDRESS_LEN or len(caller) != ADDRESS_LEN:
            raise LengthError("addresses must be 20 bytes")
        if scheme_id < 0:
            raise FormatError("scheme id must be non-negative")
        with self._lock:
            record = Announcement(
                len(self._records),
                scheme_id,
                bytes(stealth_address),
                bytes(caller),
                bytes(ephemeral_pub),
                bytes(metadata),
            )
            if self.path is not None:
                self._write(record)
            self._records.append(record)
            return record

    def _write(self, record: Announcement) -> None:
        line = (record.to_json() + "\n").encode()
        try:
            with open(self.path, "ab") as fh:
                start = fh.tell()
                try:
                    fh.write(line)
                    fh.flush()
                    if self.fsync:
                        os.fsync(fh.fileno())
                except OSError:
                    fh.truncate(start)
                    raise
        except OSError as exc:
            raise AppendError(f"could not append to {self.path}: {exc}") from exc

    def read_range(self, start: int, stop: int) -> list[Announcement]:
        records = self._records
        if not 0 <= start <= stop <= len(records):
            raise RangeError(f"range [{start}, {stop}) outside log of length {len(records)}")
        return records[start:stop]

    def reload(self) -> None:
        """Re-read the backing file, picking up appends made by another writer."""
        if self.path is None:
            return
        with self._lock:
            self._records = list(_read_file(self.path)) if self.path.exists() else []


def _read_file(path: Path) -> Iterator[Announcement]:
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                raise DataError("blank line", line=lineno)
            try:
                record = Announcement.from_json(line)
            except DataError as exc:
                raise DataError(str(exc), line=lineno) from exc
            if record.index != lineno - 1:
                raise DataError(f"index {record.index} out of sequence", line=lineno)
            yield record


def announce(log: AnnouncementLog, scheme_id, stealth_address, caller, ephemeral_pub, metadata) -> Announcement:
    return log.announce(scheme_id, stealth_address, ephemeral_pub, metadata, caller=caller)


def read_range(log: AnnouncementLog, start: int, stop: int) -> list[Announcement]:
    return log.read_range(start, stop)
