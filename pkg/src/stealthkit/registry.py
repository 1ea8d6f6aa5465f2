"""Stealth meta-address registry keyed by (registrant address, scheme id).

Registration on behalf of someone else needs a recoverable secp256k1 ECDSA
signature from the registrant over::

    keccak256(b"BaseSAP-register" || scheme_id (32 bytes BE) || registrant (20 bytes) || meta_bytes)

There is no nonce: replaying a signature writes the same bytes again.
"""

from __future__ import annotations

import hashlib
import hmac
import json
import os
import tempfile
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional, Union

from .codec import ADDRESS_LEN, COMPRESSED_LEN, META_BYTES_LEN, from_hex, to_eth_address, to_hex
from .curve import N, keccak256, lift_x, point_add, point_mul
from .errors import (
    AuthorizationError,
    DataError,
    FormatError,
    LengthError,
    OffCurveError,
    PrefixError,
    UnsupportedSchemeError,
)

REGISTER_DOMAIN = b"BaseSAP-register"
HALF_N = N // 2


def _validate_secp256k1(meta_bytes: bytes) -> None:
    if len(meta_bytes) != META_BYTES_LEN:
        raise LengthError(f"meta-address must be {META_BYTES_LEN} bytes, got {len(meta_bytes)}")
    spending, scanning = meta_bytes[:COMPRESSED_LEN], meta_bytes[COMPRESSED_LEN:]
    for name, key in (("spending", spending), ("scanning", scanning)):
        if key[0] not in (2, 3):
            raise PrefixError(f"{name} key prefix {key[0]:#04x} is not 0x02/0x03")
    for name, key in (("spending", spending), ("scanning", scanning)):
        try:
            lift_x(int.from_bytes(key[1:], "big"), key[0] == 3)
        except OffCurveError as exc:
            raise OffCurveError(f"{name} key: {exc}") from exc


_VALIDATORS: dict[int, Callable[[bytes], None]] = {1: _validate_secp256k1}


def register_scheme(scheme_id: int, validator: Callable[[bytes], None]) -> None:
    """Install the meta-address validator for another scheme id."""
    _VALIDATORS[scheme_id] = validator


def validate_meta(scheme_id: int, meta_bytes: bytes) -> None:
    """Raise unless ``meta_bytes`` is a well-formed meta-address for ``scheme_id``."""
    try:
        validator = _VALIDATORS[scheme_id]
    except KeyError:
        raise UnsupportedSchemeError(f"no validator for scheme {scheme_id}") from None
    validator(bytes(meta_bytes))


# ECDSA with public-key recovery


@dataclass(frozen=True)
class RegistrationSignature:
    r: int
    s: int
    recovery_id: int

    def to_bytes(self) -> bytes:
        return self.r.to_bytes(32, "big") + self.s.to_bytes(32, "big") + bytes([27 + self.recovery_id])

    @classmethod
    def from_bytes(cls, data: bytes) -> RegistrationSignature:
        if len(data) != 65:
            raise LengthError(f"signature must be 65 bytes, got {len(data)}")
        v = data[64]
        if v in (27, 28):
            v -= 27
        if v not in (0, 1):
            raise FormatError(f"bad recovery id {data[64]}")
        return cls(int.from_bytes(data[:32], "big"), int.from_bytes(data[32:64], "big"), v)


def address_of(priv: int) -> bytes:
    return to_eth_address(point_mul(priv))


def registration_digest(registrant: bytes, scheme_id: int, meta_bytes: bytes) -> bytes:
    return keccak256(REGISTER_DOMAIN + scheme_id.to_bytes(32, "big") + bytes(registrant) + bytes(meta_bytes))


def _rfc6979_nonces(priv: int, digest: bytes):
    x = priv.to_bytes(32, "big")
    h = (int.from_bytes(digest, "big") % N).to_bytes(32, "big")
    k = b"\x00" * 32
    v = b"\x01" * 32
    k = hmac.new(k, v + b"\x00" + x + h, hashlib.sha256).digest()
    v = hmac.new(k, v, hashlib.sha256).digest()
    k = hmac.new(k, v + b"\x01" + x + h, hashlib.sha256).digest()
    v = hmac.new(k, v, hashlib.sha256).digest()
    while True:
        v = hmac.new(k, v, hashlib.sha256).digest()
        candidate = int.from_bytes(v, "big")
        if 0 < candidate < N:
            yield candidate
        k = hmac.new(k, v + b"\x00", hashlib.sha256).digest()
        v = hmac.new(k, v, hashlib.sha256).digest()


def ecdsa_sign(priv: int, digest: bytes) -> RegistrationSignature:
    e = int.from_bytes(digest, "big") % N
    for nonce in _rfc6979_nonces(priv, digest):
        R = point_mul(nonce)
        # recovery ids 2/3 (R.x >= n) are not representable; take the next nonce
        if R.x >= N:
            continue
        r = R.x
        s = pow(nonce, -1, N) * (e + r * priv) % N
        if not r or not s:
            continue
        recid = R.y & 1
        if s > HALF_N:
            s = N - s
            recid ^= 1
        return RegistrationSignature(r, s, recid)


def ecdsa_recover(digest: bytes, sig: RegistrationSignature) -> bytes:
    """Return the 20-byte address whose key produced ``sig`` over ``digest``."""
    if not (0 < sig.r < N and 0 < sig.s <= HALF_N):
        raise AuthorizationError("signature scalars out of range")
    try:
        R = lift_x(sig.r, bool(sig.recovery_id))
    except OffCurveError as exc:
        raise AuthorizationError("signature r has no curve point") from exc
    e = int.from_bytes(digest, "big") % N
    r_inv = pow(sig.r, -1, N)
    Q = point_add(point_mul(sig.s * r_inv % N, R), point_mul(-e * r_inv % N))
    if Q.is_identity:
        raise AuthorizationError("signature recovers to the point at infinity")
    return to_eth_address(Q)


def sign_registration(priv: int, scheme_id: int, meta_bytes: bytes, registrant: Optional[bytes] = None):
    """Registrant-side helper: sign consent for someone else to register ``meta_bytes``."""
    registrant = address_of(priv) if registrant is None else registrant
    return ecdsa_sign(priv, registration_digest(registrant, scheme_id, meta_bytes))


# Store


@dataclass(frozen=True)
class RegistryEvent:
    registrant: bytes
    scheme_id: int
    stealth_meta_address: bytes
    name: str = "StealthMetaAddressSet"

    def to_dict(self) -> dict:
        return {
            "event": self.name,
            "registrant": to_hex(self.registrant),
            "schemeId": self.scheme_id,
            "stealthMetaAddress": to_hex(self.stealth_meta_address),
        }


class Registry:
    """In-memory registry, snapshotted to a JSON file after every change when ``path`` is set."""

    def __init__(self, path: Union[str, os.PathLike, None] = None):
        self.path = Path(path) if path is not None else None
        self.entries: dict[tuple[bytes, int], bytes] = {}
        self.events: list[RegistryEvent] = []
        self._lock = threading.Lock()
        if self.path is not None and self.path.exists():
            self._load()

    def get_keys(self, registrant: bytes, scheme_id: int = 1) -> Optional[bytes]:
        return self.entries.get((bytes(registrant), scheme_id))

    def register_keys(self, caller: bytes, scheme_id: int, meta_bytes: bytes) -> RegistryEvent:
        if len(caller) != ADDRESS_LEN:
            raise LengthError("registrant must be a 20-byte address")
        validate_meta(scheme_id, meta_bytes)
        event = RegistryEvent(bytes(caller), scheme_id, bytes(meta_bytes))
        with self._lock:
            self.entries[(event.registrant, scheme_id)] = event.stealth_meta_address
            self.events.append(event)
            self._save()
        return event

    def register_keys_on_behalf(
        self,
        registrant: bytes,
        scheme_id: int,
        meta_bytes: bytes,
        signature: Union[RegistrationSignature, bytes],
    ) -> RegistryEvent:
        validate_meta(scheme_id, meta_bytes)
        if not isinstance(signature, RegistrationSignature):
            try:
                signature = RegistrationSignature.from_bytes(signature)
            except FormatError as exc:
                raise AuthorizationError(f"unreadable signature: {exc}") from exc
        signer = ecdsa_recover(registration_digest(registrant, scheme_id, meta_bytes), signature)
        if signer != bytes(registrant):
            raise AuthorizationError(f"signature is from {to_hex(signer)}, not {to_hex(registrant)}")
        return self.register_keys(registrant, scheme_id, meta_bytes)

    def to_dict(self) -> dict:
        return {
            "entries": [
                {"registrant": to_hex(reg), "schemeId": scheme, "stealthMetaAddress": to_hex(meta)}
                for (reg, scheme), meta in self.entries.items()
            ],
            "events": [e.to_dict() for e in self.events],
        }

    def _save(self) -> None:
        if self.path is None:
            return
        fd, tmp = tempfile.mkstemp(dir=self.path.parent or ".", prefix=".registry-")
        with os.fdopen(fd, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2)
            fh.write("\n")
        os.replace(tmp, self.path)

    def _load(self) -> None:
        try:
            doc = json.loads(self.path.read_text())
            for item in doc["entries"]:
                key = (from_hex(item["registrant"], ADDRESS_LEN), int(item["schemeId"]))
                meta = from_hex(item["stealthMetaAddress"])
                validate_meta(key[1], meta)
                self.entries[key] = meta
            for item in doc.get("events", []):
                self.events.append(
                    RegistryEvent(
                        from_hex(item["registrant"], ADDRESS_LEN),
                        int(item["schemeId"]),
                        from_hex(item["stealthMetaAddress"]),
                    )
                )
        except (KeyError, TypeError, ValueError) as exc:
            raise DataError(f"{self.path}: {exc}") from exc


def register_keys(store: Registry, caller, scheme_id, meta_bytes) -> RegistryEvent:
    return store.register_keys(caller, scheme_id, meta_bytes)


def register_keys_on_behalf(store: Registry, registrant, scheme_id, meta_bytes, sig) -> RegistryEvent:
    return store.register_keys_on_behalf(registrant, scheme_id, meta_bytes, sig)


def get_keys(store: Registry, registrant, scheme_id=1) -> Optional[bytes]:
    return store.get_keys(registrant, scheme_id)
