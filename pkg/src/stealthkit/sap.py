"""Stealth-address derivation: single-key and dual-key flows with view tags.

Sender side::

    k    = p * R_scan              (ECDH with the ephemeral key p)
    d    = keccak256(compress(k))
    tag  = d[0]
    k_h  = int(d) mod n
    R_st = k_h * G + R_spend

Recipient side recomputes ``k = r_scan * P`` and, when it holds the spending
key, gets the stealth private key ``r_spend + k_h``. The single-key flow is the
same with one key pair playing both roles.
"""

from __future__ import annotations

import enum
import secrets
from dataclasses import dataclass
from typing import Callable, Optional, Union

from .codec import StealthMetaAddress, compress, decompress, to_eth_address
from .curve import N, Point, keccak256, on_curve, point_add, point_mul, scalar_from_digest, scalar_random
from .errors import DataError, DegenerateSecretError, FormatError, OffCurveError

SCHEME_SECP256K1 = 1


@dataclass(frozen=True)
class KeyPair:
    priv: int
    pub: Point

    @classmethod
    def from_priv(cls, priv: int) -> KeyPair:
        if not 0 < priv < N:
            raise ValueError("private key must be in [1, n)")
        return cls(priv, point_mul(priv))

    @classmethod
    def generate(cls, entropy: Callable[[int], bytes] = secrets.token_bytes) -> KeyPair:
        return cls.from_priv(scalar_random(entropy))


@dataclass(frozen=True)
class ScanKeys:
    """What a scanner needs. Without ``spending_priv`` matches carry no stealth key."""

    scanning_priv: int
    spending_pub: Point
    spending_priv: Optional[int] = None

    @property
    def is_provider(self) -> bool:
        return self.spending_priv is None


@dataclass(frozen=True)
class DualKeys:
    spending: KeyPair
    scanning: KeyPair

    def __post_init__(self):
        if self.spending.priv == self.scanning.priv:
            raise FormatError("spending and scanning keys must differ")

    @classmethod
    def generate(cls, entropy: Callable[[int], bytes] = secrets.token_bytes) -> DualKeys:
        while True:
            spending, scanning = KeyPair.generate(entropy), KeyPair.generate(entropy)
            if spending.priv != scanning.priv:
                return cls(spending, scanning)

    @classmethod
    def from_privs(cls, spending_priv: int, scanning_priv: int) -> DualKeys:
        return cls(KeyPair.from_priv(spending_priv), KeyPair.from_priv(scanning_priv))

    def meta_address(self, chain_id=1) -> StealthMetaAddress:
        return StealthMetaAddress.from_points(chain_id, self.spending.pub, self.scanning.pub)

    def scan_keys(self, provider: bool = False) -> ScanKeys:
        return ScanKeys(
            self.scanning.priv,
            self.spending.pub,
            None if provider else self.spending.priv,
        )


@dataclass(frozen=True)
class StealthPayment:
    stealth_pub: Point
    stealth_address: bytes
    ephemeral_pub: bytes
    view_tag: int


class Mode(str, enum.Enum):
    LEGACY = "legacy"
    VIEWTAG = "viewtag"


class MatchStatus(str, enum.Enum):
    NO_MATCH_TAG = "no_match_tag"
    NO_MATCH_ADDR = "no_match_addr"
    MATCH = "match"


@dataclass(frozen=True)
class CheckResult:
    status: MatchStatus
    stealth_address: Optional[bytes] = None
    stealth_priv: Optional[int] = None

    @property
    def matched(self) -> bool:
        return self.status is MatchStatus.MATCH


@dataclass
class OpCounter:
    """Tally of the expensive operations performed while checking announcements."""

    ec_mul: int = 0
    ec_add: int = 0
    hash: int = 0
    tag_skips: int = 0
    full_derivations: int = 0

    def merge(self, other: OpCounter) -> None:
        self.ec_mul += other.ec_mul
        self.ec_add += other.ec_add
        self.hash += other.hash
        self.tag_skips += other.tag_skips
        self.full_derivations += other.full_derivations

    def as_dict(self) -> dict:
        return {
            "ec_mul": self.ec_mul,
            "ec_add": self.ec_add,
            "hash": self.hash,
            "tag_skips": self.tag_skips,
            "full_derivations": self.full_derivations,
        }


def _shared_digest(priv: int, other_pub: Point) -> bytes:
    if other_pub.is_identity or not on_curve(other_pub):
        raise OffCurveError("public key is not a valid curve point")
    k = point_mul(priv, other_pub)
    if k.is_identity:
        raise DegenerateSecretError("shared secret is the point at infinity")
    return keccak256(compress(k))


def shared_secret_scalar(priv: int, other_pub: Point) -> tuple[int, int]:
    """Return ``(k_h, view_tag)``; the tag is the first byte of the unreduced digest."""
    digest = _shared_digest(priv, other_pub)
    return scalar_from_digest(digest), digest[0]


def generate_isap(recipient_pub: Point, ephemeral: KeyPair) -> StealthPayment:
    k_h, tag = shared_secret_scalar(ephemeral.priv, recipient_pub)
    stealth_pub = point_add(point_mul(k_h), recipient_pub)
    return StealthPayment(stealth_pub, to_eth_address(stealth_pub), compress(ephemeral.pub), tag)


def derive_isap_priv(recipient: KeyPair, ephemeral_pub: Point) -> int:
    k_h, _ = shared_secret_scalar(recipient.priv, ephemeral_pub)
    return (k_h + recipient.priv) % N


def generate_dksap(meta: StealthMetaAddress, ephemeral: KeyPair) -> StealthPayment:
    spending_pub, scanning_pub = meta.points()
    k_h, tag = shared_secret_scalar(ephemeral.priv, scanning_pub)
    stealth_pub = point_add(point_mul(k_h), spending_pub)
    return StealthPayment(stealth_pub, to_eth_address(stealth_pub), compress(ephemeral.pub), tag)


def derive_dksap_priv(keys: DualKeys, ephemeral_pub: Point) -> int:
    k_h, _ = shared_secret_scalar(keys.scanning.priv, ephemeral_pub)
    return (keys.spending.priv + k_h) % N


def new_payment(
    meta: StealthMetaAddress,
    entropy: Callable[[int], bytes] = secrets.token_bytes,
    max_attempts: int = 8,
) -> StealthPayment:
    """Pay to ``meta`` with a fresh ephemeral key, re-rolling degenerate secrets."""
    for _ in range(max_attempts):
        try:
            return generate_dksap(meta, KeyPair.generate(entropy))
        except DegenerateSecretError:
            continue
    raise DegenerateSecretError(f"no usable ephemeral key after {max_attempts} attempts")


def check_announcement(
    keys: Union[DualKeys, ScanKeys],
    announcement,
    mode: Mode = Mode.VIEWTAG,
    counter: Optional[OpCounter] = None,
) -> CheckResult:
    """Decide whether ``announcement`` pays ``keys``.

    In view-tag mode a tag mismatch returns before any further curve work.
    Raises :class:`DataError` for announcements that cannot be parsed.
    """
    if isinstance(keys, DualKeys):
        keys = keys.scan_keys()
    mode = Mode(mode)
    if announcement.scheme_id != SCHEME_SECP256K1:
        raise DataError(f"unsupported scheme id {announcement.scheme_id}")
    if not announcement.metadata:
        raise DataError("metadata is empty; the view tag is missing")
    try:
        ephemeral = decompress(bytes(announcement.ephemeral_pub))
    except FormatError as exc:
        raise DataError(f"bad ephemeral key: {exc}") from exc
    tally = counter if counter is not None else OpCounter()

    digest = _shared_digest(keys.scanning_priv, ephemeral)
    tally.ec_mul += 1
    tally.hash += 1
    if mode is Mode.VIEWTAG and digest[0] != announcement.metadata[0]:
        tally.tag_skips += 1
        return CheckResult(MatchStatus.NO_MATCH_TAG)

    tally.full_derivations += 1
    k_h = scalar_from_digest(digest)
    stealth_pub = point_add(point_mul(k_h), keys.spending_pub)
    tally.ec_mul += 1
    tally.ec_add += 1
    address = to_eth_address(stealth_pub)
    tally.hash += 1
    if address != bytes(announcement.stealth_address):
        return CheckResult(MatchStatus.NO_MATCH_ADDR)
    priv = None if keys.spending_priv is None else (keys.spending_priv + k_h) % N
    return CheckResult(MatchStatus.MATCH, address, priv)


__all__ = [
    "CheckResult",
    "DualKeys",
    "KeyPair",
    "MatchStatus",
    "Mode",
    "OpCounter",
    "ScanKeys",
    "StealthPayment",
    "check_announcement",
    "derive_dksap_priv",
    "derive_isap_priv",
    "generate_dksap",
    "generate_isap",
    "new_payment",
    "shared_secret_scalar",
]
