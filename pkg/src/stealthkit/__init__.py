"""Dual-key stealth addresses on secp256k1 with view tags, plus the
announcement log, meta-address registry and anti-spam tooling around them."""

from .announcer import Announcement, AnnouncementLog, MetadataPayload
from .codec import StealthMetaAddress, compress, decode_meta, decompress, encode_meta, to_eth_address
from .curve import G, INFINITY, N, P, Point, keccak256, point_add, point_mul
from .registry import Registry, validate_meta
from .sap import (
    DualKeys,
    KeyPair,
    MatchStatus,
    Mode,
    ScanKeys,
    StealthPayment,
    check_announcement,
    derive_dksap_priv,
    generate_dksap,
    new_payment,
)
from .scanner import bench, scan

__version__ = "0.1.0"

__all__ = [
    "Announcement",
    "AnnouncementLog",
    "DualKeys",
    "G",
    "INFINITY",
    "KeyPair",
    "MatchStatus",
    "MetadataPayload",
    "Mode",
    "N",
    "P",
    "Point",
    "Registry",
    "ScanKeys",
    "StealthMetaAddress",
    "StealthPayment",
    "bench",
    "check_announcement",
    "compress",
    "decode_meta",
    "decompress",
    "derive_dksap_priv",
    "encode_meta",
    "generate_dksap",
    "keccak256",
    "new_payment",
    "point_add",
    "point_mul",
    "scan",
    "to_eth_address",
    "validate_meta",
]
