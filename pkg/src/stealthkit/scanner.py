"""Batch scanning of announcement logs, and the legacy vs. view-tag benchmark."""

from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

from .announcer import Announcement, AnnouncementLog, MetadataPayload
from .codec import compress, to_eth_address, to_hex
from .curve import FixedBaseTable, keccak256, point_add, point_mul, scalar_from_digest, scalar_random, seeded_entropy
from .errors import DegenerateSecretError, StealthKitError
from .sap import SCHEME_SECP256K1, DualKeys, Mode, OpCounter, ScanKeys, check_announcement

ZERO_ADDRESS = bytes(20)


@dataclass(frozen=True)
class ScanMatch:
    index: int
    stealth_address: bytes
    stealth_priv: Optional[int] = field(default=None, repr=False)

    def to_dict(self) -> dict:
        return {
            "index": self.index,
            "stealthAddress": to_hex(self.stealth_address),
            "hasStealthKey": self.stealth_priv is not None,
        }


@dataclass
class ScanReport:
    mode: Mode
    scanned: int = 0
    matches: list = field(default_factory=list)
    counters: OpCounter = field(default_factory=OpCounter)
    malformed: list = field(default_factory=list)
    foreign_scheme: int = 0
    next_index: int = 0
    wall_time: float = 0.0

    def to_dict(self) -> dict:
        return {
            "mode": self.mode.value,
            "scanned": self.scanned,
            "matches": [m.to_dict() for m in self.matches],
            "counters": self.counters.as_dict(),
            "malformed": [{"index": i, "reason": r} for i, r in self.malformed],
            "foreignScheme": self.foreign_scheme,
            "nextIndex": self.next_index,
            "wallTime": self.wall_time,
        }


def _scan_chunk(args) -> ScanReport:
    records, keys, mode = args
    report = ScanReport(mode)
    for ann in records:
        if ann.scheme_id != SCHEME_SECP256K1:
            report.foreign_scheme += 1
            continue
        # ops of a record that fails midway are discarded with it
        ops = OpCounter()
        try:
            result = check_announcement(keys, ann, mode, ops)
        except StealthKitError as exc:
            report.malformed.append((ann.index, str(exc)))
            continue
        report.scanned += 1
        report.counters.merge(ops)
        if result.matched:
            report.matches.append(ScanMatch(ann.index, result.stealth_address, result.stealth_priv))
    return report


def scan(
    log: Union[AnnouncementLog, Sequence[Announcement]],
    keys: Union[DualKeys, ScanKeys],
    mode: Union[Mode, str] = Mode.VIEWTAG,
    jobs: int = 1,
    start: int = 0,
) -> ScanReport:
    """Check every announcement from ``start`` onward against ``keys``.

    With ``jobs > 1`` the records are split into contiguous slices scanned in
    worker processes; results are merged back in index order.
    """
    mode = Mode(mode)
    if isinstance(keys, DualKeys):
        keys = keys.scan_keys()
    records = list(log)[start:]
    t0 = time.perf_counter()
    if jobs <= 1 or len(records) < 2:
        parts = [_scan_chunk((records, keys, mode))]
    else:
        size = -(-len(records) // jobs)
        chunks = [(records[i:i + size], keys, mode) for i in range(0, len(records), size)]
        with ProcessPoolExecutor(max_workers=len(chunks)) as pool:
            parts = list(pool.map(_scan_chunk, chunks))
    report = ScanReport(mode)
    for part in parts:
        report.scanned += part.scanned
        report.matches.extend(part.matches)
        report.counters.merge(part.counters)
        report.malformed.extend(part.malformed)
        report.foreign_scheme += part.foreign_scheme
    report.matches.sort(key=lambda m: m.index)
    report.malformed.sort()
    report.next_index = start + len(records)
    report.wall_time = time.perf_counter() - t0
    return report


def make_decoys(
    n: int,
    entropy: Callable[[int], bytes],
    recipient: Optional[DualKeys] = None,
    caller: bytes = ZERO_ADDRESS,
    first_index: int = 0,
) -> list[Announcement]:
    """Real announcements paying a throwaway recipient.

    The recipient's scanning key is fixed, so the sender-side ECDH uses a
    precomputed table; the resulting records are indistinguishable from
    ordinary payments.
    """
    recipient = recipient or DualKeys.generate(entropy)
    scan_table = FixedBaseTable(recipient.scanning.pub)
    out = []
    while len(out) < n:
        p = scalar_random(entropy)
        digest = keccak256(compress(scan_table.mul(p)))
        try:
            k_h = scalar_from_digest(digest)
        except DegenerateSecretError:
            continue
        stealth = point_add(point_mul(k_h), recipient.spending.pub)
        out.append(
            Announcement(
                first_index + len(out),
                SCHEME_SECP256K1,
                to_eth_address(stealth),
                caller,
                compress(point_mul(p)),
                MetadataPayload.ether(digest[0]).to_bytes(),
            )
        )
    return out


@dataclass(frozen=True)
class BenchResult:
    n_announcements: int
    legacy_seconds: float
    viewtag_seconds: float
    legacy_counters: OpCounter
    viewtag_counters: OpCounter

    @property
    def speedup_ratio(self) -> float:
        return self.legacy_seconds / self.viewtag_seconds

    @property
    def reduction_percent(self) -> float:
        return 100.0 * (1 - self.viewtag_seconds / self.legacy_seconds)

    def to_dict(self) -> dict:
        return {
            "nAnnouncements": self.n_announcements,
            "legacySeconds": self.legacy_seconds,
            "viewtagSeconds": self.viewtag_seconds,
            "speedupRatio": self.speedup_ratio,
            "reductionPercent": self.reduction_percent,
            "legacyCounters": self.legacy_counters.as_dict(),
            "viewtagCounters": self.viewtag_counters.as_dict(),
        }


def bench(n: int, seed: int = 0, decoys: Optional[list] = None) -> BenchResult:
    """Time legacy and view-tag scans over ``n`` non-matching announcements.

    Generation happens before the timed region; both scans are single-process.
    """
    if n < 1000:
        raise ValueError("bench needs at least 1000 announcements")
    entropy = seeded_entropy(seed)
    keys = DualKeys.generate(entropy).scan_keys()
    if decoys is None:
        decoys = make_decoys(n, entropy)
    decoys = decoys[:n]
    legacy = scan(decoys, keys, Mode.LEGACY)
    viewtag = scan(decoys, keys, Mode.VIEWTAG)
    if legacy.matches or viewtag.matches:
        raise AssertionError("benchmark decoys unexpectedly matched the scanning keys")
    return BenchResult(n, legacy.wall_time, viewtag.wall_time, legacy.counters, viewtag.counters)


__all__ = [
    "BenchResult",
    "ScanMatch",
    "ScanReport",
    "bench",
    "make_decoys",
    "scan",
]
