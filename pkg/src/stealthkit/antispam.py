"""Spam economics for announcements: toll estimates, gas figures and stake-based ordering.

Priority of a user ``u`` with deposit ``D(u)`` and ``n(u)`` announcements::

    PF(u) = w1 * min(D(u), MIN_STAKE_VALUE) + w2 * 1 / n(u)

The two terms have different units (wei vs. a pure number); they are combined
literally, and operators rescale through the weights or MIN_STAKE_VALUE.
"""

from __future__ import annotations

import json
import os
import threading
from collections import Counter
from dataclasses import dataclass, field
from decimal import Decimal
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Optional, Sequence, Union

from .codec import ADDRESS_LEN, from_hex, to_hex
from .errors import DataError, FormatError, LockedError, NotFoundError, UndefinedPriorityError

GWEI_PER_ETH = Decimal(10**9)
WEI_PER_ETH = 10**18
ONE_DAY = 86_400

# Measured gas for one announce() call, keyed by (asset kind, ephemeral key compressed).
ANNOUNCE_GAS = {
    ("erc20", False): 35_492,
    ("ether", False): 34_057,
    ("erc20", True): 35_064,
    ("ether", True): 33_629,
}


@dataclass(frozen=True)
class GasCostModel:
    c_mul: int = 40_000
    c_hash: int = 42
    c_add: int = 500
    gas_price_gwei: Decimal = Decimal(10)
    eth_usd: Decimal = Decimal(2000)

    def __post_init__(self):
        for name in ("c_mul", "c_hash", "c_add", "gas_price_gwei", "eth_usd"):
            if getattr(self, name) < 0:
                raise FormatError(f"{name} must be non-negative")
        object.__setattr__(self, "gas_price_gwei", Decimal(str(self.gas_price_gwei)))
        object.__setattr__(self, "eth_usd", Decimal(str(self.eth_usd)))

    def gas_to_eth(self, gas) -> Decimal:
        return Decimal(gas) * self.gas_price_gwei / GWEI_PER_ETH


@dataclass(frozen=True)
class TollEstimate:
    gas: int
    eth: Decimal
    usd: Decimal

    def summary(self) -> str:
        approx = self.eth.quantize(Decimal("0.0001")).normalize()
        return f"{self.gas} gas = {self.eth.normalize():f} ETH (~{approx:f} ETH, {self.usd:.2f} USD)"

    def to_dict(self) -> dict:
        return {"gas": self.gas, "eth": str(self.eth.normalize()), "usd": str(self.usd.normalize())}


def toll(model: GasCostModel = GasCostModel()) -> TollEstimate:
    """Smallest toll covering one ecMUL plus one hash, the work every recipient does."""
    gas = model.c_mul + model.c_hash
    eth = model.gas_to_eth(gas)
    return TollEstimate(gas, eth, eth * model.eth_usd)


def legacy_parse_cost(model: GasCostModel = GasCostModel()) -> int:
    return 2 * (model.c_mul + model.c_hash) + model.c_add


def viewtag_parse_cost(model: GasCostModel = GasCostModel()) -> Fraction:
    """Expected per-announcement cost with a one-byte tag (full derivation 1/256 of the time)."""
    rest = model.c_mul + model.c_hash + model.c_add
    return model.c_mul + model.c_hash + Fraction(rest, 256)


def announce_gas_estimate(kind: str, compressed: bool) -> int:
    kind = "erc20" if kind in ("erc20", "erc721") else kind
    try:
        return ANNOUNCE_GAS[(kind, bool(compressed))]
    except KeyError:
        raise FormatError(f"unknown asset kind {kind!r}") from None


def compression_savings(kind: str) -> float:
    """Fractional gas saved by announcing a compressed ephemeral key."""
    return 1 - announce_gas_estimate(kind, True) / announce_gas_estimate(kind, False)


# Staking


@dataclass(frozen=True)
class PriorityWeights:
    w1: Fraction = Fraction(1)
    w2: Fraction = Fraction(1)
    min_stake_value: int = WEI_PER_ETH
    min_unstake_delay: int = ONE_DAY

    def __post_init__(self):
        object.__setattr__(self, "w1", Fraction(str(self.w1)))
        object.__setattr__(self, "w2", Fraction(str(self.w2)))
        if self.w1 < 0 or self.w2 < 0 or self.min_stake_value < 0 or self.min_unstake_delay < 0:
            raise FormatError("weights and minimums must be non-negative")


@dataclass
class StakeRecord:
    user: bytes
    amount: int
    staked_at: int
    unstake_requested_at: Optional[int] = None

    @property
    def active(self) -> bool:
        return self.unstake_requested_at is None

    def to_dict(self) -> dict:
        return {
            "user": to_hex(self.user),
            "amount": str(self.amount),
            "stakedAt": self.staked_at,
            "unstakeRequestedAt": self.unstake_requested_at,
        }


@dataclass
class StakeLedger:
    """Locked deposits per user. Time is passed in as integer seconds."""

    path: Optional[Path] = None
    min_unstake_delay: int = ONE_DAY
    records: dict = field(default_factory=dict)

    def __post_init__(self):
        self._lock = threading.Lock()
        if self.path is not None:
            self.path = Path(self.path)
            if self.path.exists():
                self._load()

    def stake(self, user: bytes, amount: int, now: int) -> StakeRecord:
        """Add to the user's deposit. Staking again cancels a pending unstake request."""
        if amount <= 0:
            raise FormatError("stake amount must be positive")
        if len(user) != ADDRESS_LEN:
            raise FormatError("user must be a 20-byte address")
        with self._lock:
            rec = self.records.get(bytes(user))
            if rec is None:
                rec = self.records[bytes(user)] = StakeRecord(bytes(user), 0, now)
            rec.amount += amount
            rec.unstake_requested_at = None
            self._save()
            return rec

    def request_unstake(self, user: bytes, now: int) -> StakeRecord:
        with self._lock:
            rec = self._get(user)
            if rec.unstake_requested_at is None:
                rec.unstake_requested_at = now
            self._save()
            return rec

    def withdraw(self, user: bytes, now: int) -> int:
        with self._lock:
            rec = self._get(user)
            if rec.unstake_requested_at is None:
                raise LockedError("no unstake request pending")
            unlock_at = rec.unstake_requested_at + self.min_unstake_delay
            if now < unlock_at:
                raise LockedError(f"stake locked for another {unlock_at - now} s")
            del self.records[rec.user]
            self._save()
            return rec.amount

    def deposit(self, user: bytes) -> int:
        """D(u): stake that still counts, i.e. not scheduled for withdrawal."""
        rec = self.records.get(bytes(user))
        return rec.amount if rec is not None and rec.active else 0

    def _get(self, user: bytes) -> StakeRecord:
        try:
            return self.records[bytes(user)]
        except KeyError:
            raise NotFoundError(f"no stake for {to_hex(user)}") from None

    def _save(self) -> None:
        if self.path is None:
            return
        doc = {"records": [r.to_dict() for r in self.records.values()]}
        tmp = self.path.with_name(self.path.name + ".tmp")
        tmp.write_text(json.dumps(doc, indent=2) + "\n")
        os.replace(tmp, self.path)

    def _load(self) -> None:
        try:
            doc = json.loads(self.path.read_text())
            for item in doc["records"]:
                rec = StakeRecord(
                    from_hex(item["user"], ADDRESS_LEN),
                    int(item["amount"]),
                    int(item["stakedAt"]),
                    item.get("unstakeRequestedAt"),
                )
                self.records[rec.user] = rec
        except (KeyError, TypeError, ValueError) as exc:
            raise DataError(f"{self.path}: {exc}") from exc


def stake(ledger: StakeLedger, user, amount, now):
    return ledger.stake(user, amount, now)


def request_unstake(ledger: StakeLedger, user, now):
    return ledger.request_unstake(user, now)


def withdraw(ledger: StakeLedger, user, now):
    return ledger.withdraw(user, now)


def _pf(deposit: int, count: int, weights: PriorityWeights) -> Fraction:
    return weights.w1 * min(deposit, weights.min_stake_value) + weights.w2 * Fraction(1, count)


def priority_factor(
    ledger: StakeLedger,
    weights: PriorityWeights,
    announcements: Iterable,
    user: bytes,
) -> Fraction:
    count = sum(1 for a in announcements if a.caller == bytes(user))
    if not count:
        raise UndefinedPriorityError(f"{to_hex(user)} has no announcements")
    return _pf(ledger.deposit(user), count, weights)


def priority_table(ledger: StakeLedger, weights: PriorityWeights, announcements: Sequence) -> dict:
    counts = Counter(a.caller for a in announcements)
    return {user: _pf(ledger.deposit(user), n, weights) for user, n in counts.items()}


def prioritize(ledger: StakeLedger, weights: PriorityWeights, announcements: Sequence) -> list:
    """Stable sort by the caller's PF, highest first. Nothing is dropped."""
    table = priority_table(ledger, weights, announcements)
    return sorted(announcements, key=lambda a: table[a.caller], reverse=True)


def load_ledger(path: Union[str, os.PathLike, None], weights: PriorityWeights = PriorityWeights()) -> StakeLedger:
    return StakeLedger(Path(path) if path is not None else None, weights.min_unstake_delay)
