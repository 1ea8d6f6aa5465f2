"""``stealthkit`` command line.

Settings come from built-in defaults, then a JSON config file (``--config`` or
the ``STEALTHKIT_CONFIG`` environment variable), then command-line flags.
"""

from __future__ import annotations

import argparse
import json
import os
import secrets
import sys
import time
from dataclasses import dataclass, field, replace
from decimal import Decimal
from fractions import Fraction
from pathlib import Path
from typing import Optional

from . import antispam, codec
from .announcer import AnnouncementLog, MetadataPayload
from .antispam import GasCostModel, PriorityWeights, StakeLedger
from .codec import StealthMetaAddress, decode_meta, from_hex, parse_address, to_hex
from .curve import N, point_mul, seeded_entropy
from .errors import AlreadyExistsError, FormatError, NotFoundError, StealthKitError, UnsupportedSchemeError
from .registry import Registry, RegistrationSignature, address_of, sign_registration
from .sap import SCHEME_SECP256K1, DualKeys, Mode, ScanKeys, new_payment
from .scanner import bench, scan

CONFIG_ENV = "STEALTHKIT_CONFIG"
SEED_HELP = "INSECURE: derive all randomness from this integer (tests only)"


@dataclass
class Config:
    log_path: Path = Path("announcements.jsonl")
    registry_path: Path = Path("registry.json")
    stake_path: Path = Path("stakes.json")
    chain_id: str = "1"
    weights: PriorityWeights = field(default_factory=PriorityWeights)
    cost: GasCostModel = field(default_factory=GasCostModel)

    @classmethod
    def load(cls, path: Optional[str]) -> Config:
        cfg = cls()
        path = path or os.environ.get(CONFIG_ENV)
        if not path:
            return cfg
        try:
            doc = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise FormatError(f"cannot read config {path}: {exc}") from exc
        for key in ("log_path", "registry_path", "stake_path"):
            if key in doc:
                setattr(cfg, key, Path(doc[key]))
        if "chain_id" in doc:
            cfg.chain_id = str(doc["chain_id"])
        w = doc.get("weights", {})
        cfg.weights = PriorityWeights(
            Fraction(str(w.get("w1", 1))),
            Fraction(str(w.get("w2", 1))),
            int(w.get("min_stake_value", cfg.weights.min_stake_value)),
            int(w.get("min_unstake_delay", cfg.weights.min_unstake_delay)),
        )
        c = doc.get("cost", {})
        cfg.cost = GasCostModel(
            int(c.get("c_mul", cfg.cost.c_mul)),
            int(c.get("c_hash", cfg.cost.c_hash)),
            int(c.get("c_add", cfg.cost.c_add)),
            Decimal(str(c.get("gas_price_gwei", cfg.cost.gas_price_gwei))),
            Decimal(str(c.get("eth_usd", cfg.cost.eth_usd))),
        )
        return cfg


def _emit(args, data: dict, text: str) -> None:
    if args.json:
        print(json.dumps(data, indent=2))
    else:
        print(text)


def _entropy(args):
    return seeded_entropy(args.seed) if args.seed is not None else secrets.token_bytes


def _now(args) -> int:
    return args.now if args.now is not None else int(time.time())


def _private_key(text: str) -> int:
    value = int.from_bytes(from_hex(text.strip(), 32), "big")
    if not 0 < value < N:
        raise FormatError("private key out of range")
    return value


def _load_keys(path: str, provider: bool) -> ScanKeys:
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise FormatError(f"cannot read key file {path}: {exc}") from exc
    if "scanningPrivateKey" not in doc:
        raise FormatError("key file has no scanningPrivateKey")
    scanning = _private_key(doc["scanningPrivateKey"])
    spending_priv = None
    if doc.get("spendingPrivateKey") and not provider:
        spending_priv = _private_key(doc["spendingPrivateKey"])
        spending_pub = point_mul(spending_priv)
    elif doc.get("spendingPublicKey"):
        spending_pub = codec.decompress(from_hex(doc["spendingPublicKey"], 33))
    elif doc.get("spendingPrivateKey"):
        spending_pub = point_mul(_private_key(doc["spendingPrivateKey"]))
    else:
        raise FormatError("key file has neither spending key")
    return ScanKeys(scanning, spending_pub, spending_priv)


def _write_private(path: Path, text: str, force: bool) -> None:
    if path.exists() and not force:
        raise AlreadyExistsError(f"{path} exists; pass --force to overwrite")
    fd = os.open(path, os.O_WRONLY | os.O_CREAT | os.O_TRUNC, 0o600)
    with os.fdopen(fd, "w") as fh:
        fh.write(text)
    os.chmod(path, 0o600)


def _resolve_recipient(target: str, cfg: Config, scheme: int) -> StealthMetaAddress:
    if target.startswith("st:"):
        return decode_meta(target)
    registrant = parse_address(target)
    meta_bytes = Registry(cfg.registry_path).get_keys(registrant, scheme)
    if meta_bytes is None:
        raise NotFoundError(f"{target} has no stealth meta-address for scheme {scheme}")
    return StealthMetaAddress.from_bytes(cfg.chain_id, meta_bytes)


def cmd_keygen(args, cfg: Config) -> int:
    keys = DualKeys.generate(_entropy(args))
    meta = keys.meta_address(args.chain_id or cfg.chain_id)
    doc = {
        "chainId": meta.chain_id,
        "spendingPrivateKey": to_hex(keys.spending.priv.to_bytes(32, "big")),
        "scanningPrivateKey": to_hex(keys.scanning.priv.to_bytes(32, "big")),
        "spendingPublicKey": to_hex(meta.spending_pub),
        "scanningPublicKey": to_hex(meta.scanning_pub),
        "stealthMetaAddress": str(meta),
    }
    _write_private(Path(args.out), json.dumps(doc, indent=2) + "\n", args.force)
    _emit(args, {"stealthMetaAddress": str(meta), "keyFile": args.out}, str(meta))
    return 0


def cmd_send(args, cfg: Config) -> int:
    if args.scheme != SCHEME_SECP256K1:
        raise UnsupportedSchemeError(f"only scheme {SCHEME_SECP256K1} (secp256k1) can derive payments")
    meta = _resolve_recipient(args.to, cfg, args.scheme)
    payment = new_payment(meta, _entropy(args))
    if args.erc20:
        payload = MetadataPayload.erc20(payment.view_tag, parse_address(args.erc20), args.amount)
    elif args.erc721:
        payload = MetadataPayload.erc721(payment.view_tag, parse_address(args.erc721), args.token_id)
    else:
        payload = MetadataPayload.ether(payment.view_tag)
    log = AnnouncementLog(cfg.log_path)
    record = log.announce(
        args.scheme,
        payment.stealth_address,
        payment.ephemeral_pub,
        payload.to_bytes(),
        caller=parse_address(args.caller),
    )
    data = {
        "index": record.index,
        "stealthAddress": to_hex(record.stealth_address),
        "ephemeralPubKey": to_hex(record.ephemeral_pub),
        "viewTag": payment.view_tag,
        "metadata": to_hex(record.metadata),
    }
    _emit(args, data, f"announcement #{record.index}: pay {to_hex(record.stealth_address)}")
    return 0


def cmd_scan(args, cfg: Config) -> int:
    keys = _load_keys(args.keys, args.provider)
    report = scan(AnnouncementLog(cfg.log_path), keys, args.mode, jobs=args.jobs, start=args.from_index)
    if args.json:
        print(json.dumps(report.to_dict(), indent=2))
        return 0
    c = report.counters
    print(f"mode {report.mode.value}: scanned {report.scanned}, {len(report.matches)} match(es), "
          f"{len(report.malformed)} malformed, {report.wall_time:.3f} s")
    print(f"ops: ecMUL {c.ec_mul}  ecADD {c.ec_add}  HASH {c.hash}  tag skips {c.tag_skips}")
    for m in report.matches:
        note = "" if m.stealth_priv is not None else "  (no spending key)"
        print(f"  #{m.index:<8} {to_hex(m.stealth_address)}{note}")
    for index, reason in report.malformed:
        print(f"  malformed #{index}: {reason}")
    print(f"next index: {report.next_index}")
    return 0


def _meta_bytes_from_args(args) -> bytes:
    if args.meta:
        return decode_meta(args.meta).to_bytes()
    if args.keys:
        doc = json.loads(Path(args.keys).read_text())
        return decode_meta(doc["stealthMetaAddress"]).to_bytes()
    raise FormatError("pass --meta or --keys")


def cmd_register(args, cfg: Config) -> int:
    event = Registry(cfg.registry_path).register_keys(parse_address(args.caller), args.scheme, _meta_bytes_from_args(args))
    _emit(args, event.to_dict(), f"registered {to_hex(event.registrant)} (scheme {event.scheme_id})")
    return 0


def cmd_sign_registration(args, cfg: Config) -> int:
    priv = _private_key(Path(args.key_file).read_text())
    meta = _meta_bytes_from_args(args)
    sig = sign_registration(priv, args.scheme, meta)
    data = {"registrant": to_hex(address_of(priv)), "signature": to_hex(sig.to_bytes())}
    _emit(args, data, f"{data['registrant']} {data['signature']}")
    return 0


def cmd_register_on_behalf(args, cfg: Config) -> int:
    sig = RegistrationSignature.from_bytes(from_hex(args.signature, 65))
    event = Registry(cfg.registry_path).register_keys_on_behalf(
        parse_address(args.registrant), args.scheme, _meta_bytes_from_args(args), sig
    )
    _emit(args, event.to_dict(), f"registered {to_hex(event.registrant)} (scheme {event.scheme_id})")
    return 0


def cmd_resolve(args, cfg: Config) -> int:
    meta = Registry(cfg.registry_path).get_keys(parse_address(args.registrant), args.scheme)
    if meta is None:
        _emit(args, {"registrant": args.registrant, "stealthMetaAddress": None}, "absent")
        return NotFoundError.exit_code
    text = str(StealthMetaAddress(cfg.chain_id, meta[:33], meta[33:])) if args.scheme == 1 else to_hex(meta)
    _emit(args, {"registrant": args.registrant, "stealthMetaAddress": text}, text)
    return 0


def _ledger(cfg: Config) -> StakeLedger:
    return antispam.load_ledger(cfg.stake_path, cfg.weights)


def cmd_stake(args, cfg: Config) -> int:
    rec = _ledger(cfg).stake(parse_address(args.user), args.amount, _now(args))
    _emit(args, rec.to_dict(), f"{to_hex(rec.user)} staked {rec.amount} wei")
    return 0


def cmd_unstake(args, cfg: Config) -> int:
    rec = _ledger(cfg).request_unstake(parse_address(args.user), _now(args))
    unlock = rec.unstake_requested_at + cfg.weights.min_unstake_delay
    _emit(args, rec.to_dict(), f"{to_hex(rec.user)} may withdraw at t={unlock}")
    return 0


def cmd_withdraw(args, cfg: Config) -> int:
    amount = _ledger(cfg).withdraw(parse_address(args.user), _now(args))
    _emit(args, {"user": args.user, "amount": str(amount)}, f"withdrew {amount} wei")
    return 0


def cmd_prioritize(args, cfg: Config) -> int:
    records = list(AnnouncementLog(cfg.log_path))
    ledger = _ledger(cfg)
    table = antispam.priority_table(ledger, cfg.weights, records)
    ordered = antispam.prioritize(ledger, cfg.weights, records)
    if args.json:
        rows = [{"index": a.index, "caller": to_hex(a.caller), "pf": str(table[a.caller])} for a in ordered]
        print(json.dumps(rows, indent=2))
        return 0
    for a in ordered[: args.limit] if args.limit else ordered:
        print(f"#{a.index:<8} {to_hex(a.caller)}  PF={float(table[a.caller]):.6g}")
    return 0


def cmd_bench(args, cfg: Config) -> int:
    result = bench(args.n, args.seed)
    text = (
        f"{result.n_announcements} announcements\n"
        f"legacy  : {result.legacy_seconds:8.3f} s  ({result.legacy_counters.ec_mul} ecMUL)\n"
        f"viewtag : {result.viewtag_seconds:8.3f} s  ({result.viewtag_counters.ec_mul} ecMUL)\n"
        f"speedup : {result.speedup_ratio:.2f}x  (reduction {result.reduction_percent:.2f}%)"
    )
    _emit(args, result.to_dict(), text)
    return 0


def cmd_toll(args, cfg: Config) -> int:
    overrides = {
        k: v
        for k, v in {
            "c_mul": args.c_mul,
            "c_hash": args.c_hash,
            "c_add": args.c_add,
            "gas_price_gwei": args.gas_price_gwei,
            "eth_usd": args.eth_usd,
        }.items()
        if v is not None
    }
    model = replace(cfg.cost, **overrides)
    est = antispam.toll(model)
    legacy = antispam.legacy_parse_cost(model)
    expected = antispam.viewtag_parse_cost(model)
    data = {**est.to_dict(), "legacyParseGas": legacy, "viewtagParseGas": float(expected)}
    text = (
        f"toll: {est.summary()}\n"
        f"parse cost per announcement: legacy {legacy} gas, view tag ~{float(expected):.1f} gas"
    )
    _emit(args, data, text)
    return 0


def cmd_log(args, cfg: Config) -> int:
    log = AnnouncementLog(cfg.log_path)
    stop = len(log) if args.to is None else args.to
    records = log.read_range(args.start, stop)
    if args.json:
        print(json.dumps([json.loads(r.to_json()) for r in records], indent=2))
        return 0
    for r in records:
        print(r.to_json())
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="stealthkit", description="Dual-key stealth addresses with view tags.")
    parser.add_argument("--config", help=f"JSON config file (default: ${CONFIG_ENV})")
    parser.add_argument("--log", dest="log_path", help="announcement log (JSON Lines)")
    parser.add_argument("--registry", dest="registry_path", help="registry snapshot file")
    parser.add_argument("--stakes", dest="stake_path", help="stake ledger file")
    sub = parser.add_subparsers(dest="command", required=True)

    def command(name, func, help_text):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--json", action="store_true", help="machine-readable output")
        p.set_defaults(func=func)
        return p

    p = command("keygen", cmd_keygen, "create spending and scanning keys")
    p.add_argument("--out", required=True)
    p.add_argument("--force", action="store_true")
    p.add_argument("--chain-id")
    p.add_argument("--seed", type=int, help=SEED_HELP)

    p = command("send", cmd_send, "derive a stealth address and announce it")
    p.add_argument("--to", required=True, help="st:<chain>:0x... or a registered 0x address")
    p.add_argument("--scheme", type=int, default=1)
    p.add_argument("--caller", default=to_hex(bytes(20)), help="announcing address")
    asset = p.add_mutually_exclusive_group()
    asset.add_argument("--erc20", metavar="TOKEN")
    asset.add_argument("--erc721", metavar="TOKEN")
    p.add_argument("--amount", type=int, default=0)
    p.add_argument("--token-id", type=int, default=0)
    p.add_argument("--seed", type=int, help=SEED_HELP)

    p = command("scan", cmd_scan, "find announcements paying these keys")
    p.add_argument("--keys", required=True)
    p.add_argument("--mode", choices=[m.value for m in Mode], default=Mode.VIEWTAG.value)
    p.add_argument("--provider", action="store_true", help="use only the scanning key")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--from-index", type=int, default=0)

    for name, func, text in (
        ("register", cmd_register, "register the caller's meta-address"),
        ("register-on-behalf", cmd_register_on_behalf, "register with the registrant's signature"),
        ("sign-registration", cmd_sign_registration, "sign consent for register-on-behalf"),
    ):
        p = command(name, func, text)
        p.add_argument("--meta", help="st:<chain>:0x...")
        p.add_argument("--keys", help="key file from keygen")
        p.add_argument("--scheme", type=int, default=1)
        if name == "register":
            p.add_argument("--caller", required=True)
        elif name == "register-on-behalf":
            p.add_argument("--registrant", required=True)
            p.add_argument("--signature", required=True)
        else:
            p.add_argument("--key-file", required=True, help="file holding the registrant's 0x private key")

    p = command("resolve", cmd_resolve, "look up a registered meta-address")
    p.add_argument("--registrant", required=True)
    p.add_argument("--scheme", type=int, default=1)

    for name, func in (("stake", cmd_stake), ("unstake", cmd_unstake), ("withdraw", cmd_withdraw)):
        p = command(name, func, f"{name} announcement collateral")
        p.add_argument("--user", required=True)
        p.add_argument("--now", type=int, help="clock override, unix seconds")
        if name == "stake":
            p.add_argument("--amount", type=int, required=True, help="wei")

    p = command("prioritize", cmd_prioritize, "order announcements by caller priority")
    p.add_argument("--limit", type=int)

    p = command("bench", cmd_bench, "legacy vs view-tag parsing time")
    p.add_argument("--n", type=int, default=80_000)
    p.add_argument("--seed", type=int, default=0)

    p = command("toll", cmd_toll, "toll and parsing cost estimates")
    p.add_argument("--c-mul", type=int)
    p.add_argument("--c-hash", type=int)
    p.add_argument("--c-add", type=int)
    p.add_argument("--gas-price-gwei", type=Decimal)
    p.add_argument("--eth-usd", type=Decimal)

    p = command("log", cmd_log, "print announcements")
    p.add_argument("--from", dest="start", type=int, default=0)
    p.add_argument("--to", type=int)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = Config.load(args.config)
        for key in ("log_path", "registry_path", "stake_path"):
            if getattr(args, key):
                setattr(cfg, key, Path(getattr(args, key)))
        return args.func(args, cfg)
    except StealthKitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
