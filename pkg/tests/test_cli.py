import json
import os

import pytest

from stealthkit.cli import main
from stealthkit.errors import (
    AlreadyExistsError,
    AuthorizationError,
    GrammarError,
    LockedError,
    NotFoundError,
    OffCurveError,
    UnsupportedSchemeError,
)

SEED1_META = (
    "st:1:0x02d8798c7abf7fce8dd47d95b9a21b75b36f59858a3feae6db550a4942f6c95639"
    "028e4a88c369f78be3175d4850d27d329b14ed7f309add10cf54d86a175261c907"
)


@pytest.fixture
def env(tmp_path, monkeypatch):
    monkeypatch.delenv("STEALTHKIT_CONFIG", raising=False)
    base = [
        "--log", str(tmp_path / "ann.jsonl"),
        "--registry", str(tmp_path / "reg.json"),
        "--stakes", str(tmp_path / "stakes.json"),
    ]

    def run(*args):
        return main(base + [str(a) for a in args])

    run.tmp = tmp_path
    return run


def out_json(capsys):
    return json.loads(capsys.readouterr().out)


def test_keygen_seeded_meta(env, capsys):
    keyfile = env.tmp / "k.json"
    assert env("keygen", "--out", keyfile, "--seed", 1) == 0
    assert capsys.readouterr().out.strip() == SEED1_META
    assert os.stat(keyfile).st_mode & 0o777 == 0o600
    assert env("keygen", "--out", keyfile) == AlreadyExistsError.exit_code
    assert env("keygen", "--out", keyfile, "--force") == 0


def test_send_scan_round_trip(env, capsys):
    keyfile = env.tmp / "k.json"
    env("keygen", "--out", keyfile, "--seed", 2)
    meta = capsys.readouterr().out.strip()
    other = env.tmp / "other.json"
    env("keygen", "--out", other, "--seed", 3)
    other_meta = capsys.readouterr().out.strip()
    assert env("send", "--to", other_meta, "--seed", 10) == 0
    capsys.readouterr()
    assert env("send", "--to", meta, "--json", "--seed", 11) == 0
    sent = out_json(capsys)
    assert sent["index"] == 1
    for mode in ("legacy", "viewtag"):
        assert env("scan", "--keys", keyfile, "--mode", mode, "--json") == 0
        report = out_json(capsys)
        assert [m["index"] for m in report["matches"]] == [1]
        assert report["matches"][0]["stealthAddress"] == sent["stealthAddress"]
        assert report["nextIndex"] == 2
    assert env("scan", "--keys", keyfile, "--provider", "--from-index", 1) == 0
    assert "(no spending key)" in capsys.readouterr().out


def test_send_token_metadata(env, capsys):
    token = "0x" + "11" * 20
    assert env("send", "--to", SEED1_META, "--erc20", token, "--amount", 5, "--json") == 0
    meta = out_json(capsys)["metadata"]
    assert len(meta) == 2 + 2 * 57
    assert meta[4:12] == "a9059cbb"


def test_send_errors(env, capsys):
    assert env("send", "--to", "st:1:0xdead") == GrammarError.exit_code
    bad = SEED1_META[:-64] + (5).to_bytes(32, "big").hex()
    assert env("send", "--to", bad) == OffCurveError.exit_code
    assert env("send", "--to", SEED1_META, "--scheme", 2) == UnsupportedSchemeError.exit_code
    assert env("send", "--to", "0x" + "ab" * 20) == NotFoundError.exit_code


def test_register_resolve_and_send_by_address(env, capsys):
    caller = "0x" + "12" * 20
    assert env("resolve", "--registrant", caller) == NotFoundError.exit_code
    assert capsys.readouterr().out.strip() == "absent"
    assert env("register", "--caller", caller, "--meta", SEED1_META) == 0
    capsys.readouterr()
    assert env("resolve", "--registrant", caller) == 0
    assert capsys.readouterr().out.strip() == SEED1_META
    assert env("send", "--to", caller, "--json") == 0
    assert out_json(capsys)["index"] == 0


def test_register_on_behalf(env, capsys):
    keyfile = env.tmp / "signer.key"
    keyfile.write_text("0x" + "07" * 32 + "\n")
    assert env("sign-registration", "--key-file", keyfile, "--meta", SEED1_META, "--json") == 0
    signed = out_json(capsys)
    assert env(
        "register-on-behalf", "--registrant", signed["registrant"],
        "--signature", signed["signature"], "--meta", SEED1_META,
    ) == 0
    capsys.readouterr()
    other = "0x" + "34" * 20
    assert env(
        "register-on-behalf", "--registrant", other, "--signature", signed["signature"], "--meta", SEED1_META,
    ) == AuthorizationError.exit_code


def test_stake_lifecycle(env, capsys):
    user = "0x" + "56" * 20
    assert env("stake", "--user", user, "--amount", 10**18, "--now", 0) == 0
    assert env("withdraw", "--user", user, "--now", 10) == LockedError.exit_code
    assert env("unstake", "--user", user, "--now", 100) == 0
    assert env("withdraw", "--user", user, "--now", 100 + 86_399) == LockedError.exit_code
    assert env("withdraw", "--user", user, "--now", 100 + 86_400, "--json") == 0
    capsys.readouterr()
    assert env("unstake", "--user", user) == NotFoundError.exit_code


def test_prioritize_puts_staker_first(env, capsys):
    staker = "0x" + "aa" * 20
    for _ in range(3):
        env("send", "--to", SEED1_META, "--caller", "0x" + "bb" * 20)
    env("send", "--to", SEED1_META, "--caller", staker)
    env("stake", "--user", staker, "--amount", 1, "--now", 0)
    capsys.readouterr()
    assert env("prioritize", "--json") == 0
    rows = out_json(capsys)
    assert rows[0]["caller"] == staker
    assert [r["index"] for r in rows[1:]] == [0, 1, 2]


def test_toll_output(env, capsys):
    assert env("toll") == 0
    out = capsys.readouterr().out
    assert "0.0004 ETH" in out
    assert "80584" in out
    assert env("toll", "--c-hash", 0, "--json") == 0
    assert out_json(capsys)["eth"] == "0.0004"


def test_log_listing(env, capsys):
    for seed in (1, 2, 3):
        env("send", "--to", SEED1_META, "--seed", seed)
    capsys.readouterr()
    assert env("log", "--from", 1, "--to", 3) == 0
    lines = capsys.readouterr().out.splitlines()
    assert [json.loads(line)["index"] for line in lines] == [1, 2]
    assert env("log", "--from", 2, "--to", 9) == 9


def test_config_file(env, tmp_path, capsys, monkeypatch):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"cost": {"c_mul": 1000, "c_hash": 0}}))
    monkeypatch.setenv("STEALTHKIT_CONFIG", str(cfg))
    assert env("toll", "--json") == 0
    assert out_json(capsys)["gas"] == 1000


def test_usage_error_exit_code(env):
    with pytest.raises(SystemExit) as info:
        env("scan")
    assert info.value.code == 2
