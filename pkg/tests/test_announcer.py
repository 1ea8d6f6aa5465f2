import json
import os

import pytest
from hypothesis import given, settings, strategies as st

import oracle
from stealthkit.announcer import (
    ERC20_TRANSFER,
    ERC721_TRANSFER_FROM,
    Announcement,
    AnnouncementLog,
    AssetKind,
    MetadataPayload,
    announce,
    read_range,
)
from stealthkit.codec import compress
from stealthkit.curve import G
from stealthkit.errors import AppendError, DataError, FormatError, LengthError, RangeError

ADDR = bytes(range(20))
CALLER = bytes([0xAA] * 20)
EPH = compress(G)


def test_method_ids_are_selector_hashes():
    assert ERC20_TRANSFER == oracle.keccak256(b"transfer(address,uint256)")[:4]
    assert ERC721_TRANSFER_FROM == oracle.keccak256(b"transferFrom(address,address,uint256)")[:4]


def test_metadata_layouts():
    assert MetadataPayload.ether(0x7F).to_bytes() == b"\x7f"
    token = bytes([0x11] * 20)
    blob = MetadataPayload.erc20(1, token, 10**18).to_bytes()
    assert len(blob) == 57
    assert blob[1:5] == ERC20_TRANSFER
    assert blob[5:25] == token
    assert int.from_bytes(blob[25:], "big") == 10**18
    parsed = MetadataPayload.from_bytes(MetadataPayload.erc721(2, token, 42).to_bytes())
    assert parsed.kind is AssetKind.ERC721 and parsed.value == 42


@settings(max_examples=100)
@given(
    st.integers(0, 255),
    st.sampled_from(["ether", "erc20", "erc721"]),
    st.binary(min_size=20, max_size=20),
    st.integers(0, 2**256 - 1),
)
def test_metadata_round_trip(tag, kind, token, value):
    payload = {
        "ether": lambda: MetadataPayload.ether(tag),
        "erc20": lambda: MetadataPayload.erc20(tag, token, value),
        "erc721": lambda: MetadataPayload.erc721(tag, token, value),
    }[kind]()
    assert MetadataPayload.from_bytes(payload.to_bytes()) == payload


def test_metadata_errors():
    with pytest.raises(FormatError):
        MetadataPayload.ether(256).to_bytes()
    with pytest.raises(LengthError):
        MetadataPayload.from_bytes(b"\x01\x02")
    with pytest.raises(LengthError):
        MetadataPayload.erc20(1, b"\x00", 1).to_bytes()


def test_json_field_order_is_fixed():
    ann = Announcement(0, 1, ADDR, CALLER, EPH, b"\x05")
    line = ann.to_json()
    assert line == (
        '{"index":0,"schemeId":1,"stealthAddress":"0x' + ADDR.hex() + '","caller":"0x' + CALLER.hex()
        + '","ephemeralPubKey":"0x' + EPH.hex() + '","metadata":"0x05"}'
    )
    assert Announcement.from_json(line) == ann
    assert ann.view_tag == 5


@settings(max_examples=100)
@given(
    st.integers(0, 10**9),
    st.integers(0, 2**32),
    st.binary(min_size=20, max_size=20),
    st.binary(min_size=20, max_size=20),
    st.binary(min_size=33, max_size=33),
    st.binary(min_size=1, max_size=80),
)
def test_json_round_trip_bit_exact(index, scheme, stealth, caller, eph, meta):
    ann = Announcement(index, scheme, stealth, caller, eph, meta)
    line = ann.to_json()
    assert Announcement.from_json(line).to_json() == line


@pytest.mark.parametrize(
    "line",
    [
        "not json",
        "[]",
        '{"index":0}',
        json.dumps({"schemeId": 1, "index": 0, "stealthAddress": "0x", "caller": "0x",
                    "ephemeralPubKey": "0x", "metadata": "0x"}),
        '{"index":-1,"schemeId":1,"stealthAddress":"0x' + "00" * 20 + '","caller":"0x' + "00" * 20
        + '","ephemeralPubKey":"0x00","metadata":"0x00"}',
        '{"index":0,"schemeId":1,"stealthAddress":"0x00","caller":"0x' + "00" * 20
        + '","ephemeralPubKey":"0x00","metadata":"0x00"}',
    ],
)
def test_from_json_rejects(line):
    with pytest.raises(DataError):
        Announcement.from_json(line)


def test_announce_assigns_sequential_indices():
    log = AnnouncementLog()
    for i in range(5):
        ann = announce(log, 1, ADDR, CALLER, EPH, bytes([i]))
        assert ann.index == i
        assert ann.caller == CALLER
    assert len(log) == 5
    assert [a.index for a in read_range(log, 1, 4)] == [1, 2, 3]
    assert read_range(log, 5, 5) == []
    with pytest.raises(RangeError):
        log.read_range(3, 2)
    with pytest.raises(RangeError):
        log.read_range(0, 6)


def test_announce_validates_inputs():
    log = AnnouncementLog()
    with pytest.raises(FormatError):
        log.announce(1, ADDR, EPH, b"", caller=CALLER)
    with pytest.raises(LengthError):
        log.announce(1, ADDR, EPH[:-1], b"\x01", caller=CALLER)
    with pytest.raises(LengthError):
        log.announce(1, ADDR[:-1], EPH, b"\x01", caller=CALLER)
    assert len(log) == 0


def test_log_persists_and_reloads(tmp_path):
    path = tmp_path / "ann.jsonl"
    log = AnnouncementLog(path, fsync=False)
    written = [log.announce(1, ADDR, EPH, bytes([i]), caller=CALLER) for i in range(3)]
    again = AnnouncementLog(path)
    assert list(again) == written
    log.announce(7, ADDR, EPH, b"\x09", caller=CALLER)
    again.reload()
    assert len(again) == 4 and again.read_range(3, 4)[0].scheme_id == 7
    assert path.read_text().count("\n") == 4


def test_corrupted_line_reports_line_number(tmp_path):
    path = tmp_path / "ann.jsonl"
    log = AnnouncementLog(path, fsync=False)
    for i in range(3):
        log.announce(1, ADDR, EPH, bytes([i]), caller=CALLER)
    lines = path.read_text().splitlines()
    lines[1] = lines[1][:-5]
    path.write_text("\n".join(lines) + "\n")
    with pytest.raises(DataError) as info:
        AnnouncementLog(path)
    assert info.value.line == 2
    assert "line 2" in str(info.value)


def test_out_of_sequence_and_blank_lines(tmp_path):
    path = tmp_path / "ann.jsonl"
    path.write_text(Announcement(1, 1, ADDR, CALLER, EPH, b"\x00").to_json() + "\n")
    with pytest.raises(DataError):
        AnnouncementLog(path)
    path.write_text(Announcement(0, 1, ADDR, CALLER, EPH, b"\x00").to_json() + "\n\n")
    with pytest.raises(DataError) as info:
        AnnouncementLog(path)
    assert info.value.line == 2


def test_failed_append_leaves_log_unchanged(tmp_path, monkeypatch):
    path = tmp_path / "ann.jsonl"
    log = AnnouncementLog(path)
    log.announce(1, ADDR, EPH, b"\x01", caller=CALLER)
    before = path.read_bytes()

    def boom(fd):
        raise OSError("disk full")

    monkeypatch.setattr(os, "fsync", boom)
    with pytest.raises(AppendError):
        log.announce(1, ADDR, EPH, b"\x02", caller=CALLER)
    assert path.read_bytes() == before
    assert len(log) == 1
    assert len(AnnouncementLog(path)) == 1
