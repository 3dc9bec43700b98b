"""Append-only record store: framing, replay, torn-tail recovery."""

from __future__ import annotations

import struct
import threading
import zlib

from meshgrade.store import RecordStore


def test_append_and_replay(tmp_path):
    path = tmp_path / "records.log"
    store = RecordStore(path)
    store.append({"n": 1})
    store.append({"n": 2, "payload": "x" * 100})
    store.close()

    reopened = RecordStore(path)
    assert reopened.records() == [{"n": 1}, {"n": 2, "payload": "x" * 100}]
    reopened.close()


def test_truncated_tail_dropped(tmp_path):
    path = tmp_path / "records.log"
    store = RecordStore(path)
    store.append({"n": 1})
    store.append({"n": 2})
    store.close()

    blob = path.read_bytes()
    path.write_bytes(blob[:-3])  # tear the last frame

    reopened = RecordStore(path)
    assert reopened.records() == [{"n": 1}]
    # New appends land after the truncated tail and survive replay.
    reopened.append({"n": 3})
    reopened.close()
    final = RecordStore(path)
    assert final.records() == [{"n": 1}, {"n": 3}]
    final.close()


def test_corrupt_crc_stops_replay(tmp_path):
    path = tmp_path / "records.log"
    store = RecordStore(path)
    store.append({"n": 1})
    store.append({"n": 2})
    store.close()

    blob = bytearray(path.read_bytes())
    # Flip one byte inside the second record's payload.
    first_len = struct.unpack(">I", blob[:4])[0]
    second_payload_start = 4 + first_len + 4 + 4
    blob[second_payload_start + 2] ^= 0xFF
    path.write_bytes(bytes(blob))

    reopened = RecordStore(path)
    assert reopened.records() == [{"n": 1}]
    reopened.close()


def test_frame_layout_checksummed(tmp_path):
    path = tmp_path / "records.log"
    store = RecordStore(path)
    store.append({"k": "v"})
    store.close()
    blob = path.read_bytes()
    (length,) = struct.unpack(">I", blob[:4])
    payload = blob[4 : 4 + length]
    (crc,) = struct.unpack(">I", blob[4 + length : 8 + length])
    assert zlib.crc32(payload) == crc


def test_concurrent_appends_all_durable(tmp_path):
    path = tmp_path / "records.log"
    store = RecordStore(path)

    def writer(k: int) -> None:
        for i in range(20):
            store.append({"writer": k, "i": i})

    threads = [threading.Thread(target=writer, args=(k,)) for k in range(4)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    store.close()

    reopened = RecordStore(path)
    records = reopened.records()
    assert len(records) == 80
    per_writer = {k: [r["i"] for r in records if r["writer"] == k] for k in range(4)}
    for seq in per_writer.values():
        assert seq == sorted(seq)  # per-writer order preserved
    reopened.close()
