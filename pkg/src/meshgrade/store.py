"""Append-only record store with crash-safe framing.

Each record is a JSON document framed as:

    [4-byte big-endian payload length][payload][4-byte big-endian CRC32]

Appends are serialized through a single writer and flushed to disk before
they are acknowledged, so a crash between appends loses at most the
record that was in flight. On open, the log is replayed up to the last
intact frame and any torn tail is truncated away.
"""

from __future__ import annotations

import json
import os
import struct
import threading
import zlib
from pathlib import Path

__all__ = ["RecordStore"]

_HEADER = struct.Struct(">I")
_TRAILER = struct.Struct(">I")


class RecordStore:
    """Durable append-only list of JSON records backed by a single file."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._lock = threading.Lock()
        self._records: list[dict] = []
        self.path.parent.mkdir(parents=True, exist_ok=True)
        valid_bytes = self._replay()
        self._fh = open(self.path, "ab")
        if self._fh.tell() > valid_bytes:
            # Torn tail from an interrupted append: drop it so new frames
            # start at a clean boundary.
            self._fh.truncate(valid_bytes)
            self._fh.seek(valid_bytes)

    def _replay(self) -> int:
        """Load every intact record; return the byte offset of the last
        intact frame end."""
        if not self.path.exists():
            return 0
        data = self.path.read_bytes()
        offset = 0
        while offset + _HEADER.size <= len(data):
            (length,) = _HEADER.unpack_from(data, offset)
            end = offset + _HEADER.size + length + _TRAILER.size
            if end > len(data):
                break
            payload = data[offset + _HEADER.size : offset + _HEADER.size + length]
            (crc,) = _TRAILER.unpack_from(data, end - _TRAILER.size)
            if zlib.crc32(payload) != crc:
                break
            try:
                self._records.append(json.loads(payload.decode("utf-8")))
            except (UnicodeDecodeError, json.JSONDecodeError):
                break
            offset = end
        return offset

    def append(self, record: dict) -> None:
        """Write one record; returns only after the bytes are on disk."""
        payload = json.dumps(record).encode("utf-8")
        frame = _HEADER.pack(len(payload)) + payload + _TRAILER.pack(zlib.crc32(payload))
        with self._lock:
            self._fh.write(frame)
            self._fh.flush()
            os.fsync(self._fh.fileno())
            self._records.append(record)

    def records(self) -> list[dict]:
        """Consistent snapshot of all records visible right now."""
        with self._lock:
            return list(self._records)

    def __len__(self) -> int:
        with self._lock:
            return len(self._records)

    def close(self) -> None:
        with self._lock:
            self._fh.close()
