"""Append-only, line-delimited stage files.

Layout: ``<data_root>/<src>-<dst>/<stage>.jsonl``. The first line is a
header ``{"schema": 1, "stage": ...}``; every following line is one JSON
record carrying a CRC32 of its own canonical encoding, so a torn or
garbage tail is detected and the stream stops at the last valid record.
"""

from __future__ import annotations

import fcntl
import json
import logging
import os
import uuid
import zlib
from contextlib import contextmanager
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Callable, Iterator

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1
STAGES = ("catalog", "subtitle_pair", "dialogue", "sentence")


class StoreError(RuntimeError):
    pass


class StoreLockedError(StoreError):
    pass


@dataclass(frozen=True)
class StageRecord:
    id: int
    stage: str
    run_id: str
    created_at: str
    payload: Any


def _canonical(obj) -> str:
    return json.dumps(obj, sort_keys=True, ensure_ascii=False, separators=(",", ":"))


def encode_record(record_id: int, stage: str, run_id: str, created_at: str, payload) -> bytes:
    body = _canonical(
        {"id": record_id, "stage": stage, "run_id": run_id, "created_at": created_at, "payload": payload}
    )
    crc = zlib.crc32(body.encode("utf-8"))
    return (body[:-1] + f',"crc":"{crc:08x}"}}\n').encode("utf-8")


_decode_json = json.JSONDecoder().decode
CRC_TAIL = len(',"crc":"00000000"}\n')


def decode_record(line: bytes) -> StageRecord | None:
    """Decode one full line (with its newline); None when it is torn or corrupt."""
    tail = line[-CRC_TAIL:]
    if len(line) <= CRC_TAIL or not (tail.startswith(b',"crc":"') and tail.endswith(b'"}\n')):
        return None
    body = line[:-CRC_TAIL] + b"}"
    if b"%08x" % zlib.crc32(body) != tail[8:16]:
        return None
    try:
        obj = _decode_json(body.decode("utf-8"))
        return StageRecord(obj["id"], obj["stage"], obj["run_id"], obj["created_at"], obj["payload"])
    except (ValueError, KeyError, TypeError):
        return None


def _header(stage: str) -> bytes:
    return (_canonical({"schema": SCHEMA_VERSION, "stage": stage}) + "\n").encode("utf-8")


def _check_stage(stage: str) -> None:
    if stage not in STAGES:
        raise ValueError(f"unknown stage {stage!r}; expected one of {STAGES}")


class Scan:
    """Iterable over the valid records of one stage file.

    After iteration ``truncated`` tells whether invalid bytes followed the
    last valid record, and ``valid_bytes`` where the valid prefix ends.
    """

    def __init__(self, path: Path, stage: str, predicate: Callable[[StageRecord], bool] | None = None):
        self.path = path
        self.stage = stage
        self.predicate = predicate
        self.truncated = False
        self.valid_bytes = 0

    def __iter__(self) -> Iterator[StageRecord]:
        self.truncated = False
        self.valid_bytes = 0
        if not self.path.exists():
            return
        with open(self.path, "rb") as fh:
            header = fh.readline()
            if not header:
                return
            try:
                meta = json.loads(header) if header.endswith(b"\n") else None
            except ValueError:
                meta = None
            if not isinstance(meta, dict) or meta.get("stage") != self.stage:
                self.truncated = True
                log.warning("%s: missing or invalid header", self.path)
                return
            if meta.get("schema") != SCHEMA_VERSION:
                raise StoreError(f"{self.path}: unsupported schema {meta.get('schema')!r}")
            offset = len(header)
            self.valid_bytes = offset
            last_id = 0
            for line in fh:
                record = decode_record(line)
                if record is None or record.stage != self.stage or record.id <= last_id:
                    self.truncated = True
                    log.warning("%s: stopped at invalid record at byte %d", self.path, offset)
                    return
                offset += len(line)
                self.valid_bytes = offset
                last_id = record.id
                if self.predicate is None or self.predicate(record):
                    yield record


class StageWriter:
    """Sequential appender for one stage file. Use through :class:`Store`."""

    def __init__(self, path: Path, stage: str, run_id: str, batch_size: int, next_id: int):
        self.path = path
        self.stage = stage
        self.run_id = run_id
        self.batch_size = batch_size
        self.next_id = next_id
        self.pending = 0
        self.fd = os.open(path, os.O_WRONLY | os.O_APPEND | os.O_CREAT, 0o644)

    def append(self, payload) -> int:
        record_id = self.next_id
        created_at = datetime.now(timezone.utc).isoformat(timespec="milliseconds")
        data = encode_record(record_id, self.stage, self.run_id, created_at, payload)
        view = memoryview(data)
        while view:
            written = os.write(self.fd, view)
            view = view[written:]
        self.next_id += 1
        self.pending += 1
        if self.pending >= self.batch_size:
            self.flush()
        return record_id

    def extend(self, payloads) -> int:
        """Append many payloads, one write per batch; returns the last id written."""
        chunk: list[bytes] = []
        created_at = datetime.now(timezone.utc).isoformat(timespec="milliseconds")
        for payload in payloads:
            chunk.append(encode_record(self.next_id, self.stage, self.run_id, created_at, payload))
            self.next_id += 1
            if len(chunk) >= self.batch_size:
                self._write_chunk(chunk)
                chunk = []
        if chunk:
            self._write_chunk(chunk)
        return self.next_id - 1

    def _write_chunk(self, chunk: list[bytes]) -> None:
        view = memoryview(b"".join(chunk))
        while view:
            written = os.write(self.fd, view)
            view = view[written:]
        self.pending += len(chunk)
        self.flush()

    def flush(self) -> None:
        if self.pending:
            os.fsync(self.fd)
            self.pending = 0

    def close(self) -> None:
        if self.fd >= 0:
            self.flush()
            os.close(self.fd)
            self.fd = -1


class Store:
    """Stage files for one language pair, guarded by a single-writer lock."""

    def __init__(self, data_root: str | Path, src: str, dst: str, batch_size: int = 256,
                 run_id: str | None = None, lock: bool = True):
        self.root = Path(data_root) / f"{src}-{dst}"
        self.root.mkdir(parents=True, exist_ok=True)
        self.batch_size = batch_size
        self.run_id = run_id or uuid.uuid4().hex
        self._writers: dict[str, StageWriter] = {}
        self._lock_fd = -1
        if lock:
            self._acquire_lock()

    def _acquire_lock(self) -> None:
        fd = os.open(self.root / ".lock", os.O_RDWR | os.O_CREAT, 0o644)
        try:
            fcntl.flock(fd, fcntl.LOCK_EX | fcntl.LOCK_NB)
        except BlockingIOError:
            os.close(fd)
            raise StoreLockedError(f"{self.root} is locked by another writer") from None
        os.ftruncate(fd, 0)
        os.write(fd, f"{os.getpid()}\n".encode())
        self._lock_fd = fd

    def path(self, stage: str) -> Path:
        _check_stage(stage)
        return self.root / f"{stage}.jsonl"

    def _writer(self, stage: str) -> StageWriter:
        writer = self._writers.get(stage)
        if writer is None:
            path = self.path(stage)
            scan = Scan(path, stage)
            last_id = 0
            for record in scan:
                last_id = record.id
            if scan.truncated or scan.valid_bytes == 0:
                # drop the torn tail so new records stay reachable
                with open(path, "ab") as fh:
                    fh.truncate(scan.valid_bytes)
                    if scan.valid_bytes == 0:
                        fh.write(_header(stage))
                    fh.flush()
                    os.fsync(fh.fileno())
                if scan.truncated:
                    log.warning("%s: truncated invalid tail at byte %d", path, scan.valid_bytes)
            writer = StageWriter(path, stage, self.run_id, self.batch_size, last_id + 1)
            self._writers[stage] = writer
        return writer

    def append(self, stage: str, payload) -> int:
        return self._writer(stage).append(payload)

    def extend(self, stage: str, payloads) -> int:
        return self._writer(stage).extend(payloads)

    def flush(self) -> None:
        for writer in self._writers.values():
            writer.flush()

    def scan(self, stage: str, predicate: Callable[[StageRecord], bool] | None = None) -> Scan:
        self.flush()
        return Scan(self.path(stage), stage, predicate)

    def count(self, stage: str) -> int:
        return sum(1 for _ in self.scan(stage))

    def payloads(self, stage: str) -> Iterator[Any]:
        for record in self.scan(stage):
            yield record.payload

    @contextmanager
    def replace_stage(self, stage: str):
        """Write a fresh stage file and swap it in atomically on success."""
        path = self.path(stage)
        old = self._writers.pop(stage, None)
        if old is not None:
            old.close()
        tmp = path.with_name(f".{stage}.{os.getpid()}.tmp")
        with open(tmp, "wb") as fh:
            fh.write(_header(stage))
        writer = StageWriter(tmp, stage, self.run_id, self.batch_size, 1)
        try:
            yield writer
            writer.close()
            os.replace(tmp, path)
            dir_fd = os.open(self.root, os.O_RDONLY)
            try:
                os.fsync(dir_fd)
            finally:
                os.close(dir_fd)
        except BaseException:
            writer.close()
            tmp.unlink(missing_ok=True)
            raise

    def close(self) -> None:
        for writer in self._writers.values():
            writer.close()
        self._writers.clear()
        if self._lock_fd >= 0:
            fcntl.flock(self._lock_fd, fcntl.LOCK_UN)
            os.close(self._lock_fd)
            self._lock_fd = -1

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
