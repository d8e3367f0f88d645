import os
import signal
import subprocess
import sys
import time
from pathlib import Path

import pytest

from subcorpus.store import Store, StoreLockedError, decode_record, encode_record

CHILD = Path(__file__).with_name("store_child.py")


@pytest.fixture
def store(tmp_path):
    s = Store(tmp_path, "en", "fa")
    yield s
    s.close()


def test_empty_store(store):
    assert list(store.scan("dialogue")) == []
    assert store.count("dialogue") == 0


def test_append_then_scan(store):
    rid = store.append("dialogue", {"a": "سلام", "n": 1})
    records = list(store.scan("dialogue"))
    assert [(r.id, r.payload) for r in records] == [(rid, {"a": "سلام", "n": 1})]


def test_ids_strictly_increase(store):
    assert store.append("catalog", {}) < store.append("catalog", {})


def test_count_after_appends(store):
    for i in range(7):
        store.append("sentence", {"i": i})
    assert store.count("sentence") == 7


def test_predicate_scan_keeps_order(store):
    store.extend("sentence", ({"i": i} for i in range(10_000)))
    evens = [r.payload["i"] for r in store.scan("sentence", lambda r: r.payload["i"] % 2 == 0)]
    assert evens == list(range(0, 10_000, 2))


def test_unknown_stage(store):
    with pytest.raises(ValueError):
        store.append("movies", {})


def test_layout_and_header(tmp_path, store):
    store.append("dialogue", {"x": 1})
    store.flush()
    path = tmp_path / "en-fa" / "dialogue.jsonl"
    first = path.read_text(encoding="utf-8").splitlines()[0]
    assert first == '{"schema":1,"stage":"dialogue"}'
    assert (tmp_path / "en-fa" / ".lock").exists()


def test_garbage_tail_truncates_stream(tmp_path):
    with Store(tmp_path, "en", "fa") as s:
        for i in range(5):
            s.append("dialogue", {"i": i})
    path = tmp_path / "en-fa" / "dialogue.jsonl"
    with open(path, "ab") as fh:
        fh.write(b'{"id": 6, "garbage\n\x00\x01 more')
    with Store(tmp_path, "en", "fa") as s:
        scan = s.scan("dialogue")
        assert [r.payload["i"] for r in scan] == [0, 1, 2, 3, 4]
        assert scan.truncated
        assert s.count("dialogue") == 5
        # a new writer drops the bad tail and keeps appending
        assert s.append("dialogue", {"i": 5}) == 6
        assert [r.payload["i"] for r in s.scan("dialogue")] == [0, 1, 2, 3, 4, 5]


def test_flipped_byte_detected():
    line = encode_record(1, "dialogue", "run", "t", {"text": "hello"})
    assert decode_record(line) is not None
    assert decode_record(line.replace(b"hello", b"hellp")) is None
    assert decode_record(line[:-1]) is None


def test_round_trip_payload_bytes(store):
    payload = {"s": "a\nb\t\"q\" ۔", "n": [1, 2.5, None]}
    store.append("sentence", payload)
    assert next(iter(store.scan("sentence"))).payload == payload


def test_single_writer_lock(tmp_path, store):
    with pytest.raises(StoreLockedError):
        Store(tmp_path, "en", "fa")
    Store(tmp_path, "en", "fa", lock=False).close()


def test_replace_stage(store):
    for i in range(3):
        store.append("dialogue", {"old": i})
    with store.replace_stage("dialogue") as w:
        w.append({"new": 1})
    assert [r.payload for r in store.scan("dialogue")] == [{"new": 1}]
    assert store.append("dialogue", {"new": 2}) == 2


def test_replace_stage_failure_keeps_old(store):
    store.append("dialogue", {"old": 1})
    with pytest.raises(RuntimeError):
        with store.replace_stage("dialogue") as w:
            w.append({"new": 1})
            raise RuntimeError("boom")
    assert [r.payload for r in store.scan("dialogue")] == [{"old": 1}]


def run_child(tmp_path, *args):
    env = dict(os.environ, PYTHONPATH=str(CHILD.parent) + os.pathsep + os.environ.get("PYTHONPATH", ""))
    return subprocess.Popen([sys.executable, str(CHILD), str(tmp_path), *args],
                            stdout=subprocess.PIPE, text=True, env=env)


def check_prefix(tmp_path, acked):
    with Store(tmp_path, "en", "fa") as s:
        got = [r.payload["k"] for r in s.scan("sentence")]
        assert got == list(range(1, len(got) + 1))
        assert acked <= len(got) <= acked + 1
        # store stays writable after the crash
        s.append("sentence", {"k": len(got) + 1})
        assert s.count("sentence") == len(got) + 1


@pytest.mark.parametrize("kill_after", [1, 37, 400])
def test_kill_during_appends(tmp_path, kill_after):
    child = run_child(tmp_path, "sigkill", "16")
    acked = 0
    for line in child.stdout:
        acked = int(line)
        if acked >= kill_after:
            child.send_signal(signal.SIGKILL)
            break
    child.wait()
    for line in child.stdout:
        acked = int(line)
    check_prefix(tmp_path, acked)


def test_torn_write(tmp_path):
    child = run_child(tmp_path, "torn")
    acked = [int(line) for line in child.stdout]
    child.wait()
    assert acked == [1, 2, 3, 4, 5]
    path = tmp_path / "en-fa" / "sentence.jsonl"
    assert not path.read_bytes().endswith(b"\n")
    with Store(tmp_path, "en", "fa") as s:
        scan = s.scan("sentence")
        assert [r.payload["k"] for r in scan] == [1, 2, 3, 4, 5]
        assert scan.truncated
