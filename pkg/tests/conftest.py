import random

import pytest
from hypothesis import strategies as st

from subcorpus.srt import Cue, SubtitleDocument

LINE_CHARS = st.characters(blacklist_categories=("Cs", "Cc", "Zl", "Zp"), blacklist_characters="﻿\x85")


def _valid_line(line):
    from subcorpus.srt import parse_timing

    return line.strip() != "" and parse_timing(line) is None


cue_lines = st.text(LINE_CHARS, min_size=1, max_size=40).filter(_valid_line)


@st.composite
def documents(draw, max_cues=12, max_ms=99 * 3_600_000):
    n = draw(st.integers(0, max_cues))
    cues = []
    for i in range(n):
        start = draw(st.integers(0, max_ms))
        end = draw(st.integers(start, min(start + 600_000, max_ms)))
        lines = draw(st.lists(cue_lines, min_size=1, max_size=3))
        cues.append(Cue(i + 1, start, end, "\n".join(lines)))
    return SubtitleDocument(draw(st.sampled_from(["en", "fa", "de"])), "tt0000001", tuple(cues))


def random_document(rng: random.Random, n: int, language="en", video_id="tt1", t0=None):
    """Movie-like timeline: increasing starts, 0.2-5 s gaps, 0.5-6 s durations."""
    t = rng.randint(0, 600_000) if t0 is None else t0
    cues = []
    for i in range(n):
        t += rng.randint(200, 5000)
        cues.append(Cue(i + 1, t, t + rng.randint(500, 6000), f"line {i}"))
    return SubtitleDocument(language, video_id, tuple(cues))


def corrupt(rng: random.Random, doc: SubtitleDocument, delete=0.2, insert=0.1, language="fa"):
    """Delete a fraction of cues and insert random extra ones."""
    n = len(doc.cues)
    keep = sorted(rng.sample(range(n), n - round(n * delete)))
    cues = [doc.cues[i] for i in keep]
    lo = doc.cues[0].start_ms if n else 0
    hi = doc.cues[-1].end_ms if n else 60_000
    for k in range(round(n * insert)):
        s = rng.randint(lo, hi)
        cues.append(Cue(n + k + 1, s, s + rng.randint(500, 6000), f"extra {k}"))
    return SubtitleDocument(language, doc.video_id, tuple(cues))


@pytest.fixture
def rng():
    return random.Random(20261018)


_acceptance: dict[int, list] = {}


def pytest_runtest_logreport(report):
    """Fold every test of one acceptance criterion into a single outcome."""
    if "test_acceptance.py::test_criterion_" not in report.nodeid:
        return
    name = report.nodeid.split("::test_criterion_")[1].split("[")[0]
    number, _, label = name.partition("_")
    entry = _acceptance.setdefault(int(number), [label.replace("_", " "), "PASS", ""])
    if report.failed:
        entry[1] = "FAIL"
    elif report.skipped and entry[1] != "FAIL":
        entry[1] = "SKIP"
        entry[2] = str(report.longrepr[2]) if isinstance(report.longrepr, tuple) else ""


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_acceptance):
        label, outcome, note = _acceptance[number]
        terminalreporter.write_line(f"{outcome}  criterion {number}: {label}" + (f" ({note})" if note else ""))
