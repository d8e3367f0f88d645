"""SubRip parsing and serialization.

Timings are integer milliseconds throughout. The parser is lenient: a
malformed block is skipped and reported, never fatal for the whole file.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

LANG_RE = re.compile(r"^[a-z]{2}$")

TIMING_RE = re.compile(
    r"^\s*(\d+):(\d{1,2}):(\d{1,2})[,.](\d{1,3})"
    r"\s*-->\s*"
    r"(\d+):(\d{1,2}):(\d{1,2})[,.](\d{1,3})"
    r"(?:\s.*)?$"
)

SUPPORTED_FORMATS = ("srt",)


class SubtitleEncodingError(ValueError):
    """Raised when subtitle bytes cannot be decoded."""

    def __init__(self, offset: int, encoding: str = "utf-8"):
        super().__init__(f"cannot decode subtitle bytes as {encoding} at offset {offset}")
        self.offset = offset
        self.encoding = encoding


@dataclass(frozen=True)
class Cue:
    index: int
    start_ms: int
    end_ms: int
    text: str

    def sort_key(self) -> tuple[int, int, int]:
        return (self.start_ms, self.end_ms, self.index)


@dataclass(frozen=True)
class SubtitleDocument:
    language: str
    video_id: str
    cues: tuple[Cue, ...] = field(default_factory=tuple)

    def __post_init__(self):
        if not LANG_RE.match(self.language):
            raise ValueError(f"language must be a lowercase alpha-2 code, got {self.language!r}")
        cues = tuple(self.cues)
        if any(c.start_ms > c.end_ms or c.start_ms < 0 for c in cues):
            raise ValueError("cue timings must satisfy 0 <= start_ms <= end_ms")
        object.__setattr__(self, "cues", tuple(sorted(cues, key=Cue.sort_key)))

    def __len__(self) -> int:
        return len(self.cues)

    def timings(self) -> list[tuple[int, int]]:
        return [(c.start_ms, c.end_ms) for c in self.cues]


def format_timestamp(ms: int) -> str:
    hours, rest = divmod(ms, 3_600_000)
    minutes, rest = divmod(rest, 60_000)
    seconds, millis = divmod(rest, 1000)
    return f"{hours:02d}:{minutes:02d}:{seconds:02d},{millis:03d}"


def parse_timing(line: str) -> tuple[int, int] | None:
    """Parse a timing line into (start_ms, end_ms), or None if it is not one."""
    m = TIMING_RE.match(line)
    if m is None:
        return None
    g = m.groups()
    values = []
    for h, mi, s, frac in (g[0:4], g[4:8]):
        if int(mi) >= 60 or int(s) >= 60:
            return None
        # "1,5" means 500 ms, not 5 ms
        millis = int(frac.ljust(3, "0"))
        values.append(((int(h) * 60 + int(mi)) * 60 + int(s)) * 1000 + millis)
    return values[0], values[1]


def decode_subtitle(data: bytes, fallback_encodings: Sequence[str] = ()) -> str:
    try:
        return data.decode("utf-8-sig")
    except UnicodeDecodeError as exc:
        first_error = SubtitleEncodingError(exc.start)
    for encoding in fallback_encodings:
        try:
            return data.decode(encoding)
        except UnicodeDecodeError:
            continue
    raise first_error


def _split_blocks(lines: list[str]) -> Iterable[tuple[int, list[str]]]:
    """Group lines into blank-line separated blocks, yielding (first line number, lines)."""
    block: list[str] = []
    start = 0
    for number, line in enumerate(lines, 1):
        if line.strip():
            if not block:
                start = number
            block.append(line)
        elif block:
            yield from _split_glued(start, block)
            block = []
    if block:
        yield from _split_glued(start, block)


def _split_glued(start: int, block: list[str]) -> Iterable[tuple[int, list[str]]]:
    # Recover blocks written without a separating blank line.
    cut = 0
    for i in range(2, len(block) - 1):
        if block[i].strip().isdigit() and parse_timing(block[i + 1]) is not None:
            yield start + cut, block[cut:i]
            cut = i
    yield start + cut, block[cut:]


def parse_srt(
    data: bytes,
    language: str,
    video_id: str,
    fmt: str = "srt",
    fallback_encodings: Sequence[str] = (),
) -> tuple[SubtitleDocument, list[tuple[int, str]]]:
    """Parse SubRip bytes into a document plus (line number, message) diagnostics."""
    if fmt not in SUPPORTED_FORMATS:
        raise ValueError(f"unsupported subtitle format {fmt!r}")
    text = decode_subtitle(data, fallback_encodings)
    lines = text.replace("\r\n", "\n").replace("\r", "\n").split("\n")

    cues: list[Cue] = []
    diagnostics: list[tuple[int, str]] = []
    last_index = 0
    for lineno, block in _split_blocks(lines):
        head = block[0].strip()
        if head.isdigit():
            index = int(head)
            if index < 1:
                diagnostics.append((lineno, f"invalid block ordinal {head!r}"))
                continue
            body = block[1:]
            timing_lineno = lineno + 1
        elif parse_timing(block[0]) is not None:
            index = last_index + 1
            body = block
            timing_lineno = lineno
            diagnostics.append((lineno, "missing block ordinal"))
        else:
            diagnostics.append((lineno, f"expected block ordinal, got {head[:40]!r}"))
            continue
        if not body:
            diagnostics.append((lineno, "block has no timing line"))
            continue
        timing = parse_timing(body[0])
        if timing is None:
            diagnostics.append((timing_lineno, f"malformed timing line {body[0].strip()[:60]!r}"))
            continue
        start_ms, end_ms = timing
        if start_ms > end_ms:
            diagnostics.append((timing_lineno, "cue ends before it starts"))
            continue
        cue_text = "\n".join(body[1:])
        if not cue_text.strip():
            diagnostics.append((timing_lineno, "empty cue text"))
            continue
        cues.append(Cue(index, start_ms, end_ms, cue_text))
        last_index = index
    return SubtitleDocument(language, video_id, tuple(cues)), diagnostics


def serialize_srt(doc: SubtitleDocument) -> bytes:
    parts = []
    for number, cue in enumerate(doc.cues, 1):
        parts.append(
            f"{number}\n{format_timestamp(cue.start_ms)} --> {format_timestamp(cue.end_ms)}\n{cue.text}\n\n"
        )
    return "".join(parts).encode("utf-8")


def shift_document(doc: SubtitleDocument, delta_ms: int) -> tuple[SubtitleDocument, int]:
    """Add ``delta_ms`` to every cue; return the shifted document and how many cues were clamped at 0."""
    if delta_ms == 0:
        return doc, 0
    clamped = 0
    shifted = []
    for cue in doc.cues:
        start = cue.start_ms + delta_ms
        end = cue.end_ms + delta_ms
        if start < 0:
            clamped += 1
            start = 0
            end = max(end, 0)
        shifted.append(replace(cue, start_ms=start, end_ms=end))
    return replace(doc, cues=tuple(shifted)), clamped


def renumbered(doc: SubtitleDocument) -> SubtitleDocument:
    return replace(doc, cues=tuple(replace(c, index=i) for i, c in enumerate(doc.cues, 1)))
