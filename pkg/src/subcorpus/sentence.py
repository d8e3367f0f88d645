"""Sentence splitting and the three-case dialogue-to-sentence pairing."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping

from .dialogue import DialoguePair

SOURCE_TERMINATORS = frozenset(".!?…")
TARGET_TERMINATORS = frozenset(".!?…؟۔")
ABBREVIATIONS = frozenset({"Mr", "Mrs", "Dr", "St", "vs", "etc"})
# closing marks that belong to the sentence they follow
CLOSERS = frozenset("\"'”’»)]")
UNEQUAL_POLICIES = ("skip", "prefix")


@dataclass(frozen=True)
class SplitPolicy:
    source_terminators: frozenset[str] = SOURCE_TERMINATORS
    target_terminators: frozenset[str] = TARGET_TERMINATORS
    unequal_policy: str = "skip"
    abbreviations: frozenset[str] = ABBREVIATIONS

    def __post_init__(self):
        for name in ("source_terminators", "target_terminators", "abbreviations"):
            object.__setattr__(self, name, frozenset(getattr(self, name)))
        if not self.source_terminators or not self.target_terminators:
            raise ValueError("terminator sets must be non-empty")
        if self.unequal_policy not in UNEQUAL_POLICIES:
            raise ValueError(f"unequal_policy must be one of {UNEQUAL_POLICIES}")


@dataclass(frozen=True)
class SentencePair:
    video_id: str
    source_text: str
    target_text: str
    origin: tuple[int, int] = (0, 0)

    def to_dict(self) -> dict:
        return {
            "video_id": self.video_id,
            "source_text": self.source_text,
            "target_text": self.target_text,
            "origin": list(self.origin),
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "SentencePair":
        return cls(d["video_id"], d["source_text"], d["target_text"], tuple(d.get("origin", (0, 0))))


def _initial_before_name(text: str, pos: int) -> bool:
    """True if a run of initials starting at ``pos`` ends in a word, as in "R. R. Tolkien"."""
    n = len(text)
    while True:
        while pos < n and text[pos].isspace():
            pos += 1
        k = pos
        while k < n and text[k].isalpha():
            k += 1
        if k - pos >= 2:
            return True
        if k - pos == 1 and k < n and text[k] == ".":
            pos = k + 1
            continue
        return False


def _guarded(text: str, dot: int, abbreviations: frozenset[str]) -> bool:
    """True if the '.' at ``dot`` ends an abbreviation or an initial rather than a sentence."""
    k = dot
    while k > 0 and text[k - 1].isalpha():
        k -= 1
    token = text[k:dot]
    if not token or (k > 0 and not (text[k - 1].isspace() or text[k - 1] in "(\"'")):
        return False
    if len(token) == 1:
        return _initial_before_name(text, dot + 1)
    folded = {a.casefold() for a in abbreviations}
    return token.casefold() in folded


def split_sentences(
    text: str,
    terminators: Iterable[str] = SOURCE_TERMINATORS,
    abbreviations: Iterable[str] = ABBREVIATIONS,
) -> list[str]:
    """Split after terminator runs that are followed by whitespace or the end of text."""
    terms = frozenset(terminators)
    abbrevs = frozenset(abbreviations)
    sentences = []
    start = 0
    i = 0
    n = len(text)
    while i < n:
        if text[i] not in terms:
            i += 1
            continue
        run_start = i
        while i < n and text[i] in terms:
            i += 1
        while i < n and text[i] in CLOSERS:
            i += 1
        if i < n and not text[i].isspace():
            continue
        if i - run_start == 1 and text[run_start] == "." and _guarded(text, run_start, abbrevs):
            continue
        piece = text[start:i].strip()
        if piece:
            sentences.append(piece)
        start = i
    tail = text[start:].strip()
    if tail:
        sentences.append(tail)
    return sentences


def match_sentences(pair: DialoguePair, policy: SplitPolicy = SplitPolicy()) -> list[SentencePair]:
    source = split_sentences(pair.source_text, policy.source_terminators, policy.abbreviations)
    target = split_sentences(pair.target_text, policy.target_terminators, policy.abbreviations)
    if len(source) != len(target):
        if policy.unequal_policy == "skip":
            return []
        k = min(len(source), len(target))
        source, target = source[:k], target[:k]
    return [
        SentencePair(pair.video_id, s, t, (pair.start_ms, ordinal))
        for ordinal, (s, t) in enumerate(zip(source, target))
    ]
