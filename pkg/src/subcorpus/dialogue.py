"""Cue text cleaning and pairing of matched cues into dialogue pairs."""

from __future__ import annotations

import html
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

from .srt import SubtitleDocument

RULE_KINDS = (
    "tag-strip",
    "bracket-strip",
    "speaker-label",
    "dash-strip",
    "entity-decode",
    "music-drop",
    "custom-pattern",
)

TAG_RE = re.compile(r"<[^>\n]*(?:>|$)|\{[^}\n]*(?:\}|$)|[>}]", re.MULTILINE)
BRACKET_RES = (re.compile(r"\[[^\[\]\n]*\]"), re.compile(r"\([^()\n]*\)"))
SPEAKER_RE = re.compile(r"^([ \t\-–]*)[^\s:]{1,29}:[ \t]+(?=\S)", re.MULTILINE)
DASH_RE = re.compile(r"^[ \t]*[-–]+[ \t]*", re.MULTILINE)
ENTITY_RE = re.compile(r"&(?:amp|lt|gt|quot|apos|nbsp|#\d{1,7}|#[xX][0-9a-fA-F]{1,6});")
STRUCTURAL = str.maketrans("", "", "<>{}")
MUSIC_GLYPHS = "♪♫♬♩"
WS_RE = re.compile(r"\s+")

# a single pass may expose new matches (e.g. "&amp;lt;"); passes shrink text, so this is only a guard
MAX_PASSES = 16


@dataclass(frozen=True)
class Rule:
    kind: str
    params: Mapping[str, object] = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in RULE_KINDS:
            raise ValueError(f"unknown cleaning rule kind {self.kind!r}")
        if self.kind == "custom-pattern" and "pattern" not in self.params:
            raise ValueError("custom-pattern rule needs a 'pattern' parameter")


@dataclass(frozen=True)
class CleaningRules:
    rules: tuple[Rule, ...]

    @classmethod
    def default(cls, music_drop: bool = False) -> "CleaningRules":
        kinds = ["tag-strip", "bracket-strip", "speaker-label", "dash-strip", "entity-decode"]
        if music_drop:
            kinds.insert(0, "music-drop")
        return cls(tuple(Rule(k) for k in kinds))

    @classmethod
    def from_entries(cls, entries: Sequence[Mapping]) -> "CleaningRules":
        rules = []
        for entry in entries:
            entry = dict(entry)
            kind = entry.pop("kind")
            rules.append(Rule(kind, entry))
        return cls(tuple(rules))

    @classmethod
    def from_file(cls, path: str | Path) -> "CleaningRules":
        """Load a TOML file holding an ordered ``[[rule]]`` array."""
        from .config import load_toml

        return cls.from_entries(load_toml(path).get("rule", []))


def _decode_entities(text: str) -> str:
    def one(m):
        decoded = html.unescape(m.group(0))
        return "" if decoded in "<>{}" else decoded

    return ENTITY_RE.sub(one, text)


def _apply(rule: Rule, text: str) -> str:
    kind = rule.kind
    if kind == "tag-strip":
        return TAG_RE.sub("", text)
    if kind == "bracket-strip":
        for pattern in BRACKET_RES:
            text = pattern.sub("", text)
        return text
    if kind == "speaker-label":
        return SPEAKER_RE.sub(r"\1", text)
    if kind == "dash-strip":
        return DASH_RE.sub("", text)
    if kind == "entity-decode":
        return _decode_entities(text)
    if kind == "music-drop":
        glyphs = str(rule.params.get("glyphs", MUSIC_GLYPHS))
        return "\n".join(line for line in text.split("\n") if not any(g in line for g in glyphs))
    pattern = re.compile(str(rule.params["pattern"]), re.MULTILINE)
    return pattern.sub(str(rule.params.get("replacement", "")), text)


def _one_pass(text: str, rules: CleaningRules) -> str:
    text = text.replace("\r\n", "\n").replace("\r", "\n")
    for rule in rules.rules:
        text = _apply(rule, text)
    text = " ".join(line for line in text.split("\n") if line.strip())
    # structural characters may be re-created by custom rules
    return WS_RE.sub(" ", text.translate(STRUCTURAL)).strip()


def clean_dialogue(text: str, rules: CleaningRules | None = None) -> str:
    """Return cleaned single-line cue text; an empty string means the cue should be dropped."""
    rules = rules or DEFAULT_RULES
    for _ in range(MAX_PASSES):
        cleaned = _one_pass(text, rules)
        if cleaned == text:
            break
        text = cleaned
    return text


DEFAULT_RULES = CleaningRules.default()


@dataclass(frozen=True)
class DialoguePair:
    video_id: str
    start_ms: int
    end_ms: int
    source_text: str
    target_text: str
    source_lang: str
    target_lang: str

    def to_dict(self) -> dict:
        return {
            "video_id": self.video_id,
            "start_ms": self.start_ms,
            "end_ms": self.end_ms,
            "source_text": self.source_text,
            "target_text": self.target_text,
            "source_lang": self.source_lang,
            "target_lang": self.target_lang,
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "DialoguePair":
        return cls(**{k: d[k] for k in cls.__dataclass_fields__})


def pair_dialogues(
    a: SubtitleDocument,
    b: SubtitleDocument,
    matching: Sequence[tuple[int, int]],
    rules: CleaningRules | None = None,
) -> list[DialoguePair]:
    pairs = []
    for i, j in matching:
        src, dst = a.cues[i], b.cues[j]
        source_text = clean_dialogue(src.text, rules)
        target_text = clean_dialogue(dst.text, rules)
        if source_text and target_text:
            pairs.append(
                DialoguePair(a.video_id, src.start_ms, src.end_ms, source_text, target_text, a.language, b.language)
            )
    pairs.sort(key=lambda p: p.start_ms)
    return pairs
