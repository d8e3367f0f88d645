"""Final cleaning, line-aligned corpus emission and statistics."""

from __future__ import annotations

import json
import os
import re
import tempfile
from dataclasses import dataclass, replace
from fractions import Fraction
from pathlib import Path
from typing import Iterable

from .sentence import SentencePair
from .store import Store

WS_RE = re.compile(r"\s+")


def _has_content(text: str) -> bool:
    return any(ch.isalnum() for ch in text)


def final_clean(pair: SentencePair) -> SentencePair | None:
    """Normalize both sides to one line; drop the pair if either side has no letter or digit."""
    source = WS_RE.sub(" ", pair.source_text).strip()
    target = WS_RE.sub(" ", pair.target_text).strip()
    if not _has_content(source) or not _has_content(target):
        return None
    if source == pair.source_text and target == pair.target_text:
        return pair
    return replace(pair, source_text=source, target_text=target)


def render_ratio(value: Fraction | None, places: int = 2) -> str:
    """Render a ratio truncated (not rounded) to ``places`` decimals."""
    if value is None:
        return "undefined"
    scale = 10 ** places
    scaled = abs(value.numerator) * scale // value.denominator
    sign = "-" if value < 0 and scaled else ""
    whole, frac = divmod(scaled, scale)
    if places == 0:
        return f"{sign}{whole}"
    return f"{sign}{whole}.{frac:0{places}d}"


@dataclass(frozen=True)
class CorpusStats:
    movies_considered: int = 0
    subtitle_pairs_found: int = 0
    dialogues_count: int = 0
    sentence_pairs_count: int = 0
    dropped_in_final_clean: int = 0
    duplicates_removed: int = 0

    @property
    def emitted_lines(self) -> int:
        return self.sentence_pairs_count - self.dropped_in_final_clean

    @staticmethod
    def _ratio(num: int, den: int) -> Fraction | None:
        return Fraction(num, den) if den else None

    @property
    def dialogues_per_movie(self) -> Fraction | None:
        return self._ratio(self.dialogues_count, self.subtitle_pairs_found)

    @property
    def sentences_per_movie(self) -> Fraction | None:
        return self._ratio(self.sentence_pairs_count, self.subtitle_pairs_found)

    @property
    def sentences_per_dialogue(self) -> Fraction | None:
        return self._ratio(self.sentence_pairs_count, self.dialogues_count)

    def to_dict(self) -> dict:
        return {
            "movies_considered": self.movies_considered,
            "subtitle_pairs_found": self.subtitle_pairs_found,
            "dialogues_count": self.dialogues_count,
            "sentence_pairs_count": self.sentence_pairs_count,
            "dropped_in_final_clean": self.dropped_in_final_clean,
            "duplicates_removed": self.duplicates_removed,
            "emitted_lines": self.emitted_lines,
            "dialogues_per_movie": render_ratio(self.dialogues_per_movie),
            "sentences_per_movie": render_ratio(self.sentences_per_movie),
            "sentences_per_dialogue": render_ratio(self.sentences_per_dialogue),
        }


def corpus_paths(out_dir: str | Path, prefix: str, src: str, dst: str) -> tuple[Path, Path]:
    out_dir = Path(out_dir)
    return out_dir / f"{prefix}.{src}", out_dir / f"{prefix}.{dst}"


def emit_corpus(
    pairs: Iterable[SentencePair],
    out_src: str | Path,
    out_dst: str | Path,
    dedup: bool = False,
) -> CorpusStats:
    """Write line i of ``out_src`` and ``out_dst`` from the i-th surviving pair.

    Both files are written to temporaries and renamed into place only when
    everything succeeded.
    """
    out_src, out_dst = Path(out_src), Path(out_dst)
    total = dropped = duplicates = 0
    seen: set[tuple[str, str]] = set()
    tmp_paths: list[Path] = []
    try:
        handles = []
        for target in (out_src, out_dst):
            target.parent.mkdir(parents=True, exist_ok=True)
            fd, tmp = tempfile.mkstemp(dir=target.parent, prefix=f".{target.name}.")
            tmp_paths.append(Path(tmp))
            handles.append(os.fdopen(fd, "w", encoding="utf-8", newline="\n"))
        src_fh, dst_fh = handles
        with src_fh, dst_fh:
            for pair in pairs:
                total += 1
                cleaned = final_clean(pair)
                if cleaned is None:
                    dropped += 1
                    continue
                if dedup:
                    key = (cleaned.source_text, cleaned.target_text)
                    if key in seen:
                        dropped += 1
                        duplicates += 1
                        continue
                    seen.add(key)
                src_fh.write(cleaned.source_text + "\n")
                dst_fh.write(cleaned.target_text + "\n")
        os.replace(tmp_paths[0], out_src)
        os.replace(tmp_paths[1], out_dst)
    except BaseException:
        for tmp in tmp_paths:
            tmp.unlink(missing_ok=True)
        raise
    return CorpusStats(sentence_pairs_count=total, dropped_in_final_clean=dropped, duplicates_removed=duplicates)


def compute_stats(store: Store) -> CorpusStats:
    videos = set()
    found = 0
    for payload in store.payloads("subtitle_pair"):
        videos.add(payload["video_id"])
        if payload.get("status") == "found":
            found += 1
    dialogues = store.count("dialogue")
    sentences = dropped = 0
    for payload in store.payloads("sentence"):
        sentences += 1
        if final_clean(SentencePair.from_dict(payload)) is None:
            dropped += 1
    return CorpusStats(
        movies_considered=len(videos),
        subtitle_pairs_found=found,
        dialogues_count=dialogues,
        sentence_pairs_count=sentences,
        dropped_in_final_clean=dropped,
    )


def _table(title: str, rows: list[tuple[str, str]]) -> list[str]:
    width = max(len(label) for label, _ in rows)
    vwidth = max(len(value) for _, value in rows)
    rule = "-" * (width + vwidth + 3)
    lines = [title, rule]
    lines += [f"{label.ljust(width)}   {value.rjust(vwidth)}" for label, value in rows]
    lines.append(rule)
    return lines


def format_report(stats: CorpusStats, filter_stages: list[tuple[str, int]] | None = None) -> str:
    """Plain-text tables laid out like the filter / pairs / dialogues / sentences summaries."""
    blocks = []
    if filter_stages:
        blocks.append(_table("Number of Filtered Movies", [("Filters", "Movies count")]
                             + [(label, str(n)) for label, n in filter_stages]))
    p, d, s = stats.subtitle_pairs_found, stats.dialogues_count, stats.sentence_pairs_count
    blocks.append(_table("Found Subtitle Pairs Stat", [
        ("movies considered", str(stats.movies_considered)),
        ("subtitle pairs count", str(p)),
    ]))
    blocks.append(_table("Found Dialogues Stat", [
        ("Synchronous Dialogues count", str(d)),
        ("avg dialogues count per movie", f"{d}/{p} ~ {render_ratio(stats.dialogues_per_movie)}"),
    ]))
    blocks.append(_table("Found Sentences Stat", [
        ("sentence pairs count", str(s)),
        ("Avg sentence pair per movie", f"{s}/{p} ~ {render_ratio(stats.sentences_per_movie)}"),
        ("Number of sentences per dialogue", f"{s}/{d} ~ {render_ratio(stats.sentences_per_dialogue)}"),
        ("dropped in final clean", str(stats.dropped_in_final_clean)),
        ("emitted lines", str(stats.emitted_lines)),
    ]))
    return "\n\n".join("\n".join(b) for b in blocks) + "\n"


def stats_json(stats: CorpusStats, filter_stages: list[tuple[str, int]] | None = None) -> str:
    doc = stats.to_dict()
    if filter_stages is not None:
        doc["filter_stages"] = [{"label": label, "count": n} for label, n in filter_stages]
    return json.dumps(doc, indent=2, ensure_ascii=False) + "\n"
