"""Movie catalog ingestion and attribute filters."""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from decimal import Decimal, InvalidOperation
from pathlib import Path
from typing import Mapping

log = logging.getLogger(__name__)

CANONICAL_FIELDS = ("id", "title", "year", "type", "imdbRating", "ratingCount", "duration")
DURATION_UNITS = {"seconds": 1, "minutes": 60, "hours": 3600}
YEAR_RANGE = (1870, 2100)

# Column names of the public Kaggle imdb dump (imdb.csv).
KAGGLE_COLUMNS = {
    "id": "tid",
    "title": "title",
    "year": "year",
    "type": "type",
    "imdbRating": "imdbRating",
    "ratingCount": "ratingCount",
    "duration": "duration",
}


class EmptyCatalogError(ValueError):
    pass


@dataclass(frozen=True)
class MovieRecord:
    """One catalog row. ``None`` marks an unknown attribute."""

    id: str
    title: str
    year: int | None = None
    media_type: str | None = None
    rating: Decimal | None = None
    rating_count: int | None = None
    duration: int | None = None
    genres: frozenset[str] = field(default_factory=frozenset)

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "title": self.title,
            "year": self.year,
            "media_type": self.media_type,
            "rating": None if self.rating is None else str(self.rating),
            "rating_count": self.rating_count,
            "duration": self.duration,
            "genres": sorted(self.genres),
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "MovieRecord":
        return cls(
            id=d["id"],
            title=d["title"],
            year=d.get("year"),
            media_type=d.get("media_type"),
            rating=None if d.get("rating") is None else Decimal(d["rating"]),
            rating_count=d.get("rating_count"),
            duration=d.get("duration"),
            genres=frozenset(d.get("genres", ())),
        )


@dataclass(frozen=True)
class FilterSpec:
    type_limit: str | None = None
    year_min: int | None = None
    rating_min: Decimal | None = None
    duration_min: int | None = None
    genre_any: frozenset[str] | None = None

    def __post_init__(self):
        if self.rating_min is not None and not isinstance(self.rating_min, Decimal):
            object.__setattr__(self, "rating_min", Decimal(str(self.rating_min)))
        if self.genre_any is not None:
            object.__setattr__(self, "genre_any", frozenset(self.genre_any))

    def stages(self):
        """Yield ``(label, predicate)`` for every present bound, in declaration order."""
        if self.type_limit is not None:
            t = self.type_limit
            yield f"type = {t}", lambda r: r.media_type == t
        if self.year_min is not None:
            y = self.year_min
            yield f"year >= {y}", lambda r: r.year is not None and r.year >= y
        if self.rating_min is not None:
            q = self.rating_min
            yield f"rating >= {q}", lambda r: r.rating is not None and r.rating >= q
        if self.duration_min is not None:
            s = self.duration_min
            yield f"duration >= {s}s", lambda r: r.duration is not None and r.duration >= s
        if self.genre_any is not None:
            g = self.genre_any
            yield "genre in {" + ", ".join(sorted(g)) + "}", lambda r: bool(r.genres & g)

    def __and__(self, other: "FilterSpec") -> "FilterSpec":
        """Conjunction of two specs, when it is expressible as one spec."""

        def tighter(x, y):
            if x is None:
                return y
            if y is None:
                return x
            return max(x, y)

        def same(x, y, name):
            if x is not None and y is not None and x != y:
                raise ValueError(f"cannot conjoin two different {name} bounds")
            return x if x is not None else y

        return FilterSpec(
            type_limit=same(self.type_limit, other.type_limit, "type"),
            year_min=tighter(self.year_min, other.year_min),
            rating_min=tighter(self.rating_min, other.rating_min),
            duration_min=tighter(self.duration_min, other.duration_min),
            genre_any=same(self.genre_any, other.genre_any, "genre"),
        )


def _text(row, column):
    if column is None or column not in row:
        return None
    value = (row[column] or "").strip()
    return value or None


def _int(value):
    if value is None:
        return None
    try:
        return int(Decimal(value))
    except (InvalidOperation, ValueError):
        return None


def load_catalog(
    path: str | Path,
    format: str = "csv",
    columns: Mapping[str, str] | None = None,
    duration_unit: str = "seconds",
    genre_columns: list[str] | None = None,
) -> tuple[list[MovieRecord], int]:
    """Read a delimited catalog; returns ``(records, skipped_rows)``.

    ``columns`` maps canonical field names to source headers. When
    ``genre_columns`` is omitted, every unmapped column holding only 0/1
    values is taken as a genre flag.
    """
    if format != "csv":
        raise ValueError(f"unsupported catalog format {format!r}")
    if duration_unit not in DURATION_UNITS:
        raise ValueError(f"duration_unit must be one of {sorted(DURATION_UNITS)}")
    mapping = {f: f for f in CANONICAL_FIELDS}
    mapping.update(columns or {})
    scale = DURATION_UNITS[duration_unit]

    with open(path, newline="", encoding="utf-8-sig") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        rows = list(reader)
    if header and (mapping["id"] not in header or mapping["title"] not in header):
        raise ValueError(f"catalog {path} lacks required columns {mapping['id']!r}, {mapping['title']!r}")

    if genre_columns is None:
        mapped = set(mapping.values())
        genre_columns = [
            h for h in header
            if h not in mapped and rows and all((r.get(h) or "").strip() in ("0", "1", "") for r in rows)
        ]

    records: list[MovieRecord] = []
    seen: set[str] = set()
    skipped = 0
    for row in rows:
        rid = _text(row, mapping["id"])
        title = _text(row, mapping["title"])
        if rid is None or title is None or rid in seen:
            skipped += 1
            continue
        seen.add(rid)
        year = _int(_text(row, mapping["year"]))
        if year is not None and not YEAR_RANGE[0] <= year <= YEAR_RANGE[1]:
            year = None
        rating = None
        raw = _text(row, mapping["imdbRating"])
        if raw is not None:
            try:
                rating = Decimal(raw)
            except InvalidOperation:
                rating = None
            if rating is not None and not 0 <= rating <= 10:
                rating = None
        count = _int(_text(row, mapping["ratingCount"]))
        if count is not None and count < 0:
            count = None
        duration = _int(_text(row, mapping["duration"]))
        duration = None if duration is None or duration < 0 else duration * scale
        genres = frozenset(g for g in genre_columns if (row.get(g) or "").strip() == "1")
        records.append(
            MovieRecord(
                id=rid,
                title=title,
                year=year,
                media_type=_text(row, mapping["type"]),
                rating=rating,
                rating_count=count,
                duration=duration,
                genres=genres,
            )
        )
    if rows and not records:
        raise EmptyCatalogError(f"no parseable rows in {path} ({skipped} skipped)")
    if skipped:
        log.info("catalog %s: skipped %d rows", path, skipped)
    return records, skipped


def apply_filter(records: list[MovieRecord], spec: FilterSpec) -> list[MovieRecord]:
    predicates = [p for _, p in spec.stages()]
    return [r for r in records if all(p(r) for p in predicates)]


def filter_report(records: list[MovieRecord], spec: FilterSpec) -> list[tuple[str, int]]:
    report = [("all", len(records))]
    current = records
    for label, predicate in spec.stages():
        current = [r for r in current if predicate(r)]
        report.append((label, len(current)))
    return report
