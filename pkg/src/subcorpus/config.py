"""Pipeline configuration (TOML) and its mapping onto module policies."""

from __future__ import annotations

import sys
from dataclasses import dataclass, field
from decimal import Decimal
from pathlib import Path
from typing import Any

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .catalog import DURATION_UNITS, KAGGLE_COLUMNS, FilterSpec
from .dialogue import CleaningRules
from .sentence import SOURCE_TERMINATORS, TARGET_TERMINATORS, SplitPolicy
from .sync import SyncPolicy


class ConfigError(ValueError):
    pass


def load_toml(path: str | Path) -> dict:
    with open(path, "rb") as fh:
        return tomllib.load(fh)


def _known(section: dict, name: str, keys: set[str]) -> None:
    unknown = set(section) - keys
    if unknown:
        raise ConfigError(f"unknown keys in [{name}]: {', '.join(sorted(unknown))}")


@dataclass
class PipelineConfig:
    base_dir: Path = field(default_factory=Path.cwd)
    data_root: Path = Path("data")
    out_dir: Path | None = None
    catalog_path: Path | None = None
    catalog_columns: dict[str, str] = field(default_factory=lambda: dict(KAGGLE_COLUMNS))
    catalog_duration_unit: str = "seconds"
    genre_columns: list[str] | None = None
    filter: FilterSpec = field(default_factory=FilterSpec)
    sync: SyncPolicy = field(default_factory=SyncPolicy)
    shifting: bool = True
    budget: int = 16
    fallback_encodings: tuple[str, ...] = ()
    unequal_policy: str = "skip"
    abbreviations: frozenset[str] | None = None
    terminators: dict[str, str] = field(default_factory=dict)
    cleaning: CleaningRules = field(default_factory=CleaningRules.default)
    provider: dict[str, Any] = field(default_factory=dict)
    corpus_prefix: str = "corpus"
    dedup: bool = False

    def split_policy(self, src: str, dst: str) -> SplitPolicy:
        kwargs = {}
        if self.abbreviations is not None:
            kwargs["abbreviations"] = self.abbreviations
        return SplitPolicy(
            source_terminators=frozenset(self.terminators.get(src, "".join(SOURCE_TERMINATORS))),
            target_terminators=frozenset(self.terminators.get(dst, "".join(TARGET_TERMINATORS))),
            unequal_policy=self.unequal_policy,
            **kwargs,
        )

    def pair_dir(self, src: str, dst: str) -> Path:
        return self.data_root / f"{src}-{dst}"

    def output_dir(self, src: str, dst: str) -> Path:
        return self.out_dir if self.out_dir is not None else self.pair_dir(src, dst)


def _path(base: Path, value) -> Path:
    p = Path(value)
    return p if p.is_absolute() else base / p


def _filter(section: dict) -> FilterSpec:
    _known(section, "filter", {"type_limit", "year_min", "rating_min", "duration_min", "duration_unit", "genre_any"})
    duration = section.get("duration_min")
    if duration is not None:
        unit = section.get("duration_unit")
        if unit not in DURATION_UNITS:
            raise ConfigError(f"[filter] duration_min needs duration_unit, one of {sorted(DURATION_UNITS)}")
        duration = int(duration) * DURATION_UNITS[unit]
    rating = section.get("rating_min")
    genres = section.get("genre_any")
    return FilterSpec(
        type_limit=section.get("type_limit"),
        year_min=section.get("year_min"),
        rating_min=None if rating is None else Decimal(str(rating)),
        duration_min=duration,
        genre_any=None if genres is None else frozenset(genres),
    )


def config_from_dict(raw: dict, base_dir: Path | None = None) -> PipelineConfig:
    base = base_dir or Path.cwd()
    _known(raw, "top level", {"data_root", "out_dir", "catalog", "filter", "sync", "split", "cleaning",
                              "provider", "corpus"})
    cfg = PipelineConfig(base_dir=base)
    try:
        if "data_root" in raw:
            cfg.data_root = _path(base, raw["data_root"])
        if "out_dir" in raw:
            cfg.out_dir = _path(base, raw["out_dir"])

        catalog = raw.get("catalog", {})
        _known(catalog, "catalog", {"path", "columns", "duration_unit", "genre_columns"})
        if "path" in catalog:
            cfg.catalog_path = _path(base, catalog["path"])
        cfg.catalog_columns.update(catalog.get("columns", {}))
        cfg.catalog_duration_unit = catalog.get("duration_unit", cfg.catalog_duration_unit)
        cfg.genre_columns = catalog.get("genre_columns")

        cfg.filter = _filter(raw.get("filter", {}))

        sync = dict(raw.get("sync", {}))
        _known(sync, "sync", {"tolerance_ms", "min_match_fraction", "max_shift_ms", "shift_step_ms",
                              "exhaustive", "top_candidates", "shifting", "budget", "fallback_encodings"})
        cfg.shifting = bool(sync.pop("shifting", True))
        cfg.budget = int(sync.pop("budget", 16))
        cfg.fallback_encodings = tuple(sync.pop("fallback_encodings", ()))
        cfg.sync = SyncPolicy(**sync)

        split = raw.get("split", {})
        _known(split, "split", {"unequal_policy", "abbreviations", "terminators"})
        cfg.unequal_policy = split.get("unequal_policy", "skip")
        if "abbreviations" in split:
            cfg.abbreviations = frozenset(split["abbreviations"])
        cfg.terminators = dict(split.get("terminators", {}))

        cleaning = raw.get("cleaning", {})
        _known(cleaning, "cleaning", {"rules_file", "rule", "music_drop"})
        if "rules_file" in cleaning:
            cfg.cleaning = CleaningRules.from_file(_path(base, cleaning["rules_file"]))
        elif "rule" in cleaning:
            cfg.cleaning = CleaningRules.from_entries(cleaning["rule"])
        else:
            cfg.cleaning = CleaningRules.default(music_drop=bool(cleaning.get("music_drop", False)))

        provider = dict(raw.get("provider", {}))
        for key in ("root", "cache_root"):
            if key in provider:
                provider[key] = _path(base, provider[key])
        cfg.provider = provider

        corpus = raw.get("corpus", {})
        _known(corpus, "corpus", {"prefix", "dedup"})
        cfg.corpus_prefix = corpus.get("prefix", "corpus")
        cfg.dedup = bool(corpus.get("dedup", False))
        cfg.split_policy("xx", "yy")
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from exc
    return cfg


def load_config(path: str | Path) -> PipelineConfig:
    path = Path(path)
    try:
        raw = load_toml(path)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return config_from_dict(raw, path.resolve().parent)
