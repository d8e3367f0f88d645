"""Command line driver: one subcommand per pipeline step plus ``run``."""

from __future__ import annotations

import argparse
import json
import logging
import random
import re
import sys
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import replace
from pathlib import Path

from .catalog import EmptyCatalogError, MovieRecord, apply_filter, filter_report, load_catalog
from .config import ConfigError, PipelineConfig, load_config
from .corpus import compute_stats, corpus_paths, emit_corpus, format_report, stats_json
from .dialogue import DialoguePair, pair_dialogues
from .provider import ProviderError, find_synchronized_pair, local_provider, remote_provider
from .sentence import SentencePair, match_sentences
from .srt import parse_srt, serialize_srt
from .store import Store, StoreError
from .sync import match_cues

log = logging.getLogger("subcorpus")

EXIT_OK, EXIT_PARTIAL, EXIT_USAGE = 0, 1, 2
LANG_RE = re.compile(r"^[a-z]{2}$")


class UsageError(Exception):
    pass


def _lang(value: str) -> str:
    if not LANG_RE.match(value):
        raise argparse.ArgumentTypeError(f"{value!r} is not an alpha-2 language code")
    return value


class Context:
    def __init__(self, args, config: PipelineConfig):
        self.args = args
        self.config = config
        self.src = args.src_lang
        self.dst = args.dst_lang
        self._store = None

    @property
    def store(self) -> Store:
        if self._store is None:
            self._store = Store(self.config.data_root, self.src, self.dst)
        return self._store

    def close(self):
        if self._store is not None:
            self._store.close()
            self._store = None

    def emit(self, human: str, summary: dict) -> None:
        if self.args.porcelain:
            print(json.dumps(summary, sort_keys=True, ensure_ascii=False))
        else:
            print(human)

    def catalog(self) -> list[MovieRecord]:
        return [MovieRecord.from_dict(p) for p in self.store.payloads("catalog")]


def cmd_init(ctx: Context) -> int:
    path = ctx.args.catalog or ctx.config.catalog_path
    if path is None:
        raise UsageError("init needs a catalog path (argument or [catalog] path in the config)")
    path = Path(path)
    if not path.is_file():
        raise UsageError(f"catalog file not found: {path}")
    cfg = ctx.config
    try:
        records, skipped = load_catalog(path, "csv", cfg.catalog_columns, cfg.catalog_duration_unit,
                                        cfg.genre_columns)
    except (EmptyCatalogError, ValueError, UnicodeDecodeError) as exc:
        raise UsageError(f"cannot load catalog {path}: {exc}") from exc
    with ctx.store.replace_stage("catalog") as writer:
        writer.extend(r.to_dict() for r in records)
    ctx.emit(f"stored {len(records)} catalog records ({skipped} rows skipped)",
             {"step": "init", "records": len(records), "skipped": skipped})
    return EXIT_OK


def cmd_filter(ctx: Context) -> int:
    report = filter_report(ctx.catalog(), ctx.config.filter)
    width = max(len(label) for label, _ in report)
    lines = [f"{'Filters'.ljust(width)}  Movies count"]
    lines += [f"{label.ljust(width)}  {count}" for label, count in report]
    ctx.emit("\n".join(lines), {"step": "filter", "stages": [{"label": l, "count": c} for l, c in report]})
    return EXIT_OK


def _provider(config: PipelineConfig):
    settings = dict(config.provider)
    kind = settings.pop("kind", "local" if "root" in settings else None)
    if kind == "local":
        if "root" not in settings:
            raise UsageError("[provider] kind = 'local' needs root")
        return local_provider(settings["root"])
    if kind == "remote":
        if "base_url" not in settings:
            raise UsageError("[provider] kind = 'remote' needs base_url")
        return remote_provider(settings.pop("base_url"), **settings)
    raise UsageError("no subtitle provider configured ([provider] section)")


def cmd_fetch(ctx: Context) -> int:
    cfg = ctx.config
    provider = _provider(cfg)
    videos = sorted(apply_filter(ctx.catalog(), cfg.filter), key=lambda r: r.id)
    done = {p["video_id"] for p in ctx.store.payloads("subtitle_pair")}
    todo = [v for v in videos if v.id not in done]
    if done:
        log.info("resuming: %d of %d videos already processed", len(videos) - len(todo), len(videos))

    def work(video):
        return find_synchronized_pair(video, ctx.src, ctx.dst, provider, cfg.sync, cfg.budget,
                                      cfg.shifting, cfg.fallback_encodings)

    failures = 0
    with ThreadPoolExecutor(max_workers=max(1, ctx.args.jobs)) as pool:
        futures = {pool.submit(work, v): v for v in todo}
        for future in as_completed(futures):
            video = futures[future]
            try:
                found = future.result()
            except (ProviderError, OSError) as exc:
                failures += 1
                log.error("%s: %s", video.id, exc)
                continue
            if found is None:
                payload = {"video_id": video.id, "status": "not_found"}
            else:
                v = found.verdict
                payload = {
                    "video_id": video.id,
                    "status": "found",
                    "source_candidate": found.source_candidate.provider_id,
                    "target_candidate": found.target_candidate.provider_id,
                    "matched_count": v.matched_count,
                    "match_fraction": v.match_fraction,
                    "applied_shift_ms": v.applied_shift_ms,
                    "source_srt": serialize_srt(found.source).decode("utf-8"),
                    "target_srt": serialize_srt(found.target).decode("utf-8"),
                }
            ctx.store.append("subtitle_pair", payload)
    ctx.store.flush()
    wanted = {v.id for v in videos}
    pairs = sum(1 for p in ctx.store.payloads("subtitle_pair")
                if p["status"] == "found" and p["video_id"] in wanted)
    ctx.emit(f"found {pairs} pairs of {len(videos)} videos" + (f" ({failures} failed)" if failures else ""),
             {"step": "fetch", "pairs": pairs, "videos": len(videos), "failed": failures})
    return EXIT_PARTIAL if failures else EXIT_OK


def cmd_dialogues(ctx: Context) -> int:
    cfg = ctx.config
    found = sorted((p for p in ctx.store.payloads("subtitle_pair") if p["status"] == "found"),
                   key=lambda p: p["video_id"])
    total = 0
    with ctx.store.replace_stage("dialogue") as writer:
        for payload in found:
            vid = payload["video_id"]
            a, _ = parse_srt(payload["source_srt"].encode("utf-8"), ctx.src, vid)
            b, _ = parse_srt(payload["target_srt"].encode("utf-8"), ctx.dst, vid)
            dialogues = pair_dialogues(a, b, match_cues(a, b, cfg.sync.tolerance_ms), cfg.cleaning)
            total += len(dialogues)
            writer.extend(d.to_dict() for d in dialogues)
    ctx.emit(f"stored {total} dialogue pairs from {len(found)} subtitle pairs",
             {"step": "dialogues", "dialogues": total, "subtitle_pairs": len(found)})
    return EXIT_OK


def cmd_match(ctx: Context) -> int:
    policy = ctx.config.split_policy(ctx.src, ctx.dst)
    dialogues = 0
    sentences = 0
    with ctx.store.replace_stage("sentence") as writer:
        for payload in ctx.store.payloads("dialogue"):
            dialogues += 1
            pairs = match_sentences(DialoguePair.from_dict(payload), policy)
            sentences += len(pairs)
            writer.extend(p.to_dict() for p in pairs)
    ctx.emit(f"stored {sentences} sentence pairs from {dialogues} dialogues",
             {"step": "match", "sentences": sentences, "dialogues": dialogues})
    return EXIT_OK


def _write_reports(ctx: Context, stats, out_dir: Path) -> str:
    report = filter_report(ctx.catalog(), ctx.config.filter)
    text = format_report(stats, report)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "stats.txt").write_text(text, encoding="utf-8")
    (out_dir / "stats.json").write_text(stats_json(stats, report), encoding="utf-8")
    return text


def cmd_generate(ctx: Context) -> int:
    cfg = ctx.config
    out_dir = cfg.output_dir(ctx.src, ctx.dst)
    out_src, out_dst = corpus_paths(out_dir, cfg.corpus_prefix, ctx.src, ctx.dst)
    pairs = (SentencePair.from_dict(p) for p in ctx.store.payloads("sentence"))
    emitted = emit_corpus(pairs, out_src, out_dst, dedup=cfg.dedup)
    stats = replace(compute_stats(ctx.store), dropped_in_final_clean=emitted.dropped_in_final_clean,
                    duplicates_removed=emitted.duplicates_removed)
    text = _write_reports(ctx, stats, out_dir)
    summary = {"step": "generate", "source_file": str(out_src), "target_file": str(out_dst), **stats.to_dict()}
    ctx.emit(f"wrote {stats.emitted_lines} lines to {out_src} and {out_dst}\n\n{text}", summary)
    return EXIT_OK


def cmd_stats(ctx: Context) -> int:
    stats = compute_stats(ctx.store)
    report = filter_report(ctx.catalog(), ctx.config.filter)
    ctx.emit(format_report(stats, report), json.loads(stats_json(stats, report)))
    return EXIT_OK


def cmd_run(ctx: Context) -> int:
    status = EXIT_OK
    for step in (cmd_init, cmd_filter, cmd_fetch, cmd_dialogues, cmd_match, cmd_generate):
        code = step(ctx)
        if code == EXIT_USAGE:
            return code
        status = max(status, code)
    return status


COMMANDS = {
    "init": (cmd_init, "load the movie catalog into the store"),
    "filter": (cmd_filter, "show how many videos survive each filter"),
    "fetch": (cmd_fetch, "find synchronized subtitle pairs for the filtered videos"),
    "dialogues": (cmd_dialogues, "extract cleaned dialogue pairs from subtitle pairs"),
    "match": (cmd_match, "derive sentence pairs from dialogue pairs"),
    "generate": (cmd_generate, "write the parallel corpus files and statistics"),
    "stats": (cmd_stats, "print corpus statistics"),
    "run": (cmd_run, "run every step in order"),
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="pipeline configuration file (TOML)")
    common.add_argument("--data-root", type=Path, help="directory holding the stage files")
    common.add_argument("--jobs", type=int, default=4, help="videos fetched concurrently (%(default)s)")
    common.add_argument("--seed", type=int, default=0, help="seed for randomized providers (%(default)s)")
    common.add_argument("--porcelain", action="store_true", help="machine-readable JSON summaries on stdout")
    common.add_argument("--sync-tolerance-ms", type=int)
    common.add_argument("--sync-min-fraction", type=float)
    common.add_argument("--max-shift-ms", type=int)
    common.add_argument("--shift-step-ms", type=int)
    common.add_argument("--no-shift", action="store_true", help="exact-timing matches only")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="subcorpus", description="Build parallel corpora from subtitle pairs.",
                                     parents=[common])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in COMMANDS.items():
        p = sub.add_parser(name, help=help_text, description=help_text, parents=[common])
        p.add_argument("src_lang", type=_lang, help="source alpha-2 code, e.g. en")
        p.add_argument("dst_lang", type=_lang, help="destination alpha-2 code, e.g. fa")
        if name in ("init", "run"):
            p.add_argument("catalog", nargs="?", type=Path, help="catalog CSV (overrides the config)")
    return parser


def _configure(args) -> PipelineConfig:
    if args.config is not None:
        if not args.config.is_file():
            raise UsageError(f"config file not found: {args.config}")
        cfg = load_config(args.config)
    else:
        cfg = PipelineConfig()
    if args.data_root is not None:
        cfg.data_root = args.data_root
    overrides = {
        "tolerance_ms": args.sync_tolerance_ms,
        "min_match_fraction": args.sync_min_fraction,
        "max_shift_ms": args.max_shift_ms,
        "shift_step_ms": args.shift_step_ms,
    }
    overrides = {k: v for k, v in overrides.items() if v is not None}
    if overrides:
        try:
            cfg.sync = replace(cfg.sync, **overrides)
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
    if args.no_shift:
        cfg.shifting = False
    return cfg


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    random.seed(args.seed)
    ctx = None
    try:
        config = _configure(args)
        if args.command == "run" and args.config is None:
            raise UsageError("run needs --config")
        ctx = Context(args, config)
        return COMMANDS[args.command][0](ctx)
    except (UsageError, ConfigError) as exc:
        parser.print_usage(sys.stderr)
        print(f"subcorpus: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except StoreError as exc:
        print(f"subcorpus: store error: {exc}", file=sys.stderr)
        return EXIT_PARTIAL
    finally:
        if ctx is not None:
            ctx.close()


if __name__ == "__main__":
    sys.exit(main())
