"""Parallel corpus generation from movie subtitle pairs."""

from ._kernels import IMPLEMENTATION as KERNELS
from .catalog import FilterSpec, MovieRecord, apply_filter, filter_report, load_catalog
from .corpus import CorpusStats, compute_stats, emit_corpus, final_clean
from .dialogue import CleaningRules, DialoguePair, clean_dialogue, pair_dialogues
from .provider import (
    LocalProvider,
    RemoteProvider,
    SubtitleCandidate,
    find_synchronized_pair,
    local_provider,
    remote_provider,
)
from .sentence import SentencePair, SplitPolicy, match_sentences, split_sentences
from .srt import Cue, SubtitleDocument, parse_srt, serialize_srt, shift_document
from .store import Store
from .sync import SyncPolicy, SyncVerdict, check_sync, match_cues, recover_shift

__version__ = "0.1.0"
