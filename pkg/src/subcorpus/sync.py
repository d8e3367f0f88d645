"""Synchronization checks and constant-offset recovery between two subtitle tracks."""

from __future__ import annotations

import bisect
from array import array
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction

from . import _kernels
from .srt import SubtitleDocument, shift_document


class NoCandidatesError(ValueError):
    """Raised when an offset search has nothing to work with."""


@dataclass(frozen=True)
class SyncPolicy:
    tolerance_ms: int = 200
    min_match_fraction: float = 0.6
    max_shift_ms: int = 120_000
    shift_step_ms: int = 10
    # score every grid offset instead of voting; slow, kept as an oracle
    exhaustive: bool = False
    # offsets kept from each vote ranking before exact scoring
    top_candidates: int = 8

    def __post_init__(self):
        if self.tolerance_ms < 0:
            raise ValueError("tolerance_ms must be non-negative")
        if not 0 < self.min_match_fraction <= 1:
            raise ValueError("min_match_fraction must be in (0, 1]")
        if self.max_shift_ms < 0:
            raise ValueError("max_shift_ms must be non-negative")
        if self.shift_step_ms <= 0:
            raise ValueError("shift_step_ms must be positive")
        if self.max_shift_ms > 0 and self.shift_step_ms > self.max_shift_ms:
            raise ValueError("shift_step_ms must not exceed max_shift_ms")


@dataclass(frozen=True)
class SyncVerdict:
    matched_count: int
    match_fraction: float
    synchronized: bool
    applied_shift_ms: int = 0


def _columns(doc: SubtitleDocument):
    return (
        array("q", [c.start_ms for c in doc.cues]),
        array("q", [c.end_ms for c in doc.cues]),
    )


def match_cues(a: SubtitleDocument, b: SubtitleDocument, tolerance_ms: int) -> list[tuple[int, int]]:
    """Pair cues of ``a`` and ``b`` whose starts and ends both agree within ``tolerance_ms``.

    The result is a largest possible one-to-one matching that preserves cue
    order on both sides, as ``(index in a, index in b)`` positions.
    """
    a_s, a_e = _columns(a)
    b_s, b_e = _columns(b)
    pairs, _ = _kernels.match_chain(a_s, a_e, b_s, b_e, 0, tolerance_ms)
    return [(int(i), int(j)) for i, j in pairs]


def _verdict(count: int, a: SubtitleDocument, b: SubtitleDocument, policy: SyncPolicy, shift: int) -> SyncVerdict:
    smaller = min(len(a), len(b))
    if smaller == 0:
        return SyncVerdict(0, 0.0, False, shift)
    fraction = Fraction(count, smaller)
    return SyncVerdict(count, float(fraction), fraction >= Fraction(policy.min_match_fraction), shift)


def check_sync(a: SubtitleDocument, b: SubtitleDocument, policy: SyncPolicy = SyncPolicy()) -> SyncVerdict:
    return _verdict(len(match_cues(a, b, policy.tolerance_ms)), a, b, policy, 0)


def vote_offsets(a: SubtitleDocument, b: SubtitleDocument, policy: SyncPolicy) -> list[int]:
    """Propose grid offsets for ``b`` ranked by how many cue starts they line up."""
    a_s, _ = _columns(a)
    b_s, _ = _columns(b)
    diffs = _kernels.offset_candidates(a_s, b_s, policy.max_shift_ms, policy.shift_step_ms)
    votes = Counter(diffs)
    if not votes:
        return [0]
    k = policy.top_candidates
    by_votes = sorted(votes, key=lambda d: (-votes[d], abs(d), d))[:k]

    # jittered timings spread votes over neighbouring grid cells
    keys = sorted(votes)
    prefix = [0]
    for d in keys:
        prefix.append(prefix[-1] + votes[d])
    eps = policy.tolerance_ms

    def window(d):
        return prefix[bisect.bisect_right(keys, d + eps)] - prefix[bisect.bisect_left(keys, d - eps)]

    smoothed = {d: window(d) for d in keys}
    by_window = sorted(keys, key=lambda d: (-smoothed[d], abs(d), d))[:k]

    seen = []
    for d in [0, *by_votes, *by_window]:
        if d not in seen:
            seen.append(d)
    return seen


def _refine(best: int, policy: SyncPolicy) -> list[int]:
    step = policy.shift_step_ms
    limit = policy.max_shift_ms // step * step
    reach = max(policy.tolerance_ms, step) // step * step
    lo = max(best - reach, -limit)
    hi = min(best + reach, limit)
    return list(range(lo, hi + 1, step))


def recover_shift(
    a: SubtitleDocument, b: SubtitleDocument, policy: SyncPolicy = SyncPolicy()
) -> tuple[int, SyncVerdict]:
    """Find the offset for ``b`` that lines up the most cues with ``a``.

    Candidate offsets come from pairwise start differences voted onto the
    ``shift_step_ms`` grid; the best few are scored exactly and the winner is
    refined over its neighbourhood. Ties prefer the smaller total timing
    residual, then the smaller absolute offset, then the smaller offset.
    """
    if not a.cues or not b.cues:
        raise NoCandidatesError("cannot recover a shift for an empty document")
    if policy.max_shift_ms <= 0:
        raise ValueError("recover_shift needs max_shift_ms > 0")
    a_s, a_e = _columns(a)
    b_s, b_e = _columns(b)
    eps = policy.tolerance_ms
    if policy.exhaustive:
        delta, _, _ = _kernels.grid_scan(a_s, a_e, b_s, b_e, policy.max_shift_ms, policy.shift_step_ms, eps)
    else:
        delta, _, _ = _kernels.best_of(a_s, a_e, b_s, b_e, vote_offsets(a, b, policy), eps)
        delta, _, _ = _kernels.best_of(a_s, a_e, b_s, b_e, _refine(delta, policy), eps)
    shifted, _ = shift_document(b, delta)
    count = len(match_cues(a, shifted, eps))
    return delta, _verdict(count, a, b, policy, delta)


def exhaustive_shift(a: SubtitleDocument, b: SubtitleDocument, policy: SyncPolicy = SyncPolicy()):
    """Score every grid offset; returns ``(delta, matched_count)``. Verification oracle."""
    if not a.cues or not b.cues:
        raise NoCandidatesError("cannot recover a shift for an empty document")
    a_s, a_e = _columns(a)
    b_s, b_e = _columns(b)
    delta, count, _ = _kernels.grid_scan(
        a_s, a_e, b_s, b_e, policy.max_shift_ms, policy.shift_step_ms, policy.tolerance_ms
    )
    return delta, count
