import os
import random
import subprocess
import sys
from array import array
from pathlib import Path

import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from subcorpus import _kernels_py
from subcorpus.srt import Cue, SubtitleDocument, shift_document
from subcorpus.sync import (
    NoCandidatesError,
    SyncPolicy,
    check_sync,
    exhaustive_shift,
    match_cues,
    recover_shift,
)

from conftest import corrupt, random_document

try:
    from subcorpus import _kernels_ext
except ImportError:  # pragma: no cover
    _kernels_ext = None


def doc(timings, language="en"):
    return SubtitleDocument(language, "tt1", tuple(Cue(i + 1, s, e, f"c{i}") for i, (s, e) in enumerate(timings)))


def dp_max_matching(a, b, eps):
    """Brute-force O(n*m) oracle: largest order-preserving matching."""
    n, m = len(a.cues), len(b.cues)
    best = [[0] * (m + 1) for _ in range(n + 1)]
    for i in range(n):
        for j in range(m):
            x, y = a.cues[i], b.cues[j]
            ok = abs(x.start_ms - y.start_ms) <= eps and abs(x.end_ms - y.end_ms) <= eps
            best[i + 1][j + 1] = max(best[i][j + 1], best[i + 1][j], best[i][j] + 1 if ok else 0)
    return best[n][m]


timings = st.lists(
    st.tuples(st.integers(0, 60), st.integers(0, 30)).map(lambda t: (t[0], t[0] + t[1])), max_size=8
)


def test_identity_matches_everything(rng):
    a = random_document(rng, 50)
    assert match_cues(a, a, 0) == [(i, i) for i in range(50)]


def test_hand_enumerated_tolerance():
    a = doc([(1000, 2000), (5000, 6000)])
    b = doc([(1200, 2000), (5000, 6000)], "fa")
    assert match_cues(a, b, 0) == [(1, 1)]
    assert match_cues(a, b, 250) == [(0, 0), (1, 1)]


@settings(max_examples=400)
@given(timings, timings, st.integers(0, 12))
def test_matching_is_maximum(ta, tb, eps):
    a, b = doc(ta), doc(tb, "fa")
    pairs = match_cues(a, b, eps)
    assert len(pairs) == dp_max_matching(a, b, eps)
    for i, j in pairs:
        assert abs(a.cues[i].start_ms - b.cues[j].start_ms) <= eps
        assert abs(a.cues[i].end_ms - b.cues[j].end_ms) <= eps
    assert [i for i, _ in pairs] == sorted({i for i, _ in pairs})
    assert [j for _, j in pairs] == sorted({j for _, j in pairs})


@settings(max_examples=300)
@given(timings, timings, st.integers(0, 12), st.integers(0, 12))
def test_symmetric_and_monotone_in_tolerance(ta, tb, e1, e2):
    a, b = doc(ta), doc(tb, "fa")
    lo, hi = sorted((e1, e2))
    assert len(match_cues(a, b, lo)) == len(match_cues(b, a, lo))
    assert len(match_cues(a, b, lo)) <= len(match_cues(a, b, hi))


def test_check_sync_identical():
    a = doc([(0, 10), (20, 30)])
    v = check_sync(a, a, SyncPolicy(min_match_fraction=0.9))
    assert v.synchronized and v.match_fraction == 1.0 and v.applied_shift_ms == 0


def test_check_sync_disjoint():
    a = doc([(0, 1000), (2000, 3000)])
    b = doc([(100_000, 101_000)], "fa")
    v = check_sync(a, b)
    assert not v.synchronized and v.match_fraction == 0.0


def test_check_sync_six_of_ten():
    base = [(i * 10_000, i * 10_000 + 2000) for i in range(10)]
    moved = base[:6] + [(s + 5000, e + 5000) for s, e in base[6:]]
    v = check_sync(doc(base), doc(moved, "fa"), SyncPolicy(min_match_fraction=0.5))
    assert v.matched_count == 6 and v.match_fraction == 0.6 and v.synchronized


def test_check_sync_empty():
    v = check_sync(doc([]), doc([(0, 1)]))
    assert v.matched_count == 0 and not v.synchronized


def test_fraction_uses_smaller_document():
    a = doc([(i * 5000, i * 5000 + 1000) for i in range(4)])
    b = doc([(i * 5000, i * 5000 + 1000) for i in range(10)], "fa")
    v = check_sync(a, b, SyncPolicy(min_match_fraction=1.0))
    assert v.match_fraction == 1.0 and v.synchronized


def test_recover_known_shift(rng):
    a = random_document(rng, 200, t0=200_000)
    b, _ = shift_document(a, 500)
    delta, verdict = recover_shift(a, b, SyncPolicy(max_shift_ms=120_000, shift_step_ms=10))
    assert delta == -500
    assert verdict.match_fraction == 1.0 and verdict.applied_shift_ms == -500


def test_recover_identity_prefers_zero(rng):
    a = random_document(rng, 100)
    delta, verdict = recover_shift(a, a)
    assert delta == 0 and verdict.match_fraction == 1.0


def test_recover_with_corruption(rng):
    policy = SyncPolicy()
    for _ in range(20):
        a = random_document(rng, rng.randint(50, 400), t0=150_000)
        true = rng.randint(-120_000, 120_000)
        b = corrupt(rng, shift_document(a, true)[0])
        delta, verdict = recover_shift(a, b, policy)
        assert abs(delta + true) <= max(policy.tolerance_ms, policy.shift_step_ms)
        assert verdict.match_fraction >= 0.7


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32), st.integers(-120_000, 120_000))
def test_recover_inverts_any_shift(seed, x):
    r = random.Random(seed)
    a = random_document(r, r.randint(5, 60), t0=130_000)
    b, clamped = shift_document(a, x)
    assume(clamped == 0)
    policy = SyncPolicy()
    delta, verdict = recover_shift(a, b, policy)
    assert abs(delta + x) <= max(policy.tolerance_ms, policy.shift_step_ms)
    assert verdict.match_fraction == 1.0


def test_voting_agrees_with_exhaustive_scan(rng):
    policy = SyncPolicy()
    for _ in range(5):
        a = random_document(rng, rng.randint(30, 200))
        b = corrupt(rng, shift_document(a, rng.randint(-100_000, 100_000))[0])
        delta, verdict = recover_shift(a, b, policy)
        _, oracle_count = exhaustive_shift(a, b, policy)
        assert verdict.matched_count == oracle_count


def test_exhaustive_policy_flag(rng):
    a = random_document(rng, 40, t0=10_000)
    b, _ = shift_document(a, 1230)
    delta, verdict = recover_shift(a, b, SyncPolicy(exhaustive=True, max_shift_ms=5000))
    assert delta == -1230 and verdict.match_fraction == 1.0


def test_recover_rejects_empty():
    with pytest.raises(NoCandidatesError):
        recover_shift(doc([]), doc([(0, 1)]))


def test_recover_rejects_unrelated_tracks(rng):
    a = random_document(rng, 100)
    b = random_document(random.Random(99), 100, language="fa")
    _, verdict = recover_shift(a, b)
    assert not verdict.synchronized


def test_policy_validation():
    with pytest.raises(ValueError):
        SyncPolicy(min_match_fraction=0)
    with pytest.raises(ValueError):
        SyncPolicy(max_shift_ms=5, shift_step_ms=10)


@pytest.mark.skipif(_kernels_ext is None, reason="compiled kernels not built")
@settings(max_examples=200)
@given(timings, timings, st.integers(-50, 50), st.integers(0, 15))
def test_compiled_kernels_match_reference(ta, tb, delta, eps):
    cols = []
    for t in (ta, tb):
        t = sorted(t)
        cols += [array("q", [s for s, _ in t]), array("q", [e for _, e in t])]
    assert _kernels_ext.match_chain(*cols, delta, eps) == _kernels_py.match_chain(*cols, delta, eps)
    assert _kernels_ext.offset_candidates(cols[0], cols[2], 40, 7) == _kernels_py.offset_candidates(
        cols[0], cols[2], 40, 7
    )
    if ta and tb:
        assert _kernels_ext.grid_scan(*cols, 40, 7, eps) == _kernels_py.grid_scan(*cols, 40, 7, eps)


def test_pure_python_fallback_selected_by_env():
    script = (
        "import random\n"
        "from subcorpus import KERNELS\n"
        "from subcorpus.srt import shift_document\n"
        "from subcorpus.sync import recover_shift\n"
        "from conftest import random_document\n"
        "a = random_document(random.Random(3), 80, t0=50_000)\n"
        "delta, verdict = recover_shift(a, shift_document(a, 4321)[0])\n"
        "print(KERNELS, delta, verdict.matched_count)\n"
    )
    env = dict(os.environ, SUBCORPUS_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", script], env=env, cwd=Path(__file__).parent,
                         capture_output=True, text=True, check=True).stdout.split()
    assert out == ["python", "-4320", "80"]
