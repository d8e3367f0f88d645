"""Compare the compiled and pure-Python timing kernels.

    python3 benchmarks/bench_sync.py --cues 1000

Grid scans in pure Python are slow, so they use a narrower shift range
(``--grid-shift``) than the recovery benchmark.
"""

import argparse
import random
import sys
import time
from array import array
from contextlib import contextmanager

from subcorpus import _kernels, _kernels_py
from subcorpus.srt import Cue, SubtitleDocument, shift_document
from subcorpus.sync import SyncPolicy, recover_shift

try:
    from subcorpus import _kernels_ext
except ImportError:
    _kernels_ext = None

KERNEL_NAMES = ("match_chain", "match_score", "offset_candidates", "best_of", "grid_scan")


def make_pair(rng, n, shift):
    t = 200_000
    cues = []
    for i in range(n):
        t += rng.randint(200, 5000)
        cues.append(Cue(i + 1, t, t + rng.randint(500, 6000), f"line {i}"))
    a = SubtitleDocument("en", "tt1", tuple(cues))
    b, _ = shift_document(a, shift)
    keep = sorted(rng.sample(range(n), int(n * 0.8)))
    b = SubtitleDocument("fa", "tt1", tuple(b.cues[i] for i in keep))
    return a, b


@contextmanager
def using(module):
    saved = {name: getattr(_kernels, name) for name in KERNEL_NAMES}
    for name in KERNEL_NAMES:
        setattr(_kernels, name, getattr(module, name))
    try:
        yield
    finally:
        for name, fn in saved.items():
            setattr(_kernels, name, fn)


def best_time(fn, repeat):
    times = []
    for _ in range(repeat):
        started = time.perf_counter()
        fn()
        times.append(time.perf_counter() - started)
    return min(times)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--cues", type=int, default=1000)
    ap.add_argument("--shift", type=int, default=-37_420)
    ap.add_argument("--grid-shift", type=int, default=5_000, help="max shift for the grid scan, ms")
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args(argv)

    if _kernels_ext is None:
        print("compiled kernels not built; only the pure-Python timings are available", file=sys.stderr)
    a, b = make_pair(random.Random(args.seed), args.cues, args.shift)
    cols = [array("q", [getattr(c, f) for c in d.cues]) for d in (a, b) for f in ("start_ms", "end_ms")]
    a_s, a_e, b_s, b_e = cols
    policy = SyncPolicy()
    eps = policy.tolerance_ms

    impls = [("python", _kernels_py)] + ([("cython", _kernels_ext)] if _kernels_ext else [])
    cases = {
        "match_score": lambda k: k.match_score(a_s, a_e, b_s, b_e, -args.shift, eps),
        "offset_candidates": lambda k: k.offset_candidates(a_s, b_s, policy.max_shift_ms, policy.shift_step_ms),
        "grid_scan": lambda k: k.grid_scan(a_s, a_e, b_s, b_e, args.grid_shift, policy.shift_step_ms, eps),
    }
    print(f"{args.cues} vs {len(b.cues)} cues, true shift {args.shift} ms")
    print(f"{'benchmark':<20}" + "".join(f"{name:>12}" for name, _ in impls) + ("     speedup" if len(impls) > 1 else ""))
    for label, case in cases.items():
        results = [best_time(lambda: case(k), args.repeat) for _, k in impls]
        _row(label, results)
    results = []
    for _, module in impls:
        with using(module):
            results.append(best_time(lambda: recover_shift(a, b, policy), args.repeat))
            delta, verdict = recover_shift(a, b, policy)
            assert delta == -args.shift and verdict.synchronized, (delta, verdict)
    _row("recover_shift", results)


def _row(label, results):
    line = f"{label:<20}" + "".join(f"{t * 1000:>10.2f}ms" for t in results)
    if len(results) > 1:
        line += f"{results[0] / results[1]:>11.1f}x"
    print(line)


if __name__ == "__main__":
    main()
