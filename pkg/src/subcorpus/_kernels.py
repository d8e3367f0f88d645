"""Select the compiled timing kernels when available.

Set ``SUBCORPUS_PURE_PYTHON=1`` to force the pure-Python implementation.
"""

import os

from . import _kernels_py

IMPLEMENTATION = "python"
kernels = _kernels_py

if os.environ.get("SUBCORPUS_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels_ext
    except ImportError:  # extension not built
        pass
    else:
        kernels = _kernels_ext
        IMPLEMENTATION = "cython"

match_chain = kernels.match_chain
match_score = kernels.match_score
offset_candidates = kernels.offset_candidates
best_of = kernels.best_of
grid_scan = kernels.grid_scan
