"""Per-slot simulation kernel, compiled when available.

The compiled extension and the pure-Python fallback implement byte-identical
semantics (same random-stream consumption, same update order, same float
operations), so results do not depend on which one is loaded. Set
AODET_PURE_PYTHON=1 to force the fallback, e.g. for benchmarking.
"""

import os

MODE_TABLE = 0
MODE_MIX = 1
MODE_SCRIPT = 2
MODE_CLAIRVOYANT = 3

if os.environ.get("AODET_PURE_PYTHON"):
    from .fallback import run_slots
    BACKEND = "python"
else:
    try:
        from ._episode import run_slots
        BACKEND = "compiled"
    except ImportError:
        from .fallback import run_slots
        BACKEND = "python"
