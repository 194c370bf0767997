"""Scoring kernels: compiled extension when available, pure Python otherwise.

Set BACKLINK_PURE_PYTHON=1 to force the fallback (used by the benchmark to
compare both).
"""

from __future__ import annotations

import os

if os.environ.get("BACKLINK_PURE_PYTHON"):
    from backlink.kernels.pyfallback import bm25_accumulate

    KERNEL_BACKEND = "python"
else:
    try:
        from backlink.kernels._native import bm25_accumulate

        KERNEL_BACKEND = "native"
    except ImportError:
        from backlink.kernels.pyfallback import bm25_accumulate

        KERNEL_BACKEND = "python"

__all__ = ["bm25_accumulate", "KERNEL_BACKEND"]
