"""Pure-Python scoring kernel, mirror of the compiled version.

Kept operation-for-operation identical to ``_native.pyx`` so either kernel
produces the same floating-point results in the same accumulation order.
"""

from __future__ import annotations


def bm25_accumulate(doc_ords, tfs, coef, k1, norms, scores):
    """Add one query term's contribution to every posting's document.

    Same contract as the compiled kernel: scores[d] += coef *
    (tf * (k1 + 1)) / (tf + norms[d]) for each posting (d, tf).
    """
    for d, tf in zip(doc_ords.tolist(), tfs.tolist()):
        tf = float(tf)
        scores[d] += coef * (tf * (k1 + 1.0)) / (tf + norms[d])
