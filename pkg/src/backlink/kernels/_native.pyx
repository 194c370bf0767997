# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled scoring kernel: term-at-a-time BM25 accumulation."""


def bm25_accumulate(const unsigned int[::1] doc_ords,
                    const unsigned int[::1] tfs,
                    double coef,
                    double k1,
                    const double[::1] norms,
                    double[::1] scores):
    """Add one query term's contribution to every posting's document.

    For each posting (d, tf):
        scores[d] += coef * (tf * (k1 + 1)) / (tf + norms[d])

    where norms[d] is the precomputed length normalizer
    k1 * (1 - b + b * len_d / avg_len) and coef folds together the term's
    idf, its query repetition count and the field weight.
    """
    cdef Py_ssize_t i, n = doc_ords.shape[0]
    cdef unsigned int d
    cdef double tf
    for i in range(n):
        d = doc_ords[i]
        tf = <double> tfs[i]
        scores[d] += coef * (tf * (k1 + 1.0)) / (tf + norms[d])
