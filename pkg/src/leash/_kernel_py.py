"""Pure-numpy subsumption kernels (fallback backend).

Operates on bit-packed abstract boundary codes as produced by
`lattice.encode_abstract`: bits 0-2 input class, 3-5 output class,
6-7 taint bits, 8-12 effect bits.
"""

from __future__ import annotations

import numpy as np

# (a, b) entries with a <= b in the class order; indices per lattice.LOC_INDEX
_LOC_LEQ = np.zeros((8, 8), dtype=np.uint8)
for _a, _b in [
    (0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2),  # exact/parent/local
    (3, 3),                                           # ctxt
    (4, 4), (4, 5), (5, 5),                           # intnet/extnet
]:
    _LOC_LEQ[_a, _b] = 1


def _fields(codes: np.ndarray):
    codes = np.asarray(codes, dtype=np.uint16)
    return codes & 7, (codes >> 3) & 7, (codes >> 6) & 3, (codes >> 8) & 31


def leq_matrix(a_codes: np.ndarray, b_codes: np.ndarray) -> np.ndarray:
    """uint8 matrix M with M[i, j] = 1 iff a_codes[i] <= b_codes[j]."""
    ali, alo, at, ae = _fields(a_codes)
    bli, blo, bt, be = _fields(b_codes)
    m = _LOC_LEQ[ali[:, None], bli[None, :]].copy()
    m &= _LOC_LEQ[alo[:, None], blo[None, :]]
    m &= (at[:, None] & ~bt[None, :]) == 0
    m &= (ae[:, None] & ~be[None, :]) == 0
    return m.astype(np.uint8, copy=False)


def covers_mask(rule_codes: np.ndarray, query_code: int) -> np.ndarray:
    """uint8 vector v with v[j] = 1 iff query <= rule_codes[j]."""
    rli, rlo, rt, re_ = _fields(rule_codes)
    qli, qlo, qt, qe = (
        query_code & 7,
        (query_code >> 3) & 7,
        (query_code >> 6) & 3,
        (query_code >> 8) & 31,
    )
    v = _LOC_LEQ[qli, rli].copy()
    v &= _LOC_LEQ[qlo, rlo]
    v &= (qt & ~rt) == 0
    v &= (qe & ~re_) == 0
    return v.astype(np.uint8, copy=False)
