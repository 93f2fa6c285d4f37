"""Backend selection for the subsumption hot path.

Prefers the compiled extension; falls back to the numpy implementation when
the extension is missing or LEASH_PURE=1 is set.  Both backends share the
exact contract, verified by tests/test_kernel.py.
"""

from __future__ import annotations

import os

import numpy as np

from . import _kernel_py

_impl = None
if os.environ.get("LEASH_PURE") != "1":
    try:
        from . import _kernel as _impl  # type: ignore[attr-defined]
    except ImportError:
        _impl = None

BACKEND = "cython" if _impl is not None else "python"


def as_codes(values) -> np.ndarray:
    return np.ascontiguousarray(values, dtype=np.uint16)


def leq_matrix(a_codes, b_codes) -> np.ndarray:
    a = as_codes(a_codes)
    b = as_codes(b_codes)
    if _impl is None:
        return _kernel_py.leq_matrix(a, b)
    out = np.empty((len(a), len(b)), dtype=np.uint8)
    _impl.leq_matrix_into(a, b, out)
    return out


def covers_mask(rule_codes, query_code: int) -> np.ndarray:
    rules = as_codes(rule_codes)
    if _impl is None:
        return _kernel_py.covers_mask(rules, int(query_code))
    out = np.empty(len(rules), dtype=np.uint8)
    _impl.covers_mask_into(rules, int(query_code), out)
    return out
