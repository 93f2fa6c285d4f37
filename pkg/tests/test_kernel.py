"""Kernel backends: contract equality and agreement with the object layer."""

import random

import numpy as np

from leash import _kernel_py
from leash import kernel
from leash.lattice import boundary_leq, decode_abstract, enumerate_abstract_codes


def _random_codes(n, seed):
    rng = random.Random(seed)
    all_codes = list(enumerate_abstract_codes())
    return kernel.as_codes([rng.choice(all_codes) for _ in range(n)])


def test_backend_name_is_reported():
    assert kernel.BACKEND in ("cython", "python")


def test_backends_agree_on_matrices():
    a = _random_codes(173, 1)
    b = _random_codes(211, 2)
    assert np.array_equal(kernel.leq_matrix(a, b), _kernel_py.leq_matrix(a, b))


def test_backends_agree_on_masks():
    rules = _random_codes(311, 3)
    for q in _random_codes(40, 4):
        assert np.array_equal(
            kernel.covers_mask(rules, int(q)), _kernel_py.covers_mask(rules, int(q))
        )


def test_mask_is_matrix_row():
    rules = _random_codes(97, 5)
    queries = _random_codes(23, 6)
    m = kernel.leq_matrix(queries, rules)
    for i, q in enumerate(queries):
        assert np.array_equal(m[i], kernel.covers_mask(rules, int(q)))


def test_agrees_with_object_level_leq():
    rng = random.Random(9)
    all_codes = list(enumerate_abstract_codes())
    pairs = [(rng.choice(all_codes), rng.choice(all_codes)) for _ in range(3000)]
    a = kernel.as_codes([p for p, _ in pairs])
    b = kernel.as_codes([q for _, q in pairs])
    m = kernel.leq_matrix(a, b)
    for idx, (p, q) in enumerate(pairs):
        assert bool(m[idx, idx]) == boundary_leq(decode_abstract(p), decode_abstract(q))
