"""Backend equivalence for the hot kernels (numba vs pure numpy)."""

import numpy as np
import pytest

from qhyper import _kernels
from qhyper._kernels import (HAVE_NUMBA, PAD, apply_beta_batch, expand_ops_sparse,
                             parity_table)


def test_parity_table():
    tab = parity_table(8)
    for x in (0, 1, 3, 7, 255, 170):
        assert tab[x] == bin(x).count("1") % 2


def test_apply_beta_create_and_annihilate():
    dim = 16
    rng = np.random.default_rng(0)
    vec = rng.standard_normal((dim, 3)) + 1j * rng.standard_normal((dim, 3))
    bit, mask = 0b0100, 0b0011
    out = apply_beta_batch(vec, bit, mask, True, 2.0)
    for a in range(dim):
        if a & bit:
            continue
        sign = (-1) ** bin(a & mask).count("1")
        assert np.allclose(out[a | bit], 2.0 * sign * vec[a])
    back = apply_beta_batch(out, bit, mask, False, 0.5)
    # annihilate undoes create (squared sign = 1) on the bit-free subspace
    for a in range(dim):
        expect = 0.0 * vec[a] if a & bit else vec[a]
        assert np.allclose(back[a], expect)


@pytest.mark.skipif(not HAVE_NUMBA, reason="numba not installed")
def test_backends_agree(monkeypatch):
    rng = np.random.default_rng(1)
    dim = 64
    vec = rng.standard_normal((dim, 4)) + 1j * rng.standard_normal((dim, 4))
    results = {}
    for use in (True, False):
        monkeypatch.setattr(_kernels, "USE_NUMBA", use)
        results[use] = apply_beta_batch(vec, 0b1000, 0b0110, True, 1.5 - 0.2j)
    assert np.allclose(results[True], results[False], atol=1e-14)


@pytest.mark.skipif(not HAVE_NUMBA, reason="numba not installed")
def test_sparse_backends_agree(monkeypatch):
    rng = np.random.default_rng(2)
    width = 4
    codes = np.full((6, width), PAD, dtype=np.int16)
    codes[1, 0] = 3
    codes[2, :2] = (1, 5)
    codes[3, :3] = (0, 2, 7)
    codes[4, 0] = 5
    codes[5, :2] = (3, 6)
    coeffs = rng.standard_normal(6) + 1j * rng.standard_normal(6)
    op_codes = np.array([3, 5, 2], dtype=np.int16)
    op_create = np.array([True, False, True])
    op_w = np.array([0.7, -1.2, 0.3 + 0.1j], dtype=np.complex128)
    epsneg = (rng.random((8, 8)) < 0.5).astype(np.uint8)
    epsneg = np.triu(epsneg, 1)
    epsneg = epsneg + epsneg.T

    def combined(c, v):
        acc = {}
        for row, val in zip(map(tuple, c), v):
            acc[row] = acc.get(row, 0.0) + val
        return acc

    outs = {}
    for use in (True, False):
        monkeypatch.setattr(_kernels, "USE_NUMBA", use)
        c, v = expand_ops_sparse(codes, coeffs, op_codes, op_create, op_w, epsneg)
        outs[use] = combined(c, v)
    assert outs[True].keys() == outs[False].keys()
    for key, val in outs[True].items():
        assert abs(val - outs[False][key]) < 1e-14
