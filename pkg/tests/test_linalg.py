import math

import numpy as np
import pytest

from openxxx import linalg
from openxxx.errors import DimensionError

SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)
I2 = np.eye(2, dtype=complex)


def kron_oracle(a, b):
    """Entrywise definition, independent of np.kron."""
    ra, ca = a.shape
    rb, cb = b.shape
    out = np.zeros((ra * rb, ca * cb), dtype=complex)
    for i in range(ra):
        for j in range(rb):
            for k in range(ca):
                for l in range(cb):
                    out[i * rb + j, k * cb + l] = a[i, k] * b[j, l]
    return out


def test_kron_identities():
    assert np.array_equal(linalg.kron(I2, I2), np.eye(4))
    assert np.allclose(np.diag(linalg.kron(SZ, I2)), [1, 1, -1, -1])


def test_kron_mixed_product_property(rng):
    a, b, c, d = (rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2)) for _ in range(4))
    lhs = kron_oracle(a, b) @ kron_oracle(c, d)
    rhs = linalg.kron(a @ c, b @ d)
    assert np.allclose(lhs, rhs, atol=1e-13)


def test_kron_associative(rng):
    a, b, c = (rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2)) for _ in range(3))
    left = linalg.kron(linalg.kron(a, b), c)
    right = linalg.kron(a, linalg.kron(b, c))
    # entries are pure products of entries; the only slack is the complex
    # multiply rounding (vectorized FMA vs scalar), a couple of ulps
    assert np.allclose(left, kron_oracle(kron_oracle(a, b), c), rtol=1e-14, atol=0)
    assert np.allclose(left, right, rtol=1e-14, atol=0)


def test_kron_dimension_cap():
    big = np.eye(2 ** 8)
    with pytest.raises(DimensionError):
        linalg.kron(big, big)


def test_embed_site_basics():
    assert np.array_equal(linalg.embed_site(SZ, 1, 1), SZ)
    for k in (1, 2, 3):
        assert np.array_equal(linalg.embed_site(I2, k, 3), np.eye(8))
    with pytest.raises(DimensionError):
        linalg.embed_site(SZ, 3, 2)


def test_embedded_sites_commute():
    a = linalg.embed_site(SZ, 1, 2)
    b = linalg.embed_site(SX, 2, 2)
    explicit_a = kron_oracle(SZ, I2)
    explicit_b = kron_oracle(I2, SX)
    assert np.array_equal(a, explicit_a)
    assert np.array_equal(b, explicit_b)
    assert np.allclose(explicit_a @ explicit_b - explicit_b @ explicit_a, 0)
    assert linalg.commutator_norm(a, b) == 0


def test_partial_trace_identity():
    assert np.array_equal(linalg.partial_trace_aux(np.eye(4), 2), 2 * np.eye(2))


def test_partial_trace_kron_oracle(rng):
    a = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
    b = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
    m = linalg.kron(a, b)
    # index-sum oracle
    expected = np.zeros((4, 4), dtype=complex)
    for i in range(4):
        for j in range(4):
            expected[i, j] = sum(m[s * 4 + i, s * 4 + j] for s in range(2))
    got = linalg.partial_trace_aux(m, 2)
    assert np.allclose(got, expected, atol=1e-14)
    assert np.allclose(got, np.trace(a) * b, atol=1e-13)
    assert abs(np.trace(got) - np.trace(m)) < 1e-12


def test_commutator_norm_values(rng):
    m = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
    assert linalg.commutator_norm(np.eye(4), m) == 0
    assert linalg.commutator_norm(m, m @ m) < 1e-14
    # Pauli oracle: [sx, sy] = 2i sz, computed from the explicit matrices
    comm = SX @ SY - SY @ SX
    expected = np.linalg.norm(comm) / (np.linalg.norm(SX) * np.linalg.norm(SY))
    assert abs(expected - math.sqrt(2)) < 1e-15
    assert abs(linalg.commutator_norm(SX, SY) - expected) < 1e-15


def test_eig_residual_property(rng):
    for _ in range(5):
        m = rng.standard_normal((16, 16)) + 1j * rng.standard_normal((16, 16))
        w, v = linalg.eig(m)
        for k in range(16):
            res = np.linalg.norm(m @ v[:, k] - w[k] * v[:, k])
            assert res / (np.linalg.norm(m) * np.linalg.norm(v[:, k])) < 1e-12


def test_reorder_and_embed_factors():
    # embedding the swap on factors (0, 2) of three sites and acting on basis
    # vectors must exchange the outer bits
    swap02 = linalg.embed_factors(
        np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex),
        (0, 2),
        3,
    )
    for idx in range(8):
        vec = np.zeros(8, dtype=complex)
        vec[idx] = 1
        out = swap02 @ vec
        bits = [(idx >> 2) & 1, (idx >> 1) & 1, idx & 1]
        swapped = (bits[2] << 2) | (bits[1] << 1) | bits[0]
        assert out[swapped] == 1

    with pytest.raises(DimensionError):
        linalg.reorder_factors(np.eye(8), [0, 1, 1])
