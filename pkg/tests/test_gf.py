import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mrgrc.gf import GF256, GF65536, POLYNOMIALS, full_rank_probability, in_rowspace, random_matrix, rank


def clmul_mod(a, b, w, poly):
    """Shift-and-add multiplication, independent of the log tables."""
    out = 0
    while b:
        if b & 1:
            out ^= a
        b >>= 1
        a <<= 1
        if a >> w:
            a ^= poly
    return out


def binary_rank(rows):
    basis = {}
    r = 0
    for row in rows:
        while row:
            top = row.bit_length() - 1
            if top in basis:
                row ^= basis[top]
            else:
                basis[top] = row
                r += 1
                break
    return r


def expand_binary(matrix, field):
    """Each element becomes the w x w GF(2) matrix of multiplication by it;
    the GF(2) rank of the expansion is w times the rank over GF(2^w)."""
    w = field.w
    out = []
    for row in matrix:
        for bit in range(w):
            basis_elt = 1 << bit
            bits = 0
            for c, x in enumerate(row):
                bits |= clmul_mod(int(x), basis_elt, w, field.poly) << (c * w)
            out.append(bits)
    return out


def test_tables_generate_the_whole_group():
    for f in (GF256, GF65536):
        assert sorted(f._exp[: f.order - 1]) == list(range(1, f.order))


def test_mul_matches_shift_and_add_exhaustively_on_gf256():
    a, b = np.meshgrid(np.arange(256), np.arange(256), indexing="ij")
    table = GF256.mul(a, b)
    for x in range(256):
        for y in range(0, 256, 7):
            assert table[x, y] == clmul_mod(x, y, 8, POLYNOMIALS[8])


@settings(max_examples=300)
@given(st.integers(0, 65535), st.integers(0, 65535))
def test_mul_matches_shift_and_add_on_gf65536(x, y):
    assert GF65536.mul(x, y) == clmul_mod(x, y, 16, POLYNOMIALS[16])


def test_inverse_every_nonzero_element():
    for f in (GF256, GF65536):
        a = np.arange(1, f.order)
        assert np.all(f.mul(a, f.inv(a)) == 1)
    with pytest.raises(ZeroDivisionError):
        GF256.inv(0)


def test_field_axioms_sampled():
    rng = np.random.default_rng(3)
    a, b, c = (rng.integers(0, 256, 4000) for _ in range(3))
    f = GF256
    assert np.all(f.mul(a, b) == f.mul(b, a))
    assert np.all(f.mul(f.mul(a, b), c) == f.mul(a, f.mul(b, c)))
    assert np.all(f.mul(a, f.add(b, c)) == f.add(f.mul(a, b), f.mul(a, c)))
    assert np.all(f.add(a, a) == 0)
    assert np.all(f.mul(a, 1) == a)


def test_rank_examples():
    assert rank(np.eye(4, dtype=np.int64)) == 4
    assert rank(np.zeros((3, 5), dtype=np.int64)) == 0
    a = random_matrix(3, 5, 11)
    assert rank(np.vstack([a, a])) == rank(a)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 5), st.integers(1, 5), st.integers(0, 2**32 - 1), st.booleans())
def test_rank_agrees_with_binary_expansion(rows, cols, seed, degenerate):
    rng = np.random.default_rng(seed)
    a = GF256.random((rows, cols), rng)
    if degenerate and rows > 1:
        a[-1] = GF256.add(GF256.mul(a[0], 7), a[1 % rows])
    assert 8 * GF256.rank(a) == binary_rank(expand_binary(a, GF256))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_rank_subadditive_and_row_operation_invariant(seed):
    rng = np.random.default_rng(seed)
    f = GF256
    a = f.random((3, 6), rng)
    b = f.random((2, 6), rng)
    b[0] = a[1]
    assert f.rank(np.vstack([a, b])) <= f.rank(a) + f.rank(b)
    u = f.random((3, 3), rng)
    if f.rank(u) == 3:
        assert f.rank(f.matmul(u, a)) == f.rank(a)


def test_in_rowspace():
    a = random_matrix(3, 6, 5)
    assert in_rowspace(a[1], a)
    assert in_rowspace(GF256.add(a[0], GF256.mul(a[2], 9)), a)
    assert not in_rowspace(np.eye(6, dtype=np.int64)[:4], a)
    assert in_rowspace(np.zeros(6, dtype=np.int64), np.zeros((0, 6), dtype=np.int64))


def test_random_matrix_is_reproducible():
    assert np.array_equal(random_matrix(4, 4, 99, GF65536), random_matrix(4, 4, 99, GF65536))
    x = random_matrix(1, 1, np.random.default_rng(0))
    assert x.shape == (1, 1) and 0 <= x[0, 0] < 256


def test_matmul_and_solve_roundtrip():
    rng = np.random.default_rng(8)
    f = GF256
    while True:
        a = f.random((4, 4), rng)
        if f.rank(a) == 4:
            break
    x = f.random((4, 2), rng)
    assert np.array_equal(f.solve(a, f.matmul(a, x)), x)


def test_small_field_invertibility_rate_matches_formula():
    # over GF(2^8) a 2x2 matrix is singular with probability about 1/255
    trials, rng = 40000, np.random.default_rng(2024)
    mats = GF256.random((trials, 2, 2), rng)
    det = GF256.add(GF256.mul(mats[:, 0, 0], mats[:, 1, 1]), GF256.mul(mats[:, 0, 1], mats[:, 1, 0]))
    rate = np.mean(det != 0)
    exact = (256**2 - 1) * (256**2 - 256) / 256**4
    assert exact == pytest.approx(full_rank_probability(2, 256))
    sigma = np.sqrt(exact * (1 - exact) / trials)
    assert abs(rate - exact) < 4 * sigma
    # spot-check the elimination path on a subset
    sub = mats[:2000]
    ranks = np.array([GF256.rank(m) for m in sub])
    assert np.array_equal(ranks == 2, det[:2000] != 0)


@pytest.mark.slow
def test_gf65536_10x10_full_rank_rate():
    expected = full_rank_probability(10, 2**16)
    assert expected > 0.99998
    full = sum(GF65536.rank(random_matrix(10, 10, s, GF65536)) == 10 for s in range(10_000))
    assert full / 10_000 >= 0.9999
