"""Arithmetic and linear algebra over GF(2^8) and GF(2^16).

Elements are plain integers in ``[0, 2^w)``; matrices are numpy integer
arrays.  Multiplication uses log/antilog tables built from a fixed primitive
polynomial:

* ``w = 8``:  ``x^8 + x^4 + x^3 + x^2 + 1``      (``0x11d``)
* ``w = 16``: ``x^16 + x^12 + x^3 + x + 1``      (``0x1100b``)
"""
from __future__ import annotations

import numpy as np

POLYNOMIALS = {8: 0x11D, 16: 0x1100B}


class GaloisField:
    def __init__(self, w=8):
        if w not in POLYNOMIALS:
            raise ValueError(f"unsupported field width {w}; choose from {sorted(POLYNOMIALS)}")
        self.w = w
        self.order = 1 << w
        self.poly = POLYNOMIALS[w]
        self.dtype = np.uint8 if w == 8 else np.uint16
        q1 = self.order - 1
        exp = np.zeros(2 * q1, dtype=np.int64)
        log = np.zeros(self.order, dtype=np.int64)
        x = 1
        for i in range(q1):
            exp[i] = x
            log[x] = i
            x <<= 1
            if x & self.order:
                x ^= self.poly
        exp[q1:] = exp[:q1]
        self._exp, self._log = exp, log

    def __repr__(self):
        return f"GaloisField(w={self.w}, poly={self.poly:#x})"

    def __eq__(self, other):
        return isinstance(other, GaloisField) and other.w == self.w

    def __hash__(self):
        return hash(("GF2^w", self.w))

    @property
    def name(self):
        return f"gf{self.order}"

    def asarray(self, values):
        arr = np.asarray(values, dtype=np.int64)
        if arr.size and (arr.min() < 0 or arr.max() >= self.order):
            raise ValueError(f"entries out of range for {self.name}")
        return arr

    # element-wise ops (broadcasting)
    def add(self, a, b):
        return np.bitwise_xor(np.asarray(a, dtype=np.int64), np.asarray(b, dtype=np.int64))

    sub = add

    def mul(self, a, b):
        a = np.asarray(a, dtype=np.int64)
        b = np.asarray(b, dtype=np.int64)
        out = self._exp[self._log[a] + self._log[b]]
        return np.where((a == 0) | (b == 0), 0, out)

    def inv(self, a):
        a = np.asarray(a, dtype=np.int64)
        if np.any(a == 0):
            raise ZeroDivisionError("0 has no inverse")
        return self._exp[(self.order - 1) - self._log[a]]

    def div(self, a, b):
        return self.mul(a, self.inv(b))

    def power(self, a, e):
        a = np.asarray(a, dtype=np.int64)
        out = self._exp[(self._log[a] * e) % (self.order - 1)]
        if e == 0:
            return np.ones_like(a)
        return np.where(a == 0, 0, out)

    def matmul(self, a, b):
        a = np.asarray(a, dtype=np.int64)
        b = np.asarray(b, dtype=np.int64)
        if a.shape[1] != b.shape[0]:
            raise ValueError(f"shape mismatch {a.shape} @ {b.shape}")
        if a.shape[1] == 0:
            return np.zeros((a.shape[0], b.shape[1]), dtype=np.int64)
        prod = self.mul(a[:, :, None], b[None, :, :])
        return np.bitwise_xor.reduce(prod, axis=1)

    def random(self, shape, rng: np.random.Generator):
        return rng.integers(0, self.order, size=shape, dtype=np.int64)

    def row_reduce(self, matrix):
        """Reduced row echelon form; returns ``(rref, pivot_columns)``."""
        m = np.array(matrix, dtype=np.int64, copy=True)
        if m.ndim != 2:
            raise ValueError("expected a 2-D matrix")
        rows, cols = m.shape
        pivots = []
        r = 0
        for c in range(cols):
            if r == rows:
                break
            nz = np.nonzero(m[r:, c])[0]
            if nz.size == 0:
                continue
            p = r + nz[0]
            if p != r:
                m[[r, p]] = m[[p, r]]
            m[r] = self.mul(m[r], self.inv(m[r, c]))
            col = m[:, c].copy()
            col[r] = 0
            hit = np.nonzero(col)[0]
            if hit.size:
                m[hit] ^= self.mul(col[hit, None], m[r][None, :])
            pivots.append(c)
            r += 1
        return m, pivots

    def rank(self, matrix) -> int:
        matrix = np.asarray(matrix)
        if matrix.size == 0:
            return 0
        return len(self.row_reduce(matrix)[1])

    def in_rowspace(self, candidate, basis) -> bool:
        candidate = np.atleast_2d(np.asarray(candidate, dtype=np.int64))
        basis = np.asarray(basis, dtype=np.int64)
        if basis.size == 0:
            return not np.any(candidate)
        basis = np.atleast_2d(basis)
        return self.rank(basis) == self.rank(np.vstack([basis, candidate]))

    def solve(self, a, b):
        """Solve ``a @ x = b`` for square invertible ``a``."""
        a = np.asarray(a, dtype=np.int64)
        b = np.asarray(b, dtype=np.int64)
        squeeze = b.ndim == 1
        b2 = b[:, None] if squeeze else b
        n = a.shape[0]
        rref, piv = self.row_reduce(np.hstack([a, b2]))
        if piv[:n] != list(range(n)):
            raise np.linalg.LinAlgError("singular matrix")
        x = rref[:n, n:]
        return x[:, 0] if squeeze else x


GF256 = GaloisField(8)
GF65536 = GaloisField(16)

_BY_NAME = {"gf256": GF256, "gf65536": GF65536, "8": GF256, "16": GF65536}


def get_field(name) -> GaloisField:
    if isinstance(name, GaloisField):
        return name
    try:
        return _BY_NAME[str(name).lower()]
    except KeyError:
        raise ValueError(f"unknown field {name!r}; use gf256 or gf65536") from None


def rank(matrix, field=GF256) -> int:
    return field.rank(matrix)


def random_matrix(rows, cols, rng, field=GF256):
    """Matrix of i.i.d. uniform field elements drawn from ``rng``.

    ``rng`` may be a :class:`numpy.random.Generator` or an integer seed.
    """
    rng = np.random.default_rng(rng)
    return field.random((rows, cols), rng)


def in_rowspace(candidate, basis, field=GF256) -> bool:
    return field.in_rowspace(candidate, basis)


def full_rank_probability(n, q) -> float:
    """Probability that a uniform ``n x n`` matrix over GF(q) is invertible."""
    p = 1.0
    for i in range(1, n + 1):
        p *= 1.0 - float(q) ** (-i)
    return p
