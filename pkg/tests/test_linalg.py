"""Linear algebra over Q and Z/p^M against brute-force and sympy oracles."""

import itertools
import random
from fractions import Fraction

import numpy as np
import sympy

from shintani.linalg import (
    berkowitz_charpoly,
    frac_nullspace,
    frac_rref,
    frac_solve,
    lower_convex_hull,
    mat_pow_mod,
    matmul_mod,
    poly_mul_mod,
    rank_mod_p,
    zpm_in_span,
    zpm_kernel,
    zpm_solve,
)

rng = random.Random(20260822)


def test_matmul_mod_matches_bigint():
    mod = 11**8
    r = np.random.default_rng(7)
    A = r.integers(0, mod, size=(40, 300))
    B = r.integers(0, mod, size=(300, 30))
    got = matmul_mod(A, B, mod)
    want = (A.astype(object) @ B.astype(object)) % mod
    assert (got.astype(object) == want).all()


def test_mat_pow_mod():
    mod = 5**8
    A = np.array([[1, 2], [3, 4]], dtype=np.int64)
    want = np.linalg.matrix_power(A.astype(object), 9) % mod
    assert (mat_pow_mod(A, 9, mod).astype(object) == want).all()


def test_frac_rref_and_nullspace_vs_sympy():
    for trial in range(25):
        m, n = rng.randint(1, 5), rng.randint(1, 6)
        rows = [[Fraction(rng.randint(-5, 5)) for _ in range(n)] for _ in range(m)]
        basis = frac_nullspace(rows, n)
        S = sympy.Matrix([[sympy.Rational(x) for x in r] for r in rows])
        want = S.nullspace()
        assert len(basis) == len(want)
        for v in basis:
            prod = [sum(r[i] * v[i] for i in range(n)) for r in rows]
            assert all(x == 0 for x in prod)
        # spans agree: each sympy vector solves into my basis
        if basis:
            B = [[basis[j][i] for j in range(len(basis))] for i in range(n)]
            for w in want:
                assert frac_solve(B, [Fraction(x) for x in w]) is not None


def test_frac_solve():
    rows = [[Fraction(2), Fraction(1)], [Fraction(1), Fraction(3)]]
    x = frac_solve(rows, [Fraction(5), Fraction(10)])
    assert x == [Fraction(1), Fraction(3)]
    assert frac_solve([[1, 1], [2, 2]], [1, 3]) is None
    assert frac_solve([[1, 1], [2, 2]], [1, 2]) is not None


def brute_kernel(A, p, M):
    """All kernel vectors of a tiny matrix by enumeration."""
    pm = p**M
    m, n = A.shape
    out = set()
    for x in itertools.product(range(pm), repeat=n):
        v = np.array(x, dtype=np.int64)
        if not ((A @ v) % pm).any():
            out.add(x)
    return out


def span_set(basis, p, M, n):
    pm = p**M
    out = set()
    if not basis:
        return {(0,) * n}
    for coeffs in itertools.product(range(pm), repeat=len(basis)):
        v = np.zeros(n, dtype=np.int64)
        for c, b in zip(coeffs, basis):
            v = (v + c * b) % pm
        out.add(tuple(int(x) for x in v))
    return out


def test_zpm_kernel_exhaustive_small():
    p, M = 3, 2
    cases = [
        np.array([[3, 0], [0, 1]]),
        np.array([[1, 2], [2, 4]]),
        np.array([[3, 3], [3, 3]]),
        np.array([[0, 0], [0, 0]]),
        np.array([[2, 1], [5, 7]]),
        np.array([[6, 3, 1]]),
        np.array([[3], [6]]),
    ]
    for A in cases:
        A = A.astype(np.int64)
        basis, torsion = zpm_kernel(A, p, M)
        want = brute_kernel(A, p, M)
        got = span_set(basis, p, M, A.shape[1])
        assert got == want, A
        # torsion accounting: kernel size is p^sum(M - v)
        assert len(want) == p ** sum(M - v for v in torsion)


def test_zpm_kernel_random_membership():
    p, M = 5, 4
    pm = p**M
    r = np.random.default_rng(11)
    for _ in range(15):
        m, n = int(r.integers(2, 6)), int(r.integers(2, 6))
        A = r.integers(0, pm, size=(m, n)).astype(np.int64)
        # plant some p-divisibility to exercise torsion
        A[0] = A[0] // p * p
        basis, _ = zpm_kernel(A, p, M)
        for b in basis:
            assert not ((A @ b) % pm).any()
        # random combinations stay in the kernel
        for _ in range(5):
            if basis:
                coeffs = r.integers(0, pm, size=len(basis))
                v = np.zeros(n, dtype=np.int64)
                for c, b in zip(coeffs, basis):
                    v = (v + int(c) * b) % pm
                assert not ((A @ v) % pm).any()


def test_zpm_solve():
    p, M = 5, 6
    pm = p**M
    r = np.random.default_rng(3)
    for _ in range(20):
        m, n = int(r.integers(1, 6)), int(r.integers(1, 6))
        A = r.integers(0, pm, size=(m, n)).astype(np.int64)
        x0 = r.integers(0, pm, size=n).astype(np.int64)
        b = (A @ x0.astype(object) % pm).astype(np.int64)
        x = zpm_solve(A, b, p, M)
        assert x is not None
        assert not ((A.astype(object) @ x.astype(object) - b) % pm).any()
    # unsolvable: p * x = 1
    assert zpm_solve(np.array([[p]]), np.array([1]), p, M) is None


def test_zpm_in_span():
    p, M = 5, 3
    v1 = np.array([1, 0, 5], dtype=np.int64)
    v2 = np.array([0, 25, 0], dtype=np.int64)
    assert zpm_in_span([v1, v2], np.array([2, 25, 10]), p, M)
    assert not zpm_in_span([v1, v2], np.array([0, 5, 0]), p, M)
    assert zpm_in_span([], np.array([0, 0]), p, M)
    assert not zpm_in_span([], np.array([1, 0]), p, M)


def test_berkowitz_vs_sympy():
    mod = 5**8
    r = np.random.default_rng(23)
    lam = sympy.Symbol("lam")
    for n in (1, 2, 3, 5, 8):
        A = r.integers(0, mod, size=(n, n)).astype(np.int64)
        got = berkowitz_charpoly(A, mod)
        S = sympy.Matrix(A.tolist())
        want = sympy.Poly(S.charpoly(lam).as_expr(), lam).all_coeffs()
        assert len(got) == n + 1
        assert got == [int(c) % mod for c in want]


def test_berkowitz_block_diagonal_multiplies():
    # charpoly of a block diagonal matrix is the product of block charpolys
    mod = 5**8
    r = np.random.default_rng(5)
    A = r.integers(0, mod, size=(3, 3)).astype(np.int64)
    B = r.integers(0, mod, size=(2, 2)).astype(np.int64)
    big = np.zeros((5, 5), dtype=np.int64)
    big[:3, :3] = A
    big[3:, 3:] = B
    want = poly_mul_mod(berkowitz_charpoly(A, mod), berkowitz_charpoly(B, mod), mod)
    assert berkowitz_charpoly(big, mod) == want


def test_rank_mod_p():
    p = 7
    assert rank_mod_p(np.array([[1, 2], [2, 4]]), p) == 1
    assert rank_mod_p(np.array([[7, 0], [0, 7]]), p) == 0
    assert rank_mod_p(np.eye(4, dtype=np.int64), p) == 4
    r = np.random.default_rng(2)
    for _ in range(10):
        m, n = int(r.integers(1, 7)), int(r.integers(1, 7))
        A = r.integers(0, 7, size=(m, n)).astype(np.int64)
        S = sympy.Matrix(A.tolist())
        # oracle: rank over F_p via rref of the integer matrix in GF(p)
        want = len(S.rref(iszerofunc=lambda v: v % p == 0, simplify=lambda v: v % p)[1])
        assert rank_mod_p(A, p) == want


def test_lower_convex_hull():
    pts = [(0, 0), (1, 2), (2, 0), (3, 5), (4, 2)]
    hull = lower_convex_hull(pts)
    assert hull == [(0, 0), (2, 0), (4, 2)]
    # collinear interior points are not vertices
    assert lower_convex_hull([(0, 0), (2, 1), (4, 2)]) == [(0, 0), (4, 2)]
    assert lower_convex_hull([(0, 3), (1, 1), (2, 0), (3, 0), (4, 1)]) == [
        (0, 3),
        (1, 1),
        (2, 0),
        (3, 0),
        (4, 1),
    ]
    assert lower_convex_hull([(0, 0), (5, 0)]) == [(0, 0), (5, 0)]
