"""Finite-precision p-adic distributions via truncated moment tables.

A two-variable distribution is stored as the moments m_c(a, b) of
x^a y^b over the disc x = c mod p, for units c and total degree
a + b <= T, with values mod p^M.  The semigroup action substitutes a
linear change of variables, which is homogeneous, so the degree-T
truncation is exact: no error enters except through the base ring.

One-variable distributions on the units carry moments m_c(n), n <= T'.
Tame level N enters as a finite group algebra tag in {0,...,N-1} units,
giving the tagged containers DistN (one-variable) and TaggedDist2
(two-variable, the value module of overconvergent symbols).
"""

from __future__ import annotations

import json
from functools import lru_cache
from math import comb, factorial, gcd

import numpy as np

from .errors import (
    BadSemigroupElement,
    InsufficientMoments,
    PrecisionMismatch,
)


@lru_cache(maxsize=None)
def _pairs(T):
    """Lexicographic (a, b) with a + b <= T, plus the position lookup."""
    pairs = tuple((a, b) for a in range(T + 1) for b in range(T + 1 - a))
    pos = {ab: i for i, ab in enumerate(pairs)}
    return pairs, pos


@lru_cache(maxsize=None)
def _stratum_cols(T, d):
    """Flat positions of (n, d - n) for n = 0..d."""
    _, pos = _pairs(T)
    return tuple(pos[(n, d - n)] for n in range(d + 1))


def _check_s0(g, level):
    A, B, C, D = g
    if A * D - B * C <= 0:
        raise BadSemigroupElement(f"determinant of {g} is not positive")
    if C % level != 0:
        raise BadSemigroupElement(f"{g} not upper triangular mod {level}")
    if gcd(A, level) != 1:
        raise BadSemigroupElement(f"upper-left of {g} not a unit mod {level}")


@lru_cache(maxsize=8192)
def _act_blocks(g, p, prec, T):
    """Per-degree matrices of the substitution (x,y) -> ((x,y)g).

    Stratum d output (a, b=d-a) from input (n, d-n):
    V_d[a, n] = sum over i+j = n of C(a,i) C(b,j) A^i C^(a-i) B^j D^(b-j).
    """
    A, B, C, D = g
    mod = p**prec
    blocks = []
    for d in range(T + 1):
        V = np.zeros((d + 1, d + 1), dtype=np.int64)
        for a in range(d + 1):
            b = d - a
            for n in range(d + 1):
                tot = 0
                for i in range(max(0, n - b), min(a, n) + 1):
                    j = n - i
                    tot += (comb(a, i) * comb(b, j)
                            * pow(A, i, mod) * pow(C, a - i, mod)
                            * pow(B, j, mod) * pow(D, b - j, mod))
                V[a, n] = tot % mod
        blocks.append(V)
    return tuple(blocks)


class MomentDist2:
    """Moments m_c(a, b) mod p^M, discs c = 1..p-1, a + b <= T."""

    __slots__ = ("p", "prec", "T", "data")

    def __init__(self, p, prec, T, data=None):
        n = len(_pairs(T)[0])
        if data is None:
            data = np.zeros((p - 1, n), dtype=np.int64)
        else:
            data = np.asarray(data, dtype=np.int64) % p**prec
            assert data.shape == (p - 1, n)
        data.flags.writeable = False
        self.p = p
        self.prec = prec
        self.T = T
        self.data = data

    @classmethod
    def from_entries(cls, p, prec, T, entries):
        """entries: iterable of (disc, a, b, value)."""
        n = len(_pairs(T)[0])
        _, pos = _pairs(T)
        data = np.zeros((p - 1, n), dtype=np.int64)
        for c, a, b, v in entries:
            assert 1 <= c % p <= p - 1
            data[c % p - 1, pos[(a, b)]] = v % p**prec
        return cls(p, prec, T, data)

    def m(self, c, a, b):
        _, pos = _pairs(self.T)
        return int(self.data[c % self.p - 1, pos[(a, b)]])

    def _like(self, data):
        return MomentDist2(self.p, self.prec, self.T, data)

    def zero_like(self):
        return MomentDist2(self.p, self.prec, self.T)

    def _compat(self, other):
        if (self.p, self.prec, self.T) != (other.p, other.prec, other.T):
            raise PrecisionMismatch(
                f"({self.p},{self.prec},{self.T}) vs ({other.p},{other.prec},{other.T})")

    def __add__(self, other):
        self._compat(other)
        return self._like(self.data + other.data)

    def __sub__(self, other):
        self._compat(other)
        return self._like(self.data - other.data)

    def __neg__(self):
        return self._like(-self.data)

    def scale(self, r):
        return self._like(self.data * (int(r) % self.p**self.prec))

    def is_zero(self):
        return not self.data.any()

    def __eq__(self, other):
        if not isinstance(other, MomentDist2):
            return NotImplemented
        return ((self.p, self.prec, self.T) == (other.p, other.prec, other.T)
                and np.array_equal(self.data, other.data))

    def __hash__(self):
        return hash((self.p, self.prec, self.T, self.data.tobytes()))

    def __repr__(self):
        nz = int(np.count_nonzero(self.data))
        return f"MomentDist2(p={self.p}, M={self.prec}, T={self.T}, {nz} nonzero)"


def act_S0(mu, g, tame=1):
    """Right action of g in S0(tame * p) on a two-variable distribution.

    Exact on each degree stratum; the disc index transforms by the
    inverse of the upper-left entry.
    """
    p = mu.p
    _check_s0(g, tame * p)
    mod = p**mu.prec
    # The action factors through the entries mod tame * p^prec (tag, disc
    # and moment transforms all reduce); canonical representatives keep the
    # block cache effective when paths carry automorph-sized entries.
    g = tuple(x % (tame * mod) for x in g)
    A = g[0]
    Ainv = pow(A, -1, p)
    src_rows = np.array([(c * Ainv) % p - 1 for c in range(1, p)])
    src = mu.data[src_rows, :]
    out = np.zeros_like(mu.data)
    blocks = _act_blocks(g, p, mu.prec, mu.T)
    for d in range(mu.T + 1):
        cols = list(_stratum_cols(mu.T, d))
        out[:, cols] = (src[:, cols] @ blocks[d].T) % mod
    return mu._like(out)


class MomentDist1:
    """Moments m_c(n) mod p^M over unit discs, n <= Tprime."""

    __slots__ = ("p", "prec", "Tp", "data")

    def __init__(self, p, prec, Tp, data=None):
        if data is None:
            data = np.zeros((p - 1, Tp + 1), dtype=np.int64)
        else:
            data = np.asarray(data, dtype=np.int64) % p**prec
            assert data.shape == (p - 1, Tp + 1)
        data.flags.writeable = False
        self.p = p
        self.prec = prec
        self.Tp = Tp
        self.data = data

    def m(self, c, n):
        return int(self.data[c % self.p - 1, n])

    def _like(self, data, Tp=None):
        return MomentDist1(self.p, self.prec, self.Tp if Tp is None else Tp, data)

    def zero_like(self):
        return MomentDist1(self.p, self.prec, self.Tp)

    def _compat(self, other):
        if (self.p, self.prec, self.Tp) != (other.p, other.prec, other.Tp):
            raise PrecisionMismatch(
                f"({self.p},{self.prec},{self.Tp}) vs ({other.p},{other.prec},{other.Tp})")

    def __add__(self, other):
        self._compat(other)
        return self._like(self.data + other.data)

    def __sub__(self, other):
        self._compat(other)
        return self._like(self.data - other.data)

    def __neg__(self):
        return self._like(-self.data)

    def scale(self, r):
        return self._like(self.data * (int(r) % self.p**self.prec))

    def is_zero(self):
        return not self.data.any()

    def __eq__(self, other):
        if not isinstance(other, MomentDist1):
            return NotImplemented
        return ((self.p, self.prec, self.Tp) == (other.p, other.prec, other.Tp)
                and np.array_equal(self.data, other.data))

    def __hash__(self):
        return hash((self.p, self.prec, self.Tp, self.data.tobytes()))

    def __repr__(self):
        nz = int(np.count_nonzero(self.data))
        return f"MomentDist1(p={self.p}, M={self.prec}, T'={self.Tp}, {nz} nonzero)"


def dirac(s, p, prec, Tp):
    """Point mass at the integer s; zero when p divides s."""
    out = MomentDist1(p, prec, Tp)
    if s % p == 0:
        return out
    mod = p**prec
    data = np.zeros((p - 1, Tp + 1), dtype=np.int64)
    data[s % p - 1, :] = [pow(s, n, mod) for n in range(Tp + 1)]
    return MomentDist1(p, prec, Tp, data)


def convolve(nu1, nu2):
    """Multiplicative convolution on the units.

    Twisted moments multiply: for any character omega of the disc group,
    sum_c omega(c) m_c(n) is multiplicative in the two factors.
    """
    nu1._compat(nu2)
    p, mod = nu1.p, nu1.p**nu1.prec
    data = np.zeros((p - 1, nu1.Tp + 1), dtype=np.int64)
    for c1 in range(1, p):
        row1 = nu1.data[c1 - 1]
        if not row1.any():
            continue
        for c2 in range(1, p):
            c = (c1 * c2) % p
            data[c - 1] = (data[c - 1] + row1 * nu2.data[c2 - 1]) % mod
    return MomentDist1(p, nu1.prec, nu1.Tp, data)


def sigma_moments(nu):
    """Push forward along t -> t^2; moments appear at doubled index."""
    p = nu.p
    Tp = nu.Tp // 2
    data = np.zeros((p - 1, Tp + 1), dtype=np.int64)
    for c in range(1, p):
        c2 = (c * c) % p
        data[c2 - 1] = (data[c2 - 1] + nu.data[c - 1, 0:2 * Tp + 1:2]) % p**nu.prec
    return MomentDist1(p, nu.prec, Tp, data)


class DistN:
    """Finite formal sum of tame tags with one-variable distributions."""

    __slots__ = ("N", "p", "prec", "Tp", "comps")

    def __init__(self, N, p, prec, Tp, comps=None):
        self.N = N
        self.p = p
        self.prec = prec
        self.Tp = Tp
        clean = {}
        for t, nu in (comps or {}).items():
            assert gcd(t, N) == 1 or N == 1
            assert (nu.p, nu.prec, nu.Tp) == (p, prec, Tp)
            if not nu.is_zero():
                clean[t % N] = nu
        self.comps = clean

    def zero_like(self):
        return DistN(self.N, self.p, self.prec, self.Tp)

    def component(self, t):
        return self.comps.get(t % self.N,
                              MomentDist1(self.p, self.prec, self.Tp))

    def _compat(self, other):
        if (self.N, self.p, self.prec, self.Tp) != (other.N, other.p,
                                                    other.prec, other.Tp):
            raise PrecisionMismatch("tame/moment profiles differ")

    def __add__(self, other):
        self._compat(other)
        comps = dict(self.comps)
        for t, nu in other.comps.items():
            comps[t] = comps[t] + nu if t in comps else nu
        return DistN(self.N, self.p, self.prec, self.Tp, comps)

    def __sub__(self, other):
        return self + other.scale(-1)

    def __neg__(self):
        return self.scale(-1)

    def scale(self, r):
        return DistN(self.N, self.p, self.prec, self.Tp,
                     {t: nu.scale(r) for t, nu in self.comps.items()})

    def is_zero(self):
        return not self.comps

    def __eq__(self, other):
        if not isinstance(other, DistN):
            return NotImplemented
        return ((self.N, self.p, self.prec, self.Tp) ==
                (other.N, other.p, other.prec, other.Tp)
                and self.comps == other.comps)

    def __hash__(self):
        return hash((self.N, self.p, self.prec, self.Tp,
                     tuple(sorted((t, hash(nu)) for t, nu in self.comps.items()))))

    def __repr__(self):
        return (f"DistN(N={self.N}, p={self.p}, tags={sorted(self.comps)})")


def dirac_distN(s, N, p, prec, Tp):
    """Point mass at s on the N-tame, p-wild unit group.

    Zero when s shares a factor with Np, following the convention that
    point masses at non-units vanish.
    """
    if gcd(s, N) != 1 or s % p == 0:
        return DistN(N, p, prec, Tp)
    return DistN(N, p, prec, Tp, {s % N: dirac(s, p, prec, Tp)})


def convolve_distN(d1, d2):
    d1._compat(d2)
    out = d1.zero_like()
    for t1, n1 in d1.comps.items():
        for t2, n2 in d2.comps.items():
            piece = DistN(d1.N, d1.p, d1.prec, d1.Tp,
                          {(t1 * t2) % d1.N: convolve(n1, n2)})
            out = out + piece
    return out


def sigma_distN(d):
    """The squaring pushforward on tags and discs simultaneously."""
    comps = {}
    Tp = d.Tp // 2
    out = DistN(d.N, d.p, d.prec, Tp, comps)
    for t, nu in d.comps.items():
        piece = DistN(d.N, d.p, d.prec, Tp, {(t * t) % d.N: sigma_moments(nu)})
        out = out + piece
    return out


class TaggedDist2:
    """Tame-tagged two-variable distribution: the symbol value module.

    The semigroup action acts on each component and multiplies the tag
    by the upper-left entry mod N.
    """

    __slots__ = ("N", "p", "prec", "T", "comps")

    def __init__(self, N, p, prec, T, comps=None):
        self.N = N
        self.p = p
        self.prec = prec
        self.T = T
        clean = {}
        for t, mu in (comps or {}).items():
            assert gcd(t, N) == 1 or N == 1
            assert (mu.p, mu.prec, mu.T) == (p, prec, T)
            if not mu.is_zero():
                clean[t % N] = mu
        self.comps = clean

    def zero_like(self):
        return TaggedDist2(self.N, self.p, self.prec, self.T)

    def component(self, t):
        return self.comps.get(t % self.N,
                              MomentDist2(self.p, self.prec, self.T))

    def _compat(self, other):
        if (self.N, self.p, self.prec, self.T) != (other.N, other.p,
                                                   other.prec, other.T):
            raise PrecisionMismatch("tame/moment profiles differ")

    def __add__(self, other):
        self._compat(other)
        comps = dict(self.comps)
        for t, mu in other.comps.items():
            comps[t] = comps[t] + mu if t in comps else mu
        return TaggedDist2(self.N, self.p, self.prec, self.T, comps)

    def __sub__(self, other):
        return self + other.scale(-1)

    def __neg__(self):
        return self.scale(-1)

    def scale(self, r):
        return TaggedDist2(self.N, self.p, self.prec, self.T,
                           {t: mu.scale(r) for t, mu in self.comps.items()})

    def act(self, g):
        out = self.zero_like()
        for t, mu in self.comps.items():
            piece = TaggedDist2(self.N, self.p, self.prec, self.T,
                                {(g[0] * t) % self.N: act_S0(mu, g, tame=self.N)})
            out = out + piece
        return out

    def is_zero(self):
        return not self.comps

    def __eq__(self, other):
        if not isinstance(other, TaggedDist2):
            return NotImplemented
        return ((self.N, self.p, self.prec, self.T) ==
                (other.N, other.p, other.prec, other.T)
                and self.comps == other.comps)

    def __repr__(self):
        return f"TaggedDist2(N={self.N}, p={self.p}, tags={sorted(self.comps)})"


def scalar_action(nu, value):
    """Module action of a one-variable tagged distribution on a value.

    Multiplication on the group: x^a y^b picks up t^(a+b), so the n-th
    moments of nu weight the degree strata.  Requires nu's moment range
    to cover the value's total degree.
    """
    if nu.Tp < value.T:
        raise InsufficientMoments(
            f"need scalar moments to degree {value.T}, have {nu.Tp}")
    if (nu.N, nu.p, nu.prec) != (value.N, value.p, value.prec):
        raise PrecisionMismatch("tame/moment profiles differ")
    p = value.p
    mod = p**value.prec
    out = value.zero_like()
    for t1, one in nu.comps.items():
        for t2, two in value.comps.items():
            data = np.zeros_like(two.data)
            for lam in range(1, p):
                col = one.data[lam - 1]
                if not col.any():
                    continue
                # degree weight per flat position
                weights = np.array([int(col[a + b]) for a, b in _pairs(value.T)[0]],
                                   dtype=np.int64)
                for c1 in range(1, p):
                    c = (c1 * lam) % p
                    data[c - 1] = (data[c - 1] + two.data[c1 - 1] * weights) % mod
            piece = TaggedDist2(value.N, p, value.prec, value.T,
                                {(t1 * t2) % value.N: MomentDist2(p, value.prec, value.T, data)})
            out = out + piece
    return out


class ArithWeight:
    """Weight k >= 0 with a character split into tame and wild parts."""

    __slots__ = ("k", "chi", "p", "chi_N", "chi_p")

    def __init__(self, k, chi, p):
        assert k >= 0
        tame, wild = chi.factor(p)
        if wild.modulus not in (1, p):
            raise ValueError(f"wild part must have modulus dividing {p}, "
                             f"got {wild.modulus}")
        self.k = k
        self.chi = chi
        self.p = p
        self.chi_N = tame
        self.chi_p = wild

    def doubled(self):
        """The sigma-composed signature (2k, chi^2)."""
        return ArithWeight(2 * self.k, self.chi.squared(), self.p)

    def __repr__(self):
        return f"ArithWeight(k={self.k}, chi mod {self.chi.modulus}, p={self.p})"


def eval_weight(d, kappa):
    """Integrate chi(t) * t_p^k against a tagged one-variable distribution."""
    if kappa.k > d.Tp:
        raise InsufficientMoments(f"weight {kappa.k} exceeds moment range {d.Tp}")
    mod = d.p**d.prec
    tot = 0
    for t, nu in d.comps.items():
        ct = kappa.chi_N(t) if d.N > 1 else kappa.chi_N(1)
        if ct == 0:
            continue
        inner = 0
        for c in range(1, d.p):
            cc = kappa.chi_p(c)
            if cc:
                inner += cc * nu.m(c, kappa.k)
        tot += ct * inner
    return tot % mod


class MetaCoeff:
    """Pure tensor left x right of tagged distributions.

    Evaluation at a signature (k, chi) sends the left factor through the
    squaring map first: value = kappa(left) * kappa~(right) with
    kappa = kappa~ o sigma of signature (2k, chi^2).
    """

    __slots__ = ("left", "right")

    def __init__(self, left, right):
        assert isinstance(left, DistN) and isinstance(right, DistN)
        self.left = left
        self.right = right

    def __add__(self, other):
        assert self.left == other.left, "sum requires matching left factors"
        return MetaCoeff(self.left, self.right + other.right)

    def __sub__(self, other):
        assert self.left == other.left, "difference requires matching left factors"
        return MetaCoeff(self.left, self.right - other.right)

    def __neg__(self):
        return MetaCoeff(self.left, -self.right)

    def scale(self, r):
        return MetaCoeff(self.left, self.right.scale(r))

    def is_zero(self):
        return self.right.is_zero()

    def canonicalize(self):
        """Move the left factor through sigma into the right factor."""
        moved = convolve_distN(sigma_distN(self.left), self.right)
        one = dirac_distN(1, moved.N, moved.p, moved.prec, 2 * moved.Tp)
        return MetaCoeff(one, moved)

    def __eq__(self, other):
        if not isinstance(other, MetaCoeff):
            return NotImplemented
        return self.left == other.left and self.right == other.right

    def __repr__(self):
        return f"MetaCoeff(left tags {sorted(self.left.comps)}, right tags {sorted(self.right.comps)})"


def eval_weight_meta(mc, kappa_tilde):
    kappa = kappa_tilde.doubled()
    mod = mc.right.p**mc.right.prec
    return (eval_weight(mc.left, kappa) * eval_weight(mc.right, kappa_tilde)) % mod


def meta_zero(N, p, prec, Tp):
    """The zero coefficient with the standard identity left factor.

    The left factor's moment range is doubled: left evaluations go
    through the squaring map, which halves the range.
    """
    one = dirac_distN(1, N, p, prec, 2 * Tp)
    return MetaCoeff(one, DistN(N, p, prec, Tp))


def specialize(value, kappa):
    """Project a tagged two-variable distribution to a weight-k polynomial.

    Coefficient of the i-th divided basis vector:
    (-1)^i * sum_t chi_N(t) * sum_c chi_p(c) * m_{t,c}(k - i, i).
    """
    from .modsym import SymPoly
    k = kappa.k
    if k > value.T:
        raise InsufficientMoments(f"weight {k} exceeds moment degree {value.T}")
    p = value.p
    mod = p**value.prec
    coeffs = [0] * (k + 1)
    for t, mu in value.comps.items():
        ct = kappa.chi_N(t) if value.N > 1 else kappa.chi_N(1)
        if ct == 0:
            continue
        for i in range(k + 1):
            inner = 0
            for c in range(1, p):
                cc = kappa.chi_p(c)
                if cc:
                    inner += cc * mu.m(c, k - i, i)
            coeffs[i] = (coeffs[i] + (-1) ** i * ct * inner) % mod
    return SymPoly(value.N * p, k, coeffs, kappa.chi, "L", ("zpm", p, value.prec))


def JQ_dist(mu, Q):
    """Pushforward of a two-variable distribution along the form Q.

    Q must be congruent to a*x^2 mod p on the support (p divides the two
    trailing coefficients), so discs map by c -> a c^2; precision halves.
    """
    qa, qb, qc = Q.triple()
    p = mu.p
    assert qb % p == 0 and qc % p == 0, "form must reduce to a*x^2 mod p"
    assert qa % p != 0
    Tp = mu.T // 2
    mod = p**mu.prec
    data = np.zeros((p - 1, Tp + 1), dtype=np.int64)
    _, pos = _pairs(mu.T)
    for n in range(Tp + 1):
        terms = []
        for i in range(n + 1):
            for j in range(n - i + 1):
                kk = n - i - j
                coeff = (factorial(n) // (factorial(i) * factorial(j) * factorial(kk))
                         * pow(qa, i, mod) * pow(qb, j, mod) * pow(qc, kk, mod)) % mod
                terms.append((coeff, pos[(2 * i + j, j + 2 * kk)]))
        for cx in range(1, p):
            cout = (qa * cx * cx) % p
            tot = 0
            for coeff, flat in terms:
                tot += coeff * int(mu.data[cx - 1, flat])
            data[cout - 1, n] = (data[cout - 1, n] + tot) % mod
    return MomentDist1(p, mu.prec, Tp, data)


def tilde_JQ(value, Q):
    """Metaplectic J-coefficient of a tagged value at the form Q.

    left = point mass at 1; right = sum over tags t of the pushforward
    of the t-component, tagged by t^2 * a_Q mod N.
    """
    N, p, prec = value.N, value.p, value.prec
    Tp = value.T // 2
    qa = Q.triple()[0]
    right = DistN(N, p, prec, Tp)
    for t, mu in value.comps.items():
        piece = DistN(N, p, prec, Tp,
                      {(t * t * qa) % N: JQ_dist(mu, Q)})
        right = right + piece
    # The left factor carries twice the right factor's moment range: its
    # evaluations go through the squaring map, which halves the range.
    return MetaCoeff(dirac_distN(1, N, p, prec, 2 * Tp), right)


# ------------------------------------------------------------------- JSON

def moments2_to_json(mu):
    """Canonical moment-table document, entries ordered by (disc, a, b)."""
    pairs, _ = _pairs(mu.T)
    ms = []
    for c in range(1, mu.p):
        for a, b in pairs:
            ms.append({"disc": c, "a": a, "b": b, "val": mu.m(c, a, b)})
    return {"p": mu.p, "M": mu.prec, "T": mu.T, "moments": ms}


def moments2_from_json(obj):
    return MomentDist2.from_entries(
        obj["p"], obj["M"], obj["T"],
        [(e["disc"], e["a"], e["b"], e["val"]) for e in obj["moments"]])


def moments2_dumps(mu):
    return json.dumps(moments2_to_json(mu), sort_keys=True, separators=(",", ":"))


def random_moments2(rng, p, prec, T):
    """Deterministic pseudo-random table for property tests."""
    mod = p**prec
    n = len(_pairs(T)[0])
    data = np.array([[rng.randrange(mod) for _ in range(n)]
                     for _ in range(p - 1)], dtype=np.int64)
    return MomentDist2(p, prec, T, data)
