"""Base exact arithmetic: Kronecker symbols, truncated p-adics, quadratic
Dirichlet characters, rational cusps and continued-fraction paths.

Everything here is integer or Fraction arithmetic; no floating point.
"""

from fractions import Fraction
from math import gcd, isqrt

from .errors import NonUnimodular, PrecisionMismatch


def xgcd(a, b):
    """Return (g, x, y) with a*x + b*y = g = gcd(a, b), g >= 0."""
    old_r, r = a, b
    old_s, s = 1, 0
    old_t, t = 0, 1
    while r:
        q = old_r // r
        old_r, r = r, old_r - q * r
        old_s, s = s, old_s - q * s
        old_t, t = t, old_t - q * t
    if old_r < 0:
        old_r, old_s, old_t = -old_r, -old_s, -old_t
    return old_r, old_s, old_t


def crt(r1, m1, r2, m2):
    """Residue mod m1*m2 congruent to r1 mod m1 and r2 mod m2 (coprime moduli)."""
    g, u, _ = xgcd(m1, m2)
    assert g == 1
    return (r1 + (r2 - r1) * u % m2 * m1) % (m1 * m2)


def kronecker(a, n):
    """Extended Kronecker symbol (a/n), defined for all integers a, n.

    (a/0) = 0 for every a, so the symbol is totally multiplicative in the
    bottom argument with no excluded cases.
    """
    if n == 0:
        return 0
    sign = 1
    if n < 0:
        n = -n
        if a < 0:
            sign = -sign
    # peel off factors of 2: (a/2) depends on a mod 8
    while n % 2 == 0:
        n //= 2
        if a % 2 == 0:
            return 0
        if a % 8 in (3, 5):
            sign = -sign
    # now n odd positive: Jacobi symbol by reciprocity
    a %= n
    while a:
        while a % 2 == 0:
            a //= 2
            if n % 8 in (3, 5):
                sign = -sign
        a, n = n, a
        if a % 4 == 3 and n % 4 == 3:
            sign = -sign
        a %= n
    return sign if n == 1 else 0


def sign_a_plus_b_sqrt(a, b, d):
    """Exact sign of a + b*sqrt(d) for integers a, b and d >= 0."""
    assert d >= 0
    r = isqrt(d)
    if r * r == d:
        v = a + b * r
        return (v > 0) - (v < 0)
    if b == 0:
        return (a > 0) - (a < 0)
    if a == 0:
        return (b > 0) - (b < 0)
    if a > 0 and b > 0:
        return 1
    if a < 0 and b < 0:
        return -1
    # opposite signs: compare a^2 with b^2*d
    lhs, rhs = a * a, b * b * d
    if lhs == rhs:
        return 0
    bigger_is_a = lhs > rhs
    return ((a > 0) - (a < 0)) if bigger_is_a else ((b > 0) - (b < 0))


# ---------------------------------------------------------------------------
# 2x2 integer matrices as row-major 4-tuples (a, b, c, d)

MAT_ID = (1, 0, 0, 1)


def mat_mul(g, h):
    a, b, c, d = g
    e, f, u, v = h
    return (a * e + b * u, a * f + b * v, c * e + d * u, c * f + d * v)


def mat_det(g):
    return g[0] * g[3] - g[1] * g[2]


def mat_neg(g):
    return (-g[0], -g[1], -g[2], -g[3])


def mat_inv(g):
    """Inverse of a unimodular integer matrix."""
    det = mat_det(g)
    if det == 1:
        return (g[3], -g[1], -g[2], g[0])
    if det == -1:
        return (-g[3], g[1], g[2], -g[0])
    raise NonUnimodular(f"determinant {det}")


def mat_pow(g, n):
    if n < 0:
        return mat_pow(mat_inv(g), -n)
    out = MAT_ID
    base = g
    while n:
        if n & 1:
            out = mat_mul(out, base)
        base = mat_mul(base, base)
        n >>= 1
    return out


# ---------------------------------------------------------------------------
# truncated p-adic numbers


class PadicApprox:
    """Element of Z/p^M viewed as a p-adic approximation.

    Immutable by convention.  Arithmetic requires both operands to share
    (p, M); valuation(0) = M.
    """

    __slots__ = ("residue", "p", "M")

    def __init__(self, value, p, M):
        assert p >= 5 and M >= 1
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "M", M)
        object.__setattr__(self, "residue", value % p**M)

    def __setattr__(self, name, value):
        raise AttributeError("PadicApprox is immutable")

    def _check(self, other):
        if isinstance(other, PadicApprox):
            if other.p != self.p or other.M != self.M:
                raise PrecisionMismatch(f"({self.p},{self.M}) vs ({other.p},{other.M})")
            return other.residue
        if isinstance(other, int):
            return other
        return NotImplemented

    def __add__(self, other):
        r = self._check(other)
        if r is NotImplemented:
            return NotImplemented
        return PadicApprox(self.residue + r, self.p, self.M)

    __radd__ = __add__

    def __sub__(self, other):
        r = self._check(other)
        if r is NotImplemented:
            return NotImplemented
        return PadicApprox(self.residue - r, self.p, self.M)

    def __rsub__(self, other):
        r = self._check(other)
        if r is NotImplemented:
            return NotImplemented
        return PadicApprox(r - self.residue, self.p, self.M)

    def __mul__(self, other):
        r = self._check(other)
        if r is NotImplemented:
            return NotImplemented
        return PadicApprox(self.residue * r, self.p, self.M)

    __rmul__ = __mul__

    def __neg__(self):
        return PadicApprox(-self.residue, self.p, self.M)

    def __pow__(self, n):
        if n < 0:
            return self.inverse() ** (-n)
        return PadicApprox(pow(self.residue, n, self.p**self.M), self.p, self.M)

    def inverse(self):
        if self.residue % self.p == 0:
            raise ZeroDivisionError("non-unit in Z/p^M")
        return PadicApprox(pow(self.residue, -1, self.p**self.M), self.p, self.M)

    def valuation(self):
        """p-adic valuation, capped at M for the zero residue."""
        if self.residue == 0:
            return self.M
        v = 0
        r = self.residue
        while r % self.p == 0:
            r //= self.p
            v += 1
        return v

    def is_zero(self):
        return self.residue == 0

    def __eq__(self, other):
        if isinstance(other, PadicApprox):
            return (self.p, self.M, self.residue) == (other.p, other.M, other.residue)
        if isinstance(other, int):
            return self.residue == other % self.p**self.M
        return NotImplemented

    def __hash__(self):
        return hash((self.p, self.M, self.residue))

    def __repr__(self):
        return f"{self.residue} + O({self.p}^{self.M})"


def teichmuller(a, p, M):
    """Teichmuller lift of a mod p, as a residue mod p^M (0 if p | a)."""
    x = a % p
    if x == 0:
        return 0
    pm = p**M
    x %= pm
    while True:
        y = pow(x, p, pm)
        if y == x:
            return x
        x = y


# ---------------------------------------------------------------------------
# quadratic Dirichlet characters, stored as value tables


class DirichletChar:
    """Dirichlet character with values in {-1, 0, 1}.

    Only trivial and quadratic characters arise here, so values are plain
    ints.  ``wild`` optionally records which prime carries the wild part,
    enabling the tame/wild factorization used for weight characters.
    """

    __slots__ = ("modulus", "table", "wild")

    def __init__(self, modulus, table, wild=None):
        assert modulus >= 1
        self.modulus = modulus
        # full period table, zero on non-units
        self.table = tuple(
            table[a] if gcd(a, modulus) == 1 else 0 for a in range(modulus)
        )
        self.wild = wild

    @classmethod
    def trivial(cls, modulus=1, wild=None):
        return cls(modulus, {a: 1 for a in range(modulus)}, wild=wild)

    @classmethod
    def from_kronecker(cls, D, modulus=None, wild=None):
        """Quadratic character a -> kronecker(D, a), period |D| (or 4|D|)."""
        m = modulus if modulus is not None else (abs(D) if D % 4 in (0, 1) else 4 * abs(D))
        if m == 0:
            m = 1
        return cls(m, {a: kronecker(D, a) for a in range(m)}, wild=wild)

    def __call__(self, a):
        return self.table[a % self.modulus]

    def __eq__(self, other):
        if not isinstance(other, DirichletChar):
            return NotImplemented
        return self.modulus == other.modulus and self.table == other.table

    def __hash__(self):
        return hash((self.modulus, self.table))

    def __mul__(self, other):
        m = self.modulus * other.modulus // gcd(self.modulus, other.modulus)
        table = {a: self(a) * other(a) for a in range(m)}
        wild = self.wild if self.wild is not None else other.wild
        return DirichletChar(m, table, wild=wild)

    def squared(self):
        return self * self

    def factor(self, p):
        """Split into (tame, wild) parts with wild modulus the p-part."""
        mp = 1
        m = self.modulus
        while m % p == 0:
            m //= p
            mp *= p
        mN = self.modulus // mp
        if mN == 1:
            return DirichletChar.trivial(1), DirichletChar(mp, dict(enumerate(self.table)), wild=p)
        if mp == 1:
            return DirichletChar(mN, dict(enumerate(self.table))), DirichletChar.trivial(1, wild=p)
        tame = {a: self(crt(a, mN, 1, mp)) for a in range(mN) if gcd(a, mN) == 1}
        wild = {a: self(crt(1, mN, a, mp)) for a in range(mp) if gcd(a, mp) == 1}
        return DirichletChar(mN, tame), DirichletChar(mp, wild, wild=p)

    @property
    def tame_part(self):
        assert self.wild is not None
        return self.factor(self.wild)[0]

    @property
    def wild_part(self):
        assert self.wild is not None
        return self.factor(self.wild)[1]

    def __repr__(self):
        return f"DirichletChar(mod {self.modulus})"


def char_eval(chi, a):
    """Evaluate a character, zero on non-units."""
    return chi(a)


# ---------------------------------------------------------------------------
# rational cusps and continued-fraction paths


class RationalCusp:
    """Point of P^1(Q): a reduced fraction num/den, with infinity = 1/0."""

    __slots__ = ("num", "den")

    def __init__(self, num, den=1):
        if den == 0:
            num = 1
        else:
            g = gcd(num, den)
            if g:
                num //= g
                den //= g
            if den < 0:
                num, den = -num, -den
        object.__setattr__(self, "num", num)
        object.__setattr__(self, "den", den)

    def __setattr__(self, name, value):
        raise AttributeError("RationalCusp is immutable")

    @classmethod
    def infinity(cls):
        return cls(1, 0)

    @classmethod
    def from_fraction(cls, q):
        q = Fraction(q)
        return cls(q.numerator, q.denominator)

    @property
    def is_infinity(self):
        return self.den == 0

    def as_fraction(self):
        if self.is_infinity:
            raise ValueError("infinite cusp")
        return Fraction(self.num, self.den)

    def apply(self, g):
        """Moebius action of g = (a, b, c, d): column vector convention."""
        a, b, c, d = g
        return RationalCusp(a * self.num + b * self.den, c * self.num + d * self.den)

    def __eq__(self, other):
        if not isinstance(other, RationalCusp):
            return NotImplemented
        return self.num == other.num and self.den == other.den

    def __hash__(self):
        return hash((self.num, self.den))

    def sort_key(self):
        return (self.den == 0, self.num, self.den)

    def __repr__(self):
        if self.is_infinity:
            return "Cusp(oo)"
        return f"Cusp({self.num}/{self.den})" if self.den != 1 else f"Cusp({self.num})"


def cfrac_convergents(num, den):
    """Convergents of num/den: list of (p_j, q_j), starting with (1, 0)."""
    assert den > 0 and gcd(num, den) == 1
    convs = [(1, 0)]
    p0, q0 = 1, 0
    p1, q1 = None, None
    a, b = num, den
    first = True
    while b:
        # floor division keeps partial quotients >= 1 after the first
        q, r = divmod(a, b)
        a, b = b, r
        if first:
            p1, q1 = q, 1
            first = False
        else:
            p0, q0, p1, q1 = p1, q1, q * p1 + p0, q * q1 + q0
        convs.append((p1, q1))
    assert (p1, q1) == (num, den)
    return convs


def cfrac_path(cusp):
    """Unimodular path from oo to the cusp through its convergents.

    Returns matrices whose columns are consecutive convergents
    (previous, next); each has determinant +-1 and the column cusps
    telescope from infinity to the target.
    """
    if cusp.is_infinity:
        raise ValueError("no path from infinity to itself")
    convs = cfrac_convergents(cusp.num, cusp.den)
    return [
        (convs[j][0], convs[j + 1][0], convs[j][1], convs[j + 1][1])
        for j in range(len(convs) - 1)
    ]


def sl2_chain(cusp):
    """SL2(Z) matrices g_j with {cusp} - {oo} = -sum_j ({g_j 0} - {g_j oo}).

    Columns of g_j are (conv_j, +-conv_{j-1}), the sign fixed so det = +1;
    flipping a column's sign leaves its cusp unchanged.
    """
    if cusp.is_infinity:
        raise ValueError("no chain for the infinite cusp")
    convs = cfrac_convergents(cusp.num, cusp.den)
    chain = []
    for j in range(1, len(convs)):
        (pp, qq), (pn, qn) = convs[j - 1], convs[j]
        g = (pn, pp, qn, qq)
        if mat_det(g) == -1:
            g = (pn, -pp, qn, -qq)
        assert mat_det(g) == 1
        chain.append(g)
    return chain
