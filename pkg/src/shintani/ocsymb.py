"""Overconvergent modular symbols with moment-distribution values.

The value module is graded by total moment degree and every operator in
sight (the congruence group, Hecke sums, the involution) is homogeneous,
so the solution space, the U_p matrix and the slope theory all decompose
stratum by stratum.  Solving and linear algebra happen per stratum; a
general symbol is a sum of stratum-supported pieces.
"""

from __future__ import annotations

import json
from fractions import Fraction
from functools import lru_cache
from math import gcd

import numpy as np
import sympy

from . import manin
from .arith import crt
from .dist import (
    MomentDist2,
    TaggedDist2,
    _act_blocks,
    _pairs,
    _stratum_cols,
    dirac_distN,
    scalar_action,
    specialize,
)
from .errors import (
    CriticalSlope,
    NoConvergence,
    NotEigen,
    SlopeGapUnresolvable,
)
from .linalg import (
    berkowitz_charpoly,
    lower_convex_hull,
    poly_mul_mod,
    zpm_kernel,
    zpm_solve,
)
from .modsym import ModularSymbol, SymPoly


def _units(N):
    if N == 1:
        return (0,)
    return tuple(t for t in range(N) if gcd(t, N) == 1)


class OCSymbol:
    """Generator values in the tagged two-variable distribution module."""

    __slots__ = ("level", "N", "p", "prec", "T", "values")

    def __init__(self, level, N, p, prec, T, values):
        assert level == N * p
        self.level = level
        self.N = N
        self.p = p
        self.prec = prec
        self.T = T
        self.values = tuple(values)
        assert len(self.values) == manin.presentation(level).ngens

    def zero_like(self):
        z = self.values[0].zero_like()
        return OCSymbol(self.level, self.N, self.p, self.prec, self.T,
                        [z] * len(self.values))

    def __add__(self, other):
        return OCSymbol(self.level, self.N, self.p, self.prec, self.T,
                        [a + b for a, b in zip(self.values, other.values)])

    def __sub__(self, other):
        return OCSymbol(self.level, self.N, self.p, self.prec, self.T,
                        [a - b for a, b in zip(self.values, other.values)])

    def scale(self, r):
        return OCSymbol(self.level, self.N, self.p, self.prec, self.T,
                        [v.scale(r) for v in self.values])

    def is_zero(self):
        return all(v.is_zero() for v in self.values)

    def evaluate(self, divisor):
        if hasattr(divisor, "pairs"):
            divisor = divisor.pairs
        return manin.evaluate_values(self.level, self.values, divisor)

    def flat(self):
        """Concatenated moment vector: generator, tag, disc, (a, b) order."""
        tags = _units(self.N)
        out = []
        for v in self.values:
            for t in tags:
                out.extend(int(x) for x in v.component(t).data.reshape(-1))
        return np.array(out, dtype=np.int64)

    def flat_stratum(self, d):
        tags = _units(self.N)
        cols = list(_stratum_cols(self.T, d))
        out = []
        for v in self.values:
            for t in tags:
                out.extend(int(x)
                           for x in v.component(t).data[:, cols].reshape(-1))
        return np.array(out, dtype=np.int64)

    def check_relations(self):
        for rel in manin.presentation(self.level).relation_terms():
            acc = self.values[0].zero_like()
            for c, mat, coeff in rel:
                acc = acc + self.values[c].act(mat).scale(coeff)
            if not acc.is_zero():
                return False
        return True

    def __repr__(self):
        return (f"OCSymbol(level={self.level}, N={self.N}, p={self.p}, "
                f"M={self.prec}, T={self.T})")


def _from_stratum_flat(level, N, p, prec, T, d, vec):
    """Rebuild a stratum-supported symbol from flattened coordinates."""
    tags = _units(N)
    ngen = manin.presentation(level).ngens
    cols = list(_stratum_cols(T, d))
    per_tag = (p - 1) * (d + 1)
    per_gen = len(tags) * per_tag
    nmom = len(_pairs(T)[0])
    values = []
    for c in range(ngen):
        comps = {}
        for ti, t in enumerate(tags):
            start = c * per_gen + ti * per_tag
            block = np.asarray(vec[start:start + per_tag],
                               dtype=np.int64).reshape(p - 1, d + 1)
            data = np.zeros((p - 1, nmom), dtype=np.int64)
            data[:, cols] = block
            comps[t] = MomentDist2(p, prec, T, data)
        values.append(TaggedDist2(N, p, prec, T, comps))
    return OCSymbol(level, N, p, prec, T, values)


@lru_cache(maxsize=4096)
def _stratum_action_matrix(g, N, p, prec, T, d):
    """Flat-coordinate matrix of the value action on one stratum.

    Index order (tag, disc, moment): tags and discs multiply by the
    upper-left entry, moments by the binomial substitution block.
    """
    tags = _units(N)
    nt = len(tags)
    A = g[0]
    mod = p**prec
    V = np.asarray(_act_blocks(g, p, prec, T)[d], dtype=np.int64)
    tpos = {t: i for i, t in enumerate(tags)}
    tag_perm = np.zeros((nt, nt), dtype=np.int64)
    for i, t in enumerate(tags):
        tag_perm[tpos[(A * t) % N], i] = 1
    disc_perm = np.zeros((p - 1, p - 1), dtype=np.int64)
    for c_in in range(1, p):
        c_out = (c_in * A) % p
        disc_perm[c_out - 1, c_in - 1] = 1
    return np.kron(tag_perm, np.kron(disc_perm, V)) % mod


def _stratum_relation_matrix(level, N, p, prec, T, d):
    pres = manin.presentation(level)
    ngen = pres.ngens
    blockdim = len(_units(N)) * (p - 1) * (d + 1)
    mod = p**prec
    rows = []
    for rel in pres.relation_terms():
        block = np.zeros((blockdim, ngen * blockdim), dtype=np.int64)
        for c, mat, coeff in rel:
            W = _stratum_action_matrix(mat, N, p, prec, T, d)
            sl = slice(c * blockdim, (c + 1) * blockdim)
            block[:, sl] = (block[:, sl] + coeff * W) % mod
        rows.append(block)
    return np.vstack(rows)


class OCSpace:
    """Solved symbol space, basis grouped by moment stratum."""

    __slots__ = ("level", "N", "p", "prec", "T", "basis", "strata", "torsion",
                 "_stratum_flat")

    def __init__(self, level, N, p, prec, T, basis, strata, torsion):
        self.level = level
        self.N = N
        self.p = p
        self.prec = prec
        self.T = T
        self.basis = tuple(basis)
        self.strata = tuple(strata)
        self.torsion = tuple(torsion)
        self._stratum_flat = {}

    @property
    def dimension(self):
        return len(self.basis)

    def stratum_indices(self, d):
        return [i for i, s in enumerate(self.strata) if s == d]

    def stratum_matrix(self, d):
        """Columns are the stratum-d flats of the stratum-d basis symbols."""
        if d not in self._stratum_flat:
            cols = [self.basis[i].flat_stratum(d)
                    for i in self.stratum_indices(d)]
            self._stratum_flat[d] = (np.stack(cols, axis=1) if cols
                                     else np.zeros((0, 0), dtype=np.int64))
        return self._stratum_flat[d]

    def coordinates(self, sym):
        """Coordinates of a symbol in the basis, stratum by stratum."""
        out = np.zeros(self.dimension, dtype=np.int64)
        mod = self.p**self.prec
        for d in range(self.T + 1):
            idx = self.stratum_indices(d)
            target = sym.flat_stratum(d)
            if not idx:
                if np.any(target % mod):
                    return None
                continue
            x = zpm_solve(self.stratum_matrix(d), target, self.p, self.prec)
            if x is None:
                return None
            for j, i in enumerate(idx):
                out[i] = x[j]
        return out

    def combination(self, coeffs):
        assert self.basis
        acc = self.basis[0].zero_like()
        for c, b in zip(coeffs, self.basis):
            if int(c) % self.p**self.prec:
                acc = acc + b.scale(int(c))
        return acc


def solve_oc_space(Np, N, precision):
    """Exact solution space of the relations, solved per moment stratum.

    precision = (prec, T): values mod p^prec with moments of total degree
    up to T.  The returned basis symbols are stratum-supported and
    generate the full space; a nonzero torsion entry marks a generator
    only defined modulo a smaller power of p.
    """
    p = Np // N
    assert N * p == Np and gcd(p, N) == 1 and p >= 5 and sympy.isprime(p)
    prec, T = precision
    basis, strata, torsion = [], [], []
    for d in range(T + 1):
        A = _stratum_relation_matrix(Np, N, p, prec, T, d)
        kernel, tors = zpm_kernel(A, p, prec)
        for vec, v in zip(kernel, tors):
            basis.append(_from_stratum_flat(Np, N, p, prec, T, d, vec))
            strata.append(d)
            torsion.append(v)
    return OCSpace(Np, N, p, prec, T, basis, strata, torsion)


def oc_hecke_Tn(sym, n):
    reps = manin.hecke_reps(n, sym.level)
    vals = manin.apply_double_coset(sym.level, sym.values, reps)
    return OCSymbol(sym.level, sym.N, sym.p, sym.prec, sym.T, vals)


def oc_hecke_Up(sym):
    return oc_hecke_Tn(sym, sym.p)


def oc_hecke_Tll(sym, l):
    assert gcd(l, sym.level) == 1
    vals = manin.apply_double_coset(sym.level, sym.values, [(l, 0, 0, l)])
    return OCSymbol(sym.level, sym.N, sym.p, sym.prec, sym.T, vals)


def _invol_tagged(v):
    """diag(1,-1) on a value: moment (a,b) scales by (-1)^b, tag fixed."""
    pairs, _ = _pairs(v.T)
    signs = np.array([(-1) ** b for _, b in pairs], dtype=np.int64)
    comps = {t: MomentDist2(v.p, v.prec, v.T, mu.data * signs)
             for t, mu in v.comps.items()}
    return TaggedDist2(v.N, v.p, v.prec, v.T, comps)


def oc_involution(sym):
    vals = manin.apply_involution(sym.level, sym.values, _invol_tagged)
    return OCSymbol(sym.level, sym.N, sym.p, sym.prec, sym.T, vals)


def oc_sign_project(sym, sign):
    """(1 + sign * iota) / 2 applied to the symbol."""
    half = pow(2, -1, sym.p**sym.prec)
    flip = oc_involution(sym)
    if sign < 0:
        flip = flip.scale(-1)
    return (sym + flip).scale(half)


def disc_sector_project(sym, d):
    """Average of unit disc rotations on a stratum-d supported symbol.

    Rescaling the units by s acts on stratum d as s^d times a pure disc
    rotation; dividing the weight back out leaves the rotation, and
    averaging over s projects onto the rotation-invariant sector.
    Commutes with every Hecke operator and with the involution.
    """
    p, N = sym.p, sym.N
    mod = p**sym.prec
    acc = sym.zero_like()
    for c in range(1, p):
        s = crt(1, N, c, p) if N > 1 else c
        nu = dirac_distN(s, N, p, sym.prec, sym.T)
        weight = pow(pow(s, -1, mod), d, mod)
        moved = OCSymbol(sym.level, N, p, sym.prec, sym.T,
                         [scalar_action(nu, v) for v in sym.values])
        acc = acc + moved.scale(weight)
    return acc.scale(pow(p - 1, -1, mod))


def up_matrix(space, d=None, n=None):
    """Matrix of U_p (or T_n when n is given) on one stratum's basis.

    Operators are degree-homogeneous, so each stratum carries its own
    square matrix; d = None assembles the block diagonal over all strata.
    """
    if d is None:
        blocks = [up_matrix(space, dd, n) for dd in range(space.T + 1)]
        total = sum(b.shape[0] for b in blocks)
        out = np.zeros((total, total), dtype=np.int64)
        at = 0
        for b in blocks:
            w = b.shape[0]
            out[at:at + w, at:at + w] = b
            at += w
        return out
    idx = space.stratum_indices(d)
    if not idx:
        return np.zeros((0, 0), dtype=np.int64)
    nn = space.p if n is None else n
    A = space.stratum_matrix(d)
    cols = []
    for i in idx:
        img = oc_hecke_Tn(space.basis[i], nn)
        x = zpm_solve(A, img.flat_stratum(d), space.p, space.prec)
        assert x is not None, "Hecke image left the solved space"
        cols.append(x)
    return np.stack(cols, axis=1)


def charpoly_strata(space, dmax=None):
    """Product of per-stratum U_p characteristic polynomials.

    Restricting to strata <= dmax yields an honest divisor of the full
    characteristic polynomial, so the slopes it produces form a
    sub-multiset of the full slope multiset.
    """
    mod = space.p**space.prec
    poly = [1]
    for d in range(space.T + 1):
        if dmax is not None and d > dmax:
            continue
        B = up_matrix(space, d)
        if B.shape[0]:
            poly = poly_mul_mod(poly, berkowitz_charpoly(B, mod), mod)
    return poly


def _val(x, p, prec):
    x = int(x) % p**prec
    if x == 0:
        return prec
    v = 0
    while x % p == 0:
        x //= p
        v += 1
    return v


def newton_slopes(charpoly, p, prec):
    """Slope multiset of the reversed-series polygon, capped at precision.

    charpoly is [1, c_{n-1}, ..., c_0] for det(X - U); its i-th entry is
    also the degree-i coefficient of det(1 - XU), whose polygon from the
    origin has the eigenvalue valuations as slopes.  A coefficient that
    vanishes mod p^prec only bounds its valuation below, so any slope
    reaching such a point is reported capped at prec.
    """
    n = len(charpoly) - 1
    pts = [(i, _val(charpoly[i], p, prec)) for i in range(n + 1)]
    hull = lower_convex_hull(pts)
    slopes = []
    for (x0, y0), (x1, y1) in zip(hull, hull[1:]):
        s = Fraction(y1 - y0, x1 - x0)
        if s >= prec:
            s = Fraction(prec)
        slopes.extend([s] * (x1 - x0))
    return sorted(slopes), list(hull)


# ---------------------------------------------------------------------------
# polynomial helpers over Z / p^M, ascending coefficient lists


def _pmul(a, b, mod):
    out = [0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                out[i + j] = (out[i + j] + x * y) % mod
    return out


def _padd(a, b, mod):
    n = max(len(a), len(b))
    a = list(a) + [0] * (n - len(a))
    b = list(b) + [0] * (n - len(b))
    return [(x + y) % mod for x, y in zip(a, b)]


def _pscale(a, s, mod):
    return [(x * s) % mod for x in a]


def _ptrim(a):
    a = list(a)
    while len(a) > 1 and a[-1] == 0:
        a = a[:-1]
    return a


def _pquo_rem(a, b, mod):
    """Division with remainder by a monic polynomial."""
    assert b[-1] == 1
    a = [x % mod for x in a]
    if len(a) < len(b):
        return [0], _ptrim(a)
    q = [0] * (len(a) - len(b) + 1)
    for i in range(len(a) - len(b), -1, -1):
        c = a[i + len(b) - 1] % mod
        if c:
            q[i] = c
            for j, y in enumerate(b):
                a[i + j] = (a[i + j] - c * y) % mod
    return _ptrim(q), _ptrim(a[:len(b) - 1] or [0])


def _hensel_pair(f, g0, h0, s0, t0, p, prec):
    """Lift f = g h, s g + t h = 1 from mod p to mod p^prec.

    g and h monic with deg f = deg g + deg h; quadratic steps.
    """
    g, h, s, t = (list(map(int, v)) for v in (g0, h0, s0, t0))
    m = p
    while m < p**prec:
        m = min(m * m, p**prec)
        e = _padd(f, _pscale(_pmul(g, h, m), -1, m), m)
        q, r = _pquo_rem(_pmul(s, e, m), h, m)
        g = _ptrim(_padd(_padd(g, _pmul(t, e, m), m), _pmul(q, g, m), m))
        h = _ptrim(_padd(h, r, m))
        b = _padd(_padd(_pmul(s, g, m), _pmul(t, h, m), m), [m - 1], m)
        c, dd = _pquo_rem(_pmul(s, b, m), h, m)
        s = _ptrim(_padd(s, _pscale(dd, -1, m), m))
        t = _ptrim(_padd(_padd(t, _pscale(_pmul(t, b, m), -1, m), m),
                         _pscale(_pmul(c, g, m), -1, m), m))
    assert g[-1] == 1 and h[-1] == 1
    return g, h, s, t


def _poly_eval_matrix(coeffs, matrix, mod):
    """Evaluate an ascending-coefficient polynomial at a matrix, Horner."""
    n = matrix.shape[0]
    out = np.zeros((n, n), dtype=np.int64)
    eye = np.eye(n, dtype=np.int64)
    matrix = np.asarray(matrix, dtype=object)
    for c in reversed(coeffs):
        out = np.asarray((np.asarray(out, dtype=object) @ matrix) % mod,
                         dtype=np.int64)
        cc = int(c) % mod
        if cc:
            out = (out + cc * eye) % mod
    return out


def slope_projector(matrix, p, prec, h=0):
    """Idempotent onto the slope <= h part of the operator, exact mod p^prec.

    Factors the characteristic polynomial as (non-unit-root part) times
    (unit-root part) by Hensel lifting from the residue field, then
    evaluates the Bezout complement at the matrix.  Only h = 0 has a
    canonical integral splitting at every precision; asking for more
    raises SlopeGapUnresolvable.
    """
    if h != 0:
        raise SlopeGapUnresolvable(
            f"no canonical splitting separates slope {h} from above at "
            f"precision {prec}; only h = 0 is supported")
    mod = p**prec
    n = matrix.shape[0]
    if n == 0:
        return np.zeros((0, 0), dtype=np.int64)
    cp = berkowitz_charpoly(matrix, mod)
    f = [int(c) % mod for c in reversed(cp)]
    fp = [c % p for c in f]
    a = 0
    while a <= n and fp[a] == 0:
        a += 1
    if a == 0:
        return np.eye(n, dtype=np.int64)
    if a > n:
        return np.zeros((n, n), dtype=np.int64)
    qb = fp[a:]
    rb = [0] * a + [1]
    x = sympy.symbols("x")
    sp_R = sympy.Poly(list(reversed(rb)), x, modulus=p)
    sp_Q = sympy.Poly(list(reversed(qb)), x, modulus=p)
    ss, tt, gg = sympy.gcdex(sp_R, sp_Q)
    assert gg.degree() == 0
    ginv = pow(int(gg.all_coeffs()[0]) % p, -1, p)
    s0 = [int(c) * ginv % p for c in reversed(ss.all_coeffs())] or [0]
    t0 = [int(c) * ginv % p for c in reversed(tt.all_coeffs())] or [0]
    g_, h_, s_, t_ = _hensel_pair(f, rb, qb, s0, t0, p, prec)
    # s g + t h = 1 and f(U) = 0, so (s g)(U) is the identity on the
    # unit-root kernel of h(U) and zero on the complement
    return _poly_eval_matrix(_pmul(s_, g_, mod), matrix, mod)


class SlopeData:
    """Characteristic data of U_p at one precision, JSON-exportable."""

    __slots__ = ("p", "prec", "charpoly", "vertices", "slopes")

    def __init__(self, p, prec, charpoly):
        self.p = p
        self.prec = prec
        self.charpoly = [int(c) for c in charpoly]
        self.slopes, self.vertices = newton_slopes(self.charpoly, p, prec)

    def to_json(self):
        return {
            "p": self.p,
            "precision": self.prec,
            "charpoly": self.charpoly,
            "newton_vertices": [[int(x), int(y)] for x, y in self.vertices],
            "slopes": [[s.numerator, s.denominator] for s in self.slopes],
        }

    def dumps(self):
        return json.dumps(self.to_json(), sort_keys=True,
                          separators=(",", ":"))


def specialize_symbol(sym, kappa):
    """Generator-wise projection to the classical weight-k symbol space."""
    vals = [specialize(v, kappa) for v in sym.values]
    return ModularSymbol(sym.level, kappa.k, kappa.chi,
                         ("zpm", sym.p, sym.prec), vals)


def classical_to_zpm(phi, p, prec):
    """Reduce an integral classical symbol into the mod p^prec model."""
    vals = []
    for v in phi.values:
        ints = [int(x) for x in v.coeffs]
        vals.append(SymPoly(phi.level, phi.k, ints, phi.chi, v.side,
                            ("zpm", p, prec)))
    return ModularSymbol(phi.level, phi.k, phi.chi, ("zpm", p, prec), vals)


def _leading_unit_index(flatvec, p):
    for i, x in enumerate(flatvec):
        if int(x) % p:
            return i
    return None


def lift_eigensymbol(space, phi, alpha, kappa, sign=-1, n_iter=None,
                     perturb=None, target_loss=2):
    """Lift a classical U_p eigensymbol into the solved moment space.

    Seeds a stratum-k preimage of phi under specialization, then iterates
    alpha^{-1} U_p composed with the sign and disc-sector projections;
    every component off the target eigenline either lies in a
    projected-away sector or carries positive relative slope and decays.
    Requires the non-critical condition v_p(alpha) < k + 1.  Returns the
    stratum-supported eigensymbol, scaled so its first unit coordinate is
    1, together with the achieved residual valuation.
    """
    p, prec = space.p, space.prec
    mod = p**prec
    k = kappa.k
    if _val(alpha, p, prec) >= k + 1:
        raise CriticalSlope(
            f"v_p({alpha}) >= {k + 1} is critical at weight {k}")
    ainv = pow(int(alpha) % mod, -1, mod)
    phi_z = phi if phi.ring != "Q" else classical_to_zpm(phi, p, prec)

    idx = space.stratum_indices(k)
    assert idx, "no stratum matches the target weight"
    S = np.stack(
        [np.array([int(c) for c in
                   specialize_symbol(space.basis[i], kappa).coords()],
                  dtype=np.int64) for i in idx], axis=1)
    target = np.array([int(c) for c in phi_z.coords()], dtype=np.int64)
    x = zpm_solve(S, target, p, prec)
    assert x is not None, "classical symbol is not in the specialization image"
    seed = space.basis[idx[0]].zero_like()
    for c, i in zip(x, idx):
        if int(c) % mod:
            seed = seed + space.basis[i].scale(int(c))
    if perturb is not None:
        seed = seed + perturb
    if n_iter is None:
        n_iter = 2 * (prec + 2)
    y = seed
    for _ in range(n_iter):
        y = oc_hecke_Up(y).scale(ainv)
        y = oc_sign_project(y, sign)
        y = disc_sector_project(y, k)
    residual = oc_hecke_Up(y) - y.scale(int(alpha) % mod)
    res_val = min((_val(v, p, prec) for v in residual.flat()), default=prec)
    if res_val < prec - target_loss:
        raise NoConvergence(
            f"iteration stalled: residual valuation {res_val} < "
            f"{prec - target_loss}")
    lead = _leading_unit_index(y.flat(), p)
    if lead is not None:
        y = y.scale(pow(int(y.flat()[lead]) % mod, -1, mod))
    return y, res_val


def hecke_eigenvalue(sym, n, loss=2):
    """Scalar of T_n on an eigensymbol, verified against the residual."""
    p, prec = sym.p, sym.prec
    mod = p**prec
    img = oc_hecke_Tn(sym, n)
    flat = sym.flat()
    lead = _leading_unit_index(flat, p)
    if lead is None:
        raise NotEigen("symbol has no unit coordinate")
    lam = (int(img.flat()[lead]) * pow(int(flat[lead]), -1, mod)) % mod
    residual = img - sym.scale(lam)
    res_val = min((_val(v, p, prec) for v in residual.flat()), default=prec)
    if res_val < prec - loss:
        raise NotEigen(f"residual valuation {res_val} below {prec - loss}")
    return lam
