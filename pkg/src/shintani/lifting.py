"""Lifts from modular symbols to half-integral-weight q-expansions.

The exact-coefficient lift pairs symbol values against powers of
quadratic forms and assembles the results over form classes into a
q-expansion; the finite-precision lift does the same with tagged
distribution values, producing tensor coefficients that evaluate to
the exact coefficients at every admissible weight.  Both sides carry
their own Hecke operators, and the verifier at the bottom checks that
weight evaluation intertwines the two constructions coefficientwise.
"""

from concurrent.futures import ThreadPoolExecutor
from math import factorial, gcd

import sympy

from .arith import RationalCusp, kronecker
from .dist import (
    DistN,
    MetaCoeff,
    convolve_distN,
    dirac_distN,
    eval_weight_meta,
    meta_zero,
    tilde_JQ,
)
from .errors import BadIndex, DegreeMismatch
from .modsym import SymPoly, check_ring, pairing, ring_reduce
from .qf import cycle_divisor, enumerate_classes, in_FM


def delta_of_index(M, n):
    """Discriminant attached to the q^n slot at level parameter M."""
    return M * n if M % 2 else 4 * M * n


def realizable_index(M, n):
    """Whether the discriminant attached to q^n supports any form."""
    return delta_of_index(M, n) % 4 in (0, 1)


def _map_indices(fn, ns, threads):
    """Apply fn over indices; results keep the input order."""
    ns = list(ns)
    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            return list(ex.map(fn, ns))
    return [fn(n) for n in ns]


# ---------------------------------------------------------------------------
# half-integral-weight q-expansions with exact coefficients


class HalfIntQExp:
    """q-expansion of weight k + 3/2 at level 4M.

    ``coeffs`` maps n >= 1 to a coefficient; indices up to ``n_max``
    that are absent are zero, indices beyond ``n_max`` are unknown.
    ``twists`` lists the primes whose index-compression operators have
    been applied; each multiplies the nebentype by the quadratic
    symbol at that prime.
    """

    __slots__ = ("M", "k", "chi", "ring", "n_max", "twists", "coeffs")

    def __init__(self, M, k, chi, coeffs, n_max, ring="Q", twists=()):
        check_ring(ring)
        assert M >= 1 and k >= 0 and n_max >= 0
        self.M = M
        self.k = k
        self.chi = chi
        self.ring = ring
        self.n_max = n_max
        self.twists = tuple(twists)
        store = {}
        for n, v in dict(coeffs).items():
            if not 1 <= n <= n_max:
                raise BadIndex(f"coefficient index {n} outside 1..{n_max}")
            v = ring_reduce(ring, v)
            if v != 0:
                store[n] = v
        self.coeffs = store

    @property
    def level(self):
        return 4 * self.M

    @property
    def weight(self):
        """(numerator, denominator) of k + 3/2."""
        return (2 * self.k + 3, 2)

    def character(self, d):
        """Nebentype value at d, with all index-compression twists."""
        v = self.chi(d) * kronecker((-1) ** (self.k + 1) * self.M, d)
        for t in self.twists:
            v *= kronecker(t, d)
        return v

    def coeff(self, n):
        if not 1 <= n <= self.n_max:
            raise BadIndex(f"coefficient {n} not computed (n_max={self.n_max})")
        return self.coeffs.get(n, 0)

    def _compat(self, other):
        assert (self.M, self.k, self.ring, self.twists) == (
            other.M, other.k, other.ring, other.twists)
        assert self.chi == other.chi

    def _like(self, coeffs, n_max=None, twists=None):
        return HalfIntQExp(self.M, self.k, self.chi, coeffs,
                           self.n_max if n_max is None else n_max,
                           self.ring,
                           self.twists if twists is None else twists)

    def __add__(self, other):
        self._compat(other)
        nm = min(self.n_max, other.n_max)
        return self._like({n: self.coeff(n) + other.coeff(n)
                           for n in range(1, nm + 1)}, n_max=nm)

    def __sub__(self, other):
        self._compat(other)
        nm = min(self.n_max, other.n_max)
        return self._like({n: self.coeff(n) - other.coeff(n)
                           for n in range(1, nm + 1)}, n_max=nm)

    def __neg__(self):
        return self._like({n: -v for n, v in self.coeffs.items()})

    def scale(self, r):
        return self._like({n: r * v for n, v in self.coeffs.items()})

    def is_zero(self):
        return not self.coeffs

    def __eq__(self, other):
        if not isinstance(other, HalfIntQExp):
            return NotImplemented
        return ((self.M, self.k, self.chi, self.ring, self.twists,
                 self.n_max, self.coeffs) ==
                (other.M, other.k, other.chi, other.ring, other.twists,
                 other.n_max, other.coeffs))

    def to_json(self):
        return {
            "level": self.level,
            "weight_num": 2 * self.k + 3,
            "weight_den": 2,
            "character": {"modulus": self.level,
                          "values": [self.character(d)
                                     for d in range(self.level)]},
            "n_max": self.n_max,
            "coeffs": {str(n): str(self.coeffs[n])
                       for n in sorted(self.coeffs)},
        }

    def __repr__(self):
        return (f"HalfIntQExp(level={self.level}, weight={2 * self.k + 3}/2, "
                f"n_max={self.n_max}, {len(self.coeffs)} nonzero)")


def halfint_Tp(e, p):
    """Index compression by a prime dividing the level parameter."""
    if e.M % p:
        raise BadIndex(f"{p} does not divide the level parameter {e.M}")
    nm = e.n_max // p
    return e._like({n: e.coeff(p * n) for n in range(1, nm + 1)},
                   n_max=nm, twists=e.twists + (p,))


def halfint_Tl2(e, l):
    """Square-index Hecke operator at an odd prime away from the level."""
    if l == 2 or not sympy.isprime(l) or gcd(l, 2 * e.M) != 1:
        raise BadIndex(f"need an odd prime coprime to {4 * e.M}, got {l}")
    k = e.k
    sign = kronecker(-1, l) ** (k + 1)
    nm = e.n_max // (l * l)
    co = {}
    for n in range(1, nm + 1):
        v = e.coeff(l * l * n)
        v += e.character(l) * sign * kronecker(n, l) * l**k * e.coeff(n)
        if n % (l * l) == 0:
            v += e.character(l * l) * l ** (2 * k + 1) * e.coeff(n // (l * l))
        co[n] = v
    return e._like(co, n_max=nm)


# ---------------------------------------------------------------------------
# exact-coefficient lift


def quad_power(Q, k, level, chi, ring="Q"):
    """Q(X, Y)^k as a degree-2k vector on the monomial side."""
    qa, qb, qc = Q.triple()
    coeffs = [0] * (2 * k + 1)
    for i in range(k + 1):
        for j in range(k - i + 1):
            t = k - i - j
            mult = factorial(k) // (factorial(i) * factorial(j) * factorial(t))
            coeffs[2 * i + j] += mult * qa**i * qb**j * qc**t
    return SymPoly(level, 2 * k, coeffs, chi, "Lstar", ring)


def J_classical(phi, Q, k, chi, base=None):
    """Cycle pairing chi(a_Q) * <phi(D_Q), Q^k>.

    Depends only on the class of Q under the level group; the optional
    base cusp moves the cycle's endpoints without changing the value.
    """
    if phi.k != 2 * k:
        raise DegreeMismatch(
            f"symbol degree {phi.k} does not match weight parameter {k}")
    M = phi.level
    assert in_FM(Q, M), f"{Q!r} is not adapted to level {M}"
    if base is None:
        base = RationalCusp.infinity()
    D = cycle_divisor(Q, M, base)
    val = phi.evaluate(D.pairs)
    pair = pairing(val, quad_power(Q, k, M, phi.chi, phi.ring))
    return ring_reduce(phi.ring, chi(Q.triple()[0] % chi.modulus) * pair)


def theta_classical(phi, M, k, chi, n_max, threads=1):
    """Assemble the exact lift's q-expansion up to q^n_max."""
    assert phi.level == M

    def one(n):
        tot = 0
        for Q in enumerate_classes(M, delta_of_index(M, n)):
            tot += J_classical(phi, Q, k, chi)
        return tot

    values = _map_indices(one, range(1, n_max + 1), threads)
    return HalfIntQExp(M, k, chi, dict(zip(range(1, n_max + 1), values)),
                       n_max, phi.ring)


# ---------------------------------------------------------------------------
# q-expansions with tensor-of-distributions coefficients


class FormalQExp:
    """q-expansion whose coefficients are tensors of tagged distributions.

    ``indices`` records which coefficient slots were assembled; absent
    members of that set are zero, and querying an unassembled slot is
    an error rather than a silent zero.  Nonzero coefficients may only
    sit at indices whose attached discriminant is an actual
    discriminant.
    """

    __slots__ = ("level", "N", "p", "prec", "Tp", "n_max", "indices", "coeffs")

    def __init__(self, level, N, p, prec, Tp, coeffs, n_max, indices=None):
        assert level % N == 0 and gcd(N, level // N) == 1
        self.level = level
        self.N = N
        self.p = level // N
        assert self.p == p
        self.prec = prec
        self.Tp = Tp
        self.n_max = n_max
        if indices is None:
            indices = range(1, n_max + 1)
        self.indices = frozenset(indices)
        assert all(1 <= n <= n_max for n in self.indices)
        store = {}
        for n, mc in dict(coeffs).items():
            assert n in self.indices, f"coefficient {n} outside the index set"
            assert isinstance(mc, MetaCoeff)
            if not mc.is_zero():
                assert realizable_index(level, n), \
                    f"index {n} carries no discriminant"
                store[n] = mc
        self.coeffs = store

    def coeff(self, n):
        if n not in self.indices:
            raise BadIndex(f"coefficient {n} was not assembled")
        got = self.coeffs.get(n)
        if got is None:
            return meta_zero(self.N, self.p, self.prec, self.Tp)
        return got

    def _compat(self, other):
        assert (self.level, self.N, self.p, self.prec, self.Tp) == (
            other.level, other.N, other.p, other.prec, other.Tp)

    def _like(self, coeffs, n_max=None, indices=None):
        return FormalQExp(self.level, self.N, self.p, self.prec, self.Tp,
                          coeffs,
                          self.n_max if n_max is None else n_max,
                          self.indices if indices is None else indices)

    def __add__(self, other):
        self._compat(other)
        idx = self.indices & other.indices
        nm = min(self.n_max, other.n_max)
        return self._like({n: self.coeff(n) + other.coeff(n) for n in idx},
                          n_max=nm, indices={n for n in idx if n <= nm})

    def __sub__(self, other):
        self._compat(other)
        idx = self.indices & other.indices
        nm = min(self.n_max, other.n_max)
        return self._like({n: self.coeff(n) - other.coeff(n) for n in idx},
                          n_max=nm, indices={n for n in idx if n <= nm})

    def scale(self, r):
        return self._like({n: mc.scale(r) for n, mc in self.coeffs.items()})

    def is_zero(self):
        return not self.coeffs

    def canonicalize(self):
        """Push every coefficient's left factor through the squaring map."""
        return self._like({n: mc.canonicalize()
                           for n, mc in self.coeffs.items()})

    def __eq__(self, other):
        if not isinstance(other, FormalQExp):
            return NotImplemented
        return ((self.level, self.N, self.p, self.prec, self.Tp,
                 self.n_max, self.indices) ==
                (other.level, other.N, other.p, other.prec, other.Tp,
                 other.n_max, other.indices)
                and self.coeffs == other.coeffs)

    def to_json(self):
        return {
            "level": self.level,
            "tame_level": self.N,
            "p": self.p,
            "precision": self.prec,
            "moment_degree": self.Tp,
            "n_max": self.n_max,
            "coeffs": {str(n): _meta_json(self.coeffs[n])
                       for n in sorted(self.coeffs)},
        }

    def __repr__(self):
        return (f"FormalQExp(level={self.level}, p={self.p}, "
                f"n_max={self.n_max}, {len(self.coeffs)} nonzero)")


def _distN_json(d):
    comps = {}
    for t in sorted(d.comps):
        nu = d.comps[t]
        comps[str(t)] = [[int(x) for x in row] for row in nu.data.tolist()]
    return {"N": d.N, "p": d.p, "M": d.prec, "Tp": d.Tp, "components": comps}


def _meta_json(mc):
    return {"left": _distN_json(mc.left), "right": _distN_json(mc.right)}


# ---------------------------------------------------------------------------
# finite-precision lift


def J_oc(Phi, Q, base=None):
    """Tensor coefficient of the finite-precision lift at the class of Q."""
    assert in_FM(Q, Phi.level), f"{Q!r} is not adapted to level {Phi.level}"
    if base is None:
        base = RationalCusp.infinity()
    D = cycle_divisor(Q, Phi.level, base)
    return tilde_JQ(Phi.evaluate(D.pairs), Q)


def _unit_dirac(s, N, p, prec, Tp):
    """Point mass at s on the unit group; zero when s is not a unit."""
    if s % p == 0 or (N > 1 and gcd(s, N) != 1):
        return DistN(N, p, prec, Tp)
    return dirac_distN(s, N, p, prec, Tp)


def _conv_right(s, mc):
    """Convolve the right tensor factor with the point mass at s."""
    r = mc.right
    d = _unit_dirac(s, r.N, r.p, r.prec, r.Tp)
    return MetaCoeff(mc.left, convolve_distN(d, r))


def theta_oc(Phi, n_max, indices=None, threads=1):
    """Assemble the finite-precision lift on the requested q-slots.

    Scaled copies of a primitive form contribute the primitive class's
    tensor convolved with the point mass at the scaling factor, so each
    primitive class is evaluated once and shared across indices.
    """
    Np, N, p = Phi.level, Phi.N, Phi.p
    Tp = Phi.T // 2
    if indices is None:
        indices = range(1, n_max + 1)
    indices = sorted(set(indices))
    memo = {}

    def prim(Q):
        key = Q.triple()
        got = memo.get(key)
        if got is None:
            got = memo[key] = J_oc(Phi, Q)
        return got

    def one(n):
        mc = meta_zero(N, p, Phi.prec, Tp)
        for Q in enumerate_classes(Np, delta_of_index(Np, n)):
            m = Q.content()
            piece = prim(Q) if m == 1 else _conv_right(m, prim(Q.primitive_part()))
            mc = mc + piece
        return mc

    values = _map_indices(one, indices, threads)
    return FormalQExp(Np, N, p, Phi.prec, Tp, dict(zip(indices, values)),
                      n_max, indices)


def qexp_hecke_Tl(e, l):
    """Hecke operator on tensor coefficients at a prime l.

    Acts through the right tensor factor only.  The output keeps every
    index whose three input slots are all assembled.
    """
    if l == 2 and e.N % 2:
        raise BadIndex("index 2 requires an even tame level")
    if not sympy.isprime(l):
        raise BadIndex(f"{l} is not prime")
    nm = e.n_max // (l * l)
    co = {}
    idx = []
    for n in range(1, nm + 1):
        if (n * l * l not in e.indices or n not in e.indices
                or (n % (l * l) == 0 and n // (l * l) not in e.indices)):
            continue
        idx.append(n)
        mc = e.coeff(n * l * l)
        mc = mc + _conv_right(l, e.coeff(n)).scale(kronecker(e.level * n, l))
        if n % (l * l) == 0:
            mc = mc + _conv_right(l * l, e.coeff(n // (l * l))).scale(l)
        co[n] = mc
    return e._like(co, n_max=nm, indices=idx)


def qexp_hecke_Tll(e, l):
    """Diamond-type operator: convolve with the point mass at l^2."""
    if gcd(l, e.level) != 1:
        raise BadIndex(f"{l} must be coprime to the level {e.level}")
    return e._like({n: _conv_right(l * l, e.coeff(n)) for n in e.coeffs})


def qexp_module_action(r, e):
    """Act by a tagged one-variable distribution on every left factor."""
    return e._like({n: MetaCoeff(convolve_distN(r, mc.left), mc.right)
                    for n, mc in e.coeffs.items()})


# ---------------------------------------------------------------------------
# weight evaluation and the interpolation verifier


def specialize_qexp(e, kappa_tilde):
    """Evaluate every tensor coefficient at an admissible weight."""
    ring = ("zpm", e.p, e.prec)
    co = {n: eval_weight_meta(mc, kappa_tilde) for n, mc in e.coeffs.items()}
    assert e.indices == frozenset(range(1, e.n_max + 1)), \
        "weight evaluation needs a fully assembled expansion"
    return HalfIntQExp(e.level, kappa_tilde.k, kappa_tilde.chi, co,
                       e.n_max, ring)


def _valuation(x, p, prec):
    x %= p**prec
    if x == 0:
        return prec
    v = 0
    while x % p == 0:
        x //= p
        v += 1
    return v


def verify_interpolation(Phi, kappa_tilde, n_max, loss=2, threads=1):
    """Compare the two routes from a finite-precision symbol to a weight.

    Route one evaluates the lifted expansion's tensors at the weight;
    route two specializes the symbol first and lifts exactly.  Returns
    a report; equality is required modulo p^(prec - loss).
    """
    from .ocsymb import specialize_symbol
    p, prec = Phi.p, Phi.prec
    lifted = specialize_qexp(theta_oc(Phi, n_max, threads=threads),
                             kappa_tilde)
    phik = specialize_symbol(Phi, kappa_tilde.doubled())
    exact = theta_classical(phik, Phi.level, kappa_tilde.k, kappa_tilde.chi,
                            n_max, threads=threads)
    worst = prec
    fails = []
    for n in range(1, n_max + 1):
        v = _valuation(lifted.coeff(n) - exact.coeff(n), p, prec)
        worst = min(worst, v)
        if v < prec - loss:
            fails.append(n)
    return {
        "level": Phi.level,
        "weight_k": kappa_tilde.k,
        "n_max": n_max,
        "precision": prec,
        "loss": loss,
        "passed": not fails,
        "residual_valuation": worst,
        "failing_indices": fails,
    }
