"""Quadratic forms: action, reduction, automorphs, equivalence, enumeration."""

import random
from math import gcd, isqrt

import pytest
import sympy

from shintani.arith import MAT_ID, RationalCusp, mat_det, mat_inv, mat_mul, mat_pow
from shintani.cosets import coset_section, gamma0_generators, left_coset_reps, p1_classes
from shintani.errors import DiscriminantMismatch, NonUnimodular, SquareDiscriminant
from shintani.qf import (
    QuadForm,
    _cycle,
    _primitive_sl2_classes,
    act,
    cycle_divisor,
    discriminant,
    enumerate_classes,
    equivalent_under_gamma0,
    fundamental_automorph,
    gamma_Q,
    in_FM,
    is_reduced,
    reduce_form,
    square_endpoints,
)

rng = random.Random(97)


def act_oracle(Q, g):
    """Symbolic substitution oracle for the right action."""
    X, Y = sympy.symbols("X Y")
    gi = mat_inv(g)
    u = gi[0] * X + gi[2] * Y
    v = gi[1] * X + gi[3] * Y
    expr = sympy.expand(Q.a * u * u + Q.b * u * v + Q.c * v * v)
    poly = sympy.Poly(expr, X, Y)
    return QuadForm(
        int(poly.coeff_monomial(X**2)),
        int(poly.coeff_monomial(X * Y)),
        int(poly.coeff_monomial(Y**2)),
    )


def random_sl2(r, size=8):
    g = MAT_ID
    for _ in range(r.randint(1, size)):
        if r.random() < 0.5:
            g = mat_mul(g, (0, -1, 1, 0))
        else:
            g = mat_mul(g, (1, r.randint(-3, 3), 0, 1))
    return g


def random_gamma0(r, M, size=6):
    gens = gamma0_generators(M)
    g = MAT_ID
    for _ in range(r.randint(1, size)):
        h = gens[r.randrange(len(gens))]
        g = mat_mul(g, h if r.random() < 0.5 else mat_inv(h))
    return g


# ---------------------------------------------------------------------------


def test_p1_sizes():
    # |P^1(Z/M)| = M * prod(1 + 1/p)
    for M, size in ((1, 1), (5, 6), (11, 12), (15, 24), (4, 6)):
        assert len(p1_classes(M)) == size
        assert len(coset_section(M)) == size


def test_schreier_generators_in_gamma0():
    for M in (2, 5, 11, 15):
        for g in gamma0_generators(M):
            assert g[2] % M == 0 and mat_det(g) == 1


def test_discriminant_examples():
    assert discriminant(QuadForm(1, 0, -1)) == 4
    assert discriminant(QuadForm(1, 1, -1)) == 5
    assert discriminant(QuadForm(1, 5, 5)) == 5


def test_in_FM_examples():
    assert in_FM(QuadForm(1, 5, 10), 5)
    assert not in_FM(QuadForm(1, 5, 10), 10)
    assert not in_FM(QuadForm(5, 25, 25), 5)
    assert in_FM(QuadForm(3, 20, 10), 10)


def test_act_examples():
    assert act(QuadForm(1, 0, -1), (1, 1, 0, 1)) == QuadForm(0, 2, -1)
    Q = QuadForm(3, 7, -2)
    assert act(Q, MAT_ID) == Q
    assert act(QuadForm(1, 1, -1), (1, 1, 1, 2)) == QuadForm(1, 1, -1)
    with pytest.raises(NonUnimodular):
        act(Q, (2, 0, 0, 1))
    with pytest.raises(NonUnimodular):
        act(Q, (1, 0, 0, -1))


def test_act_matches_symbolic_oracle():
    for _ in range(60):
        Q = QuadForm(rng.randint(-9, 9), rng.randint(-9, 9), rng.randint(-9, 9))
        g = random_sl2(rng)
        assert act(Q, g) == act_oracle(Q, g)


def test_act_is_right_action():
    for _ in range(200):
        Q = QuadForm(rng.randint(-10, 10), rng.randint(-10, 10), rng.randint(-10, 10))
        g, h = random_sl2(rng), random_sl2(rng)
        assert act(act(Q, g), h) == act(Q, mat_mul(g, h))
        assert discriminant(act(Q, g)) == discriminant(Q)


def test_act_preserves_FM():
    for M in (5, 11, 15):
        Q = QuadForm(1, 0, -M)          # disc 4M, in F_M
        assert in_FM(Q, M)
        for _ in range(30):
            gamma = random_gamma0(rng, M)
            assert in_FM(act(Q, gamma), M)


# ---------------------------------------------------------------------------


def test_reduction_terminates_and_tracks():
    for _ in range(120):
        while True:
            Q = QuadForm(rng.randint(-30, 30), rng.randint(-30, 30), rng.randint(-30, 30))
            d = Q.discriminant()
            if d > 0 and isqrt(d) ** 2 != d:
                break
        R, t = reduce_form(Q)
        assert is_reduced(R)
        assert act(Q, t) == R
        assert mat_det(t) == 1


def test_cycle_closes_and_automorph():
    for Q in (QuadForm(1, 1, -1), QuadForm(1, 0, -2), QuadForm(3, 11, -1)):
        R0, t = reduce_form(Q)
        members, h = _cycle(R0)
        assert act(R0, h) == R0
        # all cycle members are reduced and distinct
        forms = [F for F, _ in members]
        assert len(set(forms)) == len(forms)
        for F, tr in members:
            assert is_reduced(F)
            assert act(R0, tr) == F


def pell_min_trace(d, bound=100):
    """Smallest t in (2, bound] with t^2 - d u^2 = 4 solvable, by search."""
    for t in range(3, bound + 1):
        num = t * t - 4
        if num % d == 0:
            u = isqrt(num // d)
            if u * u * d == num:
                return t
    return None


def test_fundamental_automorph_trace_is_pell_minimal():
    for d in (5, 8, 12, 13, 17, 20, 21, 24, 28, 29, 33):
        t_min = pell_min_trace(d)
        assert t_min is not None
        for P in _primitive_sl2_classes(d):
            A = fundamental_automorph(P)
            assert act(P, A) == P
            assert A[0] + A[3] == t_min


def test_fundamental_automorph_examples():
    A = fundamental_automorph(QuadForm(1, 1, -1))
    assert A[0] + A[3] == 3 and act(QuadForm(1, 1, -1), A) == QuadForm(1, 1, -1)
    B = fundamental_automorph(QuadForm(1, 0, -2))
    assert B[0] + B[3] == 6 and act(QuadForm(1, 0, -2), B) == QuadForm(1, 0, -2)
    with pytest.raises(SquareDiscriminant):
        fundamental_automorph(QuadForm(1, 3, 2))


def test_fundamental_automorph_imprimitive():
    Q = QuadForm(2, 2, -2)
    A = fundamental_automorph(Q)
    assert act(Q, A) == Q and A[0] + A[3] == 3


def test_gamma_Q_level_one_is_fundamental():
    Q = QuadForm(1, 1, -1)
    g = gamma_Q(Q, 1)
    A = fundamental_automorph(Q)
    assert g in (A, mat_inv(A))
    assert act(Q, g) == Q


def test_gamma_Q_least_power():
    Q = QuadForm(1, 5, 5)
    A = fundamental_automorph(Q)
    g = gamma_Q(Q, 5)
    assert g[2] % 5 == 0 and act(Q, g) == Q
    # find the least j with A^j in Gamma0(5); gamma_Q must be A^{+-j}
    j = 1
    C = A
    while C[2] % 5 != 0:
        C = mat_mul(C, A)
        j += 1
        assert j < 1000
    assert g in (mat_pow(A, j), mat_pow(A, -j))
    # the two candidates are distinguished by the normalization; exactly one wins
    from shintani.qf import _is_normalized

    assert _is_normalized(Q, g)
    assert not _is_normalized(Q, mat_inv(g))


def test_gamma_Q_deeper_level():
    Q = QuadForm(1, 11, -11)      # disc 165, in F_11
    assert in_FM(Q, 11)
    g = gamma_Q(Q, 11)
    assert g[2] % 11 == 0 and act(Q, g) == Q and g != MAT_ID


# ---------------------------------------------------------------------------


def test_square_endpoints_examples():
    w1, w2 = square_endpoints(QuadForm(1, 3, 2))
    assert (w1, w2) == (RationalCusp(1), RationalCusp(1, 2))
    w1, w2 = square_endpoints(QuadForm(1, 2, 0))
    assert w1 == RationalCusp.infinity() and w2 == RationalCusp(1, 2)
    w1, w2 = square_endpoints(QuadForm(1, -2, 0))
    assert w1 == RationalCusp(-1, 2) and w2 == RationalCusp.infinity()


def test_cycle_divisor_square():
    D = cycle_divisor(QuadForm(1, 3, 2), 1, RationalCusp(0))
    assert D.pairs == ((RationalCusp(1), 1), (RationalCusp(1, 2), -1))
    assert D.provenance[0] == "endpoints"


def test_cycle_divisor_automorph():
    Q = QuadForm(1, 1, -1)
    omega = RationalCusp(0)
    D = cycle_divisor(Q, 1, omega)
    kind, g, base = D.provenance
    assert kind == "automorph" and base == omega
    assert act(Q, g) == Q
    assert D.pairs == ((omega.apply(g), 1), (omega, -1))
    assert sum(n for _, n in D.pairs) == 0


# ---------------------------------------------------------------------------


def bfs_orbit(Q, M, cap, max_size=20000):
    """All forms with |coefficients| <= cap reachable under Gamma0(M)."""
    gens = []
    for g in gamma0_generators(M):
        gens.append(g)
        gens.append(mat_inv(g))
    seen = {Q}
    frontier = [Q]
    while frontier:
        nxt = []
        for F in frontier:
            for g in gens:
                G = act(F, g)
                if G not in seen and max(abs(G.a), abs(G.b), abs(G.c)) <= cap:
                    seen.add(G)
                    nxt.append(G)
        frontier = nxt
        assert len(seen) < max_size
    return seen


def test_equivalent_under_gamma0_random_words():
    Q0 = QuadForm(1, 0, -5)     # disc 20, in F_5
    for _ in range(25):
        gamma = random_gamma0(rng, 5)
        Q1 = act(Q0, gamma)
        g = equivalent_under_gamma0(Q0, Q1, 5)
        assert g is not None
        assert g[2] % 5 == 0 and act(Q0, g) == Q1


def test_equivalent_under_gamma0_bfs_oracle():
    Q1, Q2 = QuadForm(1, 1, -1), QuadForm(-1, 1, 1)
    g = equivalent_under_gamma0(Q1, Q2, 1)
    orbit = bfs_orbit(Q1, 1, cap=8)
    assert (Q2 in orbit) == (g is not None)
    assert g is not None and act(Q1, g) == Q2
    with pytest.raises(DiscriminantMismatch):
        equivalent_under_gamma0(QuadForm(1, 1, -1), QuadForm(1, 0, -1), 1)


def test_equivalent_under_gamma0_negative_certified_by_bfs():
    # SL2-equivalent pair that Gamma0(5) cannot connect
    Q1, Q2 = QuadForm(1, 0, -10), QuadForm(-10, 0, 1)
    assert equivalent_under_gamma0(Q1, Q2, 1) is not None
    assert equivalent_under_gamma0(Q1, Q2, 5) is None
    orbit = bfs_orbit(Q1, 5, cap=60)
    assert Q2 not in orbit
    # distinct SL2 classes inside F_5 at disc 40: None at every level
    R1, R2 = QuadForm(3, -20, 30), QuadForm(1, -10, 15)
    assert in_FM(R1, 5) and in_FM(R2, 5)
    assert equivalent_under_gamma0(R1, R2, 5) is None
    assert equivalent_under_gamma0(R1, R2, 1) is None
    assert R2 not in bfs_orbit(R1, 5, cap=45)


def test_square_disc_equivalence():
    Q1 = QuadForm(0, 3, 1)
    Q2 = act(Q1, (2, 1, 1, 1))
    g = equivalent_under_gamma0(Q1, Q2, 1)
    assert g is not None and act(Q1, g) == Q2
    # distinct canonicals are inequivalent
    assert equivalent_under_gamma0(QuadForm(0, 3, 1), QuadForm(0, 3, 2), 1) is None


def test_primitive_sl2_class_counts():
    # proper class numbers of small positive discriminants
    for d, h in ((5, 1), (8, 1), (12, 2), (13, 1), (17, 1), (20, 1), (21, 2)):
        assert len(_primitive_sl2_classes(d)) == h, d
    # square discriminants: phi(e) canonical classes
    assert len(_primitive_sl2_classes(1)) == 1
    assert len(_primitive_sl2_classes(4)) == 1
    assert len(_primitive_sl2_classes(9)) == 2
    # no forms when d is 2 or 3 mod 4
    assert _primitive_sl2_classes(7) == []


def box_forms(M, delta, cap):
    """All forms of F_M with the given discriminant and |a|,|b| <= cap."""
    out = []
    for a in range(-cap, cap + 1):
        if a == 0 or gcd(a, M) != 1:
            continue
        for b in range(-cap, cap + 1):
            num = b * b - delta
            if num % (4 * a):
                continue
            Q = QuadForm(a, b, num // (4 * a))
            if in_FM(Q, M):
                out.append(Q)
    return out


def test_enumerate_classes_level_one():
    assert [Q.triple() for Q in enumerate_classes(1, 5)] == [(-1, 1, 1)]
    assert len(enumerate_classes(1, 8)) == 1
    # disc 20: one primitive class plus the doubled disc-5 class
    reps = enumerate_classes(1, 20)
    assert len(reps) == 2
    assert sorted(Q.content() for Q in reps) == [1, 2]


def test_enumerate_classes_respects_congruence():
    assert enumerate_classes(5, 21) == ()
    assert enumerate_classes(11, 5) == ()


def test_enumerate_classes_level_five():
    reps = enumerate_classes(5, 20)
    assert len(reps) >= 2
    for Q in reps:
        assert in_FM(Q, 5) and Q.discriminant() == 20
    for i, Qi in enumerate(reps):
        for Qj in reps[:i]:
            assert equivalent_under_gamma0(Qi, Qj, 5) is None
    # completeness against a coefficient box
    for Q in box_forms(5, 20, 30):
        assert any(equivalent_under_gamma0(Q, R, 5) is not None for R in reps)


def test_enumerate_classes_deterministic():
    a = enumerate_classes(11, 44)
    b = enumerate_classes(11, 44)
    assert a == b
    assert all(in_FM(Q, 11) and Q.discriminant() == 44 for Q in a)


def test_enumerate_includes_imprimitive():
    # disc 45 = 9 * 5 at level 1: primitive disc-45 classes and 3*(disc 5)
    reps = enumerate_classes(1, 45)
    contents = sorted(Q.content() for Q in reps)
    assert 3 in contents and 1 in contents
