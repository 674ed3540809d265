import random
from fractions import Fraction
from itertools import combinations

import pytest
import sympy as sp
from hypothesis import given, settings, strategies as st

from thetarho import goepel, rho
from thetarho.charkit import PartitionChar, all_characteristics, partition_of_char, partition_table
from thetarho.errors import DomainError, VerificationError

roots8 = st.lists(st.integers(-50, 50), min_size=8, max_size=8, unique=True)


def test_vandermonde_examples():
    e = (0, 1, 3, 7, 12, 20)
    assert rho.vandermonde([], e) == 1
    assert rho.vandermonde([4], e) == 1
    assert rho.vandermonde([0, 1, 2], e) == 6
    # labels, not values, fix the sign
    assert rho.vandermonde([0, 1], (5, 2, 0, 1)) == -3


@given(st.lists(st.integers(-50, 50), min_size=8, max_size=8, unique=True), st.integers(0, 255))
def test_vandermonde_splits(e, mask):
    idx = {i for i in range(8) if mask >> i & 1}
    rest = set(range(8)) - idx
    cross = 1
    for i in idx:
        for j in rest:
            cross *= rho.bracket(i, j, e)
    # every pair appears once, normally ordered, so the sign is exact
    assert rho.vandermonde(idx, e) * rho.vandermonde(rest, e) * cross == rho.vandermonde(range(8), e)


def test_elem_sym_conventions():
    e = (2, 3, 5, 7)
    assert rho.elem_sym(0, {1, 2}, e) == 1
    assert rho.elem_sym(-1, {1, 2}, e) == 0
    assert rho.elem_sym(3, {1, 2}, e) == 0
    assert rho.elem_sym(1, {3}, e) == 7
    assert rho.elem_sym(2, {0, 1, 2}, e) == 2 * 3 + 2 * 5 + 3 * 5


def test_s_matrix_genus3():
    s = rho.s_matrix((), 3, tuple(range(8)))
    assert s.tolist() == [[0, 0, -1], [0, 2, 0], [-1, 0, 0]]


def test_s_matrix_genus4_symbolic():
    e = sp.symbols("e0:10")
    for k in (0, 4, 9):
        ek = e[k]
        s = rho.s_matrix({k}, 4, e)
        expected = sp.Matrix([[0, 0, -1, ek], [0, 2, -ek, -ek ** 2], [-1, -ek, 2 * ek ** 2, 0],
                              [ek, -ek ** 2, 0, 0]])
        assert sp.simplify(sp.Matrix(s.tolist()) - expected) == sp.zeros(4, 4)


def test_s_matrix_genus5_symbolic_oracle():
    e = sp.symbols("e0:12")
    t = sp.symbols("t")
    idx = (2, 7)
    poly = sp.Poly(sp.expand(sp.prod([1 + e[i] * t for i in idx])), t)
    sym = lambda k: poly.coeff_monomial(t ** k) if 0 <= k <= len(idx) else 0
    s = rho.s_matrix(idx, 5, e)
    m = sp.Matrix(s.tolist()).applyfunc(sp.expand)
    assert m == m.T
    for i in range(1, 6):
        for j in range(1, 6):
            oracle = (-1) ** (i + j) * (2 * sym(i - 2) * sym(j - 2) - sym(i - 1) * sym(j - 3)
                                        - sym(i - 3) * sym(j - 1))
            got = sp.expand(s[i - 1, j - 1])
            assert sp.expand(got - oracle) == 0
            if got != 0:
                assert sp.Poly(got, *e).total_degree() <= 4


def test_s_matrix_size_checked():
    with pytest.raises(DomainError):
        rho.s_matrix({1}, 3, tuple(range(8)))


def test_rho_theta_exponents():
    p = PartitionChar.of(3, {0, 2, 5, 6})
    img = rho.rho_theta(p)
    ex = img.exponents
    inside = list(combinations(sorted(p.indices), 2)) + list(combinations(sorted(p.complement), 2))
    assert len(ex) == 12
    assert all(ex[(i, l)] == Fraction(1, 4) for l, i in inside)
    assert img.omega_power == Fraction(1, 2)
    e = (-7, -3, 0, 2, 5, 11, 13, 20)
    assert img.scalar_fourth_power(e) == rho.vandermonde(p.indices, e) * rho.vandermonde(p.complement, e)


def test_images_check_multiplicity():
    with pytest.raises(DomainError):
        rho.rho_theta(PartitionChar.of(3, {0, 1}))
    with pytest.raises(DomainError):
        rho.rho_dtheta(PartitionChar.of(3, ()))
    with pytest.raises(DomainError):
        rho.rho_d2theta(PartitionChar.of(3, {0, 1, 2, 3}))


def test_rho_dtheta_vector():
    e = sp.symbols("e0:8")
    p = PartitionChar.of(3, {0, 1})
    img = rho.rho_dtheta(p)
    assert img.parts == (("grad", (0, 1)),)
    assert rho.gradient_vector((0, 1), 3, e) == [1, -(e[0] + e[1]), e[0] * e[1]]


def test_rho_d2theta_parts():
    img = rho.rho_d2theta(PartitionChar.of(4, {3}))
    ex = img.exponents
    # Delta(I2) is empty; Delta(J2) runs over every label except 3
    assert all(3 not in k for k in ex)
    assert len(ex) == 36
    assert img.parts == (("hess", (3,)),)


def test_monomial_rejects_odd():
    odd = next(c for c in all_characteristics(3) if c.is_odd)
    with pytest.raises(DomainError):
        rho.rho_monomial([odd])
    with pytest.raises(DomainError):
        rho.rho_monomial([])


def _all_pairs(n, q):
    return {(i, l): q for i in range(n) for l in range(i)}


def test_chi4_images_identical_and_equal_delta():
    images = {rho.rho_monomial(s.partitions()) for s in goepel.singular_systems(3, 3)}
    assert len(images) == 1
    img = images.pop()
    assert img.exponents == {k: 1 for k in _all_pairs(8, 1)}
    assert img.is_polynomial()
    assert (img.omega_power, img.tau_order, img.sign) == (4, 1, -1)


def test_chi18_image():
    evens = [partition_of_char(c) for c in all_characteristics(3) if c.is_even]
    img = rho.rho_monomial(evens)
    assert img.exponents == {k: 4 for k in _all_pairs(8, 1)}
    assert img.omega_power == 18


def test_mu8_images_depend_on_kappa_only():
    by_pair = {}
    for s in goepel.singular_systems(4, 4):
        img = rho.rho_monomial(s.partitions())
        k = tuple(sorted(next(iter(p.indices)) for p in s.singular()))
        by_pair.setdefault(k, set()).add(img.quarters)
    assert len(by_pair) == 45
    for (k1, k2), imgs in by_pair.items():
        assert len(imgs) == 1
        ex = dict(next(iter(imgs)))
        expect = {key: 8 for key in _all_pairs(10, 1)}
        expect.pop((k2, k1))
        assert ex == expect


def test_wholly_even_monomials_are_polynomial():
    for g, r in ((3, 3), (4, 4)):
        for grp in goepel.enumerate_groups(g, r):
            for s in goepel.wholly_even_systems(grp):
                assert rho.rho_monomial(s.partitions()).is_polynomial()


def test_image_arithmetic():
    a = rho.rho_theta(PartitionChar.of(3, {0, 1, 2, 3}))
    b = rho.rho_theta(PartitionChar.of(3, {0, 1, 2, 4}))
    q = (a * b) / b
    assert q.quarters == a.quarters and q.omega_power == a.omega_power
    with pytest.raises(DomainError):
        a / rho.rho_d2theta(PartitionChar.of(3, ()))
    with pytest.raises(DomainError):
        a.scalar((0, 1, 2, 3, 4, 5, 6, 7))
    four = rho.RhoImage.build(3, {(1, 0): 4, (2, 0): -8})
    assert four.scalar((0, 3, 5, 6, 7, 8, 9, 10)) == Fraction(3, 25)


def test_degree_prechecks():
    degs = rho.identity_degrees()
    assert degs["chi4"] == (112, 112)
    assert degs["chi18"] == (448, 448)
    assert degs["mu8"] == (352, 352)
    assert degs["chi68"] == (2880, 2880)


@pytest.mark.parametrize("name", ["chi4", "chi18", "phi2_equal", "h0", "I1_translation"])
def test_identities_genus3(name):
    recs = rho.verify_identity(name, trials=3, seed=11)
    assert len(recs) == 3 and all(r["pass"] for r in recs)
    assert {r["sign"] for r in recs} == {1}


def test_identity_explicit_roots():
    recs = rho.verify_identity("chi4", roots=[-9, -4, 0, 1, 6, 17, 30, 44], trials=1)
    assert recs[0]["roots"] == ["-9", "-4", "0", "1", "6", "17", "30", "44"]
    with pytest.raises(DomainError):
        rho.verify_identity("chi4", roots=list(range(10)), trials=1)
    with pytest.raises(DomainError):
        rho.verify_identity("chi4", roots=[0, 0, 1, 2, 3, 4, 5, 6], trials=1)
    with pytest.raises(DomainError):
        rho.verify_identity("nope")


def test_identity_failure_raises(monkeypatch):
    def broken(roots, trial=0):
        return rho.IdentityRecord("chi4", trial, list(roots), None, False)

    monkeypatch.setitem(rho.IDENTITIES, "chi4", (3, broken))
    with pytest.raises(VerificationError) as exc:
        rho.verify_identity("chi4", trials=2)
    assert exc.value.witness["identity"] == "chi4"


def test_h0_fails_for_a_wrong_pairing():
    # the fourth power of the pair product is sensitive to which pairs are used
    _, triples = rho._data_g3()
    t = dict(triples[0])
    pairs = t["pairs"]
    t["pairs"] = [[pairs[0][0], pairs[1][0]], [pairs[0][1], pairs[1][1]]] + pairs[2:]
    e = (-20, -11, -3, 2, 9, 14, 27, 41)
    cache = {}
    num = rho.vandermonde(range(8), e)
    for p in t["A1"].partitions():
        if p.multiplicity == 0:
            num *= rho._dd(p, e, cache)
    den = 1
    for p in t["A2"].partitions():
        den *= rho._dd(p, e, cache)
    rhs = 1
    for i, j in t["pairs"]:
        rhs *= rho.bracket(i, j, e)
    assert Fraction(num, den) not in (rhs ** 4, -rhs ** 4)


@settings(max_examples=25, deadline=None)
@given(roots8, st.fractions(max_denominator=20).filter(lambda c: abs(c) < 100))
def test_I1_shift_invariant(e, c):
    assert rho.quasi_invariant_I1([x + c for x in e]) == rho.quasi_invariant_I1(e)


@settings(max_examples=25, deadline=None)
@given(roots8, st.fractions(max_denominator=20).filter(lambda c: c != 0))
def test_I1_homogeneous_degree_4(e, lam):
    assert rho.quasi_invariant_I1([lam * x for x in e]) == lam ** 4 * rho.quasi_invariant_I1(e)


def test_I1_not_symmetric():
    wit = rho.non_symmetry_witness(random.Random(5))
    assert wit is not None and wit["before"] != wit["after"]


def test_I1_uses_105_pair_partitions():
    pps = rho.pair_partitions_g3()
    assert len(pps) == 105
    assert len({frozenset(frozenset(p) for p in pp) for pp in pps}) == 105
    with pytest.raises(DomainError):
        rho.quasi_invariant_I1(range(10))


def test_mobius_search_reports():
    hits = rho.mobius_exponent_search(random.Random(2), trials=2)
    assert isinstance(hits, list)
    assert all(isinstance(p, int) and isinstance(q, int) for p, q in hits)


def test_root_system():
    rs = rho.RootSystem.random(3, random.Random(0))
    assert rs.genus == 3 and len(set(rs.roots)) == 8
    assert all(-50 <= x <= 50 for x in rs.roots)
    with pytest.raises(DomainError):
        rho.RootSystem((1, 2, 3))
    assert rs.shifted(1).roots[0] == rs.roots[0] + 1


def test_partition_table_consistency():
    for p in partition_table(3).values():
        if p.multiplicity == 0:
            assert rho.rho_theta(p).scalar_fourth_power(tuple(range(8))) > 0
