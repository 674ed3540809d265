"""Exact images of theta constants and their lowest derivatives under rho.

Every image is a product of quarter powers of root differences (e_i - e_l),
always written with i > l by label, times a power of det(omega)/pi^g and a
formal scalar.  Exponents are stored as integers counting quarters.

Identities are checked on fourth powers, where every exponent is an integer
and the eighth-root ambiguity reduces to a sign that is reported.
Arithmetic is exact: roots are ints or Fractions (sympy symbols also work for
the polynomial helpers).
"""
from __future__ import annotations

import random
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from functools import reduce
from itertools import combinations
from math import comb

from thetarho import goepel
from thetarho.charkit import Characteristic, PartitionChar, all_characteristics, partition_of_char
from thetarho.errors import DomainError, VerificationError


@dataclass(frozen=True)
class RootSystem:
    roots: tuple

    def __post_init__(self):
        if len(self.roots) < 4 or len(self.roots) % 2:
            raise DomainError("need 2g + 2 >= 4 roots")
        if len(set(self.roots)) != len(self.roots):
            raise DomainError("roots must be pairwise distinct")

    @property
    def genus(self) -> int:
        return len(self.roots) // 2 - 1

    def __getitem__(self, i):
        return self.roots[i]

    def __len__(self):
        return len(self.roots)

    @classmethod
    def random(cls, g: int, rng: random.Random, lo: int = -50, hi: int = 50) -> "RootSystem":
        return cls(tuple(rng.sample(range(lo, hi + 1), 2 * g + 2)))

    def shifted(self, c) -> "RootSystem":
        return RootSystem(tuple(e + c for e in self.roots))

    def scaled(self, lam) -> "RootSystem":
        return RootSystem(tuple(lam * e for e in self.roots))


def _roots(roots):
    return roots.roots if isinstance(roots, RootSystem) else tuple(roots)


def _prod(xs, one=1):
    return reduce(lambda a, b: a * b, xs, one)


def bracket(i: int, l: int, roots):
    """[i l] = e_max - e_min by label."""
    e = _roots(roots)
    hi, lo = max(i, l), min(i, l)
    return e[hi] - e[lo]


def vandermonde(indices, roots):
    """prod_{i > l in I} (e_i - e_l)."""
    e = _roots(roots)
    idx = sorted(indices)
    return _prod((e[i] - e[l] for a, i in enumerate(idx) for l in idx[:a]))


def elem_sym(k: int, indices, roots):
    """s_k over {e_i : i in I}; zero for k < 0 or k > |I|."""
    e = _roots(roots)
    idx = sorted(indices)
    if k < 0 or k > len(idx):
        return 0
    # coefficients of prod (1 + e_i t)
    coeffs = [1] + [0] * len(idx)
    for n, i in enumerate(idx, start=1):
        for d in range(n, 0, -1):
            coeffs[d] = coeffs[d] + coeffs[d - 1] * e[i]
    return coeffs[k]


@dataclass(frozen=True)
class SMatrix:
    genus: int
    indices: frozenset
    entries: tuple  # g x g, row-major tuples

    def __getitem__(self, ij):
        i, j = ij
        return self.entries[i][j]

    def is_symmetric(self) -> bool:
        g = self.genus
        return all(self.entries[i][j] == self.entries[j][i] for i in range(g) for j in range(g))

    def tolist(self):
        return [list(r) for r in self.entries]


def s_matrix(indices, g: int, roots) -> SMatrix:
    """S_{i,j} = (-1)^{i+j} (2 s_{i-2} s_{j-2} - s_{i-1} s_{j-3} - s_{i-3} s_{j-1}), i, j = 1..g."""
    idx = frozenset(indices)
    if len(idx) != g - 3:
        raise DomainError(f"S-matrix needs |I2| = g - 3 = {g - 3}, got {len(idx)}")
    s = {k: elem_sym(k, idx, roots) for k in range(-3, g)}
    rows = []
    for i in range(1, g + 1):
        row = []
        for j in range(1, g + 1):
            val = 2 * s[i - 2] * s[j - 2] - s[i - 1] * s[j - 3] - s[i - 3] * s[j - 1]
            row.append(val if (i + j) % 2 == 0 else -val)
        rows.append(tuple(row))
    return SMatrix(g, idx, tuple(rows))


def gradient_vector(indices, g: int, roots) -> list:
    """(s_0, -s_1, ..., (-1)^{g-1} s_{g-1}) over I1: the u-gradient in the second formula."""
    return [(-1) ** j * elem_sym(j, indices, roots) for j in range(g)]


# -- images ----------------------------------------------------------------

@dataclass(frozen=True)
class RhoImage:
    """Symbolic rho-image.

    ``quarters`` maps (i, l), i > l, to the exponent of (e_i - e_l) in units
    of 1/4.  ``omega_power`` is the power of det(omega)/pi^g,
    ``tau_order`` the power of 1/(4 i pi), ``eps`` the power of the
    unresolved eighth root of unity, and ``parts`` lists the vector/matrix
    factors as ("grad", I1) or ("hess", I2), each conjugated by omega.
    """

    genus: int
    quarters: tuple  # sorted ((i, l), q) with q != 0
    omega_power: Fraction = Fraction(0)
    tau_order: int = 0
    sign: int = 1
    eps: int = 0
    parts: tuple = ()

    @classmethod
    def build(cls, genus, quarters: dict, **kw) -> "RhoImage":
        q = tuple(sorted((k, v) for k, v in quarters.items() if v))
        return cls(genus, q, **kw)

    @property
    def exponents(self) -> dict:
        return {k: Fraction(v, 4) for k, v in self.quarters}

    def quarter_map(self) -> Counter:
        return Counter(dict(self.quarters))

    def __mul__(self, other: "RhoImage") -> "RhoImage":
        if self.genus != other.genus:
            raise DomainError("genus mismatch")
        q = self.quarter_map()
        q.update(other.quarter_map())
        return RhoImage.build(self.genus, dict(q), omega_power=self.omega_power + other.omega_power,
                              tau_order=self.tau_order + other.tau_order, sign=self.sign * other.sign,
                              eps=(self.eps + other.eps) % 8, parts=tuple(sorted(self.parts + other.parts)))

    def __truediv__(self, other: "RhoImage") -> "RhoImage":
        if other.parts:
            raise DomainError("cannot divide by an image with vector or matrix parts")
        q = self.quarter_map()
        q.subtract(other.quarter_map())
        return RhoImage.build(self.genus, dict(q), omega_power=self.omega_power - other.omega_power,
                              tau_order=self.tau_order - other.tau_order, sign=self.sign * other.sign,
                              eps=(self.eps - other.eps) % 8, parts=self.parts)

    def is_polynomial(self) -> bool:
        """True when every root-difference exponent is an integer."""
        return all(v % 4 == 0 for _, v in self.quarters)

    def scalar_fourth_power(self, roots) -> Fraction:
        """Exact (prod (e_i - e_l)^{q/4})^4 at the given roots."""
        e = _roots(roots)
        num, den = 1, 1
        for (i, l), q in self.quarters:
            d = e[i] - e[l]
            if q > 0:
                num *= d ** q
            else:
                den *= d ** (-q)
        return Fraction(num) / Fraction(den) if den != 1 else num

    def scalar(self, roots):
        """Exact scalar part; only defined when all exponents are integral."""
        if not self.is_polynomial():
            raise DomainError("scalar part has fractional exponents")
        e = _roots(roots)
        num, den = 1, 1
        for (i, l), q in self.quarters:
            d = e[i] - e[l]
            if q > 0:
                num *= d ** (q // 4)
            else:
                den *= d ** (-q // 4)
        return Fraction(num, 1) / den if den != 1 else num

    def degree(self) -> Fraction:
        return Fraction(sum(v for _, v in self.quarters), 4)


def _partition(p) -> PartitionChar:
    if isinstance(p, PartitionChar):
        return p
    if isinstance(p, Characteristic):
        return partition_of_char(p)
    raise DomainError(f"expected a partition or characteristic, got {p!r}")


def _pair_quarters(p: PartitionChar) -> Counter:
    q: Counter = Counter()
    for side in (p.indices, p.complement):
        for l, i in combinations(sorted(side), 2):
            q[(i, l)] += 1
    return q


def rho_theta(p) -> RhoImage:
    """Image of theta[I0]: eps (det w / pi^g)^{1/2} Delta(I0)^{1/4} Delta(J0)^{1/4}."""
    p = _partition(p)
    if p.multiplicity != 0:
        raise DomainError(f"rho_theta needs multiplicity 0, got {p.multiplicity}")
    return RhoImage.build(p.genus, _pair_quarters(p), omega_power=Fraction(1, 2), eps=1)


def rho_dtheta(p) -> RhoImage:
    """Image of the v-gradient of theta[I1]; vector part ("grad", I1) in the u-frame."""
    p = _partition(p)
    if p.multiplicity != 1:
        raise DomainError(f"rho_dtheta needs multiplicity 1, got {p.multiplicity}")
    return RhoImage.build(p.genus, _pair_quarters(p), omega_power=Fraction(1, 2), eps=1,
                          parts=(("grad", tuple(sorted(p.indices))),))


def rho_d2theta(p) -> RhoImage:
    """Image of the v-Hessian of theta[I2]; matrix part ("hess", I2) = S-hat(I2)."""
    p = _partition(p)
    if p.multiplicity != 2:
        raise DomainError(f"rho_d2theta needs multiplicity 2, got {p.multiplicity}")
    return RhoImage.build(p.genus, _pair_quarters(p), omega_power=Fraction(1, 2), eps=1,
                          parts=(("hess", tuple(sorted(p.indices))),))


def rho_dtau_theta(p) -> RhoImage:
    """d/dtau theta[I2] = Hessian / (4 i pi) with the normal-ordered sign -1."""
    img = rho_d2theta(p)
    return RhoImage.build(img.genus, dict(img.quarters), omega_power=img.omega_power, tau_order=1,
                          sign=-1, eps=img.eps, parts=img.parts)


def rho_monomial(chars) -> RhoImage:
    """Image of the lowest non-vanishing tau-derivative of a product of even theta constants."""
    parts = [_partition(c) for c in chars]
    if not parts:
        raise DomainError("empty monomial")
    if any(p.multiplicity % 2 for p in parts):
        raise DomainError("odd characteristic in a theta-constant monomial")
    if any(p.multiplicity > 2 for p in parts):
        raise DomainError("multiplicity above 2 is outside the supported genera")
    images = [rho_theta(p) if p.multiplicity == 0 else rho_dtau_theta(p) for p in parts]
    return reduce(lambda a, b: a * b, images)


def discriminant_image(g: int, power: int = 1) -> RhoImage:
    """Delta^power over all 2g + 2 roots, as exponent data."""
    q = {(i, l): 4 * power for i in range(2 * g + 2) for l in range(i)}
    return RhoImage.build(g, q)


# -- exact identities ------------------------------------------------------

def _dd(p: PartitionChar, roots, cache: dict):
    key = p.indices
    if key not in cache:
        cache[key] = vandermonde(p.indices, roots) * vandermonde(p.complement, roots)
    return cache[key]


def _ratio_sign(lhs, rhs):
    if rhs == 0:
        return None
    r = Fraction(lhs) / Fraction(rhs)
    if r == 1:
        return 1
    if r == -1:
        return -1
    return None


def _product(xs):
    return _prod(xs, 1)


@dataclass
class IdentityRecord:
    identity: str
    trial: int
    roots: list
    sign: int | None
    passed: bool
    detail: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {"identity": self.identity, "trial": self.trial, "roots": [str(r) for r in self.roots],
                "sign": self.sign, "pass": self.passed, **self.detail}


def _data_g3():
    systems = goepel.singular_systems(3, 3)
    triples = [goepel.structure_r2_g3(t) for t in goepel.singular_systems(3, 2)]
    return systems, triples


def _data_g4():
    return [(s, goepel.structure_r4_g4(s)) for s in goepel.singular_systems(4, 4)]


def _signs_record(name, trial, roots, signs, **detail):
    ok = all(s is not None for s in signs)
    counts = Counter(signs)
    sign = signs[0] if len(counts) == 1 else None
    detail = {"cases": len(signs), "sign_census": {str(k): v for k, v in sorted(counts.items(), key=str)},
              **detail}
    return IdentityRecord(name, trial, list(roots), sign, ok, detail)


def check_chi4(roots, trial=0) -> IdentityRecord:
    systems, _ = _data_g3()
    cache: dict = {}
    delta = vandermonde(range(8), roots)
    signs = [_ratio_sign(_product(_dd(p, roots, cache) for p in s.partitions()), delta ** 4) for s in systems]
    return _signs_record("chi4", trial, roots, signs)


def check_chi18(roots, trial=0) -> IdentityRecord:
    cache: dict = {}
    delta = vandermonde(range(8), roots)
    evens = [partition_of_char(c) for c in all_characteristics(3) if c.is_even]
    nonsing = [p for p in evens if p.multiplicity == 0]
    lhs = delta * _product(_dd(p, roots, cache) for p in nonsing)
    return _signs_record("chi18", trial, roots, [_ratio_sign(lhs, delta ** 16)], factors=len(nonsing))


def check_phi2_equal(roots, trial=0) -> IdentityRecord:
    _, triples = _data_g3()
    cache: dict = {}
    signs = [_ratio_sign(_product(_dd(p, roots, cache) for p in t["A2"].partitions()),
                         _product(_dd(p, roots, cache) for p in t["A3"].partitions())) for t in triples]
    return _signs_record("phi2_equal", trial, roots, signs)


def check_h0(roots, trial=0) -> IdentityRecord:
    _, triples = _data_g3()
    cache: dict = {}
    delta = vandermonde(range(8), roots)
    signs = []
    for t in triples:
        num = delta * _product(_dd(p, roots, cache) for p in t["A1"].partitions() if p.multiplicity == 0)
        rhs = _product(bracket(i, j, roots) for i, j in t["pairs"]) ** 4
        for b in ("A2", "A3"):
            den = _product(_dd(p, roots, cache) for p in t[b].partitions())
            signs.append(_ratio_sign(Fraction(num, den), rhs))
    return _signs_record("h0", trial, roots, signs)


def check_mu8(roots, trial=0) -> IdentityRecord:
    cache: dict = {}
    delta = vandermonde(range(10), roots)
    signs = []
    for s, wit in _data_g4():
        k1, k2 = wit["kappa"]
        lhs = _product(_dd(p, roots, cache) for p in s.partitions())
        rhs = Fraction(delta ** 2, bracket(k1, k2, roots) ** 2) ** 4
        signs.append(_ratio_sign(lhs, rhs))
    return _signs_record("mu8", trial, roots, signs)


def check_chi68(roots, trial=0) -> IdentityRecord:
    cache: dict = {}
    delta = vandermonde(range(10), roots)
    evens = [partition_of_char(c) for c in all_characteristics(4) if c.is_even]
    sing = _product(vandermonde(set(range(10)) - {k}, roots) for k in range(10))
    nonsing = [p for p in evens if p.multiplicity == 0]
    lhs = sing * _product(_dd(p, roots, cache) for p in nonsing)
    return _signs_record("chi68", trial, roots, [_ratio_sign(lhs, delta ** 64)],
                         singular=sum(p.multiplicity == 2 for p in evens), factors=len(nonsing))


def check_I1_translation(roots, trial=0, shift=None, rng=None) -> IdentityRecord:
    rng = rng or random.Random(trial)
    c = shift if shift is not None else Fraction(rng.randint(-99, 99), rng.randint(1, 20))
    a = quasi_invariant_I1(roots)
    b = quasi_invariant_I1([e + c for e in _roots(roots)])
    return IdentityRecord("I1_translation", trial, list(_roots(roots)), 1 if a == b else None, a == b,
                          {"shift": str(c), "value": str(a)})


IDENTITIES = {
    "chi4": (3, check_chi4),
    "chi18": (3, check_chi18),
    "phi2_equal": (3, check_phi2_equal),
    "h0": (3, check_h0),
    "I1_translation": (3, check_I1_translation),
    "mu8": (4, check_mu8),
    "chi68": (4, check_chi68),
}


def verify_identity(name: str, roots=None, trials: int = 3, seed: int = 0, strict: bool = True) -> list[dict]:
    """Check a named identity at ``trials`` root tuples (random distinct ints in [-50, 50]).

    Explicit ``roots`` are used for the first trial.  Raises VerificationError
    on the first failure when ``strict``.
    """
    if name not in IDENTITIES:
        raise DomainError(f"unknown identity {name!r}; choose from {sorted(IDENTITIES)}")
    g, fn = IDENTITIES[name]
    rng = random.Random(seed)
    out = []
    for t in range(trials):
        rs = RootSystem(tuple(roots)) if (roots is not None and t == 0) else RootSystem.random(g, rng)
        if rs.genus != g:
            raise DomainError(f"{name} needs {2 * g + 2} roots")
        rec = fn(rs.roots, t) if name != "I1_translation" else fn(rs.roots, t, rng=rng)
        out.append(rec.as_dict())
        if strict and not rec.passed:
            raise VerificationError(f"identity {name} failed at trial {t}", witness=rec.as_dict())
    return out


def identity_degrees() -> dict[str, tuple[int, int]]:
    """(lhs degree, rhs degree) of each fourth-power identity in the roots."""
    n0_g3 = 2 * comb(4, 2)
    n0_g4 = 2 * comb(5, 2)
    return {
        "chi4": (7 * n0_g3 + comb(8, 2), 4 * comb(8, 2)),
        "chi18": (35 * n0_g3 + comb(8, 2), 16 * comb(8, 2)),
        "mu8": (14 * n0_g4 + 2 * comb(9, 2), 4 * (2 * comb(10, 2) - 2)),
        "chi68": (126 * n0_g4 + 10 * comb(9, 2), 64 * comb(10, 2)),
    }


# -- quasi-invariant -------------------------------------------------------

def pair_partitions_g3() -> list[list[tuple[int, int]]]:
    """The 105 pair partitions recovered from the genus-3 rank-2 structure theorem."""
    return [[tuple(p) for p in w["pairs"]] for w in goepel.verify_structure(3, 2)["witnesses"]]


def quasi_invariant_I1(roots):
    """I1(e) = sum over the 105 pair partitions of [i1 j1][i2 j2][i3 j3][i4 j4]."""
    e = _roots(roots)
    if len(e) != 8:
        raise DomainError("I1 is defined for the 8 roots of a genus-3 binary form")
    return sum(_product(bracket(i, j, e) for i, j in pp) for pp in pair_partitions_g3())


def non_symmetry_witness(rng: random.Random, tries: int = 50):
    """Search for roots and a transposition (a, b) with I1(e) != I1(e o (a b))."""
    for _ in range(tries):
        e = list(RootSystem.random(3, rng).roots)
        a, b = rng.sample(range(8), 2)
        f = list(e)
        f[a], f[b] = f[b], f[a]
        v0, v1 = quasi_invariant_I1(e), quasi_invariant_I1(f)
        if v0 != v1:
            return {"roots": e, "transposition": (a, b), "before": v0, "after": v1}
    return None


def mobius_exponent_search(rng: random.Random, trials: int = 3, p_range=range(-2, 4),
                           q_range=range(-2, 9)) -> list[tuple[int, int]]:
    """Exploratory: (p, q) with I1(M e) prod(c e_i + d)^p == (ad - bc)^q I1(e) at every trial.

    Reported only; the two descriptions of I1's weight and degree disagree.
    """
    cases = []
    for _ in range(trials):
        while True:
            a, b, c, d = (rng.randint(-9, 9) for _ in range(4))
            e = RootSystem.random(3, rng).roots
            if a * d - b * c != 0 and all(c * x + d != 0 for x in e):
                break
        me = [Fraction(a * x + b, c * x + d) for x in e]
        if len(set(me)) != 8:
            continue
        cases.append((quasi_invariant_I1(me), _product(c * x + d for x in e), a * d - b * c,
                      quasi_invariant_I1(e)))
    hits = []
    for p in p_range:
        for q in q_range:
            if cases and all(i1m * Fraction(w) ** p == Fraction(det) ** q * i1 for i1m, w, det, i1 in cases):
                hits.append((p, q))
    return hits
