"""Half-period theta characteristics of hyperelliptic curves.

A characteristic of genus g is a 2 x g bit matrix [eps'; eps].  Each row is
packed into an int bitmask with bit ``i`` holding column ``i + 1``.  Strings
use the form ``"top/bottom"`` with column 1 first, e.g. ``"111/101"``.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations
from math import comb

import numpy as np

from thetarho.errors import DomainError

MAX_GENUS = 16


def _popcount(x: int) -> int:
    return bin(x).count("1")


@dataclass(frozen=True, order=True)
class Characteristic:
    genus: int
    top: int
    bottom: int

    def __post_init__(self):
        if not 1 <= self.genus <= MAX_GENUS:
            raise DomainError(f"genus {self.genus} outside 1..{MAX_GENUS}")
        mask = (1 << self.genus) - 1
        if self.top & ~mask or self.bottom & ~mask or self.top < 0 or self.bottom < 0:
            raise DomainError("characteristic rows must be g-bit masks")

    @classmethod
    def zero(cls, g: int) -> "Characteristic":
        return cls(g, 0, 0)

    @classmethod
    def from_rows(cls, top, bottom) -> "Characteristic":
        if len(top) != len(bottom):
            raise DomainError("rows of unequal length")
        t = sum((int(x) % 2) << i for i, x in enumerate(top))
        b = sum((int(x) % 2) << i for i, x in enumerate(bottom))
        return cls(len(top), t, b)

    @classmethod
    def parse(cls, text: str) -> "Characteristic":
        top, sep, bottom = text.strip().partition("/")
        if not sep or set(top + bottom) - {"0", "1"}:
            raise DomainError(f"cannot parse characteristic {text!r}")
        return cls.from_rows([int(c) for c in top], [int(c) for c in bottom])

    @classmethod
    def from_code(cls, g: int, code: int) -> "Characteristic":
        mask = (1 << g) - 1
        return cls(g, code & mask, code >> g)

    @property
    def code(self) -> int:
        """Single-int packing: top in the low g bits, bottom above."""
        return self.top | (self.bottom << self.genus)

    def rows(self) -> tuple[tuple[int, ...], tuple[int, ...]]:
        g = self.genus
        return (tuple((self.top >> i) & 1 for i in range(g)),
                tuple((self.bottom >> i) & 1 for i in range(g)))

    def vectors(self) -> tuple[np.ndarray, np.ndarray]:
        """(eps', eps) as integer numpy vectors."""
        t, b = self.rows()
        return np.array(t, dtype=np.int64), np.array(b, dtype=np.int64)

    def __add__(self, other: "Characteristic") -> "Characteristic":
        _same_genus(self, other)
        return Characteristic(self.genus, self.top ^ other.top, self.bottom ^ other.bottom)

    def __str__(self):
        t, b = self.rows()
        return "".join(map(str, t)) + "/" + "".join(map(str, b))

    def __repr__(self):
        return f"Characteristic({str(self)!r})"

    @property
    def is_odd(self) -> bool:
        return _popcount(self.top & self.bottom) % 2 == 1

    @property
    def is_even(self) -> bool:
        return not self.is_odd


def _same_genus(*chars: Characteristic) -> None:
    g = chars[0].genus
    if any(c.genus != g for c in chars):
        raise DomainError("characteristics of different genus")


def all_characteristics(g: int) -> list[Characteristic]:
    return [Characteristic.from_code(g, code) for code in range(1 << (2 * g))]


def parity(c: Characteristic) -> str:
    return "odd" if c.is_odd else "even"


def pairing(p: Characteristic, q: Characteristic) -> int:
    """|P,Q| = p.q' - p'.q mod 2."""
    _same_genus(p, q)
    return _popcount((p.bottom & q.top) ^ (p.top & q.bottom)) % 2


def triple_relation(p: Characteristic, q: Characteristic, r: Characteristic) -> int:
    return (pairing(p, q) + pairing(p, r) + pairing(q, r)) % 2


def branch_characteristic(g: int, k: int) -> Characteristic:
    """Characteristic of the branch point e_k, base point e_0.

    e_{2j-1} has eps' = unit j and eps = ones in columns 1..j-1; e_{2j} has
    the same eps' and ones in columns 1..j; e_{2g+1} is [0...0; 1...1].
    """
    if not 0 <= k <= 2 * g + 1:
        raise DomainError(f"branch index {k} outside 0..{2 * g + 1}")
    if g < 1:
        raise DomainError("genus must be positive")
    if k == 0:
        return Characteristic.zero(g)
    if k == 2 * g + 1:
        return Characteristic(g, 0, (1 << g) - 1)
    j = (k + 1) // 2
    ones = j - 1 if k % 2 else j
    return Characteristic(g, 1 << (j - 1), (1 << ones) - 1)


@lru_cache(maxsize=None)
def k_characteristic(g: int) -> Characteristic:
    """[K], the sum of the g odd branch characteristics [eps_{2k}]."""
    if g < 1:
        raise DomainError("genus must be positive")
    acc = Characteristic.zero(g)
    for k in range(1, g + 1):
        acc = acc + branch_characteristic(g, 2 * k)
    return acc


@dataclass(frozen=True)
class PartitionChar:
    genus: int
    indices: frozenset
    multiplicity: int

    @classmethod
    def of(cls, g: int, indices) -> "PartitionChar":
        """Build from any index set, normalizing to the canonical side."""
        idx = frozenset(indices)
        n = 2 * g + 2
        if any(not 0 <= i < n for i in idx):
            raise DomainError(f"indices must lie in 0..{n - 1}")
        if (len(idx) - (g + 1)) % 2:
            raise DomainError(f"|I|={len(idx)} has the wrong parity for genus {g}")
        comp = frozenset(range(n)) - idx
        if len(idx) > g + 1 or (len(idx) == g + 1 and 0 not in idx):
            idx = comp
        return cls(g, idx, (g + 1 - len(idx)) // 2)

    @property
    def complement(self) -> frozenset:
        return frozenset(range(2 * self.genus + 2)) - self.indices

    def __str__(self):
        return "{" + ",".join(map(str, sorted(self.indices))) + "}"


def char_of_partition(p: PartitionChar | tuple) -> Characteristic:
    """[I] = sum_{i in I} [eps_i] + [K]."""
    if not isinstance(p, PartitionChar):
        g, indices = p
        p = PartitionChar.of(g, indices)
    g = p.genus
    if (len(p.indices) - (g + 1)) % 2:
        raise DomainError("partition size has the wrong parity")
    acc = k_characteristic(g)
    for i in p.indices:
        acc = acc + branch_characteristic(g, i)
    return acc


@lru_cache(maxsize=None)
def partition_table(g: int) -> dict[int, PartitionChar]:
    """Map from characteristic code to its canonical partition."""
    n = 2 * g + 2
    table: dict[int, PartitionChar] = {}
    for m in range((g + 1) // 2 + 1):
        size = g + 1 - 2 * m
        for idx in combinations(range(n), size):
            if m == 0 and 0 not in idx:
                continue
            p = PartitionChar(g, frozenset(idx), m)
            code = char_of_partition(p).code
            if code in table:
                raise AssertionError(f"partition map not injective at {p}")
            table[code] = p
    if len(table) != 1 << (2 * g):
        raise AssertionError("partition map not surjective")
    return table


def partition_of_char(c: Characteristic) -> PartitionChar:
    return partition_table(c.genus)[c.code]


def multiplicity(c: Characteristic) -> int:
    return partition_of_char(c).multiplicity


def multiplicity_census(g: int) -> dict[int, int]:
    out: dict[int, int] = {}
    for p in partition_table(g).values():
        out[p.multiplicity] = out.get(p.multiplicity, 0) + 1
    return dict(sorted(out.items(), reverse=True))


def expected_multiplicity_census(g: int) -> dict[int, int]:
    out = {}
    for m in range((g + 1) // 2, -1, -1):
        out[m] = comb(2 * g + 1, g) if m == 0 else comb(2 * g + 2, g + 1 - 2 * m)
    return out


def parity_census(g: int) -> dict[str, int]:
    odd = sum(c.is_odd for c in all_characteristics(g))
    return {"even": (1 << (2 * g)) - odd, "odd": odd}


def expected_parity_census(g: int) -> dict[str, int]:
    return {"even": 2 ** (g - 1) * (2 ** g + 1), "odd": 2 ** (g - 1) * (2 ** g - 1)}


# -- modular group ---------------------------------------------------------

@dataclass(frozen=True, eq=False)
class SymplecticElement:
    """Integer block matrix [[a, b], [c, d]] preserving J = [[0, 1], [-1, 0]]."""

    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    d: np.ndarray

    def __post_init__(self):
        blocks = [np.array(x, dtype=np.int64) for x in (self.a, self.b, self.c, self.d)]
        g = blocks[0].shape[0]
        if any(x.shape != (g, g) for x in blocks):
            raise DomainError("blocks must be g x g")
        for name, x in zip("abcd", blocks):
            x.setflags(write=False)
            object.__setattr__(self, name, x)
        m = self.matrix()
        jm = standard_form(g)
        if not np.array_equal(m @ jm @ m.T, jm):
            raise DomainError("matrix is not symplectic")

    @property
    def genus(self) -> int:
        return self.a.shape[0]

    @classmethod
    def from_matrix(cls, m) -> "SymplecticElement":
        m = np.asarray(m, dtype=np.int64)
        g = m.shape[0] // 2
        return cls(m[:g, :g], m[:g, g:], m[g:, :g], m[g:, g:])

    def matrix(self) -> np.ndarray:
        return np.block([[self.a, self.b], [self.c, self.d]])

    def __matmul__(self, other: "SymplecticElement") -> "SymplecticElement":
        return SymplecticElement.from_matrix(self.matrix() @ other.matrix())

    def __eq__(self, other):
        return isinstance(other, SymplecticElement) and np.array_equal(self.matrix(), other.matrix())

    def __hash__(self):
        return hash(self.matrix().tobytes())

    def inverse(self) -> "SymplecticElement":
        # M^{-1} = -J M^T J for symplectic M
        jm = standard_form(self.genus)
        return SymplecticElement.from_matrix(-jm @ self.matrix().T @ jm)

    def act(self, tau: np.ndarray) -> np.ndarray:
        """(a tau + b)(c tau + d)^{-1}."""
        return (self.a @ tau + self.b) @ np.linalg.inv(self.c @ tau + self.d)

    def automorphy(self, tau: np.ndarray) -> np.ndarray:
        """c tau + d."""
        return self.c @ tau + self.d


def standard_form(g: int) -> np.ndarray:
    z = np.zeros((g, g), dtype=np.int64)
    one = np.eye(g, dtype=np.int64)
    return np.block([[z, one], [-one, z]])


def identity_element(g: int) -> SymplecticElement:
    z = np.zeros((g, g), dtype=np.int64)
    return SymplecticElement(np.eye(g, dtype=np.int64), z, z, np.eye(g, dtype=np.int64))


def j_element(g: int) -> SymplecticElement:
    z = np.zeros((g, g), dtype=np.int64)
    one = np.eye(g, dtype=np.int64)
    return SymplecticElement(z, one, -one, z)


def translation(b) -> SymplecticElement:
    """[[1, b], [0, 1]] for a symmetric integer matrix b."""
    b = np.asarray(b, dtype=np.int64)
    g = b.shape[0]
    if not np.array_equal(b, b.T):
        raise DomainError("translation matrix must be symmetric")
    return SymplecticElement(np.eye(g, dtype=np.int64), b, np.zeros((g, g), dtype=np.int64),
                             np.eye(g, dtype=np.int64))


def elementary_symmetric(g: int, i: int, j: int) -> np.ndarray:
    e = np.zeros((g, g), dtype=np.int64)
    e[i, j] = e[j, i] = 1
    return e


def generators(g: int) -> list[SymplecticElement]:
    """J together with translations by the elementary symmetric matrices."""
    gens = [j_element(g)]
    for i in range(g):
        for j in range(i, g):
            gens.append(translation(elementary_symmetric(g, i, j)))
    return gens


def gamma_action(gamma: SymplecticElement, c: Characteristic) -> Characteristic:
    """[gamma^{-1} eps]: the characteristic carried to gamma<tau>.

    top = d eps' - c eps + diag(c d^T), bottom = -b eps' + a eps + diag(a b^T).
    """
    if gamma.genus != c.genus:
        raise DomainError("genus mismatch between group element and characteristic")
    top, bottom = c.vectors()
    a, b, cc, d = gamma.a, gamma.b, gamma.c, gamma.d
    new_top = d @ top - cc @ bottom + np.diag(cc @ d.T)
    new_bottom = -b @ top + a @ bottom + np.diag(a @ b.T)
    return Characteristic.from_rows(new_top % 2, new_bottom % 2)
