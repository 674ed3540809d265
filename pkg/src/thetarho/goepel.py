"""Göpel groups and Göpel systems of theta characteristics.

A Göpel group of rank r is a subgroup of 2^r characteristics that pairwise
have zero pairing; its cosets are the Göpel systems.  Groups are enumerated
through their reduced echelon bases (pivot = highest bit of the packed code),
which visits every subgroup exactly once.
"""
from __future__ import annotations

import os
from collections import Counter
from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations, permutations
from pathlib import Path

from thetarho.charkit import (
    Characteristic,
    PartitionChar,
    all_characteristics,
    pairing,
    partition_of_char,
)
from thetarho.errors import DomainError, VerificationError

CACHE_VERSION = 1
CACHE_ENV = "THETARHO_CACHE"

SUPPORTED_CENSUS = {(3, 3), (3, 2), (4, 4)}


@dataclass(frozen=True)
class GoepelGroup:
    genus: int
    generators: tuple
    elements: tuple  # sorted codes

    @property
    def rank(self) -> int:
        return len(self.generators)

    def characteristics(self) -> list[Characteristic]:
        return [Characteristic.from_code(self.genus, c) for c in self.elements]

    def check(self) -> None:
        """Closure, pairwise syzygy and size; raises VerificationError."""
        els = set(self.elements)
        if len(els) != 1 << self.rank or 0 not in els:
            raise VerificationError("group has the wrong size or lacks zero", witness=self.elements)
        if any(a ^ b not in els for a in els for b in els):
            raise VerificationError("group not closed under addition", witness=self.elements)
        chars = self.characteristics()
        if any(pairing(p, q) for p, q in combinations(chars, 2)):
            raise VerificationError("group contains an azygetic pair", witness=self.elements)


@dataclass(frozen=True)
class GoepelSystem:
    base: Characteristic
    group: GoepelGroup
    elements: tuple  # Characteristics, sorted

    @property
    def profile(self) -> Counter:
        """Counts keyed by (multiplicity, parity)."""
        return Counter((partition_of_char(c).multiplicity, "odd" if c.is_odd else "even")
                       for c in self.elements)

    @property
    def kind(self) -> str:
        odd = sum(c.is_odd for c in self.elements)
        if odd == 0:
            return "even"
        if odd == len(self.elements):
            return "odd"
        return "mixed"

    def partitions(self) -> list[PartitionChar]:
        return [partition_of_char(c) for c in self.elements]

    def singular(self) -> list[PartitionChar]:
        return [p for p in self.partitions() if p.multiplicity >= 2]

    def label(self) -> str:
        """Multiplicity profile of a wholly even system, e.g. ``1[I2]+7[I0]``."""
        counts = Counter(p.multiplicity for p in self.partitions())
        return "+".join(f"{counts[m]}[I{m}]" for m in sorted(counts, reverse=True))


def _span(gens) -> list[int]:
    out = [0]
    for v in gens:
        out += [x ^ v for x in out]
    return out


def _iso_table(g: int):
    chars = all_characteristics(g)
    return [[pairing(p, q) == 0 for q in chars] for p in chars]


def enumerate_groups_uncached(g: int, r: int) -> list[GoepelGroup]:
    if not 1 <= r <= g:
        raise DomainError(f"rank {r} must satisfy 1 <= r <= g = {g}")
    n = 1 << (2 * g)
    iso = _iso_table(g)
    groups: list[GoepelGroup] = []
    seen: set[tuple] = set()

    def extend(gens: list[int], pivot_mask: int, last_pivot: int):
        if len(gens) == r:
            key = tuple(sorted(_span(gens)))
            if key in seen:
                raise AssertionError("echelon enumeration produced a duplicate group")
            seen.add(key)
            groups.append(GoepelGroup(g, tuple(Characteristic.from_code(g, x) for x in gens), key))
            return
        for v in range(1 << (last_pivot + 1), n):
            if v & pivot_mask:
                continue
            if all(iso[v][w] for w in gens):
                extend(gens + [v], pivot_mask | (1 << (v.bit_length() - 1)), v.bit_length() - 1)

    extend([], 0, -1)
    groups.sort(key=lambda grp: grp.elements)
    return groups


def brute_force_groups(g: int, r: int) -> set[frozenset]:
    """Oracle: every r-subset of nonzero characteristics, kept when independent and syzygetic."""
    chars = all_characteristics(g)[1:]
    found = set()
    for subset in combinations(chars, r):
        if any(pairing(p, q) for p, q in combinations(subset, 2)):
            continue
        span = frozenset(_span([c.code for c in subset]))
        if len(span) == 1 << r:
            found.add(span)
    return found


def cache_dir() -> Path:
    return Path(os.environ.get(CACHE_ENV, Path.home() / ".cache" / "thetarho"))


def _cache_path(directory: Path, g: int, r: int) -> Path:
    return directory / f"goepel_g{g}_r{r}.txt"


def write_cache(path: Path, g: int, r: int, groups: list[GoepelGroup]) -> None:
    """One header line, then one group per line as sorted hex element codes."""
    path.parent.mkdir(parents=True, exist_ok=True)
    width = (2 * g + 3) // 4
    lines = [f"# thetarho-goepel version={CACHE_VERSION} g={g} r={r} count={len(groups)}"]
    for grp in groups:
        lines.append(" ".join(format(x, f"0{width}x") for x in grp.elements))
    tmp = path.with_suffix(".tmp")
    tmp.write_text("\n".join(lines) + "\n")
    tmp.replace(path)


def read_cache(path: Path, g: int, r: int) -> list[GoepelGroup] | None:
    """Groups from a cache file, or None when missing, stale or malformed."""
    try:
        header, *body = path.read_text().splitlines()
    except (OSError, ValueError):
        return None
    fields = dict(tok.split("=", 1) for tok in header.split()[2:] if "=" in tok)
    if fields.get("version") != str(CACHE_VERSION) or fields.get("g") != str(g) or fields.get("r") != str(r):
        return None
    groups = []
    try:
        for line in body:
            if not line.strip():
                continue
            els = tuple(sorted(int(tok, 16) for tok in line.split()))
            gens = _greedy_basis(els)
            groups.append(GoepelGroup(g, tuple(Characteristic.from_code(g, x) for x in gens), els))
    except ValueError:
        return None
    if len(groups) != int(fields.get("count", -1)):
        return None
    return groups


def _greedy_basis(elements) -> list[int]:
    """Greedy basis: each generator is the smallest element outside the span so far."""
    basis: list[int] = []
    span = {0}
    for x in sorted(elements):
        if x not in span:
            basis.append(x)
            span |= {y ^ x for y in span}
    return basis


def enumerate_groups(g: int, r: int, use_cache: bool = True, directory: Path | None = None) -> list[GoepelGroup]:
    """All Göpel groups of rank r in genus g, sorted by element set."""
    if not 1 <= r <= g <= 4:
        raise DomainError(f"unsupported (g, r) = ({g}, {r}); need 1 <= r <= g <= 4")
    if not use_cache:
        return enumerate_groups_uncached(g, r)
    return _enumerate_cached(g, r, str(directory or cache_dir()))


@lru_cache(maxsize=None)
def _enumerate_cached(g: int, r: int, directory: str) -> list[GoepelGroup]:
    path = _cache_path(Path(directory), g, r)
    groups = read_cache(path, g, r)
    if groups is None:
        groups = enumerate_groups_uncached(g, r)
        try:
            write_cache(path, g, r, groups)
        except OSError:
            pass
    return groups


def systems_of_group(group: GoepelGroup) -> list[GoepelSystem]:
    g = group.genus
    left = set(range(1 << (2 * g)))
    out = []
    while left:
        a = min(left)
        coset = sorted(a ^ x for x in group.elements)
        left.difference_update(coset)
        out.append(GoepelSystem(Characteristic.from_code(g, a), group,
                                tuple(Characteristic.from_code(g, x) for x in coset)))
    return out


def expected_group_count(g: int, r: int) -> int:
    """Number of r-dimensional isotropic subspaces of a 2g-dimensional symplectic space over GF(2)."""
    num = den = 1
    for i in range(r):
        num *= 4 ** (g - i) - 1
        den *= 2 ** (i + 1) - 1
    return num // den


def expected_system_counts(g: int, r: int) -> dict[str, int]:
    s = g - r
    if s == 0:
        return {"even": 1, "odd": 0, "mixed": (1 << r) - 1}
    return {"even": 2 ** (s - 1) * (2 ** s + 1), "odd": 2 ** (s - 1) * (2 ** s - 1),
            "mixed": 2 ** (2 * s) * (2 ** r - 1)}


def system_counts(group: GoepelGroup) -> dict[str, int]:
    c = Counter(sys.kind for sys in systems_of_group(group))
    return {k: c.get(k, 0) for k in ("even", "odd", "mixed")}


def wholly_even_systems(group: GoepelGroup) -> list[GoepelSystem]:
    return [s for s in systems_of_group(group) if s.kind == "even"]


def classify_wholly_even(g: int, r: int, **kw) -> dict[str, int]:
    """Census of wholly even systems by multiplicity profile.

    For rank g - 1 in genus 3 every group has three wholly even systems and
    the census is taken over these triples.
    """
    if (g, r) not in SUPPORTED_CENSUS:
        raise DomainError(f"no census for (g, r) = ({g}, {r})")
    census: Counter = Counter()
    for grp in enumerate_groups(g, r, **kw):
        evens = wholly_even_systems(grp)
        if r == g:
            census[evens[0].label()] += 1
        else:
            census[triple_label(evens)] += 1
    return dict(sorted(census.items()))


def triple_label(systems: list[GoepelSystem]) -> str:
    labels = Counter(s.label() for s in systems)
    plain = "4[I0]"
    if set(labels) == {plain}:
        return f"{labels[plain]}({plain})"
    parts = [f"({lab})" for lab in sorted(labels) if lab != plain]
    parts.append(f"{labels[plain]}({plain})")
    return "+".join(parts)


# -- structure theorems ----------------------------------------------------

def _mask(subset, index_of) -> int:
    m = 0
    for i in subset:
        m |= 1 << index_of[i]
    return m


def _mod_complement(mask: int, full: int = 0xFF) -> int:
    return mask if mask & 1 else full ^ mask


def _seven_sets(i, j):
    i1, i2, i3, i4 = i
    j1, j2, j3, j4 = j
    return [(i1, i2, i3, i4), (i1, i2, j1, j2), (i1, i2, j3, j4), (i1, i3, j1, j3),
            (i1, i3, j2, j4), (i1, i4, j1, j4), (i1, i4, j2, j3)]


@lru_cache(maxsize=None)
def _seven_table():
    """Families of seven 4|4 splits of {0..7} mapped to one labelling (i, j) each."""
    ident = {k: k for k in range(8)}
    table = {}
    for perm in permutations(range(8)):
        i, j = perm[:4], perm[4:]
        fam = frozenset(_mod_complement(_mask(s, ident)) for s in _seven_sets(i, j))
        table.setdefault(fam, (i, j))
    return table


def _pair_sets(i, j):
    i1, i2, i3, i4 = i
    j1, j2, j3, j4 = j
    a1 = [(i1, j1, i2, j2), (i1, j1, i3, j3), (i1, j1, i4, j4)]
    a2 = [(i1, i2, i3, i4), (i1, i2, j3, j4), (i1, j2, i3, j4), (i1, j2, j3, i4)]
    a3 = [(i1, i2, i3, j4), (i1, i2, j3, i4), (i1, j2, i3, i4), (j1, i2, i3, i4)]
    return a1, a2, a3


@lru_cache(maxsize=None)
def _triple_table():
    """(A1 family, {A2 family, A3 family}) -> labelling, over {0..7}."""
    ident = {k: k for k in range(8)}
    fam = lambda sets: frozenset(_mod_complement(_mask(s, ident)) for s in sets)
    table = {}
    for perm in permutations(range(8)):
        i, j = perm[:4], perm[4:]
        a1, a2, a3 = (fam(x) for x in _pair_sets(i, j))
        table.setdefault((a1, frozenset((a2, a3))), (i, j, a2))
    return table


def seven_family_count() -> int:
    """Number of distinct seven-split families on eight labels."""
    return len(_seven_table())


def seven_family_combinations() -> Counter:
    """Incidences (4|4 split, matching of its pair-splits) over all families.

    Inside a family every other split Y cuts a split X|X' into a pair of X
    and a pair of X'; this pairs the three pair-splits of X with the three
    of X'.  Each (split, matching) should arise from exactly one family,
    giving 35 * 6 = 210 combinations grouped seven per family.
    """
    out: Counter = Counter()
    for fam in _seven_table():
        for x in fam:
            xc = 0xFF ^ x
            match = set()
            for y in fam - {x}:
                for yy in (y, 0xFF ^ y):
                    a = yy & x
                    if bin(a).count("1") == 2 and yy & xc:
                        match.add((frozenset((a, x ^ a)), frozenset((yy & xc, xc ^ (yy & xc)))))
            out[(x, frozenset(match))] += 1
    return out


def _match_seven(sets4, labels):
    """Find (i, j) in ``labels`` reproducing seven 4-subsets up to complement."""
    index_of = {lab: k for k, lab in enumerate(labels)}
    fam = frozenset(_mod_complement(_mask(s, index_of)) for s in sets4)
    hit = _seven_table().get(fam)
    if hit is None or len(fam) != 7:
        return None
    i, j = hit
    return tuple(labels[k] for k in i), tuple(labels[k] for k in j)


def structure_r3_g3(system: GoepelSystem) -> dict:
    parts = system.partitions()
    sing = [p for p in parts if p.multiplicity == 2]
    if len(sing) != 1 or sing[0].indices:
        raise VerificationError("system does not contain [emptyset] exactly once", witness=_ids(system))
    labels = tuple(range(8))
    hit = _match_seven([p.indices for p in parts if p.multiplicity == 0], labels)
    if hit is None:
        raise VerificationError("genus-3 rank-3 system does not match the 1+7 pattern", witness=_ids(system))
    i, j = hit
    return {"i": list(i), "j": list(j)}


def structure_r4_g4(system: GoepelSystem) -> dict:
    parts = system.partitions()
    sing = sorted(next(iter(p.indices)) for p in parts if p.multiplicity == 2)
    if len(sing) != 2:
        raise VerificationError("system does not contain exactly two singular characteristics",
                                witness=_ids(system))
    k1, k2 = sing
    rest = tuple(x for x in range(10) if x not in sing)
    xs = []
    for p in parts:
        if p.multiplicity != 0:
            continue
        side = p.indices if k1 in p.indices else p.complement
        if k2 in side:
            raise VerificationError("non-singular element contains both pivots", witness=_ids(system))
        xs.append(side - {k1})
    hit = _match_seven(xs, rest)
    fam = {frozenset(x) for x in xs}
    if hit is None or len(fam) != 14 or any(frozenset(rest) - x not in fam for x in fam):
        raise VerificationError("genus-4 rank-4 system does not match the 2+14 pattern", witness=_ids(system))
    i, j = hit
    return {"kappa": [k1, k2], "i": list(i), "j": list(j)}


def structure_r2_g3(systems: list[GoepelSystem]) -> dict:
    """Match three wholly even 4-systems of one rank-2 group against the split pattern."""
    with_sing = [s for s in systems if any(p.multiplicity == 2 for p in s.partitions())]
    if len(with_sing) != 1:
        raise VerificationError("triple does not have exactly one singular system",
                                witness=[_ids(s) for s in systems])
    a1 = with_sing[0]
    others = [s for s in systems if s is not a1]
    ident = {k: k for k in range(8)}
    fam = lambda s: frozenset(_mod_complement(_mask(p.indices, ident)) for p in s.partitions()
                              if p.multiplicity == 0)
    key = (fam(a1), frozenset(fam(s) for s in others))
    hit = _triple_table().get(key)
    if hit is None:
        raise VerificationError("rank-2 triple does not match the pair-split pattern",
                                witness=[_ids(s) for s in systems])
    i, j, a2fam = hit
    a2 = others[0] if fam(others[0]) == a2fam else others[1]
    a3 = others[1] if a2 is others[0] else others[0]
    return {"pairs": [sorted((i[k], j[k])) for k in range(4)], "i": list(i), "j": list(j),
            "A1": a1, "A2": a2, "A3": a3}


def _ids(system: GoepelSystem) -> list[str]:
    return [str(p) for p in system.partitions()]


def singular_systems(g: int, r: int, **kw) -> list:
    """Wholly even systems (r = g) or triples (r = g - 1) that contain a singular characteristic."""
    out = []
    for grp in enumerate_groups(g, r, **kw):
        evens = wholly_even_systems(grp)
        if r == g:
            if evens[0].singular():
                out.append(evens[0])
        elif any(s.singular() for s in evens):
            out.append(evens)
    return out


def verify_structure(g: int, r: int, **kw) -> dict:
    """Match every singular-containing wholly even system against its pattern.

    Returns {"count", "witnesses", ...}; raises VerificationError on the
    first system that does not match.
    """
    if (g, r) == (3, 3):
        wits = [structure_r3_g3(s) for s in singular_systems(3, 3, **kw)]
        return {"g": 3, "r": 3, "count": len(wits), "witnesses": wits}
    if (g, r) == (3, 2):
        wits = [structure_r2_g3(t) for t in singular_systems(3, 2, **kw)]
        pairings = {tuple(tuple(p) for p in sorted(w["pairs"])) for w in wits}
        return {"g": 3, "r": 2, "count": len(wits), "witnesses": wits,
                "distinct_pair_partitions": len(pairings)}
    if (g, r) == (4, 4):
        wits = [structure_r4_g4(s) for s in singular_systems(4, 4, **kw)]
        census = Counter(tuple(w["kappa"]) for w in wits)
        return {"g": 4, "r": 4, "count": len(wits), "witnesses": wits,
                "kappa_pairs": len(census), "systems_per_pair": sorted(set(census.values()))}
    raise DomainError(f"no structure theorem for (g, r) = ({g}, {r})")
