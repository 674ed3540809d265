import itertools
from collections import Counter

import pytest

from thetarho import goepel
from thetarho.charkit import all_characteristics, triple_relation
from thetarho.errors import DomainError, VerificationError


@pytest.mark.parametrize("g,r", [(1, 1), (2, 1), (2, 2)])
def test_enumerator_matches_brute_force(g, r):
    fast = {frozenset(grp.elements) for grp in goepel.enumerate_groups_uncached(g, r)}
    assert fast == goepel.brute_force_groups(g, r)


@pytest.mark.parametrize("g,r", [(2, 1), (2, 2), (3, 1), (3, 2), (3, 3), (4, 4)])
def test_group_counts_and_validity(g, r):
    groups = goepel.enumerate_groups(g, r)
    assert len(groups) == goepel.expected_group_count(g, r)
    assert len({grp.elements for grp in groups}) == len(groups)
    for grp in groups[:200]:
        grp.check()


def test_reference_group_counts():
    assert len(goepel.enumerate_groups(3, 3)) == 135
    assert len(goepel.enumerate_groups(3, 2)) == 315
    assert goepel.expected_group_count(4, 4) == 2295


def test_rank_above_genus_rejected():
    with pytest.raises(DomainError):
        goepel.enumerate_groups(2, 3)


def test_check_rejects_bad_groups():
    grp = goepel.enumerate_groups(2, 2)[0]
    broken = goepel.GoepelGroup(2, grp.generators, grp.elements[:-1] + (15,))
    with pytest.raises(VerificationError):
        broken.check()


@pytest.mark.parametrize("g,r", [(2, 1), (2, 2), (3, 2), (3, 3), (4, 4)])
def test_system_counts_closed_form(g, r):
    exp = goepel.expected_system_counts(g, r)
    for grp in goepel.enumerate_groups(g, r)[:100]:
        systems = goepel.systems_of_group(grp)
        assert len(systems) == 1 << (2 * g - r)
        assert goepel.system_counts(grp) == exp
        covered = sorted(c.code for s in systems for c in s.elements)
        assert covered == list(range(1 << (2 * g)))


def test_systems_are_syzygetic_in_threes():
    grp = goepel.enumerate_groups(3, 3)[7]
    for s in goepel.systems_of_group(grp):
        for p, q, r in itertools.combinations(s.elements, 3):
            assert triple_relation(p, q, r) == 0


def test_wholly_even_censuses():
    assert goepel.classify_wholly_even(3, 3) == {"8[I0]": 105, "1[I2]+7[I0]": 30}
    assert goepel.classify_wholly_even(3, 2) == {"3(4[I0])": 210, "(1[I2]+3[I0])+2(4[I0])": 105}
    census = goepel.classify_wholly_even(4, 4)
    assert census == {"16[I0]": 945, "2[I2]+14[I0]": 1350}
    assert not any(k.startswith("1[I2]") for k in census)
    with pytest.raises(DomainError):
        goepel.classify_wholly_even(2, 2)


def test_structure_g3_r3():
    rep = goepel.verify_structure(3, 3)
    assert rep["count"] == 30
    for w in rep["witnesses"]:
        assert sorted(w["i"] + w["j"]) == list(range(8))


def test_structure_g3_r2():
    rep = goepel.verify_structure(3, 2)
    assert rep["count"] == 105
    assert rep["distinct_pair_partitions"] == 105


def test_structure_g4_r4():
    rep = goepel.verify_structure(4, 4)
    assert rep["count"] == 1350
    assert rep["kappa_pairs"] == 45
    assert rep["systems_per_pair"] == [30]


def test_structure_rejects_plain_system():
    plain = next(s for grp in goepel.enumerate_groups(3, 3) for s in goepel.wholly_even_systems(grp)
                 if not s.singular())
    with pytest.raises(VerificationError):
        goepel.structure_r3_g3(plain)
    with pytest.raises(DomainError):
        goepel.verify_structure(2, 2)


def test_split_families():
    assert goepel.seven_family_count() == 30
    combos = goepel.seven_family_combinations()
    # every (4|4 split, matching of the pair-splits) incidence occurs exactly once
    assert len(combos) == 210
    assert set(combos.values()) == {1}
    assert Counter(len(m) for _, m in combos) == {3: 210}


def test_cache_round_trip(tmp_path):
    groups = goepel.enumerate_groups_uncached(3, 2)
    path = tmp_path / "c.txt"
    goepel.write_cache(path, 3, 2, groups)
    back = goepel.read_cache(path, 3, 2)
    assert [g.elements for g in back] == [g.elements for g in groups]
    header = path.read_text().splitlines()[0]
    assert "version=" in header and "g=3" in header and "r=2" in header
    for grp in back[:20]:
        grp.check()


def test_stale_or_corrupt_cache_ignored(tmp_path):
    groups = goepel.enumerate_groups_uncached(2, 2)
    path = tmp_path / "c.txt"
    goepel.write_cache(path, 2, 2, groups)
    text = path.read_text()
    path.write_text(text.replace(f"version={goepel.CACHE_VERSION}", "version=0"))
    assert goepel.read_cache(path, 2, 2) is None
    path.write_text(text)
    assert goepel.read_cache(path, 2, 1) is None
    path.write_text(text + "zz\n")
    assert goepel.read_cache(path, 2, 2) is None
    path.write_text("\n".join(text.splitlines()[:-1]) + "\n")
    assert goepel.read_cache(path, 2, 2) is None
    assert goepel.read_cache(tmp_path / "missing.txt", 2, 2) is None


def test_enumerate_uses_directory(tmp_path):
    groups = goepel.enumerate_groups(3, 1, directory=tmp_path)
    assert (tmp_path / "goepel_g3_r1.txt").exists()
    assert len(groups) == 63


def test_even_systems_contain_only_even():
    for grp in goepel.enumerate_groups(3, 3)[:20]:
        for s in goepel.wholly_even_systems(grp):
            assert all(c.is_even for c in s.elements)
    assert sum(c.is_even for c in all_characteristics(3)) == 36
