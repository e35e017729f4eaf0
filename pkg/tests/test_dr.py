from __future__ import annotations

import itertools
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from etale import InvalidStructure
from etale import dr
from etale.dr import FiniteSelfMap, build_dr, cocycle_cX

import samples


def _k_oracle(S: FiniteSelfMap, x: int, y: int, bound: int) -> set[int]:
    """All ``m - n`` with ``m, n <= bound`` and ``σ^m x = σ^n y``, by brute force."""
    out = set()
    for m in range(bound + 1):
        u = S.iterate(x, m)
        if u is None:
            break
        for n in range(bound + 1):
            v = S.iterate(y, n)
            if v is None:
                break
            if u == v:
                out.add(m - n)
    return out


def test_self_map_validation():
    with pytest.raises(InvalidStructure):
        FiniteSelfMap(2, [0, 2])
    with pytest.raises(InvalidStructure):
        FiniteSelfMap(2, [0])
    with pytest.raises(InvalidStructure):
        FiniteSelfMap(2, [1, None], codomain=[0, 1])
    s = FiniteSelfMap(3, {0: 1, 1: 1})
    assert s.domain == {0, 1} and s.codomain == {1}
    assert not s.is_total and not s.is_surjective


def test_tower_of_a_total_map():
    s = FiniteSelfMap(3, [1, 2, 2])
    t = dr.iterate_tower(s)
    assert all(t.domain(n) == frozenset(range(3)) for n in range(6))


def test_tower_of_a_partial_map():
    s = FiniteSelfMap(2, [1, None])
    t = dr.iterate_tower(s)
    assert t.domain(1) == {0}
    assert t.domain(2) == frozenset()
    assert t.range_(1) == {1}


def test_tower_of_a_permutation():
    t = dr.iterate_tower(dr.permutation_map([2, 0, 1]))
    assert all(t.range_(n) == frozenset(range(3)) for n in range(5))
    assert t.maps[0] == {0: 0, 1: 1, 2: 2}


@pytest.mark.parametrize("n", [1, 2, 3])
def test_tower_follows_the_inductive_formulas(n):
    for s in samples.all_self_maps(n, partial=True):
        t = dr.iterate_tower(s)
        for m in range(1, 2 * n + 2):
            Um = frozenset(x for x in s.points if s.iterate(x, m) is not None)
            assert t.domain(m) == Um
            if m <= t.stable:
                assert t.maps[m] == {x: s.iterate(x, m) for x in Um}


def test_fixed_point_example():
    g = build_dr(FiniteSelfMap(1, [0]))
    assert g.kset(0, 0) == dr.KSet(0, 1)
    assert dr.stab_min(g, 0) == 1


def test_two_points_into_a_fixed_point():
    g = build_dr(FiniteSelfMap(2, [1, 1]))
    assert g.kset(0, 1).p == 1 and 0 in g.kset(0, 1)
    assert dr.stab(g, 0) == dr.KSet(0, 1)


def test_three_cycle_example():
    g = build_dr(dr.cycle_map(3))
    for x in range(3):
        assert dr.stab(g, x) == dr.KSet(0, 3)
        assert dr.stab_min(g, x) == 3 == dr.stab_ess_min(g, x)


def test_stabiliser_of_a_wandering_point_is_trivial():
    g = build_dr(FiniteSelfMap(3, [1, 2, None]))
    assert dr.stab(g, 0) == dr.KSet(0, 0)
    assert dr.stab_min(g, 0) == math.inf
    assert g.kset(0, 2) == dr.KSet(2, 0)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_ksets_match_brute_force(n):
    for s in samples.all_self_maps(n, partial=True):
        g = build_dr(s)
        bound = 4 * n + 4
        for x in s.points:
            for y in s.points:
                found = _k_oracle(s, x, y, bound)
                ks = g.kset(x, y)
                if ks is None:
                    assert not found
                    continue
                window = [k for k in range(-n - 1, n + 2)]
                assert {k for k in window if k in ks} == {k for k in window if k in found}


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_kset_coherence_is_exhaustive(n):
    for s in samples.all_self_maps(n, partial=n < 4):
        rep = build_dr(s).validate()
        assert rep.ok, (s, str(rep))


def test_stabilisers_and_essential_stabilisers_agree():
    for s in samples.all_self_maps(3, partial=True):
        g = build_dr(s)
        for x in s.points:
            assert dr.stab(g, x) == dr.stab_ess(g, x)
            assert dr.stab_min(g, x) == dr.stab_ess_min(g, x)


def test_isotropy_is_torsion_free():
    # a subgroup pZ of Z, with p the period of the eventual cycle
    for s in samples.all_self_maps(3, partial=True):
        g = build_dr(s)
        for x in s.points:
            ks = g.kset(x, x)
            assert ks.k0 == 0 and ks.p == s.period(x)


def test_arrow_operations():
    # 0 -> 1 -> 2 -> 1, so K(0, 2) = 2Z and K(2, 1) = 1 + 2Z
    g = build_dr(FiniteSelfMap(3, [1, 2, 1]))
    assert not g.is_arrow((0, 1, 2))
    a = (0, 2, 2)
    assert g.is_arrow(a)
    assert g.inverse(a) == (2, -2, 0)
    assert g.compose(a, g.inverse(a)) == (0, 0, 0)
    assert g.compose(a, (2, 1, 1)) == (0, 3, 1)
    assert not g.composable(a, (0, 0, 0))
    assert g.source(a) == 2 and g.range_(a) == 0


def test_cX_cocycle():
    g = build_dr(FiniteSelfMap(2, [1, 0]))
    c = cocycle_cX(g)
    assert c((0, 0, 0)) == (0,)
    assert c(g.inverse((0, 3, 1))) == (-3,)
    assert dr.check_dr_cocycle(g, c).ok
    for s in samples.all_self_maps(3):
        gg = build_dr(s)
        for cc in (cocycle_cX(gg), dr.trivial_dr_cocycle(gg), dr.mod_cocycle(gg, 2)):
            assert dr.check_dr_cocycle(gg, cc).ok
    with pytest.raises(InvalidStructure):
        dr.mod_cocycle(g, 0)


def test_kernel_isotropy_periods():
    g = build_dr(dr.cycle_map(3))
    assert dr.kernel_isotropy_period(g, cocycle_cX(g), 0) == 0
    assert dr.kernel_isotropy_period(g, dr.trivial_dr_cocycle(g), 0) == 3
    assert dr.kernel_isotropy_period(g, dr.mod_cocycle(g, 2), 0) == 6


def test_dr_isomorphisms():
    g = build_dr(dr.cycle_map(3))
    assert dr.check_dr_iso(dr.identity_dr_iso(g)).ok
    assert dr.check_dr_iso(dr.flip_dr_iso(g, g, (0, 2, 1))).ok
    rot = dr.dr_iso_from_function(g, g, (1, 2, 0), lambda x, k, y: k)
    assert dr.check_dr_iso(rot).ok
    # moving the units off displacement 0 breaks unit preservation
    bad = dr.dr_iso_from_function(g, g, (0, 1, 2), lambda x, k, y: -k if x != y else k + 1)
    assert not dr.check_dr_iso(bad).ok
    assert dr.dr_iso_cocycle_compatible(rot, cocycle_cX(g), cocycle_cX(g))
    assert not dr.dr_iso_cocycle_compatible(dr.flip_dr_iso(g, g, (0, 2, 1)), cocycle_cX(g), cocycle_cX(g))


def test_dr_inverse_and_composition():
    g = build_dr(dr.cycle_map(3))
    rot = dr.dr_iso_from_function(g, g, (1, 2, 0), lambda x, k, y: k)
    inv = dr.dr_inverse(rot)
    both = dr.compose_dr(inv, rot)
    for a in g.arrows_window(6):
        assert both(a) == a
        assert inv(rot(a)) == a


def test_disjoint_union():
    u = dr.disjoint_union_maps([dr.cycle_map(2), FiniteSelfMap(1, [0])])
    assert u.table == (1, 0, 2)
    assert [len(c) for c in u.cycles()] == [2, 1]


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 5).flatmap(lambda n: st.lists(st.one_of(st.none(), st.integers(0, n - 1)),
                                                    min_size=n, max_size=n)))
def test_groupoid_structure_on_random_maps(table):
    s = FiniteSelfMap(len(table), table)
    g = build_dr(s)
    assert g.validate().ok
    w = g.default_window
    arrows = g.arrows_window(w)
    for a in arrows:
        assert g.compose(g.inverse(a), a) == g.unit_arrow(a[2])
    for a, b in itertools.product(arrows[:30], repeat=2):
        if g.composable(a, b):
            ab = g.compose(a, b)
            assert g.is_arrow(ab) and ab[1] == a[1] + b[1]


def _brute_force_class(s: FiniteSelfMap) -> tuple:
    """Least relabelled table over all permutations of the points."""
    best = None
    for p in itertools.permutations(range(s.size)):
        table = [None] * s.size
        for x in s.points:
            if s.table[x] is not None:
                table[p[x]] = p[s.table[x]]
        key = tuple(-1 if v is None else v for v in table)
        best = key if best is None or key < best else best
    return best


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_conjugacy_class_representatives_match_brute_force(n):
    classes = samples.self_map_classes(n)
    expected = {_brute_force_class(s) for s in samples.all_self_maps(n, partial=True)}
    assert len(classes) == len(expected)
    assert {_brute_force_class(s) for s in classes} == expected
    assert len({samples.self_map_code(s) for s in classes}) == len(classes)
