from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from etale import InvalidStructure
from etale.groupoid import (check_action, check_cocycle, from_equivalence, from_group, from_group_bundle, from_set,
                            grading_blocks, identity_cocycle, is_bisection, is_principal, isotropy, isotropy_group,
                            kernel, orbits, product_with_R, transformation_groupoid, trivial_cocycle, validate)
from etale.groups import cyclic, direct_product, find_group_isomorphism, klein_four, symmetric, trivial_group
from etale.isomorphism import NotIsomorphic, check_iso, find_iso, identity_iso

import samples


@pytest.mark.parametrize("name", sorted(samples.generated_groupoids()))
def test_constructors_satisfy_axioms(name):
    g = samples.generated_groupoids()[name]
    rep = validate(g)
    assert rep.ok, str(rep)
    for a in g.morphisms:
        assert g.inv[g.inv[a]] == a
        assert g.compose(a, g.inv[a]) == g.rng[a]


@pytest.mark.parametrize("desc,g,check,witness", samples.mutations(), ids=[m[0] for m in samples.mutations()])
def test_mutations_fail_with_witness(desc, g, check, witness):
    rep = validate(g)
    assert not rep.ok
    c = rep.get(check)
    assert not c.passed
    if witness is not None:
        assert c.witness == witness


def test_group_groupoid_counts():
    assert (from_group(cyclic(2)).size, len(from_group(cyclic(2)).units)) == (2, 1)
    z4 = from_group(cyclic(4))
    assert isotropy(z4)[0].size == 4
    assert isotropy_group(z4, z4.units[0]).order == 4
    assert from_group(klein_four()).size == 4


def test_set_groupoid_composes_only_on_diagonal():
    g = from_set([1, 2, 3])
    assert validate(g).ok
    assert set(g.comp) == {(a, a) for a in g.morphisms}


def test_equivalence_relation_counts():
    assert from_equivalence([[1, 2, 3]]).size == 9
    assert from_equivalence([[1, 2], [3]]).size == 5
    singles = from_equivalence([[1], [2], [3]])
    assert singles.size == len(singles.units) == 3
    with pytest.raises(InvalidStructure):
        from_equivalence([[1, 2], [2, 3]])


def test_group_bundle():
    b = from_group_bundle(["a", "b"], {"a": cyclic(2), "b": cyclic(3)})
    assert (b.size, len(b.units)) == (5, 2)
    assert all(b.src[a] == b.rng[a] for a in b.morphisms)
    assert orbits(b) == [(b.units[0],), (b.units[1],)]
    one = from_group_bundle(["a"], {"a": cyclic(2)})
    assert find_iso(one, from_group(cyclic(2)))
    assert from_group_bundle(["a"], {"a": trivial_group()}).size == 1


def test_transformation_groupoid_examples():
    g, c = transformation_groupoid([1, 2], cyclic(2), lambda x, a: x if a == 0 else 3 - x)
    assert (g.size, len(g.units)) == (4, 2)
    assert is_principal(g)
    triv, _ = transformation_groupoid([1], cyclic(2), lambda x, a: x)
    assert find_iso(triv, from_group(cyclic(2)))
    z3, _ = transformation_groupoid([1, 2, 3], cyclic(3), lambda x, a: (x - 1 + a) % 3 + 1)
    assert is_principal(z3)
    assert find_iso(z3, from_equivalence([[1, 2, 3]]))


def test_transformation_groupoid_rejects_left_action():
    S = symmetric(3)
    perms = S.labels
    # for a nonabelian group exactly one of x -> a(x) and x -> a^-1(x) is a right action
    one = check_action([0, 1, 2], S, lambda x, a: perms[a][x])
    other = check_action([0, 1, 2], S, lambda x, a: perms[S.inv(a)][x])
    assert one.ok != other.ok
    assert not check_action([0, 1], cyclic(2), lambda x, a: 0).ok
    with pytest.raises(InvalidStructure):
        transformation_groupoid([0, 1], cyclic(2), lambda x, a: 0)


def test_isotropy_matches_stabilisers():
    S = symmetric(3)
    perms = S.labels
    g, _ = transformation_groupoid([0, 1, 2], S, samples._perm_act(S))
    for i, x in enumerate(g.units):
        stab = [a for a in S.elements if perms[a][i] == i]
        assert isotropy_group(g, x).order == len(stab)


def test_orbits_and_isotropy_of_full_relation():
    r3 = from_equivalence([[1, 2, 3]])
    sub, _ = isotropy(r3)
    assert sub.size == 3
    assert orbits(r3) == [tuple(r3.units)]
    with pytest.raises(InvalidStructure):
        isotropy_group(r3, r3.index_of((1, 2)))


def test_bisections():
    r3 = from_equivalence([[1, 2, 3]])
    assert is_bisection(r3, r3.units)
    assert not is_bisection(r3, [r3.index_of((1, 2)), r3.index_of((1, 3))])
    assert is_bisection(r3, [r3.index_of((1, 2)), r3.index_of((2, 3))])


def test_cocycles_and_kernels():
    g, c = transformation_groupoid([0, 1], cyclic(2), lambda x, a: x ^ a)
    assert check_cocycle(g, c).ok
    ker, _ = kernel(g, c)
    assert ker.size == len(ker.units) == 2
    t = trivial_cocycle(g)
    assert kernel(g, t)[0].size == g.size
    z4 = from_group(cyclic(4))
    blocks = grading_blocks(z4, identity_cocycle(z4, cyclic(4)))
    assert sorted(len(v) for v in blocks.values()) == [1, 1, 1, 1]
    assert kernel(z4, identity_cocycle(z4, cyclic(4)))[0].size == 1


def test_broken_cocycle_has_witness():
    from etale.groupoid import Cocycle

    z4 = from_group(cyclic(4))
    c = Cocycle(z4, cyclic(4), (0, 1, 1, 3))
    rep = check_cocycle(z4, c)
    assert not rep.ok
    assert any(f.witness is not None for f in rep.failures())


def test_grading_blocks_partition_and_multiply():
    S = symmetric(3)
    g, c = transformation_groupoid([0, 1, 2], S, samples._perm_act(S))
    blocks = grading_blocks(g, c)
    seen = sorted(a for v in blocks.values() for a in v)
    assert seen == list(g.morphisms)
    for x, bx in blocks.items():
        for y, by in blocks.items():
            for a in bx:
                for b in by:
                    if g.composable(a, b):
                        assert g.compose(a, b) in blocks[S.mul(x, y)]


def test_product_with_R():
    assert find_iso(product_with_R(from_set([0]), 1), from_equivalence([[0, 1]]))
    assert product_with_R(from_equivalence([[0, 1]]), 1).size == 16
    assert find_iso(product_with_R(from_group(cyclic(2)), 0), from_group(cyclic(2)))


def test_find_iso_examples():
    r3 = from_equivalence([[1, 2, 3]])
    z3, _ = transformation_groupoid([0, 1, 2], cyclic(3), lambda x, a: (x + a) % 3)
    phi = find_iso(r3, z3)
    assert phi and check_iso(phi).ok
    assert isinstance(find_iso(from_group(cyclic(4)), from_group(klein_four())), NotIsomorphic)
    assert identity_iso(r3).map == tuple(r3.morphisms)
    assert find_iso(r3, r3)


def test_find_iso_is_symmetric():
    gs = list(samples.generated_groupoids().values())[:14]
    for g in gs:
        for h in gs:
            if g.size == h.size:
                assert bool(find_iso(g, h)) == bool(find_iso(h, g))


@st.composite
def partitions(draw):
    n = draw(st.integers(1, 6))
    labels = draw(st.lists(st.integers(0, n - 1), min_size=n, max_size=n))
    blocks: dict = {}
    for x, b in enumerate(labels):
        blocks.setdefault(b, []).append(x)
    return list(blocks.values())


@settings(max_examples=40, deadline=None)
@given(partitions())
def test_equivalence_relations_are_principal(blocks):
    g = from_equivalence(blocks)
    assert validate(g).ok
    assert g.size == sum(len(b) ** 2 for b in blocks)
    assert is_principal(g)
    assert sorted(len(o) for o in orbits(g)) == sorted(len(b) for b in blocks)


@settings(max_examples=25, deadline=None)
@given(st.sampled_from(sorted(samples.small_groups())), st.sampled_from(sorted(samples.small_groups())))
def test_group_groupoids_iso_iff_groups_iso(a, b):
    G, H = samples.small_groups()[a], samples.small_groups()[b]
    same = G.order == H.order and find_group_isomorphism(G, H) is not None
    assert bool(find_iso(from_group(G), from_group(H))) == same


def test_direct_product_group_is_valid():
    assert direct_product(cyclic(2), cyclic(4)).validate().ok
