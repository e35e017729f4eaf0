from __future__ import annotations

import itertools
import random

import pytest

from etale import HypothesisError, InvalidStructure
from etale import algebra as alg
from etale import dr, weyl
from etale.algebra import delta
from etale.groupoid import (check_cocycle, from_equivalence, from_group, identity_cocycle, trivial_cocycle,
                            validate)
from etale.groups import cyclic, klein_four
from etale.isomorphism import NotIsomorphic, check_iso, find_iso, identity_iso

import samples

R2 = from_equivalence([[1, 2]])
R3 = from_equivalence([[1, 2, 3]])
Z4 = from_group(cyclic(4))
K4 = from_group(klein_four())


def point_with_Z():
    """``{•} × ℤ`` as the DR groupoid of the identity on one point."""
    return dr.build_dr(dr.FiniteSelfMap(1, [0]))


def test_normalizer_counts():
    assert len(weyl.enumerate_normalizers(weyl.MatrixPair([3]))) == 9
    assert len(weyl.enumerate_normalizers(weyl.pair(R2))) == 4
    P = weyl.pair(Z4)
    norms = weyl.enumerate_normalizers(P)
    assert {nz.bisection for nz in norms} == {(a,) for a in Z4.morphisms}
    assert all(weyl.is_normalizer(P, nz.element) for nz in norms)


def test_matrix_units_normalise_the_diagonal():
    P = weyl.MatrixPair([2, 1])
    for nz in weyl.enumerate_normalizers(P):
        n = nz.element
        for phi in P.characters:
            d = P.diag(phi)
            assert P.is_diagonal(n * d * n.star()) and P.is_diagonal(n.star() * d * n)


def test_alpha_examples():
    P = weyl.pair(R2)
    n = delta(R2, R2.index_of((2, 1)))
    assert weyl.alpha(P, n, R2.index_of((1, 1))) == R2.index_of((2, 2))
    assert weyl.alpha(P, n, R2.index_of((1, 1)), verify=True) == R2.index_of((2, 2))
    u = delta(R2, R2.index_of((2, 2)))
    assert weyl.alpha(P, u, R2.index_of((2, 2))) == R2.index_of((2, 2))
    with pytest.raises(InvalidStructure):
        weyl.alpha(P, n, R2.index_of((2, 2)))


@pytest.mark.parametrize("name", ["relation R3", "Z3 on 3", "relation 6 points", "S3 on 3"])
def test_alpha_of_adjoint_inverts_alpha(name):
    g = samples.generated_groupoids()[name]
    P = weyl.pair(g)
    for nz in weyl.enumerate_normalizers(P):
        for x in g.units:
            if weyl.in_domain(P, nz.element, x):
                y = weyl.alpha(P, nz.element, x, verify=True)
                assert weyl.alpha(P, nz.element.star(), y) == x


def test_unitary_examples():
    g = point_with_Z()
    P = weyl.pair(g, dr.trivial_dr_cocycle(g), 3)
    one = delta(g, (0, 1, 0))
    assert weyl.unitary_U(P, one, one, 0).is_identity()
    u = weyl.unitary_U(P, one, delta(g, (0, 0, 0)), 0)
    assert u.winding() == (-1,)
    U4 = weyl.unitary_U(weyl.pair(Z4), delta(Z4, 1), delta(Z4, 3), 0)
    assert U4.kind == "finite-group-algebra" and U4.coeffs == {2: 1}


def test_unitary_is_independent_of_the_auxiliary_diagonal():
    g = point_with_Z()
    P = weyl.pair(g, dr.trivial_dr_cocycle(g), 3)
    rng = random.Random(0)
    for k, j in itertools.product(range(-2, 3), repeat=2):
        n, m = delta(g, (0, k, 0), 2.0), delta(g, (0, j, 0), 1j)
        d = weyl.randomized_d(P, n, m, 0, rng)
        assert weyl.unitary_U(P, n, m, 0).close_to(weyl.unitary_U(P, n, m, 0, d=d), 1e-9)


def test_unitary_algebra_properties():
    g = point_with_Z()
    P = weyl.pair(g, dr.trivial_dr_cocycle(g), 3)
    ns = [delta(g, (0, k, 0), c) for k, c in [(0, 1.0), (1, 1j), (-2, -1.0), (3, 0.5)]]
    for n, m, p in itertools.product(ns, repeat=3):
        U_nm, U_mn = weyl.unitary_U(P, n, m, 0), weyl.unitary_U(P, m, n, 0)
        assert U_nm.star().close_to(U_mn, 1e-9)
        assert (U_nm * weyl.unitary_U(P, m, p, 0)).close_to(weyl.unitary_U(P, n, p, 0), 1e-9)


def test_identity_component():
    from etale.algebra import FiberElement
    from etale.groups import FreeAbelian

    assert weyl.in_identity_component(FiberElement("scalar", {(): complex(0.6, 0.8)}))
    assert not weyl.in_identity_component(FiberElement("laurent", {(2,): 1.0}, FreeAbelian(1)))
    assert weyl.in_identity_component(weyl.unitary_U(weyl.pair(Z4), delta(Z4, 1), delta(Z4, 3), 0))
    with pytest.raises(InvalidStructure):
        weyl.in_identity_component(FiberElement("scalar", {(): 2.0}))


def test_equivalent_examples():
    P = weyl.pair(R2)
    n, m = delta(R2, R2.index_of((2, 1))), delta(R2, R2.index_of((1, 1)))
    x = R2.index_of((1, 1))
    assert weyl.equivalent(P, n, x, n, x)
    assert not weyl.equivalent(P, n, x, m, x)
    g = point_with_Z()
    Pt = weyl.pair(g, dr.trivial_dr_cocycle(g), 3)
    assert not weyl.equivalent(Pt, delta(g, (0, 1, 0)), 0, delta(g, (0, 0, 0)), 0)


@pytest.mark.parametrize("P", [weyl.pair(R3), weyl.pair(Z4), weyl.pair(Z4, identity_cocycle(Z4, cyclic(4))),
                               weyl.MatrixPair([1, 2])], ids=["R3", "Z4", "Z4 graded", "M1+M2"])
def test_equivalence_relation_on_instances(P):
    items = [(nz.element, phi) for nz in weyl.enumerate_normalizers(P) for phi in P.characters
             if weyl.in_domain(P, nz.element, phi)]
    rel = {(i, j): weyl.equivalent(P, *items[i], *items[j]) for i in range(len(items)) for j in range(len(items))}
    n = len(items)
    assert all(rel[i, i] for i in range(n))
    assert all(rel[i, j] == rel[j, i] for i in range(n) for j in range(n))
    assert all(not (rel[i, j] and rel[j, k]) or rel[i, k] for i in range(n) for j in range(n) for k in range(n))


def test_weyl_groupoid_examples():
    g, c = weyl.weyl_finite(weyl.pair(R3))
    assert g.size == 9 and find_iso(g, R3)
    single, _ = weyl.weyl_finite(weyl.pair(Z4))
    assert single.size == 1
    graded, cd = weyl.weyl_finite(weyl.pair(Z4, identity_cocycle(Z4, cyclic(4))))
    assert graded.size == 4 and find_iso(graded, Z4)
    assert sorted(cd.labels) == [0, 1, 2, 3]


def test_matrix_pair_reconstructs_principal_groupoid():
    g, c = weyl.weyl_finite(weyl.MatrixPair([1, 2]))
    assert validate(g).ok and check_cocycle(g, c).ok
    assert find_iso(g, from_equivalence([[0], [1, 2]]))


@pytest.mark.parametrize("name", sorted(samples.graded_samples()))
def test_positive_control(name):
    g, c = samples.graded_samples()[name]
    theta = weyl.canonical_theta(g, c)
    assert theta.report.ok, str(theta.report)
    wg, wc = theta.weyl_groupoid, theta.weyl_cocycle
    assert validate(wg).ok and check_cocycle(wg, wc).ok
    assert all(wc(theta.iso.map[a]) == c(a) for a in g.morphisms)


def test_theta_on_Z_isotropy_tracks_degree():
    g = point_with_Z()
    theta = weyl.canonical_theta(g, dr.cocycle_cX(g))
    assert theta.report.ok
    for k in range(-3, 4):
        assert theta((0, k, 0))[2] == (k,)


def test_theta_rejects_torsion():
    with pytest.raises(HypothesisError):
        weyl.canonical_theta(Z4)


def test_negative_control():
    a, _ = weyl.weyl_finite(weyl.pair(Z4))
    b, _ = weyl.weyl_finite(weyl.pair(K4))
    assert a.size == b.size == 1 and find_iso(a, b)
    assert isinstance(find_iso(Z4, K4), NotIsomorphic)


def test_algebra_iso_between_torsion_pairs_gives_trivial_weyl_iso():
    phi = alg.fourier_iso(Z4, cyclic(4), K4, klein_four())
    rep = alg.check_algebra_map(phi, list(Z4.morphisms))
    assert rep.ok, str(rep)
    kappa = weyl.algebra_iso_to_groupoid_iso(phi, weyl.pair(Z4), weyl.pair(K4))
    assert kappa.source.size == kappa.target.size == 1
    assert check_iso(kappa).ok


@pytest.mark.parametrize("name,g,c,kappa", samples.round_trip_cases(), ids=[r[0] for r in samples.round_trip_cases()])
def test_round_trip(name, g, c, kappa):
    P = weyl.pair(g, c)
    phi = weyl.iso_to_algebra_iso(kappa, c, c)
    assert alg.check_algebra_map(phi, list(g.morphisms), c, c).ok
    back = weyl.algebra_iso_to_groupoid_iso(phi, P, P)
    assert back.map == kappa.map


def test_round_trip_count():
    assert len(samples.round_trip_cases()) >= 10


def test_round_trip_on_dr_groupoid():
    s = dr.cycle_map(3)
    g1, g2 = dr.build_dr(s), dr.build_dr(s)
    kappa = dr.dr_iso_from_function(g2, g1, (1, 2, 0), lambda x, k, y: k)
    c1, c2 = dr.cocycle_cX(g1), dr.cocycle_cX(g2)
    phi = weyl.iso_to_algebra_iso(kappa, c1, c2)
    back = weyl.algebra_iso_to_groupoid_iso(phi, weyl.pair(g1, c1), weyl.pair(g2, c2))
    assert back.h == kappa.h and dict(back.affine) == dict(kappa.affine)


def test_flip_of_Z_is_an_algebra_automorphism_for_trivial_grading():
    g = point_with_Z()
    flip = dr.flip_dr_iso(g, g, (0,))
    phi = weyl.iso_to_algebra_iso(flip)
    f, h = delta(g, (0, 2, 0), 1j) + delta(g, (0, -1, 0)), delta(g, (0, 1, 0), 3.0)
    assert phi(f * h).close_to(phi(f) * phi(h))
    assert phi(f.star()).close_to(phi(f).star())
    assert phi(delta(g, (0, 1, 0))) == delta(g, (0, -1, 0))
    with pytest.raises(InvalidStructure):
        weyl.iso_to_algebra_iso(flip, dr.cocycle_cX(g), dr.cocycle_cX(g))


def test_swap_of_points_permutes_matrix_units():
    kappa = next(k for k in samples.cocycle_automorphisms(R2, trivial_cocycle(R2)) if k.map != tuple(R2.morphisms))
    phi = weyl.iso_to_algebra_iso(kappa)
    e12 = delta(R2, R2.index_of((1, 2)))
    assert phi(e12) == delta(R2, R2.index_of((2, 1)))


def test_diagonal_conjugation_induces_identity():
    c = trivial_cocycle(R3)
    P = weyl.pair(R3, c)
    phases = {u: complex(*v) for u, v in zip(R3.units, [(1, 0), (0, 1), (0.6, -0.8)])}
    phi = alg.inner_diagonal(R3, phases)
    kappa = weyl.algebra_iso_to_groupoid_iso(phi, P, P)
    assert kappa.map == tuple(R3.morphisms)


def test_non_graded_map_is_rejected():
    c = identity_cocycle(Z4, cyclic(4))
    P = weyl.pair(Z4, c)
    phi = alg.pullback(identity_iso(Z4))
    scrambled = alg.AlgebraMap(Z4, Z4, lambda a: delta(Z4, (a + 1) % 4), "shift", lambda a: delta(Z4, (a - 1) % 4))
    assert weyl.algebra_iso_to_groupoid_iso(phi, P, P).map == tuple(Z4.morphisms)
    with pytest.raises(InvalidStructure):
        weyl.algebra_iso_to_groupoid_iso(scrambled, P, P)
