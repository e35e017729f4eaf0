from __future__ import annotations

import math
import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from etale import InvalidStructure
from etale import algebra as alg
from etale.algebra import AlgebraElement, delta, indicator, unit_element
from etale.dr import FiniteSelfMap, build_dr, cocycle_cX
from etale.groupoid import (from_equivalence, from_group, from_group_bundle, identity_cocycle,
                            transformation_groupoid, trivial_cocycle)
from etale.groups import cyclic
from etale.isomorphism import find_iso, identity_iso

import samples

R2 = from_equivalence([[1, 2]])
R3 = from_equivalence([[1, 2, 3]])
Z2 = from_group(cyclic(2))
Z4 = from_group(cyclic(4))


def random_element(g, rng: random.Random) -> AlgebraElement:
    return AlgebraElement(g, {a: complex(rng.uniform(-1, 1), rng.uniform(-1, 1))
                              for a in g.morphisms if rng.random() < 0.6})


def test_convolution_examples():
    a, b = R2.index_of((1, 2)), R2.index_of((2, 1))
    assert (delta(R2, a) * delta(R2, b)) == delta(R2, R2.index_of((1, 1)))
    f = delta(R3, R3.index_of((1, 2)), 2.0) + delta(R3, R3.index_of((3, 2)), -1.0)
    src = indicator(R3, [R3.index_of((2, 2))])
    assert (f * src) == f
    s = delta(Z2, 0) + delta(Z2, 1)
    assert (s * s) == AlgebraElement(Z2, {0: 2, 1: 2})


def test_convolution_matches_factorisation_oracle():
    rng = random.Random(3)
    f, g = random_element(R3, rng), random_element(R3, rng)
    h = alg.convolve(f, g)
    for eta in R3.morphisms:
        expected = sum(f(a) * g(b) for (a, b), ab in R3.comp.items() if ab == eta)
        assert abs(h(eta) - expected) < 1e-12


def test_convolution_needs_same_groupoid():
    with pytest.raises(InvalidStructure):
        delta(R2, 0) * delta(R3, 0)


def test_adjoint_examples():
    assert alg.adjoint(delta(R2, R2.index_of((1, 2)))) == delta(R2, R2.index_of((2, 1)))
    z3 = from_group(cyclic(3))
    assert delta(z3, 1, 1j).star() == delta(z3, 2, -1j)


def test_regular_rep_matrix_unit():
    x = R3.index_of((1, 1))
    basis = R3.arrows_from(x)
    M = alg.regular_rep(delta(R3, R3.index_of((1, 2))), x)
    assert np.count_nonzero(M) == 1
    i, j = (int(v[0]) for v in np.nonzero(M))
    assert R3.labels[basis[i]] == (1, 1) and R3.labels[basis[j]] == (2, 1)


def test_regular_rep_of_unit_indicator_is_diagonal_projection():
    x = R3.index_of((2, 2))
    M = alg.regular_rep(indicator(R3, [R3.index_of((1, 1))]), x)
    assert np.allclose(M, np.diag(np.diag(M)))
    assert sorted(np.diag(M).real.round().tolist()) == [0, 0, 1]


def test_regular_rep_of_Z4_generator_is_cyclic_shift():
    M = alg.regular_rep(delta(Z4, 1), 0)
    assert np.allclose(M @ M @ M @ M, np.eye(4))
    assert np.allclose(np.abs(M).sum(axis=0), 1) and not np.allclose(M, np.eye(4))
    assert np.allclose(M @ M, alg.regular_rep(delta(Z4, 2), 0))


def test_norm_examples():
    assert alg.reduced_norm(delta(R3, R3.index_of((1, 2)))) == pytest.approx(1.0)
    assert alg.reduced_norm(unit_element(R3)) == pytest.approx(1.0)
    assert alg.reduced_norm(delta(Z2, 0) + delta(Z2, 1)) == pytest.approx(2.0)
    assert alg.sup_norm(delta(R3, 4)) == 1.0
    assert alg.sup_norm(alg.zero(R3)) == 0.0


def test_reduced_norm_requires_finite_groupoid():
    g = build_dr(FiniteSelfMap(1, [0]))
    with pytest.raises(InvalidStructure):
        alg.reduced_norm(delta(g, (0, 1, 0)))


def test_evaluate_j_is_identity_on_coefficients():
    f = random_element(R3, random.Random(1))
    assert alg.evaluate_j(f) == {a: f(a) for a in f.support}


def test_diagonal_part():
    assert alg.is_diagonal(unit_element(R3))
    off = delta(R3, R3.index_of((1, 2)), 3.0)
    assert alg.diagonal_part(off).is_zero()
    assert alg.diagonal_part(off + off.star()).is_zero()
    assert not alg.is_diagonal(off)


def _commutant_dimension_oracle(g) -> int:
    """Dimension of {f : f d = d f for all diagonal d} by a direct null-space computation."""
    n = g.size
    rows = []
    for u in g.units:
        d = delta(g, u)
        M = np.zeros((n, n), dtype=complex)
        for j in g.morphisms:
            c = delta(g, j) * d - d * delta(g, j)
            for k, v in c.coeffs.items():
                M[k, j] = v
        rows.append(M)
    A = np.vstack(rows)
    return n - np.linalg.matrix_rank(A)


@pytest.mark.parametrize("g,expected", [
    (R3, 3), (Z4, 4), (from_group_bundle(["a", "b"], {"a": cyclic(2), "b": cyclic(2)}), 4),
])
def test_relative_commutant_examples(g, expected):
    basis = alg.relative_commutant_basis(g)
    assert len(basis) == expected == _commutant_dimension_oracle(g)


@pytest.mark.parametrize("name", ["group S3", "Z4 on 6", "bundle Z2xZ2,1,S3", "relation 6 points", "S3 on 3"])
def test_relative_commutant_matches_linear_algebra(name):
    g = samples.generated_groupoids()[name]
    basis = alg.relative_commutant_basis(g)
    assert len(basis) == _commutant_dimension_oracle(g)
    for s in basis:
        f = indicator(g, s)
        for u in g.units:
            assert (f * delta(g, u)).close_to(delta(g, u) * f)


def test_fiber_examples():
    x = R3.index_of((2, 2))
    fx = alg.fiber_at(delta(R3, x, 2.5), x)
    assert fx.kind == "scalar" and fx.coeffs == {(): 2.5}
    g = build_dr(FiniteSelfMap(1, [0]))
    lz = alg.fiber_at(delta(g, (0, 3, 0)), 0)
    assert lz.kind == "laurent" and lz.coeffs == {(3,): 1}
    f = delta(Z4, 0) + delta(Z4, 2)
    fz = alg.fiber_at(f, 0)
    assert fz.kind == "finite-group-algebra" and len(fz.coeffs) == 2
    with pytest.raises(InvalidStructure):
        alg.fiber_at(delta(R3, R3.index_of((1, 2))), x)


def test_fiber_is_multiplicative_and_star_preserving():
    rng = random.Random(5)
    g, _ = transformation_groupoid(list(range(6)), cyclic(4), samples._z4_on_six)
    iso = [a for a in g.morphisms if g.src[a] == g.rng[a]]
    for _ in range(10):
        f = AlgebraElement(g, {a: complex(rng.random(), rng.random()) for a in iso})
        h = AlgebraElement(g, {a: complex(rng.random(), rng.random()) for a in iso})
        for x in g.units:
            assert alg.fiber_at(f * h, x).close_to(alg.fiber_at(f, x) * alg.fiber_at(h, x), 1e-9)
            assert alg.fiber_at(f.star(), x).close_to(alg.fiber_at(f, x).star(), 1e-9)


def test_degree_examples():
    g = build_dr(FiniteSelfMap(2, [1, 1]))
    c = cocycle_cX(g)
    assert alg.degree(delta(g, (0, 0, 0)), c) == (0,)
    assert alg.degree(delta(g, (0, 1, 1)), c) == (1,)
    mixed = delta(g, (0, 1, 1)) + delta(g, (0, 0, 0))
    assert alg.degree(mixed, c) is alg.NOT_HOMOGENEOUS
    assert sorted(alg.graded_components(mixed, c)) == [(0,), (1,)]


def test_grading_is_multiplicative():
    g, c = transformation_groupoid([0, 1, 2], cyclic(3), lambda x, a: (x + a) % 3)
    rng = random.Random(2)
    for a in range(3):
        for b in range(3):
            f = AlgebraElement(g, {m: rng.random() + 0.1 for m in g.morphisms if c(m) == a})
            h = AlgebraElement(g, {m: rng.random() + 0.1 for m in g.morphisms if c(m) == b})
            prod = f * h
            assert prod.is_zero() or alg.degree(prod, c) == (a + b) % 3


GROUPOIDS = sorted(samples.generated_groupoids())


@settings(max_examples=40, deadline=None)
@given(st.sampled_from(GROUPOIDS), st.integers(0, 2 ** 32 - 1))
def test_star_algebra_laws(name, seed):
    g = samples.generated_groupoids()[name]
    rng = random.Random(seed)
    f, h, k = (random_element(g, rng) for _ in range(3))
    assert ((f * h) * k).close_to(f * (h * k), 1e-9)
    assert (f * h).star().close_to(h.star() * f.star(), 1e-9)
    assert f.star().star().close_to(f, 1e-12)
    for x in g.units:
        assert np.allclose(alg.regular_rep(f * h, x), alg.regular_rep(f, x) @ alg.regular_rep(h, x), atol=1e-9)
        assert np.allclose(alg.regular_rep(f.star(), x), alg.regular_rep(f, x).conj().T, atol=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.sampled_from(GROUPOIDS), st.integers(0, 2 ** 32 - 1))
def test_norm_inequalities(name, seed):
    g = samples.generated_groupoids()[name]
    f = random_element(g, random.Random(seed))
    rn = alg.reduced_norm(f)
    assert alg.sup_norm(f) <= rn + 1e-9
    assert math.isclose(alg.reduced_norm(f.star() * f), rn * rn, rel_tol=1e-7, abs_tol=1e-7)


def test_norm_equality_on_bisections():
    rng = random.Random(9)
    g = R3
    bis = [g.index_of((1, 2)), g.index_of((2, 3)), g.index_of((3, 1))]
    f = AlgebraElement(g, {a: complex(rng.uniform(-2, 2), rng.uniform(-2, 2)) for a in bis})
    assert alg.supports_bisection(f)
    assert alg.reduced_norm(f) == pytest.approx(alg.sup_norm(f), rel=1e-9)


def test_pullback_of_a_cocycle_preserving_iso_is_graded_and_diagonal():
    z4 = from_group(cyclic(4))
    c = identity_cocycle(z4, cyclic(4))
    phi = alg.pullback(identity_iso(z4))
    rep = alg.check_algebra_map(phi, list(z4.morphisms), c, c)
    assert rep.ok, str(rep)
    r3 = trivial_cocycle(R3)
    swap = next(k for k in [find_iso(R3, R3)] if k)
    assert alg.check_algebra_map(alg.pullback(swap), list(R3.morphisms), r3, r3).ok
