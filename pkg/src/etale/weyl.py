"""The extended Weyl groupoid of a graded algebra with a distinguished diagonal.

Two presentations of a graded pair ``(A, D, δ)`` are supported:

* :class:`GroupoidPair` -- ``A = C_c(G)`` for a finite groupoid or a DR
  groupoid, ``D = C(G^(0))`` and the grading induced by a cocycle;
* :class:`MatrixPair` -- ``A`` a direct sum of full matrix algebras with the
  diagonal matrices as ``D`` and the trivial grading.

Everything below is written against the small backend interface shared by the
two classes, so the same code computes ``α_n``, the unitaries ``U_{n*m}`` and
the classes ``[n, φ]`` in both settings.

Classes are labelled without pairwise comparisons.  For a homogeneous
normalizer ``n`` at ``φ`` put ``ψ = α_n(φ)`` and ``γ = deg n``, and let ``b`` be
the canonical base normalizer of the bucket ``(φ, ψ, γ)``.  Since
``U_{n*m} = U_{n*b} U_{b*m}`` in the abelian fiber, ``[n, φ] = [m, φ]`` if and
only if ``U_{b*n}`` and ``U_{b*m}`` lie in the same component of the unitary
group.  The key of ``[n, φ]`` is therefore ``(φ, ψ, γ, component(U_{b*n}))``,
with the component given by the winding vector for Laurent fibers and ``()``
for fibers with connected unitary group.  Tests cross-check these keys against
:func:`equivalent`.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ._common import (
    EPS,
    NOT_HOMOGENEOUS,
    HypothesisError,
    InvalidStructure,
    ResourceLimitError,
    RigidityError,
    ValidationReport,
)
from .algebra import (
    AlgebraElement,
    AlgebraMap,
    FiberElement,
    check_algebra_map,
    delta,
    fiber_at,
)
from .algebra import degree as _degree
from .algebra import is_diagonal as _is_diagonal
from .dr import KSet, check_dr_iso, dr_iso_from_function, trivial_dr_cocycle
from .groupoid import Cocycle, FiniteGroupoid, isotropy_arrows, trivial_cocycle
from .isomorphism import GroupoidIso, check_iso

#: Maximum number of (normalizer, character) pairs classified by one build.
PAIR_CAP = 100_000


# ---------------------------------------------------------------------------------
# Matrix algebras


class MatrixElement:
    """Sparse element of ``⊕_b M_{n_b}(ℂ)``; keys are ``(block, row, col)``."""

    __slots__ = ("pair", "coeffs")

    def __init__(self, pair: "MatrixPair", coeffs=None):
        self.pair = pair
        self.coeffs = {k: complex(v) for k, v in (coeffs or {}).items() if abs(v) > EPS}

    def __mul__(self, other):
        if isinstance(other, MatrixElement):
            rows: dict = {}
            for (b, i, j), v in other.coeffs.items():
                rows.setdefault((b, i), []).append((j, v))
            out: dict = {}
            for (b, i, j), u in self.coeffs.items():
                for k, v in rows.get((b, j), ()):
                    out[(b, i, k)] = out.get((b, i, k), 0j) + u * v
            return MatrixElement(self.pair, out)
        return MatrixElement(self.pair, {k: v * other for k, v in self.coeffs.items()})

    __rmul__ = __mul__

    def __add__(self, other: "MatrixElement") -> "MatrixElement":
        out = dict(self.coeffs)
        for k, v in other.coeffs.items():
            out[k] = out.get(k, 0j) + v
        return MatrixElement(self.pair, out)

    def star(self) -> "MatrixElement":
        return MatrixElement(self.pair, {(b, j, i): v.conjugate() for (b, i, j), v in self.coeffs.items()})

    def is_zero(self) -> bool:
        return not self.coeffs

    def to_dense(self) -> list[np.ndarray]:
        mats = [np.zeros((n, n), dtype=complex) for n in self.pair.blocks]
        for (b, i, j), v in self.coeffs.items():
            mats[b][i, j] = v
        return mats

    def __repr__(self) -> str:
        return f"MatrixElement({self.coeffs})"


class MatrixPair:
    """``(⊕_b M_{n_b}(ℂ), diagonal matrices)`` with the trivial grading.

    Characters of ``D`` are the diagonal positions ``(b, i)``.
    """

    kind = "matrix"

    def __init__(self, blocks: Sequence[int]):
        if not blocks or any(int(n) < 1 for n in blocks):
            raise InvalidStructure("matrix blocks must have positive sizes")
        self.blocks = tuple(int(n) for n in blocks)
        self.identity_degree = 0

    @property
    def characters(self) -> list[tuple[int, int]]:
        return [(b, i) for b, n in enumerate(self.blocks) for i in range(n)]

    def element(self, coeffs) -> MatrixElement:
        for (b, i, j) in coeffs:
            if not (0 <= b < len(self.blocks) and 0 <= i < self.blocks[b] and 0 <= j < self.blocks[b]):
                raise InvalidStructure(f"matrix entry {(b, i, j)} out of range")
        return MatrixElement(self, coeffs)

    def matrix_unit(self, b: int, i: int, j: int, coeff: complex = 1.0) -> MatrixElement:
        return self.element({(b, i, j): coeff})

    def diag(self, phi, coeff: complex = 1.0) -> MatrixElement:
        b, i = phi
        return self.matrix_unit(b, i, i, coeff)

    def evaluate(self, d: MatrixElement, phi) -> complex:
        b, i = phi
        return d.coeffs.get((b, i, i), 0j)

    def is_diagonal(self, a: MatrixElement) -> bool:
        return all(i == j for (_, i, j) in a.coeffs)

    def degree(self, a: MatrixElement):
        return 0

    def fiber(self, w: MatrixElement, phi) -> FiberElement:
        # The relative commutant of the diagonal is the diagonal itself.
        if not self.is_diagonal(w):
            raise InvalidStructure("element is not in the relative commutant of the diagonal")
        return FiberElement("scalar", {(): self.evaluate(w, phi)})

    def base_normalizer(self, src, rng, deg) -> MatrixElement | None:
        if src[0] != rng[0] or deg != 0:
            return None
        return self.matrix_unit(src[0], rng[1], src[1])

    def normalizers(self, window: int | None = None) -> list["ElementaryNormalizer"]:
        out = []
        for b, n in enumerate(self.blocks):
            for i in range(n):
                for j in range(n):
                    out.append(ElementaryNormalizer(self.matrix_unit(b, i, j), ((b, i, j),), 0))
        return out

    def key_sort(self, key) -> tuple:
        return key

    def __repr__(self) -> str:
        return f"MatrixPair({list(self.blocks)})"


# ---------------------------------------------------------------------------------
# Groupoid algebras


class GroupoidPair:
    """``(C_c(G), C(G^(0)), δ_c)`` for a finite or DR groupoid ``G`` and cocycle ``c``.

    ``window`` bounds ``|k|`` for the normalizers enumerated on a DR groupoid;
    it defaults to :attr:`DRGroupoid.default_window`.
    """

    kind = "groupoid"

    def __init__(self, groupoid, cocycle=None, window: int | None = None):
        self.groupoid = groupoid
        if cocycle is None:
            cocycle = trivial_cocycle(groupoid) if isinstance(groupoid, FiniteGroupoid) else trivial_dr_cocycle(groupoid)
        if cocycle.groupoid is not groupoid:
            raise InvalidStructure("cocycle belongs to a different groupoid")
        self.cocycle = cocycle
        self.identity_degree = cocycle.target.identity
        self.is_finite = isinstance(groupoid, FiniteGroupoid)
        if self.is_finite:
            self.window = None
            buckets: dict = {}
            for a in groupoid.morphisms:
                buckets.setdefault((groupoid.src[a], groupoid.rng[a], cocycle(a)), a)
            self._buckets = buckets
        else:
            self.window = groupoid.default_window if window is None else int(window)

    @property
    def characters(self) -> list:
        return list(self.groupoid.points)

    def diag(self, phi, coeff: complex = 1.0) -> AlgebraElement:
        return delta(self.groupoid, self.groupoid.unit_arrow(phi), coeff)

    def evaluate(self, d: AlgebraElement, phi) -> complex:
        return d(self.groupoid.unit_arrow(phi))

    def sandwich(self, n: AlgebraElement, d: AlgebraElement | None, phi) -> complex:
        """``φ(n* d n) = Σ_{s(η) = φ} |n(η)|² d(r(η))`` for diagonal ``d`` (``None`` meaning 1)."""
        G = self.groupoid
        total = 0j
        for a, v in n.coeffs.items():
            if G.source(a) != phi:
                continue
            w = abs(v) ** 2
            total += w if d is None else w * d(G.unit_arrow(G.range_(a)))
        return total

    def is_diagonal(self, a: AlgebraElement) -> bool:
        return _is_diagonal(a)

    def degree(self, a: AlgebraElement):
        return _degree(a, self.cocycle)

    def fiber(self, w: AlgebraElement, phi) -> FiberElement:
        return fiber_at(w, phi, self.cocycle)

    def arrow_normalizer(self, a) -> "ElementaryNormalizer":
        return ElementaryNormalizer(delta(self.groupoid, a), (a,), self.cocycle(a))

    def base_arrow(self, src, rng, deg):
        """Canonical arrow from ``src`` to ``rng`` of degree ``deg``, or ``None``."""
        G = self.groupoid
        if self.is_finite:
            return self._buckets.get((src, rng, deg))
        ks = G.kset(rng, src)
        if ks is None:
            return None
        c = self.cocycle
        if c.kind == "cX":
            return (rng, deg[0], src) if deg[0] in ks else None
        if c.kind == "trivial":
            return (rng, ks.least_abs(), src)
        m = c.modulus
        if ks.p == 0:
            return (rng, ks.k0, src) if ks.k0 % m == deg else None
        lcm = ks.p * m // math.gcd(ks.p, m)
        for j in range(lcm // ks.p):
            k = ks.k0 + j * ks.p
            if k % m == deg:
                return (rng, KSet(k % lcm, lcm).least_abs(), src)
        return None

    def base_normalizer(self, src, rng, deg) -> AlgebraElement | None:
        a = self.base_arrow(src, rng, deg)
        return None if a is None else delta(self.groupoid, a)

    def normalizers(self, window: int | None = None) -> list["ElementaryNormalizer"]:
        """Single-arrow indicators ``δ_η`` (all arrows, or ``|k| <= window`` for DR)."""
        G = self.groupoid
        if self.is_finite:
            arrows = list(G.morphisms)
        else:
            arrows = G.arrows_window(self.window if window is None else window)
        return [self.arrow_normalizer(a) for a in arrows]

    def kernel_isotropy_ok(self) -> tuple[bool, object]:
        """Whether ``Iso(c^{-1}(e))`` is torsion-free abelian; witness unit on failure."""
        if not self.is_finite:
            return True, None  # subgroups of ℤ
        G, c, e = self.groupoid, self.cocycle, self.identity_degree
        for x in G.units:
            if any(a != x and c(a) == e for a in isotropy_arrows(G, x)):
                return False, x
        return True, None

    def __repr__(self) -> str:
        return f"GroupoidPair({self.groupoid!r})"


def pair(groupoid, cocycle=None, window: int | None = None) -> GroupoidPair:
    return GroupoidPair(groupoid, cocycle, window)


@dataclass(frozen=True)
class ElementaryNormalizer:
    """A homogeneous normalizer supported on a bisection.

    ``element`` is the algebra element, ``bisection`` its support and
    ``degree`` its grading degree.
    """

    element: object
    bisection: tuple
    degree: object

    def __repr__(self) -> str:
        return f"ElementaryNormalizer({list(self.bisection)}, degree={self.degree!r})"


def _el(n):
    return n.element if isinstance(n, ElementaryNormalizer) else n


def enumerate_normalizers(P, window: int | None = None) -> list[ElementaryNormalizer]:
    """Elementary homogeneous normalizers of a pair (indicators of single arrows or matrix units)."""
    return P.normalizers(window)


def is_normalizer(P, n) -> bool:
    """``n D n* ∪ n* D n ⊆ D``, checked on the spanning set ``{δ_φ}``."""
    n = _el(n)
    for phi in P.characters:
        d = P.diag(phi)
        if not P.is_diagonal(n * d * n.star()) or not P.is_diagonal(n.star() * d * n):
            return False
    return True


def _sandwich(P, n, d, phi) -> complex:
    """``φ(n* d n)`` for diagonal ``d`` (``None`` meaning 1)."""
    direct = getattr(P, "sandwich", None)
    if direct is not None:
        return direct(n, d, phi)
    return P.evaluate(n.star() * n if d is None else n.star() * d * n, phi)


def _rho(P, n, phi) -> complex:
    """``φ(n* n)``."""
    return _sandwich(P, n, None, phi)


def in_domain(P, n, phi) -> bool:
    return abs(_rho(P, _el(n), phi)) > EPS


def _tagged_diagonal(P):
    """``Σ_ψ (i_ψ + 1) δ_ψ`` over the characters in order, built once per pair."""
    d = getattr(P, "_tagged", None)
    if d is None:
        for idx, psi in enumerate(P.characters):
            term = P.diag(psi, float(idx + 1))
            d = term if d is None else d + term
        P._tagged = d
    return d


def alpha(P, n, phi, verify: bool = False):
    """``α_n(φ)``: the character with ``φ(n*n) α_n(φ)(d) = φ(n* d n)`` for all ``d ∈ D``.

    The character is read off from one tagged diagonal element
    ``d = Σ_ψ w_ψ δ_ψ`` with distinct weights.  With ``verify`` the identity is
    also checked on every ``δ_ψ``.
    """
    n = _el(n)
    chars = P.characters
    rho = _rho(P, n, phi)
    if abs(rho) <= EPS:
        raise InvalidStructure(f"character {phi!r} is outside supp(n*n)")
    value = _sandwich(P, n, _tagged_diagonal(P), phi) / rho
    idx = int(round(value.real)) - 1
    if not (0 <= idx < len(chars)) or abs(value - (idx + 1)) > 1e-6:
        raise InvalidStructure("the defining identity does not single out a character; not a normalizer at this point")
    result = chars[idx]
    if verify:
        for psi in chars:
            lhs = rho * (1.0 if psi == result else 0.0)
            if abs(_sandwich(P, n, P.diag(psi), phi) - lhs) > 1e-9:
                raise InvalidStructure(f"defining identity fails at d = delta_{psi!r}")
    return result


def unitary_U(P, n, m, phi, d=None) -> FiberElement:
    """``U^φ_{n*m}``: the fiber image of ``w = φ(n*n)^{-1/2} φ(m*m)^{-1/2} d n* m d``.

    ``d`` defaults to the indicator of ``{φ}``; any diagonal element with
    ``φ(d) = 1`` supported where ``α_n = α_m`` gives the same fiber element.
    """
    n, m = _el(n), _el(m)
    rn, rm = _rho(P, n, phi), _rho(P, m, phi)
    if abs(rn) <= EPS or abs(rm) <= EPS:
        raise InvalidStructure(f"character {phi!r} is outside supp(n*n) or supp(m*m)")
    if alpha(P, n, phi) != alpha(P, m, phi):
        raise InvalidStructure("alpha_n and alpha_m differ at this character")
    if d is not None and abs(P.evaluate(d, phi) - 1) > 1e-9:
        raise InvalidStructure("auxiliary element must take the value 1 at the character")
    return _unitary(P, n, m, phi, rn, rm, d)


def _unitary(P, n, m, phi, rn, rm, d=None) -> FiberElement:
    """``unitary_U`` without the domain checks, for callers that already made them."""
    scale = 1.0 / (math.sqrt(abs(rn)) * math.sqrt(abs(rm)))
    if d is None and isinstance(P, GroupoidPair):
        # multiplying by δ_φ on both sides keeps the arrows with source and range φ
        G = P.groupoid
        prod = n.star() * m
        w = AlgebraElement(G, {a: v * scale for a, v in prod.coeffs.items()
                               if G.source(a) == phi and G.range_(a) == phi})
    else:
        d = P.diag(phi) if d is None else d
        w = d * n.star() * m * d * scale
    return P.fiber(w, phi)


def randomized_d(P, n, m, phi, rng: random.Random):
    """A second auxiliary element: ``δ_φ`` plus random weights where ``α_n = α_m``."""
    n, m = _el(n), _el(m)
    d = P.diag(phi)
    for psi in P.characters:
        if psi == phi or not (in_domain(P, n, psi) and in_domain(P, m, psi)):
            continue
        if alpha(P, n, psi) == alpha(P, m, psi):
            d = d + P.diag(psi, complex(rng.uniform(-2, 2), rng.uniform(-2, 2)))
    return d


def in_identity_component(u: FiberElement) -> bool:
    """Whether a fiber unitary lies in the identity component of the unitary group.

    Scalar and finite-group-algebra fibers have connected unitary groups; a
    Laurent monomial is in the identity component exactly when its winding
    vector is zero.
    """
    if not u.is_unitary():
        raise InvalidStructure("input is not unitary")
    if u.kind in ("scalar", "finite-group-algebra"):
        return True
    if u.kind == "laurent":
        return not any(u.winding())
    raise InvalidStructure(f"unsupported fiber kind {u.kind!r}")


def component(u: FiberElement) -> tuple:
    """Label of the connected component of ``u`` (``()`` for connected unitary groups)."""
    if u.kind == "laurent":
        return tuple(u.winding())
    return ()


def equivalent(P, n, x, m, y) -> bool:
    """Relations (R1)-(R4) between ``(n, x)`` and ``(m, y)``."""
    n_el, m_el = _el(n), _el(m)
    if not in_domain(P, n_el, x) or not in_domain(P, m_el, y):
        raise InvalidStructure("characters must lie in the supports of n*n and m*m")
    if x != y:
        return False
    dn, dm = P.degree(n_el), P.degree(m_el)
    if dn is NOT_HOMOGENEOUS or dm is NOT_HOMOGENEOUS or dn != dm:
        return False
    if alpha(P, n_el, x) != alpha(P, m_el, x):
        return False
    return in_identity_component(unitary_U(P, n_el, m_el, x))


# ---------------------------------------------------------------------------------
# The groupoid H(A, D, δ)


def class_key(P, n, phi) -> tuple:
    """Key ``(φ, α_n(φ), deg n, component(U_{b*n}))`` of the class ``[n, φ]``."""
    n = _el(n)
    deg = P.degree(n)
    if deg is NOT_HOMOGENEOUS:
        raise InvalidStructure("normalizer is not homogeneous")
    psi = alpha(P, n, phi)
    b = P.base_normalizer(phi, psi, deg)
    if b is None:
        raise InvalidStructure("no base normalizer for this bucket")
    # α_b(φ) = ψ = α_n(φ) by the choice of b, so the checks in unitary_U are already met
    return (phi, psi, deg, component(_unitary(P, b, n, phi, _rho(P, b, phi), _rho(P, n, phi))))


class WeylGroupoid:
    """Classes ``[n, φ]`` found from the enumerated normalizers of a pair.

    ``keys`` lists the classes in sorted order; ``reps[key]`` holds up to two
    representatives ``(n, φ)``.  Products and inverses classify the convolution
    ``nm`` and the adjoint ``n*`` of representatives.
    """

    def __init__(self, P, window: int | None = None, cap: int = PAIR_CAP):
        self.pair = P
        norms = P.normalizers(window)
        chars = P.characters
        reps: dict = {}
        count = 0
        for nz in norms:
            for phi in chars:
                if not in_domain(P, nz.element, phi):
                    continue
                count += 1
                if count > cap:
                    raise ResourceLimitError(f"more than {cap} (normalizer, character) pairs")
                key = class_key(P, nz.element, phi)
                lst = reps.setdefault(key, [])
                if len(lst) < 2:
                    lst.append((nz.element, phi))
        self.reps = reps
        self.keys = sorted(reps, key=_sort_key)
        self.normalizer_count = len(norms)

    def __len__(self) -> int:
        return len(self.keys)

    def source(self, key):
        return key[0]

    def range_(self, key):
        return key[1]

    def degree(self, key):
        return key[2]

    def unit_key(self, phi) -> tuple:
        return class_key(self.pair, self.pair.diag(phi), phi)

    def rep(self, key):
        if key in self.reps:
            return self.reps[key][0]
        raise KeyError(f"class {key!r} was not enumerated")

    def compose(self, k1, k2, which: tuple[int, int] = (0, 0)) -> tuple:
        """``[n, α_m(y)] · [m, y] = [nm, y]`` using the chosen representatives."""
        if k1[0] != k2[1]:
            raise InvalidStructure("classes are not composable")
        n, _ = self.reps[k1][min(which[0], len(self.reps[k1]) - 1)]
        m, y = self.reps[k2][min(which[1], len(self.reps[k2]) - 1)]
        return class_key(self.pair, n * m, y)

    def inverse(self, key, which: int = 0) -> tuple:
        n, x = self.reps[key][min(which, len(self.reps[key]) - 1)]
        return class_key(self.pair, n.star(), alpha(self.pair, n, x))

    def check_well_defined(self) -> ValidationReport:
        """Products and inverses agree across the stored representatives."""
        rep = ValidationReport("Weyl operations well defined")
        bad_inv = next((k for k in self.keys if len(self.reps[k]) > 1 and self.inverse(k, 0) != self.inverse(k, 1)), None)
        rep.add("inverse independent of representative", bad_inv is None, bad_inv)
        by_src: dict = {}
        for k in self.keys:
            by_src.setdefault(k[0], []).append(k)

        def bad_products():
            for k1 in self.keys:
                for k2 in [k for k in self.keys if k[1] == k1[0]]:
                    base = self.compose(k1, k2)
                    for which in ((1, 0), (0, 1), (1, 1)):
                        if self.compose(k1, k2, which) != base:
                            yield (k1, k2)
                            break

        rep.add("product independent of representatives", *_first(bad_products()))
        return rep

    def to_finite(self) -> tuple[FiniteGroupoid, Cocycle]:
        """The classes as a :class:`FiniteGroupoid` (labels are the keys) and ``c_δ``."""
        P = self.pair
        units = [self.unit_key(phi) for phi in P.characters]
        known = set(self.keys)

        def comp(a, b):
            c = self.compose(a, b)
            if c not in known:
                raise InvalidStructure(f"product class {c!r} was not enumerated")
            return c

        gpd = FiniteGroupoid.from_labeled(
            self.keys, units, src=lambda k: self.unit_key(k[0]), rng=lambda k: self.unit_key(k[1]),
            inv=self.inverse, comp=comp,
        )
        target = P.cocycle.target if isinstance(P, GroupoidPair) else _trivial_target()
        return gpd, Cocycle(gpd, target, tuple(lab[2] for lab in gpd.labels))


def _trivial_target():
    from .groups import trivial_group

    return trivial_group()


def _sort_key(key):
    return repr(key) if not all(isinstance(part, (int, tuple)) for part in key) else key


def _first(gen):
    w = next(iter(gen), None)
    return w is None, w


def build_weyl_groupoid(P, window: int | None = None, cap: int = PAIR_CAP) -> WeylGroupoid:
    """Enumerate elementary normalizers and classify them into ``H(A, D, δ)``."""
    return WeylGroupoid(P, window, cap)


def weyl_finite(P) -> tuple[FiniteGroupoid, Cocycle]:
    """``build_weyl_groupoid(P).to_finite()`` for pairs with finitely many classes."""
    if isinstance(P, GroupoidPair) and not P.is_finite:
        raise InvalidStructure("DR pairs have infinitely many classes; use build_weyl_groupoid with a window")
    return build_weyl_groupoid(P).to_finite()


# ---------------------------------------------------------------------------------
# The canonical map θ and the rigidity round trip


@dataclass
class Theta:
    """``θ(γ) = [δ_γ, s(γ)]`` together with its verification report.

    For a finite groupoid ``iso`` is a :class:`GroupoidIso` onto the finite
    Weyl groupoid; for a DR groupoid the map is checked on the arrows with
    ``|k| <= window`` and ``iso`` is ``None``.
    """

    pair: GroupoidPair
    weyl: WeylGroupoid
    report: ValidationReport
    iso: GroupoidIso | None = None
    weyl_groupoid: FiniteGroupoid | None = None
    weyl_cocycle: Cocycle | None = None

    def __call__(self, a) -> tuple:
        return class_key(self.pair, delta(self.pair.groupoid, a), self.pair.groupoid.source(a))

    def inverse(self, key):
        """Arrow with ``θ(arrow) = key``."""
        P = self.pair
        a = P.base_arrow(key[0], key[1], key[2])
        if a is None:
            raise InvalidStructure(f"no arrow for class {key!r}")
        if P.is_finite:
            if self.iso is None:
                raise InvalidStructure("theta was not verified")
            idx = self.weyl_groupoid.index_of(key)
            return self.iso.inverse().map[idx]
        w = key[3]
        return (a[0], a[1] + (w[0] if w else 0), a[2])


def check_hypothesis(P: GroupoidPair) -> None:
    ok, x = P.kernel_isotropy_ok()
    if not ok:
        raise HypothesisError(f"isotropy of the kernel of the cocycle has torsion at unit {x}")


def canonical_theta(G, c=None, P: GroupoidPair | None = None, window: int | None = None) -> Theta:
    """Build ``θ: G -> H(C_c(G), C(G^(0)), δ_c)`` and verify it.

    Raises :class:`HypothesisError` when the kernel isotropy has torsion.
    """
    if P is None:
        P = pair(G, c, window)
    check_hypothesis(P)
    H = build_weyl_groupoid(P)
    rep = ValidationReport("canonical theta")
    theta = Theta(P, H, rep)
    Gd = P.groupoid
    if P.is_finite:
        gpd, c_delta = H.to_finite()
        theta.weyl_groupoid, theta.weyl_cocycle = gpd, c_delta
        mapping = tuple(gpd.index_of(theta(a)) for a in Gd.morphisms)
        iso = GroupoidIso(Gd, gpd, mapping)
        if len(set(mapping)) == gpd.size == Gd.size:
            rep.extend(check_iso(iso))
        else:
            rep.add("bijection", False, (len(set(mapping)), gpd.size, Gd.size))
        rep.add("c_delta o theta = c", *_first(a for a in Gd.morphisms if c_delta(mapping[a]) != P.cocycle(a)))
        rep.extend(H.check_well_defined(), "weyl: ")
        theta.iso = iso
        return theta
    # DR groupoid: verify on a window
    W = P.window
    arrows = Gd.arrows_window(W)
    images = [theta(a) for a in arrows]
    rep.add("injective on window", len(set(images)) == len(images))
    rep.add("onto enumerated classes", set(images) == set(H.keys),
            None if set(images) == set(H.keys) else sorted(set(H.keys) ^ set(images), key=repr)[:3])
    rep.add("units to unit classes", *_first(x for x in Gd.points if theta((x, 0, x)) != H.unit_key(x)))
    rep.add("source and range", *_first(a for a, k in zip(arrows, images) if (k[0], k[1]) != (a[2], a[0])))
    rep.add("c_delta o theta = c", *_first(a for a, k in zip(arrows, images) if k[2] != P.cocycle(a)))
    rep.add("inverse", *_first(a for a in arrows if theta(Gd.inverse(a)) != H_inverse(P, theta(a), a)))
    # The arrows (x, 1, σx) and their inverses generate G(X, σ), so multiplicativity against
    # these generators implies it for all composable pairs (induction on word length).
    Wc = max(abs(ks.least_abs()) for ks in (Gd.kset(x, y) for x, y in Gd.pairs)) + max(Gd.max_period, 1)
    small = Gd.arrows_window(min(Wc, W))
    s = Gd.base
    by_rng: dict = {}
    for x in sorted(s.domain):
        by_rng.setdefault(x, []).append((x, 1, s(x)))
        by_rng.setdefault(s(x), []).append((s(x), -1, x))

    def bad_mult():
        for a in small:
            for b in by_rng.get(a[2], ()):
                lhs = theta(Gd.compose(a, b))
                rhs = class_key(P, delta(Gd, a) * delta(Gd, b), b[2])
                if lhs != rhs:
                    yield (a, b)

    rep.add("multiplicative", *_first(bad_mult()))
    return theta


def H_inverse(P, key, arrow) -> tuple:
    """Inverse class ``[n*, α_n(x)]`` of ``[δ_arrow, s(arrow)]``."""
    n = delta(P.groupoid, arrow)
    return class_key(P, n.star(), alpha(P, n, key[0]))


def iso_to_algebra_iso(kappa, c1=None, c2=None) -> AlgebraMap:
    """``φ(f) = f ∘ κ`` for ``κ: G2 -> G1`` with ``c1 ∘ κ = c2``; returns ``C_c(G1) -> C_c(G2)``."""
    from .algebra import pullback

    g2 = kappa.source
    if c1 is not None and c2 is not None:
        if isinstance(g2, FiniteGroupoid):
            bad = next((a for a in g2.morphisms if c1(kappa.map[a]) != c2(a)), None)
        else:
            bad = next((a for a in g2.arrows_window(g2.default_window) if c1(kappa(a)) != c2(a)), None)
        if bad is not None:
            raise InvalidStructure(f"cocycles are not compatible at arrow {bad!r}")
    return pullback(kappa)


def _basis(G) -> list:
    return list(G.morphisms) if isinstance(G, FiniteGroupoid) else G.arrows_window(G.default_window)


def algebra_iso_to_groupoid_iso(phi: AlgebraMap, P1: GroupoidPair, P2: GroupoidPair):
    """Recover ``κ: G2 -> G1`` from a diagonal-preserving graded isomorphism ``φ: A1 -> A2``.

    Each arrow ``γ`` of ``G2`` is sent to ``θ1^{-1}[φ^{-1}(δ_γ), x]`` where
    ``x`` is the unit of ``G1`` with ``φ(δ_x) = δ_{s(γ)}``.  When the kernel
    isotropy of ``P1`` has torsion, ``θ1`` does not exist and the result is
    the Weyl-level isomorphism ``H(P2) -> H(P1)`` instead.
    """
    G1, G2 = P1.groupoid, P2.groupoid
    if phi.source is not G1 or phi.target is not G2:
        raise InvalidStructure("algebra map does not go from C_c(G1) to C_c(G2)")
    rep = check_algebra_map(phi, _basis(G1), P1.cocycle, P2.cocycle)
    bad = [c for c in rep.failures() if c.name in ("diagonal into diagonal", "diagonal onto diagonal", "degree preserving")]
    if bad:
        raise InvalidStructure(f"algebra map fails '{bad[0].name}', witness {bad[0].witness!r}")
    inv = invert(phi)
    unit_map = {}
    for y in G2.points:
        img = inv(delta(G2, G2.unit_arrow(y)))
        sup = [a for a in img.coeffs]
        if len(sup) != 1 or not G1.is_unit(sup[0]):
            raise InvalidStructure(f"inverse image of the unit {y!r} is not a minimal diagonal projection")
        unit_map[y] = G1.source(sup[0])
    try:
        check_hypothesis(P1)
    except HypothesisError:
        return _weyl_level_iso(inv, P1, P2, unit_map)
    theta1 = canonical_theta(G1, P=P1)
    if not theta1.report.ok:
        raise RigidityError(f"canonical theta failed: {theta1.report.failures()[0].name}")

    def kappa_arrow(a):
        n = inv(delta(G2, a))
        return theta1.inverse(class_key(P1, n, unit_map[G2.source(a)]))

    if isinstance(G2, FiniteGroupoid):
        kappa = GroupoidIso(G2, G1, tuple(kappa_arrow(a) for a in G2.morphisms))
        r = check_iso(kappa)
        if not r.ok:
            raise RigidityError(f"recovered map is not an isomorphism: {r.failures()[0].name}")
        bad_c = next((a for a in G2.morphisms if P1.cocycle(kappa.map[a]) != P2.cocycle(a)), None)
        if bad_c is not None:
            raise RigidityError(f"recovered map does not intertwine the cocycles at {bad_c}")
        return kappa
    h = tuple(unit_map[y] for y in G2.points)
    kappa = dr_iso_from_function(G2, G1, h, lambda x, k, y: kappa_arrow((x, k, y))[1])
    r = check_dr_iso(kappa)
    if not r.ok:
        raise RigidityError(f"recovered map is not an isomorphism: {r.failures()[0].name}")
    return kappa


def _weyl_level_iso(inv: AlgebraMap, P1, P2, unit_map) -> GroupoidIso:
    """``H(P2) -> H(P1)``, ``[n, y] -> [φ^{-1}(n), x(y)]``, for pairs without a θ."""
    gH1, _ = weyl_finite(P1)
    H2 = build_weyl_groupoid(P2)
    gH2, _ = H2.to_finite()
    mapping = []
    for lab in gH2.labels:
        n, y = H2.reps[lab][0]
        mapping.append(gH1.index_of(class_key(P1, inv(n), unit_map[y])))
    iso = GroupoidIso(gH2, gH1, tuple(mapping))
    r = check_iso(iso)
    if not r.ok:
        raise RigidityError(f"Weyl-level map is not an isomorphism: {r.failures()[0].name}")
    return iso


def invert(phi: AlgebraMap) -> AlgebraMap:
    """Inverse algebra map: the recorded one, or a numerical inverse for finite groupoids."""
    if phi.inverse is not None:
        return AlgebraMap(phi.target, phi.source, phi.inverse, f"inverse of {phi.description}", phi.on_basis)
    S, T = phi.source, phi.target
    if not (isinstance(S, FiniteGroupoid) and isinstance(T, FiniteGroupoid)):
        raise InvalidStructure("inverse of an algebra map over DR groupoids must be supplied")
    n = S.size
    M = np.zeros((T.size, n), dtype=complex)
    for j in range(n):
        for k, v in phi.on_basis(j).coeffs.items():
            M[k, j] = v
    if T.size != n or np.linalg.matrix_rank(M, tol=1e-8) != n:
        raise InvalidStructure("algebra map is not invertible")
    Minv = np.linalg.inv(M)

    def image(a):
        return AlgebraElement(S, {i: Minv[i, a] for i in range(n)})

    return AlgebraMap(T, S, image, f"inverse of {phi.description}", phi.on_basis)
