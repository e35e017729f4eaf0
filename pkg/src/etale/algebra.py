"""The convolution *-algebra ``C_c(G)`` of a discrete groupoid.

Elements are finitely supported complex functions on the arrows of either a
:class:`~etale.groupoid.FiniteGroupoid` (arrows are integer ids) or a
:class:`~etale.dr.DRGroupoid` (arrows are ``(x, k, y)`` tuples).  Products are
computed by summing over composable pairs of the two supports, so the same
code serves both classes.  Coefficients with modulus at most ``EPS`` are
pruned after every operation; supports, degrees and bisections are exact.
"""

from __future__ import annotations

import cmath
import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Hashable, Iterable, Mapping, Sequence

import numpy as np

from ._common import EPS, NOT_HOMOGENEOUS, InvalidStructure, ValidationReport
from .groupoid import FiniteGroupoid, isotropy_arrows, isotropy_group
from .groups import FiniteGroup, FreeAbelian, generators


def _prune(coeffs: Mapping, eps: float) -> dict:
    return {a: complex(v) for a, v in coeffs.items() if abs(v) > eps}


class AlgebraElement:
    """A finitely supported function ``f`` on the arrows of ``groupoid``.

    ``f * g`` is convolution when ``g`` is an element and scaling when it is a
    number; ``f.star()`` is the involution.
    """

    __slots__ = ("groupoid", "coeffs")

    def __init__(self, groupoid, coeffs: Mapping | None = None, eps: float | None = None):
        self.groupoid = groupoid
        self.coeffs = _prune(coeffs or {}, EPS if eps is None else eps)

    # -- inspection ---------------------------------------------------------------
    def __call__(self, a) -> complex:
        return self.coeffs.get(a, 0j)

    @property
    def support(self) -> tuple:
        return tuple(sorted(self.coeffs))

    def is_zero(self) -> bool:
        return not self.coeffs

    def __len__(self) -> int:
        return len(self.coeffs)

    def __repr__(self) -> str:
        terms = ", ".join(f"{a}: {_fmt(v)}" for a, v in sorted(self.coeffs.items()))
        return f"AlgebraElement({{{terms}}})"

    # -- arithmetic ---------------------------------------------------------------
    def _same(self, other: "AlgebraElement") -> None:
        if other.groupoid is not self.groupoid:
            raise InvalidStructure("elements live over different groupoids")

    def __add__(self, other: "AlgebraElement") -> "AlgebraElement":
        self._same(other)
        out = dict(self.coeffs)
        for a, v in other.coeffs.items():
            out[a] = out.get(a, 0j) + v
        return AlgebraElement(self.groupoid, out)

    def __neg__(self) -> "AlgebraElement":
        return AlgebraElement(self.groupoid, {a: -v for a, v in self.coeffs.items()})

    def __sub__(self, other: "AlgebraElement") -> "AlgebraElement":
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, AlgebraElement):
            return convolve(self, other)
        return AlgebraElement(self.groupoid, {a: v * other for a, v in self.coeffs.items()})

    def __rmul__(self, other):
        return AlgebraElement(self.groupoid, {a: other * v for a, v in self.coeffs.items()})

    def star(self) -> "AlgebraElement":
        return adjoint(self)

    def close_to(self, other: "AlgebraElement", eps: float | None = None) -> bool:
        self._same(other)
        tol = EPS if eps is None else eps
        keys = set(self.coeffs) | set(other.coeffs)
        return all(abs(self(a) - other(a)) <= tol for a in keys)

    def __eq__(self, other) -> bool:
        return isinstance(other, AlgebraElement) and other.groupoid is self.groupoid and self.close_to(other)

    __hash__ = None  # mutable-looking value type compared with tolerance


def _fmt(v: complex) -> str:
    if abs(v.imag) <= EPS:
        return f"{v.real:.6g}"
    return f"{v.real:.6g}{v.imag:+.6g}j"


def zero(groupoid) -> AlgebraElement:
    return AlgebraElement(groupoid)


def delta(groupoid, arrow, coeff: complex = 1.0) -> AlgebraElement:
    """Indicator ``coeff * δ_arrow``."""
    _check_arrow(groupoid, arrow)
    return AlgebraElement(groupoid, {arrow: coeff})


def indicator(groupoid, arrows: Iterable) -> AlgebraElement:
    arrows = list(arrows)
    for a in arrows:
        _check_arrow(groupoid, a)
    return AlgebraElement(groupoid, {a: 1.0 for a in arrows})


def unit_element(groupoid) -> AlgebraElement:
    """Indicator of the unit space (the identity when the unit space is finite)."""
    return indicator(groupoid, [groupoid.unit_arrow(x) for x in groupoid.points])


def from_function(groupoid, fn: Callable, arrows: Iterable) -> AlgebraElement:
    return AlgebraElement(groupoid, {a: fn(a) for a in arrows})


def _check_arrow(groupoid, a) -> None:
    if isinstance(groupoid, FiniteGroupoid):
        if not (isinstance(a, (int, np.integer)) and 0 <= a < groupoid.size):
            raise InvalidStructure(f"{a!r} is not a morphism")
    elif not groupoid.is_arrow(a):
        raise InvalidStructure(f"{a!r} is not an arrow")


def convolve(f: AlgebraElement, g: AlgebraElement) -> AlgebraElement:
    """``f ∗ g (η) = Σ_{η1 η2 = η} f(η1) g(η2)``."""
    f._same(g)
    G = f.groupoid
    by_range: dict = {}
    for b, v in g.coeffs.items():
        by_range.setdefault(G.range_(b), []).append((b, v))
    out: dict = {}
    if isinstance(G, FiniteGroupoid):
        comp, src = G.comp, G.src
        for a, u in f.coeffs.items():
            for b, v in by_range.get(src[a], ()):
                c = comp[(a, b)]
                out[c] = out.get(c, 0j) + u * v
    else:
        for a, u in f.coeffs.items():
            for b, v in by_range.get(G.source(a), ()):
                c = G.compose(a, b)
                out[c] = out.get(c, 0j) + u * v
    return AlgebraElement(G, out)


def adjoint(f: AlgebraElement) -> AlgebraElement:
    """``f*(η) = conj f(η^{-1})``."""
    G = f.groupoid
    return AlgebraElement(G, {G.inverse(a): v.conjugate() for a, v in f.coeffs.items()})


# ---------------------------------------------------------------------------------
# Representations and norms (finite groupoids only)


def _require_finite(G, what: str) -> None:
    if not isinstance(G, FiniteGroupoid):
        raise InvalidStructure(f"{what} is only offered for finite groupoids")


def regular_rep(f: AlgebraElement, x: int) -> np.ndarray:
    """Matrix of ``π_x(f)`` on ``ℓ²(Gx)`` with basis ``Gx`` in id order.

    ``π_x(f) δ_η = Σ_{η' ∈ G r(η)} f(η') δ_{η'η}``.
    """
    G = f.groupoid
    _require_finite(G, "regular_rep")
    if x not in G.unit_set:
        raise InvalidStructure(f"{x} is not a unit")
    basis = G.arrows_from(x)
    idx = {a: i for i, a in enumerate(basis)}
    M = np.zeros((len(basis), len(basis)), dtype=complex)
    by_src: dict = {}
    for a, v in f.coeffs.items():
        by_src.setdefault(G.src[a], []).append((a, v))
    for j, eta in enumerate(basis):
        for a, v in by_src.get(G.rng[eta], ()):
            M[idx[G.comp[(a, eta)]], j] += v
    return M


def spectral_norm(M: np.ndarray) -> float:
    """Largest singular value via the eigenvalues of ``M^H M``."""
    if M.size == 0:
        return 0.0
    w = np.linalg.eigvalsh(M.conj().T @ M)
    return float(math.sqrt(max(w[-1], 0.0)))


def reduced_norm(f: AlgebraElement) -> float:
    """``max_x ‖π_x(f)‖`` over all units ``x``."""
    G = f.groupoid
    _require_finite(G, "reduced_norm")
    if f.is_zero():
        return 0.0
    return max(spectral_norm(regular_rep(f, x)) for x in G.units)


def sup_norm(f: AlgebraElement) -> float:
    return max((abs(v) for v in f.coeffs.values()), default=0.0)


def evaluate_j(f: AlgebraElement) -> dict:
    """``j(f)`` as a function on arrows; for ``f ∈ C_c(G)`` this is ``f`` itself."""
    return dict(f.coeffs)


# ---------------------------------------------------------------------------------
# Diagonal, commutant, fibers


def diagonal_part(f: AlgebraElement) -> AlgebraElement:
    G = f.groupoid
    return AlgebraElement(G, {a: v for a, v in f.coeffs.items() if G.is_unit(a)})


def is_diagonal(f: AlgebraElement) -> bool:
    G = f.groupoid
    return all(G.is_unit(a) for a in f.coeffs)


def supports_bisection(f: AlgebraElement) -> bool:
    G = f.groupoid
    src = [G.source(a) for a in f.coeffs]
    rng = [G.range_(a) for a in f.coeffs]
    return len(set(src)) == len(src) and len(set(rng)) == len(rng)


def relative_commutant_basis(G, sub: Iterable | None = None, window: int | None = None) -> list[frozenset]:
    """Basis of ``{f ∈ C_c(ambient) : f d = d f for every diagonal d}``.

    ``sub`` lists the arrows of the ambient subgroupoid (all of ``G`` when
    omitted).  The commutant consists of the functions supported on the
    isotropy of the ambient groupoid, so the basis is the list of singleton
    supports ``{η}`` for isotropy arrows ``η``.  DR groupoids need a
    ``window`` bounding ``|k|``.
    """
    if isinstance(G, FiniteGroupoid):
        arrows = list(G.morphisms) if sub is None else sorted(set(sub))
    else:
        if window is None:
            raise InvalidStructure("DR groupoids need a window for the commutant basis")
        arrows = G.arrows_window(window) if sub is None else sorted(set(sub))
    return [frozenset([a]) for a in arrows if G.source(a) == G.range_(a)]


@dataclass
class FiberElement:
    """Element of the fiber algebra ``C*(xGx°)`` attached to a unit ``x``.

    ``kind`` is ``"scalar"``, ``"laurent"`` or ``"finite-group-algebra"``.
    ``coeffs`` maps group elements to complex numbers: the empty tuple for a
    scalar, integer exponent vectors for Laurent polynomials, and elements of
    ``group`` (a :class:`FiniteGroup` whose labels are the isotropy arrow ids)
    for finite groups.  Laurent exponents are the displacements ``k`` of the
    isotropy arrows ``(x, k, x)``.
    """

    kind: str
    coeffs: dict
    group: object = field(default=None, repr=False)

    def __post_init__(self):
        self.coeffs = _prune(self.coeffs, EPS)

    def _mul_keys(self, a, b):
        if self.kind == "scalar":
            return ()
        return self.group.mul(a, b)

    def _inv_key(self, a):
        if self.kind == "scalar":
            return ()
        return self.group.inv(a)

    @property
    def identity_key(self):
        if self.kind == "scalar":
            return ()
        return self.group.identity

    def __mul__(self, other: "FiberElement") -> "FiberElement":
        if other.kind != self.kind:
            raise InvalidStructure("fiber elements of different kinds")
        out: dict = {}
        for a, u in self.coeffs.items():
            for b, v in other.coeffs.items():
                c = self._mul_keys(a, b)
                out[c] = out.get(c, 0j) + u * v
        return FiberElement(self.kind, out, self.group)

    def star(self) -> "FiberElement":
        return FiberElement(self.kind, {self._inv_key(a): v.conjugate() for a, v in self.coeffs.items()}, self.group)

    def one(self) -> "FiberElement":
        return FiberElement(self.kind, {self.identity_key: 1.0}, self.group)

    def close_to(self, other: "FiberElement", eps: float | None = None) -> bool:
        tol = EPS if eps is None else eps
        keys = set(self.coeffs) | set(other.coeffs)
        return other.kind == self.kind and all(
            abs(self.coeffs.get(k, 0j) - other.coeffs.get(k, 0j)) <= tol for k in keys)

    def is_identity(self, eps: float | None = None) -> bool:
        return self.close_to(self.one(), eps)

    def is_unitary(self, eps: float | None = None) -> bool:
        tol = 1e3 * (EPS if eps is None else eps)
        return (self * self.star()).is_identity(tol) and (self.star() * self).is_identity(tol)

    def is_monomial(self) -> bool:
        return len(self.coeffs) == 1

    def winding(self) -> tuple[int, ...]:
        """Exponent vector of a unimodular Laurent monomial."""
        if self.kind != "laurent":
            raise InvalidStructure("winding is defined for Laurent fibers only")
        if not self.is_monomial() or abs(abs(next(iter(self.coeffs.values()))) - 1) > 1e3 * EPS:
            raise InvalidStructure("not a unimodular Laurent monomial; non-monomial unitaries are not supported")
        return next(iter(self.coeffs))

    def to_dict(self) -> dict:
        from ._common import _jsonable

        return {"kind": self.kind,
                "terms": [[_jsonable(k), _jsonable(v)] for k, v in sorted(self.coeffs.items(), key=lambda kv: repr(kv[0]))]}


def ambient_isotropy(G, x, cocycle=None, window: int | None = None) -> list:
    """Arrows of ``xGx`` lying in the kernel of ``cocycle`` (all of ``xGx`` if ``None``)."""
    if isinstance(G, FiniteGroupoid):
        arrows = list(isotropy_arrows(G, x))
    else:
        w = G.default_window if window is None else window
        arrows = [(x, k, x) for k in G.kset(x, x).window(w)]
    if cocycle is not None:
        e = cocycle.target.identity
        arrows = [a for a in arrows if cocycle(a) == e]
    return arrows


def fiber_at(f: AlgebraElement, x, cocycle=None) -> FiberElement:
    """Image of a commutant element in the fiber at ``x``: the restriction to ``xGx``.

    With ``cocycle`` given, the ambient algebra is the degree-``e`` part, so
    the fiber is built on ``xGx ∩ c^{-1}(e)``.
    """
    G = f.groupoid
    if isinstance(G, FiniteGroupoid):
        if x not in G.unit_set:
            raise InvalidStructure(f"{x} is not a unit")
    elif x not in G.points:
        raise InvalidStructure(f"{x} is not a point")
    e = None if cocycle is None else cocycle.target.identity
    for a in f.coeffs:
        if G.source(a) != G.range_(a) or (cocycle is not None and cocycle(a) != e):
            raise InvalidStructure(f"element is not in the relative commutant: arrow {a!r}")
    local = {a: v for a, v in f.coeffs.items() if G.source(a) == x}
    if isinstance(G, FiniteGroupoid):
        iso = ambient_isotropy(G, x, cocycle)
        if len(iso) == 1:
            return FiberElement("scalar", {(): local.get(x, 0j)})
        full = isotropy_group(G, x)
        if len(iso) == full.order:
            grp = full
        else:
            idx = {a: i for i, a in enumerate(iso)}
            grp = FiniteGroup([[idx[G.comp[(a, b)]] for b in iso] for a in iso], idx[x], labels=iso)
        pos = {a: i for i, a in enumerate(grp.labels)}
        return FiberElement("finite-group-algebra", {pos[a]: v for a, v in local.items()}, grp)
    # DR: isotropy of the ambient groupoid is qℤ, trivial when q == 0
    from .dr import kernel_isotropy_period

    q = G.isotropy_period(x) if cocycle is None else kernel_isotropy_period(G, cocycle, x)
    if q == 0:
        return FiberElement("scalar", {(): local.get((x, 0, x), 0j)})
    return FiberElement("laurent", {(a[1],): v for a, v in local.items()}, FreeAbelian(1))


# ---------------------------------------------------------------------------------
# Gradings


def degree(f: AlgebraElement, c):
    """Common degree of the support, ``NOT_HOMOGENEOUS`` otherwise (zero has degree ``e``)."""
    degs = {c(a) for a in f.coeffs}
    if not degs:
        return c.target.identity
    if len(degs) > 1:
        return NOT_HOMOGENEOUS
    return degs.pop()


def graded_components(f: AlgebraElement, c) -> dict:
    parts: dict = {}
    for a, v in f.coeffs.items():
        parts.setdefault(c(a), {})[a] = v
    return {k: AlgebraElement(f.groupoid, v) for k, v in parts.items()}


# ---------------------------------------------------------------------------------
# Algebra maps


@dataclass
class AlgebraMap:
    """Linear map ``C_c(source) -> C_c(target)`` given on the basis ``δ_a``."""

    source: object
    target: object
    on_basis: Callable[[Hashable], AlgebraElement]
    description: str = ""
    inverse: Callable[[Hashable], AlgebraElement] | None = None

    def __call__(self, f: AlgebraElement) -> AlgebraElement:
        if f.groupoid is not self.source:
            raise InvalidStructure("element is not over the source groupoid")
        out = zero(self.target)
        for a, v in f.coeffs.items():
            out = out + v * self.on_basis(a)
        return out

    def compose(self, inner: "AlgebraMap") -> "AlgebraMap":
        """``self ∘ inner``."""
        inv = None
        if self.inverse is not None and inner.inverse is not None:
            outer_inv = AlgebraMap(self.target, self.source, self.inverse)
            inner_inv = AlgebraMap(inner.target, inner.source, inner.inverse)
            inv = lambda a: inner_inv(outer_inv.on_basis(a))  # noqa: E731
        return AlgebraMap(inner.source, self.target, lambda a: self(inner.on_basis(a)),
                          f"{self.description} o {inner.description}", inv)


def pullback(kappa) -> AlgebraMap:
    """``φ(f) = f ∘ κ`` for an isomorphism ``κ: G2 -> G1``; maps ``C_c(G1) -> C_c(G2)``.

    ``κ`` is a :class:`~etale.isomorphism.GroupoidIso` or a :class:`~etale.dr.DRIso`.
    """
    g2, g1 = kappa.source, kappa.target
    if isinstance(g1, FiniteGroupoid):
        inv = kappa.inverse().map
        return AlgebraMap(g1, g2, lambda a: delta(g2, inv[a]), "pullback",
                          lambda b: delta(g1, kappa.map[b]))
    from .dr import dr_inverse

    kinv = dr_inverse(kappa)
    return AlgebraMap(g1, g2, lambda a: delta(g2, kinv(a)), "pullback", lambda b: delta(g1, kappa(b)))


def inner_diagonal(G, phases: Mapping) -> AlgebraMap:
    """Conjugation ``f -> u f u*`` by the diagonal unitary ``u = Σ phases[x] δ_x``."""
    for x, t in phases.items():
        if abs(abs(t) - 1) > 1e3 * EPS:
            raise InvalidStructure(f"phase at {x} is not unimodular")

    def factor(a):
        return phases.get(G.range_(a), 1.0) * complex(phases.get(G.source(a), 1.0)).conjugate()

    return AlgebraMap(G, G, lambda a: delta(G, a, factor(a)), "inner diagonal unitary",
                      lambda a: delta(G, a, factor(a).conjugate()))


def _characters(grp: FiniteGroup) -> list[tuple[complex, ...]]:
    """All characters of a finite abelian group, as value tuples."""
    if not grp.is_abelian():
        raise InvalidStructure("characters are computed for abelian groups only")
    gens = generators(grp)
    # express each element as a product of generator powers
    exps = {grp.identity: (0,) * len(gens)}
    frontier = [grp.identity]
    while frontier:
        nxt = []
        for x in frontier:
            for i, s in enumerate(gens):
                y = grp.mul(x, s)
                if y not in exps:
                    e = list(exps[x])
                    e[i] += 1
                    exps[y] = tuple(e)
                    nxt.append(y)
        frontier = nxt
    orders = [grp.element_order(s) for s in gens]
    out = []
    for choice in itertools.product(*[range(o) for o in orders]):
        vals = tuple(
            cmath.exp(2j * math.pi * sum(c * e / o for c, e, o in zip(choice, exps[g], orders)))
            for g in grp.elements
        )
        if all(abs(vals[grp.mul(a, b)] - vals[a] * vals[b]) < 1e-9 for a in grp.elements for b in grp.elements):
            out.append(vals)
    if len(out) != grp.order:
        raise InvalidStructure("character enumeration incomplete")
    return sorted(out, key=lambda v: [(round(z.real, 9), round(z.imag, 9)) for z in v])


def fourier_iso(g_src: FiniteGroupoid, grp_src: FiniteGroup, g_tgt: FiniteGroupoid, grp_tgt: FiniteGroup) -> AlgebraMap:
    """A *-isomorphism ``ℂ[Γ] -> ℂ[Λ]`` of group algebras of equal-order abelian groups.

    Both algebras are ``ℂ^n`` via Fourier transform; the map pairs the
    characters of ``Γ`` and ``Λ`` in sorted order.  The groupoids must be the
    one-object groupoids of the groups, with morphism labels equal to group
    element labels.
    """
    if grp_src.order != grp_tgt.order:
        raise InvalidStructure("group orders differ")
    chi, psi = _characters(grp_src), _characters(grp_tgt)
    n = grp_tgt.order
    tgt_ids = [g_tgt.index_of(grp_tgt.labels[h]) for h in grp_tgt.elements]
    src_elem = {g_src.index_of(grp_src.labels[g]): g for g in grp_src.elements}

    def image(a):
        g = src_elem[a]
        coeffs: dict = {}
        for c, p in zip(chi, psi):
            for h in grp_tgt.elements:
                coeffs[tgt_ids[h]] = coeffs.get(tgt_ids[h], 0j) + c[g] * p[h].conjugate() / n
        return AlgebraElement(g_tgt, coeffs)

    return AlgebraMap(g_src, g_tgt, image, "Fourier")


def check_algebra_map(phi: AlgebraMap, basis: Sequence, c_source=None, c_target=None,
                      eps: float = 1e-9) -> ValidationReport:
    """Multiplicativity, *-preservation, diagonal preservation and grading on a basis.

    For finite groupoids ``basis`` should be every morphism, which makes the
    check exhaustive (all conditions are bilinear or linear).  Bijectivity is
    checked by the rank of the basis images.
    """
    S, T = phi.source, phi.target
    rep = ValidationReport("algebra map")
    img = {a: phi.on_basis(a) for a in basis}

    def mult():
        for a in basis:
            for b in basis:
                lhs = phi(delta(S, a) * delta(S, b))
                if not lhs.close_to(img[a] * img[b], eps):
                    yield (a, b)

    rep.add("multiplicative", *_first(mult()))
    rep.add("*-preserving", *_first(a for a in basis if not phi(delta(S, a).star()).close_to(img[a].star(), eps)))
    units = [a for a in basis if S.is_unit(a)]
    rep.add("diagonal into diagonal", *_first(a for a in units if not is_diagonal(img[a])))
    if isinstance(S, FiniteGroupoid) and isinstance(T, FiniteGroupoid):
        keys = sorted({k for v in img.values() for k in v.coeffs} | set(T.morphisms))
        kidx = {k: i for i, k in enumerate(keys)}
        M = np.zeros((len(keys), len(basis)), dtype=complex)
        for j, a in enumerate(basis):
            for k, v in img[a].coeffs.items():
                M[kidx[k], j] = v
        rank = int(np.linalg.matrix_rank(M, tol=1e-8)) if M.size else 0
        rep.add("bijective", rank == len(basis) == T.size, (rank, len(basis), T.size))
        dM = M[[kidx[u] for u in T.units]][:, [basis.index(u) for u in units]] if units else M[:0, :0]
        drank = int(np.linalg.matrix_rank(dM, tol=1e-8)) if dM.size else 0
        rep.add("diagonal onto diagonal", drank == len(T.units) == len(units), (drank, len(units), len(T.units)))
    if c_source is not None and c_target is not None:
        rep.add("degree preserving", *_first(
            a for a in basis if not img[a].is_zero() and degree(img[a], c_target) != c_source(a)))
    return rep


def _first(gen):
    w = next(iter(gen), None)
    return w is None, w
