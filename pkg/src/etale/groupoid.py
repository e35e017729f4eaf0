"""Finite discrete groupoids: axioms, constructors and structural queries.

Morphisms are dense integers ``0..n-1`` with the units listed first.  The
``labels`` tuple keeps a readable name for every morphism (a pair ``(x, y)``
for an equivalence relation, ``(x, g)`` for a transformation groupoid, ...).
Every groupoid here carries the discrete topology, so "open" subgroupoids and
open bisections are just subgroupoids and bisections.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Hashable, Iterable, Mapping, Sequence

from ._common import InvalidStructure, ValidationReport
from .groups import FiniteGroup, GradingGroup, trivial_group


class FiniteGroupoid:
    """Explicit finite groupoid.

    Parameters
    ----------
    units : sequence of int
        Identity morphisms (the unit space).
    src, rng, inv : sequence of int
        Source, range and inverse of each morphism, indexed by morphism id.
    comp : mapping ``(a, b) -> c``
        Composition ``ab``; should be defined exactly when ``src[a] == rng[b]``.
    labels : sequence, optional
        Readable name per morphism.

    The constructor stores data without checking it; run :func:`validate` or
    :meth:`ensure_valid` to check the groupoid axioms.
    """

    is_finite = True

    def __init__(self, units, src, rng, inv, comp: Mapping[tuple[int, int], int], labels=None):
        self.src = tuple(src)
        self.rng = tuple(rng)
        self.inv = tuple(inv)
        self.units = tuple(units)
        self.comp = dict(comp)
        n = len(self.src)
        if len(self.rng) != n or len(self.inv) != n:
            raise InvalidStructure("src, rng and inv must have equal length")
        self.labels = tuple(labels) if labels is not None else tuple(range(n))
        if len(self.labels) != n:
            raise InvalidStructure("labels length differs from number of morphisms")

    # -- basic protocol shared with DR groupoids -------------------------------------
    @property
    def size(self) -> int:
        return len(self.src)

    @property
    def morphisms(self) -> range:
        return range(len(self.src))

    @cached_property
    def unit_set(self) -> frozenset[int]:
        return frozenset(self.units)

    @property
    def points(self) -> tuple[int, ...]:
        return self.units

    def is_unit(self, a: int) -> bool:
        return a in self.unit_set

    def unit_arrow(self, x: int) -> int:
        return x

    def source(self, a: int) -> int:
        return self.src[a]

    def range_(self, a: int) -> int:
        return self.rng[a]

    def inverse(self, a: int) -> int:
        return self.inv[a]

    def compose(self, a: int, b: int) -> int:
        try:
            return self.comp[(a, b)]
        except KeyError:
            raise InvalidStructure(f"morphisms {a}, {b} are not composable") from None

    def composable(self, a: int, b: int) -> bool:
        return self.src[a] == self.rng[b]

    @cached_property
    def _by_source(self) -> dict[int, tuple[int, ...]]:
        out: dict[int, list[int]] = {x: [] for x in self.units}
        for a in self.morphisms:
            out.setdefault(self.src[a], []).append(a)
        return {x: tuple(v) for x, v in out.items()}

    @cached_property
    def _by_range(self) -> dict[int, tuple[int, ...]]:
        out: dict[int, list[int]] = {x: [] for x in self.units}
        for a in self.morphisms:
            out.setdefault(self.rng[a], []).append(a)
        return {x: tuple(v) for x, v in out.items()}

    def arrows_from(self, x: int) -> tuple[int, ...]:
        """``Gx``: morphisms with source ``x``."""
        return self._by_source.get(x, ())

    def arrows_to(self, x: int) -> tuple[int, ...]:
        """``xG``: morphisms with range ``x``."""
        return self._by_range.get(x, ())

    def arrows_between(self, x: int, y: int) -> tuple[int, ...]:
        """Morphisms with range ``x`` and source ``y``."""
        return tuple(a for a in self.arrows_from(y) if self.rng[a] == x)

    def index_of(self, label: Hashable) -> int:
        try:
            return self._label_index[label]
        except KeyError:
            raise KeyError(f"no morphism labelled {label!r}") from None

    @cached_property
    def _label_index(self) -> dict:
        return {lab: i for i, lab in enumerate(self.labels)}

    def ensure_valid(self) -> "FiniteGroupoid":
        rep = validate(self)
        if not rep.ok:
            bad = rep.failures()[0]
            raise InvalidStructure(f"groupoid axiom {bad.name} fails, witness {bad.witness!r}")
        return self

    def __repr__(self) -> str:
        return f"FiniteGroupoid(morphisms={self.size}, units={len(self.units)})"

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, FiniteGroupoid)
            and self.units == other.units
            and self.src == other.src
            and self.rng == other.rng
            and self.inv == other.inv
            and self.comp == other.comp
        )

    def __hash__(self) -> int:
        return hash((self.units, self.src, self.rng, self.inv))

    @classmethod
    def from_labeled(
        cls,
        morphisms: Sequence[Hashable],
        units: Sequence[Hashable],
        src: Callable[[Hashable], Hashable],
        rng: Callable[[Hashable], Hashable],
        inv: Callable[[Hashable], Hashable],
        comp: Callable[[Hashable, Hashable], Hashable],
    ) -> "FiniteGroupoid":
        """Build from labelled data, assigning canonical ids (units first, input order)."""
        unit_list = list(dict.fromkeys(units))
        unit_set = set(unit_list)
        rest = [m for m in dict.fromkeys(morphisms) if m not in unit_set]
        labels = unit_list + rest
        idx = {m: i for i, m in enumerate(labels)}
        try:
            s = [idx[src(m)] for m in labels]
            r = [idx[rng(m)] for m in labels]
            iv = [idx[inv(m)] for m in labels]
        except KeyError as exc:
            raise InvalidStructure(f"structure map leaves the morphism set: {exc}") from None
        table = {}
        for a, b in itertools.product(range(len(labels)), repeat=2):
            if s[a] == r[b]:
                c = comp(labels[a], labels[b])
                if c not in idx:
                    raise InvalidStructure(f"product of {labels[a]!r} and {labels[b]!r} not a morphism")
                table[(a, b)] = idx[c]
        return cls(range(len(unit_list)), s, r, iv, table, labels)


# ---------------------------------------------------------------------------------
# Axioms


def validate(g: FiniteGroupoid) -> ValidationReport:
    """Check structural well-formedness and the six groupoid axioms.

    Every failing axiom carries a witness tuple of morphism ids.
    """
    rep = ValidationReport("groupoid axioms")
    n = g.size
    units = g.unit_set
    ids = range(n)

    bad = next((u for u in g.units if not 0 <= u < n), None)
    bad = bad if bad is not None else next(
        (a for a in ids if g.src[a] not in units or g.rng[a] not in units or not 0 <= g.inv[a] < n), None)
    rep.add("structure maps", bad is None, bad)
    if bad is not None:
        return rep

    extra = next(((a, b) for (a, b) in g.comp if not (0 <= a < n and 0 <= b < n) or g.src[a] != g.rng[b]), None)
    missing = next(((a, b) for a in ids for b in g.arrows_to(g.src[a]) if (a, b) not in g.comp), None)
    outside = next(((a, b) for (a, b), c in g.comp.items() if not 0 <= c < n), None)
    witness = extra if extra is not None else (missing if missing is not None else outside)
    rep.add("composition domain", witness is None, witness,
            "" if witness is None else ("defined on a non-composable pair" if extra is not None else
                                        "undefined on a composable pair" if missing is not None else
                                        "value outside morphisms"))

    def c(a, b):
        return g.comp.get((a, b))

    rep.add("axiom 1: r(x)=x=s(x)", *_first(
        (x,) for x in g.units if g.rng[x] != x or g.src[x] != x))
    rep.add("axiom 2: r(h)h=h=hs(h)", *_first(
        (a,) for a in ids if c(g.rng[a], a) != a or c(a, g.src[a]) != a))
    rep.add("axiom 3: r(h^-1)=s(h), s(h^-1)=r(h)", *_first(
        (a,) for a in ids if g.rng[g.inv[a]] != g.src[a] or g.src[g.inv[a]] != g.rng[a]))
    rep.add("axiom 4: h^-1 h=s(h), h h^-1=r(h)", *_first(
        (a,) for a in ids if c(g.inv[a], a) != g.src[a] or c(a, g.inv[a]) != g.rng[a]))

    def ax5():
        for (a, b), ab in g.comp.items():
            if not 0 <= ab < n or g.rng[ab] != g.rng[a] or g.src[ab] != g.src[b]:
                yield (a, b)

    rep.add("axiom 5: r(h1h2)=r(h1), s(h1h2)=s(h2)", *_first(ax5()))

    def ax6():
        for (a, b), ab in g.comp.items():
            for c3 in g.arrows_to(g.src[b]):
                bc = c(b, c3)
                lhs = c(ab, c3) if ab is not None else None
                rhs = c(a, bc) if bc is not None else None
                if lhs is None or lhs != rhs:
                    yield (a, b, c3)

    rep.add("axiom 6: associativity", *_first(ax6()))
    return rep


def _first(gen: Iterable) -> tuple[bool, object]:
    w = next(iter(gen), None)
    return w is None, w


# ---------------------------------------------------------------------------------
# Constructors


def from_group(group: FiniteGroup) -> FiniteGroupoid:
    group.ensure_valid()
    e = group.identity
    return FiniteGroupoid.from_labeled(
        list(group.labels), [group.labels[e]],
        src=lambda m: group.labels[e], rng=lambda m: group.labels[e],
        inv=lambda m: group.labels[group.inv(_lab(group, m))],
        comp=lambda a, b: group.labels[group.mul(_lab(group, a), _lab(group, b))],
    )


def _lab(group: FiniteGroup, label) -> int:
    return group.labels.index(label)


def from_set(points: Sequence[Hashable]) -> FiniteGroupoid:
    """The space ``X`` as a groupoid of units only."""
    pts = list(points)
    return FiniteGroupoid.from_labeled(pts, pts, src=lambda m: m, rng=lambda m: m, inv=lambda m: m,
                                       comp=lambda a, b: a)


def from_equivalence(blocks: Sequence[Sequence[Hashable]]) -> FiniteGroupoid:
    """Groupoid of an equivalence relation given by its blocks; arrows are pairs ``(x, y)``."""
    seen: set = set()
    for block in blocks:
        for x in block:
            if x in seen:
                raise InvalidStructure(f"point {x!r} lies in more than one block")
            seen.add(x)
    pts = [x for block in blocks for x in block]
    arrows = [(x, y) for block in blocks for x in block for y in block]
    return FiniteGroupoid.from_labeled(
        arrows, [(x, x) for x in pts],
        src=lambda m: (m[1], m[1]), rng=lambda m: (m[0], m[0]), inv=lambda m: (m[1], m[0]),
        comp=lambda a, b: (a[0], b[1]),
    )


def full_relation(n: int) -> FiniteGroupoid:
    """``R_n``: the full equivalence relation on ``{0..n-1}``."""
    return from_equivalence([list(range(n))])


def from_group_bundle(points: Sequence[Hashable], fiber: Mapping[Hashable, FiniteGroup]) -> FiniteGroupoid:
    """Disjoint union of groups over ``points``; arrows are ``(x, g)``."""
    for x in points:
        fiber[x].ensure_valid()
    arrows = [(x, g) for x in points for g in fiber[x].elements]
    return FiniteGroupoid.from_labeled(
        arrows, [(x, fiber[x].identity) for x in points],
        src=lambda m: (m[0], fiber[m[0]].identity), rng=lambda m: (m[0], fiber[m[0]].identity),
        inv=lambda m: (m[0], fiber[m[0]].inv(m[1])),
        comp=lambda a, b: (a[0], fiber[a[0]].mul(a[1], b[1])),
    )


def check_action(points: Sequence[Hashable], group: FiniteGroup, act: Callable) -> ValidationReport:
    """Right-action laws ``x e = x`` and ``(x g) h = x (g h)``."""
    rep = ValidationReport("right action")
    pts = set(points)
    rep.add("closure", *_first((x, g) for x in points for g in group.elements if act(x, g) not in pts))
    if not rep.ok:
        return rep
    rep.add("identity", *_first((x,) for x in points if act(x, group.identity) != x))
    rep.add("compatibility", *_first(
        (x, g, h) for x in points for g in group.elements for h in group.elements
        if act(act(x, g), h) != act(x, group.mul(g, h))))
    return rep


def transformation_groupoid(points: Sequence[Hashable], group: FiniteGroup, act: Callable) -> tuple[FiniteGroupoid, "Cocycle"]:
    """``X ⋊ Γ`` for a right action, with arrows ``(x, γ)``, ``r = x``, ``s = xγ``.

    Returns the groupoid and its canonical cocycle ``(x, γ) -> γ``.
    """
    group.ensure_valid()
    rep = check_action(points, group, act)
    if not rep.ok:
        bad = rep.failures()[0]
        raise InvalidStructure(f"not a right action ({bad.name}), witness {bad.witness!r}")
    e = group.identity
    arrows = [(x, g) for x in points for g in group.elements]
    gpd = FiniteGroupoid.from_labeled(
        arrows, [(x, e) for x in points],
        src=lambda m: (act(m[0], m[1]), e), rng=lambda m: (m[0], e),
        inv=lambda m: (act(m[0], m[1]), group.inv(m[1])),
        comp=lambda a, b: (a[0], group.mul(a[1], b[1])),
    )
    labels = tuple(gpd.labels[a][1] for a in gpd.morphisms)
    return gpd, Cocycle(gpd, group, labels)


def product(g: FiniteGroupoid, h: FiniteGroupoid) -> FiniteGroupoid:
    """Componentwise product groupoid; labels are pairs of factor labels."""
    arrows = [(a, b) for a in g.morphisms for b in h.morphisms]
    built = FiniteGroupoid.from_labeled(
        arrows, [(x, y) for x in g.units for y in h.units],
        src=lambda m: (g.src[m[0]], h.src[m[1]]), rng=lambda m: (g.rng[m[0]], h.rng[m[1]]),
        inv=lambda m: (g.inv[m[0]], h.inv[m[1]]),
        comp=lambda p, q: (g.comp[(p[0], q[0])], h.comp[(p[1], q[1])]),
    )
    labels = tuple((g.labels[a], h.labels[b]) for (a, b) in built.labels)
    return FiniteGroupoid(built.units, built.src, built.rng, built.inv, built.comp, labels)


def product_with_R(g: FiniteGroupoid, n: int) -> FiniteGroupoid:
    """``G × R`` with ``R`` truncated to the full relation on ``{0..n}``."""
    if n < 0:
        raise InvalidStructure("truncation level must be non-negative")
    return product(g, full_relation(n + 1))


def disjoint_union(parts: Sequence[FiniteGroupoid]) -> FiniteGroupoid:
    """Disjoint union; labels become ``(part index, label)``."""
    arrows = [(i, a) for i, p in enumerate(parts) for a in p.morphisms]
    built = FiniteGroupoid.from_labeled(
        arrows, [(i, x) for i, p in enumerate(parts) for x in p.units],
        src=lambda m: (m[0], parts[m[0]].src[m[1]]), rng=lambda m: (m[0], parts[m[0]].rng[m[1]]),
        inv=lambda m: (m[0], parts[m[0]].inv[m[1]]),
        comp=lambda p, q: (p[0], parts[p[0]].comp[(p[1], q[1])]),
    )
    labels = tuple((i, parts[i].labels[a]) for (i, a) in built.labels)
    return FiniteGroupoid(built.units, built.src, built.rng, built.inv, built.comp, labels)


def subgroupoid(g: FiniteGroupoid, arrows: Iterable[int]) -> tuple[FiniteGroupoid, tuple[int, ...]]:
    """Restrict to a wide subgroupoid given by a morphism subset containing all units.

    Returns the subgroupoid (labels inherited) and the embedding ``new id -> old id``.
    """
    keep = set(arrows) | set(g.units)
    for a in keep:
        if g.inv[a] not in keep:
            raise InvalidStructure(f"subset not closed under inverse at {a}")
    kept = [a for a in g.morphisms if a in keep]
    built = FiniteGroupoid.from_labeled(
        kept, list(g.units),
        src=lambda a: g.src[a], rng=lambda a: g.rng[a], inv=lambda a: g.inv[a],
        comp=lambda a, b: g.comp[(a, b)],
    )
    embed = built.labels
    labels = tuple(g.labels[a] for a in embed)
    return FiniteGroupoid(built.units, built.src, built.rng, built.inv, built.comp, labels), tuple(embed)


# ---------------------------------------------------------------------------------
# Structural queries


def isotropy(g: FiniteGroupoid) -> tuple[FiniteGroupoid, tuple[int, ...]]:
    """``Iso(G)``; for discrete groupoids this is also its interior."""
    return subgroupoid(g, [a for a in g.morphisms if g.src[a] == g.rng[a]])


def isotropy_arrows(g: FiniteGroupoid, x: int) -> tuple[int, ...]:
    if x not in g.unit_set:
        raise InvalidStructure(f"{x} is not a unit")
    return tuple(a for a in g.arrows_from(x) if g.rng[a] == x)


def isotropy_group(g: FiniteGroupoid, x: int) -> FiniteGroup:
    """``xGx`` as a :class:`FiniteGroup`; its labels are the morphism ids."""
    arrows = isotropy_arrows(g, x)
    idx = {a: i for i, a in enumerate(arrows)}
    table = [[idx[g.comp[(a, b)]] for b in arrows] for a in arrows]
    return FiniteGroup(table, idx[x], labels=arrows)


def orbits(g: FiniteGroupoid) -> list[tuple[int, ...]]:
    """Partition of the units into orbits, each sorted, ordered by least element."""
    seen: set[int] = set()
    out = []
    for x in g.units:
        if x in seen:
            continue
        orbit = tuple(sorted({g.rng[a] for a in g.arrows_from(x)}))
        seen.update(orbit)
        out.append(orbit)
    return out


def is_principal(g: FiniteGroupoid) -> bool:
    return all(len(isotropy_arrows(g, x)) == 1 for x in g.units)


def is_bisection(g, arrows: Iterable) -> bool:
    """True iff range and source are injective on ``arrows``."""
    arrows = list(arrows)
    srcs = [g.source(a) for a in arrows]
    rngs = [g.range_(a) for a in arrows]
    return len(set(srcs)) == len(arrows) and len(set(rngs)) == len(arrows)


# ---------------------------------------------------------------------------------
# Cocycles


@dataclass(frozen=True)
class Cocycle:
    """Group-valued labelling of morphisms; ``labels[a]`` is the degree of ``a``."""

    groupoid: FiniteGroupoid
    target: GradingGroup
    labels: tuple

    def __call__(self, a: int):
        return self.labels[a]

    def __hash__(self) -> int:
        return hash((id(self.groupoid), self.target, self.labels))


def trivial_cocycle(g: FiniteGroupoid) -> Cocycle:
    t = trivial_group()
    return Cocycle(g, t, (t.identity,) * g.size)


def check_cocycle(g: FiniteGroupoid, c: Cocycle) -> ValidationReport:
    rep = ValidationReport("cocycle")
    grp = c.target
    ok_total = len(c.labels) == g.size and all(grp.contains(v) for v in c.labels)
    rep.add("labels total", ok_total)
    if not ok_total:
        return rep
    rep.add("c(h^-1)=c(h)^-1", *_first((a,) for a in g.morphisms if c(g.inv[a]) != grp.inv(c(a))))
    rep.add("c(h1h2)=c(h1)c(h2)", *_first(
        (a, b) for (a, b), ab in g.comp.items() if c(ab) != grp.mul(c(a), c(b))))
    return rep


def grading_blocks(g: FiniteGroupoid, c: Cocycle) -> dict:
    """``γ -> c^{-1}(γ)`` for every degree that occurs."""
    out: dict = {}
    for a in g.morphisms:
        out.setdefault(c(a), []).append(a)
    return {k: tuple(v) for k, v in out.items()}


def kernel(g: FiniteGroupoid, c: Cocycle) -> tuple[FiniteGroupoid, tuple[int, ...]]:
    """``c^{-1}(e)`` as a wide subgroupoid with its embedding into ``g``."""
    e = c.target.identity
    return subgroupoid(g, [a for a in g.morphisms if c(a) == e])


def identity_cocycle(g: FiniteGroupoid, group: FiniteGroup) -> Cocycle:
    """For a one-object groupoid built by :func:`from_group`: label each arrow by its group element."""
    return Cocycle(g, group, tuple(_lab(group, lab) for lab in g.labels))


def pullback_cocycle(c: Cocycle, g2: FiniteGroupoid, mapping: Sequence[int]) -> Cocycle:
    """``c ∘ κ`` for a morphism map ``κ: g2 -> c.groupoid`` given as a sequence."""
    return Cocycle(g2, c.target, tuple(c(mapping[a]) for a in g2.morphisms))
