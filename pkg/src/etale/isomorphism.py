"""Groupoid isomorphisms: verification and a structural search.

A finite groupoid is a disjoint union of connected components, and a connected
component with base unit ``x`` is determined up to isomorphism by its number of
units and the isotropy group ``xGx``.  :func:`find_iso` uses exactly this: it
pairs components with equal size and isomorphic isotropy, then assembles the
arrow map from a spanning set of connecting arrows.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from ._common import ResourceLimitError, ValidationReport
from .groupoid import FiniteGroupoid, isotropy_group, orbits
from .groups import find_group_isomorphism, order_profile

DEFAULT_UNIT_CAP = 64


@dataclass(frozen=True)
class GroupoidIso:
    """Morphism map ``source -> target``; ``map[a]`` is the image of morphism ``a``."""

    source: FiniteGroupoid
    target: FiniteGroupoid
    map: tuple[int, ...]

    def __call__(self, a: int) -> int:
        return self.map[a]

    def on_units(self) -> dict[int, int]:
        return {x: self.map[x] for x in self.source.units}

    def inverse(self) -> "GroupoidIso":
        inv = [0] * len(self.map)
        for a, b in enumerate(self.map):
            inv[b] = a
        return GroupoidIso(self.target, self.source, tuple(inv))

    def compose(self, other: "GroupoidIso") -> "GroupoidIso":
        """``self ∘ other``."""
        return GroupoidIso(other.source, self.target, tuple(self.map[b] for b in other.map))

    def __hash__(self) -> int:
        return hash(self.map)


@dataclass(frozen=True)
class NotIsomorphic:
    """Certificate that no isomorphism exists: mismatching invariant multisets."""

    reason: str
    invariants_left: tuple = field(default=())
    invariants_right: tuple = field(default=())

    def __bool__(self) -> bool:
        return False


def identity_iso(g: FiniteGroupoid) -> GroupoidIso:
    return GroupoidIso(g, g, tuple(g.morphisms))


def check_iso(phi: GroupoidIso) -> ValidationReport:
    """Verify bijectivity and compatibility with units, src, rng, inv, comp."""
    g, h, m = phi.source, phi.target, phi.map
    rep = ValidationReport("groupoid isomorphism")
    ok = len(m) == g.size and len(set(m)) == h.size == g.size and all(0 <= b < h.size for b in m)
    rep.add("bijection", ok)
    if not ok:
        return rep
    rep.add("units to units", *_first(x for x in g.units if m[x] not in h.unit_set))
    rep.add("units onto units", len(g.units) == len(h.units))
    rep.add("source", *_first(a for a in g.morphisms if m[g.src[a]] != h.src[m[a]]))
    rep.add("range", *_first(a for a in g.morphisms if m[g.rng[a]] != h.rng[m[a]]))
    rep.add("inverse", *_first(a for a in g.morphisms if m[g.inv[a]] != h.inv[m[a]]))
    rep.add("composition", *_first(
        (a, b) for (a, b), c in g.comp.items() if h.comp.get((m[a], m[b])) != m[c]))
    return rep


def _first(gen):
    w = next(iter(gen), None)
    return w is None, w


def _component_data(g: FiniteGroupoid):
    out = []
    for orbit in orbits(g):
        base = orbit[0]
        iso = isotropy_group(g, base)
        # connecting arrows t_y : base -> y (range y, source base), first in id order
        conn = {}
        for a in g.arrows_from(base):
            conn.setdefault(g.rng[a], a)
        out.append((orbit, base, iso, conn))
    return out


def _signature(comp) -> tuple:
    orbit, _, iso, _ = comp
    return (len(orbit), iso.order, order_profile(iso))


def find_iso(g: FiniteGroupoid, h: FiniteGroupoid, max_units: int = DEFAULT_UNIT_CAP) -> GroupoidIso | NotIsomorphic:
    """Search for an isomorphism ``g -> h``.

    Returns a verified :class:`GroupoidIso` or a :class:`NotIsomorphic`
    certificate.  Raises :class:`ResourceLimitError` above ``max_units`` units.
    """
    if max(len(g.units), len(h.units)) > max_units:
        raise ResourceLimitError(f"find_iso is capped at {max_units} units")
    if g.size != h.size or len(g.units) != len(h.units):
        return NotIsomorphic("sizes differ", (g.size, len(g.units)), (h.size, len(h.units)))
    cg, ch = _component_data(g), _component_data(h)
    sg = sorted(_signature(c) for c in cg)
    sh = sorted(_signature(c) for c in ch)
    if sg != sh:
        return NotIsomorphic("component invariants differ (orbit size, isotropy order, element orders)",
                             tuple(sg), tuple(sh))
    used = [False] * len(ch)
    pairing = []
    for comp in cg:
        for j, other in enumerate(ch):
            if used[j] or _signature(other) != _signature(comp):
                continue
            phi = find_group_isomorphism(comp[2], other[2])
            if phi is not None:
                used[j] = True
                pairing.append((comp, other, phi))
                break
        else:
            # Signatures agree yet no partner has an isomorphic isotropy group.
            return NotIsomorphic("isotropy groups are not isomorphic", (_signature(comp),), ())
    m = [0] * g.size
    for (orbit, base, iso, conn), (orbit2, base2, iso2, conn2), phi in pairing:
        beta = dict(zip(orbit, orbit2))
        for y in orbit:
            for a in g.arrows_to(y):
                z = g.src[a]
                # a = t_y * k * t_z^{-1} with k in the base isotropy group
                k = g.comp[(g.inv[conn[y]], g.comp[(a, conn[z])])]
                k2 = iso2.labels[phi[iso.labels.index(k)]]
                m[a] = h.comp[(h.comp[(conn2[beta[y]], k2)], h.inv[conn2[beta[z]]])]
    result = GroupoidIso(g, h, tuple(m))
    rep = check_iso(result)
    if not rep.ok:  # pragma: no cover - construction is an isomorphism by design
        raise AssertionError(str(rep))
    return result


def is_cocycle_compatible(phi: GroupoidIso, c_source, c_target) -> bool:
    """``c_target ∘ phi = c_source``."""
    return all(c_target(phi.map[a]) == c_source(a) for a in phi.source.morphisms)
