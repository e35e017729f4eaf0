"""Deaconu-Renault groupoids of finite partial self-maps.

For a partial map ``σ: U -> V`` on a finite set ``X`` the groupoid
``G(X, σ)`` has arrows ``(x, m - n, y)`` with ``σ^m(x) = σ^n(y)``.  It is
infinite as soon as ``σ`` has a cycle, so arrows are never enumerated in
full.  Instead, for every ordered pair ``(x, y)`` the set of admissible
displacements

    K(x, y) = {m - n : σ^m(x) = σ^n(y)}

is stored exactly.  It is empty, a single integer, or a residue class
``k0 + pℤ`` where ``p`` is the period of the cycle eventually reached by both
points.  Arrows are plain tuples ``(x, k, y)`` with range ``x`` and source
``y``; units are ``(x, 0, x)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Mapping, Sequence

from ._common import InvalidStructure, ValidationReport
from .groups import FreeAbelian, cyclic, trivial_group

INF = math.inf
Arrow = tuple[int, int, int]


class FiniteSelfMap:
    """Partial surjection ``σ: U -> V`` on ``X = {0, ..., size-1}``.

    Parameters
    ----------
    size : int
        Number of points.
    mapping : sequence or mapping
        ``mapping[x]`` is ``σ(x)``, or ``None`` when ``x`` is outside ``U``.
    codomain : iterable of int, optional
        The set ``V``.  Defaults to the image ``σ(U)``; if given it must equal
        the image, since ``σ`` is required to be onto ``V``.
    """

    def __init__(self, size: int, mapping, codomain: Iterable[int] | None = None):
        if size < 0:
            raise InvalidStructure("size must be non-negative")
        self.size = int(size)
        if isinstance(mapping, Mapping):
            table = [mapping.get(x) for x in range(self.size)]
        else:
            table = list(mapping)
        if len(table) != self.size:
            raise InvalidStructure("map table length differs from size")
        for x, y in enumerate(table):
            if y is not None and not (isinstance(y, int) and 0 <= y < self.size):
                raise InvalidStructure(f"sigma({x}) = {y!r} is not a point")
        self.table: tuple[int | None, ...] = tuple(table)
        self.domain = frozenset(x for x, y in enumerate(table) if y is not None)
        image = frozenset(y for y in table if y is not None)
        if codomain is not None:
            cod = frozenset(codomain)
            if cod != image:
                raise InvalidStructure(f"sigma is not onto the codomain; missing {sorted(cod - image)}")
        self.codomain = image

    @property
    def points(self) -> range:
        return range(self.size)

    def __call__(self, x: int) -> int:
        y = self.table[x]
        if y is None:
            raise InvalidStructure(f"{x} is outside the domain")
        return y

    @property
    def is_total(self) -> bool:
        return len(self.domain) == self.size

    @property
    def is_surjective(self) -> bool:
        return len(self.codomain) == self.size

    @property
    def is_bijection(self) -> bool:
        return self.is_total and self.is_surjective

    def iterate(self, x: int, n: int) -> int | None:
        """``σ^n(x)``, or ``None`` if ``x`` is not in ``U_n``."""
        for _ in range(n):
            x = self.table[x]
            if x is None:
                return None
        return x

    @cached_property
    def orbit_data(self) -> tuple[tuple[tuple[int, ...], int, int], ...]:
        """Per point: ``(forward orbit prefix, tail length, period)``.

        The prefix lists ``x, σx, ...`` up to termination or the first
        repetition.  ``period`` is 0 for points whose orbit leaves ``U``.
        """
        out = []
        for x in self.points:
            seen: dict[int, int] = {}
            path = []
            z: int | None = x
            while z is not None and z not in seen:
                seen[z] = len(path)
                path.append(z)
                z = self.table[z]
            if z is None:
                out.append((tuple(path), len(path), 0))
            else:
                out.append((tuple(path), seen[z], len(path) - seen[z]))
        return tuple(out)

    def period(self, x: int) -> int:
        return self.orbit_data[x][2]

    def cycles(self) -> list[tuple[int, ...]]:
        """Cycles of ``σ``, each starting at its least point, sorted."""
        found = set()
        out = []
        for x in self.points:
            path, tail, p = self.orbit_data[x]
            if p and x == path[tail] and x not in found:
                cyc = path[tail:]
                found.update(cyc)
                i = cyc.index(min(cyc))
                out.append(cyc[i:] + cyc[:i])
        return sorted(out)

    def restrict(self, points: Iterable[int]) -> tuple["FiniteSelfMap", tuple[int, ...]]:
        """Restriction to an invariant subset, relabelled ``0..k-1``; returns the map and the embedding."""
        pts = tuple(sorted(set(points)))
        idx = {x: i for i, x in enumerate(pts)}
        table = []
        for x in pts:
            y = self.table[x]
            if y is not None and y not in idx:
                raise InvalidStructure(f"subset is not invariant: sigma({x}) = {y}")
            table.append(None if y is None else idx[y])
        return FiniteSelfMap(len(pts), table), pts

    def __eq__(self, other) -> bool:
        return isinstance(other, FiniteSelfMap) and self.table == other.table

    def __hash__(self) -> int:
        return hash(self.table)

    def __repr__(self) -> str:
        return f"FiniteSelfMap({self.size}, {list(self.table)})"


def permutation_map(perm: Sequence[int]) -> FiniteSelfMap:
    return FiniteSelfMap(len(perm), list(perm))


def cycle_map(n: int) -> FiniteSelfMap:
    """The ``n``-cycle ``x -> x+1 mod n``."""
    return FiniteSelfMap(n, [(x + 1) % n for x in range(n)])


def disjoint_union_maps(maps: Sequence[FiniteSelfMap]) -> FiniteSelfMap:
    table: list[int | None] = []
    offset = 0
    for s in maps:
        table.extend(None if y is None else y + offset for y in s.table)
        offset += s.size
    return FiniteSelfMap(offset, table)


@dataclass(frozen=True)
class IterateTower:
    """Domains ``U_n``, ranges ``V_n`` and maps ``σ^n`` for ``n = 0..stable``.

    Both domain sequences decrease, so they are constant from ``stable`` on;
    ``sigma_n`` beyond that index is obtained by iterating.
    """

    base: FiniteSelfMap
    U: tuple[frozenset[int], ...]
    V: tuple[frozenset[int], ...]
    maps: tuple[dict[int, int], ...]

    @property
    def stable(self) -> int:
        return len(self.U) - 1

    def domain(self, n: int) -> frozenset[int]:
        return self.U[min(n, self.stable)]

    def range_(self, n: int) -> frozenset[int]:
        return self.V[min(n, self.stable)]


def iterate_tower(s: FiniteSelfMap) -> IterateTower:
    X = frozenset(s.points)
    U, V = [X], [X]
    maps = [{x: x for x in X}]
    while True:
        prev_u, prev_v = U[-1], V[-1]
        nu = frozenset(x for x in s.domain if s.table[x] in prev_u)
        nv = frozenset(s.table[x] for x in prev_v & s.domain)
        if nu == prev_u and nv == prev_v:
            break
        U.append(nu)
        V.append(nv)
        maps.append({x: maps[-1][s.table[x]] for x in nu})
    return IterateTower(s, tuple(U), tuple(V), tuple(maps))


@dataclass(frozen=True)
class KSet:
    """The set ``k0 + pℤ`` (``p > 0``) or the singleton ``{k0}`` (``p == 0``)."""

    k0: int
    p: int

    def __contains__(self, k: int) -> bool:
        if self.p == 0:
            return k == self.k0
        return (k - self.k0) % self.p == 0

    def window(self, w: int) -> list[int]:
        """Elements with ``|k| <= w``, increasing."""
        if self.p == 0:
            return [self.k0] if abs(self.k0) <= w else []
        start = -w + ((self.k0 + w) % self.p)
        return list(range(start, w + 1, self.p))

    def least_abs(self) -> int:
        """Representative of least absolute value (ties to the non-negative one)."""
        if self.p == 0:
            return self.k0
        r = self.k0 % self.p
        return r if r <= self.p - r else r - self.p

    def neg(self) -> "KSet":
        return _kset(-self.k0, self.p)

    def to_dict(self) -> dict:
        return {"k0": self.k0, "p": self.p}


def _kset(k0: int, p: int) -> KSet:
    return KSet(k0 % p if p else k0, p)


class DRGroupoid:
    """``G(X, σ)`` presented by its displacement sets ``K(x, y)``."""

    is_finite = False

    def __init__(self, base: FiniteSelfMap):
        self.base = base
        n = base.size
        data = base.orbit_data
        ks: dict[tuple[int, int], KSet] = {}
        for x in range(n):
            px, tx, perx = data[x]
            pos_x = {z: i for i, z in enumerate(px)}
            for y in range(n):
                py_, ty, pery = data[y]
                common = next(((pos_x[z], j) for j, z in enumerate(py_) if z in pos_x), None)
                if common is None:
                    continue
                i, j = common
                ks[(x, y)] = _kset(i - j, perx)
        self._k = ks

    @property
    def points(self) -> range:
        return self.base.points

    @property
    def units(self) -> tuple[Arrow, ...]:
        return tuple((x, 0, x) for x in self.points)

    def kset(self, x: int, y: int) -> KSet | None:
        return self._k.get((x, y))

    @property
    def pairs(self) -> list[tuple[int, int]]:
        return sorted(self._k)

    def unit_arrow(self, x: int) -> Arrow:
        return (x, 0, x)

    def is_unit(self, a: Arrow) -> bool:
        return a[1] == 0 and a[0] == a[2]

    def is_arrow(self, a) -> bool:
        if not (isinstance(a, tuple) and len(a) == 3):
            return False
        ks = self._k.get((a[0], a[2]))
        return ks is not None and a[1] in ks

    def source(self, a: Arrow) -> int:
        return a[2]

    def range_(self, a: Arrow) -> int:
        return a[0]

    def inverse(self, a: Arrow) -> Arrow:
        return (a[2], -a[1], a[0])

    def composable(self, a: Arrow, b: Arrow) -> bool:
        return a[2] == b[0]

    def compose(self, a: Arrow, b: Arrow) -> Arrow:
        if a[2] != b[0]:
            raise InvalidStructure(f"arrows {a}, {b} are not composable")
        return (a[0], a[1] + b[1], b[2])

    def arrows_window(self, w: int) -> list[Arrow]:
        """All arrows with ``|k| <= w`` in canonical order."""
        return [(x, k, y) for (x, y) in self.pairs for k in self._k[(x, y)].window(w)]

    def arrows_from(self, x: int, w: int) -> list[Arrow]:
        return [a for a in self.arrows_window(w) if a[2] == x]

    def isotropy_period(self, x: int) -> int:
        return self._k[(x, x)].p

    @property
    def max_period(self) -> int:
        return max((self.base.period(x) for x in self.points), default=0)

    @property
    def default_window(self) -> int:
        """Window covering every ``least_abs`` representative plus one full period."""
        reps = [abs(ks.least_abs()) for ks in self._k.values()]
        return max(reps, default=0) + max(self.max_period, 1)

    def orbits(self) -> list[tuple[int, ...]]:
        seen: set[int] = set()
        out = []
        for x in self.points:
            if x in seen:
                continue
            orb = tuple(sorted(y for y in self.points if (y, x) in self._k))
            seen.update(orb)
            out.append(orb)
        return out

    def validate(self, window: int | None = None) -> ValidationReport:
        """K-set coherence plus the axioms on all arrows in a window."""
        rep = ValidationReport("DR groupoid")
        pts = list(self.points)
        rep.add("units present", *_first((x,) for x in pts if (x, x) not in self._k or 0 not in self._k[(x, x)]))
        rep.add("K(x,y) = -K(y,x)", *_first(
            (x, y) for (x, y), ks in self._k.items() if self._k.get((y, x)) != ks.neg()))

        def add_closed():
            for (x, y), k1 in self._k.items():
                for z in pts:
                    k2 = self._k.get((y, z))
                    if k2 is None:
                        continue
                    k3 = self._k.get((x, z))
                    if k3 is None or (k1.k0 + k2.k0) not in k3 or (k1.p and k1.p != k3.p):
                        yield (x, y, z)

        rep.add("K(x,y)+K(y,z) in K(x,z)", *_first(add_closed()))
        w = self.default_window if window is None else window
        arrows = self.arrows_window(w)
        rep.add("windowed membership", *_first(a for a in arrows if not self._membership_oracle(a)))
        return rep

    def _membership_oracle(self, a: Arrow) -> bool:
        """Direct search for ``m, n`` with ``m - n = k`` and ``σ^m x = σ^n y``."""
        x, k, y = a
        bound = self.base.size + abs(k) + 1
        for n in range(bound + self.max_period + 1):
            m = n + k
            if m < 0:
                continue
            u, v = self.base.iterate(x, m), self.base.iterate(y, n)
            if u is not None and u == v:
                return True
        return False

    def __repr__(self) -> str:
        return f"DRGroupoid({self.base!r})"


def _first(gen):
    w = next(iter(gen), None)
    return w is None, w


def build_dr(s: FiniteSelfMap) -> DRGroupoid:
    return DRGroupoid(s)


def stab(g: DRGroupoid, x: int) -> KSet:
    """``Stab(x)`` as the subgroup ``pℤ`` (``p == 0`` meaning ``{0}``)."""
    return g.kset(x, x)


def stab_ess(g: DRGroupoid, x: int) -> KSet:
    """Essential stabiliser; on a discrete space ``{x}`` is open, so it equals ``Stab(x)``."""
    return stab(g, x)


def stab_min(g: DRGroupoid, x: int) -> float | int:
    """Least positive element of ``Stab(x)``, or ``inf`` when there is none."""
    p = stab(g, x).p
    return p if p > 0 else INF


def stab_ess_min(g: DRGroupoid, x: int) -> float | int:
    p = stab_ess(g, x).p
    return p if p > 0 else INF


@dataclass(frozen=True)
class DRCocycle:
    """A cocycle ``(x, k, y) -> value(k)`` on a DR groupoid."""

    groupoid: DRGroupoid
    target: object
    kind: str
    modulus: int = 0

    def __call__(self, a: Arrow):
        k = a[1]
        if self.kind == "cX":
            return (k,)
        if self.kind == "trivial":
            return 0
        return k % self.modulus

    def to_dict(self) -> dict:
        out = {"kind": self.kind}
        if self.kind == "mod":
            out["modulus"] = self.modulus
        return out


def cocycle_cX(g: DRGroupoid) -> DRCocycle:
    """``c_X(x, k, y) = k`` with values in ``ℤ`` (rank-1 vectors)."""
    return DRCocycle(g, FreeAbelian(1), "cX")


def trivial_dr_cocycle(g: DRGroupoid) -> DRCocycle:
    return DRCocycle(g, trivial_group(), "trivial")


def mod_cocycle(g: DRGroupoid, m: int) -> DRCocycle:
    """``k mod m`` into ``ℤ/m``."""
    if m < 1:
        raise InvalidStructure("modulus must be positive")
    return DRCocycle(g, cyclic(m), "mod", m)


def check_dr_cocycle(g: DRGroupoid, c: DRCocycle, window: int | None = None) -> ValidationReport:
    rep = ValidationReport("DR cocycle")
    w = g.default_window if window is None else window
    arrows = g.arrows_window(w)
    grp = c.target
    rep.add("unit degree", *_first(u for u in g.units if c(u) != grp.identity))
    rep.add("c(h^-1)=c(h)^-1", *_first(a for a in arrows if c(g.inverse(a)) != grp.inv(c(a))))
    by_src: dict[int, list] = {}
    for b in arrows:
        by_src.setdefault(b[0], []).append(b)
    rep.add("c(h1h2)=c(h1)c(h2)", *_first(
        (a, b) for a in arrows for b in by_src.get(a[2], [])
        if c(g.compose(a, b)) != grp.mul(c(a), c(b))))
    return rep


def kernel_isotropy_period(g: DRGroupoid, c: DRCocycle, x: int) -> int:
    """Period ``q`` with ``Iso(c^{-1}(e))`` at ``x`` equal to ``qℤ`` (0 when trivial)."""
    p = g.isotropy_period(x)
    if p == 0 or c.kind == "cX":
        return 0
    if c.kind == "trivial":
        return p
    return p * c.modulus // math.gcd(p, c.modulus)


# ---------------------------------------------------------------------------------
# Isomorphisms between DR groupoids


@dataclass(frozen=True)
class DRIso:
    """``Θ(x, k, y) = (h x, offset + step * (k - k0) / p, h y)`` on each ``K(x, y)``.

    ``affine[(x, y)] = (offset, step)`` where ``offset`` is the image
    displacement of ``k0 = K(x, y).k0`` and ``step`` the image of one period.
    Any isomorphism of DR groupoids has this form, since it restricts to a group
    isomorphism ``pℤ -> p'ℤ`` on isotropy and to a translate of it on ``K(x, y)``.
    """

    source: DRGroupoid
    target: DRGroupoid
    h: tuple[int, ...]
    affine: Mapping[tuple[int, int], tuple[int, int]]

    def __call__(self, a: Arrow) -> Arrow:
        x, k, y = a
        ks = self.source.kset(x, y)
        if ks is None or k not in ks:
            raise InvalidStructure(f"{a} is not an arrow")
        off, step = self.affine[(x, y)]
        j = 0 if ks.p == 0 else (k - ks.k0) // ks.p
        return (self.h[x], off + step * j, self.h[y])

    def __hash__(self) -> int:
        return hash((self.h, tuple(sorted(self.affine.items()))))

    def to_dict(self) -> dict:
        return {"h": list(self.h),
                "affine": [[x, y, o, s] for (x, y), (o, s) in sorted(self.affine.items())]}


def dr_iso_from_function(source: DRGroupoid, target: DRGroupoid, h: Sequence[int], theta_k) -> DRIso:
    """Build a :class:`DRIso` from a displacement function ``theta_k(x, k, y)``.

    ``theta_k`` is sampled at ``k0`` and ``k0 + p``; :func:`check_dr_iso` then
    confirms it is affine and an isomorphism.
    """
    aff = {}
    for (x, y) in source.pairs:
        ks = source.kset(x, y)
        off = theta_k(x, ks.k0, y)
        step = theta_k(x, ks.k0 + ks.p, y) - off if ks.p else 0
        aff[(x, y)] = (off, step)
    return DRIso(source, target, tuple(h), aff)


def identity_dr_iso(g: DRGroupoid) -> DRIso:
    return dr_iso_from_function(g, g, tuple(g.points), lambda x, k, y: k)


def flip_dr_iso(g: DRGroupoid, target: DRGroupoid, h: Sequence[int]) -> DRIso:
    """``(x, k, y) -> (h x, -k, h y)``."""
    return dr_iso_from_function(g, target, h, lambda x, k, y: -k)


def check_dr_iso(theta: DRIso, window: int | None = None) -> ValidationReport:
    """Exact verification on the affine data, plus a windowed arrow-level check."""
    g, t, h = theta.source, theta.target, theta.h
    rep = ValidationReport("DR groupoid isomorphism")
    ok = len(h) == g.base.size == t.base.size and sorted(h) == list(t.points)
    rep.add("unit bijection", ok)
    if not ok:
        return rep
    rep.add("affine data total", set(theta.affine) == set(g.pairs))
    if not rep.ok:
        return rep
    rep.add("pair support", sorted((h[x], h[y]) for (x, y) in g.pairs) == t.pairs)

    def image_ok():
        for (x, y) in g.pairs:
            ks, kt = g.kset(x, y), t.kset(h[x], h[y])
            off, step = theta.affine[(x, y)]
            if kt is None or ks.p == 0 and (kt.p != 0 or off != kt.k0 or step != 0):
                yield (x, y)
            elif ks.p and (abs(step) != kt.p or off not in kt):
                yield (x, y)

    rep.add("bijective on each K(x,y)", *_first(image_ok()))
    rep.add("units", *_first((x,) for x in g.points if theta((x, 0, x)) != (h[x], 0, h[x])))

    def comp_ok():
        for (x, y) in g.pairs:
            for z in g.points:
                if (y, z) not in g._k:
                    continue
                k1, k2 = g.kset(x, y), g.kset(y, z)
                for a, b in ((k1.k0, k2.k0), (k1.k0 + k1.p, k2.k0), (k1.k0, k2.k0 + k2.p)):
                    if theta((x, a + b, z))[1] != theta((x, a, y))[1] + theta((y, b, z))[1]:
                        yield ((x, a, y), (y, b, z))
                        break

    rep.add("composition", *_first(comp_ok()))
    rep.add("inverse", *_first(
        (x, y) for (x, y) in g.pairs
        if theta(g.inverse((x, g.kset(x, y).k0, y))) != t.inverse(theta((x, g.kset(x, y).k0, y)))))
    w = max(g.default_window, t.default_window) if window is None else window
    arrows = g.arrows_window(w)
    rep.add("windowed injectivity", len({theta(a) for a in arrows}) == len(arrows))
    rep.add("windowed arrows map to arrows", *_first(a for a in arrows if not t.is_arrow(theta(a))))
    return rep


def dr_iso_cocycle_compatible(theta: DRIso, c_source: DRCocycle, c_target: DRCocycle, window: int | None = None) -> bool:
    """``c_target ∘ Θ = c_source`` on a window (exact for affine data)."""
    g = theta.source
    w = g.default_window if window is None else window
    return all(c_target(theta(a)) == c_source(a) for a in g.arrows_window(w))


def dr_inverse(theta: DRIso) -> DRIso:
    """``Θ^{-1}`` in affine form."""
    g, t = theta.source, theta.target
    hinv = [0] * len(theta.h)
    for x, y in enumerate(theta.h):
        hinv[y] = x
    aff = {}
    for (x, y), (off, step) in theta.affine.items():
        ks = g.kset(x, y)
        kt = t.kset(theta.h[x], theta.h[y])
        if ks.p == 0:
            aff[(theta.h[x], theta.h[y])] = (ks.k0, 0)
            continue
        j0 = (kt.k0 - off) // step
        sign = 1 if step > 0 else -1
        aff[(theta.h[x], theta.h[y])] = (ks.k0 + j0 * ks.p, sign * ks.p)
    return DRIso(t, g, tuple(hinv), aff)


def compose_dr(outer: DRIso, inner: DRIso) -> DRIso:
    """``outer ∘ inner``."""
    g = inner.source
    h = tuple(outer.h[y] for y in inner.h)
    return dr_iso_from_function(g, outer.target, h, lambda x, k, y: outer(inner((x, k, y)))[1])
