"""Finite groups given by multiplication tables, and free abelian grading groups.

Finite group elements are the integers ``0..order-1``; an optional ``labels``
tuple carries human-readable names.  Free abelian groups of rank ``k`` have
integer ``k``-tuples as elements.
"""

from __future__ import annotations

import itertools
from functools import cached_property
from typing import Hashable, Sequence

from ._common import InvalidStructure, ValidationReport


class FiniteGroup:
    """A finite group ``Γ`` with elements ``0..n-1`` and a Cayley table."""

    kind = "finite-group"

    def __init__(self, table: Sequence[Sequence[int]], identity: int = 0, labels: Sequence[Hashable] | None = None):
        self.table = tuple(tuple(int(v) for v in row) for row in table)
        self.identity = int(identity)
        n = len(self.table)
        self.labels = tuple(labels) if labels is not None else tuple(range(n))
        if len(self.labels) != n:
            raise InvalidStructure("labels length differs from table size")

    @property
    def order(self) -> int:
        return len(self.table)

    @property
    def elements(self) -> range:
        return range(self.order)

    def mul(self, a: int, b: int) -> int:
        return self.table[a][b]

    @cached_property
    def _inverses(self) -> tuple[int, ...]:
        inv = []
        for a in self.elements:
            for b in self.elements:
                if self.table[a][b] == self.identity:
                    inv.append(b)
                    break
            else:
                raise InvalidStructure(f"element {a} has no inverse")
        return tuple(inv)

    def inv(self, a: int) -> int:
        return self._inverses[a]

    def contains(self, a) -> bool:
        return isinstance(a, int) and 0 <= a < self.order

    def power(self, a: int, k: int) -> int:
        if k < 0:
            a, k = self.inv(a), -k
        out = self.identity
        for _ in range(k):
            out = self.mul(out, a)
        return out

    def element_order(self, a: int) -> int:
        k, x = 1, a
        while x != self.identity:
            x = self.mul(x, a)
            k += 1
            if k > self.order:
                raise InvalidStructure("element of infinite order in finite table")
        return k

    def is_abelian(self) -> bool:
        return all(self.table[a][b] == self.table[b][a] for a in self.elements for b in self.elements)

    def validate(self) -> ValidationReport:
        rep = ValidationReport("finite group")
        n = self.order
        closed = all(len(row) == n and all(0 <= v < n for v in row) for row in self.table)
        rep.add("closure", closed)
        if not closed:
            return rep
        e = self.identity
        bad = next((a for a in self.elements if self.table[e][a] != a or self.table[a][e] != a), None)
        rep.add("identity", 0 <= e < n and bad is None, bad)
        bad = next(
            ((a, b, c) for a in self.elements for b in self.elements for c in self.elements
             if self.table[self.table[a][b]][c] != self.table[a][self.table[b][c]]),
            None,
        )
        rep.add("associativity", bad is None, bad)
        bad = next((a for a in self.elements if e not in self.table[a]), None)
        rep.add("inverses", bad is None, bad)
        return rep

    def ensure_valid(self) -> "FiniteGroup":
        rep = self.validate()
        if not rep.ok:
            raise InvalidStructure(f"invalid group table: {rep.failures()[0].name} witness={rep.failures()[0].witness}")
        return self

    def __eq__(self, other) -> bool:
        return isinstance(other, FiniteGroup) and self.table == other.table and self.identity == other.identity

    def __hash__(self) -> int:
        return hash((self.table, self.identity))

    def __repr__(self) -> str:
        return f"FiniteGroup(order={self.order})"


class FreeAbelian:
    """The group ``Z^k``; elements are integer tuples of length ``rank``."""

    kind = "free-abelian"

    def __init__(self, rank: int):
        if rank < 0:
            raise InvalidStructure("rank must be non-negative")
        self.rank = int(rank)
        self.identity = (0,) * self.rank

    def mul(self, a, b):
        return tuple(x + y for x, y in zip(a, b))

    def inv(self, a):
        return tuple(-x for x in a)

    def contains(self, a) -> bool:
        return isinstance(a, tuple) and len(a) == self.rank and all(isinstance(x, int) for x in a)

    def __eq__(self, other) -> bool:
        return isinstance(other, FreeAbelian) and other.rank == self.rank

    def __hash__(self) -> int:
        return hash(("Z", self.rank))

    def __repr__(self) -> str:
        return f"FreeAbelian({self.rank})"


GradingGroup = FiniteGroup | FreeAbelian


def cyclic(n: int) -> FiniteGroup:
    if n < 1:
        raise InvalidStructure("cyclic group order must be positive")
    return FiniteGroup([[(a + b) % n for b in range(n)] for a in range(n)])


def trivial_group() -> FiniteGroup:
    return cyclic(1)


def direct_product(g: FiniteGroup, h: FiniteGroup) -> FiniteGroup:
    pairs = list(itertools.product(g.elements, h.elements))
    index = {p: i for i, p in enumerate(pairs)}
    table = [[index[(g.mul(a, c), h.mul(b, d))] for (c, d) in pairs] for (a, b) in pairs]
    return FiniteGroup(table, index[(g.identity, h.identity)], labels=pairs)


def klein_four() -> FiniteGroup:
    return direct_product(cyclic(2), cyclic(2))


def symmetric(n: int) -> FiniteGroup:
    perms = list(itertools.permutations(range(n)))
    index = {p: i for i, p in enumerate(perms)}
    # (p*q)(i) = q(p(i)): right actions compose left to right
    table = [[index[tuple(q[p[i]] for i in range(n))] for q in perms] for p in perms]
    return FiniteGroup(table, index[tuple(range(n))], labels=perms)


def is_homomorphism(g: FiniteGroup, h: FiniteGroup, phi: Sequence[int]) -> bool:
    return all(phi[g.mul(a, b)] == h.mul(phi[a], phi[b]) for a in g.elements for b in g.elements)


def generators(g: FiniteGroup) -> list[int]:
    """Greedy generating set, deterministic."""
    gens: list[int] = []
    span = {g.identity}
    for a in sorted(g.elements, key=lambda x: (-g.element_order(x), x)):
        if a in span:
            continue
        gens.append(a)
        span = _closure(g, gens)
        if len(span) == g.order:
            break
    return gens


def _closure(g: FiniteGroup, gens: Sequence[int]) -> set[int]:
    span = {g.identity}
    frontier = [g.identity]
    while frontier:
        nxt = []
        for x in frontier:
            for s in gens:
                y = g.mul(x, s)
                if y not in span:
                    span.add(y)
                    nxt.append(y)
        frontier = nxt
    return span


def order_profile(g: FiniteGroup) -> tuple[int, ...]:
    """Sorted multiset of element orders; an isomorphism invariant."""
    return tuple(sorted(g.element_order(a) for a in g.elements))


def find_group_isomorphism(g: FiniteGroup, h: FiniteGroup) -> tuple[int, ...] | None:
    """Backtracking search for an isomorphism ``g -> h``; ``None`` if there is none."""
    if g.order != h.order or order_profile(g) != order_profile(h):
        return None
    gens = generators(g)
    # Express every element of g as a word in the generators (BFS tree).
    words: dict[int, tuple[int, int] | None] = {g.identity: None}
    order = [g.identity]
    for x in order:
        for i, s in enumerate(gens):
            y = g.mul(x, s)
            if y not in words:
                words[y] = (x, i)
                order.append(y)
    candidates = [[b for b in h.elements if h.element_order(b) == g.element_order(s)] for s in gens]

    def extend(images: list[int]) -> tuple[int, ...] | None:
        phi = {g.identity: h.identity}
        for y in order[1:]:
            x, i = words[y]
            phi[y] = h.mul(phi[x], images[i])
        table = tuple(phi[a] for a in g.elements)
        if len(set(table)) != g.order or not is_homomorphism(g, h, table):
            return None
        return table

    def search(i: int, images: list[int]):
        if i == len(gens):
            return extend(images)
        for b in candidates[i]:
            res = search(i + 1, images + [b])
            if res is not None:
                return res
        return None

    return search(0, [])
