"""Equivalences of finite dynamical systems and their groupoid counterparts.

The systems are finite partial self-maps (:class:`~etale.dr.FiniteSelfMap`)
and finite group actions.  Every check is exact: displacement sets of
Deaconu-Renault groupoids are arithmetic progressions, so an isomorphism is
determined by affine data on each ``K(x, y)`` and all identities reduce to
finitely many integer comparisons.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

from ._common import CertificateError, InvalidStructure, ValidationReport
from .algebra import AlgebraElement
from .dr import (INF, DRGroupoid, DRIso, FiniteSelfMap, build_dr, check_dr_iso, dr_inverse, dr_iso_from_function,
                 stab_ess_min, stab_min)
from .groupoid import from_set, product_with_R, transformation_groupoid, validate
from .groups import FiniteGroup
from .isomorphism import GroupoidIso, check_iso


def _first(gen):
    w = next(iter(gen), None)
    return w is None, w


# ---------------------------------------------------------------------------------
# Continuous orbit equivalence of local homeomorphisms


@dataclass(frozen=True)
class LocalCOECert:
    """``(h, l, k, l', k')``: ``h`` as a point table, the others as tables on the domains."""

    h: tuple[int, ...]
    l: Mapping[int, int]
    k: Mapping[int, int]
    l_inv: Mapping[int, int]
    k_inv: Mapping[int, int]

    def to_dict(self) -> dict:
        def tab(m):
            return [[x, m[x]] for x in sorted(m)]
        return {"h": list(self.h), "l": tab(self.l), "k": tab(self.k),
                "l_inv": tab(self.l_inv), "k_inv": tab(self.k_inv)}


def _inverse_table(h: Sequence[int]) -> list[int]:
    inv = [0] * len(h)
    for x, y in enumerate(h):
        inv[y] = x
    return inv


def _check_cert_shape(SX: FiniteSelfMap, SY: FiniteSelfMap, cert: LocalCOECert) -> None:
    h = list(cert.h)
    if len(h) != SX.size or sorted(h) != list(range(SY.size)):
        raise CertificateError("h must be a bijection X -> Y")
    for name, tab, S in (("l", cert.l, SX), ("k", cert.k, SX), ("l_inv", cert.l_inv, SY), ("k_inv", cert.k_inv, SY)):
        missing = sorted(S.domain - set(tab))
        if missing:
            raise CertificateError(f"{name} has no value at {missing[0]}")
        bad = next((x for x in S.domain if not isinstance(tab[x], int) or tab[x] < 0), None)
        if bad is not None:
            raise CertificateError(f"{name}({bad}) must be a non-negative integer")


def _intertwines(S: FiniteSelfMap, T: FiniteSelfMap, h: Sequence[int], l, k):
    """Points ``x ∈ U_S`` with ``T^{l(x)}(h x) != T^{k(x)}(h S x)`` (undefined counts as unequal)."""
    for x in sorted(S.domain):
        a = T.iterate(h[x], l[x])
        b = T.iterate(h[S(x)], k[x])
        if a is None or a != b:
            yield x


def _stabiliser_sums(S: FiniteSelfMap, T: FiniteSelfMap, h, l, k, minimum: Callable):
    """Finiteness equivalence and ``|Σ_{n<p} (l - k)(S^n x)| = p(h x)`` at periodic points."""
    gS, gT = build_dr(S), build_dr(T)
    for x in S.points:
        px, py = minimum(gS, x), minimum(gT, h[x])
        if (px < INF) != (py < INF):
            yield (x, "finiteness", px, py)
            continue
        if px == INF or S.iterate(x, px) != x:
            continue
        total = 0
        z = x
        for _ in range(px):
            total += l[z] - k[z]
            z = S(z)
        if abs(total) != py:
            yield (x, "sum", abs(total), py)


def check_local_coe(SX: FiniteSelfMap, SY: FiniteSelfMap, cert: LocalCOECert, mode: str = "plain") -> ValidationReport:
    """Verify a continuous orbit equivalence between finite partial self-maps.

    ``mode`` is ``"plain"``, ``"stabiliser"`` or ``"essential"``; the last two
    add the stabiliser-preservation conditions (for the minimal, resp. minimal
    essential, stabiliser).
    """
    if mode not in ("plain", "stabiliser", "essential"):
        raise InvalidStructure(f"unknown mode {mode!r}")
    _check_cert_shape(SX, SY, cert)
    h, hinv = list(cert.h), _inverse_table(cert.h)
    rep = ValidationReport(f"local continuous orbit equivalence ({mode})")
    rep.add("tau^l(h x) = tau^k(h sigma x)", *_first(_intertwines(SX, SY, h, cert.l, cert.k)))
    rep.add("sigma^l'(h^-1 y) = sigma^k'(h^-1 tau y)", *_first(_intertwines(SY, SX, hinv, cert.l_inv, cert.k_inv)))
    if mode != "plain":
        minimum = stab_min if mode == "stabiliser" else stab_ess_min
        rep.add("stabilisers preserved on X", *_first(_stabiliser_sums(SX, SY, h, cert.l, cert.k, minimum)))
        rep.add("stabilisers preserved on Y", *_first(_stabiliser_sums(SY, SX, hinv, cert.l_inv, cert.k_inv, minimum)))
    return rep


def check_eventual_conjugacy_local(SX: FiniteSelfMap, SY: FiniteSelfMap, cert: LocalCOECert) -> ValidationReport:
    """Stabiliser-preserving COE with ``l = k + 1`` on both sides."""
    rep = ValidationReport("local eventual conjugacy")
    rep.extend(check_local_coe(SX, SY, cert, "stabiliser"))
    rep.add("l = k + 1 on X", *_first(x for x in sorted(SX.domain) if cert.l[x] != cert.k[x] + 1))
    rep.add("l' = k' + 1 on Y", *_first(y for y in sorted(SY.domain) if cert.l_inv[y] != cert.k_inv[y] + 1))
    return rep


def conjugacy_cert(SX: FiniteSelfMap, SY: FiniteSelfMap, h: Sequence[int], lag: int = 0) -> LocalCOECert:
    """``l ≡ lag + 1``, ``k ≡ lag``: a conjugacy (``lag = 0``) or lagged eventual conjugacy candidate."""
    return LocalCOECert(tuple(h), {x: lag + 1 for x in SX.domain}, {x: lag for x in SX.domain},
                        {y: lag + 1 for y in SY.domain}, {y: lag for y in SY.domain})


def _representation(S: FiniteSelfMap, x: int, k: int, y: int) -> tuple[int, int]:
    """Some ``(m, n)`` with ``m - n = k`` and ``S^m x = S^n y``."""
    bound = 2 * S.size + abs(k) + 2
    for n in range(bound):
        m = n + k
        if m < 0:
            continue
        u, v = S.iterate(x, m), S.iterate(y, n)
        if u is not None and u == v:
            return m, n
    raise InvalidStructure(f"{(x, k, y)} is not an arrow")


def _displacement(S: FiniteSelfMap, l, k, x: int, m: int) -> int:
    total, z = 0, x
    for _ in range(m):
        total += l[z] - k[z]
        z = S(z)
    return total


def groupoid_iso_from_coe(SX: FiniteSelfMap, SY: FiniteSelfMap, cert: LocalCOECert,
                          report: ValidationReport | None = None) -> DRIso:
    """``Θ(x, m - n, y) = (h x, D_m(x) - D_n(y), h y)`` with ``D_m(x) = Σ_{i<m} (l - k)(σ^i x)``.

    The value does not depend on the representation ``(m, n)``: moving to
    ``(m + 1, n + 1)`` adds ``(l - k)(σ^m x) - (l - k)(σ^n y) = 0``.  Raises
    :class:`CertificateError` when the certificate fails the stabiliser-mode
    check or the result is not an isomorphism.
    """
    rep = report if report is not None else ValidationReport("groupoid isomorphism from COE")
    cert_rep = check_local_coe(SX, SY, cert, "stabiliser")
    rep.extend(cert_rep, "certificate: ")
    if not cert_rep.ok:
        raise CertificateError(f"certificate fails: {cert_rep.failures()[0].name}")
    gX, gY = build_dr(SX), build_dr(SY)

    def theta_k(x, kk, y):
        m, n = _representation(SX, x, kk, y)
        return _displacement(SX, cert.l, cert.k, x, m) - _displacement(SX, cert.l, cert.k, y, n)

    theta = dr_iso_from_function(gX, gY, cert.h, theta_k)
    iso_rep = check_dr_iso(theta)
    rep.extend(iso_rep)
    w = max(gX.default_window, gY.default_window)
    rep.add("affine on a window", *_first(a for a in gX.arrows_window(w) if theta(a)[1] != theta_k(*a)))
    rep.add("restriction to units is h", *_first(x for x in SX.points if theta((x, 0, x)) != (cert.h[x], 0, cert.h[x])))
    if all(cert.l[x] == cert.k[x] + 1 for x in SX.domain):
        rep.add("c_X = c_Y o Theta", *_first(a for a in gX.arrows_window(w) if theta(a)[1] != a[1]))
    if not rep.ok:
        raise CertificateError(f"induced map is not an isomorphism: {rep.failures()[0].name}")
    return theta


def _minimal_lk(T: FiniteSelfMap, u: int, d: int, v: int) -> tuple[int, int]:
    """Least ``(l, k)`` with ``l - k = d`` and ``T^l u = T^k v``."""
    m, n = _representation(T, u, d, v)
    while m > 0 and n > 0 and T.iterate(u, m - 1) == T.iterate(v, n - 1):
        m, n = m - 1, n - 1
    return m, n


def coe_from_groupoid_iso(theta: DRIso) -> LocalCOECert:
    """Read ``(l, k, l', k')`` off ``Θ`` on the generators ``(x, 1, σ x)``."""
    gX, gY = theta.source, theta.target
    SX, SY = gX.base, gY.base
    inv = dr_inverse(theta)
    l, k, li, ki = {}, {}, {}, {}
    for x in sorted(SX.domain):
        a, d, b = theta((x, 1, SX(x)))
        l[x], k[x] = _minimal_lk(SY, a, d, b)
    for y in sorted(SY.domain):
        a, d, b = inv((y, 1, SY(y)))
        li[y], ki[y] = _minimal_lk(SX, a, d, b)
    return LocalCOECert(tuple(theta.h), l, k, li, ki)


# ---------------------------------------------------------------------------------
# T-maps


def _require_total_surjective(S: FiniteSelfMap) -> None:
    if not S.is_total or not S.is_surjective:
        raise InvalidStructure("sigma must be total and surjective")


def T_map(g: DRGroupoid) -> Callable:
    """``T(x, k, y) = (σ x, k, σ y)``."""
    _require_total_surjective(g.base)
    s = g.base

    def T(a):
        if not g.is_arrow(a):
            raise InvalidStructure(f"{a} is not an arrow")
        x, k, y = a
        return (s(x), k, s(y))

    return T


def phi_T(f: AlgebraElement) -> AlgebraElement:
    """``φ_T(f)(η) = f(T η)``; the support is the finite preimage ``T^{-1}(supp f)``."""
    g = f.groupoid
    T_map(g)
    s = g.base
    pre: dict[int, list[int]] = {}
    for x in s.points:
        pre.setdefault(s(x), []).append(x)
    out = {}
    for (u, k, v), c in f.coeffs.items():
        for x in pre.get(u, []):
            for y in pre.get(v, []):
                if g.is_arrow((x, k, y)):
                    out[(x, k, y)] = c
    return AlgebraElement(g, out)


def check_T_conjugacy(SX: FiniteSelfMap, SY: FiniteSelfMap, h: Sequence[int]) -> ValidationReport:
    """Three conditions that agree for a bijection ``h``.

    (a) ``h σ = τ h``; (b) ``Θ(x, k, y) = (h x, k, h y)`` maps arrows to
    arrows and intertwines the T-maps; (c) the induced map ``δ_η -> δ_{Θ η}``
    intertwines ``φ_T``.  (b) and (c) are tested on a window of arrows.
    """
    _require_total_surjective(SX)
    _require_total_surjective(SY)
    h = list(h)
    if len(h) != SX.size or sorted(h) != list(range(SY.size)):
        raise InvalidStructure("h must be a bijection")
    gX, gY = build_dr(SX), build_dr(SY)
    TX, TY = T_map(gX), T_map(gY)
    w = max(gX.default_window, gY.default_window)
    arrows = gX.arrows_window(w)
    rep = ValidationReport("T-map conjugacy")
    ok_a = rep.add("h is a conjugacy", *_first(x for x in SX.points if h[SX(x)] != SY(h[x])))

    def Theta(a):
        return (h[a[0]], a[1], h[a[2]])

    bad_b = next((a for a in arrows if not gY.is_arrow(Theta(a)) or Theta(TX(a)) != TY(Theta(a))), None)
    ok_b = rep.add("Theta intertwines T", bad_b is None, bad_b)

    def push(f: AlgebraElement):
        coeffs = {}
        for a, c in f.coeffs.items():
            b = Theta(a)
            if not gY.is_arrow(b):
                return None
            coeffs[b] = c
        return AlgebraElement(gY, coeffs)

    def bad_c():
        for a in arrows:
            f = AlgebraElement(gX, {a: 1.0})
            lhs = push(phi_T(f))
            pf = push(f)
            if lhs is None or pf is None or not phi_T(pf).close_to(lhs):
                yield a

    ok_c = rep.add("algebra map intertwines phi_T", *_first(bad_c()))
    rep.add("conditions agree", ok_a == ok_b == ok_c)
    return rep


# ---------------------------------------------------------------------------------
# Stabilisation


def stabilize(S: FiniteSelfMap, N: int) -> tuple[FiniteSelfMap, list[tuple[int, int]]]:
    """``σ̃`` on ``X × {0..N}``: ``σ̃(x, 0) = (σ x, 0)``, ``σ̃(x, i+1) = (x, i)``.

    Returns the map on the encoded points ``index = i * |X| + x`` and the list
    of pairs ``(x, i)`` in that order.
    """
    if N < 0:
        raise InvalidStructure("N must be non-negative")
    n = S.size
    pts = [(x, i) for i in range(N + 1) for x in range(n)]
    table = []
    for x, i in pts:
        if i == 0:
            table.append(None if S.table[x] is None else S.table[x])
        else:
            table.append((i - 1) * n + x)
    return FiniteSelfMap(len(pts), table), pts


def check_stabilization_iso(S: FiniteSelfMap, N: int) -> ValidationReport:
    """``((x,m), p, (y,n)) -> ((x, p-m+n, y), (m, n))`` is an isomorphism ``G(X̃, σ̃) -> G(X, σ) × R``.

    Exact on displacement sets: ``K̃((x,m),(y,n)) = K(x,y) + m - n``.  Every
    arrow of the truncated stabilisation has its levels inside ``{0..N}``, so
    no arrow is excluded; the count is reported.  The canonical cocycles agree
    up to the coboundary ``m - n``.
    """
    St, pts = stabilize(S, N)
    gt, g = build_dr(St), build_dr(S)
    idx = {p: i for i, p in enumerate(pts)}
    rep = ValidationReport(f"stabilisation iso (N={N})")
    rep.extend(gt.validate(), "stabilisation: ")

    def bad_pairs():
        for (x, m) in pts:
            for (y, k) in pts:
                kt = gt.kset(idx[(x, m)], idx[(y, k)])
                ks = g.kset(x, y)
                if (kt is None) != (ks is None):
                    yield ((x, m), (y, k))
                elif kt is not None and (kt.p != ks.p or (kt.k0 - m + k) not in ks):
                    yield ((x, m), (y, k))

    rep.add("K~((x,m),(y,n)) = K(x,y) + m - n", *_first(bad_pairs()))
    w = gt.default_window

    def Phi(a):
        (x, m), (y, k) = pts[a[0]], pts[a[2]]
        return ((x, a[1] - m + k, y), (m, k))

    arrows = gt.arrows_window(w)
    rep.add("images are arrows", *_first(a for a in arrows if not g.is_arrow(Phi(a)[0])))
    rep.add("injective on the window", len({Phi(a) for a in arrows}) == len(arrows))
    by_src: dict[int, list] = {}
    for b in arrows:
        by_src.setdefault(b[0], []).append(b)

    image = {a: Phi(a) for a in arrows}

    def bad_comp():
        for a in arrows:
            u1, r1 = image[a]
            for b in by_src.get(a[2], []):
                u2, r2 = image[b]
                if Phi(gt.compose(a, b)) != (g.compose(u1, u2), (r1[0], r2[1])):
                    yield (a, b)

    rep.add("multiplicative on the window", *_first(bad_comp()))
    rep.add("inverse", *_first(a for a in arrows if Phi(gt.inverse(a)) != (g.inverse(Phi(a)[0]), Phi(a)[1][::-1])))
    rep.add("cocycles agree up to the coboundary m - n",
            *_first(a for a in arrows if a[1] - Phi(a)[0][1] != pts[a[0]][1] - pts[a[2]][1]))
    rep.add("R factor is a groupoid", validate(product_with_R(from_set([0]), N)).ok)
    rep.add("excluded boundary arrows", True, None, "0 arrows excluded")
    return rep


# ---------------------------------------------------------------------------------
# Inverse limits


@dataclass(frozen=True)
class InverseLimit:
    """``(X̄, σ̄)``: the eventual image with the induced bijection.

    On a finite set a backward-consistent sequence ``(ξ_n)`` is confined to
    the periodic points and determined by ``ξ_0``, so ``X̄`` is indexed by
    the periodic points.
    """

    points: tuple[int, ...]
    perm: tuple[int, ...]

    def cycle_type(self) -> tuple[int, ...]:
        seen, out = set(), []
        for i in range(len(self.points)):
            if i in seen:
                continue
            j, length = i, 0
            while j not in seen:
                seen.add(j)
                j = self.perm[j]
                length += 1
            out.append(length)
        return tuple(sorted(out))

    def sequence(self, i: int, lo: int, hi: int) -> list[int]:
        """``ξ_lo .. ξ_{hi-1}`` of the point with ``ξ_0 = points[i]``."""
        inv = [0] * len(self.perm)
        for a, b in enumerate(self.perm):
            inv[b] = a
        out = []
        for n in range(lo, hi):
            j = i
            step = self.perm if n >= 0 else inv
            for _ in range(abs(n)):
                j = step[j]
            out.append(self.points[j])
        return out


def inverse_limit(S: FiniteSelfMap) -> InverseLimit:
    if not S.is_total:
        raise InvalidStructure("sigma must be total")
    periodic = sorted(x for x in S.points if S.period(x) > 0 and S.iterate(x, S.period(x)) == x)
    pos = {p: i for i, p in enumerate(periodic)}
    perm = tuple(pos[S(p)] for p in periodic)
    return InverseLimit(tuple(periodic), perm)


def check_two_sided_conjugacy(SX: FiniteSelfMap, SY: FiniteSelfMap,
                              hbar: Sequence[int] | None = None) -> tuple[ValidationReport, list[int] | None]:
    """Conjugacy of the inverse limits as permutations.

    ``hbar`` maps indices of ``X̄`` to indices of ``Ȳ``; when omitted a
    witness is built by matching cycles of equal length.  Returns the report
    and the witness that was checked (``None`` when cycle types differ).
    """
    A, B = inverse_limit(SX), inverse_limit(SY)
    rep = ValidationReport("two-sided conjugacy")
    same = rep.add("cycle types agree", A.cycle_type() == B.cycle_type(), None if A.cycle_type() == B.cycle_type()
                   else (list(A.cycle_type()), list(B.cycle_type())))
    if hbar is None:
        if not same:
            return rep, None
        hbar = _cycle_matching(A.perm, B.perm)
    hbar = list(hbar)
    bij = rep.add("witness is a bijection", len(hbar) == len(A.points) and sorted(hbar) == list(range(len(B.points))))
    if bij:
        rep.add("witness intertwines", *_first(i for i in range(len(hbar)) if hbar[A.perm[i]] != B.perm[hbar[i]]))
    return rep, hbar


def _cycles_of(perm: Sequence[int]) -> list[list[int]]:
    seen, out = set(), []
    for i in range(len(perm)):
        if i in seen:
            continue
        cyc, j = [], i
        while j not in seen:
            seen.add(j)
            cyc.append(j)
            j = perm[j]
        out.append(cyc)
    return out


def _cycle_matching(p: Sequence[int], q: Sequence[int]) -> list[int]:
    cp, cq = _cycles_of(p), _cycles_of(q)
    used = [False] * len(cq)
    h = [0] * len(p)
    for c in cp:
        j = next(j for j, d in enumerate(cq) if not used[j] and len(d) == len(c))
        used[j] = True
        for a, b in zip(c, cq[j]):
            h[a] = b
    return h


def induced_limit_conjugacy(SX: FiniteSelfMap, SY: FiniteSelfMap, h: Sequence[int]) -> list[int]:
    """``h̄`` induced by a conjugacy ``h`` (which maps periodic points to periodic points)."""
    A, B = inverse_limit(SX), inverse_limit(SY)
    pos = {p: i for i, p in enumerate(B.points)}
    return [pos[h[p]] for p in A.points]


# ---------------------------------------------------------------------------------
# Flip-conjugacy decomposition


@dataclass(frozen=True)
class FlipDecomposition:
    X1: tuple[int, ...]
    X2: tuple[int, ...]
    N: int
    h: tuple[int, ...]
    witness1: Mapping[int, int]
    witness2: Mapping[int, int]
    report: ValidationReport

    def to_dict(self) -> dict:
        return {"X1": list(self.X1), "X2": list(self.X2), "N": self.N, "h": list(self.h),
                "witness1": [[a, b] for a, b in sorted(self.witness1.items())],
                "witness2": [[a, b] for a, b in sorted(self.witness2.items())],
                "report": self.report.to_dict()}


def flip_decomposition(SX: FiniteSelfMap, SY: FiniteSelfMap, theta: DRIso) -> FlipDecomposition:
    """Split ``X`` into the parts where ``Θ`` preserves, resp. reverses, the direction of orbits.

    With ``f(n, x) = c_Y(Θ(x, n, σ^n x))`` one has ``f(n + p, x) = f(n, x) + S``
    for the period ``p`` of ``x`` and ``S = f(p, x)``, ``|S| = p``.  Hence the
    sign of ``f(±n, x)`` is eventually that of ``±S`` and the least admissible
    ``N`` is found by scanning up to ``p · (1 + max_{|n| < p} |f(n, x)|)``,
    beyond which the drift term dominates.
    """
    for S, name in ((SX, "sigma"), (SY, "tau")):
        if not S.is_bijection:
            raise InvalidStructure(f"{name} must be a bijection")
    rep = ValidationReport("flip decomposition")
    iso_rep = check_dr_iso(theta)
    rep.extend(iso_rep, "Theta: ")
    if not iso_rep.ok:
        raise InvalidStructure(f"Theta is not an isomorphism: {iso_rep.failures()[0].name}")
    h = tuple(theta.h)
    inv_sx = [0] * SX.size
    for x in SX.points:
        inv_sx[SX(x)] = x

    def sigma_pow(x, n):
        if n >= 0:
            return SX.iterate(x, n)
        for _ in range(-n):
            x = inv_sx[x]
        return x

    def f(n, x):
        return theta((x, n, sigma_pow(x, n)))[1]

    N_needed = 0
    sign: dict[int, int] = {}
    for x in SX.points:
        p = SX.period(x)
        S = f(p, x)
        sign[x] = 1 if S > 0 else -1
        bound = p * (1 + max(abs(f(n, x)) for n in range(-p + 1, p)))
        # least N_x with sign conditions for all n > N_x; beyond `bound` they hold
        last_bad = 0
        for n in range(1, bound + 1):
            if not (sign[x] * f(n, x) > 0 and sign[x] * f(-n, x) < 0):
                last_bad = n
        N_needed = max(N_needed, last_bad)
    rep.add("cocycle identity f(m+n,x) = f(m,x) + f(n,sigma^m x)", *_first(
        (m, n, x) for x in SX.points for m in range(-3, 4) for n in range(-3, 4)
        if f(m + n, x) != f(m, x) + f(n, sigma_pow(x, m))))
    X1 = tuple(x for x in SX.points if sign[x] > 0)
    X2 = tuple(x for x in SX.points if sign[x] < 0)
    rep.add("X1 and X2 are sigma-invariant", all(sign[SX(x)] == sign[x] for x in SX.points))

    inv_ty = [0] * SY.size
    for y in SY.points:
        inv_ty[SY(y)] = y
    w1, w2 = {}, {}
    for cyc in SX.cycles():
        x0 = cyc[0]
        target = w1 if sign[x0] > 0 else w2
        y, z = h[x0], x0
        for _ in range(len(cyc)):
            target[z] = y
            z = SX(z)
            y = SY(y) if sign[x0] > 0 else inv_ty[y]
    rep.add("witness 1 conjugates sigma|X1 to tau|h(X1)", *_first(
        x for x in X1 if w1[SX(x)] != SY(w1[x])))
    rep.add("witness 2 conjugates sigma|X2 to tau^-1|h(X2)", *_first(
        x for x in X2 if w2[SX(x)] != inv_ty[w2[x]]))
    rep.add("witness images are h(X1), h(X2)",
            sorted(w1.values()) == sorted(h[x] for x in X1) and sorted(w2.values()) == sorted(h[x] for x in X2))
    return FlipDecomposition(X1, X2, N_needed, h, w1, w2, rep)


# ---------------------------------------------------------------------------------
# Group actions


def group_action_rigidity(X: Sequence, G: FiniteGroup, act: Callable, Y: Sequence, L: FiniteGroup, act2: Callable,
                          h: Mapping, phi: Mapping) -> ValidationReport:
    """The three equivalent conditions for ``Θ(x, γ) = (h(x), φ(x, γ))``.

    (1) ``Θ`` is an isomorphism ``X ⋊ Γ -> Y ⋊ Λ`` fixing units;
    (2) ``φ`` is a cocycle, ``(h, φ)`` preserves stabilisers and an ``η``
    exists making ``(h, φ, η)`` a continuous orbit equivalence;
    (3) as (2) with essential stabilisers, which coincide with stabilisers on
    a discrete space.
    """
    for x in X:
        for g in G.elements:
            if (x, g) not in phi:
                raise InvalidStructure(f"phi has no value at {(x, g)}")
            if not L.contains(phi[(x, g)]):
                raise InvalidStructure(f"phi{(x, g)} is not in the target group")
    if sorted(h[x] for x in X) != sorted(Y) or len(set(h[x] for x in X)) != len(X):
        raise InvalidStructure("h must be a bijection X -> Y")
    gX, _ = transformation_groupoid(list(X), G, act)
    gY, _ = transformation_groupoid(list(Y), L, act2)
    rep = ValidationReport("group action rigidity")

    # (1)
    idx_y = {lab: i for i, lab in enumerate(gY.labels)}
    m = [idx_y[(h[x], phi[(x, g)])] for (x, g) in gX.labels]
    c1 = ValidationReport("condition 1")
    c1.add("Theta(x,e) = (h(x),e)", *_first(x for x in X if phi[(x, G.identity)] != L.identity))
    c1.extend(check_iso(GroupoidIso(gX, gY, tuple(m))))
    ok1 = c1.ok
    rep.extend(c1, "(1) ")

    hinv = {h[x]: x for x in X}
    cocycle_bad = next(((x, a, b) for x in X for a in G.elements for b in G.elements
                        if phi[(x, G.mul(a, b))] != L.mul(phi[(x, a)], phi[(act(x, a), b)])), None)
    orbit_bad = next(((x, g) for x in X for g in G.elements if h[act(x, g)] != act2(h[x], phi[(x, g)])), None)
    eta_bad = None
    for y in Y:
        for lam in L.elements:
            target = hinv[act2(y, lam)]
            gam = next((g for g in G.elements if act(hinv[y], g) == target), None)
            if gam is None:
                eta_bad = (y, lam)
                break
        if eta_bad:
            break

    def stab_bad():
        for x in X:
            sx = [g for g in G.elements if act(x, g) == x]
            sy = sorted(lam for lam in L.elements if act2(h[x], lam) == h[x])
            if sorted(phi[(x, g)] for g in sx) != sy:
                yield x

    sb = next(stab_bad(), None)
    for label in ("(2) ", "(3) "):
        which = "stabilisers" if label == "(2) " else "essential stabilisers"
        rep.add(label + "phi is a cocycle", cocycle_bad is None, cocycle_bad)
        rep.add(label + f"(h, phi) preserves {which}", sb is None, sb)
        rep.add(label + "h(x gamma) = h(x) phi(x, gamma)", orbit_bad is None, orbit_bad)
        rep.add(label + "eta exists", eta_bad is None, eta_bad)
    ok2 = cocycle_bad is None and sb is None and orbit_bad is None and eta_bad is None
    rep.add("conditions agree", ok1 == ok2)
    return rep
