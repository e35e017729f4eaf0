"""Batch command-line front end.

Every subcommand reads JSON files, runs the library checks and prints one
JSON report on standard output.  Reports are byte-deterministic: keys are
sorted, floats use a fixed 12-digit format, inputs are identified by their
SHA-256 digests and timing is only included with ``--timing``.

Exit codes: 0 when every check passes, 1 when some check fails, and 2 for
usage errors or malformed input.
"""

from __future__ import annotations

import argparse
import json
import random
import sys
import time
from typing import Callable, Sequence

import numpy as np

from . import algebra as alg
from . import dr, dynamics, groupoid as gpd, isomorphism, shifts, weyl
from . import io as fio
from ._common import (EPS, EPS_ERROR, NOT_HOMOGENEOUS, CertificateError, HypothesisError, InvalidStructure, ResourceLimitError,
                      RigidityError, ValidationReport, _jsonable, pmap)

#: Library operations reached by each subcommand.  Every operation appears in exactly one entry.
OPERATIONS: dict[str, tuple[str, ...]] = {
    "groupoid validate": ("validate", "check_cocycle"),
    "groupoid structure": ("isotropy", "isotropy_group", "orbits", "is_bisection", "kernel", "grading_blocks"),
    "groupoid build": ("from_group", "from_equivalence", "from_group_bundle", "transformation_groupoid",
                       "product_with_R"),
    "groupoid iso": ("check_iso", "find_iso"),
    "algebra norm": ("regular_rep", "reduced_norm", "sup_norm", "evaluate_j"),
    "algebra check": ("convolve", "adjoint"),
    "algebra structure": ("diagonal_part", "is_diagonal", "relative_commutant_basis", "fiber_at", "degree",
                          "graded_components"),
    "weyl normalizers": ("enumerate_normalizers", "alpha", "unitary_U", "in_identity_component", "equivalent"),
    "weyl reconstruct": ("build_weyl_groupoid", "canonical_theta"),
    "weyl roundtrip": ("iso_to_algebra_iso", "algebra_iso_to_groupoid_iso"),
    "sft validate": ("validate_matrix", "admissible_words"),
    "sft verify-ck": ("verify_ck_relations",),
    "sft calc": ("ck_multiply", "ck_adjoint", "omega", "gauge_degree", "gauge_scale", "tau"),
    "sft check-conjugacy": ("check_conjugacy",),
    "sft check-eventual": ("check_eventual_conjugacy",),
    "sft check-coe": ("check_coe",),
    "sft higher-block": ("higher_block",),
    "sft induce": ("induce_cross_section",),
    "dyn tower": ("iterate_tower",),
    "dyn build-dr": ("build_dr", "stab", "stab_ess", "stab_min", "stab_ess_min"),
    "dyn check-coe": ("check_local_coe",),
    "dyn check-eventual": ("check_eventual_conjugacy_local",),
    "dyn coe-iso": ("groupoid_iso_from_coe", "coe_from_groupoid_iso"),
    "dyn t-conjugacy": ("T_map", "phi_T", "check_T_conjugacy"),
    "dyn stabilize": ("stabilize", "check_stabilization_iso"),
    "dyn inverse-limit": ("inverse_limit", "check_two_sided_conjugacy"),
    "dyn flip-decompose": ("flip_decomposition",),
    "dyn group-action": ("group_action_rigidity",),
    "dyn weyl-roundtrip": ("cocycle_cX",),
}


class UsageError(Exception):
    pass


class Context:
    """Per-invocation state: recorded inputs, thread count."""

    def __init__(self, threads: int):
        self.threads = threads
        self.inputs: list[dict] = []

    def load(self, path: str):
        data = fio.load_json(path)
        self.inputs.append({"path": path, "sha256": fio.digest(path)})
        return data


Result = tuple[dict, list[ValidationReport]]


# ---------------------------------------------------------------------------------
# helpers


def _groupoid(ctx: Context, path: str):
    return fio.groupoid_from_dict(ctx.load(path), path)


def _self_map(ctx: Context, path: str):
    return fio.self_map_from_dict(ctx.load(path), path)


def _matrix(ctx: Context, path: str):
    return fio.matrix_from_dict(ctx.load(path), path)


def _ints(text: str, what: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip() != ""]
    except ValueError:
        raise UsageError(f"{what} must be a comma-separated list of integers") from None


def _ck(A, items, where: str) -> shifts.CKElement:
    return shifts.CKElement(A, fio.ck_terms_from_list(items, where))


def _ck_to_list(f: shifts.CKElement) -> list:
    return [[list(mu), list(nu), c] for (mu, nu), c in sorted(f.terms.items())]


def _dr_cocycle(g, choice: str):
    if choice == "cX":
        return dr.cocycle_cX(g)
    if choice == "trivial":
        return dr.trivial_dr_cocycle(g)
    if choice.startswith("mod:"):
        return dr.mod_cocycle(g, int(choice[4:]))
    raise UsageError(f"unknown cocycle {choice!r} (use cX, trivial or mod:<m>)")


def _load_pair(ctx: Context, path: str, window: int | None = None):
    data = ctx.load(path)
    if "units" in data:
        data = {"kind": "groupoid", "groupoid": data}
    kind = fio._field(data, "kind", path)
    if kind == "groupoid":
        g, c = fio.groupoid_from_dict(fio._field(data, "groupoid", path), f"{path}.groupoid")
        return weyl.pair(g, c), data
    if kind == "matrix":
        return weyl.MatrixPair(fio._int_list(fio._field(data, "blocks", path), f"{path}.blocks")), data
    if kind == "self_map":
        s = fio.self_map_from_dict(fio._field(data, "self_map", path), f"{path}.self_map")
        g = dr.build_dr(s)
        choice = data.get("cocycle", {"kind": "cX"})
        ckind = choice.get("kind", "cX")
        c = _dr_cocycle(g, ckind if ckind != "mod" else f"mod:{choice.get('modulus', 1)}")
        return weyl.pair(g, c, window), data
    raise fio.FormatError(f"unknown pair kind {kind!r}", path)


def _key(k) -> list:
    return _jsonable(list(k))


# ---------------------------------------------------------------------------------
# groupoid


def cmd_groupoid_validate(args, ctx: Context) -> Result:
    loaded = [(p, _groupoid(ctx, p)) for p in args.files]

    def one(item):
        path, (g, c) = item
        rep = gpd.validate(g)
        rep.subject = f"{path}: groupoid axioms"
        reps = [rep]
        if c is not None and rep.ok:
            cr = gpd.check_cocycle(g, c)
            cr.subject = f"{path}: cocycle"
            reps.append(cr)
        return {"file": path, "morphisms": g.size, "units": len(g.units)}, reps

    out = pmap(one, loaded, ctx.threads)
    return {"groupoids": [r for r, _ in out]}, [rep for _, reps in out for rep in reps]


def cmd_groupoid_structure(args, ctx: Context) -> Result:
    g, c = _groupoid(ctx, args.file)
    rep = gpd.validate(g)
    if not rep.ok:
        return {}, [rep]
    iso_sub, _ = gpd.isotropy(g)
    result = {
        "orbits": [list(o) for o in gpd.orbits(g)],
        "isotropy_size": iso_sub.size,
        "isotropy_orders": [[x, gpd.isotropy_group(g, x).order] for x in g.units],
        "principal": gpd.is_principal(g),
    }
    if args.bisection is not None:
        result["is_bisection"] = gpd.is_bisection(g, _ints(args.bisection, "--bisection"))
    if c is not None:
        ker, _ = gpd.kernel(g, c)
        result["kernel_size"] = ker.size
        result["grading_blocks"] = [[_jsonable(k), sorted(v)] for k, v in
                                    sorted(gpd.grading_blocks(g, c).items(), key=lambda kv: repr(kv[0]))]
    return result, [rep]


def cmd_groupoid_build(args, ctx: Context) -> Result:
    data = ctx.load(args.file)
    kind = fio._field(data, "kind", args.file)
    coc = None
    if kind == "group":
        g = gpd.from_group(fio.group_from_dict(fio._field(data, "group", args.file), f"{args.file}.group"))
    elif kind == "equivalence":
        g = gpd.from_equivalence(fio._field(data, "blocks", args.file))
    elif kind == "bundle":
        fibers = [fio.group_from_dict(f, f"{args.file}.fibers[{i}]") for i, f in
                  enumerate(fio._field(data, "fibers", args.file))]
        g = gpd.from_group_bundle(list(range(len(fibers))), dict(enumerate(fibers)))
    elif kind == "action":
        grp = fio.group_from_dict(fio._field(data, "group", args.file), f"{args.file}.group")
        table = fio._field(data, "act", args.file)
        g, coc = gpd.transformation_groupoid(list(range(len(table))), grp, lambda x, a: table[x][a])
    elif kind == "product_with_R":
        base, _ = fio.groupoid_from_dict(fio._field(data, "groupoid", args.file), f"{args.file}.groupoid")
        g = gpd.product_with_R(base, fio._field(data, "N", args.file))
    else:
        raise fio.FormatError(f"unknown build kind {kind!r}", args.file)
    rep = gpd.validate(g)
    return {"groupoid": fio.groupoid_to_dict(g, coc)}, [rep]


def cmd_groupoid_iso(args, ctx: Context) -> Result:
    g, cg = _groupoid(ctx, args.left)
    h, ch = _groupoid(ctx, args.right)
    if args.map:
        phi = fio.iso_from_dict(ctx.load(args.map), g, h, args.map)
        rep = isomorphism.check_iso(phi)
        if rep.ok and cg is not None and ch is not None:
            rep.add("cocycle compatible", isomorphism.is_cocycle_compatible(phi, cg, ch))
        return {"map": list(phi.map)}, [rep]
    found = isomorphism.find_iso(g, h, args.max_units)
    rep = ValidationReport("isomorphism search")
    if not found:
        rep.add("isomorphic", False, {"reason": found.reason, "left": found.invariants_left,
                                      "right": found.invariants_right})
        return {"isomorphic": False}, [rep]
    rep.extend(isomorphism.check_iso(found))
    return {"isomorphic": True, "map": list(found.map)}, [rep]


# ---------------------------------------------------------------------------------
# algebra


def _cstar_checks(f: alg.AlgebraElement, rep: ValidationReport) -> dict:
    rn, sn = alg.reduced_norm(f), alg.sup_norm(f)
    ff = alg.reduced_norm(f.star() * f)
    rep.add("sup_norm <= reduced_norm", sn <= rn + 1e-9 * max(1.0, rn), None)
    rep.add("C*-identity", abs(ff - rn * rn) <= 1e-7 * max(1.0, rn * rn))
    if alg.supports_bisection(f):
        rep.add("norm equality on a bisection", abs(sn - rn) <= 1e-9 * max(1.0, rn))
    return {"reduced_norm": rn, "sup_norm": sn}


def cmd_algebra_norm(args, ctx: Context) -> Result:
    g, _ = _groupoid(ctx, args.groupoid)
    f = fio.element_from_dict(ctx.load(args.element), g, args.element)
    rep = ValidationReport("norms")
    result = _cstar_checks(f, rep)
    rep.add("evaluate_j(f) = f", alg.evaluate_j(f) == {a: f(a) for a in f.support})
    if args.unit is not None:
        if args.unit not in g.unit_set:
            raise UsageError(f"--unit {args.unit} is not a unit")
        M = alg.regular_rep(f, args.unit)
        result["regular_rep"] = [[complex(v) for v in row] for row in M]
        result["basis"] = list(g.arrows_from(args.unit))
    return result, [rep]


def _random_element(g, rng: random.Random, density: float = 0.5) -> alg.AlgebraElement:
    coeffs = {}
    for a in g.morphisms:
        if rng.random() < density:
            coeffs[a] = complex(round(rng.uniform(-1, 1), 6), round(rng.uniform(-1, 1), 6))
    return alg.AlgebraElement(g, coeffs)


def law_failures(g, triple) -> list[str]:
    """Names of *-algebra laws failing on one random triple."""
    f, h, k = triple
    bad = []
    if not ((f * h) * k).close_to(f * (h * k), 1e-9):
        bad.append("associativity")
    if not (f * h).star().close_to(h.star() * f.star(), 1e-9):
        bad.append("(fg)* = g* f*")
    if not f.star().star().close_to(f, 1e-9):
        bad.append("f** = f")
    for x in g.units:
        P = alg.regular_rep(f * h, x)
        Q = alg.regular_rep(f, x) @ alg.regular_rep(h, x)
        if not np.allclose(P, Q, atol=1e-9, rtol=0):
            bad.append("pi_x multiplicative")
            break
        if not np.allclose(alg.regular_rep(f.star(), x), alg.regular_rep(f, x).conj().T, atol=1e-9, rtol=0):
            bad.append("pi_x *-preserving")
            break
    return bad


def cmd_algebra_check(args, ctx: Context) -> Result:
    g, _ = _groupoid(ctx, args.groupoid)
    structure = gpd.validate(g)
    if not structure.ok:
        return {}, [structure]
    rng = random.Random(args.seed)
    triples = [tuple(_random_element(g, rng) for _ in range(3)) for _ in range(args.samples)]
    results = pmap(lambda t: law_failures(g, t), triples, ctx.threads)
    rep = ValidationReport("*-algebra laws")
    for law in ("associativity", "(fg)* = g* f*", "f** = f", "pi_x multiplicative", "pi_x *-preserving"):
        first = next((i for i, r in enumerate(results) if law in r), None)
        rep.add(law, first is None, None if first is None else {"sample": first})
    norms = ValidationReport("norm inequalities")
    for f, _, _ in triples:
        _cstar_checks(f, norms)
    summary = ValidationReport("norm inequalities")
    for name in ("sup_norm <= reduced_norm", "C*-identity"):
        fails = [c for c in norms.checks if c.name == name and not c.passed]
        summary.add(name, not fails)
    return {"samples": args.samples, "seed": args.seed}, [rep, summary]


def cmd_algebra_structure(args, ctx: Context) -> Result:
    g, c = _groupoid(ctx, args.groupoid)
    f = fio.element_from_dict(ctx.load(args.element), g, args.element)
    cc = c if c is not None else gpd.trivial_cocycle(g)
    d = alg.degree(f, cc)
    result = {
        "diagonal_part": fio.element_to_dict(alg.diagonal_part(f)),
        "is_diagonal": alg.is_diagonal(f),
        "relative_commutant_basis": [sorted(s) for s in alg.relative_commutant_basis(g)],
        "degree": None if d is NOT_HOMOGENEOUS else _jsonable(d),
        "graded_components": [[_jsonable(k), fio.element_to_dict(v)] for k, v in
                              sorted(alg.graded_components(f, cc).items(), key=lambda kv: repr(kv[0]))],
    }
    fibers = []
    for x in g.units:
        try:
            fibers.append([x, alg.fiber_at(f, x, cc).to_dict()])
        except InvalidStructure:
            continue
    result["fibers"] = fibers
    return result, []


# ---------------------------------------------------------------------------------
# weyl


def cmd_weyl_normalizers(args, ctx: Context) -> Result:
    P, _ = _load_pair(ctx, args.pair, args.window)
    norms = weyl.enumerate_normalizers(P)
    rows = []
    for nz in norms[:args.limit]:
        n = nz.element
        dom = [phi for phi in P.characters if weyl.in_domain(P, n, phi)]
        rows.append({"bisection": _jsonable(list(nz.bisection)), "degree": _jsonable(nz.degree),
                     "alpha": [[_jsonable(phi), _jsonable(weyl.alpha(P, n, phi))] for phi in dom]})
    # U-unitaries and equivalence between the first normalizers sharing a character and degree
    pairs = []
    shown = norms[:args.limit]
    for i, a in enumerate(shown):
        for b in shown[i + 1:]:
            if a.degree != b.degree:
                continue
            for phi in P.characters:
                if weyl.in_domain(P, a.element, phi) and weyl.in_domain(P, b.element, phi):
                    if weyl.alpha(P, a.element, phi) != weyl.alpha(P, b.element, phi):
                        continue
                    u = weyl.unitary_U(P, a.element, b.element, phi)
                    pairs.append({"n": _jsonable(list(a.bisection)), "m": _jsonable(list(b.bisection)),
                                  "character": _jsonable(phi), "U": u.to_dict(),
                                  "identity_component": weyl.in_identity_component(u),
                                  "equivalent": weyl.equivalent(P, a.element, phi, b.element, phi)})
    return {"count": len(norms), "normalizers": rows, "comparisons": pairs}, []


def cmd_weyl_reconstruct(args, ctx: Context) -> Result:
    P, data = _load_pair(ctx, args.pair, args.window)
    if isinstance(P, weyl.MatrixPair):
        H = weyl.build_weyl_groupoid(P)
        g, c = H.to_finite()
        out = {"groupoid": fio.groupoid_to_dict(g, c), "classes": [_key(k) for k in H.keys]}
        return out, [gpd.validate(g)]
    try:
        theta = weyl.canonical_theta(P.groupoid, P=P)
    except HypothesisError as exc:
        H = weyl.build_weyl_groupoid(P)
        rep = ValidationReport("hypothesis")
        rep.add("kernel isotropy torsion-free", False, str(exc))
        out = {"classes": [_key(k) for k in H.keys]}
        if P.is_finite:
            g, c = H.to_finite()
            out["groupoid"] = fio.groupoid_to_dict(g, c)
        return out, [rep]
    reps = [theta.report]
    if not P.is_finite:
        return {"window": P.window, "classes": len(theta.weyl.keys)}, reps
    out = {"groupoid": fio.groupoid_to_dict(theta.weyl_groupoid, theta.weyl_cocycle),
           "classes": [_key(k) for k in theta.weyl.keys]}
    if args.verify_against:
        other, _ = _groupoid(ctx, args.verify_against)
        if fio.groupoid_to_dict(other) == fio.groupoid_to_dict(P.groupoid):
            out["theta"] = list(theta.iso.map)
        else:
            found = isomorphism.find_iso(other, theta.weyl_groupoid)
            rep = ValidationReport("verify against")
            rep.add("isomorphic to the Weyl groupoid", bool(found),
                    None if found else {"reason": found.reason})
            reps.append(rep)
            if found:
                out["theta"] = list(found.map)
    return out, reps


def cmd_weyl_roundtrip(args, ctx: Context) -> Result:
    rep = ValidationReport("rigidity round trip")
    if args.self_map:
        s = _self_map(ctx, args.self_map)
        if args.iso:
            kappa = fio.dr_iso_from_dict(ctx.load(args.iso), s, s, args.iso)
        else:
            kappa = dr.identity_dr_iso(dr.build_dr(s))
        rep.extend(dr.check_dr_iso(kappa), "kappa: ")
        if not rep.ok:
            return {"kappa": kappa.to_dict()}, [rep]
        # kappa: G2 -> G1 and phi: C_c(G1) -> C_c(G2)
        c1, c2 = _dr_cocycle(kappa.target, args.cocycle), _dr_cocycle(kappa.source, args.cocycle)
        P1, P2 = weyl.pair(kappa.target, c1, args.window), weyl.pair(kappa.source, c2, args.window)
        phi = weyl.iso_to_algebra_iso(kappa, c1, c2)
        back = weyl.algebra_iso_to_groupoid_iso(phi, P1, P2)
        rep.add("recovered iso equals kappa", back.h == kappa.h and dict(back.affine) == dict(kappa.affine),
                None if back.h == kappa.h else {"h": list(back.h)})
        return {"kappa": kappa.to_dict(), "recovered": back.to_dict()}, [rep]
    if not args.pair:
        raise UsageError("weyl roundtrip needs --pair or --self-map")
    P, _ = _load_pair(ctx, args.pair, args.window)
    if not isinstance(P, weyl.GroupoidPair) or not P.is_finite:
        raise UsageError("--pair must describe a finite groupoid; use --self-map for DR groupoids")
    g, c = P.groupoid, P.cocycle
    kappa = fio.iso_from_dict(ctx.load(args.iso), g, g, args.iso) if args.iso else isomorphism.identity_iso(g)
    rep.extend(isomorphism.check_iso(kappa), "kappa: ")
    if not rep.ok:
        return {}, [rep]
    phi = weyl.iso_to_algebra_iso(kappa, c, c)
    back = weyl.algebra_iso_to_groupoid_iso(phi, P, P)
    if back.source is g:
        rep.add("recovered iso equals kappa", back.map == kappa.map)
    else:
        rep.add("torsion: Weyl-level iso only", True, None, "theta does not exist for this pair")
    return {"kappa": list(kappa.map), "recovered": list(back.map)}, [rep]


# ---------------------------------------------------------------------------------
# sft


def cmd_sft_validate(args, ctx: Context) -> Result:
    data = ctx.load(args.matrix)
    n = fio._field(data, "size", args.matrix)
    entries = fio._int_list(fio._field(data, "entries", args.matrix), f"{args.matrix}.entries")
    if not isinstance(n, int) or len(entries) != n * n:
        raise fio.FormatError("entries must list size*size values", args.matrix)
    rows = [entries[i * n:(i + 1) * n] for i in range(n)]
    rep = shifts.validate_matrix(rows)
    result = {}
    if rep.ok and args.length is not None:
        words = shifts.admissible_words(shifts.ZeroOneMatrix(rows), args.length)
        result = {"length": args.length, "count": len(words), "words": [list(w) for w in words[:args.limit]]}
    return result, [rep]


def cmd_sft_verify_ck(args, ctx: Context) -> Result:
    mats = [(p, _matrix(ctx, p)) for p in args.matrices]

    def one(item):
        path, A = item
        rep = shifts.verify_ck_relations(A)
        rep.subject = f"{path}: Cuntz-Krieger relations"
        return rep

    return {"matrices": len(mats)}, pmap(one, mats, ctx.threads)


def cmd_sft_calc(args, ctx: Context) -> Result:
    A = _matrix(ctx, args.matrix)
    data = ctx.load(args.terms)
    f = _ck(A, fio._field(data, "f", args.terms), f"{args.terms}.f")
    result = {"f": _ck_to_list(f), "adjoint": _ck_to_list(shifts.ck_adjoint(f)),
              "gauge_degree": _jsonable(shifts.gauge_degree(f)), "tau": _ck_to_list(shifts.tau(f))}
    if "g" in data:
        g = _ck(A, data["g"], f"{args.terms}.g")
        result["product"] = _ck_to_list(shifts.ck_multiply(f, g))
    if "t" in data:
        t = complex(*data["t"])
        result["gauge_scale"] = _ck_to_list(shifts.gauge_scale(f, t))
    if f.is_diagonal():
        w = shifts.omega(f)
        result["omega"] = {"depth": w.depth, "table": [[list(k), v] for k, v in sorted(w.table.items())]}
    return result, []


def _sft_pair(ctx, args):
    A, B = _matrix(ctx, args.A), _matrix(ctx, args.B)
    cert = fio.sft_cert_from_dict(ctx.load(args.cert), args.cert)
    return A, B, cert


def cmd_sft_check_conjugacy(args, ctx: Context) -> Result:
    A, B, cert = _sft_pair(ctx, args)
    if not isinstance(cert, shifts.BlockCodeCert):
        raise fio.FormatError("expected a conjugacy certificate", args.cert)
    return {}, [shifts.check_conjugacy(A, B, cert)]


def cmd_sft_check_eventual(args, ctx: Context) -> Result:
    A, B, cert = _sft_pair(ctx, args)
    if isinstance(cert, shifts.BlockCodeCert):
        cert = shifts.conjugacy_as_eventual(cert)
    if not isinstance(cert, shifts.EventualConjCert):
        raise fio.FormatError("expected a conjugacy or eventual-conjugacy certificate", args.cert)
    return {"lag": cert.lag}, [shifts.check_eventual_conjugacy(A, B, cert)]


def cmd_sft_check_coe(args, ctx: Context) -> Result:
    A, B, cert = _sft_pair(ctx, args)
    conj = ev = None
    if isinstance(cert, shifts.BlockCodeCert):
        conj, ev = cert, shifts.conjugacy_as_eventual(cert)
        cert = shifts.eventual_as_coe(A, B, ev)
    elif isinstance(cert, shifts.EventualConjCert):
        ev = cert
        cert = shifts.eventual_as_coe(A, B, ev)
    reps = [shifts.check_coe(A, B, cert)]
    if conj is not None or ev is not None:
        reps.append(shifts.implication_chain(A, B, conj, ev if conj is None else None))
    return {}, reps


def cmd_sft_higher_block(args, ctx: Context) -> Result:
    A = _matrix(ctx, args.matrix)
    B, h, blocks = shifts.higher_block(A, args.m)
    return {"matrix": fio.matrix_to_dict(B), "certificate": fio.sft_cert_to_dict(h),
            "blocks": [list(b) for b in blocks]}, [shifts.check_conjugacy(A, B, h)]


def cmd_sft_induce(args, ctx: Context) -> Result:
    A = _matrix(ctx, args.matrix)
    section = [_ints(s, "--section") for s in args.section]
    rep = ValidationReport("cross section")
    try:
        cs = shifts.induce_cross_section(A, section)
    except shifts.UnboundedReturnTime as exc:
        rep.add("bounded return time", False, exc.cycle)
        return {}, [rep]
    rep.add("bounded return time", True)
    rep.extend(shifts.verify_cross_section(cs))
    return cs.to_dict() | {"B_file": fio.matrix_to_dict(cs.B)}, [rep]


# ---------------------------------------------------------------------------------
# dyn


def _kset(ks) -> dict:
    return ks.to_dict()


def _inf(v):
    return "inf" if v == dr.INF else v


def cmd_dyn_tower(args, ctx: Context) -> Result:
    s = _self_map(ctx, args.self_map)
    t = dr.iterate_tower(s)
    return {"stable": t.stable, "U": [sorted(u) for u in t.U], "V": [sorted(v) for v in t.V]}, []


def cmd_dyn_build_dr(args, ctx: Context) -> Result:
    s = _self_map(ctx, args.self_map)
    g = dr.build_dr(s)
    rep = g.validate()
    result = {
        "pairs": [[x, y, _kset(g.kset(x, y))] for x, y in g.pairs],
        "stab": [[x, _kset(dr.stab(g, x))] for x in g.points],
        "stab_ess": [[x, _kset(dr.stab_ess(g, x))] for x in g.points],
        "stab_min": [[x, _inf(dr.stab_min(g, x))] for x in g.points],
        "stab_ess_min": [[x, _inf(dr.stab_ess_min(g, x))] for x in g.points],
        "orbits": [list(o) for o in g.orbits()],
    }
    return result, [rep]


def _coe_inputs(ctx, args):
    SX, SY = _self_map(ctx, args.SX), _self_map(ctx, args.SY)
    cert = fio.local_coe_from_dict(ctx.load(args.cert), args.cert)
    return SX, SY, cert


def cmd_dyn_check_coe(args, ctx: Context) -> Result:
    SX, SY, cert = _coe_inputs(ctx, args)
    return {"mode": args.mode}, [dynamics.check_local_coe(SX, SY, cert, args.mode)]


def cmd_dyn_check_eventual(args, ctx: Context) -> Result:
    SX, SY, cert = _coe_inputs(ctx, args)
    return {}, [dynamics.check_eventual_conjugacy_local(SX, SY, cert)]


def cmd_dyn_coe_iso(args, ctx: Context) -> Result:
    SX, SY, cert = _coe_inputs(ctx, args)
    rep = ValidationReport("groupoid isomorphism from COE")
    try:
        theta = dynamics.groupoid_iso_from_coe(SX, SY, cert, rep)
    except CertificateError:
        return {}, [rep]
    back = dynamics.coe_from_groupoid_iso(theta)
    rt = dynamics.check_local_coe(SX, SY, back, "stabiliser")
    rt.subject = "round trip certificate"
    return {"theta": theta.to_dict(), "certificate": back.to_dict()}, [rep, rt]


def cmd_dyn_t_conjugacy(args, ctx: Context) -> Result:
    SX, SY = _self_map(ctx, args.SX), _self_map(ctx, args.SY)
    h = _ints(args.h, "--h")
    rep = dynamics.check_T_conjugacy(SX, SY, h)
    g = dr.build_dr(SX)
    T = dynamics.T_map(g)
    units = [[x, list(T(g.unit_arrow(x)))] for x in SX.points]
    f = alg.AlgebraElement(g, {g.unit_arrow(x): 1.0 for x in SX.points})
    return {"T_units": units, "phi_T_unit": fio.element_to_dict(dynamics.phi_T(f))}, [rep]


def cmd_dyn_stabilize(args, ctx: Context) -> Result:
    s = _self_map(ctx, args.self_map)
    st, pts = dynamics.stabilize(s, args.N)
    return {"points": [list(p) for p in pts], "map": fio.self_map_to_dict(st)}, \
        [dynamics.check_stabilization_iso(s, args.N)]


def cmd_dyn_inverse_limit(args, ctx: Context) -> Result:
    SX = _self_map(ctx, args.SX)
    lim = dynamics.inverse_limit(SX)
    result = {"points": list(lim.points), "perm": list(lim.perm), "cycle_type": list(lim.cycle_type())}
    reps = []
    if args.SY:
        SY = _self_map(ctx, args.SY)
        hbar = _ints(args.hbar, "--hbar") if args.hbar else None
        rep, used = dynamics.check_two_sided_conjugacy(SX, SY, hbar)
        result["witness"] = used
        reps.append(rep)
    return result, reps


def cmd_dyn_flip(args, ctx: Context) -> Result:
    SX, SY = _self_map(ctx, args.SX), _self_map(ctx, args.SY)
    theta = fio.dr_iso_from_dict(ctx.load(args.theta), SX, SY, args.theta)
    fd = dynamics.flip_decomposition(SX, SY, theta)
    out = fd.to_dict()
    del out["report"]
    return out, [fd.report]


def cmd_dyn_group_action(args, ctx: Context) -> Result:
    d = fio.group_action_from_dict(ctx.load(args.file), args.file)
    for side in ("X", "Y"):
        if d[side] != list(range(len(d[side]))):
            raise fio.FormatError("points must be 0..n-1", f"{args.file}.{side}")
    act, act2 = d["act"], d["act2"]
    rep = dynamics.group_action_rigidity(d["X"], d["G"], lambda x, g: act[x][g], d["Y"], d["L"],
                                         lambda y, l: act2[y][l], d["h"], d["phi"])
    return {}, [rep]


def cmd_dyn_weyl_roundtrip(args, ctx: Context) -> Result:
    s = _self_map(ctx, args.self_map)
    g = dr.build_dr(s)
    c = _dr_cocycle(g, args.cocycle)
    theta = weyl.canonical_theta(g, c, window=args.window)
    return {"window": theta.pair.window, "classes": len(theta.weyl.keys),
            "cocycle": c.to_dict()}, [theta.report]


# ---------------------------------------------------------------------------------
# parser and driver


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="etale", description="Verify groupoid, algebra and dynamical rigidity data.")
    p.add_argument("--threads", type=int, default=1, help="worker threads for data-parallel checks")
    p.add_argument("--timing", action="store_true", help="include elapsed time (breaks byte-determinism)")
    p.add_argument("--schema", action="store_true", help="print the input file schemas and exit")
    top = p.add_subparsers(dest="group")

    def sub(group, name, fn: Callable, help_: str):
        sp = group.add_parser(name, help=help_)
        sp.set_defaults(fn=fn)
        return sp

    g = top.add_parser("groupoid").add_subparsers(dest="cmd")
    sp = sub(g, "validate", cmd_groupoid_validate, "check the groupoid axioms (and cocycle)")
    sp.add_argument("files", nargs="+")
    sp = sub(g, "structure", cmd_groupoid_structure, "isotropy, orbits, grading blocks")
    sp.add_argument("file")
    sp.add_argument("--bisection")
    sp = sub(g, "build", cmd_groupoid_build, "build a groupoid file from a description")
    sp.add_argument("file")
    sp = sub(g, "iso", cmd_groupoid_iso, "find or check an isomorphism")
    sp.add_argument("left")
    sp.add_argument("right")
    sp.add_argument("--map")
    sp.add_argument("--max-units", type=int, default=isomorphism.DEFAULT_UNIT_CAP,
                    help="unit cap for the isomorphism search")

    a = top.add_parser("algebra").add_subparsers(dest="cmd")
    sp = sub(a, "norm", cmd_algebra_norm, "reduced and sup norms of an element")
    sp.add_argument("groupoid")
    sp.add_argument("element")
    sp.add_argument("--unit", type=int)
    sp = sub(a, "check", cmd_algebra_check, "*-algebra laws on random elements")
    sp.add_argument("groupoid")
    sp.add_argument("--samples", type=int, default=20)
    sp.add_argument("--seed", type=int, default=0)
    sp = sub(a, "structure", cmd_algebra_structure, "diagonal, fibers and grading of an element")
    sp.add_argument("groupoid")
    sp.add_argument("element")

    w = top.add_parser("weyl").add_subparsers(dest="cmd")
    sp = sub(w, "normalizers", cmd_weyl_normalizers, "normalizers, alpha maps and U unitaries")
    sp.add_argument("pair")
    sp.add_argument("--window", type=int)
    sp.add_argument("--limit", type=int, default=12)
    sp = sub(w, "reconstruct", cmd_weyl_reconstruct, "build the extended Weyl groupoid")
    sp.add_argument("--pair", required=True)
    sp.add_argument("--verify-against")
    sp.add_argument("--window", type=int)
    sp = sub(w, "roundtrip", cmd_weyl_roundtrip, "groupoid iso -> algebra iso -> groupoid iso")
    sp.add_argument("--pair")
    sp.add_argument("--self-map")
    sp.add_argument("--iso")
    sp.add_argument("--cocycle", default="cX")
    sp.add_argument("--window", type=int)

    s = top.add_parser("sft").add_subparsers(dest="cmd")
    sp = sub(s, "validate", cmd_sft_validate, "validate a 0-1 matrix, list admissible words")
    sp.add_argument("matrix")
    sp.add_argument("--length", type=int)
    sp.add_argument("--limit", type=int, default=64)
    sp = sub(s, "verify-ck", cmd_sft_verify_ck, "verify the Cuntz-Krieger relations symbolically")
    sp.add_argument("matrices", nargs="+")
    sp = sub(s, "calc", cmd_sft_calc, "symbolic Cuntz-Krieger computations")
    sp.add_argument("matrix")
    sp.add_argument("terms")
    for name, fn in (("check-conjugacy", cmd_sft_check_conjugacy), ("check-eventual", cmd_sft_check_eventual),
                     ("check-coe", cmd_sft_check_coe)):
        sp = sub(s, name, fn, f"{name.replace('check-', '')} certificate check")
        sp.add_argument("A")
        sp.add_argument("B")
        sp.add_argument("cert")
    sp = sub(s, "higher-block", cmd_sft_higher_block, "higher block presentation and its conjugacy")
    sp.add_argument("matrix")
    sp.add_argument("--m", type=int, default=2)
    sp = sub(s, "induce", cmd_sft_induce, "first-return system of a union of cylinders")
    sp.add_argument("matrix")
    sp.add_argument("--section", action="append", required=True, help="comma-separated 0-based word")

    d = top.add_parser("dyn").add_subparsers(dest="cmd")
    sp = sub(d, "tower", cmd_dyn_tower, "domains and ranges of the iterates")
    sp.add_argument("self_map")
    sp = sub(d, "build-dr", cmd_dyn_build_dr, "Deaconu-Renault groupoid and stabilisers")
    sp.add_argument("self_map")
    for name, fn in (("check-coe", cmd_dyn_check_coe), ("check-eventual", cmd_dyn_check_eventual),
                     ("coe-iso", cmd_dyn_coe_iso)):
        sp = sub(d, name, fn, f"local {name} for finite self-maps")
        sp.add_argument("SX")
        sp.add_argument("SY")
        sp.add_argument("cert")
        if name == "check-coe":
            sp.add_argument("--mode", choices=("plain", "stabiliser", "essential"), default="stabiliser")
    sp = sub(d, "t-conjugacy", cmd_dyn_t_conjugacy, "T-map characterisation of conjugacy")
    sp.add_argument("SX")
    sp.add_argument("SY")
    sp.add_argument("--h", required=True)
    sp = sub(d, "stabilize", cmd_dyn_stabilize, "stabilisation and its groupoid isomorphism")
    sp.add_argument("self_map")
    sp.add_argument("--N", type=int, required=True)
    sp = sub(d, "inverse-limit", cmd_dyn_inverse_limit, "inverse limit and two-sided conjugacy")
    sp.add_argument("SX")
    sp.add_argument("SY", nargs="?")
    sp.add_argument("--hbar")
    sp = sub(d, "flip-decompose", cmd_dyn_flip, "flip-conjugacy decomposition of a groupoid iso")
    sp.add_argument("SX")
    sp.add_argument("SY")
    sp.add_argument("theta")
    sp = sub(d, "group-action", cmd_dyn_group_action, "rigidity conditions for group actions")
    sp.add_argument("file")
    sp = sub(d, "weyl-roundtrip", cmd_dyn_weyl_roundtrip, "Weyl groupoid of G(X, sigma) with c_X")
    sp.add_argument("self_map")
    sp.add_argument("--cocycle", default="cX")
    sp.add_argument("--window", type=int)
    return p


def _echo(argv: Sequence[str]) -> list[str]:
    """Command line without options that must not influence the output."""
    out, skip = [], False
    for tok in argv:
        if skip:
            skip = False
            continue
        if tok == "--threads":
            skip = True
            continue
        if tok.startswith("--threads=") or tok == "--timing":
            continue
        out.append(tok)
    return out


def _emit(obj: dict, stream) -> None:
    stream.write(json.dumps(_jsonable(obj), sort_keys=True, indent=2, ensure_ascii=True) + "\n")


def main(argv: Sequence[str] | None = None, stdout=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    out = sys.stdout if stdout is None else stdout
    parser = _parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 2
    if args.schema:
        _emit(fio.SCHEMAS, out)
        return 0
    if not getattr(args, "fn", None):
        parser.print_usage(sys.stderr)
        return 2
    if args.threads < 1:
        sys.stderr.write("--threads must be positive\n")
        return 2
    if EPS_ERROR is not None:
        _emit({"command": _echo(argv), "status": "error", "error": EPS_ERROR, "location": "EPS"}, out)
        return 2
    ctx = Context(args.threads)
    report: dict = {"command": _echo(argv), "eps": EPS}
    start = time.perf_counter()
    try:
        result, reps = args.fn(args, ctx)
    except (UsageError, fio.FormatError, CertificateError, ResourceLimitError) as exc:
        report.update(status="error", error=str(exc), inputs=ctx.inputs,
                      location=getattr(exc, "location", ""))
        _emit(report, out)
        return 2
    except (InvalidStructure, RigidityError) as exc:
        report.update(status="error", error=f"{type(exc).__name__}: {exc}", inputs=ctx.inputs)
        _emit(report, out)
        return 2
    except (KeyError, IndexError, TypeError, ValueError) as exc:
        report.update(status="error", error=f"malformed input ({type(exc).__name__}: {exc})", inputs=ctx.inputs)
        _emit(report, out)
        return 2
    ok = all(r.ok for r in reps)
    report.update(status="pass" if ok else "fail", inputs=ctx.inputs, result=result,
                  reports=[r.to_dict() for r in reps])
    if args.timing:
        report["elapsed_seconds"] = time.perf_counter() - start
    _emit(report, out)
    return 0 if ok else 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
