"""JSON file formats for groupoids, elements, matrices, self-maps and certificates.

Every reader raises :class:`FormatError` naming the offending field; every
writer emits plain JSON-compatible data with canonical ordering so that
``json.dumps(..., sort_keys=True)`` is byte-deterministic.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path
from typing import Any

from ._common import InvalidStructure
from .algebra import AlgebraElement
from .dr import DRIso, FiniteSelfMap, build_dr, dr_iso_from_function
from .dynamics import LocalCOECert
from .groupoid import Cocycle, FiniteGroupoid
from .groups import FiniteGroup, FreeAbelian, cyclic, direct_product, klein_four, symmetric, trivial_group
from .isomorphism import GroupoidIso
from .shifts import BlockCodeCert, COECert, CylinderTable, EventualConjCert, ZeroOneMatrix


class FormatError(InvalidStructure):
    """Malformed input; ``location`` names the file and field."""

    def __init__(self, message: str, location: str = ""):
        self.location = location
        super().__init__(f"{location}: {message}" if location else message)


SCHEMAS: dict[str, Any] = {
    "groupoid": {
        "units": "list of morphism ids that are units",
        "morphisms": "list of {id, src, rng, inv}; ids are 0..n-1",
        "comp": "list of [a, b, ab] for every composable pair (s(a) = r(b))",
        "cocycle": "optional {target: group, labels: degree of each morphism id}",
    },
    "group": {"kind": "cyclic (n) | klein | symmetric (n) | trivial | product (factors) | table (table) | free (rank)"},
    "element": {"coeffs": "list of {morphism, re, im}"},
    "matrix": {"size": "n", "entries": "row-major list of n*n values in {0,1}"},
    "self_map": {"size": "n", "map": "list of images, null outside the domain",
                 "domain": "optional 0/1 mask", "codomain": "optional 0/1 mask"},
    "pair": {"kind": "groupoid | matrix | self_map", "groupoid": "groupoid file (kind groupoid)",
             "blocks": "block sizes (kind matrix)", "self_map": "self-map file (kind self_map)",
             "cocycle": "{kind: cX | trivial | mod, modulus} (kind self_map)"},
    "block_code": {"window": "w", "block_map": "list of [word, symbol]",
                   "lead_maps": "optional list of block maps for the first positions",
                   "inverse": "block code of the inverse"},
    "sft_certificate": {"type": "conjugacy | eventual | coe", "h": "block code",
                        "lag": "k (eventual)", "k_A, l_A, k_B, l_B": "{depth, table: [[word, value]]} (coe)"},
    "local_coe": {"h": "point table", "l, k": "[[x, value]] on the domain of sigma",
                  "l_inv, k_inv": "[[y, value]] on the domain of tau"},
    "dr_iso": {"h": "point table", "affine": "[[x, y, offset, step]]",
               "signs": "alternative to affine: per-point sign s, Theta(x,k,y) = (hx, s(x) k, hy)"},
    "groupoid_iso": {"map": "image id of every morphism"},
    "group_action": {"X": "points", "G": "group", "act": "act[x][g]", "Y": "points", "L": "group",
                     "act2": "act2[y][l]", "h": "h[x]", "phi": "phi[x][g]"},
    "ck": {"f": "list of [mu, nu, coeff]", "g": "optional second element", "t": "optional [re, im]"},
}


def digest(path: str | Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def load_json(path: str | Path) -> Any:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise FormatError(f"cannot read file ({exc.strerror})", str(path)) from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"invalid JSON at line {exc.lineno} column {exc.colno}", str(path)) from None


def _field(data: dict, key: str, where: str):
    if not isinstance(data, dict) or key not in data:
        raise FormatError(f"missing field '{key}'", where)
    return data[key]


def _int_list(value, where: str) -> list[int]:
    if not isinstance(value, list) or not all(isinstance(v, int) and not isinstance(v, bool) for v in value):
        raise FormatError("expected a list of integers", where)
    return value


# -- groups -------------------------------------------------------------------------


def group_from_dict(data: dict, where: str = "group"):
    kind = _field(data, "kind", where)
    if kind == "cyclic":
        return cyclic(_field(data, "n", where))
    if kind == "klein":
        return klein_four()
    if kind == "symmetric":
        return symmetric(_field(data, "n", where))
    if kind == "trivial":
        return trivial_group()
    if kind == "free":
        return FreeAbelian(_field(data, "rank", where))
    if kind == "product":
        factors = [group_from_dict(f, f"{where}.factors[{i}]") for i, f in enumerate(_field(data, "factors", where))]
        if not factors:
            raise FormatError("product needs at least one factor", where)
        g = factors[0]
        for f in factors[1:]:
            g = direct_product(g, f)
        return g
    if kind == "table":
        g = FiniteGroup(_field(data, "table", where), data.get("identity", 0))
        rep = g.validate()
        if not rep.ok:
            raise FormatError(f"not a group ({rep.failures()[0].name})", where)
        return g
    raise FormatError(f"unknown group kind {kind!r}", where)


def group_to_dict(g) -> dict:
    if isinstance(g, FreeAbelian):
        return {"kind": "free", "rank": g.rank}
    return {"kind": "table", "table": [list(r) for r in g.table], "identity": g.identity}


# -- groupoids ----------------------------------------------------------------------


def groupoid_from_dict(data: dict, where: str = "groupoid") -> tuple[FiniteGroupoid, Cocycle | None]:
    morphs = _field(data, "morphisms", where)
    if not isinstance(morphs, list):
        raise FormatError("'morphisms' must be a list", where)
    n = len(morphs)
    src, rng, inv = [0] * n, [0] * n, [0] * n
    seen = set()
    for i, m in enumerate(morphs):
        loc = f"{where}.morphisms[{i}]"
        mid = _field(m, "id", loc)
        if not isinstance(mid, int) or not 0 <= mid < n or mid in seen:
            raise FormatError("ids must be distinct integers 0..n-1", loc)
        seen.add(mid)
        for name, arr in (("src", src), ("rng", rng), ("inv", inv)):
            v = _field(m, name, loc)
            if not isinstance(v, int) or not 0 <= v < n:
                raise FormatError(f"'{name}' is not a morphism id", loc)
            arr[mid] = v
    units = _int_list(_field(data, "units", where), f"{where}.units")
    if any(not 0 <= u < n for u in units):
        raise FormatError("unit is not a morphism id", f"{where}.units")
    comp = {}
    for i, t in enumerate(_field(data, "comp", where)):
        loc = f"{where}.comp[{i}]"
        if not isinstance(t, list) or len(t) != 3 or not all(isinstance(v, int) and 0 <= v < n for v in t):
            raise FormatError("expected [a, b, ab] with morphism ids", loc)
        comp[(t[0], t[1])] = t[2]
    g = FiniteGroupoid(units, src, rng, inv, comp)
    coc = None
    if "cocycle" in data:
        cd = data["cocycle"]
        target = group_from_dict(_field(cd, "target", f"{where}.cocycle"), f"{where}.cocycle.target")
        labels = _field(cd, "labels", f"{where}.cocycle")
        if not isinstance(labels, list) or len(labels) != n:
            raise FormatError("one label per morphism required", f"{where}.cocycle.labels")
        if isinstance(target, FreeAbelian):
            labels = [tuple(v) if isinstance(v, list) else v for v in labels]
        bad = next((i for i, v in enumerate(labels) if not target.contains(v)), None)
        if bad is not None:
            raise FormatError(f"label of morphism {bad} is not a group element", f"{where}.cocycle.labels")
        coc = Cocycle(g, target, tuple(labels))
    return g, coc


def groupoid_to_dict(g: FiniteGroupoid, c: Cocycle | None = None) -> dict:
    out = {
        "units": list(g.units),
        "morphisms": [{"id": a, "src": g.src[a], "rng": g.rng[a], "inv": g.inv[a]} for a in g.morphisms],
        "comp": [[a, b, c_] for (a, b), c_ in sorted(g.comp.items())],
    }
    if c is not None:
        out["cocycle"] = {"target": group_to_dict(c.target),
                          "labels": [list(v) if isinstance(v, tuple) else v for v in c.labels]}
    return out


def iso_from_dict(data: dict, g: FiniteGroupoid, h: FiniteGroupoid, where: str = "iso") -> GroupoidIso:
    m = _int_list(_field(data, "map", where), f"{where}.map")
    if len(m) != g.size:
        raise FormatError("map length differs from the number of morphisms", f"{where}.map")
    return GroupoidIso(g, h, tuple(m))


# -- algebra elements ---------------------------------------------------------------


def element_from_dict(data: dict, g, where: str = "element") -> AlgebraElement:
    coeffs = {}
    for i, t in enumerate(_field(data, "coeffs", where)):
        loc = f"{where}.coeffs[{i}]"
        a = _field(t, "morphism", loc)
        if isinstance(a, list):
            a = tuple(a)
        if isinstance(g, FiniteGroupoid):
            if not isinstance(a, int) or not 0 <= a < g.size:
                raise FormatError("not a morphism id", loc)
        elif not g.is_arrow(a):
            raise FormatError("not an arrow", loc)
        coeffs[a] = coeffs.get(a, 0) + complex(float(t.get("re", 0.0)), float(t.get("im", 0.0)))
    return AlgebraElement(g, coeffs)


def element_to_dict(f: AlgebraElement) -> dict:
    return {"coeffs": [{"morphism": list(a) if isinstance(a, tuple) else a, "re": v.real, "im": v.imag}
                       for a, v in sorted(f.coeffs.items())]}


# -- shifts -------------------------------------------------------------------------


def matrix_from_dict(data: dict, where: str = "matrix") -> ZeroOneMatrix:
    n = _field(data, "size", where)
    entries = _int_list(_field(data, "entries", where), f"{where}.entries")
    if not isinstance(n, int) or n < 1 or len(entries) != n * n:
        raise FormatError("entries must list size*size values", where)
    try:
        return ZeroOneMatrix([entries[i * n:(i + 1) * n] for i in range(n)])
    except InvalidStructure as exc:
        raise FormatError(str(exc), where) from None


def matrix_to_dict(A: ZeroOneMatrix) -> dict:
    return {"size": A.n, "entries": [v for row in A.rows for v in row]}


def _word_table(items, where: str) -> dict:
    if not isinstance(items, list):
        raise FormatError("expected a list of [word, value]", where)
    out = {}
    for i, t in enumerate(items):
        if not isinstance(t, list) or len(t) != 2 or not isinstance(t[0], list):
            raise FormatError("expected [word, value]", f"{where}[{i}]")
        out[tuple(t[0])] = t[1]
    return out


def block_code_from_dict(data: dict, where: str = "h") -> BlockCodeCert:
    w = _field(data, "window", where)
    bm = _word_table(_field(data, "block_map", where), f"{where}.block_map")
    leads = tuple(_word_table(m, f"{where}.lead_maps[{i}]") for i, m in enumerate(data.get("lead_maps", [])))
    inv = block_code_from_dict(data["inverse"], f"{where}.inverse") if "inverse" in data else None
    return BlockCodeCert(w, bm, leads, inv)


def block_code_to_dict(h: BlockCodeCert) -> dict:
    def table(m):
        return [[list(k), v] for k, v in sorted(m.items())]
    out = {"window": h.window, "block_map": table(h.block_map)}
    if h.lead_maps:
        out["lead_maps"] = [table(m) for m in h.lead_maps]
    if h.inverse is not None:
        out["inverse"] = block_code_to_dict(h.inverse)
    return out


def _cyl_table(data: dict, where: str) -> CylinderTable:
    return CylinderTable(_field(data, "depth", where), _word_table(_field(data, "table", where), f"{where}.table"))


def sft_cert_from_dict(data: dict, where: str = "certificate"):
    kind = _field(data, "type", where)
    h = block_code_from_dict(_field(data, "h", where), f"{where}.h")
    if kind == "conjugacy":
        return h
    if kind == "eventual":
        return EventualConjCert(h, _field(data, "lag", where))
    if kind == "coe":
        return COECert(h, *(_cyl_table(_field(data, k, where), f"{where}.{k}") for k in ("k_A", "l_A", "k_B", "l_B")))
    raise FormatError(f"unknown certificate type {kind!r}", where)


def sft_cert_to_dict(cert) -> dict:
    if isinstance(cert, BlockCodeCert):
        return {"type": "conjugacy", "h": block_code_to_dict(cert)}
    if isinstance(cert, EventualConjCert):
        return {"type": "eventual", "h": block_code_to_dict(cert.h), "lag": cert.lag}

    def cyl(t):
        return {"depth": t.depth, "table": [[list(k), v] for k, v in sorted(t.table.items())]}

    return {"type": "coe", "h": block_code_to_dict(cert.h), "k_A": cyl(cert.k_A), "l_A": cyl(cert.l_A),
            "k_B": cyl(cert.k_B), "l_B": cyl(cert.l_B)}


def ck_terms_from_list(items, where: str) -> dict:
    out = {}
    if not isinstance(items, list):
        raise FormatError("expected a list of [mu, nu, coeff]", where)
    for i, t in enumerate(items):
        if not isinstance(t, list) or len(t) != 3:
            raise FormatError("expected [mu, nu, coeff]", f"{where}[{i}]")
        c = t[2]
        if isinstance(c, list):
            c = complex(c[0], c[1])
        out[(tuple(t[0]), tuple(t[1]))] = c
    return out


# -- dynamics -----------------------------------------------------------------------


def self_map_from_dict(data: dict, where: str = "self_map") -> FiniteSelfMap:
    n = _field(data, "size", where)
    table = _field(data, "map", where)
    if not isinstance(n, int) or n < 0 or not isinstance(table, list) or len(table) != n:
        raise FormatError("'map' must list one entry per point", where)
    if "domain" in data:
        mask = _int_list(data["domain"], f"{where}.domain")
        if len(mask) != n or any((mask[x] == 1) != (table[x] is not None) for x in range(n)):
            raise FormatError("domain mask disagrees with the map table", f"{where}.domain")
    codomain = None
    if "codomain" in data:
        mask = _int_list(data["codomain"], f"{where}.codomain")
        if len(mask) != n:
            raise FormatError("codomain mask has the wrong length", f"{where}.codomain")
        codomain = [x for x in range(n) if mask[x]]
    try:
        return FiniteSelfMap(n, table, codomain)
    except InvalidStructure as exc:
        raise FormatError(str(exc), where) from None


def self_map_to_dict(s: FiniteSelfMap) -> dict:
    return {"size": s.size, "map": list(s.table),
            "domain": [1 if x in s.domain else 0 for x in s.points],
            "codomain": [1 if x in s.codomain else 0 for x in s.points]}


def _point_table(items, where: str) -> dict:
    if not isinstance(items, list):
        raise FormatError("expected a list of [point, value]", where)
    out = {}
    for i, t in enumerate(items):
        if not isinstance(t, list) or len(t) != 2:
            raise FormatError("expected [point, value]", f"{where}[{i}]")
        out[t[0]] = t[1]
    return out


def local_coe_from_dict(data: dict, where: str = "certificate") -> LocalCOECert:
    h = tuple(_int_list(_field(data, "h", where), f"{where}.h"))
    tabs = [_point_table(_field(data, k, where), f"{where}.{k}") for k in ("l", "k", "l_inv", "k_inv")]
    return LocalCOECert(h, *tabs)


def dr_iso_from_dict(data: dict, SX: FiniteSelfMap, SY: FiniteSelfMap, where: str = "theta") -> DRIso:
    gX, gY = build_dr(SX), build_dr(SY)
    h = tuple(_int_list(_field(data, "h", where), f"{where}.h"))
    if len(h) != SX.size:
        raise FormatError("h must list one image per point", f"{where}.h")
    if "signs" in data:
        signs = _int_list(data["signs"], f"{where}.signs")
        if len(signs) != SX.size or any(s not in (1, -1) for s in signs):
            raise FormatError("signs must be +1 or -1 per point", f"{where}.signs")
        return dr_iso_from_function(gX, gY, h, lambda x, k, y: signs[x] * k)
    aff = {}
    for i, t in enumerate(_field(data, "affine", where)):
        if not isinstance(t, list) or len(t) != 4:
            raise FormatError("expected [x, y, offset, step]", f"{where}.affine[{i}]")
        aff[(t[0], t[1])] = (t[2], t[3])
    return DRIso(gX, gY, h, aff)


def group_action_from_dict(data: dict, where: str = "action") -> dict:
    out = {}
    for side, pts, grp, act in (("X", "X", "G", "act"), ("Y", "Y", "L", "act2")):
        points = _int_list(_field(data, pts, where), f"{where}.{pts}")
        group = group_from_dict(_field(data, grp, where), f"{where}.{grp}")
        table = _field(data, act, where)
        if not isinstance(table, list) or len(table) != len(points):
            raise FormatError("one row per point required", f"{where}.{act}")
        out[pts], out[grp], out[act] = points, group, table
    out["h"] = {x: v for x, v in zip(out["X"], _int_list(_field(data, "h", where), f"{where}.h"))}
    phi = _field(data, "phi", where)
    out["phi"] = {(x, g): phi[i][g] for i, x in enumerate(out["X"]) for g in out["G"].elements}
    return out
