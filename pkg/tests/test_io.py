from __future__ import annotations

import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from etale import dr, shifts
from etale import io as fio
from etale.groupoid import from_equivalence, from_group, identity_cocycle, transformation_groupoid
from etale.groups import cyclic, klein_four, symmetric
from etale.isomorphism import find_iso

import samples


def test_groupoid_round_trip_with_cocycle():
    g, c = transformation_groupoid([0, 1, 2], cyclic(3), lambda x, a: (x + a) % 3)
    back, cb = fio.groupoid_from_dict(json.loads(json.dumps(fio.groupoid_to_dict(g, c))))
    assert (back.src, back.rng, back.inv, back.comp) == (g.src, g.rng, g.inv, g.comp)
    assert [cb(m) for m in back.morphisms] == [c(m) for m in g.morphisms]


@pytest.mark.parametrize("name", sorted(samples.generated_groupoids()))
def test_sample_groupoids_round_trip(name):
    g = samples.generated_groupoids()[name]
    back, cb = fio.groupoid_from_dict(fio.groupoid_to_dict(g))
    assert cb is None
    assert back.comp == g.comp and back.units == g.units


def test_group_round_trip_through_a_table():
    for grp in (cyclic(5), klein_four(), symmetric(3)):
        back = fio.group_from_dict(fio.group_to_dict(grp))
        assert back.table == grp.table and back.identity == grp.identity


def test_element_round_trip():
    g = from_group(cyclic(3))
    d = {"coeffs": [{"morphism": 2, "re": 0.5, "im": -1.0}, {"morphism": 0, "re": 1.0}]}
    f = fio.element_from_dict(d, g)
    assert f.coeffs == {0: 1.0, 2: 0.5 - 1.0j}
    assert fio.element_from_dict(fio.element_to_dict(f), g) == f


def test_dr_element_uses_arrow_triples():
    g = dr.build_dr(dr.cycle_map(3))
    f = fio.element_from_dict({"coeffs": [{"morphism": [0, 3, 0], "re": 2.0}]}, g)
    assert f.coeffs == {(0, 3, 0): 2.0}
    with pytest.raises(fio.FormatError):
        fio.element_from_dict({"coeffs": [{"morphism": [0, 1, 0]}]}, g)


def test_matrix_and_certificate_round_trips():
    A = shifts.ZeroOneMatrix([[1, 1], [1, 0]])
    assert fio.matrix_from_dict(fio.matrix_to_dict(A)).rows == A.rows
    B, h, _ = shifts.higher_block(A, 2)
    full = shifts.ZeroOneMatrix([[1, 1], [1, 1]])
    lead = shifts.shift_lead_code(full, [1, 0])
    ev = shifts.EventualConjCert(lead, 1)
    coe = shifts.eventual_as_coe(full, full, ev)
    for cert in (h, ev, coe):
        d = json.loads(json.dumps(fio.sft_cert_to_dict(cert)))
        assert fio.sft_cert_to_dict(fio.sft_cert_from_dict(d)) == d
    assert shifts.check_conjugacy(A, B, fio.sft_cert_from_dict(fio.sft_cert_to_dict(h))).ok


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 6).flatmap(lambda n: st.lists(st.one_of(st.none(), st.integers(0, n - 1)),
                                                    min_size=n, max_size=n)))
def test_self_map_round_trip(table):
    s = dr.FiniteSelfMap(len(table), table)
    back = fio.self_map_from_dict(json.loads(json.dumps(fio.self_map_to_dict(s))))
    assert back.table == s.table and back.codomain == s.codomain


def test_groupoid_iso_file():
    g = from_equivalence([[0, 1]])
    phi = find_iso(g, g)
    back = fio.iso_from_dict({"map": list(phi.map)}, g, g)
    assert back.map == phi.map
    with pytest.raises(fio.FormatError) as err:
        fio.iso_from_dict({"map": [0]}, g, g, "iso.json")
    assert err.value.location == "iso.json.map"


def test_dr_iso_from_signs():
    s = dr.cycle_map(3)
    theta = fio.dr_iso_from_dict({"h": [0, 2, 1], "signs": [-1, -1, -1]}, s, s)
    assert dr.check_dr_iso(theta).ok
    with pytest.raises(fio.FormatError):
        fio.dr_iso_from_dict({"h": [0, 2, 1], "signs": [2, 1, 1]}, s, s)


@pytest.mark.parametrize("data,location", [
    ({"units": [0], "morphisms": [{"id": 0, "src": 0, "rng": 0}], "comp": []}, "g.morphisms[0]"),
    ({"units": [0]}, "g"),
    ({"units": [0], "morphisms": "none", "comp": []}, "g"),
])
def test_groupoid_format_errors_name_the_field(data, location):
    with pytest.raises(fio.FormatError) as err:
        fio.groupoid_from_dict(data, "g")
    assert err.value.location == location


@pytest.mark.parametrize("data,location", [
    ({"size": 2, "entries": [1, 1, 1]}, "A"),
    ({"size": 2, "entries": [1, 1, "x", 1]}, "A.entries"),
    ({"size": 2}, "A"),
])
def test_matrix_format_errors(data, location):
    with pytest.raises(fio.FormatError) as err:
        fio.matrix_from_dict(data, "A")
    assert err.value.location == location


def test_self_map_format_errors():
    with pytest.raises(fio.FormatError) as err:
        fio.self_map_from_dict({"size": 2, "map": [1]}, "S")
    assert err.value.location == "S"
    with pytest.raises(fio.FormatError) as err:
        fio.self_map_from_dict({"size": 2, "map": [1, None], "domain": [1, 1]}, "S")
    assert err.value.location == "S.domain"
    with pytest.raises(fio.FormatError):
        fio.self_map_from_dict({"size": 2, "map": [1, 5]}, "S")


def test_group_format_errors():
    with pytest.raises(fio.FormatError) as err:
        fio.group_from_dict({"kind": "table", "table": [[0, 1], [0, 1]]}, "G")
    assert err.value.location == "G"
    with pytest.raises(fio.FormatError):
        fio.group_from_dict({"kind": "dihedral"}, "G")
    with pytest.raises(fio.FormatError):
        fio.group_from_dict({"kind": "product", "factors": []}, "G")


def test_certificate_format_errors():
    with pytest.raises(fio.FormatError) as err:
        fio.sft_cert_from_dict({"type": "coe", "h": {"window": 1, "block_map": [[[0], 0]]}}, "c")
    assert err.value.location == "c"
    with pytest.raises(fio.FormatError) as err:
        fio.sft_cert_from_dict({"type": "conjugacy", "h": {"window": 1, "block_map": [[0, 0]]}}, "c")
    assert err.value.location == "c.h.block_map[0]"
    with pytest.raises(fio.FormatError):
        fio.ck_terms_from_list([[[0], [1]]], "ck")


def test_load_json_errors(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{\n  'x': 1\n}")
    with pytest.raises(fio.FormatError) as err:
        fio.load_json(bad)
    assert "line 2" in str(err.value) and err.value.location == str(bad)
    with pytest.raises(fio.FormatError):
        fio.load_json(tmp_path / "absent.json")


def test_digest_is_sha256_of_the_bytes(tmp_path):
    import hashlib
    p = tmp_path / "x.json"
    p.write_bytes(b"[1, 2]\n")
    assert fio.digest(p) == hashlib.sha256(b"[1, 2]\n").hexdigest()


def test_identity_cocycle_labels_survive_serialisation():
    z4 = from_group(cyclic(4))
    c = identity_cocycle(z4, cyclic(4))
    _, back = fio.groupoid_from_dict(fio.groupoid_to_dict(z4, c))
    assert [back(m) for m in z4.morphisms] == [c(m) for m in z4.morphisms]
