from __future__ import annotations

import io
import json
import os
import subprocess
import sys
from collections import Counter

import pytest

from etale import algebra, cli, dr, dynamics, groupoid, isomorphism, shifts, weyl

from corpus import COMMANDS, DATA, argv

MODULES = (groupoid, isomorphism, algebra, weyl, shifts, dr, dynamics)

#: Every library operation a user can reach; each must be dispatched by exactly one subcommand.
LIBRARY_OPERATIONS = {
    "validate", "check_cocycle", "isotropy", "isotropy_group", "orbits", "is_bisection", "kernel",
    "grading_blocks", "from_group", "from_equivalence", "from_group_bundle", "transformation_groupoid",
    "product_with_R", "check_iso", "find_iso", "regular_rep", "reduced_norm", "sup_norm", "evaluate_j",
    "convolve", "adjoint", "diagonal_part", "is_diagonal", "relative_commutant_basis", "fiber_at", "degree",
    "graded_components", "enumerate_normalizers", "alpha", "unitary_U", "in_identity_component", "equivalent",
    "build_weyl_groupoid", "canonical_theta", "iso_to_algebra_iso", "algebra_iso_to_groupoid_iso",
    "validate_matrix", "admissible_words", "verify_ck_relations", "ck_multiply", "ck_adjoint", "omega",
    "gauge_degree", "gauge_scale", "tau", "check_conjugacy", "check_eventual_conjugacy", "check_coe",
    "higher_block", "induce_cross_section", "iterate_tower", "build_dr", "stab", "stab_ess", "stab_min",
    "stab_ess_min", "check_local_coe", "check_eventual_conjugacy_local", "groupoid_iso_from_coe",
    "coe_from_groupoid_iso", "T_map", "phi_T", "check_T_conjugacy", "stabilize", "check_stabilization_iso",
    "inverse_limit", "check_two_sided_conjugacy", "flip_decomposition", "group_action_rigidity", "cocycle_cX",
}


def run(line: str, threads: int | None = None) -> tuple[int, str]:
    args = argv(line)
    if threads is not None:
        args = ["--threads", str(threads)] + args
    out = io.StringIO()
    code = cli.main(args, out)
    return code, out.getvalue()


@pytest.mark.parametrize("line,expected", COMMANDS, ids=[c for c, _ in COMMANDS])
def test_corpus_exit_codes(line, expected, capsys):
    code, text = run(line)
    assert code == expected
    if text:
        report = json.loads(text)
        assert report["status"] == {0: "pass", 1: "fail", 2: "error"}[code]


def test_every_operation_is_dispatched_exactly_once():
    counts = Counter(op for ops in cli.OPERATIONS.values() for op in ops)
    assert all(n == 1 for n in counts.values())
    assert set(counts) == LIBRARY_OPERATIONS


def test_every_dispatched_operation_exists():
    for op in LIBRARY_OPERATIONS:
        assert any(callable(getattr(m, op, None)) for m in MODULES), op


def test_every_subcommand_is_exercised_by_the_corpus():
    used = {" ".join(line.split()[:2]) for line, _ in COMMANDS}
    assert set(cli.OPERATIONS) <= used


def test_validate_valid_groupoid():
    code, text = run("groupoid validate g_z3.json")
    assert code == 0 and json.loads(text)["status"] == "pass"


def test_roundtrip_on_a_three_cycle_returns_an_iso_certificate():
    code, text = run("weyl roundtrip --self-map S_cycle3.json")
    assert code == 0
    result = json.loads(text)["result"]
    assert result["kappa"] == result["recovered"]
    assert result["kappa"]["h"] == [0, 1, 2]


def test_corrupted_coe_certificate_reports_a_witness_word():
    code, text = run("sft check-coe A_full2.json A_full2.json cert_full2_coe_corrupt.json")
    assert code == 1
    failed = [c for r in json.loads(text)["reports"] for c in r["checks"] if c["status"] == "fail"]
    assert failed and all("witness" in c for c in failed)
    word = failed[0]["witness"][0]
    assert isinstance(word, list) and all(s in (0, 1) for s in word)


def test_malformed_input_reports_its_location():
    code, text = run("groupoid validate g_malformed.json")
    report = json.loads(text)
    assert code == 2 and "morphisms[0]" in report["location"] + report["error"]


@pytest.mark.parametrize("args", [["sft", "frobnicate"], [], ["groupoid", "validate", "--bogus"],
                                  ["--threads", "0", "groupoid", "validate", str(DATA / "g_z3.json")]])
def test_usage_errors_exit_2(args, capsys):
    assert cli.main(args, io.StringIO()) == 2


def test_schema_flag_prints_the_file_formats():
    out = io.StringIO()
    assert cli.main(["--schema"], out) == 0
    schemas = json.loads(out.getvalue())
    assert "groupoid" in schemas and "self_map" in schemas


def test_output_is_independent_of_thread_count():
    for line, _ in COMMANDS:
        assert run(line, 1) == run(line, 4), line


def test_timing_is_opt_in():
    _, text = run("groupoid validate g_z3.json")
    assert "elapsed_seconds" not in json.loads(text)
    code, text = run("--timing groupoid validate g_z3.json")
    assert code == 0 and "elapsed_seconds" in json.loads(text)


def _subprocess(args: list[str], env_extra: dict[str, str]) -> subprocess.CompletedProcess:
    env = dict(os.environ, **env_extra)
    return subprocess.run([sys.executable, "-m", "etale.cli"] + args, capture_output=True, text=True, env=env)


def test_eps_environment_override():
    args = argv("groupoid validate g_z3.json")
    p = _subprocess(args, {"EPS": "1e-6"})
    assert p.returncode == 0
    assert float(json.loads(p.stdout)["eps"]) == pytest.approx(1e-6)
    default = _subprocess(args, {})
    assert float(json.loads(default.stdout)["eps"]) == pytest.approx(1e-9)
    for value in ("-1", "abc"):
        bad = _subprocess(args, {"EPS": value})
        assert bad.returncode == 2
        assert json.loads(bad.stdout)["location"] == "EPS"
