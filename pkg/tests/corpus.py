"""CLI invocations over the files in ``tests/data`` with their expected exit codes.

File arguments ending in ``.json`` are resolved relative to the data directory.
"""

from __future__ import annotations

import shlex
from pathlib import Path

DATA = Path(__file__).with_name("data")

COMMANDS: list[tuple[str, int]] = [
    ("groupoid validate g_z3.json g_relation.json g_swap.json g_z4.json g_klein.json", 0),
    ("groupoid validate g_broken.json", 1),
    ("groupoid validate g_malformed.json", 2),
    ("groupoid structure g_swap.json --bisection 0,3", 0),
    ("groupoid structure g_z3.json", 0),
    ("groupoid build build_group.json", 0),
    ("groupoid build build_equivalence.json", 0),
    ("groupoid build build_bundle.json", 0),
    ("groupoid build build_action.json", 0),
    ("groupoid build build_product.json", 0),
    ("groupoid iso g_swap.json g_swap_relabel.json --map iso_swap_relabel.json", 0),
    ("groupoid iso g_swap.json g_swap.json --map iso_swap_auto.json", 0),
    ("groupoid iso g_z4.json g_klein.json", 1),
    ("groupoid iso g_swap.json g_swap_relabel.json", 0),
    ("groupoid iso g_z4.json g_klein.json --max-units 0", 2),
    ("algebra norm g_z3.json f_z3.json", 0),
    ("algebra norm g_relation.json f_relation.json --unit 0", 0),
    ("algebra check g_relation.json --samples 5", 0),
    ("algebra check g_z3.json", 0),
    ("algebra structure g_z3.json f_z3.json", 0),
    ("algebra structure g_relation.json f_relation.json", 0),
    ("weyl normalizers pair_matrix.json", 0),
    ("weyl normalizers pair_cycle3.json", 0),
    ("weyl reconstruct --pair pair_z4_graded.json", 0),
    ("weyl reconstruct --pair pair_torsion.json", 1),
    ("weyl reconstruct --pair pair_matrix.json", 0),
    ("weyl reconstruct --pair pair_cycle3.json", 0),
    ("weyl roundtrip --self-map S_cycle3.json", 0),
    ("weyl roundtrip --pair pair_z4_graded.json", 0),
    ("weyl roundtrip --self-map S_122.json --cocycle trivial", 0),
    ("sft validate A_golden.json --length 4", 0),
    ("sft validate A_zero_row.json", 1),
    ("sft verify-ck A_golden.json A_full2.json A_period2.json", 0),
    ("sft calc A_golden.json ck_golden.json", 0),
    ("sft calc A_full2.json ck_diag.json", 0),
    ("sft check-conjugacy A_golden.json A_golden.json cert_golden_id.json", 0),
    ("sft check-conjugacy A_golden.json A_golden_2block.json cert_golden_2block.json", 0),
    ("sft check-conjugacy A_full2.json A_full2.json cert_full2_flip.json", 0),
    ("sft check-conjugacy A_full2.json A_full2.json cert_full2_flip_corrupt.json", 1),
    ("sft check-eventual A_full2.json A_full2.json cert_full2_eventual.json", 0),
    ("sft check-coe A_full2.json A_full2.json cert_full2_coe.json", 0),
    ("sft check-coe A_full2.json A_full2.json cert_full2_coe_corrupt.json", 1),
    ("sft check-conjugacy A_full2.json A_full2.json cert_full2_eventual.json", 2),
    ("sft higher-block A_golden.json --m 3", 0),
    ("sft induce A_golden.json --section 1", 1),
    ("sft induce A_period2.json --section 0", 0),
    ("sft induce A_full2.json --section 0", 1),
    ("dyn tower S_partial.json", 0),
    ("dyn build-dr S_122.json", 0),
    ("dyn build-dr S_partial.json", 0),
    ("dyn check-coe S_cycle3.json S_cycle3_rev.json coe_cycle3.json", 0),
    ("dyn check-coe S_cycle3.json S_cycle3_rev.json coe_cycle3_corrupt.json", 1),
    ("dyn check-coe S_fixed2.json S_swap.json coe_fixed_vs_swap.json --mode plain", 1),
    ("dyn check-coe S_fixed2.json S_swap.json coe_fixed_vs_swap.json --mode stabiliser", 1),
    ("dyn check-eventual S_cycle3.json S_cycle3_rev.json coe_cycle3.json", 0),
    ("dyn coe-iso S_cycle3.json S_cycle3_rev.json coe_cycle3.json", 0),
    ("dyn t-conjugacy S_cycle3.json S_cycle3_rev.json --h 0,2,1", 0),
    ("dyn t-conjugacy S_cycle3.json S_cycle3_rev.json --h 0,1,2", 1),
    ("dyn stabilize S_122.json --N 2", 0),
    ("dyn stabilize S_partial.json --N 3", 0),
    ("dyn inverse-limit S_122.json", 0),
    ("dyn inverse-limit S_cycle3.json S_cycle3_rev.json", 0),
    ("dyn inverse-limit S_cycle3.json S_swap.json", 1),
    ("dyn flip-decompose S_union34.json S_union34.json theta_flip.json", 0),
    ("dyn flip-decompose S_cycle3.json S_cycle3.json theta_cycle3_rot.json", 0),
    ("dyn group-action action_swap.json", 0),
    ("dyn weyl-roundtrip S_union34.json", 0),
    ("dyn weyl-roundtrip S_partial.json --cocycle mod:2", 0),
    ("sft frobnicate A_golden.json", 2),
    ("groupoid validate missing.json", 2),
    ("dyn stabilize S_122.json --N -1", 2),
]


def argv(line: str) -> list[str]:
    """Split a corpus line, resolving ``*.json`` arguments against the data directory."""
    return [str(DATA / t) if t.endswith(".json") and not t.startswith("-") else t for t in shlex.split(line)]
