"""Check a chain of equivalences between shifts of finite type.

A higher-block recoding of the golden mean shift is a conjugacy, hence an
eventual conjugacy and a continuous orbit equivalence.  Corrupting one
entry of its block map makes every check fail with a witness word.

Run with ``python3 demos/shift_equivalences.py``.
"""

from __future__ import annotations

from etale import shifts as sft


def main() -> None:
    A = sft.ZeroOneMatrix([[0, 1], [1, 1]])
    print("Cuntz-Krieger relations hold:", sft.verify_ck_relations(A).ok)

    B, code, blocks = sft.higher_block(A, 2)
    print("2-block presentation on", blocks, "->", B.to_list())
    print(sft.implication_chain(A, B, conj=code))

    table = dict(code.block_map)
    word = min(table)
    table[word] = 1 - table[word] if table[word] in (0, 1) else table[word]
    broken = sft.BlockCodeCert(code.window, table, code.lead_maps, code.inverse)
    rep = sft.check_conjugacy(A, B, broken)
    for check in rep.failures():
        print(f"  {check.name}: witness {check.witness}")

    cs = sft.induce_cross_section(A, [(1,)])
    print("first return to [1]:", cs.B.to_list(), "return times", cs.return_times)


if __name__ == "__main__":
    main()
