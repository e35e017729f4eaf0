"""Rebuild a groupoid from its algebra and diagonal.

Runs the Weyl construction on a finite principal groupoid and on the
Deaconu-Renault groupoid of a 3-cycle, then shows the ``Z_4`` versus
``Z_2 x Z_2`` obstruction appearing when the grading is trivial.

Run with ``python3 demos/weyl_reconstruction.py``.
"""

from __future__ import annotations

from etale import dr, weyl
from etale.groupoid import from_equivalence, from_group, trivial_cocycle
from etale.groups import cyclic, klein_four
from etale.isomorphism import find_iso


def main() -> None:
    g = from_equivalence([[0, 1, 2], [3]])
    theta = weyl.canonical_theta(g, trivial_cocycle(g))
    print(f"equivalence relation with {g.size} arrows -> Weyl groupoid with "
          f"{theta.weyl_groupoid.size} arrows, theta ok: {theta.report.ok}")

    s = dr.cycle_map(3)
    dg = dr.build_dr(s)
    theta = weyl.canonical_theta(dg, dr.cocycle_cX(dg))
    print(f"3-cycle: {len(theta.weyl.keys)} classes in the window, theta ok: {theta.report.ok}")
    print("  theta(0, 3, 0) =", theta((0, 3, 0)))

    z4, k4 = from_group(cyclic(4)), from_group(klein_four())
    a, _ = weyl.weyl_finite(weyl.pair(z4))
    b, _ = weyl.weyl_finite(weyl.pair(k4))
    print(f"Z4 and Z2xZ2 with trivial grading: Weyl groupoids of sizes {a.size} and {b.size}, "
          f"groupoids isomorphic: {bool(find_iso(z4, k4))}")


if __name__ == "__main__":
    main()
