"""Split a groupoid isomorphism into a conjugacy and a flip.

The self-map is a 3-cycle next to a 4-cycle.  The isomorphism keeps the
orientation on the 3-cycle and reverses it on the 4-cycle, so the
decomposition finds a conjugate part and a flipped part.

Run with ``python3 demos/flip_conjugacy.py``.
"""

from __future__ import annotations

from etale import dr
from etale import dynamics as dyn


def main() -> None:
    S = dr.disjoint_union_maps([dr.cycle_map(3), dr.cycle_map(4)])
    g = dr.build_dr(S)
    theta = dr.dr_iso_from_function(g, g, (0, 1, 2, 3, 6, 5, 4), lambda x, k, y: k if x < 3 else -k)
    fd = dyn.flip_decomposition(S, S, theta)
    print("conjugate part X1:", fd.X1)
    print("flipped part X2:", fd.X2)
    print(fd.report)

    lim = dyn.inverse_limit(S)
    print("inverse limit cycle type:", lim.cycle_type())
    rep = dyn.check_stabilization_iso(S, 2)
    print("stabilisation with N = 2 ok:", rep.ok)


if __name__ == "__main__":
    main()
