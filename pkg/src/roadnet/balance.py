"""Balance test for patterns whose effective trace reaches ``2 + a*l``."""

from dataclasses import dataclass, field

import numpy as np


@dataclass
class BalanceReport:
    straight_ok: bool
    non_straight_arcs: list
    node_degree_ok: bool
    low_degree_nodes: list  # positions of nodes with fewer than two distinct arcs
    balance_ok: bool
    residuals: list = field(default_factory=list)  # (position, residual vector)
    tol: float = 1e-9

    @property
    def is_balanced(self):
        return self.straight_ok and self.node_degree_ok and self.balance_ok

    def format(self):
        flag = lambda ok: "yes" if ok else "NO"  # noqa: E731
        rows = [
            f"balanced        : {flag(self.is_balanced)}",
            f"straight arcs   : {flag(self.straight_ok)}"
            + (f"  (curved: {self.non_straight_arcs})" if self.non_straight_arcs else ""),
            f"node degree >= 2: {flag(self.node_degree_ok)}",
            f"direction sums  : {flag(self.balance_ok)}  (tol {self.tol:g})",
        ]
        for pos, r in self.residuals:
            rows.append(
                f"  node ({pos[0]:.6f}, {pos[1]:.6f})  residual ({r[0]: .3e}, {r[1]: .3e})"
                f"  |r| = {np.hypot(*r):.3e}"
            )
        return "\n".join(rows)

    def csv_rows(self):
        out = ["node_x,node_y,res_x,res_y,norm"]
        for pos, r in self.residuals:
            out.append(f"{pos[0]:.12g},{pos[1]:.12g},{r[0]:.6e},{r[1]:.6e},{np.hypot(*r):.6e}")
        out.append(f"is_balanced,{int(self.is_balanced)}")
        return "\n".join(out)


def check_balance(pattern, tol=1e-9):
    """Report which balance conditions a pattern satisfies.

    The three conditions are: every arc is straight; every node joins at least
    two distinct arcs; and at every node ``V`` the unit vectors
    ``(V - V_i) / |V - V_i|`` sum to zero, where ``V_i`` is the far endpoint
    of the i-th incident segment in the unfolded plane.  Arcs that close on
    themselves smoothly (full periodic lines, circles) contribute no nodes.
    """
    curved = [i for i, arc in enumerate(pattern.arcs) if arc.straight_tangent is None]
    low, residuals = [], []
    for node in pattern.nodes:
        if len({e.arc for e in node.ends}) < 2:
            low.append(node.position)
        r = np.zeros(2)
        for e in node.ends:
            r -= e.away / np.linalg.norm(e.away) if not np.allclose(e.away, 0) else e.tangent
        residuals.append((node.position, r))
    balance_ok = all(np.hypot(*r) <= tol for _, r in residuals)
    return BalanceReport(not curved, curved, not low, low, balance_ok, residuals, tol)
