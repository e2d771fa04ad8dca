# %% [markdown]
# # Balanced patterns
#
# A node is balanced when the unit tangents leaving it sum to zero.  When every
# node is balanced (and the arcs are straight) the corrector load vanishes, so
# the effective tensor is just the arithmetic average: trace = 2 + a*l.

# %%
import math

from roadnet import check_balance, load_fixture, tensor

for name in ("grid", "hexagon", "diagonal_line", "t_junction", "figure1"):
    rep = check_balance(load_fixture(name))
    print(f"{name:14s} balanced={rep.is_balanced}")

# %% [markdown]
# The hexagon fixture has three roads at 120 degrees at each node, total length 1 + sqrt(3).

# %%
a = 5.0
t, mesh, fields = tensor.solve_effective(load_fixture("hexagon"), a, h=0.05)
print(t.S)
print("trace", t.trace, "2 + a l =", 2 + a * (1 + math.sqrt(3)))

# %% [markdown]
# The T-junction is unbalanced: the trace falls short of 2 + a l by the corrector energies.

# %%
t, mesh, fields = tensor.solve_effective(load_fixture("t_junction"), a, h=0.05)
ti = tensor.trace_identity(mesh, a, fields)
print(f"trace {ti.trace:.6f}  2+al {2 + a * t.length:.6f}  energies {ti.energy1:.6f} {ti.energy2:.6f}")
