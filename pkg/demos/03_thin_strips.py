# %% [markdown]
# # Thin strips versus line roads
#
# Replacing each road by a strip of width delta with conductivity a/delta
# gives a tensor Sigma_delta.  As delta shrinks it approaches Sigma_0.

# %%
from roadnet import load_fixture, tensor

rep = tensor.commutation_sweep(load_fixture("circle"), 1.0, [0.04, 0.02, 0.01])
print(rep.format())

# %% [markdown]
# For a straight road everything is explicit: along the strip conductivities
# add, across it they combine harmonically.

# %%
a = 2.0
for delta in (0.04, 0.02, 0.01):
    t, _, _ = tensor.solve_delta(load_fixture("horizontal_line"), a, delta, offset=(0.3, 0.7))
    print(f"delta={delta}: S11={t.S[0, 0]:.10f} (1-d+a={1 - delta + a:.10f})  "
          f"S22={t.S[1, 1]:.10f} (1/(1-d+d^2/a)={1 / (1 - delta + delta**2 / a):.10f})")
