# %% [markdown]
# # How far a pattern is from a periodic graph function
#
# d measures how well the coordinates x_k, restricted to the pattern, can be
# matched by periodic functions on the pattern graph.  A closed ring matches
# them exactly (d = 0); a line wrapping the torus cannot (d = 1).  For large a
# the trace grows like 2 + d^2 a.

# %%
import math

from roadnet import compute_d, load_fixture, tensor

for name in ("circle", "horizontal_line", "circle_segment"):
    res = compute_d(load_fixture(name), grid_n=8, h=0.02)
    print(f"{name:16s} d^2 = {res.d_squared:.6f}")
print("circle+segment closed form", 1 / (0.8 + math.pi / 20))

# %%
cs = load_fixture("circle_segment")
d2 = compute_d(cs, 8, 0.02).d_squared
print(tensor.large_a_bound_check(cs, [10.0, 100.0], d2).format())
