"""First variations, and what averaging over a symmetry group does to them.

Run with ``python demos/02_symmetric_variations.py``.
"""
# %%
import numpy as np

from symtight.generators import TorusKnotSpec, torus_knot
from symtight.symmetry import average_field, cyclic_group, group_actions
from symtight.thickness import thickness
from symtight.variation import delta_length, delta_thickness

rng = np.random.default_rng(0)

# %% [markdown]
# The (2,5) torus knot in its five-fold mode is invariant under rotation by
# 2 pi / 5 about z. The group acts on the polygon as a cyclic shift of the
# vertex labels.

# %%
link = torus_knot(TorusKnotSpec(2, 5, 500, "q"))
grp = cyclic_group(5)
acts = group_actions(link, grp)
print("vertex shifts:", [a.shift[0] for a in acts])

# %% [markdown]
# Thickness is a minimum of smooth functions, so its one-sided derivative
# along a field is a minimum of linear forms. It is positively homogeneous
# and superadditive.

# %%
rep = thickness(link, 1e-3)
xi, eta = rng.standard_normal((2, link.n_vertices, 3))
a = 2.5
print(f"d(a xi) = {delta_thickness(link, a * xi, rep):+.6f},  a d(xi) = {a * delta_thickness(link, xi, rep):+.6f}")
print(f"d(xi + eta) = {delta_thickness(link, xi + eta, rep):+.6f} >= "
      f"d(xi) + d(eta) = {delta_thickness(link, xi, rep) + delta_thickness(link, eta, rep):+.6f}")

# %% [markdown]
# Averaging a field over the group keeps its effect on length and never
# makes thickness worse. So if some field shortens the curve without
# thinning it, so does its invariant average.

# %%
worst = np.inf
for _ in range(200):
    xi = rng.standard_normal((link.n_vertices, 3))
    avg = average_field(link, grp, acts, xi)
    assert abs(delta_length(link, avg) - delta_length(link, xi)) < 1e-10
    worst = min(worst, delta_thickness(link, avg, rep) - delta_thickness(link, xi, rep))
print(f"200 fields: smallest gain in thickness derivative after averaging {worst:+.2e}")
