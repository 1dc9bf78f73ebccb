"""Thickness of a few polygons, and where it comes from.

Run with ``python demos/01_thickness_basics.py``.
"""
# %%
import math

import numpy as np

from symtight.generators import TorusKnotSpec, circle, stadium, torus_knot
from symtight.link import total_length
from symtight.thickness import ropelength, thickness

# %% [markdown]
# A regular 512-gon of radius 1. Every vertex has the same polygonal radius
# of curvature, cos(pi/n), and every antipodal chord is a strut of half
# length just under 1, so the ropelength sits right at 2*pi.

# %%
c = circle(512, 1.0)
rep = thickness(c, 1e-6)
print(f"circle: thickness {rep.thickness:.6f}, min_rad {rep.min_rad:.6f}, "
      f"{rep.n_struts} struts, {rep.n_kinks} kinks")
print(f"        ropelength {ropelength(c):.6f}  (2 pi = {2 * math.pi:.6f})")

# %% [markdown]
# A stadium: unit semicircles joined by straights of length 2. The straights
# face each other across distance 2, so they carry struts at the same level
# as the curvature bound of the round ends.

# %%
s = stadium(512, 2.0)
rep = thickness(s, 1e-3)
print(f"stadium: length {total_length(s):.5f} (2 pi + 4 = {2 * math.pi + 4:.5f}), "
      f"thickness {rep.thickness:.5f}")
print(f"         {rep.n_struts} struts, {rep.n_kinks} kinks, ropelength {ropelength(s):.5f}")

# %% [markdown]
# A (2,5) torus knot seed is far from tight: its thickness is set by a few
# short chords between neighbouring strands.

# %%
k = torus_knot(TorusKnotSpec(2, 5, 500, "q"))
rep = thickness(k, 1e-3)
lens = np.array([st.half_length for st in rep.struts])
print(f"torus (2,5): thickness {rep.thickness:.4f}, ropelength {ropelength(k):.2f}")
print(f"             struts within 0.1% of the minimum: {rep.n_struts}, "
      f"half lengths {lens.min():.5f} .. {lens.max():.5f}")
