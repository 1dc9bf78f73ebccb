"""A ring held in a mirror plane by symmetry alone.

The ring is not linked with the chain, yet a mirror-symmetric tightening
cannot remove it: it would have to cross the strands of the middle ring,
which pass through the plane. Takes about three minutes.
"""
# %%
import math

from symtight.generators import chain_with_ring, three_chain
from symtight.link import component_lengths
from symtight.symmetry import mirror_group
from symtight.thickness import thickness
from symtight.tighten import tighten

grp = mirror_group((1.0, 0.0, 0.0))

# %%
chain, tr_chain = tighten(three_chain(), grp)
both, tr_both = tighten(chain_with_ring(), grp)
print(f"chain alone     Rop {tr_chain.final.ropelength:.3f}")
print(f"chain and ring  Rop {tr_both.final.ropelength:.3f}")

# %% [markdown]
# The ring ends up wrapped around two tubes of radius 1 with its own
# thickness 1, a stadium of length about 4 pi + 4. An unobstructed ring
# would only add 2 pi.

# %%
ring = component_lengths(both)[-1] / thickness(both).thickness
print(f"ring length {ring:.3f}   (4 pi + 4 = {4 * math.pi + 4:.3f})")
print(f"gap over chain + 2 pi: {tr_both.final.ropelength - tr_chain.final.ropelength - 2 * math.pi:.3f}")
