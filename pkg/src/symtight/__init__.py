"""Thickness, ropelength and symmetric tightening of polygonal knots and links."""

from .criticality import CriticalityCertificate, certify, shortening_probe
from .fileio import read_link, write_link
from .generators import (TorusKnotSpec, chain_with_ring, circle, connect_sum_mirror, perturb,
                         split_link_with_ring, square_knot, stadium, three_chain, torus_knot)
from .link import ArcPosition, LinkError, PolyLink, resample, total_length
from .symmetry import (CurveAction, Isometry, SymmetryGroup, average_field, check_invariance,
                       cyclic_group, dihedral_group, group_actions, mirror_group, parse_group,
                       pushforward, symmetrize)
from .thickness import Kink, Strut, ThicknessReport, min_rad, ropelength, strut_search, thickness
from .tighten import TightenOptions, TightenTrace, rescale_to_thickness, tighten
from .variation import constraint_rows, delta_length, delta_thickness, length_gradient

__all__ = [
    "ArcPosition", "CriticalityCertificate", "CurveAction", "Isometry", "Kink", "LinkError",
    "PolyLink", "Strut", "SymmetryGroup", "ThicknessReport", "TightenOptions", "TightenTrace",
    "TorusKnotSpec", "average_field", "certify", "chain_with_ring", "check_invariance", "circle",
    "connect_sum_mirror", "constraint_rows", "cyclic_group", "delta_length", "delta_thickness",
    "dihedral_group", "group_actions", "length_gradient", "min_rad", "mirror_group",
    "parse_group", "perturb", "pushforward", "read_link", "resample", "rescale_to_thickness",
    "ropelength", "shortening_probe", "split_link_with_ring", "square_knot", "stadium",
    "strut_search", "symmetrize", "thickness", "three_chain", "tighten", "torus_knot",
    "total_length", "write_link",
]
