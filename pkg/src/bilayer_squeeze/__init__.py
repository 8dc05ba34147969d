"""Desk-scale toolkit for the spin-squeezing dynamical phase transition in
power-law-interacting bilayer XXZ models: analytic Bogoliubov stability,
discrete truncated Wigner dynamics, an exact small-system oracle, and the
scaling-collapse exponent machinery."""

__version__ = "0.1.0"

from .lattice import (  # noqa: F401
    Boundary,
    CouplingTable,
    Geometry,
    LatticeSpec,
    SiteIndex,
    build_coupling_table,
    build_positions,
    coupling_strength,
    displacement,
)
