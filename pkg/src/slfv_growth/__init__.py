"""Simulation and exact-computation toolkit for planar growth driven by
elliptical reproduction events.

Subpackages cover exact ellipse geometry, Poisson event streams, the
event-driven ancestral (dual) growth simulator, the greedy rightmost-point
chain and its speed lower bound, lattice first-passage percolation with the
cell discretiser, the two-column cube-pile growth model (Monte Carlo and
exact discretised chain), the set-valued forward simulator, and an
experiment harness with a CLI.
"""

__version__ = "0.1.0"

from . import geometry, events, ancestral, express, percolation, twocolumn, forward

__all__ = [
    "geometry",
    "events",
    "ancestral",
    "express",
    "percolation",
    "twocolumn",
    "forward",
]
