"""Green functions, escape probabilities and capacities."""

from .capacity import (
    CapacityEstimate,
    EscapeEstimate,
    EstimatorConfig,
    capacity_bracket,
    capacity_mc,
    capacity_solve,
    escape_mc,
    prefix_range_capacities,
    range_capacity,
    set_capacity,
)
from .green import (
    ExactLatticeGreen,
    GreenEstimate,
    GreenSource,
    TruncatedGreen,
    cross_green,
    exact_green_available,
    green_mc,
    green_source,
    green_truncated,
)
from .lattice_green import LatticeGreen, lattice_green
from .sandwich import DyadicReport, SandwichReport, capacity_sandwich_check, dyadic_sandwich, sandwich_sets
from .variational import FrankWolfeResult, SimplexMeasure, empirical_measure, energy, equilibrium_measure, minimize_energy

__all__ = [
    "CapacityEstimate",
    "EscapeEstimate",
    "EstimatorConfig",
    "capacity_bracket",
    "capacity_mc",
    "capacity_solve",
    "escape_mc",
    "prefix_range_capacities",
    "range_capacity",
    "set_capacity",
    "ExactLatticeGreen",
    "GreenEstimate",
    "GreenSource",
    "TruncatedGreen",
    "cross_green",
    "exact_green_available",
    "green_mc",
    "green_source",
    "green_truncated",
    "LatticeGreen",
    "lattice_green",
    "DyadicReport",
    "SandwichReport",
    "capacity_sandwich_check",
    "dyadic_sandwich",
    "sandwich_sets",
    "FrankWolfeResult",
    "SimplexMeasure",
    "empirical_measure",
    "energy",
    "equilibrium_measure",
    "minimize_energy",
]
