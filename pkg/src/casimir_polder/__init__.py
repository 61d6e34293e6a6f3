"""Casimir-Polder energy of a small sphere above a uniaxially corrugated
Dirichlet surface, via a Nyström solution of the boundary equation."""
from .analysis import (
    EtaEstimate,
    SweepRecord,
    anomalous_dimension,
    drop_off_exponent,
    rise_exponent,
    sweep,
    sweep_profile,
    universal_tail,
)
from .energy import PLANAR_COEFFICIENT, EnergyResult, MomentumGrid, NumericalSettings, energy_coefficient, energy_ratio
from .profiles import DimensionlessProfile, HeightProfile, ProfileKind, reduce
from .solver import LineGrid, build_grid, flat_oracle_delta, solve_delta_m12

__version__ = "0.1.0"
