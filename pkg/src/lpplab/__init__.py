"""Exact semi-discrete last passage percolation and difference-profile experiments."""
from .env import Grid, LineEnsemble, RngSpec, fixture_ensemble, make_grid, sample_brownian_lines
from .lpp import (
    BoundaryData,
    Geodesic,
    LatticePoint,
    Profile,
    geodesic,
    lpp_profile,
    lpp_profile_with_boundary,
    lpp_value,
    pitman_transform,
)
from .report import ExperimentReport

__version__ = "0.1.0"
