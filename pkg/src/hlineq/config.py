"""Numerical tolerances and optimizer defaults shared across the package."""

from dataclasses import dataclass


@dataclass(frozen=True)
class Tolerances:
    # core algebra
    symmetry: float = 1e-12
    roundtrip: float = 1e-12
    # alternating maximization
    alt_rel_change: float = 1e-12
    alt_max_sweeps: int = 500
    # projected gradient ascent
    pga_initial_step: float = 1.0
    pga_min_step: float = 1e-14
    pga_max_iter: int = 2000
    pga_sufficient_increase: float = 0.25
    # certificate re-evaluation
    certificate: float = 1e-10
    sandwich: float = 1e-12
    optimizer: float = 1e-6
    interchange: float = 1e-12
    # slope acceptance bands
    ksz_slope_band: float = 0.1
    diagonal_slope_band: float = 0.05


TOL = Tolerances()

DEFAULT_RESTARTS = 32
