"""Numerical laboratory for the free-energy upper bound of a dilute Bose gas.

Submodules
----------
regime
    Scaling dictionary between the thermodynamic box and the rescaled torus.
scattering
    Lattice scattering equation, box scattering length and full-space oracle.
bogoliubov
    High-momentum and shell Bogoliubov coefficients, dispersion, constants.
thermal
    Gibbs sums, quadratures and the assembled free-energy report.
fockmicro
    Exact truncated Fock-space simulator for the operator identities.
localization
    Dirichlet window function and density bookkeeping.
cli
    Command-line front end.
"""

from .regime import RegimeParams, MomentumSets, derive_regime, momentum_sets, regime_from_N
from .scattering import (
    Potential,
    ScatteringSolution,
    soft_sphere,
    zero_potential,
    parse_potential,
    rescaled_fourier,
    solve_box_scattering,
    box_scattering_length,
    full_space_scattering_length,
    scattering_norm_report,
)
from . import bogoliubov, fockmicro, localization, thermal

__all__ = [
    "RegimeParams",
    "MomentumSets",
    "derive_regime",
    "momentum_sets",
    "regime_from_N",
    "Potential",
    "ScatteringSolution",
    "soft_sphere",
    "zero_potential",
    "parse_potential",
    "rescaled_fourier",
    "solve_box_scattering",
    "box_scattering_length",
    "full_space_scattering_length",
    "scattering_norm_report",
    "fockmicro",
    "localization",
]

__version__ = "0.1.0"
