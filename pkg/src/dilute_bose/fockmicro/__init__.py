"""Exact truncated-Fock-space checks of the operator algebra.

Submodules: ``space`` (basis and sparse operators), ``transforms`` (Weyl,
quadratic Bogoliubov, Gibbs states), ``cubic`` (cubic generators, parity and
monogamy), ``hamiltonian`` (condensate-shift decomposition) and ``suite``
(the pass/fail table).
"""

from .space import FockSpace, Mode, SparseOperator, indicator, ladder, max_abs, number_operator
from .transforms import (
    diago_check,
    exact_free_energy,
    exact_shell_moments,
    extract_coefficients,
    gibbs_gamma0,
    q2_conjugation_check,
    quadratic_bogoliubov,
    weyl,
)
from .cubic import (
    Layout,
    active_cutoffs,
    chi,
    cubic_generator,
    cubic_product,
    cubic_unitary,
    cutoff_theta,
    monogamy_check,
    moment_transport_check,
    parity_ops,
    random_layout,
    toy_layout,
    triad_layout,
    xi_projector,
    xk_operator,
)
from .hamiltonian import NormalOrdered, hamiltonian_assembly, weyl_decomposition_check
from .suite import CheckRow, run_suite

__all__ = [name for name in dir() if not name.startswith("_")]
