"""Nodal-free geometric phases of parallel-transporting unitary families.

Submodules
----------
linalg          small dense unitary/Hermitian linear algebra
transport       Hamiltonian families, sampled paths, parallel transport
holonomy        sigma matrix, gamma products, nodal-free spectrum
bloch           qubit paths, solid angles and the closed-form spectrum
gates           cycle families and diagonal phase gates
interferometer  fringe visibility and phase extraction
io              matrix literals, JSON and CSV exports
cli             scenario runner
"""

from .holonomy import (gamma, gauge_transform, nodal_free_spectrum, phi_of,
                       secular_coefficients, sigma_matrix)
from .linalg import char_poly, eig_unitary, expm_skew
from .policy import DEFAULT, Tolerances
from .transport import HamiltonianFamily, evolve, parallelize, pt_residual

__version__ = "0.1.0"

__all__ = [
    "DEFAULT", "Tolerances", "HamiltonianFamily", "evolve", "parallelize",
    "pt_residual", "sigma_matrix", "gamma", "phi_of", "nodal_free_spectrum",
    "gauge_transform", "secular_coefficients", "eig_unitary", "expm_skew",
    "char_poly",
]
