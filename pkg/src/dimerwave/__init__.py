"""Small-amplitude periodic traveling waves in dimer FPUT lattices.

A dimer lattice alternates masses 1 and m and springs with forces V1', V2'.
Traveling waves ``x_j(t) = phi(j - c t)`` with period-2pi profiles are
found as zeros of a Fourier-pseudospectral operator, bifurcating from the
kernel of its linearization at the critical frequency ``omega_c``.
"""

from .errors import (ConfigurationError, ConvergenceError, DimerwaveError, DomainError,
                     InvariantError, VerificationError)
from .linear import LinearData, coercive_solve, critical_frequency, dispersion, kernel_basis
from .model import Material, validate
from .operator import WaveProblem, energy, first_integral, phi_op
from .solver import Branch, BranchPoint, SolverConfig, longwave_branch, newton_solve, solve_branch, solve_point
from .spectral import PeriodicField, inner_product, sobolev_norm
from .symmetry import SymmetryOp, check_solution_symmetry, symmetric_basis

__version__ = "0.1.0"
