"""Sparse descriptor discretization and energy-exact simulation of
port-Hamiltonian PDE models, with mechanical verification of their
structural identities."""

from . import (bench_cli, discrete_ops, dzektser, errors, interconnect,
               maxwell2d, numerics, phcore, plates, wave1d)
from .discrete_ops import (Grid1D, SbpPair, StaggeredGrid2D,
                           assemble_kernel_matrix, assemble_p1_mass,
                           assemble_p1_stiffness, apply_dirichlet,
                           sbp_gradient_1d, sbp_operators_2d)
from .numerics import (LinearSolveReport, MidpointStepper,
                       implicit_midpoint_step, integrate, power_iteration,
                       solve_linear, solve_saddle)
from .phcore import (BlockLayout, DescriptorPHSystem, PowerBalanceReport,
                     StructureDiagnostics, Trajectory, check_structure,
                     hamiltonian, legendre_variant, power_balance,
                     reconstruct_hamiltonian, transposition_check)

__version__ = "0.1.0"
