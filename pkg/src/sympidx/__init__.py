"""Symplectic path invariants, Hamiltonian and magnetic flows, periodic-orbit
shooting and the action/index bookkeeping of the model Hamiltonians."""
__version__ = "0.1.0"

from .errors import *  # noqa: F401,F403
from .linalg import (det_complex, polar_unitary, rho_eigen, rho_power_check, rho_tilde,
                     standard_J)
from .paths import (Convention, DeltaReport, QuadHamiltonian, SympPath, delta_homogenized,
                    delta_rho, delta_tilde, linear_flow)
from .index import conley_zehnder, crossings, quasimorphism_defect, sturm_compare
from .hamflow import HamSystem, Reparam, Trajectory, delta_under_reparametrization, flow, variational_flow
from .orbits import GrowthFit, OrbitRecord, growth_fit, orbit_delta, period_bound_sweep, shoot_periodic
from .magnetic import (MagneticOracle, MagneticSystem, equations_of_motion, oracle_orbit,
                       sample_level)
from .floer import (CappingShift, GeometryParams, LevelScheme, check_window, derive_levels,
                    homotopy_actions, homotopy_trace, recap_lattice)
