"""Finite element simulation and spectral checks for a thermoelastic Rayleigh
beam joined to an elastic Rayleigh beam."""

from .model import (
    InitialData,
    PhysicalParams,
    RegimeClass,
    classify_regime,
    default_initial_data,
    rayleigh_dispersion,
    validate,
)
from .fem import CLAMPED, PINNED, Mesh, assemble, build_dofmap, hermite_shapes
from .generator import Generator, NumericalError, StateVector, build_generator, dissipation, energy
from .timestepper import EnergyTrace, project_initial, simulate, step_cn
from .spectral import EigenResult, ResolventScan, branch_fit, eigenvalues, resolvent_norm, resolvent_scan
from .analysis import convergence_study, fit_decay_exponent, regime_report

__version__ = "0.1.0"
