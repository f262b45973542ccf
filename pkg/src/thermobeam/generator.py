"""First-order evolution operator, energy inner product and dissipation.

State ordering is ``(q, p, th)``: beam displacement coefficients, beam
velocity coefficients, temperature coefficients.  The operator acts by

    q' = p
    Mb p' = -Kb q + gamma D^T th
    Mth th' = -Kth th - gamma D p

and the energy metric is ``blockdiag(Kb, Mb, Mth)``.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.linalg as sla

from .fem import SystemMatrices


class NumericalError(RuntimeError):
    """A linear solve, factorization or eigensolve could not be completed."""


@dataclass(frozen=True)
class StateVector:
    q: np.ndarray
    p: np.ndarray
    th: np.ndarray

    def __post_init__(self):
        for name in ("q", "p", "th"):
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.ndim != 1 or not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} must be a finite 1-d array")
            object.__setattr__(self, name, arr)

    def to_array(self) -> np.ndarray:
        return np.concatenate([self.q, self.p, self.th])

    @classmethod
    def from_array(cls, x: np.ndarray, n_beam: int) -> "StateVector":
        x = np.asarray(x, dtype=float)
        return cls(x[:n_beam], x[n_beam : 2 * n_beam], x[2 * n_beam :])

    def __add__(self, other):
        return StateVector(self.q + other.q, self.p + other.p, self.th + other.th)

    def __mul__(self, c):
        return StateVector(c * self.q, c * self.p, c * self.th)

    __rmul__ = __mul__


def _cho(M, name):
    try:
        return sla.cho_factor(M)
    except sla.LinAlgError as exc:
        raise NumericalError(f"{name} is not symmetric positive definite: {exc}") from None


class Generator:
    """Discrete evolution operator built from assembled system matrices.

    Factorizations of the mass, stiffness and conductivity matrices are made
    once at construction.  Instances are treated as immutable.
    """

    def __init__(self, system: SystemMatrices, gamma: float):
        self.system = system
        self.gamma = float(gamma)
        self.n_beam = system.Mb.shape[0]
        self.n_heat = system.Mth.shape[0]
        if system.Kb.shape != (self.n_beam, self.n_beam) or system.D.shape != (self.n_heat, self.n_beam):
            raise ValueError("system matrices have inconsistent shapes")
        self.dim = 2 * self.n_beam + self.n_heat
        self._mb = _cho(system.Mb, "beam mass matrix")
        self._mth = _cho(system.Mth, "heat mass matrix")
        self._kb = _cho(system.Kb, "beam stiffness matrix")
        self._kth = _cho(system.Kth, "conductivity matrix")
        self._lock = threading.Lock()
        self._steppers = {}

    # -- block pieces used by the time stepper --------------------------------
    @cached_property
    def energy_metric(self) -> np.ndarray:
        s = self.system
        return sla.block_diag(s.Kb, s.Mb, s.Mth)

    @cached_property
    def mass_weight(self) -> np.ndarray:
        """``blockdiag(I, Mb, Mth)``, the left-hand weight of the mass-weighted form."""
        s = self.system
        return sla.block_diag(np.eye(self.n_beam), s.Mb, s.Mth)

    @cached_property
    def weighted_operator(self) -> np.ndarray:
        """Right-hand side matrix ``K`` with ``mass_weight @ A == K``."""
        s, g = self.system, self.gamma
        nb, nh = self.n_beam, self.n_heat
        K = np.zeros((self.dim, self.dim))
        K[:nb, nb : 2 * nb] = np.eye(nb)
        K[nb : 2 * nb, :nb] = -s.Kb
        K[nb : 2 * nb, 2 * nb :] = g * s.D.T
        K[2 * nb :, nb : 2 * nb] = -g * s.D
        K[2 * nb :, 2 * nb :] = -s.Kth
        return K

    # -- operator action -------------------------------------------------------
    def split(self, x):
        nb = self.n_beam
        return x[:nb], x[nb : 2 * nb], x[2 * nb :]

    def apply_array(self, x: np.ndarray) -> np.ndarray:
        s, g = self.system, self.gamma
        q, p, th = self.split(np.asarray(x))
        dp = sla.cho_solve(self._mb, -s.Kb @ q + g * (s.D.T @ th))
        dth = sla.cho_solve(self._mth, -s.Kth @ th - g * (s.D @ p))
        return np.concatenate([p, dp, dth])

    def apply(self, s: StateVector) -> StateVector:
        self._check(s)
        return StateVector.from_array(self.apply_array(s.to_array()), self.n_beam)

    def solve_array(self, f: np.ndarray) -> np.ndarray:
        """Solve ``A x = f``; the operator is invertible (0 lies in its resolvent set)."""
        s, g = self.system, self.gamma
        fq, fp, fth = self.split(np.asarray(f))
        p = fq
        th = -sla.cho_solve(self._kth, s.Mth @ fth + g * (s.D @ p))
        q = sla.cho_solve(self._kb, g * (s.D.T @ th) - s.Mb @ fp)
        return np.concatenate([q, p, th])

    def solve(self, f: StateVector) -> StateVector:
        self._check(f)
        return StateVector.from_array(self.solve_array(f.to_array()), self.n_beam)

    def dense(self) -> np.ndarray:
        """Explicit matrix of the operator (mass solves applied blockwise)."""
        K = self.weighted_operator
        nb = self.n_beam
        A = K.copy()
        A[nb : 2 * nb] = sla.cho_solve(self._mb, K[nb : 2 * nb])
        A[2 * nb :] = sla.cho_solve(self._mth, K[2 * nb :])
        return A

    @cached_property
    def energy_factor(self) -> np.ndarray:
        """Upper-triangular ``F`` with ``F.T @ F == energy_metric``."""
        return sla.cholesky(self.energy_metric, lower=False)

    @cached_property
    def energy_matrix(self) -> np.ndarray:
        """``F A F^-1``: the operator in energy-orthonormal coordinates."""
        F = self.energy_factor
        X = F @ self.dense()
        return sla.solve_triangular(F, X.T, trans="T", lower=False).T

    def energy_inner(self, x: np.ndarray, y: np.ndarray) -> float:
        return float(x @ (self.energy_metric @ y))

    def _check(self, s: StateVector):
        if (len(s.q), len(s.p), len(s.th)) != (self.n_beam, self.n_beam, self.n_heat):
            raise ValueError(
                f"state dimensions {(len(s.q), len(s.p), len(s.th))} do not match "
                f"generator {(self.n_beam, self.n_beam, self.n_heat)}"
            )


def build_generator(system: SystemMatrices, gamma: float) -> Generator:
    return Generator(system, gamma)


def energy(gen: Generator, s: StateVector) -> float:
    """Discrete energy ``(q.Kb.q + p.Mb.p + th.Mth.th) / 2``."""
    gen._check(s)
    m = gen.system
    return 0.5 * float(s.q @ m.Kb @ s.q + s.p @ m.Mb @ s.p + s.th @ m.Mth @ s.th)


def dissipation(gen: Generator, s: StateVector) -> float:
    """Rate of energy loss ``th.Kth.th`` (conductivity times squared temperature gradient)."""
    gen._check(s)
    return float(s.th @ gen.system.Kth @ s.th)


def random_state(gen: Generator, rng: np.random.Generator) -> StateVector:
    return StateVector.from_array(rng.standard_normal(gen.dim), gen.n_beam)
