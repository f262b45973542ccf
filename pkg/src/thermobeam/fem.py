"""Meshes, degree-of-freedom bookkeeping and matrix assembly.

The beam displacement uses C1 cubic Hermite elements over the whole of
``[0, L]``; the node at ``L0`` is shared by both spans, so continuity of
displacement and slope across the interface is built into the unknowns and
the moment/shear interface conditions are natural (no interface terms are
assembled).  The temperature uses continuous piecewise-linear elements on
the span-1 partition with both end values eliminated.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .model import PhysicalParams

CLAMPED = "clamped"
PINNED = "pinned"
BC_MODES = (CLAMPED, PINNED)
DEFAULT_GAUSS = 4


@dataclass(frozen=True)
class Mesh:
    n1: int
    n2: int
    L0: float
    L: float

    def __post_init__(self):
        if self.n1 < 2 or self.n2 < 2:
            raise ValueError("each span needs at least 2 elements")
        if not 0 < self.L0 < self.L:
            raise ValueError("require 0 < L0 < L")

    @classmethod
    def for_params(cls, params: PhysicalParams, n1: int, n2: int) -> "Mesh":
        return cls(int(n1), int(n2), params.L0, params.L)

    @cached_property
    def nodes(self) -> np.ndarray:
        """All beam nodes; index ``n1`` is the interface node ``L0``."""
        x1 = np.linspace(0.0, self.L0, self.n1 + 1)
        x2 = np.linspace(self.L0, self.L, self.n2 + 1)
        x = np.concatenate([x1, x2[1:]])
        x[self.n1] = self.L0
        x[-1] = self.L
        return x

    @property
    def heat_nodes(self) -> np.ndarray:
        return self.nodes[: self.n1 + 1]

    @property
    def n_elements(self) -> int:
        return self.n1 + self.n2

    def span_of(self, e: int) -> int:
        return 1 if e < self.n1 else 2


@dataclass(frozen=True)
class DofMap:
    """Maps node (value, slope) pairs to compact beam unknowns.

    ``beam_index[2*i + k]`` is the compact index of DOF ``k`` (0 value,
    1 slope) of node ``i``, or -1 when the DOF is eliminated by a boundary
    condition.  ``heat_index[i]`` does the same for the span-1 temperature
    nodes.
    """

    mesh: Mesh
    bc_mode: str
    beam_index: np.ndarray
    heat_index: np.ndarray
    removed: tuple
    merged: tuple

    @property
    def n_beam(self) -> int:
        return int(self.beam_index.max()) + 1

    @property
    def n_heat(self) -> int:
        return int(self.heat_index.max()) + 1

    def element_beam_dofs(self, e: int) -> np.ndarray:
        return self.beam_index[[2 * e, 2 * e + 1, 2 * e + 2, 2 * e + 3]]

    def element_heat_dofs(self, e: int) -> np.ndarray:
        return self.heat_index[[e, e + 1]]


def build_dofmap(mesh: Mesh, bc_mode: str = CLAMPED) -> DofMap:
    if bc_mode not in BC_MODES:
        raise ValueError(f"bc_mode must be one of {BC_MODES}, got {bc_mode!r}")
    n_nodes = mesh.n1 + mesh.n2 + 1
    last = n_nodes - 1
    if bc_mode == CLAMPED:
        removed = (0, 1, 2 * last, 2 * last + 1)
    else:
        removed = (0, 2 * last)
    beam_index = -np.ones(2 * n_nodes, dtype=int)
    free = [k for k in range(2 * n_nodes) if k not in removed]
    beam_index[free] = np.arange(len(free))

    # span-1 end node and span-2 start node are the same global node
    interface = 2 * mesh.n1
    merged = (
        (("span1", mesh.n1, "value"), ("span2", 0, "value"), int(beam_index[interface])),
        (("span1", mesh.n1, "slope"), ("span2", 0, "slope"), int(beam_index[interface + 1])),
    )

    heat_index = -np.ones(mesh.n1 + 1, dtype=int)
    heat_index[1:-1] = np.arange(mesh.n1 - 1)
    return DofMap(mesh, bc_mode, beam_index, heat_index, removed, merged)


def hermite_shapes(xi, h):
    """Cubic Hermite basis on an element of length ``h``.

    Returns an array of shape ``(4, 3)`` (or ``(4, 3, npts)`` for array
    ``xi``): rows are the basis functions attached to (left value, left
    slope, right value, right slope); columns are value, d/dx and d2/dx2.
    """
    xi = np.asarray(xi, dtype=float)
    if np.any(xi < 0) or np.any(xi > 1):
        raise ValueError("xi must lie in [0, 1]")
    if h <= 0:
        raise ValueError("element length must be positive")
    x2, x3 = xi * xi, xi * xi * xi
    one = np.ones_like(xi)
    value = [1 - 3 * x2 + 2 * x3, h * (xi - 2 * x2 + x3), 3 * x2 - 2 * x3, h * (x3 - x2)]
    d1 = [(-6 * xi + 6 * x2) / h, 1 - 4 * xi + 3 * x2, (6 * xi - 6 * x2) / h, 3 * x2 - 2 * xi]
    d2 = [(-6 + 12 * xi) / h**2, (-4 + 6 * xi) / h, (6 - 12 * xi) / h**2, (6 * xi - 2) / h]
    return np.array([[v * one, a * one, b * one] for v, a, b in zip(value, d1, d2)])


def gauss_rule(npts: int):
    """Gauss-Legendre points and weights mapped to [0, 1]."""
    x, w = np.polynomial.legendre.leggauss(npts)
    return 0.5 * (x + 1.0), 0.5 * w


@dataclass(frozen=True)
class SystemMatrices:
    """Dense matrices of the discrete variational problem.

    ``Mb``: beam mass plus rotary inertia, ``Kb``: bending stiffness,
    ``Mth``: heat capacity, ``Kth``: conductivity, ``D[j, i]``: integral over
    span 1 of (heat basis j)' * (beam basis i)'.
    """

    Mb: np.ndarray
    Kb: np.ndarray
    Mth: np.ndarray
    Kth: np.ndarray
    D: np.ndarray
    params: PhysicalParams
    mesh: Mesh
    dofmap: DofMap

    def as_dict(self) -> dict[str, np.ndarray]:
        return {"Mb": self.Mb, "Kb": self.Kb, "Mth": self.Mth, "Kth": self.Kth, "D": self.D}


def assemble(params: PhysicalParams, mesh: Mesh, dofmap: DofMap, n_gauss: int = DEFAULT_GAUSS) -> SystemMatrices:
    """Assemble all system matrices by Gauss quadrature.

    Four points integrate every integrand exactly (the highest degree, from
    the translational mass term, is 6).
    """
    if dofmap.mesh != mesh:
        raise ValueError("dofmap was built for a different mesh")
    if len(dofmap.beam_index) != 2 * (mesh.n_elements + 1) or len(dofmap.heat_index) != mesh.n1 + 1:
        raise ValueError("inconsistent DOF counts between mesh and dofmap")

    nb, nh = dofmap.n_beam, dofmap.n_heat
    Mb = np.zeros((nb, nb))
    Kb = np.zeros((nb, nb))
    Mth = np.zeros((nh, nh))
    Kth = np.zeros((nh, nh))
    D = np.zeros((nh, nb))

    x = mesh.nodes
    for e in range(mesh.n_elements):
        h = x[e + 1] - x[e]
        if mesh.span_of(e) == 1:
            rho, alpha, beta = params.rho1, params.alpha1, params.beta1
        else:
            rho, alpha, beta = params.rho2, params.alpha2, params.beta2
        me, ke = beam_element_matrices(h, rho, alpha, beta, n_gauss)
        bd = dofmap.element_beam_dofs(e)
        _scatter(Mb, me, bd, bd)
        _scatter(Kb, ke, bd, bd)
        if e < mesh.n1:
            mt, kt, de = heat_element_matrices(h, params.rho0, params.kappa, n_gauss)
            hd = dofmap.element_heat_dofs(e)
            _scatter(Mth, mt, hd, hd)
            _scatter(Kth, kt, hd, hd)
            _scatter(D, de, hd, bd)

    return SystemMatrices(Mb, Kb, Mth, Kth, D, params, mesh, dofmap)


def beam_element_matrices(h, rho, alpha, beta, n_gauss=DEFAULT_GAUSS):
    """Element mass (translational plus rotary) and bending matrices."""
    xi, w = gauss_rule(n_gauss)
    N = hermite_shapes(xi, h)  # (4, 3, nq)
    me = np.zeros((4, 4))
    ke = np.zeros((4, 4))
    # outer products keep each element block exactly symmetric
    for q in range(len(xi)):
        wq = w[q] * h
        me += wq * (rho * np.outer(N[:, 0, q], N[:, 0, q]) + alpha * np.outer(N[:, 1, q], N[:, 1, q]))
        ke += wq * beta * np.outer(N[:, 2, q], N[:, 2, q])
    return me, ke


def heat_element_matrices(h, rho0, kappa, n_gauss=DEFAULT_GAUSS):
    """Linear-element heat mass, conductivity and the 2x4 coupling block."""
    xi, w = gauss_rule(n_gauss)
    N = hermite_shapes(xi, h)
    psi = np.array([1.0 - xi, xi])
    dpsi = np.array([-1.0 / h, 1.0 / h])
    mt = np.zeros((2, 2))
    kt = np.zeros((2, 2))
    de = np.zeros((2, 4))
    for q in range(len(xi)):
        wq = w[q] * h
        mt += wq * rho0 * np.outer(psi[:, q], psi[:, q])
        kt += wq * kappa * np.outer(dpsi, dpsi)
        de += wq * np.outer(dpsi, N[:, 1, q])
    return mt, kt, de


def _scatter(target, block, rows, cols):
    for a, i in enumerate(rows):
        if i < 0:
            continue
        for b, j in enumerate(cols):
            if j >= 0:
                target[i, j] += block[a, b]


def interpolate_beam(dofmap: DofMap, span1_fn, span2_fn) -> np.ndarray:
    """Nodal (value, slope) interpolation; the interface node takes span-1 data."""
    mesh = dofmap.mesh
    x = mesh.nodes
    full = np.zeros(2 * len(x))
    v1, s1 = span1_fn(x[: mesh.n1 + 1])
    v2, s2 = span2_fn(x[mesh.n1 + 1 :])
    full[0 : 2 * (mesh.n1 + 1) : 2] = v1
    full[1 : 2 * (mesh.n1 + 1) : 2] = s1
    full[2 * (mesh.n1 + 1) :: 2] = v2
    full[2 * (mesh.n1 + 1) + 1 :: 2] = s2
    q = np.zeros(dofmap.n_beam)
    keep = dofmap.beam_index >= 0
    q[dofmap.beam_index[keep]] = full[keep]
    return q


def interpolate_heat(dofmap: DofMap, fn) -> np.ndarray:
    xh = dofmap.mesh.heat_nodes
    vals, _ = fn(xh)
    th = np.zeros(dofmap.n_heat)
    keep = dofmap.heat_index >= 0
    th[dofmap.heat_index[keep]] = np.asarray(vals, dtype=float)[keep]
    return th


def evaluate_beam(dofmap: DofMap, q: np.ndarray, xs, span: int | None = None):
    """Value and slope of the Hermite field with coefficients ``q`` at ``xs``.

    ``span`` selects which side's elements are used at the interface node.
    """
    mesh = dofmap.mesh
    x = mesh.nodes
    full = np.zeros(len(dofmap.beam_index))
    keep = dofmap.beam_index >= 0
    full[keep] = q[dofmap.beam_index[keep]]
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    vals = np.empty_like(xs)
    slopes = np.empty_like(xs)
    for k, xv in enumerate(xs):
        e = int(np.clip(np.searchsorted(x, xv, side="right") - 1, 0, mesh.n_elements - 1))
        if span == 1:
            e = min(e, mesh.n1 - 1)
        elif span == 2:
            e = max(e, mesh.n1)
        h = x[e + 1] - x[e]
        xi = float(np.clip((xv - x[e]) / h, 0.0, 1.0))
        N = hermite_shapes(xi, h)
        c = full[2 * e : 2 * e + 4]
        vals[k] = c @ N[:, 0]
        slopes[k] = c @ N[:, 1]
    return vals, slopes
