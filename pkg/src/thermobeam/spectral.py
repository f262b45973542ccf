"""Spectrum of the discrete generator and energy-norm resolvent scans."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .generator import Generator, NumericalError

DENSE_LIMIT = 3000
COND_LIMIT = 1e14


class SingularResolvent(NumericalError):
    """``i lambda`` is (numerically) an eigenvalue of the generator."""


@dataclass
class EigenResult:
    """Eigenvalues sorted by ``|im|`` (ties broken by ``im`` then ``re``).

    ``heat_fraction[k]`` is the share of the energy norm of eigenvector k
    carried by the temperature components.
    """

    eigenvalues: np.ndarray
    heat_fraction: np.ndarray
    vectors: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    @property
    def spectral_abscissa(self) -> float:
        return float(np.max(self.eigenvalues.real))

    @property
    def omega_max(self) -> float:
        return float(np.max(np.abs(self.eigenvalues.imag)))

    def __len__(self):
        return len(self.eigenvalues)


def eigenvalues(gen: Generator, vectors: bool = False, max_dim: int = DENSE_LIMIT, meta=None) -> EigenResult:
    """Dense eigen-decomposition of the generator.

    Works with ``F A F^-1`` (``F`` the Cholesky factor of the energy metric),
    which has the same spectrum as ``A`` and whose eigenvectors are expressed
    in energy-orthonormal coordinates.  Returned vectors are mapped back to
    ``(q, p, th)`` coordinates.
    """
    if gen.dim > max_dim:
        raise ValueError(f"state dimension {gen.dim} exceeds dense limit {max_dim}")
    B = gen.energy_matrix
    try:
        lam, W = sla.eig(B)
    except sla.LinAlgError as exc:
        raise NumericalError(f"eigensolver failed: {exc}") from None
    if not np.all(np.isfinite(lam)):
        raise NumericalError("eigensolver returned non-finite eigenvalues")
    nh = gen.n_heat
    norms = np.sum(np.abs(W) ** 2, axis=0)
    heat = np.sum(np.abs(W[-nh:]) ** 2, axis=0) / norms
    order = np.lexsort((lam.real, lam.imag, np.abs(lam.imag)))
    lam, heat, W = lam[order], heat[order], W[:, order]
    V = None
    if vectors:
        V = sla.solve_triangular(gen.energy_factor, W, lower=False)
    info = dict(meta or {})
    info.update(dim=gen.dim, n_beam=gen.n_beam, n_heat=gen.n_heat)
    return EigenResult(lam, heat, V, info)


def _sigma(B: np.ndarray, lam: float):
    M = -B.astype(complex)
    M[np.diag_indices_from(M)] += 1j * lam
    try:
        s = sla.svdvals(M, check_finite=False)
    except sla.LinAlgError as exc:
        raise NumericalError(f"SVD failed at lambda={lam}: {exc}") from None
    return s[0], s[-1]


def resolvent_norm(gen: Generator, lam: float) -> float:
    """Energy-norm operator norm of ``(i lam - A)^-1``.

    Computed as ``1 / sigma_min(i lam - F A F^-1)``.  Raises
    :class:`SingularResolvent` when the shifted matrix has condition number
    above ``1e14``.
    """
    smax, smin = _sigma(gen.energy_matrix, float(lam))
    if smin == 0 or smax / smin > COND_LIMIT:
        raise SingularResolvent(f"i*{lam} is numerically an eigenvalue (cond > {COND_LIMIT:g})")
    return 1.0 / smin


@dataclass
class ResolventScan:
    lambdas: np.ndarray
    norms: np.ndarray
    ell: int
    skipped: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    @property
    def scaled(self) -> np.ndarray:
        return self.norms / self.lambdas**self.ell


def default_grid(eig: EigenResult, points: int = 200, lo: float = 0.1, hi: float | None = None) -> np.ndarray:
    """Logarithmic grid up to a third of the largest resolved frequency."""
    if hi is None:
        hi = eig.omega_max / 3.0
    if not 0 < lo < hi:
        raise ValueError(f"invalid grid bounds [{lo}, {hi}]")
    return np.geomspace(lo, hi, points)


def resolvent_scan(gen: Generator, lambda_grid, ell: int, threads: int | None = None, meta=None) -> ResolventScan:
    grid = np.asarray(lambda_grid, dtype=float)
    if grid.size == 0:
        raise ValueError("empty lambda grid")
    if np.any(grid <= 0) or np.any(np.diff(grid) <= 0):
        raise ValueError("lambda grid must be positive and strictly increasing")
    if ell not in (1, 2):
        raise ValueError("ell must be 1 or 2")
    B = gen.energy_matrix

    def one(lam):
        return _sigma(B, lam)

    if threads == 1 or grid.size == 1:
        sig = [one(l) for l in grid]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            sig = list(pool.map(one, grid))

    keep, norms, skipped = [], [], []
    for lam, (smax, smin) in zip(grid, sig):
        if smin == 0 or smax / smin > COND_LIMIT:
            skipped.append(float(lam))
            continue
        keep.append(lam)
        norms.append(1.0 / smin)
    info = dict(meta or {})
    return ResolventScan(np.array(keep), np.array(norms), ell, skipped, info)


def branch_fit(eig: EigenResult, band) -> tuple[float, float]:
    """Least-squares slope of ``log(-re)`` against ``log(im)`` over an ``im`` band.

    Only eigenvalues with ``re < 0`` and ``im > 0`` are used.  Returns the
    slope and the root-mean-square residual of the fit.
    """
    lo, hi = band
    lam = eig.eigenvalues
    sel = (lam.real < 0) & (lam.imag > 0) & (lam.imag >= lo) & (lam.imag <= hi)
    if np.count_nonzero(sel) < 5:
        raise ValueError(f"band {band} holds {np.count_nonzero(sel)} usable eigenvalues, need >= 5")
    x = np.log(lam.imag[sel])
    y = np.log(-lam.real[sel])
    A = np.vstack([x, np.ones_like(x)]).T
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - A @ coef
    return float(coef[0]), float(np.sqrt(np.mean(resid**2)))
