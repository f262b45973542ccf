"""Decay-exponent fits, mesh-convergence studies and regime reports."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .fem import PINNED, Mesh, assemble, build_dofmap
from .generator import build_generator
from .model import PhysicalParams, RegimeClass, classify_regime, rayleigh_dispersion
from .spectral import EigenResult, ResolventScan, eigenvalues
from .timestepper import EnergyTrace

FIT_POINTS = 64
RIPPLE = 1.5


def geometric_indices(times: np.ndarray, t_a: float, t_b: float, points: int = FIT_POINTS) -> np.ndarray:
    """Trace indices nearest to a geometric sequence spanning ``[t_a, t_b]``."""
    inside = np.flatnonzero((times >= t_a) & (times <= t_b))
    if inside.size == 0:
        return inside
    targets = np.geomspace(max(t_a, times[inside[0]]), min(t_b, times[inside[-1]]), points)
    t_in = times[inside]
    pos = np.clip(np.searchsorted(t_in, targets), 1, len(t_in) - 1)
    left_closer = (targets - t_in[pos - 1]) <= (t_in[pos] - targets)
    nearest = np.where(left_closer, pos - 1, pos)
    return inside[np.unique(nearest)]


def fit_decay_exponent(trace: EnergyTrace, window=None, points: int = FIT_POINTS) -> tuple[float, float]:
    """Slope of ``log E`` against ``log t`` over ``window`` (default ``[T/4, T]``).

    Samples are taken geometrically across the window.  Returns the slope
    and the RMS residual.  On a fixed mesh the energy eventually decays
    exponentially, so the slope is a pre-asymptotic, window-dependent number.
    """
    t = np.asarray(trace.times, dtype=float)
    E = np.asarray(trace.energies, dtype=float)
    if window is None:
        window = (t[-1] / 4.0, t[-1])
    t_a, t_b = window
    if not (0 < t_a < t_b):
        raise ValueError(f"invalid window {window}")
    if t_a < t[0] or t_b > t[-1]:
        raise ValueError(f"window {window} is not inside the trace [{t[0]}, {t[-1]}]")
    idx = geometric_indices(t, t_a, t_b, points)
    if idx.size < 10:
        raise ValueError(f"window holds {idx.size} samples, need >= 10")
    if np.any(E[idx] <= 0):
        raise ValueError("energies in the window must be positive")
    x, y = np.log(t[idx]), np.log(E[idx])
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    return float(slope), float(np.sqrt(np.mean(resid**2)))


# --- mesh convergence ---------------------------------------------------------


@dataclass
class ConvergenceResult:
    sizes: list
    values: list
    errors: list | None
    orders: list
    flagged: bool

    def to_dict(self) -> dict:
        return asdict(self)


def observed_orders(errors) -> list[float]:
    """``log2`` of successive error ratios for a halving mesh size."""
    e = np.abs(np.asarray(errors, dtype=float))
    with np.errstate(divide="ignore", invalid="ignore"):
        r = e[:-1] / e[1:]
        out = np.where((e[:-1] > 0) & (e[1:] > 0), np.log2(r), np.nan)
    return [float(v) for v in out]


def richardson_orders(values) -> list[float]:
    """Orders from three consecutive probe values when the limit is unknown."""
    v = np.asarray(values, dtype=float)
    return observed_orders(np.diff(v))


def lowest_frequency(params: PhysicalParams, n1: int, n2: int, bc_mode: str) -> float:
    """Smallest positive imaginary part in the generator spectrum."""
    mesh = Mesh.for_params(params, n1, n2)
    gen = build_generator(assemble(params, mesh, build_dofmap(mesh, bc_mode)), params.gamma)
    im = eigenvalues(gen).eigenvalues.imag
    im = im[im > 1e-8]
    if im.size == 0:
        raise ValueError("no oscillatory eigenvalues")
    return float(im.min())


def single_span_params(params: PhysicalParams) -> PhysicalParams:
    """Span-2 properties set equal to span 1 and the coupling switched off."""
    return params.replace(rho2=params.rho1, alpha2=params.alpha1, beta2=params.beta1, gamma=0.0)


def single_span_frequency(params: PhysicalParams, n_elements: int) -> float:
    """Lowest frequency of a uniform pinned beam on ``[0, L]`` with ``n_elements``
    elements (split across the two spans in proportion to their lengths)."""
    p = single_span_params(params)
    n1 = int(round(n_elements * p.L0 / p.L))
    return lowest_frequency(p, n1, n_elements - n1, PINNED)


def dispersion_reference(params: PhysicalParams, n: int = 1) -> float:
    return rayleigh_dispersion(params.rho1, params.alpha1, params.beta1, params.L, n)


def convergence_study(params: PhysicalParams, mesh_sizes, probe=None, exact: float | None = None) -> ConvergenceResult:
    """Observed orders of a mesh-dependent probe under repeated doubling.

    ``probe(n)`` defaults to the lowest eigenfrequency on an ``n`` + ``n``
    clamped mesh.  With ``exact`` the orders come from errors, otherwise
    from successive differences.  A degenerate sequence (identical values)
    gives NaN orders and ``flagged=True``.
    """
    sizes = [int(n) for n in mesh_sizes]
    if len(sizes) < 3:
        raise ValueError("need at least 3 mesh sizes")
    if any(b != 2 * a for a, b in zip(sizes, sizes[1:])):
        raise ValueError(f"mesh sizes must double at each step, got {sizes}")
    if probe is None:
        def probe(n):
            return lowest_frequency(params, n, n, "clamped")
    values = [float(probe(n)) for n in sizes]
    if exact is not None:
        errors = [v - exact for v in values]
        orders = observed_orders(errors)
    else:
        errors = None
        orders = richardson_orders(values)
    flagged = any(math.isnan(o) for o in orders)
    return ConvergenceResult(sizes, values, errors, orders, flagged)


# --- regime report ------------------------------------------------------------


def scan_regime_check(scan: ResolventScan, ripple: float = RIPPLE) -> dict:
    """Whether the scaled resolvent peaks in the lower third of the grid and is
    non-increasing, up to a factor ``ripple``, across the upper half.

    Non-increasing within ``ripple`` means ``s[j] <= ripple * s[i]`` for
    every ``i < j`` in the upper half.
    """
    s = scan.scaled
    n = len(s)
    if n < 3:
        raise ValueError("scan too short for a regime check")
    arg = int(np.argmax(s))
    in_lower_third = arg < n / 3.0
    upper = s[n // 2 :]
    running_min = np.minimum.accumulate(upper)
    worst = float(np.max(upper[1:] / running_min[:-1])) if len(upper) > 1 else 1.0
    return {
        "argmax_index": arg,
        "argmax_lambda": float(scan.lambdas[arg]),
        "max_scaled": float(s[arg]),
        "max_in_lower_third": bool(in_lower_third),
        "upper_half_worst_rise": worst,
        "upper_half_non_increasing": bool(worst <= ripple),
        "passed": bool(in_lower_third and worst <= ripple),
    }


@dataclass
class RegimeReport:
    config_hash: str
    regime: RegimeClass
    scan_summary: dict
    spectral_abscissa: float
    energy_summary: dict
    checks: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["regime"] = {"tag": self.regime.tag, "ell": self.regime.ell}
        return d


PASS, FAIL, NA = "PASS", "FAIL", "NOT APPLICABLE"


def _verdict(ok: bool) -> str:
    return PASS if ok else FAIL


def regime_report(params: PhysicalParams, trace: EnergyTrace, scan: ResolventScan, eig: EigenResult,
                  window=None, balance_tol: float = 1e-10) -> RegimeReport:
    """Collect the stability evidence for one configuration.

    All three inputs must carry the same ``config_hash`` in their ``meta``.
    The verdicts never claim anything about optimality of decay rates.
    """
    hashes = {trace.meta.get("config_hash"), scan.meta.get("config_hash"), eig.meta.get("config_hash")}
    if len(hashes) != 1 or None in hashes:
        raise ValueError(f"inputs come from different configurations: {sorted(map(str, hashes))}")
    config_hash = hashes.pop()
    regime = classify_regime(params)

    E = trace.energies
    E0, ET = float(E[0]), float(E[-1])
    summary = {"E0": E0, "ET": ET, "T": float(trace.times[-1]),
               "max_balance_residual": trace.max_balance_residual}
    try:
        alpha, resid = fit_decay_exponent(trace, window)
        summary.update(fit_exponent=alpha, fit_residual=resid,
                       fit_window=list(window or (trace.times[-1] / 4.0, trace.times[-1])),
                       fit_label="pre-asymptotic")
    except ValueError as exc:
        summary.update(fit_exponent=None, fit_error=str(exc))

    scan_summary = scan_regime_check(scan)
    scan_summary.update(ell=scan.ell, points=len(scan.lambdas), skipped=len(scan.skipped),
                        lambda_min=float(scan.lambdas[0]), lambda_max=float(scan.lambdas[-1]),
                        tail_scaled=float(scan.scaled[-1]))

    slack = balance_tol * E0
    checks = {
        "energy_balance": _verdict(trace.max_balance_residual <= slack),
        "energy_non_increasing": _verdict(bool(np.all(np.diff(E) <= slack))),
    }
    if params.gamma == 0:
        checks["strong_stability"] = NA
        checks["resolvent_regime"] = NA
        checks["energy_conserved"] = _verdict(bool(np.max(np.abs(E - E0)) <= balance_tol * E0))
    else:
        checks["strong_stability"] = _verdict(eig.spectral_abscissa < 0 and ET < E0)
        checks["resolvent_regime"] = _verdict(scan.ell == regime.ell and scan_summary["passed"])
    return RegimeReport(config_hash, regime, scan_summary, eig.spectral_abscissa, summary, checks)
