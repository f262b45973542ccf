"""Physical parameters, stability regimes, initial data presets and the
closed-form Rayleigh beam dispersion relation."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np

POSITIVE_FIELDS = ("rho1", "rho2", "alpha1", "alpha2", "beta1", "beta2", "rho0", "kappa")
WARNING_PREFIX = "warning: "


@dataclass(frozen=True)
class PhysicalParams:
    """Material and geometric constants of the two-span beam.

    Span 1 occupies ``(0, L0)`` and carries the heat field; span 2 occupies
    ``(L0, L)`` and is purely elastic.
    """

    rho1: float = 1.0
    rho2: float = 1.0
    alpha1: float = 1.0
    alpha2: float = 1.0
    beta1: float = 1.0
    beta2: float = 1.0
    rho0: float = 1.0
    kappa: float = 1.0
    gamma: float = 1.0
    L0: float = 0.5
    L: float = 1.0

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "PhysicalParams":
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown parameter keys: {sorted(unknown)}")
        return cls(**{k: float(v) for k, v in d.items()})

    def replace(self, **changes) -> "PhysicalParams":
        d = self.to_dict()
        d.update(changes)
        return PhysicalParams(**d)


def validate(params: PhysicalParams) -> list[str]:
    """Return every violated constraint as a message naming the field.

    An empty list means the parameters are usable.  ``gamma == 0`` produces
    an entry starting with ``"warning: "``; it is accepted because the
    decoupled system is the analytic reference case.
    """
    problems = []
    for name in POSITIVE_FIELDS:
        value = getattr(params, name)
        if not (math.isfinite(value) and value > 0):
            problems.append(f"{name} must be > 0")
    if not (math.isfinite(params.L0) and math.isfinite(params.L) and 0 < params.L0 < params.L):
        problems.append("require 0 < L0 < L")
    if not math.isfinite(params.gamma):
        problems.append("gamma must be finite")
    elif params.gamma == 0:
        problems.append(WARNING_PREFIX + "gamma = 0 decouples heat and beam; the stability results need gamma != 0")
    return problems


def errors(problems: list[str]) -> list[str]:
    """Drop warning entries from a :func:`validate` result."""
    return [p for p in problems if not p.startswith(WARNING_PREFIX)]


@dataclass(frozen=True)
class RegimeClass:
    tag: str
    ell: int


FAST = RegimeClass("FAST", 1)
SLOW = RegimeClass("SLOW", 2)


def classify_regime(params: PhysicalParams) -> RegimeClass:
    """FAST (resolvent order 1, energy ~ t^-2) when span 1 is at least as
    heavy and at least as rotationally inert as span 2, SLOW otherwise."""
    if params.rho1 >= params.rho2 and params.alpha1 >= params.alpha2:
        return FAST
    return SLOW


def rayleigh_dispersion(rho, alpha, beta, Lspan, n=1):
    """Angular frequency of mode ``sin(n pi x / Lspan)`` of a simply supported
    Rayleigh beam ``rho w_tt - alpha w_xxtt + beta w_xxxx = 0``.

    ``omega**2 = beta k**4 / (rho + alpha k**2)`` with ``k = n pi / Lspan``.
    ``alpha = 0`` gives the Euler-Bernoulli limit.
    """
    if rho <= 0 or beta <= 0 or Lspan <= 0:
        raise ValueError("rho, beta and Lspan must be positive")
    if alpha < 0:
        raise ValueError("alpha must be non-negative")
    n = np.asarray(n)
    if np.any(n < 1):
        raise ValueError("mode index must be >= 1")
    k = n * np.pi / Lspan
    omega = np.sqrt(beta * k**4 / (rho + alpha * k**2))
    return float(omega) if omega.ndim == 0 else omega


# --- initial data -----------------------------------------------------------
#
# A descriptor is a preset name plus coefficients, evaluated in the global
# coordinate x.  Evaluation returns (value, slope).

BEAM_PRESETS = ("zero", "poly-clamped")
SPAN2_PRESETS = BEAM_PRESETS + ("matched-spline",)
HEAT_PRESETS = ("zero", "sine-bump")


@dataclass(frozen=True)
class Descriptor:
    preset: str = "zero"
    coeffs: tuple = ()

    def to_dict(self) -> dict:
        return {"preset": self.preset, "coeffs": list(self.coeffs)}

    @classmethod
    def from_dict(cls, d: dict) -> "Descriptor":
        unknown = set(d) - {"preset", "coeffs"}
        if unknown:
            raise ValueError(f"unknown descriptor keys: {sorted(unknown)}")
        return cls(str(d.get("preset", "zero")), tuple(float(c) for c in d.get("coeffs", ())))


def _poly_clamped(coeffs, L):
    # w(x) = x^2 (L - x)^2 * sum_k c_k x^k: clamped at both ends of [0, L]
    c = np.asarray(coeffs, dtype=float)
    bubble = np.polynomial.Polynomial([0.0, 0.0, L**2, -2 * L, 1.0])
    w = bubble * np.polynomial.Polynomial(c if c.size else [0.0])
    dw = w.deriv()
    return lambda x: (w(x), dw(x))


def _sine_bump(coeffs, L0):
    c = coeffs[0] if coeffs else 0.0
    k = np.pi / L0
    return lambda x: (c * np.sin(k * x), c * k * np.cos(k * x))


def _cubic_blend(v0, s0, a, b):
    """Cubic on [a, b] with value/slope (v0, s0) at a and (0, 0) at b."""
    h = b - a

    def f(x):
        t = (np.asarray(x, dtype=float) - a) / h
        h00 = 1 - 3 * t**2 + 2 * t**3
        h10 = t - 2 * t**2 + t**3
        d00 = (-6 * t + 6 * t**2) / h
        d10 = (1 - 4 * t + 3 * t**2) / h
        return v0 * h00 + s0 * h * h10, v0 * d00 + s0 * h * d10

    return f


def _zero(x):
    z = np.zeros_like(np.asarray(x, dtype=float))
    return z, z.copy()


@dataclass(frozen=True)
class InitialData:
    """Initial displacement/velocity on both spans and initial temperature."""

    u0: Descriptor = field(default_factory=Descriptor)
    u1: Descriptor = field(default_factory=Descriptor)
    y0: Descriptor = field(default_factory=Descriptor)
    y1: Descriptor = field(default_factory=Descriptor)
    theta0: Descriptor = field(default_factory=Descriptor)

    def to_dict(self) -> dict:
        return {k: getattr(self, k).to_dict() for k in ("u0", "u1", "y0", "y1", "theta0")}

    @classmethod
    def from_dict(cls, d: dict) -> "InitialData":
        unknown = set(d) - {"u0", "u1", "y0", "y1", "theta0"}
        if unknown:
            raise ValueError(f"unknown initial-data keys: {sorted(unknown)}")
        return cls(**{k: Descriptor.from_dict(v) for k, v in d.items()})

    def functions(self, L0: float, L: float) -> dict[str, Callable]:
        """Closed-form (value, slope) evaluators for each field."""
        out = {}
        for span1, span2 in (("u0", "y0"), ("u1", "y1")):
            out[span1] = _beam_fn(getattr(self, span1), L, BEAM_PRESETS, span1)
            d2 = getattr(self, span2)
            if d2.preset == "matched-spline":
                v0, s0 = out[span1](L0)
                out[span2] = _cubic_blend(float(v0), float(s0), L0, L)
            else:
                out[span2] = _beam_fn(d2, L, SPAN2_PRESETS, span2)
        th = self.theta0
        if th.preset == "zero":
            out["theta0"] = _zero
        elif th.preset == "sine-bump":
            out["theta0"] = _sine_bump(th.coeffs, L0)
        else:
            raise ValueError(f"theta0: unknown preset {th.preset!r}, expected one of {HEAT_PRESETS}")
        return out


def _beam_fn(d: Descriptor, L, allowed, name):
    if d.preset not in allowed:
        raise ValueError(f"{name}: unknown preset {d.preset!r}, expected one of {allowed}")
    if d.preset == "zero":
        return _zero
    return _poly_clamped(d.coeffs, L)


def default_initial_data() -> InitialData:
    """Clamped polynomial displacement on both spans plus a sine temperature bump."""
    return InitialData(
        u0=Descriptor("poly-clamped", (16.0,)),
        y0=Descriptor("poly-clamped", (16.0,)),
        theta0=Descriptor("sine-bump", (1.0,)),
    )


def initial_data_residuals(data: InitialData, L0: float, L: float) -> dict[str, float]:
    """Absolute residual of every boundary and transmission constraint."""
    f = data.functions(L0, L)
    res = {}
    for a, b in (("u0", "y0"), ("u1", "y1")):
        ua, ua_x = f[a](0.0)
        yb, yb_x = f[b](L)
        uL0, uL0_x = f[a](L0)
        yL0, yL0_x = f[b](L0)
        res[f"{a}(0)"] = abs(float(ua))
        res[f"{a}'(0)"] = abs(float(ua_x))
        res[f"{b}(L)"] = abs(float(yb))
        res[f"{b}'(L)"] = abs(float(yb_x))
        res[f"{a}(L0)-{b}(L0)"] = abs(float(uL0 - yL0))
        res[f"{a}'(L0)-{b}'(L0)"] = abs(float(uL0_x - yL0_x))
    res["theta0(0)"] = abs(float(f["theta0"](0.0)[0]))
    res["theta0(L0)"] = abs(float(f["theta0"](L0)[0]))
    return res
