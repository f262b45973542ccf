"""Run configuration, config hashing and artifact writers."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.io

from .fem import BC_MODES, CLAMPED
from .model import InitialData, PhysicalParams, default_initial_data

FNV_OFFSET = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3


def fnv1a64(data: bytes) -> int:
    h = FNV_OFFSET
    for byte in data:
        h ^= byte
        h = (h * FNV_PRIME) & 0xFFFFFFFFFFFFFFFF
    return h


def _reject_unknown(d: dict, allowed, where: str):
    if not isinstance(d, dict):
        raise ValueError(f"{where}: expected an object, got {type(d).__name__}")
    unknown = set(d) - set(allowed)
    if unknown:
        raise ValueError(f"{where}: unknown keys {sorted(unknown)}")


def _opt_float(v):
    return None if v is None else float(v)


@dataclass(frozen=True)
class TimeConfig:
    dt: float = 1e-3
    T: float = 5.0
    sample_every: int = 10


@dataclass(frozen=True)
class ScanConfig:
    lambda_min: float | None = None
    lambda_max: float | None = None
    points: int = 200
    ell: int | None = None


@dataclass(frozen=True)
class RunConfig:
    params: PhysicalParams = field(default_factory=PhysicalParams)
    mesh: tuple = (20, 20)
    bc_mode: str = CLAMPED
    initial: InitialData = field(default_factory=default_initial_data)
    time: TimeConfig = field(default_factory=TimeConfig)
    scan: ScanConfig = field(default_factory=ScanConfig)
    convergence_sizes: tuple = (8, 16, 32)
    decay_window: tuple | None = None
    outputs: str = "out"

    def to_dict(self) -> dict:
        return {
            "params": self.params.to_dict(),
            "mesh": {"n1": self.mesh[0], "n2": self.mesh[1]},
            "bc_mode": self.bc_mode,
            "initial": self.initial.to_dict(),
            "time": {"dt": self.time.dt, "T": self.time.T, "sample_every": self.time.sample_every},
            "scan": {"lambda_min": self.scan.lambda_min, "lambda_max": self.scan.lambda_max,
                     "points": self.scan.points, "ell": self.scan.ell},
            "convergence": {"sizes": list(self.convergence_sizes)},
            "decay": {"window": None if self.decay_window is None else list(self.decay_window)},
            "outputs": self.outputs,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        _reject_unknown(d, ("params", "mesh", "bc_mode", "initial", "time", "scan",
                            "convergence", "decay", "outputs"), "config")
        kw = {}
        if "params" in d:
            _reject_unknown(d["params"], PhysicalParams.__dataclass_fields__, "params")
            kw["params"] = PhysicalParams.from_dict(d["params"])
        if "mesh" in d:
            _reject_unknown(d["mesh"], ("n1", "n2"), "mesh")
            m = d["mesh"]
            kw["mesh"] = (int(m.get("n1", 20)), int(m.get("n2", 20)))
        if "bc_mode" in d:
            if d["bc_mode"] not in BC_MODES:
                raise ValueError(f"bc_mode must be one of {BC_MODES}")
            kw["bc_mode"] = d["bc_mode"]
        if "initial" in d:
            _reject_unknown(d["initial"], ("u0", "u1", "y0", "y1", "theta0"), "initial")
            kw["initial"] = InitialData.from_dict(d["initial"])
        if "time" in d:
            _reject_unknown(d["time"], ("dt", "T", "sample_every"), "time")
            t = d["time"]
            kw["time"] = TimeConfig(float(t.get("dt", 1e-3)), float(t.get("T", 5.0)), int(t.get("sample_every", 10)))
        if "scan" in d:
            _reject_unknown(d["scan"], ("lambda_min", "lambda_max", "points", "ell"), "scan")
            s = d["scan"]
            ell = s.get("ell")
            kw["scan"] = ScanConfig(_opt_float(s.get("lambda_min")), _opt_float(s.get("lambda_max")),
                                    int(s.get("points", 200)), None if ell is None else int(ell))
        if "convergence" in d:
            _reject_unknown(d["convergence"], ("sizes",), "convergence")
            kw["convergence_sizes"] = tuple(int(n) for n in d["convergence"].get("sizes", (8, 16, 32)))
        if "decay" in d:
            _reject_unknown(d["decay"], ("window",), "decay")
            w = d["decay"].get("window")
            kw["decay_window"] = None if w is None else tuple(float(v) for v in w)
        if "outputs" in d:
            kw["outputs"] = str(d["outputs"])
        cfg = cls(**kw)
        cfg.check()
        return cfg

    def check(self):
        n1, n2 = self.mesh
        if n1 < 2 or n2 < 2:
            raise ValueError("mesh: n1 and n2 must be >= 2")
        if self.time.dt <= 0 or self.time.T <= 0 or self.time.sample_every < 1:
            raise ValueError("time: need dt > 0, T > 0, sample_every >= 1")
        if self.scan.points < 1:
            raise ValueError("scan: points must be >= 1")
        if self.scan.ell not in (None, 1, 2):
            raise ValueError("scan: ell must be 1, 2 or null")
        if self.decay_window is not None and len(self.decay_window) != 2:
            raise ValueError("decay: window must be [t_a, t_b]")
        # resolving the evaluators rejects unknown preset names
        self.initial.functions(self.params.L0, self.params.L)

    def canonical_json(self) -> str:
        """Canonical form used for hashing; the output directory is excluded."""
        d = self.to_dict()
        d.pop("outputs")
        return json.dumps(d, sort_keys=True, separators=(",", ":"))

    def hash(self) -> str:
        return f"{fnv1a64(self.canonical_json().encode('utf-8')):016x}"


def load_config(path) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        return RunConfig.from_dict(json.load(fh))


def dump_config(cfg: RunConfig, path):
    Path(path).write_text(json.dumps(cfg.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8")


# --- writers ------------------------------------------------------------------


def fmt(x) -> str:
    return f"{float(x):.17g}"


def write_csv(path, header, columns):
    cols = [np.asarray(c) for c in columns]
    lines = [",".join(header)]
    for row in zip(*cols):
        lines.append(",".join(fmt(v) for v in row))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_trace_csv(path, trace):
    write_csv(path, ("t", "E", "dissipation_mid", "balance_residual"),
              (trace.times, trace.energies, trace.dissipations, trace.balance_residuals))


def write_eigen_csv(path, eig):
    write_csv(path, ("re", "im"), (eig.eigenvalues.real, eig.eigenvalues.imag))


def write_scan_csv(path, scan):
    write_csv(path, ("lambda", "norm", "scaled"), (scan.lambdas, scan.norms, scan.scaled))


def write_convergence_csv(path, result):
    n = len(result.sizes)
    errors = result.errors if result.errors is not None else [np.nan] * n
    orders = [np.nan] + list(result.orders) + [np.nan] * (n - 1 - len(result.orders))
    write_csv(path, ("n", "value", "error", "order"), (result.sizes, result.values, errors, orders[:n]))


def write_matrix_market(path, matrix):
    scipy.io.mmwrite(str(path), np.asarray(matrix, dtype=float), precision=17, symmetry="general")


def write_json(path, obj):
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n", encoding="utf-8")


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not JSON serializable: {type(o).__name__}")
