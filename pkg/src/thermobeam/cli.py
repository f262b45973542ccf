"""Command-line front end.

    thermobeam <command> --config run.json [--out DIR] [--threads N] [--quiet]

Artifacts are written as ``<command>-<confighash>.<ext>``.  Exit status is 0
on success, 1 for an invalid configuration and 2 for a numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np
import scipy.linalg as sla

from . import io
from .analysis import (
    convergence_study,
    dispersion_reference,
    fit_decay_exponent,
    lowest_frequency,
    regime_report,
)
from .fem import PINNED, Mesh, assemble, build_dofmap
from .generator import NumericalError, build_generator
from .model import classify_regime, errors, validate
from .spectral import default_grid, eigenvalues, resolvent_scan
from .timestepper import project_initial, simulate

COMMANDS = ("simulate", "spectrum", "resolvent", "decay", "report", "convergence", "export-matrices")


class ConfigError(ValueError):
    pass


class Run:
    """Objects shared by the commands for one configuration."""

    def __init__(self, cfg: io.RunConfig, out: Path, threads: int | None):
        self.cfg = cfg
        self.out = out
        self.threads = threads
        self.hash = cfg.hash()
        self.meta = {"config_hash": self.hash}
        self.mesh = Mesh.for_params(cfg.params, *cfg.mesh)
        self.dofmap = build_dofmap(self.mesh, cfg.bc_mode)
        self.system = assemble(cfg.params, self.mesh, self.dofmap)
        self.gen = build_generator(self.system, cfg.params.gamma)

    def path(self, command: str, ext: str, suffix: str = "") -> Path:
        return self.out / f"{command}-{self.hash}{suffix}.{ext}"

    def trace(self):
        t = self.cfg.time
        s0 = project_initial(self.cfg.initial, self.dofmap)
        return simulate(self.gen, s0, t.dt, t.T, t.sample_every, meta=self.meta)

    def spectrum(self):
        return eigenvalues(self.gen, meta=self.meta)

    def scan(self, eig):
        sc = self.cfg.scan
        ell = sc.ell if sc.ell is not None else classify_regime(self.cfg.params).ell
        lo = sc.lambda_min if sc.lambda_min is not None else 0.1
        grid = default_grid(eig, sc.points, lo=lo, hi=sc.lambda_max)
        return resolvent_scan(self.gen, grid, ell, threads=self.threads, meta=self.meta)


def cmd_simulate(run: Run) -> str:
    tr = run.trace()
    io.write_trace_csv(run.path("simulate", "csv"), tr)
    return f"E(0)={tr.energies[0]:.6g} E(T)={tr.energies[-1]:.6g} max|balance|={tr.max_balance_residual:.3g}"


def cmd_spectrum(run: Run) -> str:
    eig = run.spectrum()
    io.write_eigen_csv(run.path("spectrum", "csv"), eig)
    return f"{len(eig)} eigenvalues, spectral abscissa {eig.spectral_abscissa:.6g}"


def cmd_resolvent(run: Run) -> str:
    scan = run.scan(run.spectrum())
    io.write_scan_csv(run.path("resolvent", "csv"), scan)
    k = int(np.argmax(scan.scaled))
    return (f"{len(scan.lambdas)} samples ({len(scan.skipped)} skipped), ell={scan.ell}, "
            f"max scaled {scan.scaled[k]:.6g} at lambda={scan.lambdas[k]:.6g}")


def cmd_decay(run: Run) -> str:
    tr = run.trace()
    window = run.cfg.decay_window or (tr.times[-1] / 4.0, tr.times[-1])
    alpha, resid = fit_decay_exponent(tr, window)
    io.write_json(run.path("decay", "json"), {
        "config_hash": run.hash, "exponent": alpha, "residual": resid, "window": list(window),
        "label": "pre-asymptotic", "mesh": list(run.cfg.mesh), "dt": run.cfg.time.dt,
    })
    return f"fitted exponent {alpha:.6g} on [{window[0]:g}, {window[1]:g}] (pre-asymptotic)"


def cmd_report(run: Run) -> str:
    tr = run.trace()
    eig = run.spectrum()
    scan = run.scan(eig)
    rep = regime_report(run.cfg.params, tr, scan, eig, window=run.cfg.decay_window)
    io.write_json(run.path("report", "json"), rep.to_dict())
    return ", ".join(f"{k}={v}" for k, v in rep.checks.items())


def cmd_convergence(run: Run) -> str:
    cfg = run.cfg
    p = cfg.params
    single = (cfg.bc_mode == PINNED and p.gamma == 0 and p.rho1 == p.rho2
              and p.alpha1 == p.alpha2 and p.beta1 == p.beta2)
    exact = dispersion_reference(p) if single else None
    res = convergence_study(p, cfg.convergence_sizes,
                            probe=lambda n: lowest_frequency(p, n, n, cfg.bc_mode), exact=exact)
    io.write_convergence_csv(run.path("convergence", "csv"), res)
    return f"orders {['%.3f' % o for o in res.orders]}" + (" (flagged)" if res.flagged else "")


def cmd_export(run: Run) -> str:
    for name, M in run.system.as_dict().items():
        io.write_matrix_market(run.path("export-matrices", "mtx", suffix=f"-{name}"), M)
    return f"wrote 5 matrices (beam dofs {run.dofmap.n_beam}, heat dofs {run.dofmap.n_heat})"


HANDLERS = {
    "simulate": cmd_simulate,
    "spectrum": cmd_spectrum,
    "resolvent": cmd_resolvent,
    "decay": cmd_decay,
    "report": cmd_report,
    "convergence": cmd_convergence,
    "export-matrices": cmd_export,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="thermobeam", description=__doc__.splitlines()[0])
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", required=True, help="JSON run configuration")
    ap.add_argument("--out", help="output directory (overrides the config)")
    ap.add_argument("--threads", type=int, default=None, help="cap on resolvent-scan parallelism")
    ap.add_argument("--quiet", action="store_true")
    return ap


def load(path) -> io.RunConfig:
    try:
        cfg = io.load_config(path)
    except FileNotFoundError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON in {path}: {exc.msg} (line {exc.lineno}, column {exc.colno})") from None
    except (ValueError, TypeError, AttributeError) as exc:
        raise ConfigError(f"invalid config {path}: {exc}") from None
    problems = validate(cfg.params)
    if errors(problems):
        raise ConfigError("invalid parameters: " + "; ".join(errors(problems)))
    return cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    say = (lambda *a: None) if args.quiet else print
    try:
        cfg = load(args.config)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    for w in validate(cfg.params):
        print(w, file=sys.stderr)
    if args.threads is not None and args.threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return 1

    out = Path(args.out or cfg.outputs)
    out.mkdir(parents=True, exist_ok=True)
    try:
        run = Run(cfg, out, args.threads)
        msg = HANDLERS[args.command](run)
    except (NumericalError, sla.LinAlgError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    say(f"{args.command} [{run.hash}]: {msg}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
