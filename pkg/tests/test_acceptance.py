"""Acceptance criteria, one test each, at their stated tolerances.

Every test appends a ``[criterion N] PASS/FAIL: ...`` line that is printed in
the terminal summary.
"""

import time

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES, make_generator
from oracles import brute_force_matrices, scaled_entry_change
from thermobeam import PhysicalParams, assemble, build_dofmap, default_initial_data, rayleigh_dispersion
from thermobeam import cli
from thermobeam.analysis import (
    convergence_study,
    fit_decay_exponent,
    scan_regime_check,
    single_span_frequency,
)
from thermobeam.fem import Mesh
from thermobeam.generator import dissipation, random_state
from thermobeam.io import RunConfig
from thermobeam.model import Descriptor, InitialData, classify_regime
from thermobeam.spectral import EigenResult, branch_fit, default_grid, eigenvalues, resolvent_scan
from thermobeam.timestepper import EnergyTrace, project_initial, simulate

pytestmark = pytest.mark.slow


def record(n, ok, detail):
    ACCEPTANCE_LINES.append(f"[criterion {n}] {'PASS' if ok else 'FAIL'}: {detail}")
    assert ok, detail


class Clock:
    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.t0


def test_criterion_1_exact_dissipativity():
    rng = np.random.default_rng(1)
    with Clock() as c:
        gen, _ = make_generator(PhysicalParams(), 16, 16)
        G = gen.energy_metric
        worst = 0.0
        for _ in range(200):
            s = random_state(gen, rng)
            x = s.to_array()
            worst = max(worst, abs(x @ G @ gen.apply_array(x) + dissipation(gen, s)) / (x @ G @ x))
    ok = worst <= 1e-12 and c.elapsed < 5
    record(1, ok, f"max |<A s,s>_E + diss| / |s|_E^2 = {worst:.2e} (<= 1e-12), {c.elapsed:.2f} s (< 5 s)")


def test_criterion_2_discrete_energy_balance():
    with Clock() as c:
        gen, dm = make_generator(PhysicalParams(), 20, 20)
        tr = simulate(gen, project_initial(default_initial_data(), dm), 1e-3, 5.0)
    rel = tr.max_balance_residual / tr.energies[0]
    ok = rel <= 1e-10 and c.elapsed < 30
    record(2, ok, f"max step |dE + dt diss(mid)| / E(0) = {rel:.2e} over {tr.meta['n_steps']} steps "
                  f"(<= 1e-10), {c.elapsed:.2f} s (< 30 s)")


def test_criterion_3_conservative_oracle():
    p = PhysicalParams(gamma=0.0)
    gen, dm = make_generator(p, 20, 20)
    data = InitialData(**{**default_initial_data().__dict__, "theta0": Descriptor("zero")})
    tr = simulate(gen, project_initial(data, dm), 1e-3, 5.0)
    drift = np.max(np.abs(tr.energies - tr.energies[0])) / tr.energies[0]

    eig = eigenvalues(gen)
    beam = eig.heat_fraction < 0.5
    max_re = float(np.max(np.abs(eig.eigenvalues[beam].real)))

    exact = rayleigh_dispersion(p.rho1, p.alpha1, p.beta1, p.L, 1)
    conv = convergence_study(p, (16, 32, 64), probe=lambda n: single_span_frequency(p, n), exact=exact)
    e16, e64 = (abs(e) / exact for e in (conv.errors[0], conv.errors[2]))
    order = min(conv.orders)

    ok = drift <= 1e-10 and max_re <= 1e-8 and e16 <= 5e-3 and e64 <= 5e-4 and order >= 3.5
    record(3, ok, f"energy drift {drift:.2e} over {tr.meta['n_steps']} steps (<= 1e-10); beam max|re| "
                  f"{max_re:.2e} (<= 1e-8); dispersion error {e16:.2e} at 16 (<= 5e-3), {e64:.2e} at 64 "
                  f"(<= 5e-4), order {order:.2f} (>= 3.5)")


def test_criterion_4_strong_stability():
    with Clock() as c:
        gen, dm = make_generator(PhysicalParams(), 24, 24)
        abscissa = eigenvalues(gen).spectral_abscissa
        tr = simulate(gen, project_initial(default_initial_data(), dm), 1e-3, 50.0, sample_every=100)
    ratio = tr.energies[-1] / tr.energies[0]
    ok = abscissa < 0 and ratio < 0.9 and c.elapsed < 120
    record(4, ok, f"spectral abscissa {abscissa:.2e} (< 0); E(50)/E(0) = {ratio:.4f} (< 0.9); "
                  f"{c.elapsed:.1f} s (< 120 s)")


def test_criterion_5_solvability_at_zero():
    rng = np.random.default_rng(5)
    gen, _ = make_generator(PhysicalParams(), 20, 20)
    worst = 0.0
    for _ in range(20):
        f = rng.standard_normal(gen.dim)
        r = gen.apply_array(gen.solve_array(f)) - f
        worst = max(worst, np.linalg.norm(r) / np.linalg.norm(f))
    record(5, worst <= 1e-10, f"max |A A^-1 f - f| / |f| = {worst:.2e} over 20 draws (<= 1e-10)")


REGIME_SETS = {
    "FAST": PhysicalParams(rho1=2.0, rho2=1.0, alpha1=2.0, alpha2=1.0),
    "SLOW": PhysicalParams(rho1=1.0, rho2=2.0, alpha1=2.0, alpha2=1.0),
}


def test_criterion_6_regime_consistent_resolvent_scan():
    parts, ok = [], True
    with Clock() as c:
        for tag, p in REGIME_SETS.items():
            regime = classify_regime(p)
            gen, _ = make_generator(p, 24, 24)
            eig = eigenvalues(gen)
            scan = resolvent_scan(gen, default_grid(eig, 200, lo=1.0), regime.ell)
            chk = scan_regime_check(scan)
            ok &= regime.tag == tag and chk["passed"] and not scan.skipped
            parts.append(f"{tag} ell={regime.ell}: argmax index {chk['argmax_index']}/200 "
                         f"(< 66.7), upper-half worst rise {chk['upper_half_worst_rise']:.2f} (<= 1.5)")
    ok &= c.elapsed < 300
    record(6, ok, "; ".join(parts) + f"; {c.elapsed:.1f} s (< 300 s)")


def test_criterion_7_analysis_oracles():
    t = np.linspace(0.0, 100.0, 20001)
    z = np.zeros_like(t)
    slopes = []
    for power in (1, 2):
        E = np.r_[1.0, t[1:] ** -power]
        slopes.append(fit_decay_exponent(EnergyTrace(t, E, z, z, z[1:]))[0] + power)
    im = np.geomspace(2, 200, 40)
    fits = []
    for power in (1, 2):
        re = -1.0 / im**power
        lam = np.r_[re + 1j * im, re - 1j * im]
        fits.append(branch_fit(EigenResult(lam, np.zeros(len(lam))), (1, 300))[0] + power)
    e_fit, e_branch = max(map(abs, slopes)), max(map(abs, fits))
    ok = e_fit <= 1e-6 and e_branch <= 1e-12
    record(7, ok, f"decay-fit exponent error {e_fit:.2e} (<= 1e-6); branch-fit slope error "
                  f"{e_branch:.2e} (<= 1e-12)")


def test_criterion_8_assembly_equivalence():
    p = PhysicalParams(rho1=2.0, rho2=0.7, alpha1=0.3, alpha2=1.4, beta1=1.5, beta2=0.6,
                       rho0=0.8, kappa=1.3, gamma=0.9, L0=0.6, L=1.5)
    mesh = Mesh.for_params(p, 2, 2)
    dm = build_dofmap(mesh)
    system = assemble(p, mesh, dm).as_dict()
    ref = brute_force_matrices(p, mesh, dm)
    brute = max(float(np.max(scaled_entry_change(ref[k], M))) for k, M in system.items())
    sym = max(float(np.max(np.abs(system[k] - system[k].T))) for k in ("Mb", "Kb", "Mth", "Kth"))
    doubled = assemble(p, mesh, dm, n_gauss=8).as_dict()
    change = max(float(np.max(scaled_entry_change(M, doubled[k]))) for k, M in system.items())
    ok = brute <= 1e-12 and sym == 0.0 and change < 1e-13
    record(8, ok, f"max relative |assembled - quadrature| {brute:.2e} (<= 1e-12); symmetry residual {sym:g} (== 0); "
                  f"Gauss-doubling change {change:.2e} (< 1e-13)")


def test_criterion_9_determinism(tmp_path):
    cfg = {"mesh": {"n1": 6, "n2": 6}, "time": {"dt": 0.002, "T": 1.0, "sample_every": 5},
           "scan": {"points": 30}, "convergence": {"sizes": [4, 8, 16]}}
    path = tmp_path / "run.json"
    path.write_text(__import__("json").dumps(cfg))
    mismatched = []
    for command in cli.COMMANDS:
        for out in ("a", "b"):
            assert cli.main([command, "--config", str(path), "--out", str(tmp_path / out), "--quiet"]) == 0
    h = RunConfig.from_dict(cfg).hash()
    files = sorted(p.name for p in (tmp_path / "a").iterdir())
    for name in files:
        if (tmp_path / "a" / name).read_bytes() != (tmp_path / "b" / name).read_bytes():
            mismatched.append(name)
    csvs = [f for f in files if f.endswith(".csv")]
    ok = not mismatched and len(csvs) == 4 and all(h in f for f in files)
    record(9, ok, f"{len(files)} artifacts from {len(cli.COMMANDS)} commands run twice, "
                  f"{len(csvs)} CSV; byte-identical: {not mismatched}")
