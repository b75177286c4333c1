"""Acceptance suite: every criterion at its stated tolerance, one line each.

These tests pin the desk-scale cases: grid sizes, final times, sweep lists,
and tolerance bands are fixed here, not configured elsewhere.
"""

import dataclasses
import time

import numpy as np
import pytest

from relentropy_lab.experiments import adiabatic_limit, converge_eps, stability_study
from relentropy_lab.hypotheses import SamplePlan, run_all_checks
from relentropy_lab.model import constant_law, embed_gas_as_general, ideal_gas_model
from relentropy_lab.relent import (
    eta_floor_shift,
    gas_relative_quantities,
    identity_residual_gas,
    lemma_bounds_scan,
)
from relentropy_lab.solver import (
    Field,
    Grid1D,
    SolverConfig,
    conservation_drift,
    entropy_history,
    gas_source_term,
    manufactured_case,
    multiscale_gas_solution,
    simulate,
    traveling_gas_solution,
)
from relentropy_lab.young import (
    averaged_relent,
    gronwall_decay_demo,
    jensen_gap,
    random_atomic_measures,
)

from conftest import HYP_BOX
from oracles import lemma_bounds_oracle

GAS = ideal_gas_model(1.0, 1.0)
GAS_MODEL = embed_gas_as_general(GAS)


def report(name: str, ok: bool, detail: str):
    print(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
    assert ok, f"{name}: {detail}"


def test_acceptance_hypothesis_suite():
    t0 = time.perf_counter()
    plan = SamplePlan(seed=42, box=HYP_BOX, count=200)
    rep = run_all_checks(GAS_MODEL, plan)
    asym = rep.entry("entropy_pair").extremal_value
    maxwell = rep.entry("maxwell").extremal_value
    h3 = rep.entry("h3")
    h4 = rep.entry("h4")
    elapsed = time.perf_counter() - t0
    ok = (
        asym < 1e-8
        and maxwell < 1e-10
        and h3.extremal_value > 0.0
        and h3.details["diag_form_mismatch"] < 1e-8
        and h4.extremal_value >= -1e-12
        and h4.details["zero_modes"] == 1
        and h4.details["zero_modes_uniform"]
        and elapsed < 5.0
    )
    report(
        "hypothesis-suite",
        ok,
        f"asym={asym:.2e}, maxwell={maxwell:.2e}, h3_min_eig={h3.extremal_value:.4f}, "
        f"h4_min_eig={h4.extremal_value:.2e}, zero_modes={h4.details['zero_modes']}, "
        f"runtime={elapsed:.2f}s",
    )


def test_acceptance_identity_residual_order():
    t0 = time.perf_counter()
    L = 2 * np.pi
    base = ideal_gas_model(1.0, 1.0, mu=constant_law(0.7), kappa=constant_law(0.5))
    ex1 = traveling_gas_solution(L, modes=[1, 2], u_amps=[0.10, 0.03], u_phases=[0.0, 0.8],
                                 theta_amps=[0.06, 0.02], theta_phases=[0.5, 1.7], speed=1.0)
    ex2 = traveling_gas_solution(L, modes=[1, 3], u_amps=[0.07, 0.02], u_phases=[2.1, 0.3],
                                 theta_amps=[0.05, 0.015], theta_phases=[1.2, 2.6], speed=-0.6,
                                 u0=1.1, theta0=0.9)
    residuals = []
    for N, K in [(128, 7), (256, 13), (512, 25)]:
        grid = Grid1D(N=N, length=L)
        _, f1, r1 = manufactured_case(base, ex1, grid, eps=1.0)
        _, f2, r2 = manufactured_case(base, ex2, grid, eps=1.0)
        gas1 = dataclasses.replace(base, body_force=f1, heat_supply=r1)
        gas2 = dataclasses.replace(base, body_force=f2, heat_supply=r2)
        times = np.linspace(0.0, 0.3, K)
        br = identity_residual_gas(gas1, ex1.trajectory(grid, times), ex2.trajectory(grid, times),
                                   gas_bar=gas2)
        residuals.append(br.integrated_residual)
    ratios = [a / b for a, b in zip(residuals, residuals[1:])]
    elapsed = time.perf_counter() - t0
    ok = all(3.5 <= r <= 4.5 for r in ratios) and elapsed < 60.0
    report(
        "identity-residual-order",
        ok,
        f"ratios={[f'{r:.2f}' for r in ratios]}, residuals={[f'{x:.3e}' for x in residuals]}, "
        f"runtime={elapsed:.1f}s",
    )


def test_acceptance_cross_formula_consistency():
    t0 = time.perf_counter()
    rng = np.random.default_rng(123)
    n = 10_000
    U = np.stack([0.5 + 1.5 * rng.random(n), -1 + 2 * rng.random(n), 0.5 + 1.5 * rng.random(n)], axis=-1)
    Ub = np.stack([0.5 + 1.5 * rng.random(n), -1 + 2 * rng.random(n), 0.5 + 1.5 * rng.random(n)], axis=-1)
    from relentropy_lab.relent import relative_fields

    closed = gas_relative_quantities(GAS, U, Ub, check=False).eta_hat_rel
    general = relative_fields(GAS_MODEL, U, Ub)["eta_rel"]
    worst = float(np.max(np.abs(closed - general)))
    elapsed = time.perf_counter() - t0
    ok = worst < 1e-10 and elapsed < 5.0
    report("cross-formula-consistency", ok, f"max |diff|={worst:.2e} on {n} pairs, runtime={elapsed:.2f}s")


def test_acceptance_zero_viscosity_rate():
    t0 = time.perf_counter()
    u0, th0 = 1.5, 0.8
    sound = float(np.sqrt(2.0 * th0) / u0)
    gas = ideal_gas_model(1.0, 1.0, mu=constant_law(8.0), kappa=constant_law(8.0))
    reference = multiscale_gas_solution(1.0, n_modes=32, amplitude=0.08, spectral_slope=1.3,
                                        seed=7, speed=sound, u0=u0, theta0=th0)
    grid = Grid1D(N=512, length=1.0)
    cfg = SolverConfig(T=0.2, snapshot_dt=0.002)
    rep = converge_eps(gas, reference, grid, cfg, [1e-2, 3e-3, 1e-3, 3e-4, 1e-4])
    fit = rep.fits["metric_vs_eps"]
    elapsed = time.perf_counter() - t0
    ok = 0.9 <= fit.slope <= 1.1 and elapsed < 600.0
    report(
        "zero-viscosity-rate",
        ok,
        f"slope={fit.slope:.3f} (r^2={fit.r_squared:.4f}), floor_warning="
        f"{rep.details['floor_warning']}, runtime={elapsed:.0f}s",
    )


def test_acceptance_stability_rate():
    t0 = time.perf_counter()
    base = traveling_gas_solution(1.0, modes=[1, 2], u_amps=[0.08, 0.03], u_phases=[0.0, 1.2],
                                  theta_amps=[0.05, 0.02], theta_phases=[0.6, 2.1], speed=0.5,
                                  u0=1.2, theta0=1.0)
    grid = Grid1D(N=256, length=1.0)
    cfg = SolverConfig(T=0.2, snapshot_dt=0.004)
    rep = stability_study(GAS, base, grid, cfg, deltas=[1e-2, 1e-3, 1e-4], eps_list=[1e-2, 1e-3])
    slopes = [f.slope for f in rep.fits.values()]
    C = rep.details["amplification_bound"]
    elapsed = time.perf_counter() - t0
    ok = all(0.95 <= s <= 1.05 for s in slopes) and np.isfinite(C) and elapsed < 600.0
    report(
        "stability-rate",
        ok,
        f"slopes={[f'{s:.4f}' for s in slopes]}, amplification_bound={C:.4f}, runtime={elapsed:.0f}s",
    )


def test_acceptance_adiabatic_limit_rate():
    t0 = time.perf_counter()
    u0, th0 = 1.5, 0.8
    sound = float(np.sqrt(2.0 * th0) / u0)
    reference = multiscale_gas_solution(1.0, n_modes=48, amplitude=0.06, spectral_slope=1.45,
                                        seed=7, speed=sound, u0=u0, theta0=th0)
    grid = Grid1D(N=512, length=1.0)
    cfg = SolverConfig(T=0.2, snapshot_dt=0.002)
    # kappa = k0 * theta by construction; mu = mu0 constant; diagonal sweep
    rep = adiabatic_limit(GAS, reference, grid, cfg, [1e-2, 1e-3, 1e-4])
    fit = rep.fits["metric_vs_mu0"]
    consts = np.array(rep.details["constants"])
    gmean = rep.details["constant_gmean"]
    stable = np.all(consts <= 1.5 * gmean) and np.all(consts >= gmean / 1.5)
    elapsed = time.perf_counter() - t0
    ok = 0.9 <= fit.slope <= 1.1 and np.all(np.isfinite(consts)) and stable and elapsed < 600.0
    report(
        "adiabatic-limit-rate",
        ok,
        f"slope={fit.slope:.3f}, constants={[f'{c:.3g}' for c in consts]}, runtime={elapsed:.0f}s",
    )


def test_acceptance_appendix_bounds():
    t0 = time.perf_counter()
    floors = np.array([0.1, np.nan, 0.1])
    R, cap = 4.0, 8.0
    plan = SamplePlan(seed=0, box=HYP_BOX, count=400)
    rep = lemma_bounds_scan(GAS_MODEL, M=3.0, R=R, plan=plan, far_cap=cap,
                            component_floors=floors, per_axis=21)
    shift = eta_floor_shift(GAS_MODEL, R, cap, component_floors=floors)
    c1o, c2o, C3o = lemma_bounds_oracle(GAS_MODEL, HYP_BOX, R, cap, floors, shift, per_axis=41)
    rel = lambda a, b: abs(a - b) / abs(b)
    elapsed = time.perf_counter() - t0
    ok = (
        rep.c1 > 0 and rep.c2 > 0 and np.isfinite(rep.C3)
        and rel(rep.c1, c1o) < 0.10 and rel(rep.c2, c2o) < 0.10 and rel(rep.C3, C3o) < 0.10
        and elapsed < 60.0
    )
    report(
        "appendix-bounds",
        ok,
        f"c1={rep.c1:.4f} (oracle {c1o:.4f}), c2={rep.c2:.4f} (oracle {c2o:.4f}), "
        f"C3={rep.C3:.2f} (oracle {C3o:.2f}), runtime={elapsed:.1f}s",
    )


def test_acceptance_young_measure_suite():
    t0 = time.perf_counter()
    rng = np.random.default_rng(99)
    ubar = np.array([1.0, 0.0, 1.0])
    worst_jensen = 0.0
    for nu in random_atomic_measures(rng, 1000, 4, 3, HYP_BOX):
        averaged_relent(nu, GAS_MODEL, ubar, tol=1e-12)  # raises beyond 1e-12
        worst_jensen = min(worst_jensen, float(np.min(jensen_gap(nu, GAS_MODEL))))

    L = 1.0
    grid = Grid1D(N=96, length=L)
    base = traveling_gas_solution(L, modes=[1, 2], u_amps=[0.08, 0.03], u_phases=[0.0, 1.2],
                                  theta_amps=[0.05, 0.02], theta_phases=[0.6, 2.1], speed=0.5,
                                  u0=1.2, theta0=1.0)
    cfg = SolverConfig(eps=1e-3, T=0.4, snapshot_dt=0.05)
    init, f_src, r_src = manufactured_case(GAS, base, grid, eps=cfg.eps)
    dem = gronwall_decay_demo(GAS_MODEL, init, grid, cfg, spreads=[3e-2, 1e-2, 3e-3],
                              source=gas_source_term(f_src, r_src))
    elapsed = time.perf_counter() - t0
    ok = worst_jensen >= -1e-12 and 0.9 <= dem.slope_fit.slope <= 1.1 and elapsed < 300.0
    report(
        "young-measure-suite",
        ok,
        f"dual-formula ok on 1000 measures, jensen_min={worst_jensen:.2e}, "
        f"gronwall_slope={dem.slope_fit.slope:.4f}, runtime={elapsed:.0f}s",
    )


def test_acceptance_solver_sanity():
    t0 = time.perf_counter()
    grid = Grid1D(N=256, length=1.0)
    k = 2 * np.pi
    x = grid.x
    init = Field(states=np.stack([
        1.0 + 0.15 * np.sin(k * x),
        0.1 + 0.1 * np.cos(k * x),
        1.0 + 0.1 * np.cos(k * x + 0.5),
    ], axis=-1))
    cfg = SolverConfig(eps=1e-2, T=1.0, snapshot_dt=0.02)
    traj = simulate(GAS_MODEL, init, cfg, grid)
    drift = float(np.max(conservation_drift(GAS_MODEL, traj)))
    S = entropy_history(GAS_MODEL, traj)
    monotone = bool(np.all(np.diff(S) >= -1e-12))
    elapsed = time.perf_counter() - t0
    ok = drift < 1e-10 and monotone and elapsed < 30.0
    report(
        "solver-sanity",
        ok,
        f"conservation_drift={drift:.2e}, entropy_monotone={monotone}, "
        f"entropy_gain={S[-1] - S[0]:.3e}, runtime={elapsed:.1f}s",
    )
