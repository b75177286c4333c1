"""Assemble the relative-entropy identity on exact solution pairs and watch
the discrete residual vanish at the scheme's order.

Two manufactured gas solutions (each exactly solving the viscous system with
its own forcing) are compared term by term; the assembled residual is pure
discretization error and drops by a factor of about four per refinement.
The dissipation terms stay pointwise nonnegative throughout.
"""

import dataclasses

import numpy as np

from relentropy_lab.model import constant_law, ideal_gas_model
from relentropy_lab.relent import identity_residual_gas
from relentropy_lab.solver import Grid1D, manufactured_case, traveling_gas_solution

L = 2 * np.pi
base = ideal_gas_model(1.0, 1.0, mu=constant_law(0.7), kappa=constant_law(0.5))
ex1 = traveling_gas_solution(L, modes=[1, 2], u_amps=[0.10, 0.03], u_phases=[0.0, 0.8],
                             theta_amps=[0.06, 0.02], theta_phases=[0.5, 1.7], speed=1.0)
ex2 = traveling_gas_solution(L, modes=[1, 3], u_amps=[0.07, 0.02], u_phases=[2.1, 0.3],
                             theta_amps=[0.05, 0.015], theta_phases=[1.2, 2.6], speed=-0.6,
                             u0=1.1, theta0=0.9)

print(f"{'N':>5} {'snapshots':>9} {'integrated residual':>20} {'ratio':>6} {'min dissipation':>16}")
prev = None
for N, K in [(128, 7), (256, 13), (512, 25)]:
    grid = Grid1D(N=N, length=L)
    _, f1, r1 = manufactured_case(base, ex1, grid, eps=1.0)
    _, f2, r2 = manufactured_case(base, ex2, grid, eps=1.0)
    gas1 = dataclasses.replace(base, body_force=f1, heat_supply=r1)
    gas2 = dataclasses.replace(base, body_force=f2, heat_supply=r2)
    times = np.linspace(0.0, 0.3, K)
    br = identity_residual_gas(gas1, ex1.trajectory(grid, times), ex2.trajectory(grid, times),
                               gas_bar=gas2)
    ratio = "" if prev is None else f"{prev / br.integrated_residual:6.2f}"
    print(f"{N:>5} {K:>9} {br.integrated_residual:>20.6e} {ratio:>6} {br.min_dissipation:>16.2e}")
    prev = br.integrated_residual

print("\nterm magnitudes at the finest level (space-time max):")
for name in ("lhs_time", "lhs_flux", "diss_kappa", "diss_mu", "relent_source", "forcing",
             "kappa_cross", "mu_cross"):
    print(f"  {name:14s} {np.max(np.abs(br.terms[name])):.4e}")
