"""Verifying decay estimates on a solved trajectory.

Each check measures a quantity on the numerical solution, compares it
with the rate or bound the constants module predicts, and returns a
report with a pass or fail verdict and the margin.
"""

from hypflow import (
    DecayConstants,
    SolverConfig,
    make_datum,
    measure_decay,
    picard_solve,
    verify_dispersive,
    verify_space_time_membership,
)
from hypflow.geometry import PolarGrid

grid = PolarGrid(rho_max=8.0, n_rho=48, n_theta=64, n_dim=2)
constants = DecayConstants(2)
datum = make_datum(grid, amplitude=0.25, shape=2)

delta = 0.5
horizon = 5.0 / constants.beta_prime(delta)
traj, _ = picard_solve(datum, horizon, SolverConfig(n_lattice=32))

print("dispersive bounds on the linear flow")
for p, q in ((2.0, 2.0), (2.0, 4.0)):
    rep = verify_dispersive(datum, p, q)
    print(f"  {rep.estimate_id} (p={p:g}, q={q:g}): {rep.verdict},"
          f" sup ratio {rep.measured['sup_ratio']:.4f}")

print("\ndecay of the nonlinear solution")
rep = measure_decay(traj, 2.0, 0.0, constants.beta_prime(delta))
print(f"  {rep.estimate_id}: {rep.verdict}, fitted rate"
      f" {-rep.measured['fitted_rate']:.4f}"
      f" vs predicted {constants.beta_prime(delta):.4f}")

print("\nspace-time membership of the trajectory")
for r, q in ((4.0, 4.0), (2.0, 8.0), (2.0, 2.0)):
    rep = verify_space_time_membership(traj, r, q)
    print(f"  (r={r:g}, q={q:g}): {rep.verdict},"
          f" integral {list(rep.measured.values())[0]:.4g}")
