"""Minimum-time solar-sail transfer between two pseudo-NEAs.

Draws one random pair, solves the costate shooting problem from random
initial guesses, then reports the time of flight, the residuals and how the
sail cone angle evolves along the optimal arc.
"""
import numpy as np

from sailtour import ocp
from sailtour.dataset import sample_pair
from sailtour.dynamics import beta_to_char_accel, export_trajectory_csv
from sailtour.units import CANONICAL, mjd_to_date

BETA = 0.1265
START_MJD = 57800.0

t0 = CANONICAL.mjd_to_tu(START_MJD)
dep, arr, seed = sample_pair(seed=1, index=0, epoch=t0)
print(f"sail: beta = {BETA}, characteristic acceleration {beta_to_char_accel(BETA):.3f} mm/s^2")
print(f"departure a={dep.a:.3f} AU e={dep.e:.3f} i={np.degrees(dep.i):.2f} deg")
print(f"arrival   a={arr.a:.3f} AU e={arr.e:.3f} i={np.degrees(arr.i):.2f} deg")

problem = ocp.ShootingProblem(dep, arr, t0, BETA, seed=seed)
best = ocp.solve_transfer_best_of(problem, 5)
print(f"\nbest of 5 multistart runs: {best.tof_days:.2f} days "
      f"(residual {best.residual_norm:.1e}, found after {best.restarts_used} guesses)")
for run in best.guess_stats:
    print(f"  run {run['run']}: {'%.2f d' % run['tof_days'] if run['converged'] else 'no convergence'}")

traj = ocp.transfer_trajectory(best, problem)
cone = np.degrees(traj.controls[:, 0])
print(f"\narrival {mjd_to_date(START_MJD + best.tof_days)}; {len(traj)} integrator steps")
print(f"cone angle: min {cone.min():.1f}, mean {cone.mean():.1f}, max {cone.max():.1f} deg")

costates = traj.stats["costates"]
ys = np.hstack([traj.states, costates])
h = [ocp.extremal_hamiltonian(y, best.unknowns.costate0.lambda0, BETA) for y in ys]
print(f"Hamiltonian drift along the arc: {np.ptp(h):.1e}")

export_trajectory_csv(traj, "transfer.csv")
print("trajectory written to transfer.csv")
