"""Re-solve each leg of a planned sequence with the optimal-control solver.

The plan here is made up: three legs with guessed durations.  Verification
solves every leg at the epoch the spacecraft actually reaches, so one leg's
error carries into the departure epochs of all later legs.
"""
from sailtour import catalog as cat
from sailtour import verify
from sailtour.astro import sample_pseudo_neas
from sailtour.mcts import MissionSequence
from sailtour.units import CANONICAL, mjd_to_date

START_MJD = 64329.0
bodies = {f"PNEA{k:03d}": b for k, b in enumerate(sample_pseudo_neas(3, 21, CANONICAL.mjd_to_tu(START_MJD)))}
bodies["Earth"] = cat.earth_elements()

plan = MissionSequence("Earth", START_MJD, ["PNEA000", "PNEA001", "PNEA002"], [400.0, 350.0, 380.0], 10.0)
report = verify.verify_sequence(plan, bodies, verify.VerifyConfig(best_of=3, max_guesses=80, seed=2),
                                progress=lambda k, n, rec: print(f"  solved leg {k}/{n}"))

for leg in report.legs:
    got = f"{leg.verified_days:7.1f} d" if leg.converged else " failed "
    print(f"{leg.from_id:>7} -> {leg.target_id}: planned {leg.predicted_days:6.1f} d, verified {got}, "
          f"arrive {mjd_to_date(leg.verified_rendezvous_mjd)} ({leg.rendezvous_deviation_days:+.1f} d vs plan)")
print(f"total: planned {report.predicted_total_days:.1f} d, verified {report.verified_total_days:.1f} d, "
      f"relative deviation {report.relative_deviation:.1%}")
