"""Leg-by-leg verification of a planned sequence with the optimal-control solver."""
from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import ocp
from .mcts import MissionSequence
from .units import CANONICAL, mjd_to_date

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class VerifyConfig:
    beta: float = 0.1265
    best_of: int = 10
    max_guesses: int = 100
    margin_days: float = 150.0
    widen_factors: tuple = (2.0, None)  # None: the full default time-of-flight range
    min_tof_days: float = 5.0
    default_tof_days: tuple = (50.0, 1500.0)
    free_t0: bool = False
    seed: int = 0


@dataclass
class LegRecord:
    index: int
    from_id: str
    target_id: str
    predicted_days: float
    verified_days: float  # nan when the leg did not converge
    converged: bool
    epoch_verified: bool  # false once any earlier leg failed
    departure_mjd: float  # actual departure used for the solve
    predicted_rendezvous_mjd: float
    verified_rendezvous_mjd: float
    residual_norm: float = math.nan
    attempts: list = field(default_factory=list)

    @property
    def deviation_days(self) -> float:
        return self.verified_days - self.predicted_days

    @property
    def rendezvous_deviation_days(self) -> float:
        return self.verified_rendezvous_mjd - self.predicted_rendezvous_mjd

    def to_dict(self) -> dict:
        return {
            "index": self.index, "from": self.from_id, "target": self.target_id,
            "predicted_days": self.predicted_days, "verified_days": self.verified_days,
            "deviation_days": self.deviation_days, "converged": self.converged,
            "epoch_verified": self.epoch_verified, "departure_mjd": self.departure_mjd,
            "predicted_rendezvous_mjd": self.predicted_rendezvous_mjd,
            "verified_rendezvous_mjd": self.verified_rendezvous_mjd,
            "rendezvous_deviation_days": self.rendezvous_deviation_days,
            "residual_norm": self.residual_norm, "attempts": self.attempts,
        }


@dataclass
class VerificationReport:
    sequence: MissionSequence
    legs: list
    stay_days: float

    @property
    def predicted_total_days(self) -> float:
        return math.fsum(l.predicted_days for l in self.legs) + self.stay_days * max(len(self.legs) - 1, 0)

    @property
    def verified_total_days(self) -> float:
        """Sum of verified legs plus stays; nan if any leg is unverified."""
        return math.fsum(l.verified_days for l in self.legs) + self.stay_days * max(len(self.legs) - 1, 0)

    @property
    def total_deviation_days(self) -> float:
        return self.verified_total_days - self.predicted_total_days

    @property
    def relative_deviation(self) -> float:
        v = self.verified_total_days
        return abs(self.total_deviation_days) / v if v > 0 else math.nan

    @property
    def converged_fraction(self) -> float:
        return sum(l.converged for l in self.legs) / len(self.legs) if self.legs else 1.0

    @property
    def complete(self) -> bool:
        return all(l.converged for l in self.legs)

    def to_dict(self) -> dict:
        return {
            "sequence": self.sequence.to_dict(),
            "stay_days": self.stay_days,
            "legs": [l.to_dict() for l in self.legs],
            "predicted_total_days": self.predicted_total_days,
            "verified_total_days": _json_num(self.verified_total_days),
            "total_deviation_days": _json_num(self.total_deviation_days),
            "relative_deviation": _json_num(self.relative_deviation),
            "converged_fraction": self.converged_fraction,
            "complete": self.complete,
        }


def _json_num(x):
    return None if isinstance(x, float) and math.isnan(x) else x


def _tof_windows(predicted: float, cfg: VerifyConfig):
    lo_default, hi_default = cfg.default_tof_days
    margin = cfg.margin_days
    yield max(cfg.min_tof_days, predicted - margin), predicted + margin
    for f in cfg.widen_factors:
        if f is None:
            yield lo_default, max(hi_default, predicted + 2 * margin)
        else:
            yield max(cfg.min_tof_days, predicted - f * margin), predicted + f * margin


def solve_leg(departure, arrival, t0: float, predicted_days: float, cfg: VerifyConfig, seed: int):
    """Best-of-N solve in a window around the prediction, widening after failures.

    Returns ``(transfer or None, attempts)``.
    """
    days = CANONICAL.days_per_tu
    attempts = []
    for lo, hi in _tof_windows(predicted_days, cfg):
        problem = ocp.ShootingProblem(departure, arrival, t0, cfg.beta, free_t0=cfg.free_t0,
                                      tof_bounds=(lo / days, hi / days), max_guesses=cfg.max_guesses, seed=seed)
        try:
            best = ocp.solve_transfer_best_of(problem, cfg.best_of)
        except ocp.NoConvergence:
            attempts.append({"window_days": [lo, hi], "converged": False})
            log.info("leg not converged in window [%.0f, %.0f] days; widening", lo, hi)
            continue
        attempts.append({"window_days": [lo, hi], "converged": True, "tof_days": best.tof_days})
        return best, attempts
    return None, attempts


def verify_sequence(sequence: MissionSequence, bodies: dict, cfg: VerifyConfig = VerifyConfig(),
                    progress=None) -> VerificationReport:
    """Re-solve every leg at its actual departure epoch.

    Epochs roll forward with verified leg times.  A leg that does not converge
    advances the clock by its predicted time instead, and every later epoch is
    flagged as unverified (the later legs are still solved).
    """
    stay = sequence.stay_days
    t_mjd = sequence.start_mjd
    from_id = sequence.start_id
    epochs_ok = True
    legs = []
    for k, (target, pred) in enumerate(zip(sequence.target_ids, sequence.leg_days)):
        seed = int(np.random.SeedSequence(entropy=cfg.seed, spawn_key=(k,)).generate_state(1)[0])
        t0 = CANONICAL.mjd_to_tu(t_mjd)
        best, attempts = solve_leg(bodies[from_id], bodies[target], t0, pred, cfg, seed)
        if best is not None and cfg.free_t0 and best.unknowns.t0 is not None:
            t_mjd = CANONICAL.tu_to_mjd(best.unknowns.t0)
        converged = best is not None
        verified = best.tof_days if converged else math.nan
        step = verified if converged else pred
        rec = LegRecord(k, from_id, target, pred, verified, converged, epochs_ok, t_mjd,
                        sequence.rendezvous_mjd[k], t_mjd + step,
                        best.residual_norm if converged else math.nan, attempts)
        if not converged:
            log.warning("leg %d (%s -> %s) did not converge; later epochs are unverified", k + 1, from_id, target)
            epochs_ok = False
            rec.epoch_verified = False
        legs.append(rec)
        if progress is not None:
            progress(k + 1, len(sequence.target_ids), rec)
        t_mjd = t_mjd + step + stay
        from_id = target
    return VerificationReport(sequence, legs, stay)


def deviation_summary(reports) -> list:
    """One row per report, sorted by predicted total time."""
    if not reports:
        raise ValueError("at least one report is required")
    rows = []
    for rep in sorted(reports, key=lambda r: r.predicted_total_days):
        rows.append({
            "targets": list(rep.sequence.target_ids),
            "predicted_total_days": rep.predicted_total_days,
            "verified_total_days": rep.verified_total_days,
            "deviation_days": rep.total_deviation_days,
            "relative_error": rep.relative_deviation,
            "converged_fraction": rep.converged_fraction,
        })
    return rows


def save_report_json(report: VerificationReport, path, extra: dict | None = None) -> None:
    doc = report.to_dict()
    if extra:
        doc["run"] = extra
    Path(path).write_text(json.dumps(doc, indent=1, allow_nan=False, default=_json_num))


def save_report_csv(report: VerificationReport, path) -> None:
    """Rendezvous / departure epochs (verified and predicted) with calendar dates."""
    seq = report.sequence
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["object", "rendezvous_mjd", "rendezvous_date", "predicted_rendezvous_mjd",
                    "predicted_rendezvous_date", "departure_mjd", "departure_date", "predicted_departure_mjd",
                    "predicted_departure_date", "leg_predicted_days", "leg_verified_days", "leg_deviation_days",
                    "deviation_days", "converged", "epoch_verified"])
        w.writerow([seq.start_id, "", "", "", "", repr(seq.start_mjd), mjd_to_date(seq.start_mjd),
                    repr(seq.start_mjd), mjd_to_date(seq.start_mjd), "", "", "", 0.0, True, True])
        n = len(report.legs)
        for k, leg in enumerate(report.legs):
            last = k == n - 1
            rv, prv = leg.verified_rendezvous_mjd, leg.predicted_rendezvous_mjd
            dep = "" if last else repr(rv + report.stay_days)
            pdep = "" if last else repr(seq.departure_mjd[k])
            w.writerow([leg.target_id, repr(rv), mjd_to_date(rv), repr(prv), mjd_to_date(prv),
                        dep, "" if last else mjd_to_date(rv + report.stay_days),
                        pdep, "" if last else mjd_to_date(seq.departure_mjd[k]),
                        repr(leg.predicted_days), repr(leg.verified_days), repr(leg.deviation_days),
                        repr(leg.rendezvous_deviation_days), leg.converged, leg.epoch_verified])


def save_summary_csv(rows: list, path) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["rank", "targets", "predicted_total_days", "verified_total_days", "deviation_days",
                    "relative_error", "converged_fraction"])
        for k, r in enumerate(rows):
            w.writerow([k + 1, " ".join(r["targets"]), repr(r["predicted_total_days"]),
                        repr(r["verified_total_days"]), repr(r["deviation_days"]), repr(r["relative_error"]),
                        r["converged_fraction"]])
