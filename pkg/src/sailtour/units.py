"""Canonical heliocentric units (DU = 1 AU, mu_sun = 1)."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

AU_KM = 1.49597870700e8
MU_SUN_KM3S2 = 1.32712440018e11

# Calendar anchor: this MJD maps to t = 0 TU.
REFERENCE_MJD = 57800.0
MJD_UNIX_EPOCH = 40587.0


@dataclass(frozen=True)
class UnitSystem:
    au_km: float = AU_KM
    mu_sun_km3s2: float = MU_SUN_KM3S2
    tu_seconds: float = field(init=False)
    days_per_tu: float = field(init=False)

    def __post_init__(self):
        tu = math.sqrt(self.au_km**3 / self.mu_sun_km3s2)
        object.__setattr__(self, "tu_seconds", tu)
        object.__setattr__(self, "days_per_tu", tu / 86400.0)

    @property
    def accel_unit_mm_s2(self) -> float:
        """Canonical acceleration unit (mu/AU^2) in mm/s^2."""
        return self.mu_sun_km3s2 / self.au_km**2 * 1e6

    def days_to_tu(self, days):
        return days / self.days_per_tu

    def tu_to_days(self, tu):
        return tu * self.days_per_tu

    def mjd_to_tu(self, mjd):
        return (mjd - REFERENCE_MJD) / self.days_per_tu

    def tu_to_mjd(self, tu):
        return REFERENCE_MJD + tu * self.days_per_tu


CANONICAL = UnitSystem()


def mjd_to_date(mjd: float) -> str:
    """Render an MJD as an ISO calendar date (UTC)."""
    import datetime as _dt

    base = _dt.datetime(1970, 1, 1) + _dt.timedelta(days=mjd - MJD_UNIX_EPOCH)
    return base.strftime("%Y-%m-%d")
