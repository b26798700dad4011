"""Body catalogs: CSV ingestion and element-box filtering."""
from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

from .astro import NEA_BOUNDS, KeplerianElements, in_nea_bounds, mean_to_true
from .units import CANONICAL

log = logging.getLogger(__name__)

CATALOG_HEADER = ["id", "a_au", "e", "i_deg", "raan_deg", "argp_deg", "ma_deg", "epoch_mjd"]


class CatalogError(ValueError):
    pass


@dataclass(frozen=True)
class BodyCatalog:
    entries: tuple = field(default_factory=tuple)
    source_epoch: float = 0.0

    def __post_init__(self):
        entries = tuple((str(k), v) for k, v in self.entries)
        ids = [k for k, _ in entries]
        if len(set(ids)) != len(ids):
            dup = sorted({k for k in ids if ids.count(k) > 1})
            raise CatalogError(f"duplicate identifiers: {dup[:5]}")
        object.__setattr__(self, "entries", entries)

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    @property
    def ids(self) -> list[str]:
        return [k for k, _ in self.entries]

    def get(self, body_id: str) -> KeplerianElements:
        for k, v in self.entries:
            if k == body_id:
                return v
        raise KeyError(body_id)

    def as_dict(self) -> dict:
        return dict(self.entries)


def load_catalog(path, units=CANONICAL) -> BodyCatalog:
    """Read a catalog CSV (angles in degrees, mean anomaly, MJD epochs)."""
    path = Path(path)
    entries = []
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise CatalogError(f"{path}: empty file") from None
        if header != CATALOG_HEADER:
            raise CatalogError(f"{path}:1: expected header {','.join(CATALOG_HEADER)}")
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(CATALOG_HEADER):
                raise CatalogError(f"{path}:{lineno}: expected {len(CATALOG_HEADER)} fields, got {len(row)}")
            try:
                a, e, i, raan, argp, ma, mjd = (float(c) for c in row[1:])
                coe = KeplerianElements(
                    a, e, math.radians(i), math.radians(raan), math.radians(argp),
                    mean_to_true(math.radians(ma), e), units.mjd_to_tu(mjd),
                )
            except ValueError as exc:
                raise CatalogError(f"{path}:{lineno}: {exc}") from exc
            entries.append((row[0].strip(), coe))
    source_epoch = entries[0][1].epoch if entries else 0.0
    return BodyCatalog(tuple(entries), source_epoch)


def save_catalog(catalog: BodyCatalog, path, units=CANONICAL) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(CATALOG_HEADER)
        for body_id, c in catalog:
            w.writerow([body_id, repr(c.a), repr(c.e), repr(math.degrees(c.i)),
                        repr(math.degrees(c.raan)), repr(math.degrees(c.argp)),
                        repr(math.degrees(c.mean_anomaly)), repr(units.tu_to_mjd(c.epoch))])


def filter_catalog(catalog: BodyCatalog, bounds=NEA_BOUNDS) -> BodyCatalog:
    """Keep the entries whose (a, e, i) fall inside ``bounds``."""
    kept = tuple((k, v) for k, v in catalog if in_nea_bounds(v, bounds))
    if not kept:
        log.warning("catalog filter removed every entry")
    return BodyCatalog(kept, catalog.source_epoch)


def catalog_from_samples(samples, prefix: str = "PNEA") -> BodyCatalog:
    entries = tuple((f"{prefix}-{k:05d}", c) for k, c in enumerate(samples))
    return BodyCatalog(entries, samples[0].epoch if samples else 0.0)


# Earth mean elements at J2000 (MJD 51544.5), ecliptic frame; i = 0 with the
# node placed on the x axis.
EARTH_J2000 = {"a_au": 1.00000261, "e": 0.01671123, "argp_deg": 102.93768193,
               "ma_deg": -2.47311027, "epoch_mjd": 51544.5}


def earth_elements(units=CANONICAL) -> KeplerianElements:
    """Two-body Earth orbit used as the mission start body."""
    d = EARTH_J2000
    return KeplerianElements(d["a_au"], d["e"], 0.0, 0.0, math.radians(d["argp_deg"]),
                             mean_to_true(math.radians(d["ma_deg"]), d["e"]), units.mjd_to_tu(d["epoch_mjd"]))
