"""Training corpus: random element pairs labelled with optimal transfer times."""
from __future__ import annotations

import csv
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import ocp
from .astro import KeplerianElements, coe_to_features, make_rng, sample_pseudo_neas
from .units import CANONICAL, REFERENCE_MJD

log = logging.getLogger(__name__)

FORMAT_NAME = "sailtour-dataset"
FORMAT_VERSION = 1
DEFAULT_BETA = 0.1265


class DatasetFormatError(ValueError):
    pass


@dataclass(frozen=True)
class DatasetConfig:
    count: int
    seed: int
    beta: float = DEFAULT_BETA
    epoch_mjd: float = REFERENCE_MJD
    best_of: int = 10
    max_guesses: int = 100
    tof_min_days: float = 50.0
    tof_max_days: float = 1500.0

    def __post_init__(self):
        if self.count < 1:
            raise ValueError("count must be >= 1")
        if self.best_of < 1 or self.max_guesses < 1:
            raise ValueError("best_of and max_guesses must be >= 1")


@dataclass(frozen=True)
class TransferSample:
    departure: KeplerianElements
    arrival: KeplerianElements
    transfer_days: float
    meta: dict = field(default_factory=dict)  # seed, restarts, residual, run_tofs

    def to_record(self) -> dict:
        return {
            "departure": _coe_list(self.departure),
            "arrival": _coe_list(self.arrival),
            "transfer_days": self.transfer_days,
            "meta": self.meta,
        }

    @classmethod
    def from_record(cls, rec: dict) -> "TransferSample":
        return cls(_coe_from(rec["departure"]), _coe_from(rec["arrival"]),
                   float(rec["transfer_days"]), dict(rec.get("meta", {})))


@dataclass
class Dataset:
    samples: list
    config: DatasetConfig | None = None
    dropped: list = field(default_factory=list)  # pair indices that failed to converge

    def __len__(self):
        return len(self.samples)

    def labels(self) -> np.ndarray:
        return np.array([s.transfer_days for s in self.samples])

    def features(self, kind: str = "COE") -> np.ndarray:
        if not self.samples:
            return np.empty((0, 12))
        return np.vstack([coe_to_features((s.departure, s.arrival), kind) for s in self.samples])

    def subset(self, idx) -> "Dataset":
        return Dataset([self.samples[k] for k in idx], self.config, [])


def _coe_list(c: KeplerianElements) -> list:
    return [c.a, c.e, c.i, c.raan, c.argp, c.true_anomaly, c.epoch]


def _coe_from(v) -> KeplerianElements:
    if len(v) != 7:
        raise ValueError(f"expected 7 element values, got {len(v)}")
    return KeplerianElements(*(float(x) for x in v))


# ---------------------------------------------------------------------------
# generation

def pair_stream(seed: int, index: int) -> np.random.SeedSequence:
    """Independent seed sequence owned by one pair of the corpus."""
    return np.random.SeedSequence(entropy=seed, spawn_key=(index,))


def sample_pair(seed: int, index: int, epoch: float):
    ss = pair_stream(seed, index)
    bodies = sample_pseudo_neas(2, ss, epoch)
    solver_seed = int(make_rng(ss.spawn(1)[0]).integers(0, 2**63 - 1))
    return bodies[0], bodies[1], solver_seed


def label_pair(departure: KeplerianElements, arrival: KeplerianElements, cfg: DatasetConfig,
               solver_seed: int) -> TransferSample | None:
    """Best-of-N optimal transfer time for one pair, or None when every run fails."""
    days = CANONICAL.days_per_tu
    problem = ocp.ShootingProblem(
        departure, arrival, CANONICAL.mjd_to_tu(cfg.epoch_mjd), cfg.beta,
        tof_bounds=(cfg.tof_min_days / days, cfg.tof_max_days / days),
        max_guesses=cfg.max_guesses, seed=solver_seed,
    )
    try:
        best = ocp.solve_transfer_best_of(problem, cfg.best_of)
    except ocp.NoConvergence:
        return None
    if cfg.best_of == 1:
        run_tofs = [best.tof_days]
    else:
        run_tofs = [r["tof_days"] for r in best.guess_stats if r["converged"]]
    meta = {
        "seed": solver_seed,
        "restarts": best.restarts_used,
        "residual": best.residual_norm,
        "run_tofs": run_tofs,
    }
    return TransferSample(departure, arrival, best.tof_days, meta)


def _label_index(args):
    cfg, index, pair = args
    dep, arr, solver_seed = sample_pair(cfg.seed, index, CANONICAL.mjd_to_tu(cfg.epoch_mjd))
    if pair is not None:
        dep, arr = pair
    return index, label_pair(dep, arr, cfg, solver_seed)


def generate_dataset(count: int, seed: int, beta: float = DEFAULT_BETA, epoch_mjd: float = REFERENCE_MJD,
                     best_of: int = 10, max_guesses: int = 100, jobs: int = 1,
                     pairs=None, progress=None, **kw) -> Dataset:
    """Label ``count`` random pseudo-NEA pairs departing at ``epoch_mjd``.

    Each pair draws from its own stream, so the corpus does not depend on
    ``jobs``.  Pairs with no converged run are dropped and logged.  ``pairs``
    replaces the random bodies with given (departure, arrival) elements.
    """
    cfg = DatasetConfig(count, seed, beta, epoch_mjd, best_of, max_guesses, **kw)
    if pairs is not None and len(pairs) != count:
        raise ValueError("pairs must hold exactly count entries")
    tasks = [(cfg, k, None if pairs is None else pairs[k]) for k in range(count)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_label_index, tasks, chunksize=max(1, count // (8 * jobs))))
    else:
        results = []
        for t in tasks:
            results.append(_label_index(t))
            if progress is not None:
                progress(len(results), count)
    samples, dropped = [], []
    for k, s in results:
        if s is None:
            dropped.append(k)
        else:
            samples.append(s)
    if dropped:
        log.warning("dropped %d of %d pairs (%.1f%%) without a converged transfer: %s",
                    len(dropped), count, 100.0 * len(dropped) / count, dropped[:20])
    log.info("dataset: %d samples, drop rate %.1f%%", len(samples), 100.0 * len(dropped) / count)
    return Dataset(samples, cfg, dropped)


def drop_rate(dataset: Dataset) -> float:
    n = len(dataset.samples) + len(dataset.dropped)
    return len(dataset.dropped) / n if n else 0.0


# ---------------------------------------------------------------------------
# splitting

def split_dataset(dataset: Dataset, ratio: float = 0.9, seed: int = 0):
    """Seeded shuffle, then the first ``ratio`` share becomes the training set."""
    if not 0.0 < ratio < 1.0:
        raise ValueError("ratio must lie strictly between 0 and 1")
    n = len(dataset)
    n_train = int(round(ratio * n))
    if n < 2 or n_train == 0 or n_train == n:
        raise ValueError(f"dataset of {n} samples is too small to split at ratio {ratio}")
    perm = make_rng(seed).permutation(n)
    return dataset.subset(perm[:n_train]), dataset.subset(perm[n_train:])


# ---------------------------------------------------------------------------
# persistence

def save_dataset(dataset: Dataset, path, extra: dict | None = None) -> None:
    """JSON lines: a header with format, version and config, then one sample per line."""
    header = {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "config": None if dataset.config is None else asdict(dataset.config),
        "dropped": list(dataset.dropped),
        "count": len(dataset.samples),
    }
    if extra:
        header["run"] = extra
    with Path(path).open("w", encoding="utf-8") as fh:
        fh.write(json.dumps(header, sort_keys=True) + "\n")
        for s in dataset.samples:
            fh.write(json.dumps(s.to_record(), sort_keys=True) + "\n")


def load_dataset(path) -> Dataset:
    path = Path(path)
    with path.open(encoding="utf-8") as fh:
        lines = fh.read().split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise DatasetFormatError(f"{path}: empty file")
    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError as exc:
        raise DatasetFormatError(f"{path}: unreadable header: {exc}") from exc
    if header.get("format") != FORMAT_NAME:
        raise DatasetFormatError(f"{path}: not a {FORMAT_NAME} file")
    if header.get("version") != FORMAT_VERSION:
        raise DatasetFormatError(f"{path}: format version {header.get('version')} is not supported "
                                 f"(expected {FORMAT_VERSION})")
    samples = []
    for k, line in enumerate(lines[1:]):
        try:
            samples.append(TransferSample.from_record(json.loads(line)))
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise DatasetFormatError(f"{path}: record {k} (line {k + 2}) is invalid: {exc}") from exc
    expected = header.get("count")
    if expected is not None and expected != len(samples):
        raise DatasetFormatError(f"{path}: header announces {expected} records, found {len(samples)}; "
                                 f"record {len(samples)} is missing")
    cfg = header.get("config")
    return Dataset(samples, None if cfg is None else DatasetConfig(**cfg), list(header.get("dropped", [])))


def export_dataset_csv(dataset: Dataset, path) -> None:
    """Flat table for scatter plots: both element sets in degrees, plus the label."""
    cols = ["a", "e", "i_deg", "raan_deg", "argp_deg", "f_deg"]
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([f"dep_{c}" for c in cols] + [f"arr_{c}" for c in cols] + ["transfer_days"])
        for s in dataset.samples:
            row = []
            for c in (s.departure, s.arrival):
                row += [c.a, c.e] + [math.degrees(x) for x in (c.i, c.raan, c.argp, c.true_anomaly)]
            w.writerow([repr(float(x)) for x in row] + [repr(s.transfer_days)])
