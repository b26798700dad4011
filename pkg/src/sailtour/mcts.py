"""UCT Monte Carlo tree search over asteroid visit sequences.

Leg durations come from a cost oracle (normally the surrogate network).  A
node's ``elapsed`` is the rendezvous time at its target measured from the
launch; the sail leaves ``stay_days`` later.  The tree is committed layer by
layer: a batch of simulations from the current root, then the best child
becomes the new root.
"""
from __future__ import annotations

import csv
import json
import logging
import math
from collections import OrderedDict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from itertools import permutations
from pathlib import Path

import numpy as np

from .astro import KeplerianElements, coe_to_features, make_rng, propagate_to
from .net import MlpModel, forward
from .units import CANONICAL, mjd_to_date

log = logging.getLogger(__name__)

IDENTITY_SANITY_DAYS = 30.0


# ---------------------------------------------------------------------------
# leg cost


class SurrogateOracle:
    """Leg durations predicted by a trained network, memoized per (from, to, epoch)."""

    def __init__(self, model: MlpModel, cache_size: int = 200_000):
        self.model = model
        self.cache_size = cache_size
        self._cache = OrderedDict()
        self.calls = 0
        self.evaluations = 0

    def leg_days(self, from_id, from_coe, to_id, to_coe, epoch: float) -> float:
        self.calls += 1
        key = (from_id, to_id, epoch)
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        days = estimate_leg(self.model, from_coe, to_coe, epoch)
        self.evaluations += 1
        self._cache[key] = days
        if len(self._cache) > self.cache_size:
            self._cache.popitem(last=False)
        return days


class MatrixOracle:
    """Epoch-independent leg costs from a table; handy for brute-force checks."""

    def __init__(self, table: dict):
        self.table = table

    def leg_days(self, from_id, from_coe, to_id, to_coe, epoch: float) -> float:
        return self.table[(from_id, to_id)]


def estimate_leg(model: MlpModel, departure: KeplerianElements, arrival: KeplerianElements, epoch: float) -> float:
    """Predicted transfer days leaving ``departure`` at ``epoch`` (TU)."""
    dep = propagate_to(departure, epoch)
    arr = propagate_to(arrival, epoch)
    return float(forward(model, coe_to_features((dep, arr), model.feature_kind))[0])


def identity_sanity(model: MlpModel, body: KeplerianElements, epoch: float):
    """(estimate for a self-transfer, flagged) -- a well trained model stays near zero."""
    days = estimate_leg(model, body, body, epoch)
    flagged = not (0.0 < days <= IDENTITY_SANITY_DAYS)
    if flagged:
        log.warning("self-transfer estimate %.1f days is outside (0, %.0f]", days, IDENTITY_SANITY_DAYS)
    return days, flagged


# ---------------------------------------------------------------------------
# tree


@dataclass(frozen=True)
class UctConfig:
    cp: float = 0.5
    sims_per_layer: int = 2000
    restarts: int = 1
    max_depth: int = 5
    dt_max_days: float | None = None  # defaults to max_depth * 365
    stay_days: float = 10.0
    seed: int = 0
    best_child: str = "average"  # or "visits"

    def __post_init__(self):
        if self.cp < 0.0:
            raise ValueError("cp must be >= 0")
        if self.dt_max_days is not None and not self.dt_max_days > 0.0:
            raise ValueError("dt_max_days must be positive")
        if self.max_depth < 1 or self.sims_per_layer < 1 or self.restarts < 1:
            raise ValueError("max_depth, sims_per_layer and restarts must be >= 1")
        if self.best_child not in ("average", "visits"):
            raise ValueError("best_child must be 'average' or 'visits'")

    @property
    def horizon(self) -> float:
        return self.dt_max_days if self.dt_max_days is not None else 365.0 * self.max_depth


class MctsNode:
    __slots__ = ("target_id", "parent", "depth", "elapsed", "leg_days", "visits", "total_quality",
                 "children", "untried")

    def __init__(self, target_id, parent=None, elapsed=0.0, leg_days=0.0, untried=()):
        self.target_id = target_id
        self.parent = parent
        self.depth = 0 if parent is None else parent.depth + 1
        self.elapsed = elapsed
        self.leg_days = leg_days
        self.visits = 0
        self.total_quality = 0.0
        self.children = []
        self.untried = list(untried)

    @property
    def average(self) -> float:
        return self.total_quality / self.visits if self.visits else 0.0

    def path(self) -> list:
        out, node = [], self
        while node.parent is not None:
            out.append(node)
            node = node.parent
        return out[::-1]

    def visited_ids(self) -> set:
        return {n.target_id for n in self.path()}

    def __repr__(self):
        return f"MctsNode({self.target_id!r}, depth={self.depth}, N={self.visits}, Q={self.total_quality:.4g})"


@dataclass
class SequenceProblem:
    """Start body and epoch, candidate targets and the leg-cost oracle."""
    start_id: str
    start: KeplerianElements
    start_epoch: float  # TU
    targets: dict  # id -> KeplerianElements
    oracle: object

    def __post_init__(self):
        if not self.targets:
            raise ValueError("empty target set")
        if self.oracle is None:
            raise ValueError("a leg-cost oracle (surrogate) is required")

    def body(self, body_id) -> KeplerianElements:
        return self.start if body_id == self.start_id else self.targets[body_id]

    def departure_epoch(self, node: MctsNode, stay_days: float) -> float:
        """Epoch (TU) at which the sail leaves the body of ``node``."""
        offset = 0.0 if node.parent is None else node.elapsed + stay_days
        return self.start_epoch + offset / CANONICAL.days_per_tu

    def leg(self, node: MctsNode, to_id, stay_days: float) -> float:
        return self.oracle.leg_days(node.target_id, self.body(node.target_id), to_id, self.targets[to_id],
                                    self.departure_epoch(node, stay_days))


@dataclass
class MissionSequence:
    start_id: str
    start_mjd: float
    target_ids: list
    leg_days: list
    stay_days: float
    rendezvous_mjd: list = field(default_factory=list)
    departure_mjd: list = field(default_factory=list)

    def __post_init__(self):
        if not self.rendezvous_mjd:
            self.rendezvous_mjd, self.departure_mjd = [], []
            t = self.start_mjd
            for k, leg in enumerate(self.leg_days):
                t = t + leg
                self.rendezvous_mjd.append(t)
                t = t + self.stay_days
                self.departure_mjd.append(t)

    @property
    def total_days(self) -> float:
        """Launch to the last rendezvous (legs plus the stays between them)."""
        return self.rendezvous_mjd[-1] - self.start_mjd if self.leg_days else 0.0

    def __len__(self):
        return len(self.target_ids)

    def to_dict(self) -> dict:
        return {
            "start_id": self.start_id, "start_mjd": self.start_mjd, "stay_days": self.stay_days,
            "target_ids": list(self.target_ids), "leg_days": list(self.leg_days),
            "rendezvous_mjd": list(self.rendezvous_mjd), "departure_mjd": list(self.departure_mjd),
            "total_days": self.total_days,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MissionSequence":
        return cls(d["start_id"], d["start_mjd"], list(d["target_ids"]), list(d["leg_days"]), d["stay_days"],
                   list(d["rendezvous_mjd"]), list(d["departure_mjd"]))


def reward(dt_days: float, dt_max_days: float) -> float:
    return min(1.0, max(0.0, (dt_max_days - dt_days) / dt_max_days))


def uct_value(child: MctsNode, parent_visits: int, cp: float) -> float:
    return child.total_quality / child.visits + cp * math.sqrt(2.0 * math.log(parent_visits) / child.visits)


def uct_select(node: MctsNode, cp: float, rng: np.random.Generator) -> MctsNode:
    """Child maximizing the UCT score; exact ties are broken at random."""
    if node.untried or not node.children:
        raise ValueError("uct_select needs a fully expanded node")
    if any(c.visits == 0 for c in node.children):
        raise ValueError("every child must have been visited")
    n = sum(c.visits for c in node.children) if node.visits == 0 else node.visits
    scores = np.array([uct_value(c, n, cp) for c in node.children])
    best = np.flatnonzero(scores == scores.max())
    k = best[0] if best.size == 1 else best[rng.integers(best.size)]
    return node.children[int(k)]


def expand(node: MctsNode, problem: SequenceProblem, config: UctConfig, rng) -> MctsNode:
    k = int(rng.integers(len(node.untried)))
    target = node.untried.pop(k)
    leg = problem.leg(node, target, config.stay_days)
    elapsed = (0.0 if node.parent is None else node.elapsed + config.stay_days) + leg
    rest = [t for t in problem.targets if t != target and t not in node.visited_ids()]
    untried = rest if node.depth + 1 < config.max_depth else []
    child = MctsNode(target, node, elapsed, leg, untried)
    node.children.append(child)
    return child


def rollout(leaf: MctsNode, problem: SequenceProblem, config: UctConfig, rng, dt_max=None) -> float:
    """Random completion of the leaf's sequence to ``max_depth``; returns the reward."""
    dt_max = config.horizon if dt_max is None else dt_max
    dt, _ = rollout_sequence(leaf, problem, config, rng)
    return reward(dt, dt_max)


def rollout_sequence(leaf: MctsNode, problem: SequenceProblem, config: UctConfig, rng):
    remaining = config.max_depth - leaf.depth
    if remaining < 0:
        raise ValueError("leaf lies below max_depth")
    visited = leaf.visited_ids()
    pool = [t for t in problem.targets if t not in visited]
    if len(pool) < remaining:
        raise ValueError(f"{len(pool)} targets left for {remaining} remaining legs")
    order = [pool[int(k)] for k in rng.permutation(len(pool))[:remaining]] if remaining else []
    node_id, elapsed, at_start = leaf.target_id, leaf.elapsed, leaf.parent is None
    ids = [n.target_id for n in leaf.path()]
    for t in order:
        dep_offset = 0.0 if at_start else elapsed + config.stay_days
        epoch = problem.start_epoch + dep_offset / CANONICAL.days_per_tu
        leg = problem.oracle.leg_days(node_id, problem.body(node_id), t, problem.targets[t], epoch)
        elapsed = dep_offset + leg
        node_id, at_start = t, False
        ids.append(t)
    return elapsed, ids


def backpropagate(leaf: MctsNode, value: float) -> int:
    """Add one visit and ``value`` to the leaf and every ancestor; returns nodes touched."""
    node, count = leaf, 0
    while node is not None:
        node.visits += 1
        node.total_quality += value
        node = node.parent
        count += 1
    return count


def simulate_once(root: MctsNode, problem: SequenceProblem, config: UctConfig, rng, dt_max: float):
    """One select/expand/rollout/backpropagate iteration below ``root``."""
    node = root
    while not node.untried and node.children:
        node = uct_select(node, config.cp, rng)
    if node.untried:
        node = expand(node, problem, config, rng)
    dt, ids = rollout_sequence(node, problem, config, rng)
    backpropagate(node, reward(dt, dt_max))
    return dt, ids


def best_child(node: MctsNode, how: str = "average") -> MctsNode:
    if not node.children:
        raise ValueError("node has no children")
    if how == "visits":
        return max(node.children, key=lambda c: (c.visits, c.average))
    return max(node.children, key=lambda c: (c.average, c.visits))


@dataclass
class SearchRun:
    sequence: MissionSequence  # best of the committed path and the best simulated sequence
    layer_choices: list
    best_rollout: list
    best_rollout_days: float
    root_visits: int
    committed: MissionSequence | None = None


def _new_root(problem: SequenceProblem, config: UctConfig) -> MctsNode:
    if len(problem.targets) < config.max_depth:
        raise ValueError(f"{len(problem.targets)} targets cannot fill a sequence of depth {config.max_depth}")
    return MctsNode(problem.start_id, None, 0.0, 0.0, list(problem.targets))


def run_layers(problem: SequenceProblem, config: UctConfig, rng) -> SearchRun:
    """One search: simulate from the current root, commit the best child, descend.

    The run's result is the shorter of the committed path and the best
    complete sequence met in any simulation.
    """
    dt_max = config.horizon
    tree = _new_root(problem, config)
    root = tree
    best_ids, best_dt = None, math.inf
    choices = []
    for layer in range(config.max_depth):
        for _ in range(config.sims_per_layer):
            dt, ids = simulate_once(root, problem, config, rng, dt_max)
            if dt < best_dt:
                best_dt, best_ids = dt, ids
        root = best_child(root, config.best_child)
        choices.append({"layer": layer + 1, "target": root.target_id, "visits": root.visits,
                        "average": root.average})
    if best_dt >= dt_max:
        log.warning("every simulated sequence took at least dt_max (%.0f d), so all rewards were 0 and the "
                    "tree search was uninformed; raise dt_max_days", dt_max)
    path = root.path()
    committed = MissionSequence(problem.start_id, CANONICAL.tu_to_mjd(problem.start_epoch),
                                [n.target_id for n in path], [n.leg_days for n in path], config.stay_days)
    # every simulated sequence is a stored result; keep the best one found
    seq = committed
    if best_ids is not None and best_dt < committed.total_days:
        seq = sequence_from_order(problem, best_ids, config.stay_days)
    return SearchRun(seq, choices, best_ids, best_dt, tree.visits, committed)


def restart_rng(seed: int, index: int) -> np.random.Generator:
    return make_rng(np.random.SeedSequence(entropy=seed, spawn_key=(index,)))


def _run_restart(args):
    problem, config, r = args
    return run_layers(problem, config, restart_rng(config.seed, r))


@dataclass
class SearchResult:
    best: MissionSequence
    runs: list

    @property
    def restart_totals(self) -> list:
        return [r.sequence.total_days for r in self.runs]

    def to_dict(self) -> dict:
        return {
            "best": self.best.to_dict(),
            "restart_totals_days": self.restart_totals,
            "runs": [{"sequence": r.sequence.to_dict(), "layers": r.layer_choices,
                      "committed": None if r.committed is None else r.committed.to_dict(),
                      "best_rollout": r.best_rollout, "best_rollout_days": r.best_rollout_days}
                     for r in self.runs],
        }


def search_sequence(problem: SequenceProblem, config: UctConfig, jobs: int = 1) -> SearchResult:
    """Best committed sequence (minimum total days) over ``config.restarts`` runs."""
    tasks = [(problem, config, r) for r in range(config.restarts)]
    if jobs > 1 and config.restarts > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            runs = list(pool.map(_run_restart, tasks))
    else:
        runs = [_run_restart(t) for t in tasks]
    # first minimum wins, so the reduction does not depend on scheduling
    best = min(runs, key=lambda r: r.sequence.total_days).sequence
    return SearchResult(best, runs)


def sequence_from_order(problem: SequenceProblem, order, stay_days: float) -> MissionSequence:
    """Evaluate a fixed visiting order with the problem's oracle."""
    node = MctsNode(problem.start_id)
    legs = []
    for t in order:
        leg = problem.leg(node, t, stay_days)
        legs.append(leg)
        node = MctsNode(t, node, (0.0 if node.parent is None else node.elapsed + stay_days) + leg, leg)
    return MissionSequence(problem.start_id, CANONICAL.tu_to_mjd(problem.start_epoch), list(order), legs, stay_days)


def brute_force(problem: SequenceProblem, depth: int, stay_days: float) -> MissionSequence:
    """Exhaustive minimum over every ordered selection of ``depth`` targets."""
    best = None
    for order in permutations(problem.targets, depth):
        seq = sequence_from_order(problem, order, stay_days)
        if best is None or seq.total_days < best.total_days:
            best = seq
    return best


def select_targets(problem: SequenceProblem, horizon_days: float, config: UctConfig, start_depth: int = 5,
                   max_depth: int | None = None, jobs: int = 1):
    """Longest sequence whose total time fits in ``horizon_days``.

    Depth starts at ``start_depth`` and grows while the best sequence fits;
    if the first depth does not fit it shrinks instead.  Returns
    ``(sequence, attempts)`` where ``attempts`` lists every depth tried.
    """
    cap = len(problem.targets) if max_depth is None else min(max_depth, len(problem.targets))
    depth = max(1, min(start_depth, cap))
    attempts = []
    found = None

    def run(d):
        cfg = replace(config, max_depth=d, dt_max_days=horizon_days)
        res = search_sequence(problem, cfg, jobs)
        attempts.append({"depth": d, "total_days": res.best.total_days,
                         "feasible": res.best.total_days <= horizon_days,
                         "restart_totals_days": res.restart_totals})
        return res.best

    seq = run(depth)
    if seq.total_days <= horizon_days:
        found = seq
        while depth < cap:
            depth += 1
            seq = run(depth)
            if seq.total_days > horizon_days:
                break
            found = seq
    else:
        while depth > 1:
            depth -= 1
            seq = run(depth)
            if seq.total_days <= horizon_days:
                found = seq
                break
    if found is None:
        found = MissionSequence(problem.start_id, CANONICAL.tu_to_mjd(problem.start_epoch), [], [],
                                config.stay_days)
    return found, attempts


def tune_cp(problem: SequenceProblem, cp_grid, runs: int, config: UctConfig, jobs: int = 1) -> list:
    """min/mean/max total days of ``runs`` independent searches per cp value.

    Run ``r`` uses the same seed stream for every cp, so the rows are paired.
    ``committed_mean_days`` averages the layer-by-layer committed paths,
    which show the exploration trade-off even when the best stored
    sequence is already optimal.
    """
    if not len(cp_grid):
        raise ValueError("cp grid is empty")
    rows = []
    for cp in cp_grid:
        totals, committed = [], []
        for r in range(runs):
            cfg = replace(config, cp=float(cp), restarts=1,
                          seed=int(np.random.SeedSequence(entropy=config.seed, spawn_key=(r,)).generate_state(1)[0]))
            res = search_sequence(problem, cfg, jobs)
            totals.append(res.best.total_days)
            committed.append(res.runs[0].committed.total_days)
        t = np.array(totals)
        rows.append({"cp": float(cp), "runs": runs, "min_days": float(t.min()), "mean_days": float(t.mean()),
                     "max_days": float(t.max()), "committed_mean_days": float(np.mean(committed)),
                     "totals": totals})
    return rows


# ---------------------------------------------------------------------------
# reports


def save_search_report(result: SearchResult, path, extra: dict | None = None) -> None:
    doc = result.to_dict()
    if extra:
        doc["run"] = extra
    Path(path).write_text(json.dumps(doc, indent=1))


def save_tuning_csv(rows: list, path) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["cp", "runs", "min_days", "mean_days", "max_days", "committed_mean_days"])
        for r in rows:
            w.writerow([r["cp"], r["runs"], repr(r["min_days"]), repr(r["mean_days"]), repr(r["max_days"]),
                        repr(r["committed_mean_days"])])


def save_legs_csv(seq: MissionSequence, path) -> None:
    """Per-leg bar data: leg length and rendezvous epoch."""
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["leg", "from", "to", "leg_days", "rendezvous_mjd", "rendezvous_date", "departure_mjd"])
        prev = seq.start_id
        for k, (t, leg, rv, dp) in enumerate(zip(seq.target_ids, seq.leg_days, seq.rendezvous_mjd,
                                                 seq.departure_mjd)):
            w.writerow([k + 1, prev, t, repr(leg), repr(rv), mjd_to_date(rv), repr(dp)])
            prev = t
