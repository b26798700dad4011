import math
from itertools import permutations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sailtour import mcts, net
from sailtour.astro import KeplerianElements
from sailtour.mcts import MatrixOracle, MctsNode, SequenceProblem, UctConfig
from sailtour.units import CANONICAL

BODY = KeplerianElements(1.0, 0.05, 0.05, 0.0, 0.0, 0.0)


def matrix_problem(n_targets, seed=0, scale=1.0, low=50.0, high=400.0):
    rng = np.random.default_rng(seed)
    ids = [f"T{k}" for k in range(n_targets)]
    table = {}
    for a in ["S"] + ids:
        for b in ids:
            if a != b:
                table[(a, b)] = scale * float(rng.uniform(low, high))
    targets = {t: BODY for t in ids}
    return SequenceProblem("S", BODY, 0.0, targets, MatrixOracle(table))


def node_with(children_stats):
    root = MctsNode("S")
    for k, (q, n) in enumerate(children_stats):
        c = MctsNode(f"C{k}", root)
        c.total_quality, c.visits = q, n
        root.children.append(c)
    root.visits = sum(n for _, n in children_stats)
    return root


# ---------------------------------------------------------------------------
# UCT arithmetic

def test_uct_select_exploitation_case():
    root = node_with([(0.9, 9), (0.5, 1)])
    assert uct_pick(root, 0.0) == "C1"  # averages 0.1 vs 0.5


def test_uct_select_exploration_case():
    root = node_with([(0.9, 9), (0.5, 1)])
    v1 = mcts.uct_value(root.children[0], 10, 10.0)
    v2 = mcts.uct_value(root.children[1], 10, 10.0)
    assert v1 == pytest.approx(0.1 + 10 * math.sqrt(2 * math.log(10) / 9))
    assert v1 == pytest.approx(7.25, abs=0.01)
    assert v2 == pytest.approx(21.96, abs=0.01)
    assert uct_pick(root, 10.0) == "C1"
    # exploration picks the less-visited child even when it is worse on average
    root = node_with([(4.5, 9), (0.1, 1)])
    assert uct_pick(root, 0.0) == "C0"
    assert uct_pick(root, 10.0) == "C1"


def uct_pick(root, cp, seed=0):
    return mcts.uct_select(root, cp, np.random.default_rng(seed)).target_id


def test_uct_tie_break_is_uniform():
    root = node_with([(1.0, 2), (1.0, 2), (1.0, 2)])
    rng = np.random.default_rng(5)
    counts = {"C0": 0, "C1": 0, "C2": 0}
    for _ in range(10_000):
        counts[mcts.uct_select(root, 0.5, rng).target_id] += 1
    for v in counts.values():
        assert abs(v - 10_000 / 3) < 200  # about 4.5 standard deviations


def test_uct_select_preconditions():
    root = node_with([(0.5, 1)])
    root.untried = ["X"]
    with pytest.raises(ValueError):
        mcts.uct_select(root, 0.5, np.random.default_rng())
    root = node_with([(0.5, 1), (0.0, 0)])
    with pytest.raises(ValueError):
        mcts.uct_select(root, 0.5, np.random.default_rng())


def test_reward_endpoints():
    assert mcts.reward(1000.0, 1000.0) == 0.0
    assert mcts.reward(0.0, 1000.0) == 1.0
    assert mcts.reward(750.0, 1000.0) == pytest.approx(0.25)
    assert mcts.reward(5000.0, 1000.0) == 0.0


def test_config_validation():
    with pytest.raises(ValueError):
        UctConfig(cp=-1)
    with pytest.raises(ValueError):
        UctConfig(dt_max_days=0.0)
    assert UctConfig(max_depth=4).horizon == 4 * 365
    assert UctConfig(dt_max_days=3650).horizon == 3650


# ---------------------------------------------------------------------------
# tree bookkeeping

def test_backpropagate_counts_and_averages():
    root = MctsNode("S")
    a = MctsNode("A", root)
    b = MctsNode("B", a)
    c = MctsNode("C", b)
    assert mcts.backpropagate(c, 0.2) == 4
    mcts.backpropagate(c, 0.4)
    assert root.visits == 2 and root.average == pytest.approx(0.3)
    assert c.path() == [a, b, c] and c.visited_ids() == {"A", "B", "C"}


def _check_tree(node):
    child_sum = sum(c.visits for c in node.children)
    assert node.visits >= child_sum
    if node.visits:
        assert 0.0 <= node.average <= 1.0
    for c in node.children:
        _check_tree(c)


@settings(max_examples=15)
@given(st.integers(1, 300), st.integers(0, 1000))
def test_tree_consistency(n_sims, seed):
    problem = matrix_problem(6, seed=1)
    config = UctConfig(cp=0.5, max_depth=4)
    root = mcts._new_root(problem, config)
    rng = np.random.default_rng(seed)
    for _ in range(n_sims):
        mcts.simulate_once(root, problem, config, rng, config.horizon)
    assert root.visits == n_sims
    _check_tree(root)


def test_rollout_needs_enough_targets():
    problem = matrix_problem(3)
    config = UctConfig(max_depth=5)
    with pytest.raises(ValueError):
        mcts.rollout(MctsNode("S", untried=[]), problem, config, np.random.default_rng())
    with pytest.raises(ValueError):
        mcts.search_sequence(problem, config)


def test_rollout_from_full_leaf_returns_own_reward():
    problem = matrix_problem(3)
    config = UctConfig(max_depth=2, dt_max_days=1000.0)
    root = MctsNode("S")
    leg1 = problem.oracle.table[("S", "T0")]
    a = MctsNode("T0", root, leg1, leg1)
    leg2 = problem.oracle.table[("T0", "T1")]
    b = MctsNode("T1", a, leg1 + 10 + leg2, leg2)
    r = mcts.rollout(b, problem, config, np.random.default_rng())
    assert r == pytest.approx(mcts.reward(leg1 + 10 + leg2, 1000.0))


def test_problem_requires_targets_and_oracle():
    with pytest.raises(ValueError):
        SequenceProblem("S", BODY, 0.0, {}, MatrixOracle({}))
    with pytest.raises(ValueError):
        SequenceProblem("S", BODY, 0.0, {"A": BODY}, None)


# ---------------------------------------------------------------------------
# epochs

class RecordingOracle:
    def __init__(self):
        self.calls = []

    def leg_days(self, from_id, from_coe, to_id, to_coe, epoch):
        self.calls.append((from_id, to_id, epoch))
        return 100.0


def test_departure_epochs_include_stays():
    oracle = RecordingOracle()
    problem = SequenceProblem("S", BODY, 2.0, {"A": BODY, "B": BODY, "C": BODY}, oracle)
    seq = mcts.sequence_from_order(problem, ["A", "B", "C"], 10.0)
    days = CANONICAL.days_per_tu
    assert [c[2] for c in oracle.calls] == pytest.approx([2.0, 2.0 + 110 / days, 2.0 + 220 / days])
    assert seq.total_days == pytest.approx(320.0)
    assert seq.rendezvous_mjd == pytest.approx([CANONICAL.tu_to_mjd(2.0) + x for x in (100, 210, 320)])
    assert seq.departure_mjd == pytest.approx([CANONICAL.tu_to_mjd(2.0) + x for x in (110, 220, 330)])


def test_mission_sequence_round_trip():
    seq = mcts.MissionSequence("Earth", 64329.0, ["A", "B"], [120.5, 300.25], 10.0)
    assert seq.total_days == pytest.approx(430.75)
    for k in range(len(seq) - 1):
        assert seq.departure_mjd[k] == seq.rendezvous_mjd[k] + 10.0
        assert seq.rendezvous_mjd[k + 1] == seq.departure_mjd[k] + seq.leg_days[k + 1]
    back = mcts.MissionSequence.from_dict(seq.to_dict())
    assert back == seq


# ---------------------------------------------------------------------------
# search

def test_three_targets_match_brute_force():
    for seed in range(5):
        problem = matrix_problem(3, seed=seed)
        truth = mcts.brute_force(problem, 3, 10.0)
        config = UctConfig(cp=0.5, sims_per_layer=200, max_depth=3, seed=seed)
        res = mcts.search_sequence(problem, config)
        assert res.best.target_ids == truth.target_ids
        assert res.runs[0].committed is not None
        assert res.best.total_days == pytest.approx(truth.total_days)


def test_brute_force_enumerates_permutations():
    problem = matrix_problem(3)
    totals = [mcts.sequence_from_order(problem, p, 10.0).total_days for p in permutations(problem.targets)]
    assert mcts.brute_force(problem, 3, 10.0).total_days == min(totals)


def test_depth_one_is_greedy():
    problem = matrix_problem(8, seed=3)
    config = UctConfig(sims_per_layer=50, max_depth=1)
    best = mcts.search_sequence(problem, config).best
    table = problem.oracle.table
    greedy = min(problem.targets, key=lambda t: table[("S", t)])
    assert best.target_ids == [greedy]


def test_fixed_seed_is_bit_identical():
    problem = matrix_problem(7, seed=2)
    config = UctConfig(sims_per_layer=100, max_depth=4, restarts=3, seed=9)
    a = mcts.search_sequence(problem, config)
    b = mcts.search_sequence(problem, config)
    assert a.to_dict() == b.to_dict()


def test_scaling_legs_and_horizon_keeps_choice():
    # powers of two keep every leg sum exact, so rewards and choices match bit for bit
    config = UctConfig(sims_per_layer=150, max_depth=4, seed=4, dt_max_days=1600.0, stay_days=10.0)
    base = mcts.search_sequence(matrix_problem(7, seed=6), config)
    for k in (0.25, 4.0, 32.0):
        scaled = mcts.search_sequence(matrix_problem(7, seed=6, scale=k), UctConfig(
            sims_per_layer=150, max_depth=4, seed=4, dt_max_days=1600.0 * k, stay_days=10.0 * k))
        assert scaled.best.target_ids == base.best.target_ids
        assert scaled.best.total_days == pytest.approx(k * base.best.total_days, rel=1e-12)
        assert [r.committed.target_ids for r in scaled.runs] == [r.committed.target_ids for r in base.runs]


def test_more_restarts_never_hurt():
    problem = matrix_problem(8, seed=11)
    prev = math.inf
    for n in (1, 2, 4, 8):
        res = mcts.search_sequence(problem, UctConfig(cp=0.5, sims_per_layer=40, max_depth=4, restarts=n, seed=1))
        assert res.best.total_days <= prev
        assert len(res.restart_totals) == n
        prev = res.best.total_days


def test_search_report_files(tmp_path):
    problem = matrix_problem(5)
    res = mcts.search_sequence(problem, UctConfig(sims_per_layer=30, max_depth=3, restarts=2))
    mcts.save_search_report(res, tmp_path / "s.json", extra={"x": 1})
    mcts.save_legs_csv(res.best, tmp_path / "legs.csv")
    assert len((tmp_path / "legs.csv").read_text().splitlines()) == 4
    run = res.runs[0]
    assert [c["layer"] for c in run.layer_choices] == [1, 2, 3]
    assert run.root_visits == 3 * 30  # every layer simulates through the original root


# ---------------------------------------------------------------------------
# target selection and tuning

def test_selection_monotone_in_horizon():
    problem = matrix_problem(8, seed=5)
    config = UctConfig(cp=1e-4, sims_per_layer=60, seed=2)
    lengths = []
    for horizon in (150.0, 300.0, 600.0, 1200.0, 2400.0):
        seq, attempts = mcts.select_targets(problem, horizon, config, start_depth=2)
        assert seq.total_days <= horizon
        assert attempts
        lengths.append(len(seq))
    assert lengths == sorted(lengths)
    assert lengths[-1] > lengths[0]


def test_selection_empty_when_nothing_fits():
    problem = matrix_problem(5, low=100.0, high=200.0)
    seq, attempts = mcts.select_targets(problem, 50.0, UctConfig(sims_per_layer=10), start_depth=3)
    assert len(seq) == 0 and seq.total_days == 0.0
    assert [a["depth"] for a in attempts] == [3, 2, 1]


def test_tune_cp_single_run_rows():
    problem = matrix_problem(5)
    rows = mcts.tune_cp(problem, [0.1, 1.0], 1, UctConfig(sims_per_layer=20, max_depth=3))
    for r in rows:
        assert r["min_days"] == r["mean_days"] == r["max_days"]
        assert r["committed_mean_days"] >= r["mean_days"]  # the stored best never loses to the committed path
    with pytest.raises(ValueError):
        mcts.tune_cp(problem, [], 1, UctConfig())


def test_tuning_csv(tmp_path):
    rows = mcts.tune_cp(matrix_problem(5), [0.5], 2, UctConfig(sims_per_layer=10, max_depth=2))
    mcts.save_tuning_csv(rows, tmp_path / "t.csv")
    assert (tmp_path / "t.csv").read_text().splitlines()[0] == "cp,runs,min_days,mean_days,max_days,committed_mean_days"


def test_clamped_rewards_are_reported(caplog):
    problem = matrix_problem(4, low=500.0, high=600.0)
    with caplog.at_level("WARNING", logger="sailtour.mcts"):
        mcts.run_layers(problem, UctConfig(sims_per_layer=5, max_depth=3, dt_max_days=100.0), np.random.default_rng(0))
    assert "uninformed" in caplog.text
    caplog.clear()
    with caplog.at_level("WARNING", logger="sailtour.mcts"):
        mcts.run_layers(problem, UctConfig(sims_per_layer=5, max_depth=3, dt_max_days=5000.0),
                         np.random.default_rng(0))
    assert "uninformed" not in caplog.text


# ---------------------------------------------------------------------------
# surrogate oracle

def test_estimate_leg_repeats_after_common_period():
    model = net.init_model(12, [5], "tanh", seed=1)
    a = KeplerianElements(1.1, 0.1, 0.1, 0.2, 0.3, 0.4)
    b = KeplerianElements(1.1, 0.05, 0.02, 1.2, 2.3, 3.4)
    e1 = mcts.estimate_leg(model, a, b, 1.0)
    e2 = mcts.estimate_leg(model, a, b, 1.0 + a.period)
    assert e2 == pytest.approx(e1, abs=1e-8)


def test_estimate_leg_checks_feature_kind():
    model = net.init_model(10, [5], "tanh", seed=1)
    with pytest.raises(ValueError):
        mcts.estimate_leg(model, BODY, BODY, 0.0)


def test_surrogate_oracle_memoizes():
    model = net.init_model(12, [5], "tanh", seed=1)
    o = mcts.SurrogateOracle(model)
    x = o.leg_days("A", BODY, "B", BODY, 0.5)
    assert o.leg_days("A", BODY, "B", BODY, 0.5) == x
    assert (o.calls, o.evaluations) == (2, 1)


def test_identity_sanity_flags_bad_model():
    model = net.init_model(12, [5], "tanh", seed=1)
    model.y_offset = 500.0
    days, flagged = mcts.identity_sanity(model, BODY, 0.0)
    assert flagged and days > 30
