"""Acceptance criteria 1-12 at their stated tolerances.

Each test prints one ``criterion N: PASS|FAIL`` line; the lines are also
collected into an "acceptance criteria" section of the terminal summary.

Criteria 8, 10, 11 and 12 use the artifacts of ``sailtour pipeline --preset
desk`` in ``$SAILTOUR_DESK_DIR`` (default ``runs/desk`` in the repository).
The pipeline is invoked with ``--resume``, so a finished run is reused and a
missing one is built from scratch (one to two hours on one CPU).
"""
import json
import math
import os
from dataclasses import replace
from pathlib import Path

import numpy as np
import pytest

from oracles import grid_minimum_fast, random_state
from test_net import max_rel_error, toy_data, toy_model
from sailtour import catalog as cat
from sailtour import cli, mcts, net, ocp
from sailtour.astro import CartesianState
from sailtour.dataset import sample_pair
from sailtour.dynamics import beta_to_char_accel
from sailtour.ocp import Costate, ShootingProblem
from sailtour.units import CANONICAL

pytestmark = pytest.mark.acceptance

BETA = 0.1265
EPOCH = CANONICAL.mjd_to_tu(57800.0)
DESK_DIR = Path(os.environ.get("SAILTOUR_DESK_DIR", Path(__file__).resolve().parents[1] / "runs" / "desk"))


# ---------------------------------------------------------------------------
# shared artifacts

@pytest.fixture(scope="module")
def shooting_runs():
    """50 random pseudo-NEA pairs solved with a 200-guess budget."""
    out = []
    for k in range(50):
        dep, arr, seed = sample_pair(2024, k, EPOCH)
        problem = ShootingProblem(dep, arr, EPOCH, BETA, max_guesses=200, seed=seed)
        out.append((problem, ocp.solve_transfer(problem)))
    return out


@pytest.fixture(scope="module")
def desk_run():
    code = cli.main(["pipeline", "--preset", "desk", "--out-dir", str(DESK_DIR), "--resume"])
    assert code == 0
    return DESK_DIR


@pytest.fixture(scope="module")
def oracle_problem(desk_run):
    """Earth plus the first six bodies of the desk catalog, priced by the trained surrogate."""
    model = net.load_model(desk_run / "model.json")
    catalog = cat.load_catalog(desk_run / "catalog.csv")
    ids = catalog.ids[:6]
    targets = {t: catalog.get(t) for t in ids}
    start = CANONICAL.mjd_to_tu(64329.0)
    return mcts.SequenceProblem("Earth", cat.earth_elements(), start, targets, mcts.SurrogateOracle(model))


# The reward scale is the desk mission horizon.  The depth x 365 d default
# (2190 d) is shorter than every 6-target sequence here, which would clamp
# all rewards to 0 and leave the tree search uninformed.
ORACLE_UCT = mcts.UctConfig(cp=0.5, sims_per_layer=2000, max_depth=6, stay_days=10.0, dt_max_days=3650.0)


# ---------------------------------------------------------------------------
# 1-3: dynamics and optimal control

def test_criterion_1_characteristic_acceleration(criterion):
    ac = beta_to_char_accel(BETA)
    ok = abs(ac - 0.750) <= 0.001
    criterion("1", ok, f"a_c = {ac:.5f} mm/s^2 for beta = {BETA}")
    assert ok


def test_criterion_2_control_law_matches_grid(criterion):
    rng = np.random.default_rng(2)
    worst = -math.inf
    for _ in range(10_000):
        s = random_state(rng)
        lv = rng.normal(size=3)
        h_closed = ocp.control_term(s, lv, ocp.optimal_normal(s, lv), BETA)
        gap = h_closed - grid_minimum_fast(s, lv, BETA)
        worst = max(worst, gap)
    ok = worst <= 1e-6
    criterion("2", ok, f"worst closed-form minus grid minimum over 10^4 points = {worst:.2e}")
    assert ok


def _fd_adjoint(state, lam, normal, h=1e-6):
    y = state.as_vector()
    g = np.empty(6)
    for j in range(6):
        e = np.zeros(6)
        e[j] = h
        hp = ocp.hamiltonian(CartesianState.from_vector(y + e), lam, normal, BETA)
        hm = ocp.hamiltonian(CartesianState.from_vector(y - e), lam, normal, BETA)
        g[j] = (hp - hm) / (2 * h)
    return -g


def test_criterion_3_adjoint_and_hamiltonian(criterion, shooting_runs):
    rng = np.random.default_rng(3)
    worst_fd = 0.0
    for _ in range(100):
        s = random_state(rng)
        lam = Costate(rng.uniform(0, 1), rng.normal(size=3), rng.normal(size=3))
        n = ocp.optimal_normal(s, lam.lambda_v)
        got = np.concatenate(ocp.costate_derivative(s, lam, n, BETA))
        fd = _fd_adjoint(s, lam, n)
        worst_fd = max(worst_fd, np.linalg.norm(got - fd) / np.linalg.norm(fd))
    drifts = []
    for problem, out in [r for r in shooting_runs if r[1].converged][:10]:
        traj = ocp.transfer_trajectory(out, problem)
        ys = np.hstack([traj.states, traj.stats["costates"]])
        l0 = out.unknowns.costate0.lambda0
        h = np.array([ocp.extremal_hamiltonian(y, l0, BETA) for y in ys])
        drifts.append(float(np.max(np.abs(h - h[0]))))
    ok = worst_fd <= 1e-6 and len(drifts) == 10 and max(drifts) <= 1e-6
    criterion("3", ok, f"adjoint rel err {worst_fd:.2e}; max H drift on {len(drifts)} extremals {max(drifts):.2e}")
    assert ok


# ---------------------------------------------------------------------------
# 4: shooting robustness

@pytest.mark.slow
def test_criterion_4_shooting_robustness(criterion, shooting_runs):
    good = [out for _, out in shooting_runs if out.converged]
    rate = len(good) / len(shooting_runs)
    assert all(out.residual_norm <= 1e-8 for out in good)
    spreads = []
    for problem, out in shooting_runs[:5]:
        tofs = []
        for master in (0, 1, 2):
            best = ocp.solve_transfer_best_of(replace(problem, max_guesses=100, seed=master), 10)
            tofs.append(best.tof_days)
        spreads.append(max(tofs) / min(tofs) - 1.0)
    ok = rate >= 0.9 and max(spreads) <= 0.01
    criterion("4", ok, f"converged {len(good)}/50 ({rate:.0%}); best-of-10 spread across 3 master seeds "
                       f"on 5 pairs <= {max(spreads):.2e}")
    assert ok


# ---------------------------------------------------------------------------
# 5-8: surrogate network

def test_criterion_5_gradients(criterion):
    errs = {}
    for act in ("sigmoid", "tanh", "relu"):
        X, y = toy_data(20)
        errs[act] = max_rel_error(net.fit_scaler(toy_model(act), X), X, y)
    ok = max(errs.values()) <= 1e-5
    criterion("5", ok, ", ".join(f"{k} {v:.1e}" for k, v in errs.items()))
    assert ok


@pytest.mark.xfail(strict=True, reason="the stated loss 250 contradicts the MSE it cites, which gives 100")
def test_criterion_6_metric_formulas(criterion):
    m = net.metrics_from_predictions([100.0, 200.0], [110.0, 190.0])
    ok = (math.isclose(m.mae_days, 10.0) and math.isclose(m.accuracy, 0.925)
          and math.isclose(m.loss, 250.0))
    criterion("6", ok, f"MAE {m.mae_days:g} (10), accuracy {m.accuracy:g} (0.925), loss {m.loss:g} "
                       f"(stated 250; the mean of 10^2 and 10^2 is 100)")
    assert ok


def test_criterion_6_formulas_as_defined():
    m = net.metrics_from_predictions([100.0, 200.0], [110.0, 190.0])
    assert (m.mae_days, m.accuracy, m.loss) == pytest.approx((10.0, 0.925, 100.0))


def test_criterion_7_learning_rate(criterion):
    got = [net.learning_rate(e) for e in (0, 200, 400)]
    ok = np.allclose(got, [0.01, 0.0098, 0.009604], rtol=0, atol=1e-12)
    criterion("7", ok, f"eta(0, 200, 400) = {got}")
    assert ok


@pytest.mark.slow
def test_criterion_8_desk_training(criterion, desk_run):
    metrics = json.loads((desk_run / "metrics.json").read_text())
    cfg = json.loads((desk_run / "config.json").read_text())["config"]
    assert cfg["data"]["count"] == 2000
    assert cfg["net"]["hidden"] == [60, 60, 60] and cfg["net"]["activation"] == "sigmoid"
    assert cfg["net"]["epochs"] == 5000
    nv, lv = metrics["network"]["validation"], metrics["linear"]["validation"]
    ok = nv["accuracy"] >= 0.85 and nv["mae_days"] < 0.5 * lv["mae_days"]
    criterion("8", ok, f"validation accuracy {nv['accuracy']:.4f}; MAE network {nv['mae_days']:.1f} d vs "
                       f"linear {lv['mae_days']:.1f} d; drop rate {metrics['dataset']['drop_rate']:.1%}")
    assert ok


# ---------------------------------------------------------------------------
# 9-11: tree search

def test_criterion_9_uct_arithmetic(criterion):
    root = mcts.MctsNode("S")
    for k, (q, n) in enumerate([(0.9, 9), (0.5, 1)]):
        c = mcts.MctsNode(f"C{k}", root)
        c.total_quality, c.visits = q, n
        root.children.append(c)
    root.visits = 10
    rng = np.random.default_rng(0)
    v = [mcts.uct_value(c, 10, 10.0) for c in root.children]
    checks = [
        mcts.uct_select(root, 0.0, rng).target_id == "C1",
        mcts.uct_select(root, 10.0, rng).target_id == "C1",
        v[0] == 0.1 + 10.0 * math.sqrt(2.0 * math.log(10) / 9),
        v[1] == 0.5 + 10.0 * math.sqrt(2.0 * math.log(10) / 1),
        mcts.reward(3650.0, 3650.0) == 0.0,
        mcts.reward(0.0, 3650.0) == 1.0,
    ]
    ok = all(checks)
    criterion("9", ok, f"UCT values {v[0]:.2f}, {v[1]:.2f}; reward endpoints 0 and 1")
    assert ok


@pytest.mark.slow
def test_criterion_10_mcts_finds_brute_force_optimum(criterion, oracle_problem):
    truth = mcts.brute_force(oracle_problem, 6, ORACLE_UCT.stay_days)
    hits = 0
    for seed in range(20):
        found = mcts.search_sequence(oracle_problem, replace(ORACLE_UCT, seed=seed)).best
        hits += found.target_ids == truth.target_ids
    ok = hits >= 18
    criterion("10", ok, f"optimal order {truth.target_ids} ({truth.total_days:.1f} d) found in {hits}/20 runs")
    assert ok


@pytest.mark.slow
def test_criterion_11_cp_shape(criterion, oracle_problem):
    rows = mcts.tune_cp(oracle_problem, [0.01, 0.5, 5.0], 100, replace(ORACLE_UCT, seed=11))
    mean = {r["cp"]: r["mean_days"] for r in rows}
    committed = {r["cp"]: r["committed_mean_days"] for r in rows}
    ok = mean[0.5] <= mean[0.01] and mean[0.5] <= mean[5.0]
    criterion("11", ok, "mean total days " + ", ".join(f"cp={k:g}: {v:.2f}" for k, v in mean.items())
              + "; committed paths " + ", ".join(f"{v:.1f}" for v in committed.values()))
    assert ok


# ---------------------------------------------------------------------------
# 12: end to end

@pytest.mark.slow
def test_criterion_12_pipeline(criterion, desk_run):
    search = json.loads((desk_run / "search.json").read_text())
    rep = json.loads((desk_run / "verification.json").read_text())
    seq = search["best"]
    n_targets = len(seq["target_ids"])
    legs = rep["legs"]
    ok_seq = n_targets >= 5 and seq["rendezvous_mjd"][-1] - seq["start_mjd"] <= search["horizon_days"]
    assert len(cat.load_catalog(desk_run / "catalog.csv")) == 100
    conv = rep["converged_fraction"]
    rel = rep["relative_deviation"]
    # telescoping: total deviation is the sum of leg deviations, and every
    # rendezvous epoch deviation is the running sum of the leg deviations
    tele = True
    run = 0.0
    for leg in legs:
        if not leg["converged"]:
            break
        run += leg["deviation_days"]
        tele &= abs(leg["rendezvous_deviation_days"] - run) <= 1e-9
        tele &= leg["deviation_days"] == leg["verified_days"] - leg["predicted_days"]
    if rep["complete"]:
        tele &= abs(math.fsum(l["deviation_days"] for l in legs) - rep["total_deviation_days"]) <= 1e-9
    ok = ok_seq and conv >= 0.8 and rel is not None and rel <= 0.10 and tele
    criterion("12", ok, f"{n_targets} targets in {seq['rendezvous_mjd'][-1] - seq['start_mjd']:.1f} d; "
                        f"legs converged {conv:.0%}; relative deviation "
                        f"{'n/a' if rel is None else f'{rel:.2%}'}; telescoping {'holds' if tele else 'broken'}")
    assert ok
