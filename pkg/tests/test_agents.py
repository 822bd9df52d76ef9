import math

import numpy as np
import pytest

from cyberdef_sim.agents import (
    HeuristicPolicy,
    NoOpPolicy,
    QLearner,
    QTable,
    RandomPolicy,
    epsilon_schedule,
    evaluate,
    heuristic_act,
    make_policy,
    q_update,
    train,
)
from cyberdef_sim.detection import COMPONENTS, ObservationVector, ObsLayout
from cyberdef_sim.engine import MONITOR, BlueAction, BlueKind, CyberDefenseEnv
from cyberdef_sim.errors import ContractError

from conftest import shipped

LAYOUT = ObsLayout(["Host1", "Host2", "Host3"])
K = len(COMPONENTS)


def test_all_clear_monitors():
    for enc in ("baseline", "detector"):
        assert heuristic_act(ObservationVector.initial(enc, LAYOUT)) == MONITOR


def test_privileged_host_is_restored():
    obs = ObservationVector("baseline", LAYOUT, (0, 3, 2), activity=(0, 2, 0))
    assert heuristic_act(obs) == BlueAction(BlueKind.RESTORE, "Host2")


def test_user_or_exploit_active_is_removed():
    obs = ObservationVector("baseline", LAYOUT, (0, 0, 2), activity=(2, 0, 0))
    assert heuristic_act(obs) == BlueAction(BlueKind.REMOVE, "Host1")
    obs = ObservationVector("baseline", LAYOUT, (0, 0, 0), activity=(0, 0, 2))
    assert heuristic_act(obs) == BlueAction(BlueKind.REMOVE, "Host3")


def test_alert_only_hosts_analyze_most_alerted():
    counts = [0] * (3 * K)
    counts[0] = 3  # Host1
    counts[2 * K + 1] = 1  # Host3
    obs = ObservationVector("detector", LAYOUT, (1, 0, 1), counts=tuple(counts))
    assert heuristic_act(obs) == BlueAction(BlueKind.ANALYZE, "Host1")


def test_analyze_tie_goes_to_lowest_index():
    counts = [0] * (3 * K)
    counts[K] = counts[2 * K] = 2
    obs = ObservationVector("detector", LAYOUT, (0, 1, 1), counts=tuple(counts))
    assert heuristic_act(obs) == BlueAction(BlueKind.ANALYZE, "Host2")


def test_scan_activity_is_analyzed():
    obs = ObservationVector("baseline", LAYOUT, (0, 0, 0), activity=(0, 1, 0))
    assert heuristic_act(obs) == BlueAction(BlueKind.ANALYZE, "Host2")


# -- Q-learning ---------------------------------------------------------------------


def test_q_update_terminal_overwrite():
    t = QTable(3, alpha=1.0, gamma=0.95)
    q_update(t, 7, 1, -1.0, 8, True)
    assert t.get(7)[1] == -1.0


def test_q_update_zero_fixed_point():
    t = QTable(3)
    q_update(t, 7, 2, 0.0, 8, False)
    assert not t.get(7).any() and not t.get(8).any()


def test_q_update_by_hand():
    t = QTable(2, alpha=0.5, gamma=0.9)
    t.row(8)[1] = 1.0
    q_update(t, 7, 0, -1.0, 8, False)
    assert t.get(7)[0] == pytest.approx(0.5 * (-1 + 0.9 * 1.0))
    assert t.get(7)[0] == pytest.approx(-0.05)


def test_q_update_touches_one_cell():
    rng = np.random.default_rng(0)
    t = QTable(4, alpha=0.3, gamma=0.9)
    for _ in range(300):
        before = {k: v.copy() for k, v in t.values.items()}
        k, a, nk = int(rng.integers(5)), int(rng.integers(4)), int(rng.integers(5))
        q_update(t, k, a, float(rng.normal()), nk, bool(rng.integers(2)))
        changed = [(kk, i) for kk in t.values for i in range(4)
                   if t.values[kk][i] != before.get(kk, np.zeros(4))[i]]
        assert set(changed) <= {(k, a)}


@pytest.mark.parametrize("r", [math.nan, math.inf, -math.inf])
def test_q_update_rejects_non_finite(r):
    with pytest.raises(ContractError):
        q_update(QTable(2), 1, 0, r, 2, False)


@pytest.mark.parametrize("alpha,gamma", [(0, 0.9), (1.5, 0.9), (0.1, -0.1), (0.1, 1.1)])
def test_qtable_hyperparameter_bounds(alpha, gamma):
    with pytest.raises(ContractError):
        QTable(2, alpha, gamma)


def test_epsilon_schedule():
    assert epsilon_schedule(0) == 1.0
    assert epsilon_schedule(1) == pytest.approx(0.9995)
    assert epsilon_schedule(100_000) == 0.05


def test_qtable_save_load(tmp_path):
    t = QTable(3, 0.2, 0.8)
    t.row(2**63 + 5)[:] = [1.5, -2.0, 0.25]
    p = tmp_path / "q.json"
    t.save(p)
    u = QTable.load(p)
    assert (u.alpha, u.gamma, u.n_actions) == (0.2, 0.8, 3)
    assert u.get(2**63 + 5).tolist() == [1.5, -2.0, 0.25]
    assert not u.get(1).any()


def test_observation_key_is_stable_literal():
    # a documented FNV-based key: the same vector always maps to the same integer
    obs = ObservationVector("baseline", LAYOUT, (0, 1, 3), activity=(2, 0, 1))
    assert obs.key() == ObservationVector("baseline", LAYOUT, (0, 1, 3), activity=(2, 0, 1)).key()
    assert obs.key() != ObservationVector("detector", LAYOUT, (0, 1, 3), counts=(0,) * 15).key()


# -- loops --------------------------------------------------------------------------


def n_actions(sc):
    return len(CyberDefenseEnv(sc).catalog)


def test_train_one_episode(default_scenario):
    curve = train(default_scenario, QLearner(n_actions(default_scenario)), 1, seed=0)
    assert len(curve) == 1


def test_train_is_deterministic(default_scenario):
    a = train(default_scenario, QLearner(n_actions(default_scenario), seed=4), 30, seed=2)
    b = train(default_scenario, QLearner(n_actions(default_scenario), seed=4), 30, seed=2)
    assert a == b


def test_train_rejects_zero_episodes(default_scenario):
    with pytest.raises(ContractError):
        train(default_scenario, QLearner(n_actions(default_scenario)), 0)


def test_evaluate_no_red_no_op(no_red):
    stats = evaluate(no_red, NoOpPolicy(), 10, seed=0)
    assert (stats.mean, stats.std) == (0.0, 0.0)


def test_evaluate_is_repeatable_and_worker_independent(default_scenario):
    a = evaluate(default_scenario, RandomPolicy(2), 12, seed=5)
    b = evaluate(default_scenario, RandomPolicy(2), 12, seed=5)
    c = evaluate(default_scenario, RandomPolicy(2), 12, seed=5, workers=3)
    assert a == b == c
    assert a.mean == pytest.approx(np.mean(a.returns))
    assert a.std == pytest.approx(np.std(a.returns))


def test_greedy_evaluation_is_deterministic(default_scenario):
    learner = QLearner(n_actions(default_scenario), seed=1)
    train(default_scenario, learner, 50, seed=1)
    assert evaluate(default_scenario, learner, 8, seed=3) == evaluate(default_scenario, learner, 8, seed=3)


def test_heuristic_not_worse_than_random_paired(default_scenario):
    h = evaluate(default_scenario, HeuristicPolicy(), 100, seed=0)
    r = evaluate(default_scenario, RandomPolicy(0), 100, seed=0)
    assert h.seeds == r.seeds
    diffs = np.array(h.returns) - np.array(r.returns)
    assert diffs.mean() >= 0


def test_learning_sanity_one_subnet():
    sc = shipped("one_subnet")
    learner = QLearner(n_actions(sc), seed=0)
    train(sc, learner, 1500, seed=0)
    greedy = evaluate(sc, learner, 30, seed=9)
    rand = evaluate(sc, RandomPolicy(0), 30, seed=9)
    assert greedy.mean > rand.mean - rand.std


def test_make_policy():
    assert isinstance(make_policy("heuristic"), HeuristicPolicy)
    with pytest.raises(ValueError):
        make_policy("oracle")
