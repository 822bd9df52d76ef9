from collections import deque

import pytest

from cyberdef_sim import red
from cyberdef_sim.engine import run_episode
from cyberdef_sim.agents import NoOpPolicy
from cyberdef_sim.red import (
    ActionOutcome,
    RedAction,
    RedKind,
    RedKnowledge,
    RedStrategy,
    RedView,
    Stalled,
    legal_actions,
    select_action,
    update_knowledge,
)
from cyberdef_sim.rng import Stream
from cyberdef_sim.scenario import ScenarioConfig, generate_topology


def strategy(kind, seed=0):
    return RedStrategy(kind, Stream.named("test", seed))


@pytest.fixture
def topo3():
    return generate_topology(ScenarioConfig(3, (2, 3)), 4)


def test_beeline_empty_knowledge_discovers_entry(topo3):
    assert select_action(strategy("Beeline"), RedKnowledge(), topo3) == RedAction(RedKind.DISCOVER, 0)


def test_beeline_privileged_on_critical_impacts(topo3):
    c = topo3.critical_host
    k = RedKnowledge(
        discovered_subnets=frozenset({0}),
        discovered_hosts=frozenset({c}),
        scanned_hosts=frozenset({c}),
        user_sessions=frozenset({c}),
        privileged_sessions=frozenset({c}),
    )
    assert select_action(strategy("Beeline"), k, topo3) == RedAction(RedKind.IMPACT, c)


def test_random_walk_single_legal_action():
    topo = generate_topology(ScenarioConfig(1, (1, 1)), 0)
    # entry subnet undiscovered: discovering it is the only legal move
    k = RedKnowledge()
    assert legal_actions(k, topo) == [RedAction(RedKind.DISCOVER, 0)]
    for seed in range(20):
        assert select_action(strategy("RandomWalk", seed), k, topo) == RedAction(RedKind.DISCOVER, 0)


def test_stalled_when_everything_isolated():
    topo = generate_topology(ScenarioConfig(1, (2, 2)), 0)
    ids = [h.id for h in topo.hosts]
    k = RedKnowledge(discovered_subnets=frozenset({0}), discovered_hosts=frozenset(ids))
    view = RedView(isolated=frozenset(ids))
    for kind in ("Beeline", "Meander", "RandomWalk"):
        with pytest.raises(Stalled):
            select_action(strategy(kind), k, topo, view)


def test_sleep_never_acts(topo3):
    assert select_action(strategy("Sleep"), RedKnowledge(), topo3) is None


def test_meander_finishes_subnet_before_crossing():
    topo = generate_topology(ScenarioConfig(2, (2, 2)), 1)
    a, b = [h.id for h in topo.subnets[0].hosts]
    k = RedKnowledge(
        discovered_subnets=frozenset({0}),
        discovered_hosts=frozenset({a, b}),
        scanned_hosts=frozenset({a, b}),
        user_sessions=frozenset({a}),
        privileged_sessions=frozenset({a}),
    )
    act = select_action(strategy("Meander"), k, topo)
    # s1 is already reachable from the privileged foothold, but b comes first
    assert act.kind is not RedKind.DISCOVER
    assert act.target == b or topo.host(b).exploitable is False


# -- knowledge updates ---------------------------------------------------------------


def test_successful_scan_adds_host():
    k = RedKnowledge(discovered_subnets=frozenset({0}), discovered_hosts=frozenset({"s0h0"}))
    k2 = update_knowledge(k, RedAction(RedKind.SCAN, "s0h0"), ActionOutcome(True, {"scanned": ["s0h0"]}))
    assert k2.scanned_hosts == {"s0h0"}


def test_failed_exploit_leaves_knowledge_unchanged():
    k = RedKnowledge(discovered_hosts=frozenset({"h"}), scanned_hosts=frozenset({"h"}))
    assert update_knowledge(k, RedAction(RedKind.EXPLOIT, "h"), ActionOutcome(False)) == k


def test_eviction_of_privileged_session():
    # hand trace of one Restore turn: both session sets lose h, discovery stays
    h = "s0h0"
    k = RedKnowledge(
        discovered_hosts=frozenset({h}), scanned_hosts=frozenset({h}),
        user_sessions=frozenset({h}), privileged_sessions=frozenset({h}),
    )
    k2 = update_knowledge(k, None, ActionOutcome(True, {"evicted": [h]}))
    assert h not in k2.user_sessions and h not in k2.privileged_sessions
    assert h in k2.discovered_hosts and h in k2.scanned_hosts
    assert k2.chain_holds()


# -- legality property -----------------------------------------------------------------


def oracle_is_legal(action, k, topo, view):
    """Independent restatement of the legality rules."""
    decoys = dict(view.decoys)
    iso = view.isolated

    def subnet_of(h):
        return decoys[h] if h in decoys else topo.host(h).subnet

    def exploitable(h):
        return h in decoys or topo.host(h).exploitable

    def accessible(s):
        if s == k.entry_subnet:
            return True
        for a, b in topo.reachability:
            if s not in (a, b) or (a, b) in view.blocked:
                continue
            t = b if a == s else a
            if any(subnet_of(h) == t and h not in iso for h in k.privileged_sessions):
                return True
        return False

    t = action.target
    if action.kind is RedKind.DISCOVER:
        return 0 <= t < len(topo.subnets) and t not in k.discovered_subnets and accessible(t)
    if not (topo.has_host(t) or t in decoys) or t in iso or t not in k.discovered_hosts:
        return False
    if action.kind is RedKind.SCAN:
        return t not in k.scanned_hosts and accessible(subnet_of(t))
    if action.kind is RedKind.EXPLOIT:
        return t in k.scanned_hosts and t not in k.user_sessions and exploitable(t) and accessible(subnet_of(t))
    if action.kind is RedKind.ESCALATE:
        return t in k.user_sessions and t not in k.privileged_sessions
    return t == topo.critical_host and t in k.privileged_sessions


def random_world(rng: Stream):
    cfg = ScenarioConfig(rng.randint(1, 5), (1, rng.randint(1, 4)))
    topo = generate_topology(cfg, rng.randint(0, 10**9))
    decoys = tuple((f"decoy{i}", rng.randrange(len(topo.subnets))) for i in range(rng.randint(0, 2)))
    ids = [h.id for h in topo.hosts] + [d for d, _ in decoys]

    def subset(pool, p):
        return frozenset(x for x in pool if rng.random() < p)

    disc_sub = subset(range(len(topo.subnets)), 0.6)
    disc = subset(ids, 0.7)
    scanned = subset(disc, 0.7)
    user = subset(scanned, 0.6)
    priv = subset(user, 0.5)
    k = RedKnowledge(0, disc_sub, disc, scanned, user, priv)
    view = RedView(
        isolated=subset(ids, 0.15),
        blocked=subset(sorted(topo.reachability), 0.2),
        decoys=decoys,
    )
    return topo, k, view


def test_ten_thousand_random_draws_are_legal():
    rng = Stream.named("legality")
    kinds = ("Beeline", "Meander", "RandomWalk")
    checked = 0
    for i in range(10_000):
        topo, k, view = random_world(rng)
        assert k.chain_holds()
        try:
            a = select_action(strategy(kinds[i % 3], i), k, topo, view)
        except Stalled:
            assert legal_actions(k, topo, view) == []
            continue
        assert oracle_is_legal(a, k, topo, view), (a, k, view)
        checked += 1
    assert checked > 5000


# -- Beeline progress ------------------------------------------------------------------


def beeline_bound(topo) -> int:
    # BFS over subnets from the entry subnet to the critical subnet
    parent = {0: None}
    q = deque([0])
    while q:
        u = q.popleft()
        for v in topo.neighbors(u):
            if v not in parent:
                parent[v] = u
                q.append(v)
    path, u = [], topo.critical_subnet
    while u is not None:
        path.append(u)
        u = parent[u]
    hosts_on_path = sum(len(topo.subnets[s].hosts) for s in path)
    return 4 * (len(path) + hosts_on_path)


def first_impact_turn(trace):
    for r in trace.records:
        ra = r["red_action"]
        if ra and ra["kind"] == "Impact" and r["action_outcome"]["success"]:
            return r["turn"] + 1
    return None


@pytest.mark.parametrize("n_subnets", [1, 2, 3, 4])
def test_beeline_reaches_impact_within_bound(n_subnets):
    for seed in range(25):
        cfg = ScenarioConfig(n_subnets, (1, 4), seed=seed, horizon=1)
        topo = generate_topology(cfg, seed)
        bound = beeline_bound(topo)
        assert red.beeline_bound(topo) == bound
        cfg = ScenarioConfig(n_subnets, (1, 4), seed=seed, horizon=bound, max_decoys=0)
        trace = run_episode(cfg, NoOpPolicy(), seed)
        turns = first_impact_turn(trace)
        assert turns is not None and turns <= bound, (n_subnets, seed, turns, bound)
