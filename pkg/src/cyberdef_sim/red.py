"""Scripted attacker strategies.

Red works from its own knowledge (what it has discovered, scanned and holds
sessions on) plus what the network lets it touch: isolated hosts cannot be
targeted and blocked subnet pairs do not route. A subnet is *accessible* when
it is the entry subnet or is routed to a subnet where red holds a privileged
session on a non-isolated host.

Decoys look like exploitable EnterpriseServers to red. A decoy foothold is
believed to be real, but discovering onward from it fails, which is how a
honeypot traps the Beeline attacker.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field, replace
from enum import Enum

from .rng import Stream
from .scenario import NetworkTopology, Tier


class RedKind(str, Enum):
    DISCOVER = "DiscoverSubnet"
    SCAN = "ScanHost"
    EXPLOIT = "Exploit"
    ESCALATE = "PrivilegeEscalate"
    IMPACT = "Impact"


class Stalled(Exception):
    """No legal red action exists this turn; the engine treats it as a no-op."""


@dataclass(frozen=True)
class RedAction:
    kind: RedKind
    target: int | str  # subnet index for DiscoverSubnet, host id otherwise

    def to_dict(self) -> dict:
        target = f"s{self.target}" if self.kind is RedKind.DISCOVER else self.target
        return {"kind": self.kind.value, "target": target}

    @classmethod
    def from_dict(cls, d: dict) -> "RedAction":
        kind = RedKind(d["kind"])
        target = int(d["target"][1:]) if kind is RedKind.DISCOVER else d["target"]
        return cls(kind, target)


@dataclass
class ActionOutcome:
    success: bool
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"success": self.success, "details": self.details}


@dataclass(frozen=True)
class RedKnowledge:
    entry_subnet: int = 0
    discovered_subnets: frozenset = frozenset()
    discovered_hosts: frozenset = frozenset()
    scanned_hosts: frozenset = frozenset()
    user_sessions: frozenset = frozenset()
    privileged_sessions: frozenset = frozenset()

    def chain_holds(self) -> bool:
        return (
            self.privileged_sessions <= self.user_sessions
            <= self.scanned_hosts <= self.discovered_hosts
        )

    def to_dict(self) -> dict:
        return {
            "entry_subnet": self.entry_subnet,
            "discovered_subnets": sorted(self.discovered_subnets),
            "discovered_hosts": sorted(self.discovered_hosts),
            "scanned_hosts": sorted(self.scanned_hosts),
            "user_sessions": sorted(self.user_sessions),
            "privileged_sessions": sorted(self.privileged_sessions),
        }


@dataclass(frozen=True)
class RedView:
    """Network facts red can act against, supplied by the engine each turn."""

    isolated: frozenset = frozenset()
    blocked: frozenset = frozenset()  # (a, b) pairs with a < b
    decoys: tuple = ()  # ((decoy_id, subnet), ...) in slot order


DEFAULT_PARAMS = {
    "discover_prob": 1.0,
    "scan_prob": 1.0,
    "exploit_prob": 0.9,
    "escalate_prob": 0.9,
    "impact_prob": 1.0,
}


class RedStrategy:
    KINDS = ("Beeline", "Meander", "RandomWalk", "Sleep")

    def __init__(self, kind: str, rng: Stream, params: dict | None = None):
        if kind not in self.KINDS:
            raise ValueError(f"unknown red strategy {kind!r}; choose from {self.KINDS}")
        self.kind = kind
        self.rng = rng
        self.params = {**DEFAULT_PARAMS, **(params or {})}


class _Map:
    """Red-side lookups over the topology plus deployed decoys."""

    def __init__(self, topology: NetworkTopology, view: RedView):
        self.topology = topology
        self.view = view
        self.decoy_subnet = dict(view.decoys)
        self.order = {h.id: i for i, h in enumerate(topology.hosts)}
        n = len(self.order)
        for i, (d, _) in enumerate(view.decoys):
            self.order[d] = n + i

    def subnet(self, h: str) -> int:
        if h in self.decoy_subnet:
            return self.decoy_subnet[h]
        return self.topology.host(h).subnet

    def exploitable(self, h: str) -> bool:
        return h in self.decoy_subnet or self.topology.host(h).exploitable

    def tier_rank(self, h: str) -> int:
        if h in self.decoy_subnet:
            return 1
        return {Tier.USER: 0, Tier.ENTERPRISE: 1, Tier.OPERATIONAL: 2}[self.topology.host(h).tier]

    def routed(self, a: int, b: int) -> bool:
        return (min(a, b), max(a, b)) not in self.view.blocked

    def established(self, k: RedKnowledge, s: int) -> bool:
        iso = self.view.isolated
        return any(self.subnet(h) == s and h not in iso for h in k.privileged_sessions)

    def accessible(self, k: RedKnowledge, s: int) -> bool:
        if s == k.entry_subnet:
            return True
        return any(
            self.routed(s, t) and self.established(k, t) for t in self.topology.neighbors(s)
        )

    def known_hosts(self, k: RedKnowledge) -> list:
        return sorted(k.discovered_hosts, key=self.order.__getitem__)

    def path(self, start: int, goal: int):
        parent = {start: None}
        q = deque([start])
        while q:
            u = q.popleft()
            if u == goal:
                out = []
                while u is not None:
                    out.append(u)
                    u = parent[u]
                return out[::-1]
            for v in self.topology.neighbors(u):
                if v not in parent and self.routed(u, v):
                    parent[v] = u
                    q.append(v)
        return None


def _host_action(m: _Map, k: RedKnowledge, h: str, critical: str):
    """Next rung for host ``h`` if legal, else None."""
    if h in m.view.isolated or h not in k.discovered_hosts:
        return None
    if h in k.privileged_sessions:
        return RedAction(RedKind.IMPACT, h) if h == critical else None
    if h in k.user_sessions:
        return RedAction(RedKind.ESCALATE, h)
    if not m.accessible(k, m.subnet(h)):
        return None
    if h in k.scanned_hosts:
        return RedAction(RedKind.EXPLOIT, h) if m.exploitable(h) else None
    return RedAction(RedKind.SCAN, h)


def legal_actions(knowledge: RedKnowledge, topology: NetworkTopology, view: RedView | None = None):
    """All legal red actions in a deterministic order."""
    m = _Map(topology, view or RedView())
    return _legal(m, knowledge)


def _legal(m: _Map, k: RedKnowledge) -> list:
    out = []
    for s in m.topology.subnets:
        if s.id not in k.discovered_subnets and m.accessible(k, s.id):
            out.append(RedAction(RedKind.DISCOVER, s.id))
    critical = m.topology.critical_host
    for h in m.known_hosts(k):
        a = _host_action(m, k, h, critical)
        if a is not None:
            out.append(a)
    return out


_RUNG = {RedKind.IMPACT: 0, RedKind.ESCALATE: 1, RedKind.EXPLOIT: 2, RedKind.SCAN: 3, RedKind.DISCOVER: 4}


def _meander(m: _Map, k: RedKnowledge):
    legal = _legal(m, k)
    if not legal:
        raise Stalled()
    # min() returns the first of equal rungs, so host/subnet order breaks ties
    return min(legal, key=lambda a: _RUNG[a.kind])


def _beeline(m: _Map, k: RedKnowledge):
    topo = m.topology
    critical = topo.critical_host
    if critical in k.privileged_sessions and critical not in m.view.isolated:
        return RedAction(RedKind.IMPACT, critical)
    path = m.path(k.entry_subnet, topo.critical_subnet)
    if path is not None:
        j = 0
        while j < len(path) - 1 and m.established(k, path[j]):
            j += 1
        focus = path[j]
        if focus not in k.discovered_subnets:
            if m.accessible(k, focus):
                return RedAction(RedKind.DISCOVER, focus)
        elif focus == topo.critical_subnet:
            a = _host_action(m, k, critical, critical)
            if a is not None:
                return a
        else:
            cands = []
            for h in m.known_hosts(k):
                if m.subnet(h) != focus:
                    continue
                a = _host_action(m, k, h, critical)
                if a is not None:
                    cands.append((_RUNG[a.kind], -m.tier_rank(h), m.order[h], a))
            if cands:
                return min(cands, key=lambda c: c[:3])[3]
    return _meander(m, k)


def select_action(
    strategy: RedStrategy,
    knowledge: RedKnowledge,
    topology: NetworkTopology,
    view: RedView | None = None,
):
    """Pick red's action for this turn.

    Returns None for the Sleep strategy and raises :class:`Stalled` when no
    legal action exists.
    """
    if strategy.kind == "Sleep":
        return None
    m = _Map(topology, view or RedView())
    if strategy.kind == "Beeline":
        return _beeline(m, knowledge)
    if strategy.kind == "Meander":
        return _meander(m, knowledge)
    legal = _legal(m, knowledge)
    if not legal:
        raise Stalled()
    return legal[strategy.rng.randrange(len(legal))]


def update_knowledge(knowledge: RedKnowledge, action, outcome: ActionOutcome) -> RedKnowledge:
    """Fold an action outcome into red's knowledge.

    ``outcome.details`` may carry ``discovered_subnets``, ``discovered``,
    ``scanned``, ``user``, ``privileged`` (additions) and ``evicted`` (hosts
    whose sessions blue removed). Eviction applies even for blue-side outcomes.
    """
    d = outcome.details
    changes = {}
    if outcome.success:
        if d.get("discovered_subnets"):
            changes["discovered_subnets"] = knowledge.discovered_subnets | frozenset(d["discovered_subnets"])
        if d.get("discovered"):
            changes["discovered_hosts"] = knowledge.discovered_hosts | frozenset(d["discovered"])
        if d.get("scanned"):
            changes["scanned_hosts"] = knowledge.scanned_hosts | frozenset(d["scanned"])
        if d.get("user"):
            changes["user_sessions"] = knowledge.user_sessions | frozenset(d["user"])
        if d.get("privileged"):
            changes["privileged_sessions"] = knowledge.privileged_sessions | frozenset(d["privileged"])
    if d.get("evicted"):
        gone = frozenset(d["evicted"])
        changes["user_sessions"] = changes.get("user_sessions", knowledge.user_sessions) - gone
        changes["privileged_sessions"] = changes.get("privileged_sessions", knowledge.privileged_sessions) - gone
    if not changes:
        return knowledge
    return replace(knowledge, **changes)


def beeline_bound(topology: NetworkTopology) -> int:
    """Turns within which Beeline reaches Impact against a passive defender.

    4 x (subnets on the shortest entry-to-critical path + hosts in those
    subnets): each subnet needs one discovery and each host on the way at most
    scan, exploit and escalate, with slack for failed probabilistic rungs.
    """
    path = _Map(topology, RedView()).path(topology.entry_subnet, topology.critical_subnet)
    if path is None:
        raise ValueError("critical subnet is unreachable from the entry subnet")
    return 4 * (len(path) + sum(len(topology.subnets[s].hosts) for s in path))
