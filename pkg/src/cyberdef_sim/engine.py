"""Ground-truth game state, the turn loop, episode traces and replay.

Each turn runs these phases in order: blue acts, red acts, detectors fire,
the observation is encoded, reward is scored, the turn counter advances.

Random streams are split per episode: ``Stream.named("episode",
scenario.seed, episode_seed, name)`` for ``name`` in ``red``, ``detect``,
``fp`` and ``topo``. Changing detector settings therefore never changes red's
draws. The topology itself depends only on the scenario seed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

from . import kernels
from .detection import (
    Alert,
    CompromisedState,
    DetectorConfig,
    ObservationVector,
    ObsLayout,
    RedEvent,
    detect,
    encode_baseline,
    encode_detector,
    generate_false_positives,
    load_detectors,
    detector_config_from_dict,
)
from .errors import ConfigError, ContractError
from .red import (
    ActionOutcome,
    RedAction,
    RedKind,
    RedKnowledge,
    RedStrategy,
    RedView,
    Stalled,
    select_action,
    update_knowledge,
)
from .reward import RewardConfig, compute_components, compute_reward, load_reward_config, reward_config_from_dict
from .rng import Stream
from .scenario import (
    EXPLOITABLE_SERVICES,
    InvariantViolation,
    NetworkTopology,
    ScenarioConfig,
    canonical_dumps,
    generate_topology,
    validate,
)

TRACE_FORMAT = "cdtrace/1"
STREAMS = ("red", "detect", "fp", "topo")
CLEAN, USER, PRIVILEGED = 0, 1, 2
_EVIDENCE = {CLEAN: CompromisedState.NO, USER: CompromisedState.USER, PRIVILEGED: CompromisedState.PRIVILEGED}


class BlueKind(str, Enum):
    MONITOR = "Monitor"
    ANALYZE = "Analyze"
    REMOVE = "Remove"
    RESTORE = "Restore"
    DEPLOY_DECOY = "DeployDecoy"
    BLOCK = "BlockSubnetPair"
    ISOLATE = "IsolateHost"
    UNISOLATE = "UnisolateHost"


HOST_ACTIONS = (BlueKind.ANALYZE, BlueKind.REMOVE, BlueKind.RESTORE, BlueKind.ISOLATE, BlueKind.UNISOLATE)


@dataclass(frozen=True)
class BlueAction:
    kind: BlueKind
    target: object = None  # host id, subnet index, or (a, b) subnet pair

    def to_dict(self) -> dict:
        t = self.target
        if self.kind is BlueKind.DEPLOY_DECOY:
            t = f"s{t}"
        elif self.kind is BlueKind.BLOCK:
            t = [f"s{t[0]}", f"s{t[1]}"]
        return {"kind": self.kind.value, "target": t}

    @classmethod
    def from_dict(cls, d: dict) -> "BlueAction":
        kind = BlueKind(d["kind"])
        t = d.get("target")
        if kind is BlueKind.DEPLOY_DECOY:
            t = int(t[1:])
        elif kind is BlueKind.BLOCK:
            t = (int(t[0][1:]), int(t[1][1:]))
        return cls(kind, t)

    def __str__(self):
        d = self.to_dict()
        return d["kind"] if d["target"] is None else f"{d['kind']}({d['target']})"


MONITOR = BlueAction(BlueKind.MONITOR)


def action_catalog(topology: NetworkTopology, max_decoys: int = 0) -> list:
    """Every blue action for this topology, in a fixed order (index = action id)."""
    slots = [h.id for h in topology.hosts] + [f"decoy{i}" for i in range(max_decoys)]
    out = [MONITOR]
    for kind in HOST_ACTIONS:
        out += [BlueAction(kind, h) for h in slots]
    if max_decoys:
        out += [BlueAction(BlueKind.DEPLOY_DECOY, s.id) for s in topology.subnets]
    out += [BlueAction(BlueKind.BLOCK, pair) for pair in sorted(topology.reachability)]
    return out


@dataclass
class HostState:
    compromise: int = CLEAN
    isolated: bool = False
    restore_downtime_remaining: int = 0
    is_decoy: bool = False

    def to_dict(self) -> dict:
        return {
            "compromise": ("Clean", "UserLevel", "Privileged")[self.compromise],
            "isolated": self.isolated,
            "restore_downtime_remaining": self.restore_downtime_remaining,
            "is_decoy": self.is_decoy,
        }


@dataclass
class TurnEvents:
    impacts: int = 0
    escalated: list = field(default_factory=list)


@dataclass
class GameState:
    scenario: ScenarioConfig
    topology: NetworkTopology
    detectors: DetectorConfig
    reward_config: RewardConfig
    layout: ObsLayout
    episode_seed: int
    hosts: dict
    streams: dict
    red: RedStrategy
    red_knowledge: RedKnowledge
    observation: ObservationVector
    turn: int = 0
    blocked_pairs: set = field(default_factory=set)
    decoys: list = field(default_factory=list)
    decoy_subnet: dict = field(default_factory=dict)
    decoy_services: dict = field(default_factory=dict)
    episode_return: float = 0.0
    record: bool = True
    records: list = field(default_factory=list)

    @property
    def horizon(self) -> int:
        return self.scenario.horizon

    @property
    def done(self) -> bool:
        return self.turn >= self.scenario.horizon

    def to_dict(self) -> dict:
        return {
            "turn": self.turn,
            "episode_seed": self.episode_seed,
            "hosts": {h: rec.to_dict() for h, rec in sorted(self.hosts.items())},
            "blocked_pairs": [[f"s{a}", f"s{b}"] for a, b in sorted(self.blocked_pairs)],
            "decoys": [[d, f"s{self.decoy_subnet[d]}"] for d in self.decoys],
            "red_knowledge": self.red_knowledge.to_dict(),
            "rng_streams": {k: s.state() for k, s in sorted(self.streams.items())},
            "observation": self.observation.to_dict(),
            "episode_return": round(self.episode_return, 9),
        }

    def canonical_json(self) -> str:
        return canonical_dumps(self.to_dict())


# -- setup ----------------------------------------------------------------------

_TOPOLOGY_CACHE: dict = {}


def topology_for(scenario: ScenarioConfig) -> NetworkTopology:
    key = scenario.canonical_json()
    topo = _TOPOLOGY_CACHE.get(key)
    if topo is None:
        if len(_TOPOLOGY_CACHE) > 256:
            _TOPOLOGY_CACHE.clear()
        topo = _TOPOLOGY_CACHE[key] = generate_topology(scenario, scenario.seed)
    return topo


def episode_streams(scenario_seed: int, episode_seed: int) -> dict:
    return {name: Stream.named("episode", scenario_seed, episode_seed, name) for name in STREAMS}


def reset(
    scenario: ScenarioConfig,
    episode_seed: int = 0,
    *,
    detectors: DetectorConfig | None = None,
    reward_config: RewardConfig | None = None,
    record: bool = True,
):
    """Start an episode; returns ``(state, initial observation)``.

    ``detectors``/``reward_config`` override the scenario's references.
    """
    violations = validate(scenario)
    if violations:
        raise InvariantViolation(violations)
    if detectors is None:
        detectors = load_detectors(scenario.detector_config_ref)
    if reward_config is None:
        reward_config = load_reward_config(scenario.reward_config_ref)
    topology = topology_for(scenario)
    layout = ObsLayout.for_topology(topology, scenario.max_decoys)
    streams = episode_streams(scenario.seed, episode_seed)
    obs = ObservationVector.initial(scenario.encoding, layout)
    state = GameState(
        scenario=scenario,
        topology=topology,
        detectors=detectors,
        reward_config=reward_config,
        layout=layout,
        episode_seed=episode_seed,
        hosts={h.id: HostState() for h in topology.hosts},
        streams=streams,
        red=RedStrategy(scenario.red_strategy, streams["red"], scenario.red_params),
        red_knowledge=RedKnowledge(entry_subnet=topology.entry_subnet),
        observation=obs,
        record=record,
    )
    return state, obs


# -- blue -----------------------------------------------------------------------


def _evict(state: GameState, h: str) -> None:
    state.red_knowledge = update_knowledge(
        state.red_knowledge, None, ActionOutcome(True, {"evicted": [h]})
    )


def _apply_blue(state: GameState, action: BlueAction):
    """Returns ``(outcome, evidence, legal)``; illegal actions change nothing."""
    kind, t = action.kind, action.target
    hosts = state.hosts
    if kind is BlueKind.MONITOR:
        return ActionOutcome(True), None, True
    if kind in HOST_ACTIONS:
        if not isinstance(t, str) or t not in hosts:
            return None, None, False
        rec = hosts[t]
        if kind is BlueKind.ANALYZE:
            return ActionOutcome(True, {"observed": _EVIDENCE[rec.compromise].name}), {t: _EVIDENCE[rec.compromise]}, True
        if kind is BlueKind.REMOVE:
            if rec.compromise == USER:
                rec.compromise = CLEAN
                _evict(state, t)
                return ActionOutcome(True, {"evicted": [t]}), {t: CompromisedState.NO}, True
            return ActionOutcome(False), {t: _EVIDENCE[rec.compromise]}, True
        if kind is BlueKind.RESTORE:
            had = rec.compromise != CLEAN
            rec.compromise = CLEAN
            rec.restore_downtime_remaining = state.reward_config.restore_downtime_turns
            if had:
                _evict(state, t)
            return ActionOutcome(True, {"evicted": [t] if had else []}), {t: CompromisedState.NO}, True
        if kind is BlueKind.ISOLATE:
            rec.isolated = True
            return ActionOutcome(True), None, True
        rec.isolated = False
        return ActionOutcome(True), None, True
    if kind is BlueKind.DEPLOY_DECOY:
        if not isinstance(t, int) or not 0 <= t < len(state.topology.subnets):
            return None, None, False
        if len(state.decoys) >= state.scenario.max_decoys:
            return None, None, False
        d = f"decoy{len(state.decoys)}"
        rng = state.streams["topo"]
        service = EXPLOITABLE_SERVICES[rng.randrange(len(EXPLOITABLE_SERVICES))]
        state.decoys.append(d)
        state.decoy_subnet[d] = t
        state.decoy_services[d] = service
        state.hosts[d] = HostState(is_decoy=True)
        if t in state.red_knowledge.discovered_subnets:
            # a honeypot advertises itself to anyone already sweeping its subnet
            state.red_knowledge = update_knowledge(
                state.red_knowledge, None, ActionOutcome(True, {"discovered": [d]})
            )
        return ActionOutcome(True, {"decoy": d, "service": service}), None, True
    if kind is BlueKind.BLOCK:
        try:
            a, b = sorted(t)
        except (TypeError, ValueError):
            return None, None, False
        if (a, b) not in state.topology.reachability:
            return None, None, False
        state.blocked_pairs.add((a, b))
        return ActionOutcome(True), None, True
    return None, None, False


# -- red ------------------------------------------------------------------------


def _subnet_of(state: GameState, h: str) -> int:
    if h in state.decoy_subnet:
        return state.decoy_subnet[h]
    return state.topology.host(h).subnet


def _really_accessible(state: GameState, s: int) -> bool:
    topo = state.topology
    if s == topo.entry_subnet:
        return True
    for t in topo.neighbors(s):
        if (min(s, t), max(s, t)) in state.blocked_pairs:
            continue
        for h in topo.subnets[t].hosts:
            rec = state.hosts[h.id]
            if rec.compromise == PRIVILEGED and not rec.isolated:
                return True
    return False


def _subnet_members(state: GameState, s: int) -> list:
    out = [h.id for h in state.topology.subnets[s].hosts]
    out += [d for d in state.decoys if state.decoy_subnet[d] == s]
    return out


def _apply_red(state: GameState, action: RedAction, events: TurnEvents):
    """Ground-truth effect of a red action; returns ``(outcome, detection targets)``."""
    p = state.red.params
    rng = state.red.rng
    kind, t = action.kind, action.target
    if kind is RedKind.DISCOVER:
        targets = tuple(h for h in _subnet_members(state, t) if not state.hosts[h].isolated)
        if _really_accessible(state, t) and rng.bernoulli(p["discover_prob"]):
            found = _subnet_members(state, t)
            return ActionOutcome(True, {"discovered_subnets": [t], "discovered": found}), targets
        return ActionOutcome(False), targets
    rec = state.hosts[t]
    targets = (t,)
    if rec.isolated:
        return ActionOutcome(False, {"reason": "isolated"}), ()
    decoy = rec.is_decoy
    if kind is RedKind.SCAN:
        if _really_accessible(state, _subnet_of(state, t)) and rng.bernoulli(p["scan_prob"]):
            return ActionOutcome(True, {"scanned": [t]}), targets
    elif kind is RedKind.EXPLOIT:
        if decoy:
            rec.compromise = max(rec.compromise, USER)
            return ActionOutcome(True, {"user": [t], "decoy": True}), targets
        if (
            _really_accessible(state, _subnet_of(state, t))
            and state.topology.host(t).exploitable
            and rng.bernoulli(p["exploit_prob"])
        ):
            rec.compromise = max(rec.compromise, USER)
            return ActionOutcome(True, {"user": [t]}), targets
    elif kind is RedKind.ESCALATE:
        if rec.compromise >= USER and (decoy or rng.bernoulli(p["escalate_prob"])):
            if rec.compromise != PRIVILEGED and not decoy:
                events.escalated.append(t)
            rec.compromise = PRIVILEGED
            details = {"privileged": [t]}
            if decoy:
                details["decoy"] = True
            return ActionOutcome(True, details), targets
    elif kind is RedKind.IMPACT:
        if (
            t == state.topology.critical_host
            and rec.compromise == PRIVILEGED
            and rng.bernoulli(p["impact_prob"])
        ):
            events.impacts += 1
            return ActionOutcome(True, {"impact": [t]}), targets
    return ActionOutcome(False), targets


def _red_view(state: GameState) -> RedView:
    return RedView(
        isolated=frozenset(h for h, r in state.hosts.items() if r.isolated),
        blocked=frozenset(state.blocked_pairs),
        decoys=tuple((d, state.decoy_subnet[d]) for d in state.decoys),
    )


# -- turn -----------------------------------------------------------------------


def _r9(x: float) -> float:
    return round(x, 9) + 0.0


def step(state: GameState, blue_action: BlueAction):
    """Play one turn. Returns ``(state, observation, reward, done)``.

    Illegal blue actions are played as Monitor and flagged in the trace.
    """
    if state.done:
        raise ContractError(f"episode already finished at turn {state.turn}")
    turn = state.turn
    events = TurnEvents()

    # 1. blue
    blue_outcome, evidence, legal = _apply_blue(state, blue_action)
    if not legal:
        blue_outcome, evidence = ActionOutcome(True), None

    # 2. red
    try:
        red_action = select_action(state.red, state.red_knowledge, state.topology, _red_view(state))
    except Stalled:
        red_action = None
    red_events = []
    if red_action is not None:
        outcome, targets = _apply_red(state, red_action, events)
        state.red_knowledge = update_knowledge(state.red_knowledge, red_action, outcome)
        # 3. detection
        alerts = detect(red_action, outcome, state.detectors, state.streams["detect"], turn, targets)
        red_events.append(RedEvent(red_action, outcome, targets))
        detected = [bool(alerts)]
    else:
        outcome, alerts, detected = None, [], []
    observed_hosts = state.layout.host_ids[: len(state.topology.hosts)] + tuple(state.decoys)
    fp_alerts = generate_false_positives(state.detectors, observed_hosts, turn, state.streams["fp"])
    all_alerts = alerts + fp_alerts

    # 4. observation
    if state.scenario.encoding == "baseline":
        obs = encode_baseline(red_events, state.observation, detected, state.layout, evidence)
    else:
        obs = encode_detector(all_alerts, state.observation, state.layout, evidence)
    state.observation = obs

    # 5. reward
    components = compute_components(state, events, state.reward_config)
    reward = _r9(compute_reward(components, state.reward_config.weights))
    state.episode_return += reward

    # 6. advance
    state.turn += 1
    for rec in state.hosts.values():
        if rec.restore_downtime_remaining:
            rec.restore_downtime_remaining -= 1

    if state.record:
        state.records.append(
            {
                "type": "turn",
                "turn": turn,
                "blue_action": blue_action.to_dict() if isinstance(blue_action, BlueAction) else repr(blue_action),
                "blue_flagged": not legal,
                "blue_outcome": blue_outcome.to_dict(),
                "red_action": red_action.to_dict() if red_action is not None else None,
                "action_outcome": outcome.to_dict() if outcome is not None else None,
                "alerts": [a.to_dict() for a in all_alerts],
                "reward_components": components.to_dict(),
                "reward": reward,
            }
        )
    return state, obs, reward, state.done


# -- episodes and traces --------------------------------------------------------


def hash_hex(h: int) -> str:
    return f"{h:016x}"


def _config_hash(text: str) -> str:
    return hash_hex(kernels.fnv1a64(text.encode("utf-8")))


def trace_header(state: GameState) -> dict:
    return {
        "type": "header",
        "format": TRACE_FORMAT,
        "scenario": state.scenario.to_dict(),
        "scenario_hash": _config_hash(state.scenario.canonical_json()),
        "seeds": {"scenario": state.scenario.seed, "episode": state.episode_seed},
        "detector_config": state.detectors.to_dict(),
        "detector_hash": _config_hash(state.detectors.canonical_json()),
        "reward_config": state.reward_config.to_dict(),
        "reward_hash": _config_hash(state.reward_config.canonical_json()),
    }


def trace_hash(header: dict, records: list) -> str:
    body = "\n".join(canonical_dumps(x) for x in [header, *records])
    return hash_hex(kernels.fnv1a64(body.encode("utf-8")))


@dataclass
class EpisodeTrace:
    header: dict
    records: list
    footer: dict

    @property
    def episode_return(self) -> float:
        return self.footer["return"]

    @property
    def hash(self) -> str:
        return self.footer["trace_hash"]

    def lines(self) -> list:
        return [canonical_dumps(x) for x in [self.header, *self.records, self.footer]]

    def dumps(self) -> str:
        return "\n".join(self.lines()) + "\n"

    def save(self, path) -> None:
        Path(path).write_text(self.dumps(), encoding="utf-8")

    @classmethod
    def loads(cls, text: str) -> "EpisodeTrace":
        lines = [ln for ln in text.split("\n") if ln.strip()]
        try:
            objs = [json.loads(ln) for ln in lines]
        except json.JSONDecodeError as exc:
            raise TraceFormatError(f"line is not JSON: {exc}") from None
        if len(objs) < 2:
            raise TraceFormatError("trace needs a header and a footer line")
        header, *records, footer = objs
        if not isinstance(header, dict) or header.get("type") != "header":
            raise TraceFormatError("first line is not a trace header")
        if header.get("format") != TRACE_FORMAT:
            raise TraceVersionError(f"unsupported trace format {header.get('format')!r}; expected {TRACE_FORMAT}")
        if not isinstance(footer, dict) or footer.get("type") != "footer":
            raise TraceFormatError("last line is not a trace footer (truncated file?)")
        for k in ("return", "terminal_turn", "trace_hash"):
            if k not in footer:
                raise TraceFormatError(f"footer missing {k!r}")
        for i, r in enumerate(records):
            if not isinstance(r, dict) or r.get("type") != "turn" or r.get("turn") != i:
                raise TraceFormatError(f"record {i} is malformed or out of order")
        if footer["terminal_turn"] != len(records):
            raise TraceFormatError(
                f"footer says {footer['terminal_turn']} turns but {len(records)} records are present"
            )
        return cls(header, records, footer)

    @classmethod
    def load(cls, path) -> "EpisodeTrace":
        try:
            text = Path(path).read_text(encoding="utf-8")
        except (OSError, UnicodeDecodeError) as exc:
            raise TraceFormatError(f"cannot read trace {path}: {exc}") from None
        return cls.loads(text)


def finish_trace(state: GameState) -> EpisodeTrace:
    header = trace_header(state)
    footer = {
        "type": "footer",
        "return": _r9(state.episode_return),
        "terminal_turn": state.turn,
        "trace_hash": trace_hash(header, state.records),
    }
    return EpisodeTrace(header, list(state.records), footer)


def run_episode(scenario: ScenarioConfig, policy, episode_seed: int = 0, *, detectors=None, reward_config=None, record=True):
    """Play one full episode with ``policy`` and return its trace.

    ``policy`` is anything with ``act(observation, catalog) -> BlueAction``;
    an optional ``notify(reward, done)`` is called after every step.
    """
    state, obs = reset(scenario, episode_seed, detectors=detectors, reward_config=reward_config, record=record)
    catalog = action_catalog(state.topology, scenario.max_decoys)
    if hasattr(policy, "begin_episode"):
        policy.begin_episode(episode_seed)
    notify = getattr(policy, "notify", None)
    done = False
    while not done:
        action = policy.act(obs, catalog)
        state, obs, reward, done = step(state, action)
        if notify is not None:
            notify(reward, done)
    return finish_trace(state)


# -- replay -----------------------------------------------------------------------


class ReplayError(Exception):
    pass


class TraceFormatError(ReplayError):
    pass


class TraceVersionError(ReplayError):
    pass


class TraceHashMismatch(ReplayError):
    pass


class TraceDivergence(ReplayError):
    def __init__(self, turn: int, fields: list):
        self.turn = turn
        self.fields = fields
        super().__init__(f"divergence at turn {turn}: {', '.join(fields)}")


@dataclass
class ReplayReport:
    verdict: str
    turns: int
    trace_hash: str
    recomputed_hash: str


def replay(trace: EpisodeTrace, scenario: ScenarioConfig | None = None) -> ReplayReport:
    """Re-simulate ``trace`` from its recorded blue actions and compare every turn.

    Raises :class:`TraceDivergence` at the first differing turn and
    :class:`TraceHashMismatch` if the turns agree but the stored hash does not.
    """
    header = trace.header
    if header.get("format") != TRACE_FORMAT:
        raise TraceVersionError(f"unsupported trace format {header.get('format')!r}")
    try:
        recorded = ScenarioConfig.from_dict(header["scenario"])
        detectors = detector_config_from_dict(header["detector_config"], header["detector_config"]["name"])
        reward_config = reward_config_from_dict(header["reward_config"], header["reward_config"]["name"])
    except (KeyError, TypeError, ConfigError) as exc:
        raise TraceFormatError(f"header does not describe a valid game: {exc}") from None
    if scenario is not None and scenario.canonical_json() != recorded.canonical_json():
        raise TraceHashMismatch(
            f"scenario hash {_config_hash(scenario.canonical_json())} != trace {header.get('scenario_hash')}"
        )
    state, _ = reset(recorded, header["seeds"]["episode"], detectors=detectors, reward_config=reward_config)
    if trace_header(state) != header:
        raise TraceHashMismatch("trace header does not match the configuration it names")
    for rec in trace.records:
        if state.done:
            raise TraceDivergence(rec["turn"], ["horizon"])
        try:
            action = BlueAction.from_dict(rec["blue_action"])
        except (KeyError, TypeError, ValueError, IndexError):
            raise TraceFormatError(f"turn {rec['turn']}: unreadable blue action") from None
        step(state, action)
        fresh = state.records[-1]
        diff = sorted(k for k in set(fresh) | set(rec) if fresh.get(k) != rec.get(k))
        if diff:
            raise TraceDivergence(rec["turn"], diff)
    if state.turn != trace.footer["terminal_turn"] or _r9(state.episode_return) != trace.footer["return"]:
        raise TraceDivergence(state.turn, ["footer"])
    recomputed = trace_hash(header, trace.records)
    if recomputed != trace.footer["trace_hash"]:
        raise TraceHashMismatch(f"stored hash {trace.footer['trace_hash']} != recomputed {recomputed}")
    return ReplayReport("identical", len(trace.records), trace.footer["trace_hash"], recomputed)


class CyberDefenseEnv:
    """Gym-style wrapper: ``reset(seed) -> obs`` and ``step(action) -> (obs, reward, done, info)``.

    ``action`` may be a :class:`BlueAction` or an index into ``catalog``.
    """

    def __init__(self, scenario: ScenarioConfig, *, detectors=None, reward_config=None, record=False):
        self.scenario = scenario
        self.detectors = detectors if detectors is not None else load_detectors(scenario.detector_config_ref)
        self.reward_config = reward_config if reward_config is not None else load_reward_config(scenario.reward_config_ref)
        self.record = record
        self.topology = topology_for(scenario)
        self.catalog = action_catalog(self.topology, scenario.max_decoys)
        self.state = None

    def reset(self, seed: int = 0) -> ObservationVector:
        self.state, obs = reset(
            self.scenario, seed, detectors=self.detectors, reward_config=self.reward_config, record=self.record
        )
        return obs

    def step(self, action):
        if not isinstance(action, BlueAction):
            action = self.catalog[action]
        _, obs, reward, done = step(self.state, action)
        return obs, reward, done, {"turn": self.state.turn}

    def trace(self) -> EpisodeTrace:
        return finish_trace(self.state)
