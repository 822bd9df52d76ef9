"""Blue-side observations of red activity.

Every red action touches one or more Data Components. Each component has a
detector that flips one coin per touched component and target host; a hit
emits an alert. Detectors also emit false alerts at a fixed per-host rate.

Two encodings are built from the same draws:

* baseline: per host ``(ActivityState, CompromisedState)``, where activity is
  set only by detected red events;
* detector: per host alert counts for every component, plus a
  CompromisedState driven by blue's own evidence (Analyze/Remove/Restore).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import IntEnum
from importlib import resources
from pathlib import Path

import numpy as np

from . import kernels
from .errors import ConfigError, ContractError
from .red import ActionOutcome, RedAction, RedKind

USER_ACCOUNT = "user-account-creation"
PROCESS = "process-creation"
SESSION = "network-session"
TRAFFIC = "network-traffic-flow"
FILE_MOD = "file-modification"

COMPONENTS = (USER_ACCOUNT, PROCESS, SESSION, TRAFFIC, FILE_MOD)

ACTION_COMPONENTS = {
    RedKind.DISCOVER: (TRAFFIC,),
    RedKind.SCAN: (TRAFFIC, SESSION),
    RedKind.EXPLOIT: (PROCESS, SESSION),
    RedKind.ESCALATE: (USER_ACCOUNT, PROCESS),
    RedKind.IMPACT: (FILE_MOD, PROCESS),
}


class ActivityState(IntEnum):
    NONE = 0
    SCAN = 1
    EXPLOIT = 2


class CompromisedState(IntEnum):
    NO = 0
    UNKNOWN = 1
    USER = 2
    PRIVILEGED = 3


_ACTIVITY_OF = {
    RedKind.DISCOVER: ActivityState.SCAN,
    RedKind.SCAN: ActivityState.SCAN,
    RedKind.EXPLOIT: ActivityState.EXPLOIT,
    RedKind.ESCALATE: ActivityState.EXPLOIT,
    RedKind.IMPACT: ActivityState.EXPLOIT,
}


@dataclass(frozen=True)
class Detector:
    component: str
    detect_prob: dict  # RedKind -> probability
    false_positive_rate: float = 0.0

    def to_dict(self) -> dict:
        return {
            "component": self.component,
            "detect_prob": {k.value: p for k, p in sorted(self.detect_prob.items(), key=lambda kv: kv[0].value)},
            "false_positive_rate": self.false_positive_rate,
        }


@dataclass(frozen=True)
class DetectorConfig:
    name: str
    detectors: tuple

    def __post_init__(self):
        by_component = {d.component: d for d in self.detectors}
        object.__setattr__(self, "_by_component", by_component)
        # per action kind: ((component, prob), ...) in map order
        plan = {
            kind: tuple((c, by_component[c].detect_prob[kind]) for c in comps)
            for kind, comps in ACTION_COMPONENTS.items()
            if all(c in by_component and kind in by_component[c].detect_prob for c in comps)
        }
        object.__setattr__(self, "_plan", plan)
        object.__setattr__(
            self, "_fp", tuple((d.component, d.false_positive_rate) for d in self.detectors if d.false_positive_rate > 0)
        )

    def detector(self, component: str) -> Detector:
        return self._by_component[component]

    def to_dict(self) -> dict:
        return {"name": self.name, "detectors": [d.to_dict() for d in self.detectors]}

    def canonical_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))


def _check_prob(where: str, p) -> float:
    if isinstance(p, bool) or not isinstance(p, (int, float)) or not 0.0 <= p <= 1.0:
        raise ConfigError(f"{where}: probability must be a number in [0, 1], got {p!r}")
    return float(p)


def detector_config_from_dict(data: dict, name: str | None = None) -> DetectorConfig:
    """Parse and validate; every action kind must be covered by its components."""
    if not isinstance(data, dict) or not isinstance(data.get("detectors"), list):
        raise ConfigError("detector config needs a 'detectors' list")
    dets = []
    seen = set()
    for i, raw in enumerate(data["detectors"]):
        comp = raw.get("component")
        if comp in seen:
            raise ConfigError(f"detectors[{i}]: duplicate component {comp!r}")
        seen.add(comp)
        probs = {}
        for kind_name, p in raw.get("detect_prob", {}).items():
            try:
                kind = RedKind(kind_name)
            except ValueError:
                raise ConfigError(f"detectors[{i}].detect_prob: unknown action kind {kind_name!r}") from None
            probs[kind] = _check_prob(f"detectors[{i}].detect_prob.{kind_name}", p)
        fp = _check_prob(f"detectors[{i}].false_positive_rate", raw.get("false_positive_rate", 0.0))
        dets.append(Detector(comp, probs, fp))
    by_component = {d.component: d for d in dets}
    for kind, comps in ACTION_COMPONENTS.items():
        for c in comps:
            if c not in by_component:
                raise ConfigError(f"no detector for component {c!r} touched by {kind.value}")
            if kind not in by_component[c].detect_prob:
                raise ConfigError(f"detector {c!r} has no probability for {kind.value}")
    return DetectorConfig(name or data.get("name", "custom"), tuple(dets))


def uniform_detectors(p: float, false_positive_rate: float = 0.0) -> DetectorConfig:
    """Every touched (component, action) pair detected with probability ``p``."""
    p = _check_prob("uniform p", p)
    dets = []
    for c in COMPONENTS:
        probs = {k: p for k, comps in ACTION_COMPONENTS.items() if c in comps}
        dets.append(Detector(c, probs, false_positive_rate))
    return DetectorConfig(f"p={p:g}", tuple(dets))


def preset_names() -> list:
    root = resources.files("cyberdef_sim") / "data" / "detectors"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def load_detectors(ref: str) -> DetectorConfig:
    """Resolve a preset name, ``p=<prob>`` uniform setting, or JSON file path."""
    if ref.startswith("p="):
        try:
            return uniform_detectors(float(ref[2:]))
        except ValueError as exc:
            raise ConfigError(f"bad uniform detection setting {ref!r}: {exc}") from None
    if ref in preset_names():
        text = (resources.files("cyberdef_sim") / "data" / "detectors" / f"{ref}.json").read_text("utf-8")
        return detector_config_from_dict(json.loads(text), ref)
    path = Path(ref)
    if path.suffix == ".json" and path.is_file():
        return detector_config_from_dict(json.loads(path.read_text("utf-8")))
    raise ConfigError(f"unknown detector preset {ref!r}; available: {preset_names()} or p=<prob> or a .json path")


# -- alerts -------------------------------------------------------------------


@dataclass(frozen=True)
class Alert:
    host: str
    component: str
    turn: int
    genuine: bool

    def to_dict(self) -> dict:
        return {"host": self.host, "component": self.component, "turn": self.turn, "genuine": self.genuine}

    @classmethod
    def from_dict(cls, d) -> "Alert":
        return cls(d["host"], d["component"], d["turn"], d["genuine"])


def detect(action: RedAction, outcome: ActionOutcome, detectors: DetectorConfig, rng, turn: int = 0, targets=None) -> list:
    """Flip one coin per (target host, touched component).

    ``targets`` defaults to the action's host; DiscoverSubnet passes every
    reachable host of the subnet. Failed attempts are detectable too.
    """
    if targets is None:
        targets = (action.target,)
    plan = detectors._plan.get(action.kind)
    if plan is None:
        raise ConfigError(f"detectors do not cover {action.kind.value}")
    probs = [p for _ in targets for _, p in plan]
    hits = rng.bernoulli_hits(probs)
    n = len(plan)
    return [Alert(targets[i // n], plan[i % n][0], turn, True) for i in hits]


def generate_false_positives(detectors: DetectorConfig, hosts, turn: int, rng) -> list:
    """One Bernoulli(false_positive_rate) trial per (host, detector) with a nonzero rate."""
    fp = detectors._fp
    if not fp:
        return []
    probs = [rate for _ in hosts for _, rate in fp]
    hits = rng.bernoulli_hits(probs)
    n = len(fp)
    return [Alert(hosts[i // n], fp[i % n][0], turn, False) for i in hits]


# -- observations ---------------------------------------------------------------


class ObsLayout:
    """Fixed host slot order: topology hosts, then decoy slots."""

    def __init__(self, host_ids, components=COMPONENTS):
        self.host_ids = tuple(host_ids)
        self.components = tuple(components)
        self.index = {h: i for i, h in enumerate(self.host_ids)}
        self.cindex = {c: i for i, c in enumerate(self.components)}

    @classmethod
    def for_topology(cls, topology, max_decoys: int = 0) -> "ObsLayout":
        return cls([h.id for h in topology.hosts] + [f"decoy{i}" for i in range(max_decoys)])

    def __len__(self):
        return len(self.host_ids)

    def __eq__(self, other):
        return isinstance(other, ObsLayout) and (self.host_ids, self.components) == (other.host_ids, other.components)

    def __hash__(self):
        return hash((self.host_ids, self.components))


@dataclass(frozen=True)
class RedEvent:
    action: RedAction
    outcome: ActionOutcome
    targets: tuple
    detected: bool = False


@dataclass(frozen=True)
class ObservationVector:
    encoding: str
    layout: ObsLayout
    compromised: tuple
    activity: tuple = ()  # baseline: one ActivityState per host
    counts: tuple = ()  # detector: host-major alert counts

    @classmethod
    def initial(cls, encoding: str, layout: ObsLayout) -> "ObservationVector":
        n = len(layout)
        if encoding == "baseline":
            return cls("baseline", layout, (0,) * n, activity=(0,) * n)
        if encoding == "detector":
            return cls("detector", layout, (0,) * n, counts=(0,) * (n * len(layout.components)))
        raise ContractError(f"unknown encoding {encoding!r}")

    def host_activity(self) -> list:
        """Per-host activity magnitude: ActivityState or total alert count."""
        if self.encoding == "baseline":
            return list(self.activity)
        c = len(self.layout.components)
        return [sum(self.counts[i * c:(i + 1) * c]) for i in range(len(self.layout))]

    def host_counts(self, i: int) -> tuple:
        c = len(self.layout.components)
        return self.counts[i * c:(i + 1) * c]

    def to_array(self) -> np.ndarray:
        """Flat integer vector: (activity, compromised) or (counts..., compromised) per host."""
        n = len(self.layout)
        if self.encoding == "baseline":
            out = np.empty(2 * n, dtype=np.int64)
            out[0::2] = self.activity
            out[1::2] = self.compromised
            return out
        c = len(self.layout.components)
        grid = np.asarray(self.counts, dtype=np.int64).reshape(n, c)
        return np.hstack([grid, np.asarray(self.compromised, dtype=np.int64)[:, None]]).ravel()

    def key(self) -> int:
        """Stable 64-bit FNV-1a hash of the observation, counts clipped to {0, 1, 2+}."""
        if self.encoding == "baseline":
            body = bytes(a * 4 + c for a, c in zip(self.activity, self.compromised))
            return kernels.fnv1a64(b"B" + body)
        body = bytes(min(x, 2) for x in self.counts) + bytes(self.compromised)
        return kernels.fnv1a64(b"D" + body)

    def to_dict(self) -> dict:
        hosts = []
        for i, h in enumerate(self.layout.host_ids):
            row = {"host": h, "compromised": CompromisedState(self.compromised[i]).name}
            if self.encoding == "baseline":
                row["activity"] = ActivityState(self.activity[i]).name
            else:
                row["alerts"] = dict(zip(self.layout.components, self.host_counts(i)))
            hosts.append(row)
        return {"encoding": self.encoding, "hosts": hosts}


def _apply_evidence(comp: list, layout: ObsLayout, evidence) -> None:
    for h, level in (evidence or {}).items():
        comp[layout.index[h]] = int(level)


def encode_baseline(events, prior: ObservationVector, detect_outcome, layout: ObsLayout | None = None, evidence=None) -> ObservationVector:
    """Activity from detected red events this turn; compromise from detected successes.

    ``detect_outcome[i]`` says whether ``events[i]`` raised at least one
    genuine alert. ``evidence`` maps host -> CompromisedState learned from
    blue's own action this turn and is applied first.
    """
    if prior.encoding != "baseline":
        raise ContractError(f"encode_baseline needs a baseline prior, got {prior.encoding}")
    layout = layout or prior.layout
    if layout is not prior.layout and layout.host_ids != prior.layout.host_ids:
        raise ContractError("prior observation was built for a different topology")
    n = len(layout)
    activity = [0] * n
    comp = list(prior.compromised)
    _apply_evidence(comp, layout, evidence)
    for ev, seen in zip(events, detect_outcome):
        if not seen:
            continue
        act = _ACTIVITY_OF[ev.action.kind]
        for h in ev.targets:
            i = layout.index[h]
            if act > activity[i]:
                activity[i] = act
        if ev.outcome.success:
            i = layout.index.get(ev.action.target) if ev.action.kind is not RedKind.DISCOVER else None
            if ev.action.kind is RedKind.EXPLOIT and comp[i] < CompromisedState.USER:
                comp[i] = CompromisedState.USER
            elif ev.action.kind is RedKind.ESCALATE:
                comp[i] = CompromisedState.PRIVILEGED
    return ObservationVector("baseline", layout, tuple(comp), activity=tuple(activity))


def encode_detector(alerts, prior: ObservationVector, layout: ObsLayout | None = None, evidence=None) -> ObservationVector:
    """Count alerts per (host, component); alerted hosts believed clean become Unknown."""
    if prior.encoding != "detector":
        raise ContractError(f"encode_detector needs a detector prior, got {prior.encoding}")
    layout = layout or prior.layout
    c = len(layout.components)
    counts = [0] * (len(layout) * c)
    comp = list(prior.compromised)
    _apply_evidence(comp, layout, evidence)
    for a in alerts:
        i = layout.index.get(a.host)
        j = layout.cindex.get(a.component)
        if i is None or j is None:
            raise ContractError(f"alert references unknown host/component: {a.host}/{a.component}")
        counts[i * c + j] += 1
        if comp[i] == CompromisedState.NO:
            comp[i] = CompromisedState.UNKNOWN
    return ObservationVector("detector", layout, tuple(comp), counts=tuple(counts))
