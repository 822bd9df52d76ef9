"""CIA-weighted per-turn reward.

reward = -(w_c * C + w_i * I + w_a * A) + w_h * H

C  confidentiality exposure: tier cost of every compromised host holding
   confidential data, charged each turn it stays compromised.
I  integrity damage: impact_cost per successful Impact, plus the tier cost of
   each host newly escalated to privileged this turn.
A  availability loss: tier cost of every host that is isolated or in restore
   downtime, plus block_cost per blocked subnet pair, charged per turn.
H  honeypot engagement: decoys holding a red session this turn.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .errors import ConfigError
from .scenario import Tier

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class CIAWeights:
    w_confidentiality: float = 1.0
    w_integrity: float = 1.0
    w_availability: float = 1.0
    w_honeypot: float = 0.5

    def scaled(self, c: float) -> "CIAWeights":
        return CIAWeights(*(c * w for w in self.as_tuple()))

    def as_tuple(self) -> tuple:
        return (self.w_confidentiality, self.w_integrity, self.w_availability, self.w_honeypot)


@dataclass(frozen=True)
class RewardComponents:
    C: float = 0.0
    I: float = 0.0
    A: float = 0.0
    H: float = 0.0

    def to_dict(self) -> dict:
        return {k: round(v, 9) for k, v in (("C", self.C), ("I", self.I), ("A", self.A), ("H", self.H))}


@dataclass(frozen=True)
class RewardConfig:
    tier_costs: dict = field(
        default_factory=lambda: {Tier.USER: 0.1, Tier.ENTERPRISE: 1.0, Tier.OPERATIONAL: 10.0}
    )
    impact_cost: float = 10.0
    restore_downtime_turns: int = 1
    block_cost: float = 1.0
    weights: CIAWeights = CIAWeights()
    name: str = "default"

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "tier_costs": {t.value: c for t, c in sorted(self.tier_costs.items(), key=lambda kv: kv[0].value)},
            "impact_cost": self.impact_cost,
            "restore_downtime_turns": self.restore_downtime_turns,
            "block_cost": self.block_cost,
            "weights": {
                "w_confidentiality": self.weights.w_confidentiality,
                "w_integrity": self.weights.w_integrity,
                "w_availability": self.weights.w_availability,
                "w_honeypot": self.weights.w_honeypot,
            },
        }

    def canonical_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))


def _num(where, x, positive=False):
    if isinstance(x, bool) or not isinstance(x, (int, float)) or not math.isfinite(x):
        raise ConfigError(f"{where}: expected a finite number, got {x!r}")
    if positive and x <= 0:
        raise ConfigError(f"{where}: must be > 0")
    if x < 0:
        raise ConfigError(f"{where}: must be >= 0")
    return float(x)


def reward_config_from_dict(data: dict, name: str | None = None) -> RewardConfig:
    base = RewardConfig()
    allowed = {"name", "tier_costs", "impact_cost", "restore_downtime_turns", "block_cost", "weights", "note"}
    unknown = sorted(set(data) - allowed)
    if unknown:
        raise ConfigError(f"reward config: unknown keys {unknown}")
    tier_costs = dict(base.tier_costs)
    for t, c in data.get("tier_costs", {}).items():
        try:
            tier_costs[Tier(t)] = _num(f"tier_costs.{t}", c, positive=True)
        except ValueError as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"tier_costs: unknown tier {t!r}") from None
    w = data.get("weights", {})
    unknown_w = sorted(set(w) - {"w_confidentiality", "w_integrity", "w_availability", "w_honeypot"})
    if unknown_w:
        raise ConfigError(f"weights: unknown keys {unknown_w}")
    weights = CIAWeights(**{k: _num(f"weights.{k}", v) for k, v in w.items()}) if w else base.weights
    if not any(weights.as_tuple()):
        log.warning("all reward weights are zero; every turn will score 0")
    downtime = data.get("restore_downtime_turns", base.restore_downtime_turns)
    if isinstance(downtime, bool) or not isinstance(downtime, int) or downtime < 0:
        raise ConfigError("restore_downtime_turns: must be an integer >= 0")
    return RewardConfig(
        tier_costs=tier_costs,
        impact_cost=_num("impact_cost", data.get("impact_cost", base.impact_cost), positive=True),
        restore_downtime_turns=downtime,
        block_cost=_num("block_cost", data.get("block_cost", base.block_cost)),
        weights=weights,
        name=name or data.get("name", "custom"),
    )


def preset_names() -> list:
    root = resources.files("cyberdef_sim") / "data" / "rewards"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def load_reward_config(ref: str) -> RewardConfig:
    """Resolve a preset name or a JSON file path."""
    if ref in preset_names():
        text = (resources.files("cyberdef_sim") / "data" / "rewards" / f"{ref}.json").read_text("utf-8")
        return reward_config_from_dict(json.loads(text), ref)
    path = Path(ref)
    if path.suffix == ".json" and path.is_file():
        return reward_config_from_dict(json.loads(path.read_text("utf-8")))
    raise ConfigError(f"unknown reward preset {ref!r}; available: {preset_names()} or a .json path")


def compute_components(state, events, config: RewardConfig) -> RewardComponents:
    """Evaluate C, I, A, H for the turn just played.

    ``state`` needs ``topology``, ``hosts`` (per-host records with
    ``compromise``, ``isolated``, ``restore_downtime_remaining``),
    ``blocked_pairs`` and ``decoys``; ``events`` needs ``impacts`` and
    ``escalated`` (hosts newly privileged this turn).
    """
    costs = config.tier_costs
    c = i = a = 0.0
    for host in state.topology.hosts:
        rec = state.hosts[host.id]
        cost = costs[host.tier]
        if rec.compromise and host.confidential_data:
            c += cost
        if rec.isolated or rec.restore_downtime_remaining > 0:
            a += cost
    a += config.block_cost * len(state.blocked_pairs)
    i += config.impact_cost * events.impacts
    for h in events.escalated:
        if state.topology.has_host(h):
            i += costs[state.topology.host(h).tier]
    hp = sum(1 for d in state.decoys if state.hosts[d].compromise)
    return RewardComponents(c, i, a, float(hp))


def compute_reward(components: RewardComponents, weights: CIAWeights) -> float:
    return -(
        weights.w_confidentiality * components.C
        + weights.w_integrity * components.I
        + weights.w_availability * components.A
    ) + weights.w_honeypot * components.H
