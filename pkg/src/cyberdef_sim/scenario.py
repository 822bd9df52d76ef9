"""Scenario configuration and seeded topology generation.

A scenario file is a JSON object whose keys are exactly the fields of
:class:`ScenarioConfig`; unknown keys are rejected. Defaults for omitted
optional fields are listed in ``DEFAULTS``.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import asdict, dataclass, field
from enum import Enum
from pathlib import Path

from .errors import ConfigError
from .rng import Stream


class ScenarioFileNotFound(ConfigError):
    pass


class ScenarioParseError(ConfigError):
    pass


class InvariantViolation(ConfigError):
    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(f"{f}: {msg}" for f, msg in self.violations))


class Tier(str, Enum):
    USER = "UserHost"
    ENTERPRISE = "EnterpriseServer"
    OPERATIONAL = "OperationalServer"


TIERS = (Tier.USER, Tier.ENTERPRISE, Tier.OPERATIONAL)

# service name -> exploitable
SERVICE_CATALOG = {
    "sshd": True,
    "smb": True,
    "rdp": True,
    "http": True,
    "mysql": True,
    "ntp": False,
    "dns": False,
    "ldap": False,
}
EXPLOITABLE_SERVICES = tuple(s for s, ok in SERVICE_CATALOG.items() if ok)

RED_STRATEGIES = ("Beeline", "Meander", "RandomWalk", "Sleep")
ENCODINGS = ("baseline", "detector")

DEFAULTS = {
    "seed": 0,
    "horizon": 100,
    "tier_distribution": [0.6, 0.3, 0.1],
    "red_strategy": "Beeline",
    "detector_config_ref": "perfect",
    "reward_config_ref": "default",
    "encoding": "baseline",
    "max_decoys": 1,
    "red_params": {},
}
REQUIRED = ("subnet_count", "hosts_per_subnet")
UINT64_MAX = 2**64 - 1


@dataclass(frozen=True)
class ScenarioConfig:
    subnet_count: int
    hosts_per_subnet: tuple[int, int]
    tier_distribution: tuple[float, float, float] = (0.6, 0.3, 0.1)
    horizon: int = 100
    red_strategy: str = "Beeline"
    detector_config_ref: str = "perfect"
    reward_config_ref: str = "default"
    seed: int = 0
    encoding: str = "baseline"
    max_decoys: int = 1
    red_params: dict = field(default_factory=dict, hash=False, compare=True)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["hosts_per_subnet"] = list(self.hosts_per_subnet)
        d["tier_distribution"] = list(self.tier_distribution)
        d["red_params"] = dict(sorted(self.red_params.items()))
        return d

    def canonical_json(self) -> str:
        return canonical_dumps(self.to_dict())

    @classmethod
    def from_dict(cls, data: dict) -> "ScenarioConfig":
        """Build and validate; raises :class:`InvariantViolation` on bad values."""
        unknown = sorted(set(data) - set(REQUIRED) - set(DEFAULTS))
        missing = [k for k in REQUIRED if k not in data]
        problems = [(k, "unknown key") for k in unknown]
        problems += [(k, "required field missing") for k in missing]
        if problems:
            raise InvariantViolation(problems)
        merged = {**DEFAULTS, **data}
        try:
            cfg = cls(
                subnet_count=merged["subnet_count"],
                hosts_per_subnet=tuple(merged["hosts_per_subnet"]),
                tier_distribution=tuple(merged["tier_distribution"]),
                horizon=merged["horizon"],
                red_strategy=merged["red_strategy"],
                detector_config_ref=merged["detector_config_ref"],
                reward_config_ref=merged["reward_config_ref"],
                seed=merged["seed"],
                encoding=merged["encoding"],
                max_decoys=merged["max_decoys"],
                red_params=dict(merged["red_params"]),
            )
        except TypeError as exc:
            raise InvariantViolation([("<file>", str(exc))]) from exc
        violations = validate(cfg)
        if violations:
            raise InvariantViolation(violations)
        return cfg


def canonical_dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def _is_int(x) -> bool:
    return isinstance(x, int) and not isinstance(x, bool)


def validate(config: ScenarioConfig) -> list[tuple[str, str]]:
    """Return ``(field, message)`` pairs for every violated invariant, in field order."""
    out = []
    if not _is_int(config.subnet_count) or config.subnet_count < 1:
        out.append(("subnet_count", "must be an integer >= 1"))
    hps = config.hosts_per_subnet
    if len(hps) != 2 or not all(_is_int(x) for x in hps):
        out.append(("hosts_per_subnet", "must be two integers [lo, hi]"))
    elif not 1 <= hps[0] <= hps[1]:
        out.append(("hosts_per_subnet", f"need 1 <= lo <= hi, got {list(hps)}"))
    td = config.tier_distribution
    if len(td) != 3 or not all(isinstance(w, (int, float)) and not isinstance(w, bool) for w in td):
        out.append(("tier_distribution", "must be three numeric weights"))
    elif any(w < 0 for w in td) or sum(td) <= 0:
        out.append(("tier_distribution", "weights must be nonnegative and not all zero"))
    if not _is_int(config.horizon) or config.horizon < 1:
        out.append(("horizon", "must be an integer >= 1"))
    if config.red_strategy not in RED_STRATEGIES:
        out.append(("red_strategy", f"must be one of {list(RED_STRATEGIES)}"))
    if not isinstance(config.detector_config_ref, str) or not config.detector_config_ref:
        out.append(("detector_config_ref", "must be a non-empty string"))
    if not isinstance(config.reward_config_ref, str) or not config.reward_config_ref:
        out.append(("reward_config_ref", "must be a non-empty string"))
    if not _is_int(config.seed) or not 0 <= config.seed <= UINT64_MAX:
        out.append(("seed", "must be an unsigned 64-bit integer"))
    if config.encoding not in ENCODINGS:
        out.append(("encoding", f"must be one of {list(ENCODINGS)}"))
    if not _is_int(config.max_decoys) or config.max_decoys < 0:
        out.append(("max_decoys", "must be an integer >= 0"))
    if not isinstance(config.red_params, dict):
        out.append(("red_params", "must be an object"))
    return out


def load_scenario(path) -> ScenarioConfig:
    path = Path(path)
    if not path.is_file():
        raise ScenarioFileNotFound(f"scenario file not found: {path}")
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ScenarioParseError(f"{path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ScenarioParseError(f"{path}: top-level value must be an object")
    return ScenarioConfig.from_dict(data)


# -- topology -----------------------------------------------------------------


@dataclass(frozen=True)
class Host:
    id: str
    tier: Tier
    services: frozenset
    confidential_data: bool
    subnet: int

    @property
    def exploitable(self) -> bool:
        return any(SERVICE_CATALOG.get(s, False) for s in self.services)

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "tier": self.tier.value,
            "services": sorted(self.services),
            "confidential_data": self.confidential_data,
        }


@dataclass(frozen=True)
class Subnet:
    id: int
    hosts: tuple

    @property
    def name(self) -> str:
        return f"s{self.id}"


@dataclass(frozen=True)
class NetworkTopology:
    subnets: tuple
    reachability: frozenset  # of (a, b) with a < b
    critical_host: str
    entry_subnet: int = 0

    def __post_init__(self):
        hosts = [h for s in self.subnets for h in s.hosts]
        object.__setattr__(self, "_hosts", tuple(hosts))
        object.__setattr__(self, "_by_id", {h.id: h for h in hosts})
        adj = {s.id: set() for s in self.subnets}
        for a, b in self.reachability:
            adj[a].add(b)
            adj[b].add(a)
        object.__setattr__(self, "_adj", {k: tuple(sorted(v)) for k, v in adj.items()})

    @property
    def hosts(self) -> tuple:
        """All hosts in deterministic (subnet, index) order."""
        return self._hosts

    def host(self, host_id: str) -> Host:
        return self._by_id[host_id]

    def has_host(self, host_id: str) -> bool:
        return host_id in self._by_id

    def neighbors(self, subnet: int) -> tuple:
        return self._adj[subnet]

    @property
    def critical_subnet(self) -> int:
        return self._by_id[self.critical_host].subnet

    def to_dict(self) -> dict:
        return {
            "subnets": [
                {"id": s.name, "hosts": [h.to_dict() for h in s.hosts]} for s in self.subnets
            ],
            "reachability": [[f"s{a}", f"s{b}"] for a, b in sorted(self.reachability)],
            "critical_host": self.critical_host,
            "entry_subnet": f"s{self.entry_subnet}",
        }

    def canonical_json(self) -> str:
        return canonical_dumps(self.to_dict())


def bfs_distances(n: int, edges, start: int) -> list:
    adj = [[] for _ in range(n)]
    for a, b in edges:
        adj[a].append(b)
        adj[b].append(a)
    dist = [-1] * n
    dist[start] = 0
    q = deque([start])
    while q:
        u = q.popleft()
        for v in sorted(adj[u]):
            if dist[v] < 0:
                dist[v] = dist[u] + 1
                q.append(v)
    return dist


def _draw_services(rng: Stream) -> set:
    names = list(SERVICE_CATALOG)
    k = rng.randint(1, 3)
    chosen = set()
    while len(chosen) < k:
        chosen.add(names[rng.randrange(len(names))])
    return chosen


def generate_topology(config: ScenarioConfig, seed: int | None = None) -> NetworkTopology:
    """Generate a connected subnet graph with tiered hosts.

    Reachability is a random tree (subnet ``i`` attaches to a uniformly chosen
    earlier subnet) plus ``subnet_count // 4`` extra non-tree edges. The
    critical OperationalServer lives in the subnet farthest (in tree hops) from
    the entry subnet ``s0``, ties broken by lowest id.
    """
    violations = validate(config)
    if violations:
        raise InvariantViolation(violations)
    if seed is None:
        seed = config.seed
    rng = Stream.named("topology", seed)
    n = config.subnet_count
    lo, hi = config.hosts_per_subnet

    tree = set()
    for i in range(1, n):
        tree.add((rng.randrange(i), i))
    edges = set(tree)
    candidates = [(a, b) for a in range(n) for b in range(a + 1, n) if (a, b) not in edges]
    for _ in range(min(n // 4, len(candidates))):
        edges.add(candidates.pop(rng.randrange(len(candidates))))

    dist = bfs_distances(n, tree, 0)
    far = max(range(n), key=lambda s: (dist[s], -s))

    subnets = []
    critical = None
    for s in range(n):
        count = rng.randint(lo, hi)
        hosts = []
        for i in range(count):
            tier = TIERS[rng.weighted_index(config.tier_distribution)]
            services = _draw_services(rng)
            conf_draw = rng.random()
            hosts.append([f"s{s}h{i}", tier, services, conf_draw])
        if s == far:
            # reuse an existing OperationalServer, else promote the last host
            idx = next((i for i, h in enumerate(hosts) if h[1] is Tier.OPERATIONAL), count - 1)
            hosts[idx][1] = Tier.OPERATIONAL
            critical = hosts[idx][0]
        if not any(any(SERVICE_CATALOG[x] for x in h[2]) for h in hosts):
            hosts[0][2].add(EXPLOITABLE_SERVICES[0])
        built = []
        for hid, tier, services, conf_draw in hosts:
            if tier is Tier.OPERATIONAL and not any(SERVICE_CATALOG[x] for x in services):
                services.add(EXPLOITABLE_SERVICES[0])
            if tier is Tier.USER:
                confidential = conf_draw < 0.25
            else:
                confidential = tier is Tier.ENTERPRISE
            built.append(Host(hid, tier, frozenset(services), confidential, s))
        subnets.append(Subnet(s, tuple(built)))
    return NetworkTopology(tuple(subnets), frozenset(edges), critical, 0)
