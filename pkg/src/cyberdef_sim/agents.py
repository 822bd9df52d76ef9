"""Blue policies, tabular Q-learning, training and evaluation loops.

A policy is any object with ``act(observation, catalog) -> BlueAction``.
Optional hooks: ``begin_episode(episode_seed)`` (re-seed per episode) and
``notify(reward, done)`` (learners). Nothing else of the engine is exposed.

Episode seeds are derived, not sequential: episode ``i`` of a run seeded
``seed`` uses ``derive_seed(purpose, seed, i)`` so that results depend on
the episode index only, never on completion order.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .detection import ActivityState, CompromisedState, ObservationVector
from .engine import MONITOR, BlueAction, BlueKind, CyberDefenseEnv
from .errors import ContractError
from .rng import Stream, derive_seed

QTABLE_FORMAT = "cdqtable/1"


def episode_seed(purpose: str, seed: int, index: int) -> int:
    return derive_seed(purpose, seed, index)


class NoOpPolicy:
    def act(self, observation, catalog):
        return MONITOR


class RandomPolicy:
    """Uniform over the action catalog; re-seeded at the start of every episode."""

    def __init__(self, seed: int = 0):
        self.seed = seed
        self.rng = Stream.named("random-policy", seed)

    def begin_episode(self, episode_seed: int) -> None:
        self.rng = Stream.named("random-policy", self.seed, episode_seed)

    def act(self, observation, catalog):
        return catalog[self.rng.randrange(len(catalog))]


def heuristic_act(observation: ObservationVector) -> BlueAction:
    """Scripted defender.

    Restore the first host seen Privileged; else Remove the first host seen
    User (or, in the baseline encoding, with Exploit activity); else Analyze
    the host with the most alerts this turn (ties: lowest host index); else
    Monitor.
    """
    hosts = observation.layout.host_ids
    comp = observation.compromised
    for i, c in enumerate(comp):
        if c == CompromisedState.PRIVILEGED:
            return BlueAction(BlueKind.RESTORE, hosts[i])
    baseline = observation.encoding == "baseline"
    for i, c in enumerate(comp):
        if c == CompromisedState.USER or (baseline and observation.activity[i] == ActivityState.EXPLOIT):
            return BlueAction(BlueKind.REMOVE, hosts[i])
    activity = observation.host_activity()
    best = max(range(len(hosts)), key=lambda i: (activity[i], -i), default=None)
    if best is not None and activity[best] > 0:
        return BlueAction(BlueKind.ANALYZE, hosts[best])
    return MONITOR


class HeuristicPolicy:
    def act(self, observation, catalog):
        return heuristic_act(observation)


# -- tabular Q-learning -----------------------------------------------------------


class QTable:
    """Action values keyed by :meth:`ObservationVector.key`; unseen keys read as zeros."""

    def __init__(self, n_actions: int, alpha: float = 0.1, gamma: float = 0.95):
        if not 0 < alpha <= 1:
            raise ContractError(f"alpha must be in (0, 1], got {alpha}")
        if not 0 <= gamma <= 1:
            raise ContractError(f"gamma must be in [0, 1], got {gamma}")
        self.n_actions = n_actions
        self.alpha = alpha
        self.gamma = gamma
        self.values: dict = {}
        self._zeros = np.zeros(n_actions)
        self._zeros.setflags(write=False)

    def get(self, key: int) -> np.ndarray:
        return self.values.get(key, self._zeros)

    def row(self, key: int) -> np.ndarray:
        row = self.values.get(key)
        if row is None:
            row = self.values[key] = np.zeros(self.n_actions)
        return row

    def best_action(self, key: int) -> int:
        row = self.values.get(key)
        return 0 if row is None else int(np.argmax(row))

    def __len__(self):
        return len(self.values)

    def to_dict(self) -> dict:
        return {
            "format": QTABLE_FORMAT,
            "n_actions": self.n_actions,
            "alpha": self.alpha,
            "gamma": self.gamma,
            "values": {f"{k:016x}": [float(v) for v in row] for k, row in sorted(self.values.items())},
        }

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":")) + "\n", encoding="utf-8")

    @classmethod
    def from_dict(cls, d: dict) -> "QTable":
        if d.get("format") != QTABLE_FORMAT:
            raise ContractError(f"unsupported Q-table format {d.get('format')!r}")
        t = cls(d["n_actions"], d["alpha"], d["gamma"])
        for k, row in d["values"].items():
            if len(row) != t.n_actions:
                raise ContractError(f"Q-table row {k} has {len(row)} values, expected {t.n_actions}")
            t.values[int(k, 16)] = np.array(row, dtype=float)
        return t

    @classmethod
    def load(cls, path) -> "QTable":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def q_update(table: QTable, key: int, action: int, reward: float, next_key: int, done: bool) -> QTable:
    """One-step Q-learning: Q(k,a) += alpha * (r + gamma * max Q(k') * (1 - done) - Q(k,a))."""
    if not math.isfinite(reward):
        raise ContractError(f"reward must be finite, got {reward}")
    row = table.row(key)
    future = 0.0 if done else table.gamma * float(table.get(next_key).max())
    row[action] += table.alpha * (reward + future - row[action])
    return table


def epsilon_schedule(episode: int, start: float = 1.0, decay: float = 0.9995, floor: float = 0.05) -> float:
    return max(floor, start * decay**episode)


class QLearner:
    """Epsilon-greedy tabular learner; with ``epsilon = 0`` and ``learning = False`` it is a frozen greedy policy."""

    def __init__(self, n_actions: int, seed: int = 0, alpha: float = 0.1, gamma: float = 0.95, table: QTable | None = None):
        self.table = table if table is not None else QTable(n_actions, alpha, gamma)
        self.seed = seed
        self.rng = Stream.named("qlearner", seed)
        self.epsilon = 0.0
        self.learning = True
        self._prev = None  # (key, action index)
        self._reward = None

    def begin_episode(self, episode_seed: int) -> None:
        self._prev = None
        self._reward = None

    def act(self, observation, catalog):
        key = observation.key()
        if self.learning and self._prev is not None and self._reward is not None:
            q_update(self.table, self._prev[0], self._prev[1], self._reward, key, False)
        if self.epsilon > 0 and self.rng.random() < self.epsilon:
            a = self.rng.randrange(len(catalog))
        else:
            a = self.table.best_action(key)
        self._prev = (key, a)
        self._reward = None
        return catalog[a]

    def notify(self, reward: float, done: bool) -> None:
        if not self.learning or self._prev is None:
            return
        if done:
            q_update(self.table, self._prev[0], self._prev[1], reward, self._prev[0], True)
            self._prev = None
        else:
            self._reward = reward

    def greedy(self) -> "QLearner":
        """A frozen greedy copy sharing the table."""
        g = QLearner(self.table.n_actions, self.seed, table=self.table)
        g.learning = False
        g.epsilon = 0.0
        return g


def play(env: CyberDefenseEnv, policy, seed: int) -> float:
    obs = env.reset(seed)
    if hasattr(policy, "begin_episode"):
        policy.begin_episode(seed)
    notify = getattr(policy, "notify", None)
    catalog = env.catalog
    total = 0.0
    done = False
    while not done:
        obs, reward, done, _ = env.step(policy.act(obs, catalog))
        total += reward
        if notify is not None:
            notify(reward, done)
    return round(total, 9) + 0.0


def train(scenario, learner: QLearner, episodes: int, seed: int = 0, *, detectors=None, reward_config=None,
          epsilon_start=1.0, epsilon_decay=0.9995, epsilon_floor=0.05) -> list:
    """Run ``episodes`` epsilon-greedy episodes; returns the per-episode return curve."""
    if episodes < 1:
        raise ContractError("episodes must be >= 1")
    env = CyberDefenseEnv(scenario, detectors=detectors, reward_config=reward_config)
    if learner.table.n_actions != len(env.catalog):
        raise ContractError(f"learner has {learner.table.n_actions} actions, scenario has {len(env.catalog)}")
    learner.learning = True
    curve = []
    for i in range(episodes):
        learner.epsilon = epsilon_schedule(i, epsilon_start, epsilon_decay, epsilon_floor)
        curve.append(play(env, learner, episode_seed("train", seed, i)))
    learner.epsilon = 0.0
    return curve


@dataclass
class EvalStats:
    returns: list
    seeds: list

    @property
    def mean(self) -> float:
        return float(np.mean(self.returns))

    @property
    def std(self) -> float:
        """Population standard deviation (ddof=0)."""
        return float(np.std(self.returns))

    def to_dict(self) -> dict:
        return {"returns": self.returns, "seeds": self.seeds, "mean": self.mean, "std": self.std}


def _eval_chunk(args):
    scenario, policy, seeds, detectors, reward_config = args
    env = CyberDefenseEnv(scenario, detectors=detectors, reward_config=reward_config)
    return [play(env, policy, s) for s in seeds]


def evaluate(scenario, policy, episodes: int, seed: int = 0, *, detectors=None, reward_config=None, workers: int = 1) -> EvalStats:
    """Greedy evaluation on fixed derived seeds; results ordered by episode index."""
    if episodes < 1:
        raise ContractError("episodes must be >= 1")
    if isinstance(policy, QLearner):
        policy = policy.greedy()
    seeds = [episode_seed("eval", seed, i) for i in range(episodes)]
    if workers <= 1:
        returns = _eval_chunk((scenario, policy, seeds, detectors, reward_config))
    else:
        chunks = [seeds[i::workers] for i in range(workers)]
        with ProcessPoolExecutor(workers) as pool:
            parts = list(pool.map(_eval_chunk, [(scenario, policy, c, detectors, reward_config) for c in chunks]))
        returns = [0.0] * episodes
        for w, part in enumerate(parts):
            returns[w::workers] = part
    return EvalStats(returns, seeds)


POLICIES = ("noop", "random", "heuristic")


def make_policy(name: str, seed: int = 0):
    if name == "noop":
        return NoOpPolicy()
    if name == "random":
        return RandomPolicy(seed)
    if name == "heuristic":
        return HeuristicPolicy()
    raise ValueError(f"unknown policy {name!r}; choose from {POLICIES}")
