"""Command-line front end.

Subcommands: gen, train, eval, sweep, compare, replay. Every command that
writes files also writes ``manifest.json`` with the seeds, resolved configs
and config hashes needed to rerun it. Outputs are plain CSV/JSON.

Exit codes: 0 success, 1 usage, 2 configuration, 3 verification failure.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import os
import sys
from importlib import resources
from pathlib import Path

import numpy as np

from . import kernels
from .agents import (
    POLICIES,
    QLearner,
    QTable,
    evaluate,
    make_policy,
    train,
)
from .detection import load_detectors
from .engine import (
    EpisodeTrace,
    ReplayError,
    TraceDivergence,
    TraceFormatError,
    TraceVersionError,
    action_catalog,
    replay,
    run_episode,
    topology_for,
)
from .errors import ConfigError, ContractError
from .reward import load_reward_config
from .scenario import generate_topology, load_scenario

EXIT_OK, EXIT_USAGE, EXIT_CONFIG, EXIT_VERIFY = 0, 1, 2, 3
SEED_ENV = "CYBERDEF_SIM_SEED"


class UsageError(Exception):
    pass


def scenario_names() -> list:
    root = resources.files("cyberdef_sim") / "data" / "scenarios"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def resolve_scenario(ref: str):
    if ref in scenario_names():
        with resources.as_file(resources.files("cyberdef_sim") / "data" / "scenarios" / f"{ref}.json") as p:
            return load_scenario(p)
    return load_scenario(ref)


def _hash(text: str) -> str:
    return f"{kernels.fnv1a64(text.encode('utf-8')):016x}"


def _write(path: Path, text: str) -> None:
    path.write_text(text, encoding="utf-8", newline="")


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _fmt(x: float) -> str:
    return f"{x:.6f}"


def _setup(args):
    """Load scenario and apply CLI overrides; returns (scenario, detectors, reward_config)."""
    scenario = resolve_scenario(args.scenario)
    changes = {}
    if getattr(args, "encoding", None):
        changes["encoding"] = args.encoding
    if getattr(args, "detector_preset", None):
        changes["detector_config_ref"] = args.detector_preset
    if getattr(args, "reward_preset", None):
        changes["reward_config_ref"] = args.reward_preset
    scenario = dataclasses.replace(scenario, **changes)
    return scenario, load_detectors(scenario.detector_config_ref), load_reward_config(scenario.reward_config_ref)


def _manifest(out: Path, command: str, args, scenario, files: dict, **extra) -> None:
    opts = {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "out")}
    data = {
        "command": command,
        "options": opts,
        "scenario": scenario.to_dict(),
        "scenario_hash": _hash(scenario.canonical_json()),
        "files": {name: _hash((out / name).read_text(encoding="utf-8")) for name in sorted(files)},
        **extra,
    }
    _write(out / "manifest.json", json.dumps(data, indent=2, sort_keys=True) + "\n")


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_gen(args) -> int:
    scenario = resolve_scenario(args.scenario)
    topo = generate_topology(scenario, args.seed)
    out = _out_dir(args)
    _write(out / "topology.json", topo.canonical_json() + "\n")
    _manifest(out, "gen", args, scenario, ["topology.json"], topology_seed=args.seed)
    print(f"wrote {out / 'topology.json'}: {len(topo.subnets)} subnets, {len(topo.hosts)} hosts, critical {topo.critical_host}")
    return EXIT_OK


def _learner_for(scenario, seed):
    n = len(action_catalog(topology_for(scenario), scenario.max_decoys))
    return QLearner(n, seed)


def cmd_train(args) -> int:
    scenario, det, rew = _setup(args)
    learner = _learner_for(scenario, args.seed)
    curve = train(scenario, learner, args.episodes, args.seed, detectors=det, reward_config=rew)
    out = _out_dir(args)
    _write(out / "curve.csv", _csv(["episode", "return"], [(i, _fmt(r)) for i, r in enumerate(curve)]))
    learner.table.save(out / "qtable.json")
    _manifest(out, "train", args, scenario, ["curve.csv", "qtable.json"],
              detector_hash=_hash(det.canonical_json()), reward_hash=_hash(rew.canonical_json()))
    window = curve[-min(len(curve), 100):]
    print(f"trained {args.episodes} episodes; last-{len(window)} mean return {np.mean(window):.3f}; {len(learner.table)} states")
    return EXIT_OK


def _policy(args, scenario):
    if args.qtable:
        learner = QLearner(0, args.seed, table=QTable.load(args.qtable))
        n = len(action_catalog(topology_for(scenario), scenario.max_decoys))
        if learner.table.n_actions != n:
            raise ConfigError(f"Q-table has {learner.table.n_actions} actions but the scenario has {n}")
        return learner.greedy()
    return make_policy(args.policy, args.seed)


def cmd_eval(args) -> int:
    scenario, det, rew = _setup(args)
    policy = _policy(args, scenario)
    stats = evaluate(scenario, policy, args.episodes, args.seed, detectors=det, reward_config=rew, workers=args.workers)
    out = _out_dir(args)
    _write(out / "stats.csv", _csv(["episode", "return"], [(i, _fmt(r)) for i, r in enumerate(stats.returns)]))
    files = ["stats.csv"]
    if args.save_traces:
        tdir = out / "traces"
        tdir.mkdir(exist_ok=True)
        for i, s in enumerate(stats.seeds[: args.save_traces]):
            if hasattr(policy, "begin_episode"):
                policy.begin_episode(s)
            name = f"traces/episode_{i:04d}.jsonl"
            run_episode(scenario, policy, s, detectors=det, reward_config=rew).save(out / name)
            files.append(name)
    _manifest(out, "eval", args, scenario, files, episode_seeds=stats.seeds)
    print(f"mean return {stats.mean:.3f} (std {stats.std:.3f}) over {args.episodes} episodes")
    return EXIT_OK


def cmd_sweep(args) -> int:
    settings = [s for s in args.settings.split(",") if s]
    if len(settings) < 2:
        raise UsageError("sweep needs at least two detection settings, e.g. --settings perfect,realistic")
    scenario, _, rew = _setup(args)
    detectors = [load_detectors(s) for s in settings]
    policy = _policy(args, scenario)
    rows = []
    for name, det in zip(settings, detectors):
        stats = evaluate(scenario, policy, args.episodes, args.seed, detectors=det, reward_config=rew, workers=args.workers)
        rows.append((name, args.policy if not args.qtable else "qtable", _fmt(stats.mean), _fmt(stats.std)))
        print(f"{name:>12}: mean {stats.mean:9.3f}  std {stats.std:8.3f}")
    out = _out_dir(args)
    _write(out / "sweep.csv", _csv(["setting", "policy", "mean_return", "std"], rows))
    _manifest(out, "sweep", args, scenario, ["sweep.csv"])
    return EXIT_OK


@dataclasses.dataclass
class EncodingComparison:
    curves: dict  # encoding -> per-episode returns
    summary: list  # (encoding, window, final-window mean)
    reward_range: float  # max - min over both curves
    learners: dict


def compare_encodings(scenario, episodes: int, seed: int, detectors, reward_config, window: int = 1000) -> EncodingComparison:
    """Train one learner per encoding on identical seeds and budget."""
    curves, learners = {}, {}
    for enc in ("baseline", "detector"):
        sc = dataclasses.replace(scenario, encoding=enc)
        learners[enc] = _learner_for(sc, seed)
        curves[enc] = train(sc, learners[enc], episodes, seed, detectors=detectors, reward_config=reward_config)
    w = min(window, episodes)
    lo = min(min(c) for c in curves.values())
    hi = max(max(c) for c in curves.values())
    summary = [(enc, w, float(np.mean(c[-w:]))) for enc, c in curves.items()]
    return EncodingComparison(curves, summary, hi - lo, learners)


def cmd_compare(args) -> int:
    scenario, det, rew = _setup(args)
    cmp = compare_encodings(scenario, args.episodes, args.seed, det, rew, args.window)
    curves, summary, span = cmp.curves, cmp.summary, cmp.reward_range
    out = _out_dir(args)
    rows = [(i, _fmt(b), _fmt(d)) for i, (b, d) in enumerate(zip(curves["baseline"], curves["detector"]))]
    _write(out / "compare.csv", _csv(["episode", "baseline", "detector"], rows))
    _write(out / "summary.csv", _csv(["encoding", "final_window", "mean_return", "reward_range"],
                                     [(e, w, _fmt(m), _fmt(span)) for e, w, m in summary]))
    _manifest(out, "compare", args, scenario, ["compare.csv", "summary.csv"])
    for e, w, m in summary:
        print(f"{e:>9}: final-{w} mean return {m:.3f}")
    return EXIT_OK


def render_turn(rec: dict) -> str:
    lines = [f"--- turn {rec['turn']} ---"]
    ra = rec["red_action"]
    if ra is None:
        lines.append("red:     (no action)")
    else:
        ok = "success" if rec["action_outcome"]["success"] else "failed"
        lines.append(f"red:     {ra['kind']} {ra['target']} -> {ok}")
    if rec["alerts"]:
        for a in rec["alerts"]:
            tag = "genuine" if a["genuine"] else "false positive"
            lines.append(f"alert:   {a['host']} {a['component']} [{tag}]")
    else:
        lines.append("alert:   none")
    ba = rec["blue_action"]
    target = "" if ba["target"] is None else f"({ba['target'] if not isinstance(ba['target'], list) else ','.join(ba['target'])})"
    flag = "  [illegal, played as Monitor]" if rec["blue_flagged"] else ""
    lines.append(f"blue:    {ba['kind']}{target}{flag}")
    rc = rec["reward_components"]
    lines.append(f"reward:  {rec['reward']:g}  (C={rc['C']:g} I={rc['I']:g} A={rc['A']:g} H={rc['H']:g})")
    return "\n".join(lines)


def cmd_replay(args) -> int:
    trace = EpisodeTrace.load(args.trace)
    scenario = resolve_scenario(args.scenario) if args.scenario else None
    try:
        report = replay(trace, scenario)
    except TraceDivergence as exc:
        print(f"refusing to render: trace diverges at turn {exc.turn} ({', '.join(exc.fields)})", file=sys.stderr)
        return EXIT_VERIFY
    records = trace.records
    if args.turn is not None:
        if not 0 <= args.turn < len(records):
            raise UsageError(f"--turn must be in [0, {len(records) - 1}]")
        records = [records[args.turn]]
    for rec in records:
        print(render_turn(rec))
    print(f"=== return {trace.footer['return']:g} over {trace.footer['terminal_turn']} turns; "
          f"trace hash {report.trace_hash}; replay {report.verdict} ===")
    return EXIT_OK


def _default_seed() -> int:
    env = os.environ.get(SEED_ENV)
    if env is None:
        return 0
    try:
        return int(env)
    except ValueError:
        raise UsageError(f"{SEED_ENV} must be an integer, got {env!r}") from None


def build_parser(default_seed: int = 0) -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cyberdef-sim", description="Seeded blue/red cyber-defense simulator.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, out=True, episodes=None, presets=True):
        sp.add_argument("--scenario", default="default", help="shipped scenario name or JSON path")
        sp.add_argument("--seed", type=int, default=default_seed)
        if out:
            sp.add_argument("--out", required=True, help="output directory")
        if episodes is not None:
            sp.add_argument("--episodes", type=int, default=episodes)
        if presets:
            sp.add_argument("--reward-preset", dest="reward_preset")
            sp.add_argument("--detector-preset", dest="detector_preset")
            sp.add_argument("--encoding", choices=["baseline", "detector"])

    sp = sub.add_parser("gen", help="generate a topology")
    common(sp, presets=False)
    sp.set_defaults(func=cmd_gen)

    sp = sub.add_parser("train", help="train a tabular Q-learner")
    common(sp, episodes=1000)
    sp.set_defaults(func=cmd_train)

    for name, func, eps in (("eval", cmd_eval, 100), ("sweep", cmd_sweep, 500)):
        sp = sub.add_parser(name, help="evaluate a frozen policy" if name == "eval" else "detection-probability sweep")
        common(sp, episodes=eps)
        sp.add_argument("--policy", choices=POLICIES, default="heuristic")
        sp.add_argument("--qtable", help="evaluate a saved Q-table greedily instead of --policy")
        sp.add_argument("--workers", type=int, default=1)
        sp.set_defaults(func=func)
    sub.choices["eval"].add_argument("--save-traces", type=int, default=0, metavar="N",
                                     help="also write traces for the first N episodes")
    sub.choices["sweep"].add_argument("--settings", default="perfect,realistic",
                                      help="comma list of presets or p=<prob> uniform settings")

    sp = sub.add_parser("compare", help="baseline vs detector encoding learning curves")
    common(sp, episodes=1000)
    sp.add_argument("--window", type=int, default=1000)
    sp.set_defaults(func=cmd_compare)

    sp = sub.add_parser("replay", help="verify and render a trace")
    sp.add_argument("trace")
    sp.add_argument("--scenario", help="check the trace against this scenario")
    sp.add_argument("--turn", type=int)
    sp.set_defaults(func=cmd_replay)
    return p


def main(argv=None) -> int:
    try:
        parser = build_parser(_default_seed())
        try:
            args = parser.parse_args(argv)
        except SystemExit as exc:
            return EXIT_OK if exc.code == 0 else EXIT_USAGE
        for k in ("episodes", "workers"):
            if getattr(args, k, 1) is not None and getattr(args, k, 1) < 1:
                raise UsageError(f"--{k} must be >= 1")
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (TraceFormatError, TraceVersionError, ReplayError) as exc:
        print(f"verification failed: {exc}", file=sys.stderr)
        return EXIT_VERIFY
    except (ConfigError, ContractError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
