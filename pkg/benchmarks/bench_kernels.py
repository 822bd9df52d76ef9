"""Compare the compiled kernels against the pure-Python fallback.

Run:  python benchmarks/bench_kernels.py [--repeat N]

Prints per-call timings for each primitive, checks that both backends return
identical values, and times whole episodes under each backend (the episode
run is done in a subprocess so the backend is chosen at import time).
"""

import argparse
import os
import subprocess
import sys
import timeit

from cyberdef_sim import _kernels_py

try:
    from cyberdef_sim import _kernels as _compiled
except ImportError:
    _compiled = None

PAYLOAD = b'{"type":"turn","reward":-10.0}' * 400
PROBS = [0.05, 0.15, 0.5, 0.3, 0.25] * 8

CASES = {
    "fnv1a64 (12 KB)": lambda k: k.fnv1a64(PAYLOAD),
    "mix64": lambda k: k.mix64(0x9E3779B97F4A7C15),
    "uniform": lambda k: k.uniform(12345, 678),
    "bernoulli_hits (40 coins)": lambda k: k.bernoulli_hits(99, 1000, PROBS),
}

EPISODES_SNIPPET = """
import time
from importlib import resources
from cyberdef_sim import kernels
from cyberdef_sim.agents import RandomPolicy, evaluate
from cyberdef_sim.scenario import load_scenario
with resources.as_file(resources.files("cyberdef_sim") / "data" / "scenarios" / "default.json") as p:
    sc = load_scenario(p)
t = time.perf_counter()
stats = evaluate(sc, RandomPolicy(0), {n}, 0)
print(kernels.BACKEND, time.perf_counter() - t, stats.mean)
"""


def time_call(fn, repeat):
    n, _ = timeit.Timer(fn).autorange()
    best = min(timeit.repeat(fn, number=n, repeat=repeat))
    return best / n


def episodes(pure: bool, n: int):
    env = dict(os.environ, CYBERDEF_SIM_PURE="1" if pure else "0")
    out = subprocess.run([sys.executable, "-c", EPISODES_SNIPPET.format(n=n)], env=env,
                         capture_output=True, text=True, check=True).stdout.split()
    return out[0], float(out[1]), out[2]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--episodes", type=int, default=200)
    args = ap.parse_args()

    if _compiled is None:
        print("compiled extension not built; only the Python fallback is available")
    print(f"{'kernel':<28}{'python':>12}{'compiled':>12}{'speedup':>9}")
    for name, fn in CASES.items():
        py = time_call(lambda: fn(_kernels_py), args.repeat)
        if _compiled is None:
            print(f"{name:<28}{py * 1e6:>10.2f}us{'-':>12}{'-':>9}")
            continue
        if fn(_compiled) != fn(_kernels_py):
            raise SystemExit(f"{name}: backends disagree")
        c = time_call(lambda: fn(_compiled), args.repeat)
        print(f"{name:<28}{py * 1e6:>10.2f}us{c * 1e6:>10.2f}us{py / c:>8.1f}x")

    print(f"\n{args.episodes} random-policy episodes on the default scenario:")
    results = [episodes(True, args.episodes)]
    if _compiled is not None:
        results.append(episodes(False, args.episodes))
    for backend, secs, mean in results:
        print(f"  {backend:<9} {secs:7.2f}s  mean return {mean}")
    if len({mean for _, _, mean in results}) != 1:
        raise SystemExit("episode results differ between backends")


if __name__ == "__main__":
    main()
