"""Time the compiled episode kernels against the pure-Python fallback.

    python3 benchmarks/bench_kernels.py --T 10000 --reps 3

Both backends receive the same pre-drawn inputs, and the script checks that
they choose the same arms before reporting timings.
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from auxbandit import _pykernels
from auxbandit._backend import select
from auxbandit.arrivals import gen_stationary
from auxbandit.core import ProblemInstance
from auxbandit.policies import PolicyConfig
from auxbandit.replay import CorpusParams, replay_trajectory, synth_article_days
from auxbandit.sim import draw_aux, draw_rewards, policy_table, run_kernel

POLICIES = [
    PolicyConfig("UCB1", c=1.0),
    PolicyConfig("aUCB1", c=1.0),
    PolicyConfig("aTS", c=0.5),
    PolicyConfig("aEG", c=1.0, delta=0.2),
    PolicyConfig("TwoUCBs", c=3.0, alpha_bar=1.2),
]


def best_of(fn, reps: int) -> float:
    times = []
    for _ in range(reps):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def bench_episodes(T: int, reps: int, compiled) -> list:
    inst = ProblemInstance(mu=(0.7, 0.5, 0.5), sigma=0.5, sigma_hat=0.5)
    H = gen_stationary(3, T, 0.05, 1)
    rewards = draw_rewards(inst, T, 1)
    aux = draw_aux(inst, H, 1)
    rows = []
    for cfg in POLICIES:
        table = policy_table(cfg, 3, T, 1)
        a = run_kernel(inst, H, cfg, rewards, aux, table, compiled)
        b = run_kernel(inst, H, cfg, rewards, aux, table, _pykernels)
        if not np.array_equal(a, b):
            raise SystemExit(f"backends disagree on {cfg.label}")
        tc = best_of(lambda: run_kernel(inst, H, cfg, rewards, aux, table, compiled), reps)
        tp = best_of(lambda: run_kernel(inst, H, cfg, rewards, aux, table, _pykernels), reps)
        rows.append((f"episode {cfg.label}", tc, tp))
    return rows


def bench_replay(reps: int, compiled) -> list:
    case = synth_article_days(1, CorpusParams(T=2000, arrival_rate=2.0), seed=1)[0]
    rows = []
    for cfg in (PolicyConfig("aUCB1", c=0.05), PolicyConfig("TwoUCBs", c=0.05, alpha_bar=1.1)):
        tc = best_of(lambda: replay_trajectory(case, cfg, 3, compiled), reps)
        tp = best_of(lambda: replay_trajectory(case, cfg, 3, _pykernels), reps)
        rows.append((f"replay {cfg.label}", tc, tp))
    return rows


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--T", type=int, default=10_000)
    ap.add_argument("--reps", type=int, default=3)
    args = ap.parse_args()
    _, compiled = select("compiled")
    rows = bench_episodes(args.T, args.reps, compiled) + bench_replay(args.reps, compiled)
    print(f"{'kernel':24s} {'compiled ms':>12s} {'python ms':>12s} {'speedup':>9s}")
    for name, tc, tp in rows:
        print(f"{name:24s} {tc * 1e3:12.2f} {tp * 1e3:12.2f} {tp / tc:8.1f}x")


if __name__ == "__main__":
    main()
