"""Compare the compiled kernels with the numpy fallback.

Each backend runs in its own interpreter (the backend is chosen at import),
timing a raw gate application and a short Monte Carlo session.

    python benchmarks/bench_kernels.py [--rounds N] [--applies N]
"""

import argparse
import json
import os
import subprocess
import sys

CHILD = r"""
import json, sys, time
import numpy as np
from pingpong import BACKEND
from pingpong.attack import AttackVariant, build_W, make_initial
from pingpong.engine import apply
from pingpong.protocol import ProtocolConfig, run_session

applies, rounds = int(sys.argv[1]), int(sys.argv[2])
w, s = build_W(), make_initial()
apply(w, s)
t0 = time.perf_counter()
for _ in range(applies):
    apply(w, s)
t_apply = (time.perf_counter() - t0) / applies

cfg = ProtocolConfig(attack=AttackVariant("improved", True), rounds=rounds, seed=1)
t0 = time.perf_counter()
stats = run_session(cfg)
t_round = (time.perf_counter() - t0) / rounds
print(json.dumps({"backend": BACKEND, "apply_us": t_apply * 1e6, "round_us": t_round * 1e6,
                  "joint": sorted(map(str, stats.joint.items()))}))
"""


def measure(pure: bool, applies: int, rounds: int) -> dict:
    env = dict(os.environ)
    env.pop("PINGPONG_PURE_PYTHON", None)
    if pure:
        env["PINGPONG_PURE_PYTHON"] = "1"
    out = subprocess.run([sys.executable, "-c", CHILD, str(applies), str(rounds)],
                         env=env, capture_output=True, text=True, check=True)
    return json.loads(out.stdout)


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--rounds", type=int, default=20_000)
    ap.add_argument("--applies", type=int, default=20_000)
    args = ap.parse_args()

    compiled = measure(False, args.applies, args.rounds)
    fallback = measure(True, args.applies, args.rounds)
    if compiled["backend"] != "cython":
        print("compiled kernels not available; both runs used the numpy fallback")
    print(f"{'backend':10s} {'gate apply (us)':>16s} {'round (us)':>12s}")
    for r in (compiled, fallback):
        print(f"{r['backend']:10s} {r['apply_us']:16.2f} {r['round_us']:12.2f}")
    print(f"speedup    {fallback['apply_us'] / compiled['apply_us']:16.2f} "
          f"{fallback['round_us'] / compiled['round_us']:12.2f}")
    same = compiled["joint"] == fallback["joint"]
    print(f"identical session counts: {same}")
    return 0 if same else 1


if __name__ == "__main__":
    sys.exit(main())
