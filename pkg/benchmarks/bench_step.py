"""Benchmark the physics step: numba-compiled kernels vs the numpy fallback.

Runs each variant in a subprocess (the kernel backend is chosen at import
time via TELEIMP_NUMBA) and reports steps/second and the real-time factor
at the 1 kHz simulation rate.

Usage: python benchmarks/bench_step.py [--steps N]
"""

import argparse
import json
import os
import subprocess
import sys

WORKER = r"""
import json, sys, time
from teleimp.geometry import Twist, compose
from teleimp.harness import _grasp_offset, _upright_pose
from teleimp.sim import Simulation, default_world
from teleimp.sim.kernels import USE_NUMBA
from teleimp.tasks import BoxSpec

steps = int(sys.argv[1])
sim = Simulation(default_world())
box = BoxSpec()
desired = _upright_pose([0.0, 0.0, box.resting_height], 0.0)
for side in range(2):   # squeeze so all contact pairs are exercised
    g = _grasp_offset(side, box.dims[0] / 2.0, 0.05)
    sim.set_target(side, compose(desired, g), Twist.zero())

sim.step(200)           # warm-up: contact + any jit compilation
t0 = time.perf_counter()
sim.step(steps)
dt = time.perf_counter() - t0
print(json.dumps({"numba": USE_NUMBA, "steps": steps, "seconds": dt}))
"""


def run_variant(numba_on, steps):
    env = dict(os.environ, TELEIMP_NUMBA="1" if numba_on else "0")
    out = subprocess.run([sys.executable, "-c", WORKER, str(steps)],
                         env=env, capture_output=True, text=True, check=True)
    return json.loads(out.stdout.strip().splitlines()[-1])


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--steps", type=int, default=20_000,
                        help="timed simulation steps per variant")
    args = parser.parse_args()

    print(f"timing {args.steps} steps per variant (dt = 1 ms)...")
    results = []
    for numba_on in (True, False):
        r = run_variant(numba_on, args.steps)
        rate = r["steps"] / r["seconds"]
        results.append((r, rate))
        label = "numba kernels" if r["numba"] else "numpy fallback"
        print(f"  {label:15s} {r['seconds']:8.3f} s   "
              f"{rate:10.0f} steps/s   {rate / 1000.0:6.1f}x real time")
    if results[0][0]["numba"] and not results[1][0]["numba"]:
        print(f"  speedup: {results[0][1] / results[1][1]:.1f}x")


if __name__ == "__main__":
    main()
