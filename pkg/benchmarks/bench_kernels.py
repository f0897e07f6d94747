"""Wall-clock comparison of the numba kernels and the plain-Python fallback.

Each backend runs in its own interpreter because the switch is read at
import time. The compiled run is warmed up first so the numba cache load
is not counted.

    python benchmarks/bench_kernels.py [--repeat N]
"""
import argparse
import json
import os
import subprocess
import sys

WORKLOAD = r"""
import json, time
import numpy as np
from thermolab import backend_name
from thermolab.analysis import green_slope, random_states
from thermolab.flow import integrate_orbit
from thermolab.geometry import PhasePoint
from thermolab.model import KAPPA_TILDE_GAUGE, System, named_system

s, m = named_system("S3")
grid = np.linspace(0.0, 6.28, 40)
X, Y, T = np.meshgrid(grid, grid, grid, indexing="ij")

def orbits():
    for p in random_states(4, 0):
        integrate_orbit(s, m, p, (-20.0, 20.0))

def green():
    o = integrate_orbit(s, m, PhasePoint(0.1, 0.2, 0.3), (-32.0, 32.0))
    for side in ("stable", "unstable"):
        green_slope(o, side, KAPPA_TILDE_GAUGE)

def jets():
    System(s, m, KAPPA_TILDE_GAUGE).jets(X, Y, T)

cases = {"orbit (4 x 40 time units)": orbits, "green slopes (one anchor)": green,
         "curvature jets (40^3 grid)": jets}
for f in cases.values():
    f()
out = {}
for name, f in cases.items():
    best = float("inf")
    for _ in range(REPEAT):
        t0 = time.perf_counter()
        f()
        best = min(best, time.perf_counter() - t0)
    out[name] = best
print(json.dumps({"backend": backend_name(), "timings": out}))
"""


def run(disable, repeat):
    env = dict(os.environ)
    env.pop("THERMOLAB_DISABLE_NUMBA", None)
    if disable:
        env["THERMOLAB_DISABLE_NUMBA"] = "1"
    code = WORKLOAD.replace("REPEAT", str(repeat))
    proc = subprocess.run([sys.executable, "-c", code], capture_output=True, text=True, env=env,
                          check=True)
    return json.loads(proc.stdout)


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=3, help="best-of-N timing (default 3)")
    args = parser.parse_args(argv)
    fast = run(False, args.repeat)
    plain = run(True, args.repeat)
    print(f"{'case':<30} {fast['backend']:>10} {plain['backend']:>10} {'speedup':>8}")
    for name, t_fast in fast["timings"].items():
        t_plain = plain["timings"][name]
        print(f"{name:<30} {t_fast:>9.4f}s {t_plain:>9.4f}s {t_plain / t_fast:>7.1f}x")


if __name__ == "__main__":
    main()
