#!/usr/bin/env python3
"""Benchmark the numba kernels against the pure-numpy fallback.

Each backend runs in its own subprocess (the backend is fixed at import
time), timing the hot kernels in isolation plus a short tethered scenario.

    python benchmarks/bench_backends.py [--repeat 3]
"""

import argparse
import json
import os
import subprocess
import sys

_WORKER = r"""
import json, time
import numpy as np
import flapsim
from flapsim import _kernels as K
from flapsim.dynamics import Simulator
from flapsim.model import load_robot, load_gait, load_scenario

robot = load_robot()
gait = load_gait()
scen = load_scenario(overrides={"duration_s": "1.0"})
P = robot.kin_params
geo = robot.elements
q = np.array([0.1, -0.2, 0.3, 0.05, -0.1, 0.2, 0.4, -0.3])
qd = np.array([0.5, 0.1, -0.2, 0.3, 0.1, 0.6, 4.0, -3.0])
wind = np.array([-1.0, 0.0, 0.0])

def time_fn(fn, n):
    fn()  # warm-up (includes JIT compile on the numba backend)
    t0 = time.perf_counter()
    for _ in range(n):
        fn()
    return (time.perf_counter() - t0) / n

results = {"backend": flapsim.BACKEND}
results["mass_matrix_us"] = 1e6 * time_fn(
    lambda: K.mass_matrix(q, P.masses, P.inertias, P.r_sh, P.ax_s, P.r_el,
                          P.ax_e, P.r_pcom, P.r_dcom), 2000)
results["bias_forces_us"] = 1e6 * time_fn(
    lambda: K.bias_forces(q, qd, P.masses, P.inertias, 9.81, 1e-6, P.r_sh,
                          P.ax_s, P.r_el, P.ax_e, P.r_pcom, P.r_dcom), 500)
results["element_states_us"] = 1e6 * time_fn(
    lambda: K.element_states(q, qd, wind, geo.body, geo.local, P.r_sh,
                             P.ax_s, P.r_el, P.ax_e, P.r_pcom, P.r_dcom), 2000)

def scenario():
    sim = Simulator(robot, gait, scen.wind_mps, aero_model="unsteady",
                    clamp_body=True, clamp_pose=np.zeros(6))
    full = sim.initial_state()
    for _ in range(int(round(scen.duration_s / scen.dt_s))):
        full = sim.step(full, scen.dt_s)

results["tethered_1s_s"] = time_fn(scenario, 1)
print(json.dumps(results))
"""


def run_backend(backend, repeat):
    env = dict(os.environ, FLAPSIM_BACKEND=backend)
    best = None
    for _ in range(repeat):
        out = subprocess.run([sys.executable, "-c", _WORKER], env=env,
                             capture_output=True, text=True, check=True)
        res = json.loads(out.stdout.strip().splitlines()[-1])
        if best is None:
            best = res
        else:
            for key, val in res.items():
                if key != "backend":
                    best[key] = min(best[key], val)
    return best


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeat", type=int, default=2)
    args = parser.parse_args()

    rows = [run_backend(b, args.repeat) for b in ("numpy", "numba")]
    keys = ["mass_matrix_us", "bias_forces_us", "element_states_us", "tethered_1s_s"]
    labels = {"mass_matrix_us": "mass matrix [us]",
              "bias_forces_us": "bias forces [us]",
              "element_states_us": "blade elements [us]",
              "tethered_1s_s": "tethered 1 s scenario [s]"}
    print(f"{'kernel':32s} {'numpy':>12s} {'numba':>12s} {'speedup':>9s}")
    for key in keys:
        a, b = rows[0][key], rows[1][key]
        print(f"{labels[key]:32s} {a:12.3f} {b:12.3f} {a / b:8.1f}x")


if __name__ == "__main__":
    main()
