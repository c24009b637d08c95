"""Compare the numba and numpy kernel backends.

Per kernel: best-of-N wall time for both paths on the same inputs, plus a
bit-equality check of the outputs. Then one full simulation per backend in a
fresh interpreter (the backend is fixed at import time), with trace digests.

    python benchmarks/bench_kernels.py [--nodes 80] [--repeat 200]
"""

from __future__ import annotations

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from manetsim import _kernels as K

SIM_SNIPPET = """
import hashlib, time
from manetsim import ScenarioConfig, Simulation, _kernels
t = time.perf_counter()
r = Simulation(ScenarioConfig(n_nodes={n}, duration={d}, seed=1)).run()
dt = time.perf_counter() - t
print(_kernels.backend(), dt, hashlib.sha256(r.trace_text().encode()).hexdigest()[:16])
"""


def _inputs(n: int, seed: int = 7):
    rng = np.random.default_rng(seed)
    pos = rng.random((n, 2)) * 600.0
    return {
        "pos": pos,
        "target": rng.random((n, 2)) * 600.0,
        "speed": 0.5 + 4.5 * rng.random(n),
        "vel": rng.normal(size=(n, 2)) * 3.0,
        "moving": rng.random(n) < 0.9,
        "u_r": rng.random(n),
        "u_phi": rng.random(n),
        "members": rng.random(n) < 0.8,
    }


def _cases(x):
    return {
        "advance_waypoint": lambda f: f(x["pos"].copy(), x["target"], x["speed"],
                                        x["moving"], 0.1),
        "advance_heading": lambda f: f(x["pos"].copy(), x["vel"], x["moving"], 0.1,
                                       600.0, 600.0),
        "place_members": lambda f: _place(f, x),
        "adjacency": lambda f: f(x["pos"], 250.0),
    }


def _place(f, x):
    out = x["pos"].copy()
    f(out, x["target"], x["u_r"], x["u_phi"], 50.0, x["members"], 600.0, 600.0)
    return out


def bench_kernels(n: int, repeat: int) -> None:
    if not K.USING_NUMBA:
        print("numba path unavailable (disabled or not installed); numpy timings only")
    x = _inputs(n)
    print(f"{'kernel':18s} {'numpy us':>10s} {'numba us':>10s} {'speedup':>8s} equal")
    for name, call in _cases(x).items():
        np_f = getattr(K, "np_" + name)
        t_np = min(timeit.repeat(lambda: call(np_f), number=1, repeat=repeat)) * 1e6
        if K.USING_NUMBA:
            nb_f = getattr(K, "nb_" + name)
            call(nb_f)  # compile
            t_nb = min(timeit.repeat(lambda: call(nb_f), number=1, repeat=repeat)) * 1e6
            same = np.array_equal(np.asarray(call(np_f)), np.asarray(call(nb_f)))
            print(f"{name:18s} {t_np:10.1f} {t_nb:10.1f} {t_np / t_nb:8.2f} {same}")
        else:
            print(f"{name:18s} {t_np:10.1f} {'-':>10s} {'-':>8s} -")


def bench_simulation(n: int, duration: float) -> None:
    digests = set()
    for disable in ("0", "1"):
        env = dict(os.environ, MANETSIM_DISABLE_NUMBA=disable)
        out = subprocess.run([sys.executable, "-c", SIM_SNIPPET.format(n=n, d=duration)],
                             env=env, capture_output=True, text=True, check=True).stdout
        backend, secs, digest = out.split()
        digests.add(digest)
        print(f"simulation n={n} {duration:g}s backend={backend:6s} {float(secs):7.2f}s "
              f"trace={digest}")
    print("traces identical across backends:", len(digests) == 1)


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--nodes", type=int, default=80)
    ap.add_argument("--repeat", type=int, default=200)
    ap.add_argument("--sim-duration", type=float, default=30.0)
    ap.add_argument("--skip-sim", action="store_true")
    args = ap.parse_args(argv)
    bench_kernels(args.nodes, args.repeat)
    if not args.skip_sim:
        bench_simulation(args.nodes, args.sim_duration)


if __name__ == "__main__":
    main()
