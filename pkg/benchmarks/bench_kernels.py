"""Numba kernels vs the pure-numpy fallback.

The backend is fixed at import time by QTRAJ_NUMBA, so each path runs in its
own interpreter.  Usage:

    python benchmarks/bench_kernels.py [--steps 2000] [--repeat 3]
"""
import argparse
import json
import os
import subprocess
import sys

CASES = [
    # (label, model, stepper, scheme, dim)
    ("forced HO, qsd, em", "ho", "qsd", "em", 40),
    ("forced HO, qj, em", "ho", "qj", "em", 40),
    ("duffing, qsd, cayley", "duffing", "qsd", "cayley", 60),
    ("duffing, qj, cayley", "duffing", "qj", "cayley", 60),
]

CHILD = """
import json, sys, time
from qtraj import USE_NUMBA, fock, models
from qtraj.ensemble import integrate
from qtraj.unravelings import NoiseStream

cases, steps, repeat = json.loads(sys.argv[1]), int(sys.argv[2]), int(sys.argv[3])
out = {"numba": USE_NUMBA, "times": {}}
for label, kind, stepper, scheme, dim in cases:
    if kind == "ho":
        m = models.damped_ho(models.HOParams(nbar=0.2, force=2.0, dim=dim))
    else:
        m = models.duffing(models.DuffingParams(beta=2.0, dim=dim))
    psi0 = fock.coherent_state(1.0, dim)
    integrate(m, psi0, stepper, 1e-3, 10, NoiseStream(0), scheme=scheme)  # compile
    best = float("inf")
    for r in range(repeat):
        t0 = time.perf_counter()
        integrate(m, psi0, stepper, 1e-3, steps, NoiseStream(r), sample_every=steps, scheme=scheme)
        best = min(best, time.perf_counter() - t0)
    out["times"][label] = best
print(json.dumps(out))
"""


def run(flag, steps, repeat):
    env = dict(os.environ, QTRAJ_NUMBA=flag)
    res = subprocess.run([sys.executable, "-c", CHILD, json.dumps(CASES), str(steps), str(repeat)],
                         env=env, capture_output=True, text=True, check=True)
    return json.loads(res.stdout)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--steps", type=int, default=2000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    fast = run("1", args.steps, args.repeat)
    slow = run("0", args.steps, args.repeat)
    if not fast["numba"]:
        print("numba is not importable; both runs used numpy")
    print(f"{args.steps} steps per trajectory, best of {args.repeat}")
    print(f"{'case':28s} {'numba (s)':>10s} {'numpy (s)':>10s} {'speedup':>8s}")
    for label, *_ in CASES:
        tf, ts = fast["times"][label], slow["times"][label]
        print(f"{label:28s} {tf:10.4f} {ts:10.4f} {ts / tf:8.1f}")


if __name__ == "__main__":
    main()
