"""Numba kernels vs the pure-numpy fallback.

Every workload is timed in two child processes, one with numba and one with
STBC54_DISABLE_NUMBA=1, so the fallback column is exactly what runs without
numba. A warm-up call keeps JIT compilation out of the numba timings.

    python3 benchmarks/bench_kernels.py [--repeat 3] [--trials 1000]
"""
import argparse
import json
import os
import subprocess
import sys
import time


def workloads(trials):
    import numpy as np

    from stbc54.codes import make_code
    from stbc54.linalg import thin_qr
    from stbc54.metrics import SimConfig, min_det_scan, run_cer
    from stbc54.nvdproof import _key_layout, diophantine_scan, grid_keys

    w = np.ascontiguousarray(make_code("new54").weights)
    a = np.random.default_rng(0).normal(size=(16, 10))
    layout = _key_layout(2)

    def sim(decoder):
        cfg = SimConfig(snr_db=[10.0], max_trials=trials, target_errors=10**9, decoder=decoder, workers=1)
        return lambda: run_cer(cfg)

    return {
        "thin QR 16x10, x500": lambda: [thin_qr(a) for _ in range(500)],
        f"simulate sphere+slicer, {trials} trials": sim("sphere"),
        f"simulate sphere plain, {trials} trials": sim("sphere-plain"),
        f"simulate conditional, {trials} trials": sim("conditional"),
        "min-det scan, shell 1": lambda: min_det_scan(w, 1, 1, -1.0),
        "diophantine scan, x_max=30": lambda: diophantine_scan(30),
        "grid keys, 2e5 points": lambda: grid_keys(2, 0, 200_000, *layout),
    }


def child(trials, repeat):
    out = {}
    for name, fn in workloads(trials).items():
        fn()
        best = float("inf")
        for _ in range(repeat):
            t0 = time.perf_counter()
            fn()
            best = min(best, time.perf_counter() - t0)
        out[name] = best
    print(json.dumps(out))


def run(disable, trials, repeat):
    env = dict(os.environ)
    env.pop("STBC54_DISABLE_NUMBA", None)
    if disable:
        env["STBC54_DISABLE_NUMBA"] = "1"
    cmd = [sys.executable, __file__, "--child", "--trials", str(trials), "--repeat", str(repeat)]
    res = subprocess.run(cmd, env=env, capture_output=True, text=True, check=True)
    return json.loads(res.stdout.splitlines()[-1])


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--trials", type=int, default=1000)
    ap.add_argument("--child", action="store_true", help=argparse.SUPPRESS)
    args = ap.parse_args()
    if args.child:
        child(args.trials, args.repeat)
        return

    fast = run(False, args.trials, args.repeat)
    slow = run(True, args.trials, 1)
    print(f"{'workload':<38} {'numba [s]':>10} {'numpy [s]':>10} {'speedup':>8}")
    for name, tf in fast.items():
        ts = slow[name]
        print(f"{name:<38} {tf:>10.4f} {ts:>10.4f} {ts / tf:>7.1f}x")


if __name__ == "__main__":
    main()
