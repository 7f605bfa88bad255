"""Time each kernel on both backends, plus one end-to-end sweep.

    python benchmarks/bench_kernels.py [--repeat N] [--quick]
"""

import argparse
import time

import numpy as np

from svcuep import kernels
from svcuep.quality import SSIM_C1, SSIM_C2
from svcuep.trace import Layer, bundled_trace
from svcuep.uep import DEFAULT_CHANNEL, SweepConfig, sweep
from svcuep.video import synth_video


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def cases(quick):
    rng = np.random.default_rng(0)
    n_trials = 50 if quick else 200
    a = rng.integers(0, 256, (288, 352), dtype=np.uint8)
    b = rng.integers(0, 256, (288, 352), dtype=np.uint8)
    base_lost = rng.random((n_trials, 30)) < 0.05
    enh_lost = rng.random((n_trials, 60)) < 0.05
    counters = rng.integers(0, 2**32, (10**5, 4), dtype=np.uint64).astype(np.uint32)
    trials = np.arange(n_trials, dtype=np.int64)
    return {
        "philox4x32 (1e5 blocks)": lambda k: k.philox4x32(counters, (12345, 678)),
        f"uniform_grid ({n_trials}x90)": lambda k: k.uniform_grid(7, trials, 90, 0),
        "ssim_map (CIF luma)": lambda k: k.ssim_map(a, b, 8, SSIM_C1, SSIM_C2),
        f"conceal_sources ({n_trials} trials)": lambda k: k.conceal_sources(base_lost, enh_lost, 2),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--quick", action="store_true", help="smaller sweep and inputs")
    args = ap.parse_args()

    backends = kernels.available_backends()
    names = sorted(backends)
    if "compiled" not in backends:
        print("compiled extension not built; timing the python backend only")

    print(f"{'kernel':34s}" + "".join(f"{n:>12s}" for n in names) + f"{'speedup':>10s}")
    for label, fn in cases(args.quick).items():
        t = {n: best_of(lambda: fn(backends[n]), args.repeat) for n in names}
        speed = f"{t['python'] / t['compiled']:9.1f}x" if "compiled" in t else ""
        print(f"{label:34s}" + "".join(f"{t[n] * 1e3:10.2f}ms" for n in names) + speed)

    trace = bundled_trace("parkjoy_like")
    video = synth_video(trace.n_frames[Layer.ENH], seed=0, fps_ratio=trace.fps_ratio)
    sc = SweepConfig(n_trials=50 if args.quick else 200)
    t = {}
    csvs = {}
    for n in names:
        prev = kernels.set_backend(n)
        try:
            t0 = time.perf_counter()
            csvs[n] = sweep(trace, video, DEFAULT_CHANNEL, sc).to_csv()
            t[n] = time.perf_counter() - t0
        finally:
            kernels.set_backend(prev)
    speed = f"{t['python'] / t['compiled']:9.1f}x" if "compiled" in t else ""
    label = f"sweep parkjoy_like ({sc.n_trials} trials)"
    print(f"{label:34s}" + "".join(f"{t[n]:11.2f}s" for n in names) + speed)
    print("sweep CSVs identical across backends:", len(set(csvs.values())) == 1)


if __name__ == "__main__":
    main()
