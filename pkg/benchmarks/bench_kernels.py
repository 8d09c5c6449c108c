"""Compare the numba and pure-numpy kernel backends.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Kernel timings call both backends in-process; the end-to-end rows run a
one-epoch training job on the bundled train split and a DeepFool-driven
attack epoch in subprocesses with FTUAP_USE_NUMBA set to 1 and 0.
"""

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from ftuap import _kernels

E2E = """
import time, numpy as np
from ftuap import _kernels
from ftuap.attack import AttackConfig, train_universal
from ftuap.tinynet import TrainConfig, bundled_splits, train
ds, _ = bundled_splits()
train(ds.subset(np.arange(32)), TrainConfig(arch="a", epochs=1))  # warm the JIT cache
t0 = time.perf_counter()
m = train(ds, TrainConfig(arch="a", epochs=1, seed=0, noise_std=20.0))
t1 = time.perf_counter()
train_universal(m, ds.subset(np.arange(100)), AttackConfig(epochs=1))
t2 = time.perf_counter()
print(_kernels.BACKEND, t1 - t0, t2 - t1)
"""


def kernel_cases(rng):
    x = rng.normal(size=(32, 8, 16, 16))
    w = rng.normal(size=(16, 8, 3, 3))
    b = rng.normal(size=16)
    g = rng.normal(size=(32, 16, 16, 16))
    return {
        "conv2d_forward": (x, w, b, 1),
        "conv2d_backward_input": (g, w, 1),
        "conv2d_backward_weight": (x, g, (3, 3), 1),
        "maxpool2_forward": (g,),
    }


def bench_kernels(repeat):
    rng = np.random.default_rng(0)
    print(f"{'kernel':<24}{'numpy ms':>10}{'numba ms':>10}{'speedup':>9}")
    for name, args in kernel_cases(rng).items():
        fn_np = _kernels.NUMPY_KERNELS[name]
        t_np = min(timeit.repeat(lambda: fn_np(*args), number=5, repeat=repeat)) / 5
        if not _kernels.HAVE_NUMBA:
            print(f"{name:<24}{t_np * 1e3:>10.2f}{'n/a':>10}")
            continue
        fn_nb = _kernels.NUMBA_KERNELS[name]
        fn_nb(*args)  # compile outside the timed region
        t_nb = min(timeit.repeat(lambda: fn_nb(*args), number=5, repeat=repeat)) / 5
        print(f"{name:<24}{t_np * 1e3:>10.2f}{t_nb * 1e3:>10.2f}{t_np / t_nb:>8.1f}x")


def bench_end_to_end():
    print(f"\n{'backend':<10}{'train 1 epoch s':>17}{'attack 1 epoch s':>18}")
    for flag in ("1", "0"):
        env = dict(os.environ, FTUAP_USE_NUMBA=flag)
        out = subprocess.run([sys.executable, "-c", E2E], env=env, check=True,
                             capture_output=True, text=True).stdout.split()
        print(f"{out[0]:<10}{float(out[1]):>17.2f}{float(out[2]):>18.2f}")


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--kernels-only", action="store_true")
    args = ap.parse_args()
    bench_kernels(args.repeat)
    if not args.kernels_only:
        bench_end_to_end()
