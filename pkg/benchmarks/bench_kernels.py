"""Time the compiled kernels against the numpy fallback on filter-sized inputs.

Also times one full tracking run with each backend selection.

    python3 benchmarks/bench_kernels.py [--particles 1000] [--measurements 13] [--repeat 20] [--end-to-end]
"""

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from apdaloc import _kernels_py
from apdaloc.types import NlosParams

try:
    from apdaloc import _kernels_c
except ImportError:  # extension not built
    _kernels_c = None

E2E = """
import time
from apdaloc.config import ExperimentConfig
from apdaloc.harness import run_experiment
cfg = ExperimentConfig(variants=("AL5",), runs=1)
t0 = time.perf_counter()
run_experiment(cfg)
print(time.perf_counter() - t0)
"""


def make_inputs(r: int, m: int, seed: int = 0) -> dict:
    """Inputs shaped like one anchor update: particles near the agent, one LOS component plus clutter."""
    rng = np.random.default_rng(seed)
    nlos = NlosParams()
    d_true = 8.0
    d_los = d_true + rng.normal(0.0, 0.3, r)
    d_hat = np.concatenate([[d_true + rng.normal(0.0, 0.03)], rng.uniform(0.0, nlos.d_max, m - 1)])
    sigma = np.full(m, 0.03)
    dist = (d_los, d_hat, sigma, nlos.p_mp, nlos.gamma_r, nlos.gamma_f, nlos.bias_b, nlos.d_max)
    log_nl_sum, log_ratio = _kernels_py.distance_terms(*dist)
    w = rng.random(r)
    return {
        "distance_terms": dist,
        "row_log_mix": (log_nl_sum, log_ratio, np.log(1e-3), np.full(m, np.log(0.99 / m))),
        "column_log_mix": (log_ratio, np.log(w / w.sum())),
        "systematic_resample": (w / w.sum(), r, 0.37),
        "rice_rayleigh_log_ratio": (rng.uniform(0.0, 40.0, r), rng.rayleigh(1.0, m) * 5),
    }


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--particles", type=int, default=1000)
    parser.add_argument("--measurements", type=int, default=13)
    parser.add_argument("--repeat", type=int, default=20)
    parser.add_argument("--end-to-end", action="store_true", help="also time a full tracking run per backend")
    args = parser.parse_args()

    inputs = make_inputs(args.particles, args.measurements)
    backends = {"python": _kernels_py}
    if _kernels_c is not None:
        backends["cython"] = _kernels_c
    print(f"R={args.particles} M={args.measurements}, best of 5 x {args.repeat} calls")
    print(f"{'kernel':<26}" + "".join(f"{b:>12}" for b in backends) + f"{'speedup':>10}")
    for name, call_args in inputs.items():
        times = {}
        for label, mod in backends.items():
            fn = getattr(mod, name)
            best = min(timeit.repeat(lambda: fn(*call_args), number=args.repeat, repeat=5))
            times[label] = best / args.repeat
        row = f"{name:<26}" + "".join(f"{times[b] * 1e6:>10.1f}us" for b in backends)
        if "cython" in times:
            row += f"{times['python'] / times['cython']:>9.1f}x"
        print(row)

    if args.end_to_end:
        print("\nend-to-end, one 400-step AL5 run on the default scenario:")
        for label in backends:
            env = dict(os.environ, APDALOC_PURE_PYTHON="1" if label == "python" else "0")
            out = subprocess.run([sys.executable, "-c", E2E], env=env, capture_output=True, text=True, check=True)
            print(f"  {label:<8}{float(out.stdout):8.2f} s")


if __name__ == "__main__":
    main()
