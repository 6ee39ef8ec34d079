"""Time the compiled kernel against the numpy fallback.

    python3 benchmarks/bench_kernel.py [--repeat N] [--scale desk|full|both]
"""

import argparse
import time

import numpy as np

from greenspread import BACKENDS, NetworkConfig, SpreadParams, assemble_network, run_simulation

SCALES = {"desk": dict(n_banks=25, n_firms=1000), "full": dict(n_banks=250, n_firms=10000)}
# a spread-heavy and a suppressed regime; the latter exits early less often
CASES = [SpreadParams(alpha=0.1, delta=0.1, eip=1.0, eit=15, lt=0.1),
         SpreadParams(alpha=0.05, delta=0.05, eip=0.5, eit=15, lt=0.2)]


def time_backend(net, backend, repeat):
    best = []
    for p in CASES:
        samples = []
        for r in range(repeat):
            t0 = time.perf_counter()
            run_simulation(net, p.replace(seed=r), backend=backend)
            samples.append(time.perf_counter() - t0)
        best.append(float(np.median(samples)))
    return best


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=20)
    ap.add_argument("--scale", choices=["desk", "full", "both"], default="both")
    args = ap.parse_args(argv)
    scales = list(SCALES) if args.scale == "both" else [args.scale]

    print(f"backends available: {', '.join(BACKENDS)}")
    print(f"{'scale':<6} {'case':<5} " + " ".join(f"{b:>12}" for b in BACKENDS) + "   speedup")
    for scale in scales:
        net = assemble_network(NetworkConfig(**SCALES[scale], seed=1))
        _ = net.diffusion_plan  # exclude plan construction from timings
        run_simulation(net, CASES[0])  # warm caches
        times = {b: time_backend(net, b, args.repeat) for b in BACKENDS}
        for i in range(len(CASES)):
            cols = " ".join(f"{times[b][i] * 1e3:10.2f}ms" for b in BACKENDS)
            speed = ""
            if "compiled" in times:
                speed = f"{times['python'][i] / times['compiled'][i]:8.1f}x"
            print(f"{scale:<6} {i:<5} {cols} {speed}")


if __name__ == "__main__":
    main()
