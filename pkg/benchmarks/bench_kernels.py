"""Time the compiled and pure-Python kernel backends on the same workloads.

    python benchmarks/bench_kernels.py [--repeat 5]
"""

import argparse
import random
import time
from array import array

from hisepq._kernels import available_backends
from hisepq.bench import compile_hisepq, gen_synthetic
from hisepq.core import SimConfig, Simulator
from hisepq.histogram import Histogram


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def simulate(kernels):
    circ = gen_synthetic(100, 200, 1.0, seed=1)
    prog = compile_hisepq(circ)
    image = prog.image(100)
    cfg = SimConfig(n_qubits=100, start_delay=len(prog.instructions) + 1, fifo_depth=circ.depth + 1)

    def go():
        Simulator(image, cfg, kernels=kernels).run()

    return go


def sort_stream(kernels):
    rng = random.Random(3)
    stream = [min(int(rng.expovariate(0.05)), 255) for _ in range(20_000)]

    def go():
        h = Histogram(depth=len(stream), top_m=8, n_qubits=8, kernels=kernels)
        for s in stream:
            h.accumulate(s)

    return go


def scan(kernels):
    rng = random.Random(4)
    heads = array("q", [rng.randrange(1000) for _ in range(1600)])

    def go():
        for clock in range(2000):
            kernels.scan_heads(heads, clock)

    return go


WORKLOADS = {
    "simulate 100q x 200 layers": simulate,
    "histogram 20k shots, top-8": sort_stream,
    "scan 1600 FIFO heads x 2000": scan,
}


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    backends = available_backends()
    names = sorted(backends)
    print(f"{'workload':32s}" + "".join(f"{n:>12s}" for n in names) + ("     speedup" if len(names) > 1 else ""))
    for label, make in WORKLOADS.items():
        secs = {n: best_of(make(backends[n]), args.repeat) for n in names}
        line = f"{label:32s}" + "".join(f"{secs[n] * 1e3:10.1f}ms" for n in names)
        if "cython" in secs and "python" in secs:
            line += f"{secs['python'] / secs['cython']:11.1f}x"
        print(line)
    if "cython" not in backends:
        print("compiled kernels not built; only the Python backend was timed")


if __name__ == "__main__":
    main()
