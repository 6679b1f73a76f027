"""Compare the compiled and NumPy enumeration kernels.

Micro timings call both kernel modules directly on the same inputs; the
end-to-end timing runs a pcm pass in a subprocess per backend, switching
with ``PRAGQA_PURE_PYTHON``.

    python3 benchmarks/bench_kernels.py [--repeat 5] [--options 4 8]
"""
from __future__ import annotations

import argparse
import itertools
import os
import subprocess
import sys
import timeit

import numpy as np

from pragqa import _kernels_py

try:
    from pragqa import _kernels as _compiled
except ImportError:  # extension not built
    _compiled = None

E2E = (
    "import time; from pragqa.corpus import load_vignettes; "
    "from pragqa.variants import ModelConfig, run_variant; from pragqa import kernels; "
    "c = load_vignettes(); t = time.perf_counter(); "
    "[run_variant(ModelConfig('pcm'), c) for _ in range({n})]; "
    "print(kernels.BACKEND, (time.perf_counter() - t) / {n})"
)


def inputs(n_options: int, n_masks: int, seed: int = 0):
    rng = np.random.default_rng(seed)
    worlds = list(itertools.product([0, 1], repeat=n_options))
    U = rng.uniform(0, 100, size=(len(worlds), n_options))
    prior = np.full(len(worlds), 1 / len(worlds))
    masks = rng.random((n_masks, len(worlds))) < 0.5
    masks[:, 0] = True
    return U, prior, masks


def best(stmt, repeat: int, number: int) -> float:
    return min(timeit.repeat(stmt, repeat=repeat, number=number)) / number


def micro(n_options: int, n_masks: int, repeat: int) -> None:
    U, prior, masks = inputs(n_options, n_masks)
    alpha = 0.06
    backends = [("python", _kernels_py)] + ([("compiled", _compiled)] if _compiled else [])
    timings = {}
    for name, mod in backends:
        got = mod.conditioned_values(U, prior, masks, alpha)
        ref = _kernels_py.conditioned_values(U, prior, masks, alpha)
        err = max(float(np.nanmax(np.abs(a - b))) for a, b in zip(got, ref))
        t_cv = best(lambda: mod.conditioned_values(U, prior, masks, alpha), repeat, 200)
        t_dp = best(lambda: mod.dp_value(U, prior, alpha), repeat, 2000)
        timings[name] = t_cv
        print(f"  {name:9s} conditioned_values {t_cv * 1e6:10.1f} us   dp_value {t_dp * 1e6:8.2f} us"
              f"   max|diff| {err:.1e}")
    if len(timings) == 2:
        print(f"  speedup   {timings['python'] / timings['compiled']:.1f}x")


def end_to_end(n: int) -> None:
    for pure in ("1", ""):
        env = dict(os.environ, PRAGQA_PURE_PYTHON=pure)
        out = subprocess.run([sys.executable, "-c", E2E.format(n=n)], env=env,
                             capture_output=True, text=True, check=True).stdout.split()
        print(f"  {out[0]:9s} pcm over bundled corpus {float(out[1]) * 1e3:8.2f} ms")


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--options", type=int, nargs="+", default=[4, 6, 8])
    ap.add_argument("--masks", type=int, default=12)
    ap.add_argument("--e2e-runs", type=int, default=5)
    args = ap.parse_args(argv)
    if _compiled is None:
        print("compiled extension not importable; timing the NumPy kernels only")
    for k in args.options:
        print(f"{k} options, {2 ** k} worlds, {args.masks} masks")
        micro(k, args.masks, args.repeat)
    print("end to end")
    end_to_end(args.e2e_runs)
    return 0


if __name__ == "__main__":
    sys.exit(main())
