"""Overhauser-field coherence time and the noisy filter curve at a chosen dot size.

    python3 scripts/hyperfine_coherence.py --L 400 --samples 10000
"""

import argparse
import time

import numpy as np

from squaredot import effective as eff
from squaredot import noise as nz
from squaredot import reference


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--L", type=float, default=400.0)
    ap.add_argument("--samples", type=int, default=10_000)
    ap.add_argument("--seed", type=int, default=2024)
    ap.add_argument("--gamma-tstar", type=float, default=0.0, help="charge dephasing rate times t*")
    args = ap.parse_args()

    r = reference.row(args.L)
    p = r.params()
    ts = eff.t_star(p)
    cfg = nz.NoiseConfig(E_hf=r.E_hf, samples=args.samples, seed=args.seed,
                         dephasing_rate=args.gamma_tstar / ts)
    t0 = time.perf_counter()
    fit = nz.hyperfine_coherence(cfg)
    print(f"E_hf={r.E_hf} ueV  T={fit.decay_time / 1e3:.3f} ns  (2 pi hbar/E_hf = {fit.expected / 1e3:.3f} ns)"
          f"  {time.perf_counter() - t0:.1f} s")
    t = np.linspace(0, 2 * ts, 201)
    t0 = time.perf_counter()
    curve = nz.ensemble_filter_curve(p, cfg, t)
    print(f"t*={ts:.2f} ps  t*/T={ts / fit.decay_time:.4f}  first max {curve.first_max_value:.4f}"
          f" at {curve.first_max_time:.2f} ps  {time.perf_counter() - t0:.1f} s")
    rec = nz.repeat_until_success(p, cfg, "product", 5)
    print("cumulative miss by round:", np.round(rec.cumulative_miss, 5).tolist())


if __name__ == "__main__":
    main()
