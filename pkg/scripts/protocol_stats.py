"""Monte Carlo success rates of the swap and AKLT chains against their closed forms."""

import argparse

from squaredot import protocol as pr
from squaredot.noise import PovmSummary


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--max-dots", type=int, default=4)
    ap.add_argument("--trials", type=int, default=100_000)
    ap.add_argument("--p-ss", type=float, default=1.0)
    ap.add_argument("--p-ts", type=float, default=0.0)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    povm = PovmSummary(args.p_ss, args.p_ts)
    for mode in ("swap", "aklt"):
        for n in range(1, args.max_dots + 1):
            cfg = pr.ChainConfig(n_dots=n, trials=args.trials, mode=mode, dot_povm=povm, seed=args.seed)
            s = pr.estimate_success_prob(cfg)
            print(f"{mode:4s} N={n}  rate {s['empirical_rate']:.5f}  "
                  f"[{s['ci_low']:.5f}, {s['ci_high']:.5f}]  theory {s['theory']:.5f}")


if __name__ == "__main__":
    main()
