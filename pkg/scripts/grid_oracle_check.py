"""Compare the CI ground state against the finite-difference two-electron solver."""

import argparse

from squaredot.basis import Geometry, Material
from squaredot.ci import ANTISYMMETRIC, SYMMETRIC, solve_sector
from squaredot.grid_oracle import grid_oracle_spectrum, richardson


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--L", type=float, default=50.0)
    ap.add_argument("--grids", type=int, nargs="+", default=[12, 16, 20])
    ap.add_argument("--n-max", type=int, nargs="+", default=[6, 8, 10])
    args = ap.parse_args()

    geo, mat = Geometry(args.L), Material()
    hs = [args.L / (G + 1) for G in args.grids]
    vals = [grid_oracle_spectrum(geo, mat, G, k=1)[0] for G in args.grids]
    for G, v in zip(args.grids, vals):
        print(f"grid G={G:3d}  E0={v:.6f} meV")
    ex = richardson(hs, vals, orders=(1, 2))
    print(f"extrapolated  E0={ex:.6f} meV")
    for n in args.n_max:
        e_s = solve_sector(SYMMETRIC, geo, mat, n_max=n, k_per_block=1).eigenvalues[0]
        e_a = solve_sector(ANTISYMMETRIC, geo, mat, n_max=n, k_per_block=1).eigenvalues[0]
        print(f"CI n_max={n:2d}  singlet {e_s:.6f}  triplet {e_a:.6f}  dev {abs(e_s - ex) / ex:.3%}")


if __name__ == "__main__":
    main()
