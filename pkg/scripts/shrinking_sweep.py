"""Fitted shrinking exponent beta over radii and depth ranges."""
import argparse

from dynlab import complex_quadratic, real_quadratic, shrinking_exponent

MAPS = {"x2": lambda: real_quadratic(-2.0), "basilica": lambda: complex_quadratic(-1.0),
        "z2": lambda: complex_quadratic(0.0)}


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("map", choices=sorted(MAPS))
    ap.add_argument("--rho", type=float, nargs="+", default=[0.02, 0.05, 0.1])
    ap.add_argument("--max-depth", type=int, nargs="+", default=[10, 15])
    ap.add_argument("--n-base", type=int, default=256)
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args()
    spec = MAPS[args.map]()
    print("rho     depths  beta    residual")
    for rho in args.rho:
        for d in args.max_depth:
            rep = shrinking_exponent(spec, rho, range(1, d + 1), n_base=args.n_base, seed=args.seed)
            print(f"{rho:<7g} 1-{d:<5d} {rep.fitted_beta:<7.3f} {rep.fit_residual:.3f}")


if __name__ == "__main__":
    main()
