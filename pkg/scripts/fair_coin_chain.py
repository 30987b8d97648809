"""Fair-coin consistency chain: exact law, variational curve, MGF and its Legendre transform.

All four should reproduce H(x) - log 2.
"""

import argparse

import numpy as np

from hlsurn import Constant, SeedComposition, entropy_curve, exact_distribution, legendre, solve_mgf


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--T", type=int, default=512)
    args = ap.parse_args()

    spec = Constant(0.5)
    xs = np.linspace(0.1, 0.9, 9)
    truth = -xs * np.log(xs) - (1 - xs) * np.log1p(-xs) - np.log(2)
    d = exact_distribution(spec, args.T, SeedComposition(1, 1))
    rows = {
        f"exact law, T={args.T}": np.interp(xs, d.shares, d.log_probs / args.T),
        "variational": entropy_curve(spec, xs).values,
        "Legendre of MGF": legendre(solve_mgf(spec, np.linspace(-30, 30, 6001)), xs).values,
    }
    print(f"{'x':>6}{'H-log2':>12}" + "".join(f"{k:>24}" for k in rows))
    for i, x in enumerate(xs):
        print(f"{x:6.2f}{truth[i]:12.6f}" + "".join(f"{v[i]:24.6f}" for v in rows.values()))
    for k, v in rows.items():
        print(f"sup error, {k}: {np.max(np.abs(v - truth)):.2e}")


if __name__ == "__main__":
    main()
