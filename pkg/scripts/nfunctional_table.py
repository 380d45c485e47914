#!/usr/bin/env python3
"""sqrt(n) N_1(beta_bar^n) for n = 1, 2, 4, ..., 2^k against its plateau."""

import argparse
import math

from waveholtz.transfer import n_functional_beta_power, nfunctional_plateau


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--max-power", type=int, default=12)
    args = ap.parse_args()
    print(f"{'n':>6} {'L1':>12} {'D':>12} {'Linf':>12} {'sqrt(n) N':>12}")
    for k in range(args.max_power + 1):
        n = 2**k
        r = n_functional_beta_power(n)
        print(f"{n:6d} {r.l1_term:12.6g} {r.dstar_term:12.6g} {r.linf_term:12.6g} "
              f"{math.sqrt(n) * r.total:12.6g}")
    print(f"plateau {nfunctional_plateau():.6f}")


if __name__ == "__main__":
    main()
