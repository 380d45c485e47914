#!/usr/bin/env python3
"""Iterations needed to reach a relative tolerance for concentrated sources."""

import argparse
from pathlib import Path

from waveholtz.experiments import omega_sweep
from waveholtz.fields import GaussianProfile


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--omegas", type=float, nargs="+", default=[2.0, 4.0, 8.0, 16.0])
    ap.add_argument("--tol", type=float, default=0.05)
    ap.add_argument("--s", type=float, default=2.0)
    ap.add_argument("--n-max", type=int, default=2**15)
    ap.add_argument("--out", type=Path, default=Path("out/sweep"))
    args = ap.parse_args()

    report = omega_sweep(GaussianProfile(), args.omegas, args.tol, args.s, args.n_max)
    args.out.mkdir(parents=True, exist_ok=True)
    report.to_csv(args.out / "sweep.csv")
    report.to_json(args.out / "sweep.json")
    for p in report.points:
        print(f"omega {p.omega:6g}  n {p.n:7d}{'  (censored)' if p.censored else ''}")
    print(f"fitted exponent p = {report.exponent}")


if __name__ == "__main__":
    main()
