#!/usr/bin/env python3
"""Iterate the omega = 8 Gaussian demo and write the error table and fit."""

import argparse
from pathlib import Path

from waveholtz.experiments import DemoProblem, run_waveholtz
from waveholtz.waveop import SolveConfig


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--omega", type=float, default=8.0)
    ap.add_argument("--width", type=float, default=0.25)
    ap.add_argument("--n-max", type=int, default=1024)
    ap.add_argument("--backend", choices=["spectral", "timedomain"], default="spectral")
    ap.add_argument("--out", type=Path, default=Path("out/convergence"))
    args = ap.parse_args()

    problem = DemoProblem(args.omega, args.width, n_max=args.n_max)
    grid = problem.grid()
    cfg = SolveConfig(args.omega, grid, args.backend)
    report = run_waveholtz(problem.source(grid), cfg, args.n_max)
    args.out.mkdir(parents=True, exist_ok=True)
    report.to_csv(args.out / "report.csv")
    report.to_json(args.out / "report.json")
    print(f"N = {grid.points_per_dim}, L = {grid.half_width:.3f}")
    print(f"slope {report.fitted_slope}, constant {report.fitted_constant}")


if __name__ == "__main__":
    main()
