#!/usr/bin/env python3
"""Explore how the 2-nonnegativity margin behaves outside the theorems'
hypotheses: torus-to-sphere bumps (hypothesis check fails, margin strongly
negative, flow still contracts to a point) and increasingly violent sphere
perturbations until the blowup guard trips."""

import argparse

import numpy as np

from hmflow.config import parse_config
from hmflow.flow import run
from hmflow.geometry import check_hypotheses


def torus_bumps(amplitudes, resolution, t_max):
    print("torus-to-sphere bumps (negative control):")
    for amp in amplitudes:
        cfg = parse_config({
            "domain": {"kind": "torus", "periods": [1.0, 1.0],
                       "grid": {"kind": "periodic", "resolution": resolution}},
            "target": {"kind": "sphere", "dim": 2},
            "initial_map": {"scenario": "torus_to_sphere_bump",
                            "amplitude": amp},
            "flow": {"t_max": t_max, "monitor_stride": 200},
        })
        report = check_hypotheses(cfg.domain, cfg.target, cfg.build_weight(),
                                  cfg.grid)
        result = run(cfg)
        margins = result.series.column("min_margin")
        print(f"  amp {amp:<5} hypotheses "
              f"{'ok' if report.weak_ok else 'FAIL':<5} "
              f"verdict {result.verdict:<10} min margin {np.min(margins):8.2f} "
              f"final max lambda {result.series.column('max_lambda')[-1]:.2e}")


def sphere_blowups(epsilons, nodes, guard):
    print("\nsphere perturbations against the blowup guard:")
    for eps in epsilons:
        cfg = parse_config({
            "domain": {"kind": "sphere", "dim": 2,
                       "grid": {"kind": "equivariant", "nodes": nodes}},
            "target": {"kind": "sphere", "dim": 2},
            "initial_map": {"scenario": "degree1_perturbed", "epsilon": eps,
                            "mode": 2},
            "flow": {"t_max": 2.0, "monitor_stride": 1000,
                     "blowup_guard": guard},
        })
        result = run(cfg)
        print(f"  eps {eps:<5} verdict {result.verdict:<10} "
              f"steps {result.steps:<9} "
              f"peak energy {np.max(result.series.column('grad_df_sup')):.2e}")


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--resolution", type=int, default=24)
    parser.add_argument("--nodes", type=int, default=200)
    parser.add_argument("--guard", type=float, default=3.0)
    args = parser.parse_args()
    torus_bumps((0.3, 0.8, 1.2), args.resolution, t_max=1.0)
    sphere_blowups((0.05, 0.2, 0.5), args.nodes, args.guard)


if __name__ == "__main__":
    main()
