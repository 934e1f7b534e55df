#!/usr/bin/env python3
"""Rigidity dichotomy at desk scale: flow a family of degree-1 perturbations
and degree-0 bumps of the identity on S^2 and tabulate what each one limits
to (isometry vs constant map)."""

import argparse

import numpy as np

from hmflow.config import parse_config
from hmflow.flow import run
from hmflow.monitors import classify_limit


def flow_and_classify(initial_map, nodes, t_max):
    cfg = parse_config({
        "domain": {"kind": "sphere", "dim": 2,
                   "grid": {"kind": "equivariant", "nodes": nodes}},
        "target": {"kind": "sphere", "dim": 2},
        "initial_map": initial_map,
        "flow": {"t_max": t_max, "monitor_stride": 20000},
    })
    result = run(cfg)
    if result.verdict != "Converged":
        return result, None
    return result, classify_limit(result.final, result.final.phi)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--nodes", type=int, default=400)
    parser.add_argument("--t-max", type=float, default=20.0)
    args = parser.parse_args()

    print(f"{'scenario':<36} {'verdict':<10} {'class':<12} "
          f"{'sup|lam-1|':<12} {'margin0':<10}")
    for eps in (0.02, 0.05, 0.1):
        result, verdict = flow_and_classify(
            {"scenario": "degree1_perturbed", "epsilon": eps, "mode": 2},
            args.nodes, args.t_max)
        cls = verdict.classification if verdict else "-"
        dev = f"{verdict.sup_lambda_deviation:.2e}" if verdict else "-"
        print(f"{'degree1_perturbed eps=' + str(eps):<36} "
              f"{result.verdict:<10} {cls:<12} {dev:<12} "
              f"{result.initial_margin:<10.4f}")
    for amp in (0.1, 0.3, 0.5):
        result, verdict = flow_and_classify(
            {"scenario": "degree0_bump", "amplitude": amp},
            args.nodes, args.t_max)
        cls = verdict.classification if verdict else "-"
        lam = f"{verdict.sup_lambda:.2e}" if verdict else "-"
        print(f"{'degree0_bump amp=' + str(amp):<36} "
              f"{result.verdict:<10} {cls:<12} {lam:<12} "
              f"{result.initial_margin:<10.4f}")
    print("\nnote: every nontrivial degree-1 perturbation starts outside the "
          "2-nonnegative cone (negative margin0); the flow restores it while "
          "converging to the isometry.")


if __name__ == "__main__":
    main()
