"""Command-line entry point: hypothesis checks, single runs, and parameter
sweeps, all driven by one JSON configuration file.

Exit codes
  check: 0 strict hypotheses hold, 2 weak only, 3 neither, 64 bad config
  run:   0 Converged, 4 TimedOut, 5 Blowup, 64 bad config, 70 internal
  sweep: 0 all runs completed, 64 bad config
"""

from __future__ import annotations

import argparse
import itertools
import json
import sys
from pathlib import Path

import numpy as np

from .config import RunConfig, load_config, parse_config
from .errors import ConfigError, HmflowError, NotConverged
from .flow import VERDICT_BLOWUP, VERDICT_CONVERGED, VERDICT_TIMED_OUT, RunResult, run
from .geometry import check_hypotheses
from .grids import Equivariant1D
from .monitors import classify_limit
from .pullback import equivariant_lambdas
from .state import (
    MapState,
    periodic_energy_density,
    periodic_margins,
    periodic_singular_values,
    psi_derivatives,
)

EXIT_OK = 0
EXIT_WEAK = 2
EXIT_NEITHER = 3
EXIT_TIMED_OUT = 4
EXIT_BLOWUP = 5
EXIT_CONFIG = 64
EXIT_INTERNAL = 70

OFF_MANIFOLD_TOL = 1e-12

_VERDICT_EXIT = {
    VERDICT_CONVERGED: EXIT_OK,
    VERDICT_TIMED_OUT: EXIT_TIMED_OUT,
    VERDICT_BLOWUP: EXIT_BLOWUP,
}


def _load(path: str) -> RunConfig:
    return load_config(path)


def cmd_check(config: RunConfig) -> int:
    report = check_hypotheses(config.domain, config.target,
                              config.build_weight(), config.grid,
                              seed=config.seed)
    print(json.dumps(report.as_dict(), indent=2))
    if report.strict_ok:
        return EXIT_OK
    if report.weak_ok:
        return EXIT_WEAK
    return EXIT_NEITHER


def _final_state_rows(state: MapState):
    """(header, rows) for final_state.csv: node coordinates, map values, and
    the per-node pull-back report fields."""
    if state.is_equivariant:
        grid: Equivariant1D = state.grid
        from .state import effective_sphere_radius

        rho_n = effective_sphere_radius(state.target)
        d1, _ = psi_derivatives(state)
        lam_r, lam_t = equivariant_lambdas(
            state.values, d1, grid.nodes, grid.sphere_dim,
            rho_n, grid.domain_radius,
        )
        header = ["r", "psi", "lambda_radial", "lambda_tangential",
                  "alpha_radial", "alpha_tangential", "two_nonneg_margin",
                  "is_distance_nonincreasing", "is_two_nonnegative",
                  "is_area_nonincreasing", "energy_density"]
        rows = []
        n = grid.sphere_dim
        for j, r in enumerate(grid.nodes):
            lr2, lt2 = lam_r[j] ** 2, lam_t[j] ** 2
            if n >= 3:
                top2 = lr2 + lt2 if lr2 >= lt2 else 2 * lt2
            else:
                top2 = lr2 + lt2
            margin = 2.0 - top2
            lam_max = max(lam_r[j], lam_t[j])
            area_ok = (lam_r[j] * lam_t[j] <= 1.0 + 1e-12
                       and (n < 3 or lt2 <= 1.0 + 1e-12))
            rows.append([
                r, state.values[j], lam_r[j], lam_t[j],
                1.0 - lr2, 1.0 - lt2, margin,
                int(lam_max <= 1.0 + 1e-12), int(margin >= -1e-12),
                int(area_ok),
                lr2 + (n - 1) * lt2,
            ])
        return header, rows
    sv = periodic_singular_values(state)
    margins = periodic_margins(state)
    energy = periodic_energy_density(state)
    d = state.grid.dim
    mesh = np.stack(state.grid.meshgrid(), axis=-1)
    header = ([f"x{a}" for a in range(d)]
              + [f"F{k}" for k in range(state.values.shape[-1])]
              + [f"lambda_{i + 1}" for i in range(d)]
              + ["two_nonneg_margin", "energy_density"])
    flat_mesh = mesh.reshape(-1, d)
    flat_vals = state.values.reshape(-1, state.values.shape[-1])
    flat_sv = sv.reshape(-1, d)
    flat_margin = margins.reshape(-1)
    flat_energy = energy.reshape(-1)
    rows = [
        list(flat_mesh[i]) + list(flat_vals[i]) + list(flat_sv[i])
        + [flat_margin[i], flat_energy[i]]
        for i in range(flat_mesh.shape[0])
    ]
    return header, rows


def _write_csv(path: Path, header, rows):
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


def _off_manifold(state: MapState) -> float:
    if state.is_equivariant:
        return 0.0
    from .geometry import embedding_data

    emb = embedding_data(state.target)
    if emb.radius is None:
        return 0.0
    return float(np.max(np.abs(
        np.linalg.norm(state.values, axis=-1) - emb.radius
    )))


def _execute_run(config: RunConfig, out_dir: Path) -> tuple[int, RunResult, dict]:
    out_dir.mkdir(parents=True, exist_ok=True)
    phi = config.build_weight()
    hypo = check_hypotheses(config.domain, config.target, phi, config.grid,
                            seed=config.seed)
    result = run(config)
    drift = _off_manifold(result.final)

    verdict_doc = {
        "verdict": result.verdict,
        "steps": result.steps,
        "final_time": result.final.time,
        "initial_margin": result.initial_margin,
        "classification": None,
        "hypotheses": hypo.as_dict(),
        "config": config.resolved_dict(),
    }
    if result.verdict == VERDICT_CONVERGED:
        try:
            rigidity = classify_limit(
                result.final, phi,
                trivial_tol=config.tolerances.trivial_tol,
                iso_tol=config.tolerances.iso_tol,
            )
            verdict_doc["classification"] = rigidity.as_dict()
        except NotConverged:    # pragma: no cover - guarded by the verdict
            pass

    result.series.to_csv(out_dir / "series.csv")
    header, rows = _final_state_rows(result.final)
    _write_csv(out_dir / "final_state.csv", header, rows)
    with open(out_dir / "verdict.json", "w") as fh:
        json.dump(verdict_doc, fh, indent=2)

    if drift > OFF_MANIFOLD_TOL and result.verdict != VERDICT_BLOWUP:
        print(f"internal error: state left the target manifold by {drift:.3e}",
              file=sys.stderr)
        return EXIT_INTERNAL, result, verdict_doc
    return _VERDICT_EXIT[result.verdict], result, verdict_doc


def cmd_run(config: RunConfig) -> int:
    code, result, _ = _execute_run(config, Path(config.output.dir))
    print(f"{result.verdict}: {result.steps} steps to t = {result.final.time:.6g}")
    return code


def _set_path(doc: dict, dotted: str, value):
    keys = dotted.split(".")
    node = doc
    for k in keys[:-1]:
        if k not in node or not isinstance(node[k], dict):
            raise ConfigError(f"sweep path {dotted!r} does not exist in the config")
        node = node[k]
    if keys[-1] not in node:
        raise ConfigError(f"sweep path {dotted!r} does not exist in the config")
    node[keys[-1]] = value


def cmd_sweep(config: RunConfig, serial: bool = True) -> int:
    if not config.sweep:
        raise ConfigError("sweep: config has no sweep section")
    paths = [entry["path"] for entry in config.sweep]
    grids = [entry["values"] for entry in config.sweep]
    base = config.resolved_dict()
    base.pop("sweep", None)
    out_root = Path(config.output.dir)
    out_root.mkdir(parents=True, exist_ok=True)

    summary_header = paths + ["verdict", "classification",
                              "final_min_margin", "final_energy"]
    summary_rows = []
    for indices in itertools.product(*(range(len(g)) for g in grids)):
        doc = json.loads(json.dumps(base))
        label = "case_" + "_".join(str(i) for i in indices)
        values = [grids[k][i] for k, i in enumerate(indices)]
        for path, value in zip(paths, values):
            _set_path(doc, path, value)
        doc.setdefault("output", {})["dir"] = str(out_root / label)
        case = parse_config(doc)
        _, result, verdict_doc = _execute_run(case, out_root / label)
        cls = verdict_doc["classification"]
        summary_rows.append(
            [json.dumps(v) for v in values]
            + [result.verdict,
               cls["classification"] if cls else "",
               repr(float(result.series.column("min_margin")[-1])),
               repr(float(result.series.column("energy_phi")[-1]))]
        )

    with open(out_root / "summary.csv", "w") as fh:
        fh.write(",".join(summary_header) + "\n")
        for row in summary_rows:
            fh.write(",".join(row) + "\n")
    print(f"sweep complete: {len(summary_rows)} runs -> {out_root / 'summary.csv'}")
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="hmflow",
        description="Weighted harmonic map heat flow laboratory",
    )
    sub = parser.add_subparsers(dest="verb", required=True)
    for verb in ("check", "run", "sweep"):
        p = sub.add_parser(verb)
        p.add_argument("--config", required=True)
        p.add_argument("--serial", action="store_true",
                       help="deterministic reference mode (the default here)")
    args = parser.parse_args(argv)

    try:
        config = _load(args.config)
        if args.verb == "check":
            return cmd_check(config)
        if args.verb == "run":
            return cmd_run(config)
        return cmd_sweep(config, serial=args.serial)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except HmflowError as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
