"""Run configuration: JSON schema, strict validation, defaults, echo."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .geometry import ManifoldModel, WeightFunction
from .grids import DomainGrid, Equivariant1D, PeriodicGrid

SCHEMES = ("euler", "rk4")
SCENARIOS = (
    "identity",
    "constant",
    "degree1_perturbed",
    "degree0_bump",
    "torus_linear",
    "torus_to_sphere_bump",
    "explicit",
)


def _take(d: dict, allowed: dict, context: str) -> dict:
    """Validate keys of a config mapping against {key: required} and fill in
    nothing; unknown keys are rejected."""
    if not isinstance(d, dict):
        raise ConfigError(f"{context}: expected an object")
    unknown = set(d) - set(allowed)
    if unknown:
        raise ConfigError(f"{context}: unknown keys {sorted(unknown)}")
    missing = [k for k, req in allowed.items() if req and k not in d]
    if missing:
        raise ConfigError(f"{context}: missing keys {missing}")
    return d


def _positive(value, context: str) -> float:
    try:
        v = float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{context}: expected a number") from None
    if not np.isfinite(v) or v <= 0:
        raise ConfigError(f"{context}: must be a positive finite number")
    return v


@dataclass(frozen=True)
class FlowParams:
    scheme: str = "euler"
    dt: float | None = None          # None = automatic CFL bound
    t_max: float = 10.0
    convergence_tol: float = 1e-6
    blowup_guard: float = 100.0
    monitor_stride: int = 1000

    def as_dict(self) -> dict:
        return {
            "scheme": self.scheme,
            "dt": "auto" if self.dt is None else self.dt,
            "t_max": self.t_max,
            "convergence_tol": self.convergence_tol,
            "blowup_guard": self.blowup_guard,
            "monitor_stride": self.monitor_stride,
        }


@dataclass(frozen=True)
class Tolerances:
    trivial_tol: float = 1e-3
    iso_tol: float = 1e-3

    def as_dict(self) -> dict:
        return {"trivial_tol": self.trivial_tol, "iso_tol": self.iso_tol}


@dataclass(frozen=True)
class OutputSpec:
    dir: str = "out"
    prefix: str = "run"

    def as_dict(self) -> dict:
        return {"dir": self.dir, "prefix": self.prefix}


@dataclass
class RunConfig:
    domain: ManifoldModel
    grid: DomainGrid
    target: ManifoldModel
    weight_spec: dict
    initial_map: dict
    flow: FlowParams = field(default_factory=FlowParams)
    tolerances: Tolerances = field(default_factory=Tolerances)
    output: OutputSpec = field(default_factory=OutputSpec)
    seed: int = 0
    sweep: list[dict] | None = None

    def build_weight(self) -> WeightFunction:
        return build_weight(self.weight_spec, self.grid)

    def resolved_dict(self) -> dict:
        """Fully resolved config (defaults filled), round-trippable through
        parse_config."""
        domain = self.domain.describe()
        if isinstance(self.grid, Equivariant1D):
            domain["grid"] = {"kind": "equivariant", "nodes": self.grid.node_count}
        else:
            domain["grid"] = {
                "kind": "periodic",
                "resolution": list(self.grid.resolution),
            }
        out = {
            "domain": domain,
            "target": self.target.describe(),
            "weight": dict(self.weight_spec),
            "initial_map": dict(self.initial_map),
            "flow": self.flow.as_dict(),
            "tolerances": self.tolerances.as_dict(),
            "output": self.output.as_dict(),
            "seed": self.seed,
        }
        if self.sweep is not None:
            out["sweep"] = [dict(s) for s in self.sweep]
        return out


def _parse_model(spec: dict, context: str, with_grid: bool):
    kind = spec.get("kind")
    grid = None
    if kind == "sphere":
        allowed = {"kind": True, "dim": True, "radius": False}
        if with_grid:
            allowed["grid"] = False
        _take(spec, allowed, context)
        dim = int(spec["dim"])
        radius = _positive(spec.get("radius", 1.0), f"{context}.radius")
        model = ManifoldModel.round_sphere(dim, radius)
        if with_grid:
            gspec = _take(
                spec.get("grid", {"kind": "equivariant"}),
                {"kind": True, "nodes": False},
                f"{context}.grid",
            )
            if gspec.get("kind") != "equivariant":
                raise ConfigError(f"{context}.grid: sphere domains use the equivariant grid")
            nodes = int(gspec.get("nodes", 400))
            grid = Equivariant1D(sphere_dim=dim, domain_radius=radius, node_count=nodes)
    elif kind == "torus":
        allowed = {"kind": True, "periods": True}
        if with_grid:
            allowed["grid"] = False
        _take(spec, allowed, context)
        model = ManifoldModel.flat_torus(spec["periods"])
        if with_grid:
            gspec = _take(
                spec.get("grid", {"kind": "periodic"}),
                {"kind": True, "resolution": False},
                f"{context}.grid",
            )
            if gspec.get("kind") != "periodic":
                raise ConfigError(f"{context}.grid: torus domains use the periodic grid")
            res = gspec.get("resolution", [32] * model.dim)
            if isinstance(res, int):
                res = [res] * model.dim
            if len(res) != model.dim:
                raise ConfigError(f"{context}.grid.resolution: wrong length")
            grid = PeriodicGrid(
                periods=tuple(model.periods), resolution=tuple(int(n) for n in res)
            )
    elif kind in ("cp", "fubini_study"):
        _take(spec, {"kind": True, "complex_dim": True, "holo_sec": False}, context)
        model = ManifoldModel.fubini_study(
            int(spec["complex_dim"]), float(spec.get("holo_sec", 4.0))
        )
        if with_grid:
            raise ConfigError(f"{context}: projective spaces are targets only")
    else:
        raise ConfigError(f"{context}.kind: expected sphere/torus/cp, got {kind!r}")
    return (model, grid) if with_grid else model


def build_weight(spec: dict, grid: DomainGrid) -> WeightFunction:
    kind = spec.get("kind")
    if kind == "constant":
        _take(spec, {"kind": True, "value": False}, "weight")
        return WeightFunction.constant(float(spec.get("value", 0.0)))
    if kind == "radial_cosine":
        _take(spec, {"kind": True, "amplitude": True}, "weight")
        if not isinstance(grid, Equivariant1D):
            raise ConfigError("weight: radial_cosine needs an equivariant grid")
        a = float(spec["amplitude"])
        return WeightFunction.from_radial(grid, lambda r: a * np.cos(r))
    if kind == "torus_cosine":
        _take(spec, {"kind": True, "amplitude": True, "axis": False}, "weight")
        if not isinstance(grid, PeriodicGrid):
            raise ConfigError("weight: torus_cosine needs a periodic grid")
        a = float(spec["amplitude"])
        axis = int(spec.get("axis", 0))
        if not 0 <= axis < grid.dim:
            raise ConfigError("weight.axis out of range")
        mesh = grid.meshgrid()
        vals = a * np.cos(2 * np.pi * mesh[axis] / grid.periods[axis])
        return WeightFunction.sampled(grid, vals)
    raise ConfigError(f"weight.kind: unsupported {kind!r}")


def _parse_flow(spec: dict) -> FlowParams:
    _take(spec, {k: False for k in
                 ("scheme", "dt", "t_max", "convergence_tol",
                  "blowup_guard", "monitor_stride")}, "flow")
    scheme = spec.get("scheme", "euler")
    if scheme not in SCHEMES:
        raise ConfigError(f"flow.scheme: expected one of {SCHEMES}")
    dt_raw = spec.get("dt", "auto")
    dt = None if dt_raw == "auto" else _positive(dt_raw, "flow.dt")
    stride = int(spec.get("monitor_stride", 1000))
    if stride < 1:
        raise ConfigError("flow.monitor_stride must be >= 1")
    return FlowParams(
        scheme=scheme,
        dt=dt,
        t_max=_positive(spec.get("t_max", 10.0), "flow.t_max"),
        convergence_tol=_positive(spec.get("convergence_tol", 1e-6),
                                  "flow.convergence_tol"),
        blowup_guard=_positive(spec.get("blowup_guard", 100.0),
                               "flow.blowup_guard"),
        monitor_stride=stride,
    )


def _parse_initial_map(spec: dict) -> dict:
    scenario = spec.get("scenario")
    if scenario not in SCENARIOS:
        raise ConfigError(f"initial_map.scenario: expected one of {SCENARIOS}")
    allowed = {"scenario": True, "require_two_nonneg": False}
    if scenario == "degree1_perturbed":
        allowed.update({"epsilon": True, "mode": True})
    elif scenario == "degree0_bump":
        allowed.update({"amplitude": True})
    elif scenario == "torus_linear":
        allowed.update({"matrix": True})
    elif scenario == "torus_to_sphere_bump":
        allowed.update({"amplitude": True})
    elif scenario == "explicit":
        allowed.update({"values": True, "boundary": False})
    _take(spec, allowed, "initial_map")
    return dict(spec)


def parse_config(doc: dict) -> RunConfig:
    """Validate a configuration document and build the run objects."""
    _take(doc, {"domain": True, "target": True, "weight": False,
                "initial_map": True, "flow": False, "tolerances": False,
                "output": False, "seed": False, "sweep": False}, "config")
    domain, grid = _parse_model(dict(doc["domain"]), "domain", with_grid=True)
    target = _parse_model(dict(doc["target"]), "target", with_grid=False)
    weight_spec = dict(doc.get("weight", {"kind": "constant", "value": 0.0}))
    initial_map = _parse_initial_map(dict(doc["initial_map"]))
    flow = _parse_flow(dict(doc.get("flow", {})))
    tol_spec = _take(dict(doc.get("tolerances", {})),
                     {"trivial_tol": False, "iso_tol": False}, "tolerances")
    tolerances = Tolerances(
        trivial_tol=_positive(tol_spec.get("trivial_tol", 1e-3),
                              "tolerances.trivial_tol"),
        iso_tol=_positive(tol_spec.get("iso_tol", 1e-3), "tolerances.iso_tol"),
    )
    out_spec = _take(dict(doc.get("output", {})),
                     {"dir": False, "prefix": False}, "output")
    output = OutputSpec(dir=str(out_spec.get("dir", "out")),
                        prefix=str(out_spec.get("prefix", "run")))
    seed = int(doc.get("seed", 0))

    sweep = None
    if "sweep" in doc:
        sweep = _parse_sweep(doc["sweep"])

    cfg = RunConfig(
        domain=domain, grid=grid, target=target, weight_spec=weight_spec,
        initial_map=initial_map, flow=flow, tolerances=tolerances,
        output=output, seed=seed, sweep=sweep,
    )
    # fail early on a weight/grid mismatch
    cfg.build_weight()
    return cfg


def _parse_sweep(spec) -> list[dict]:
    if not isinstance(spec, list) or not 1 <= len(spec) <= 2:
        raise ConfigError("sweep: expected a list of one or two parameter ranges")
    out = []
    for i, entry in enumerate(spec):
        _take(entry, {"path": True, "values": True}, f"sweep[{i}]")
        values = entry["values"]
        if not isinstance(values, list) or not values:
            raise ConfigError(f"sweep[{i}].values: expected a non-empty list")
        out.append({"path": str(entry["path"]), "values": list(values)})
    return out


def load_config(path: str | Path) -> RunConfig:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise ConfigError("config root must be an object")
    return parse_config(doc)
