"""Time integration of the weighted harmonic map heat flow
dF/dt = Delta F - <dF, dphi>.

Equivariant sphere-to-sphere runs reduce to a scalar radial PDE and go
through the compiled kernels; torus-domain runs step the ambient coordinates
extrinsically with per-stage reprojection onto the target.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .config import RunConfig
from .errors import BlowupDetected, CFLViolation, SpecError
from .geometry import SPHERE, TORUS, WeightFunction, embedding_data
from .grids import Equivariant1D, PeriodicGrid
from .monitors import (
    SERIES_COLUMNS,
    TimeSeries,
    TrajectoryWindow,
    grad_df_sup,
    min_margin,
    max_lambda,
    weighted_energy,
    window_residual_maxima,
)
from .state import (
    DEGREE0,
    DEGREE1,
    MapState,
    effective_sphere_radius,
    energy_density_field,
    minimal_image,
    periodic_jacobians,
    pole_values,
    psi_derivatives,
)

VERDICT_CONVERGED = "Converged"
VERDICT_TIMED_OUT = "TimedOut"
VERDICT_BLOWUP = "Blowup"


# ---------------------------------------------------------------------------
# tension field and step size


def tension_field(state: MapState) -> np.ndarray:
    """Weighted tension.  Equivariant states: the scalar radial component
    tau^psi per node.  Periodic states: the ambient tangential vector per
    node, shape res + (ambient,)."""
    if state.is_equivariant:
        return _equivariant_tension(state)
    return _periodic_tension(state)


def _equivariant_tension(state: MapState) -> np.ndarray:
    grid: Equivariant1D = state.grid
    n = grid.sphere_dim
    r = grid.nodes
    psi = state.values
    d1, d2 = psi_derivatives(state)
    phi1, _ = state.phi.radial_derivatives(grid)
    return (d2 + (n - 1) * (np.cos(r) / np.sin(r) * d1
                            - np.sin(psi) * np.cos(psi) / np.sin(r) ** 2)
            - phi1 * d1) / grid.domain_radius**2


def _periodic_tension(state: MapState) -> np.ndarray:
    grid: PeriodicGrid = state.grid
    F = state.values
    hs = grid.spacing
    torus_target = state.target.kind == TORUS
    lap = np.zeros_like(F)
    for a in range(grid.dim):
        up = np.roll(F, -1, axis=a) - F
        dn = F - np.roll(F, 1, axis=a)
        if torus_target:
            up = minimal_image(up, state.target.periods)
            dn = minimal_image(dn, state.target.periods)
        lap += (up - dn) / hs[a] ** 2
    if not torus_target:
        rho = effective_sphere_radius(state.target)
        # tangential part of the ambient Laplacian on the round sphere
        lap = lap - (np.sum(lap * F, axis=-1, keepdims=True) / rho**2) * F
    grad_phi, _ = state.phi.periodic_derivatives(grid)
    drift = np.einsum("...ka,...a->...k", periodic_jacobians(state), grad_phi)
    return lap - drift


def sup_tension(state: MapState) -> float:
    """Sup over nodes of the physical norm of the tension vector."""
    tau = tension_field(state)
    if state.is_equivariant:
        rho_n = effective_sphere_radius(state.target)
        return float(rho_n * np.max(np.abs(tau)))
    return float(np.max(np.linalg.norm(tau, axis=-1)))


def auto_dt(state: MapState) -> float:
    """Parabolic step bound 0.2 * h^2 / (2 d sup|dF|^2 + 1) with h the
    smallest physical node spacing and d the number of grid axes."""
    sup_e = float(np.max(energy_density_field(state)))
    if state.is_equivariant:
        grid: Equivariant1D = state.grid
        h2 = (grid.domain_radius * grid.spacing) ** 2
        d = 1
    else:
        h2 = float(np.min(state.grid.spacing)) ** 2
        d = state.grid.dim
    return kernels.CFL_SAFETY * h2 / (2.0 * d * sup_e + 1.0)


def step(state: MapState, dt: float | None = None,
         scheme: str = "euler") -> MapState:
    """One explicit step.  dt = None uses the automatic bound."""
    bound = auto_dt(state)
    if dt is None:
        dt = bound
    elif dt > 10.0 * bound:
        raise CFLViolation(f"dt = {dt} exceeds 10x the stability bound {bound}")
    if not np.all(np.isfinite(state.values)):
        raise BlowupDetected("state is already non-finite")
    if state.is_equivariant:
        advance = _equivariant_step
    else:
        advance = _periodic_step
    return advance(state, dt, scheme)


def _equivariant_step(state: MapState, dt: float, scheme: str) -> MapState:
    tau = _equivariant_tension(state)
    if scheme == "euler":
        new = state.values + dt * tau
    else:
        k1 = tau
        k2 = _equivariant_tension(state.with_values(state.values + 0.5 * dt * k1, state.time))
        k3 = _equivariant_tension(state.with_values(state.values + 0.5 * dt * k2, state.time))
        k4 = _equivariant_tension(state.with_values(state.values + dt * k3, state.time))
        new = state.values + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
    return state.with_values(new, state.time + dt)


def _periodic_step(state: MapState, dt: float, scheme: str) -> MapState:
    emb = embedding_data(state.target)

    def proj(F):
        return emb.project(F) if emb.radius is not None else F

    if scheme == "euler":
        new = proj(state.values + dt * _periodic_tension(state))
    else:
        F = state.values
        k1 = _periodic_tension(state)
        k2 = _periodic_tension(state.with_values(proj(F + 0.5 * dt * k1), state.time))
        k3 = _periodic_tension(state.with_values(proj(F + 0.5 * dt * k2), state.time))
        k4 = _periodic_tension(state.with_values(proj(F + dt * k3), state.time))
        new = proj(F + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4))
    return state.with_values(new, state.time + dt)


# ---------------------------------------------------------------------------
# initial data


def initial_map(config: RunConfig) -> tuple[MapState, float]:
    """Build the initial MapState for a configured scenario and report its
    2-nonnegativity margin."""
    spec = config.initial_map
    scenario = spec["scenario"]
    grid = config.grid
    phi = config.build_weight()
    target = config.target

    if scenario in ("identity", "constant", "degree1_perturbed", "degree0_bump"):
        if not isinstance(grid, Equivariant1D):
            raise SpecError(f"scenario {scenario!r} needs an equivariant grid")
        effective_sphere_radius(target)      # raises for unflowable targets
        r = grid.nodes
        if scenario == "identity":
            values, boundary = r.copy(), DEGREE1
        elif scenario == "constant":
            values, boundary = np.zeros_like(r), DEGREE0
        elif scenario == "degree1_perturbed":
            eps = float(spec["epsilon"])
            mode = int(spec["mode"])
            if mode < 1:
                raise SpecError("degree1_perturbed: mode must be >= 1")
            values, boundary = r + eps * np.sin(mode * r), DEGREE1
        else:
            amp = float(spec["amplitude"])
            values, boundary = amp * np.sin(r), DEGREE0
        state = MapState(grid=grid, values=values, target=target, phi=phi,
                         boundary=boundary)
    elif scenario == "torus_linear":
        state = _torus_linear_state(config, phi)
    elif scenario == "torus_to_sphere_bump":
        state = _torus_bump_state(config, phi)
    elif scenario == "explicit":
        values = np.asarray(spec["values"], dtype=float)
        if isinstance(grid, Equivariant1D):
            if values.shape != (grid.num_nodes,):
                raise SpecError("explicit: values shape does not match the grid")
        else:
            emb = embedding_data(target)
            want = tuple(grid.resolution) + (emb.ambient_dim,)
            if values.shape != want:
                raise SpecError(f"explicit: values shape must be {want}")
        state = MapState(grid=grid, values=values, target=target, phi=phi,
                         boundary=spec.get("boundary", DEGREE1))
    else:    # pragma: no cover - config parsing rejects unknown scenarios
        raise SpecError(f"unknown scenario {scenario!r}")

    if not np.all(np.isfinite(state.values)):
        raise SpecError("initial map contains non-finite values")
    margin = min_margin(state)
    if spec.get("require_two_nonneg") and margin < 0.0:
        raise SpecError(
            f"initial map violates 2-nonnegativity (margin {margin:.6g})"
        )
    return state, margin


def _torus_linear_state(config: RunConfig, phi: WeightFunction) -> MapState:
    grid = config.grid
    target = config.target
    if not isinstance(grid, PeriodicGrid) or target.kind != TORUS:
        raise SpecError("torus_linear needs a torus domain and a torus target")
    M = np.asarray(config.initial_map["matrix"], dtype=float)
    if M.shape != (target.dim, grid.dim):
        raise SpecError(f"torus_linear: matrix must be {target.dim}x{grid.dim}")
    # winding compatibility: each domain period must map to a lattice vector
    for a in range(grid.dim):
        image = M[:, a] * grid.periods[a]
        ratio = image / np.asarray(target.periods)
        if np.max(np.abs(ratio - np.round(ratio))) > 1e-9:
            raise SpecError("torus_linear: matrix does not respect the lattices")
    mesh = np.stack(grid.meshgrid(), axis=-1)
    values = np.einsum("ka,...a->...k", M, mesh)
    return MapState(grid=grid, values=values, target=target, phi=phi)


def _torus_bump_state(config: RunConfig, phi: WeightFunction) -> MapState:
    grid = config.grid
    target = config.target
    if not isinstance(grid, PeriodicGrid) or grid.dim != 2:
        raise SpecError("torus_to_sphere_bump needs a 2-D torus domain")
    rho = effective_sphere_radius(target)
    emb = embedding_data(target)
    if emb.ambient_dim != 3:
        raise SpecError("torus_to_sphere_bump needs a 2-sphere target")
    amp = float(config.initial_map["amplitude"])
    x, y = grid.meshgrid()
    lx, ly = grid.periods
    v = np.stack([
        amp * np.sin(2 * np.pi * x / lx),
        amp * np.sin(2 * np.pi * y / ly),
        np.ones_like(x),
    ], axis=-1)
    values = rho * v / np.linalg.norm(v, axis=-1, keepdims=True)
    return MapState(grid=grid, values=values, target=target, phi=phi)


# ---------------------------------------------------------------------------
# run loop


@dataclass
class RunResult:
    final: MapState
    series: TimeSeries
    verdict: str
    steps: int
    dt_initial: float
    initial_margin: float
    windows: list[tuple[float, TrajectoryWindow]] = field(default_factory=list)


def run(config: RunConfig, capture_times: list[float] | None = None) -> RunResult:
    """Integrate the flow described by config until convergence (sup physical
    tension below flow.convergence_tol), t_max, or blowup.  Monitor rows are
    sampled every flow.monitor_stride steps.  capture_times requests
    three-slice trajectory windows near the given times (equivariant runs)."""
    state, margin0 = initial_map(config)
    if state.is_equivariant:
        return _run_equivariant(config, state, margin0, capture_times or [])
    return _run_periodic(config, state, margin0)


def _monitor_row(state: MapState, residuals=(np.nan, np.nan)) -> dict:
    equivariant = state.is_equivariant
    return {
        "t": state.time,
        "energy_phi": weighted_energy(state),
        "min_margin": min_margin(state),
        "max_lambda": max_lambda(state),
        "sup_tension": sup_tension(state),
        "bochner_residual_max": residuals[0],
        "alpha_residual_max": residuals[1],
        "grad_df_sup": grad_df_sup(state) if equivariant else np.nan,
    }


def _row_finite(row: dict) -> bool:
    return all(np.isfinite(row[k]) for k in
               ("energy_phi", "min_margin", "max_lambda", "sup_tension"))


def _run_equivariant(config: RunConfig, state: MapState, margin0: float,
                     capture_times: list[float]) -> RunResult:
    grid: Equivariant1D = state.grid
    flow = config.flow
    r = grid.nodes
    pole_lo, pole_hi = pole_values(state)
    cot_r = np.cos(r) / np.sin(r)
    inv_sin2 = 1.0 / np.sin(r) ** 2
    phi1, _ = state.phi.radial_derivatives(grid)
    rho_n = effective_sphere_radius(state.target)
    ratio2 = (rho_n / grid.domain_radius) ** 2
    dt_fixed = -1.0 if flow.dt is None else flow.dt
    scheme = kernels.SCHEME_RK4 if flow.scheme == "rk4" else kernels.SCHEME_EULER

    dt0 = auto_dt(state)
    if flow.dt is not None and flow.dt > 10.0 * dt0:
        raise CFLViolation(
            f"flow.dt = {flow.dt} exceeds 10x the stability bound {dt0}"
        )

    captures = sorted(capture_times)
    next_capture = 0
    windows: list[tuple[float, TrajectoryWindow]] = []
    rows = [_monitor_row(state)]
    psi = state.values.copy()
    t = 0.0
    total_steps = 0
    last_dt = dt_fixed if dt_fixed > 0 else dt0
    verdict = VERDICT_TIMED_OUT
    # fixed dt runs take an exact step count so refinement comparisons land
    # on the same final time
    fixed_total = (int(np.ceil(flow.t_max / dt_fixed - 1e-9))
                   if dt_fixed > 0 else None)

    while (t < flow.t_max if fixed_total is None
           else total_steps < fixed_total):
        # shorten the chunk to land close to the next capture time or t_max
        horizon = flow.t_max
        capture_pending = next_capture < len(captures)
        if capture_pending:
            horizon = min(horizon, captures[next_capture])
        est = int(np.ceil((horizon - t) / last_dt)) if last_dt > 0 else flow.monitor_stride
        chunk = max(2 if capture_pending else 1, min(flow.monitor_stride, est))
        if fixed_total is not None:
            chunk = max(1, min(chunk, fixed_total - total_steps))

        status, done, t_pp, t_p, t_new, psi_pp, psi_p, psi_new, last_dt = (
            kernels.equiv_advance(
                psi, pole_lo, pole_hi, grid.spacing, cot_r, inv_sin2, phi1,
                grid.sphere_dim, grid.domain_radius, ratio2,
                chunk, dt_fixed, flow.blowup_guard, scheme, t,
            )
        )
        total_steps += done
        psi, t = psi_new, t_new

        if status == kernels.STATUS_BLOWUP or not np.all(np.isfinite(psi)):
            verdict = VERDICT_BLOWUP
            break

        state = state.with_values(psi, t)
        residuals = (np.nan, np.nan)
        window = None
        if done >= 2 and t_pp < t_p < t_new:
            window = TrajectoryWindow(
                times=(t_pp, t_p, t_new),
                slices=(psi_pp, psi_p, psi_new),
                template=state,
            )
            residuals = window_residual_maxima(window)
        row = _monitor_row(state, residuals)
        if not _row_finite(row):
            verdict = VERDICT_BLOWUP
            break
        rows.append(row)

        while next_capture < len(captures) and captures[next_capture] <= t:
            if window is not None:
                windows.append((captures[next_capture], window))
            next_capture += 1

        if row["sup_tension"] < flow.convergence_tol:
            verdict = VERDICT_CONVERGED
            break

    return RunResult(
        final=state.with_values(psi, t),
        series=TimeSeries.from_rows(rows),
        verdict=verdict,
        steps=total_steps,
        dt_initial=dt0 if dt_fixed <= 0 else dt_fixed,
        initial_margin=margin0,
        windows=windows,
    )


def _run_periodic(config: RunConfig, state: MapState, margin0: float) -> RunResult:
    flow = config.flow
    dt0 = auto_dt(state)
    if flow.dt is not None and flow.dt > 10.0 * dt0:
        raise CFLViolation(
            f"flow.dt = {flow.dt} exceeds 10x the stability bound {dt0}"
        )
    rows = [_monitor_row(state)]
    total_steps = 0
    verdict = VERDICT_TIMED_OUT

    while state.time < flow.t_max:
        blew_up = False
        for _ in range(flow.monitor_stride):
            if state.time >= flow.t_max:
                break
            sup_e = float(np.max(energy_density_field(state)))
            if not np.isfinite(sup_e) or sup_e > flow.blowup_guard:
                blew_up = True
                break
            dt = flow.dt if flow.dt is not None else auto_dt(state)
            state = _periodic_step(state, dt, flow.scheme)
            total_steps += 1
        if blew_up or not np.all(np.isfinite(state.values)):
            verdict = VERDICT_BLOWUP
            break
        row = _monitor_row(state)
        if not _row_finite(row):
            verdict = VERDICT_BLOWUP
            break
        rows.append(row)
        if row["sup_tension"] < flow.convergence_tol:
            verdict = VERDICT_CONVERGED
            break

    return RunResult(
        final=state,
        series=TimeSeries.from_rows(rows),
        verdict=verdict,
        steps=total_steps,
        dt_initial=dt0 if flow.dt is None else flow.dt,
        initial_margin=margin0,
    )
