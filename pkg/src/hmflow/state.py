"""Discretized map states and the nodal fields derived from them.

An equivariant state stores the radial profile psi_j at the interior nodes of
an Equivariant1D grid; pole values are implied by the boundary-condition
flag.  A periodic state stores one ambient-space point per grid node.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import SpecError
from .geometry import FUBINI_STUDY, SPHERE, TORUS, ManifoldModel, WeightFunction
from .grids import Equivariant1D, PeriodicGrid
from .pullback import equivariant_lambdas

DEGREE0 = "degree0"
DEGREE1 = "degree1"


def effective_sphere_radius(target: ManifoldModel) -> float:
    """Radius of the round sphere a flowable target is isometric to.
    CP^1 with holomorphic sectional curvature c is the sphere of radius
    1/sqrt(c)."""
    if target.kind == SPHERE:
        return target.radius
    if target.kind == FUBINI_STUDY and target.complex_dim == 1:
        return 1.0 / np.sqrt(target.holo_sec)
    raise SpecError(f"target {target.kind!r} has no sphere realization")


@dataclass
class MapState:
    grid: Equivariant1D | PeriodicGrid
    values: np.ndarray
    target: ManifoldModel
    phi: WeightFunction
    time: float = 0.0
    boundary: str = DEGREE1     # equivariant only

    @property
    def is_equivariant(self) -> bool:
        return isinstance(self.grid, Equivariant1D)

    def with_values(self, values: np.ndarray, time: float) -> "MapState":
        return replace(self, values=values, time=time)


# ---------------------------------------------------------------------------
# equivariant nodal fields


def pole_values(state: MapState) -> tuple[float, float]:
    if state.boundary == DEGREE1:
        return 0.0, np.pi
    return 0.0, 0.0


def psi_extended(state: MapState) -> np.ndarray:
    """Profile including the two pole values."""
    lo, hi = pole_values(state)
    return np.concatenate(([lo], state.values, [hi]))


def psi_derivatives(state: MapState):
    """(psi', psi'') at the interior nodes, centered second-order
    differences against the pole values."""
    h = state.grid.spacing
    pe = psi_extended(state)
    d1 = (pe[2:] - pe[:-2]) / (2.0 * h)
    d2 = (pe[2:] - 2.0 * pe[1:-1] + pe[:-2]) / h**2
    return d1, d2


def equivariant_lambda_fields(state: MapState):
    """(lambda_radial, lambda_tangential) arrays at the interior nodes."""
    grid: Equivariant1D = state.grid
    d1, _ = psi_derivatives(state)
    rho_n = effective_sphere_radius(state.target)
    return equivariant_lambdas(
        state.values, d1, grid.nodes, grid.sphere_dim,
        rho_n, grid.domain_radius,
    )


def equivariant_energy_density(state: MapState) -> np.ndarray:
    lam_r, lam_t = equivariant_lambda_fields(state)
    n = state.grid.sphere_dim
    return lam_r**2 + (n - 1) * lam_t**2


def equivariant_grad_df_sq(state: MapState) -> np.ndarray:
    """|grad dF|^2 at the interior nodes, from the closed-form second
    fundamental form of a rotationally symmetric map."""
    grid: Equivariant1D = state.grid
    n = grid.sphere_dim
    rho_m = grid.domain_radius
    rho_n = effective_sphere_radius(state.target)
    r = grid.nodes
    psi = state.values
    d1, d2 = psi_derivatives(state)
    sr, cr = np.sin(r), np.cos(r)
    sp, cp = np.sin(psi), np.cos(psi)
    W = d1 * cp - (cr / sr) * sp               # mixed radial-tangential part
    S = sr * cr * d1 - sp * cp                 # tangential-tangential part
    pref = rho_n**2 / rho_m**4
    return pref * (d2**2 + 2 * (n - 1) * (W / sr) ** 2 + (n - 1) * (S / sr**2) ** 2)


def equivariant_margins(state: MapState) -> np.ndarray:
    """2-nonnegativity margin 2 - l1^2 - l2^2 at each node."""
    lam_r, lam_t = equivariant_lambda_fields(state)
    n = state.grid.sphere_dim
    lr2, lt2 = lam_r**2, lam_t**2
    if n >= 3:
        # two largest among {lr, lt (multiplicity n-1)}
        top2 = np.where(lr2 >= lt2, lr2 + lt2, 2 * lt2)
    else:
        top2 = lr2 + lt2
    return 2.0 - top2


# ---------------------------------------------------------------------------
# periodic nodal fields


def periodic_jacobians(state: MapState) -> np.ndarray:
    """Per-node Jacobian dF, shape res + (ambient, dim), by centered
    differences with periodic wrap.  Torus-valued maps are differenced with
    the minimal-image convention so linear winding maps stay smooth."""
    grid: PeriodicGrid = state.grid
    F = state.values
    d = grid.dim
    hs = grid.spacing
    torus_target = state.target.kind == TORUS
    cols = []
    for a in range(d):
        up = np.roll(F, -1, axis=a)
        dn = np.roll(F, 1, axis=a)
        diff = up - dn
        if torus_target:
            diff = minimal_image(diff, state.target.periods)
        cols.append(diff / (2 * hs[a]))
    return np.stack(cols, axis=-1)


def minimal_image(diff: np.ndarray, periods) -> np.ndarray:
    out = diff.copy()
    for c, p in enumerate(periods):
        out[..., c] = (out[..., c] + p / 2.0) % p - p / 2.0
    return out


def periodic_singular_values(state: MapState) -> np.ndarray:
    """Per-node singular values, descending, zero-padded to the domain
    dimension; shape res + (dim,)."""
    jac = periodic_jacobians(state)
    d = state.grid.dim
    sv = np.linalg.svd(jac, compute_uv=False)
    if sv.shape[-1] < d:
        pad = [(0, 0)] * (sv.ndim - 1) + [(0, d - sv.shape[-1])]
        sv = np.pad(sv, pad)
    return sv


def periodic_energy_density(state: MapState) -> np.ndarray:
    sv = periodic_singular_values(state)
    return np.sum(sv**2, axis=-1)


def periodic_margins(state: MapState) -> np.ndarray:
    sv = periodic_singular_values(state)
    if sv.shape[-1] >= 2:
        return 2.0 - sv[..., 0] ** 2 - sv[..., 1] ** 2
    return 2.0 - sv[..., 0] ** 2


# ---------------------------------------------------------------------------
# dispatching field accessors


def energy_density_field(state: MapState) -> np.ndarray:
    if state.is_equivariant:
        return equivariant_energy_density(state)
    return periodic_energy_density(state)


def margin_field(state: MapState) -> np.ndarray:
    if state.is_equivariant:
        return equivariant_margins(state)
    return periodic_margins(state)


def max_lambda_field(state: MapState) -> np.ndarray:
    if state.is_equivariant:
        lam_r, lam_t = equivariant_lambda_fields(state)
        return np.maximum(lam_r, lam_t)
    return periodic_singular_values(state)[..., 0]
