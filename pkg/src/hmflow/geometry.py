"""Model manifolds: metrics, curvature in an orthonormal frame, weight
functions, and the curvature-hypothesis checkers.

Curvature sign convention: riemann[i, j, k, l] = <R(e_i, e_j) e_k, e_l>, so
that riemann[i, k, k, i] is the sectional curvature of the (e_i, e_k) plane
and ricci[i, j] = sum_k riemann[i, k, k, j].
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import IncompatibleWeight, UnsupportedEmbedding
from .grids import DomainGrid, Equivariant1D, PeriodicGrid

SPHERE = "sphere"
TORUS = "torus"
FUBINI_STUDY = "fubini_study"


@dataclass(frozen=True)
class ManifoldModel:
    """A homogeneous model space: round sphere, flat torus, or complex
    projective space with the Fubini-Study metric."""

    kind: str
    dim: int = 0                       # real dimension for sphere
    radius: float = 1.0                # sphere radius
    periods: tuple[float, ...] = ()    # torus periods
    complex_dim: int = 0
    holo_sec: float = 4.0              # holomorphic sectional curvature

    @staticmethod
    def round_sphere(dim: int, radius: float = 1.0) -> "ManifoldModel":
        if dim < 1 or radius <= 0:
            raise ValueError("sphere needs dim >= 1 and radius > 0")
        return ManifoldModel(kind=SPHERE, dim=dim, radius=radius)

    @staticmethod
    def flat_torus(periods) -> "ManifoldModel":
        periods = tuple(float(p) for p in periods)
        if not periods or any(p <= 0 for p in periods):
            raise ValueError("torus needs positive periods")
        return ManifoldModel(kind=TORUS, dim=len(periods), periods=periods)

    @staticmethod
    def fubini_study(complex_dim: int, holo_sec: float = 4.0) -> "ManifoldModel":
        if complex_dim < 1 or holo_sec <= 0:
            raise ValueError("needs complex_dim >= 1 and holo_sec > 0")
        return ManifoldModel(
            kind=FUBINI_STUDY, dim=2 * complex_dim,
            complex_dim=complex_dim, holo_sec=holo_sec,
        )

    @property
    def real_dim(self) -> int:
        return self.dim

    def describe(self) -> dict:
        if self.kind == SPHERE:
            return {"kind": SPHERE, "dim": self.dim, "radius": self.radius}
        if self.kind == TORUS:
            return {"kind": TORUS, "periods": list(self.periods)}
        return {
            "kind": FUBINI_STUDY,
            "complex_dim": self.complex_dim,
            "holo_sec": self.holo_sec,
        }


@dataclass(frozen=True)
class CurvatureFrameData:
    """Full curvature tensor of a homogeneous model in an adapted orthonormal
    frame (point-independent)."""

    frame_dim: int
    riemann: np.ndarray   # shape (d, d, d, d)
    ricci: np.ndarray     # shape (d, d)

    def symmetry_defects(self) -> dict[str, float]:
        """Max violations of the four algebraic curvature identities."""
        R = self.riemann
        return {
            "antisym_first": float(np.max(np.abs(R + R.transpose(1, 0, 2, 3)))),
            "antisym_last": float(np.max(np.abs(R + R.transpose(0, 1, 3, 2)))),
            "pair_exchange": float(np.max(np.abs(R - R.transpose(2, 3, 0, 1)))),
            "first_bianchi": float(np.max(np.abs(
                R + R.transpose(1, 2, 0, 3) + R.transpose(2, 0, 1, 3)
            ))),
            "ricci_trace": float(np.max(np.abs(
                self.ricci - np.einsum("ikkj->ij", R)
            ))),
        }


def _complex_structure(real_dim: int) -> np.ndarray:
    """J in the adapted frame: J e_{2a} = e_{2a+1}. J[a, b] = <J e_a, e_b>."""
    J = np.zeros((real_dim, real_dim))
    for a in range(0, real_dim, 2):
        J[a, a + 1] = 1.0
        J[a + 1, a] = -1.0
    return J


def curvature_tensor(model: ManifoldModel) -> CurvatureFrameData:
    """Curvature tensor in an orthonormal frame.

    Constant curvature c:   R(X,Y)Z = c (<Y,Z> X - <X,Z> Y).
    Fubini-Study, holomorphic sectional curvature c:
        R(X,Y)Z = (c/4)(<Y,Z> X - <X,Z> Y + <JY,Z> JX - <JX,Z> JY
                        - 2 <JX,Y> JZ).
    """
    d = model.real_dim
    I = np.eye(d)
    if model.kind == SPHERE:
        c = 1.0 / model.radius**2
        R = c * (np.einsum("jk,il->ijkl", I, I) - np.einsum("ik,jl->ijkl", I, I))
    elif model.kind == TORUS:
        R = np.zeros((d, d, d, d))
    else:
        c = model.holo_sec
        J = _complex_structure(d)
        R = (c / 4.0) * (
            np.einsum("jk,il->ijkl", I, I)
            - np.einsum("ik,jl->ijkl", I, I)
            + np.einsum("jk,il->ijkl", J, J)
            - np.einsum("ik,jl->ijkl", J, J)
            - 2.0 * np.einsum("ij,kl->ijkl", J, J)
        )
    ricci = np.einsum("ikkj->ij", R)
    return CurvatureFrameData(frame_dim=d, riemann=R, ricci=ricci)


def _random_two_frames(d: int, num: int, rng: np.random.Generator):
    """Random orthonormal pairs (X, Y) in R^d."""
    raw = rng.standard_normal((num, d, 2))
    q, _ = np.linalg.qr(raw)
    return q[:, :, 0], q[:, :, 1]


def sectional_curvature(curv: CurvatureFrameData, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    """sec of the plane spanned by orthonormal X, Y (batched)."""
    return np.einsum("ijkl,...i,...j,...k,...l->...", curv.riemann, X, Y, Y, X)


def sectional_range(model: ManifoldModel, num_samples: int, seed: int = 0):
    """Min/max sectional curvature over random orthonormal 2-planes, unioned
    with the analytically extremal planes of each model kind."""
    if num_samples < 1:
        raise ValueError("num_samples must be >= 1")
    d = model.real_dim
    if model.kind == SPHERE:
        c = 1.0 / model.radius**2
        return (c, c)
    if model.kind == TORUS:
        return (0.0, 0.0)
    c = model.holo_sec
    if d == 2:
        # CP^1: a single 2-plane, J-invariant.
        return (c, c)
    curv = curvature_tensor(model)
    rng = np.random.default_rng(seed)
    X, Y = _random_two_frames(d, num_samples, rng)
    secs = sectional_curvature(curv, X, Y)
    # analytic extremes: totally real plane (e_0, e_2) and J-invariant (e_0, e_1)
    lo = min(float(secs.min()), c / 4.0)
    hi = max(float(secs.max()), c)
    return (lo, hi)


def ricci_extremes(model: ManifoldModel):
    """Extreme eigenvalues of the Ricci form on unit vectors."""
    eigs = np.linalg.eigvalsh(curvature_tensor(model).ricci)
    return (float(eigs[0]), float(eigs[-1]))


# ---------------------------------------------------------------------------
# weight functions


@dataclass(frozen=True)
class WeightFunction:
    """Weight phi on the domain: constant, or sampled at grid nodes.

    Grid-sampled weights on an equivariant grid are radial, phi = phi(r);
    on a periodic grid they are arbitrary nodal samples."""

    kind: str                     # "constant" | "grid"
    value: float = 0.0
    grid: DomainGrid | None = None
    values: np.ndarray | None = None

    @staticmethod
    def constant(value: float = 0.0) -> "WeightFunction":
        return WeightFunction(kind="constant", value=float(value))

    @staticmethod
    def sampled(grid: DomainGrid, values: np.ndarray) -> "WeightFunction":
        values = np.asarray(values, dtype=float)
        if isinstance(grid, Equivariant1D):
            if values.shape != (grid.num_nodes,):
                raise IncompatibleWeight("radial weight shape does not match grid")
        else:
            if values.shape != tuple(grid.resolution):
                raise IncompatibleWeight("nodal weight shape does not match grid")
        return WeightFunction(kind="grid", grid=grid, values=values)

    @staticmethod
    def from_radial(grid: Equivariant1D, func: Callable[[np.ndarray], np.ndarray]) -> "WeightFunction":
        return WeightFunction.sampled(grid, func(grid.nodes))

    @property
    def is_constant(self) -> bool:
        return self.kind == "constant"

    def node_values(self, grid: DomainGrid) -> np.ndarray:
        if self.is_constant:
            if isinstance(grid, Equivariant1D):
                return np.full(grid.num_nodes, self.value)
            return np.full(tuple(grid.resolution), self.value)
        self._check_grid(grid)
        return self.values

    def _check_grid(self, grid: DomainGrid):
        if not self.is_constant and self.grid != grid:
            raise IncompatibleWeight("weight sampled on a different grid")

    # -- finite-difference accessors ------------------------------------

    def radial_derivatives(self, grid: Equivariant1D):
        """(phi', phi'') at the radial nodes, second-order differences
        (one-sided at the first and last node)."""
        if self.is_constant:
            z = np.zeros(grid.num_nodes)
            return z, z.copy()
        self._check_grid(grid)
        h = grid.spacing
        v = self.values
        d1 = np.gradient(v, h, edge_order=2)
        d2 = np.empty_like(v)
        d2[1:-1] = (v[2:] - 2 * v[1:-1] + v[:-2]) / h**2
        # second-order one-sided second differences at the ends
        d2[0] = (2 * v[0] - 5 * v[1] + 4 * v[2] - v[3]) / h**2
        d2[-1] = (2 * v[-1] - 5 * v[-2] + 4 * v[-3] - v[-4]) / h**2
        return d1, d2

    def periodic_derivatives(self, grid: PeriodicGrid):
        """(grad, hess) at the nodes of a periodic grid, centered differences
        with wrap-around.  grad has shape res + (d,), hess res + (d, d)."""
        d = grid.dim
        res = tuple(grid.resolution)
        if self.is_constant:
            return np.zeros(res + (d,)), np.zeros(res + (d, d))
        self._check_grid(grid)
        v = self.values
        hs = grid.spacing
        grad = np.empty(res + (d,))
        hess = np.empty(res + (d, d))
        for a in range(d):
            up = np.roll(v, -1, axis=a)
            dn = np.roll(v, 1, axis=a)
            grad[..., a] = (up - dn) / (2 * hs[a])
            hess[..., a, a] = (up - 2 * v + dn) / hs[a] ** 2
        if d == 2:
            pp = np.roll(np.roll(v, -1, axis=0), -1, axis=1)
            pm = np.roll(np.roll(v, -1, axis=0), 1, axis=1)
            mp = np.roll(np.roll(v, 1, axis=0), -1, axis=1)
            mm = np.roll(np.roll(v, 1, axis=0), 1, axis=1)
            mixed = (pp - pm - mp + mm) / (4 * hs[0] * hs[1])
            hess[..., 0, 1] = mixed
            hess[..., 1, 0] = mixed
        return grad, hess


def weighted_ricci_min(model: ManifoldModel, grid: DomainGrid | None,
                       phi: WeightFunction) -> float:
    """Min over nodes and unit tangent vectors of (Ric + Hess phi)(u, u)."""
    ric_min = ricci_extremes(model)[0]
    if phi.is_constant:
        return ric_min
    if model.kind == SPHERE:
        if not isinstance(grid, Equivariant1D):
            raise IncompatibleWeight("radial weight needs an equivariant grid")
        phi._check_grid(grid)
        n, rho = model.dim, model.radius
        r = grid.nodes
        d1, d2 = phi.radial_derivatives(grid)
        # Hessian of a radial function has eigenvalues phi'' (radial) and
        # phi' cot r (tangential), scaled by 1/rho^2 in the orthonormal frame.
        hess_rad = d2 / rho**2
        hess_tan = d1 * np.cos(r) / np.sin(r) / rho**2
        base = (n - 1) / rho**2
        eigs = np.minimum(base + hess_rad, base + hess_tan)
        return float(eigs.min())
    if model.kind == TORUS:
        if not isinstance(grid, PeriodicGrid):
            raise IncompatibleWeight("torus weight needs a periodic grid")
        phi._check_grid(grid)
        _, hess = phi.periodic_derivatives(grid)
        eigs = np.linalg.eigvalsh(hess)
        return float(eigs.min())
    raise IncompatibleWeight("nonconstant weights unsupported on this model")


# ---------------------------------------------------------------------------
# hypothesis checking


@dataclass(frozen=True)
class HypothesisReport:
    target_sec_positive: bool
    target_sec_nonnegative: bool
    ricci_comparison_holds: bool
    target_sec_min: float
    target_sec_max: float
    domain_weighted_ricci_min: float
    target_ricci_max: float
    ricci_margin: float

    @property
    def strict_ok(self) -> bool:
        return self.target_sec_positive and self.ricci_comparison_holds

    @property
    def weak_ok(self) -> bool:
        return self.target_sec_nonnegative and self.ricci_comparison_holds

    def as_dict(self) -> dict:
        return {
            "target_sec_positive": self.target_sec_positive,
            "target_sec_nonnegative": self.target_sec_nonnegative,
            "ricci_comparison_holds": self.ricci_comparison_holds,
            "target_sec_min": self.target_sec_min,
            "target_sec_max": self.target_sec_max,
            "domain_weighted_ricci_min": self.domain_weighted_ricci_min,
            "target_ricci_max": self.target_ricci_max,
            "ricci_margin": self.ricci_margin,
            "strict_ok": self.strict_ok,
            "weak_ok": self.weak_ok,
        }


def check_hypotheses(domain: ManifoldModel, target: ManifoldModel,
                     phi: WeightFunction, grid: DomainGrid | None = None,
                     num_samples: int = 10_000, seed: int = 0) -> HypothesisReport:
    """Check the curvature hypotheses: positive (or nonnegative) sectional
    curvature of the target, and the weighted-Ricci comparison
    min Ric^phi(domain) >= max Ric(target)."""
    sec_lo, sec_hi = sectional_range(target, num_samples, seed=seed)
    wmin = weighted_ricci_min(domain, grid, phi)
    ric_max = ricci_extremes(target)[1]
    margin = wmin - ric_max
    return HypothesisReport(
        target_sec_positive=bool(sec_lo > 0),
        target_sec_nonnegative=bool(sec_lo >= 0),
        ricci_comparison_holds=bool(margin >= -1e-12),
        target_sec_min=float(sec_lo),
        target_sec_max=float(sec_hi),
        domain_weighted_ricci_min=float(wmin),
        target_ricci_max=float(ric_max),
        ricci_margin=float(margin),
    )


# ---------------------------------------------------------------------------
# embeddings


@dataclass(frozen=True)
class EmbeddingDescriptor:
    """Extrinsic data used by the periodic-grid flow: ambient dimension, the
    closest-point projection, the tangent projector, and the second
    fundamental form A(X, Y)."""

    ambient_dim: int
    radius: float | None             # sphere radius, None for a torus
    project: Callable[[np.ndarray], np.ndarray]
    tangent_projector: Callable[[np.ndarray], np.ndarray]
    second_fundamental: Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]


def embedding_data(model: ManifoldModel) -> EmbeddingDescriptor:
    """Embedding of a round sphere in R^{n+1} or a flat torus in its covering
    coordinates.  CP^1 is handled as the round sphere of radius
    1/sqrt(holo_sec)."""
    if model.kind == FUBINI_STUDY:
        if model.complex_dim >= 2:
            raise UnsupportedEmbedding(
                "no flow embedding for complex projective spaces of complex dim >= 2"
            )
        model = ManifoldModel.round_sphere(2, 1.0 / np.sqrt(model.holo_sec))
    if model.kind == SPHERE:
        rho = model.radius
        k = model.dim + 1

        def project(p):
            norm = np.linalg.norm(p, axis=-1, keepdims=True)
            return rho * p / norm

        def tangent_projector(q):
            return np.eye(k) - np.outer(q, q) / rho**2

        def second_fundamental(q, X, Y):
            return -(np.sum(X * Y, axis=-1, keepdims=True) / rho**2) * q

        return EmbeddingDescriptor(
            ambient_dim=k, radius=rho, project=project,
            tangent_projector=tangent_projector,
            second_fundamental=second_fundamental,
        )
    if model.kind == TORUS:
        k = model.dim

        def project(p):
            return p

        def tangent_projector(q):
            return np.eye(k)

        def second_fundamental(q, X, Y):
            return np.zeros_like(q)

        return EmbeddingDescriptor(
            ambient_dim=k, radius=None, project=project,
            tangent_projector=tangent_projector,
            second_fundamental=second_fundamental,
        )
    raise UnsupportedEmbedding(f"unsupported model kind {model.kind!r}")
