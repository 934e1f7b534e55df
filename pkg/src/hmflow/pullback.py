"""Pointwise linear algebra of the map differential: singular values, the
contraction tensor g - F*h, and the contraction-class flags."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import DegenerateGram, PoleEvaluation

ALGEBRA_TOL = 1e-12
GRAM_MIN_EIG = 1e-14


@dataclass(frozen=True)
class DifferentialSample:
    """The differential of a map at a point, with the two Gram matrices of the
    chosen frames.  dF maps domain frame (n columns) to target frame (m rows)."""

    dF: np.ndarray        # (m, n)
    g_gram: np.ndarray    # (n, n) SPD
    h_gram: np.ndarray    # (m, m) SPD

    def __post_init__(self):
        dF = np.atleast_2d(np.asarray(self.dF, dtype=float))
        object.__setattr__(self, "dF", dF)
        m, n = dF.shape
        g = np.asarray(self.g_gram, dtype=float)
        h = np.asarray(self.h_gram, dtype=float)
        if g.shape != (n, n) or h.shape != (m, m):
            raise ValueError("Gram shapes do not match dF")
        for name, mat in (("g", g), ("h", h)):
            if np.max(np.abs(mat - mat.T)) > 1e-10:
                raise DegenerateGram(f"{name} Gram is not symmetric")
            if np.linalg.eigvalsh(mat)[0] <= GRAM_MIN_EIG:
                raise DegenerateGram(f"{name} Gram is not positive definite")
        object.__setattr__(self, "g_gram", 0.5 * (g + g.T))
        object.__setattr__(self, "h_gram", 0.5 * (h + h.T))

    @staticmethod
    def orthonormal(dF: np.ndarray) -> "DifferentialSample":
        dF = np.atleast_2d(np.asarray(dF, dtype=float))
        m, n = dF.shape
        return DifferentialSample(dF=dF, g_gram=np.eye(n), h_gram=np.eye(m))


@dataclass(frozen=True)
class PullbackReport:
    """Per-point summary: singular values (descending, zero-padded to the
    domain dimension), eigenvalues of g - F*h relative to g (ascending), the
    2-nonnegativity margin, and the contraction-class flags."""

    lambdas: tuple[float, ...]
    alpha_eigs: tuple[float, ...]
    two_nonneg_margin: float
    distance_nonincreasing: bool
    two_nonnegative: bool
    area_nonincreasing: bool
    energy_density: float


def _report_from_lambdas(lambdas: np.ndarray, tol: float = ALGEBRA_TOL) -> PullbackReport:
    lam = np.sort(np.abs(lambdas))[::-1]
    alpha = np.sort(1.0 - lam**2)
    n = lam.size
    if n >= 2:
        margin = 2.0 - lam[0] ** 2 - lam[1] ** 2
        area_ok = lam[0] * lam[1] <= 1.0 + tol
    else:
        # phantom zero singular value for 1-dimensional domains
        margin = 1.0 + alpha[0]
        area_ok = True
    return PullbackReport(
        lambdas=tuple(float(v) for v in lam),
        alpha_eigs=tuple(float(v) for v in alpha),
        two_nonneg_margin=float(margin),
        distance_nonincreasing=bool(lam[0] <= 1.0 + tol),
        two_nonnegative=bool(margin >= -tol),
        area_nonincreasing=bool(area_ok),
        energy_density=float(np.sum(lam**2)),
    )


def analyze_differential(sample: DifferentialSample) -> PullbackReport:
    """Singular values of dF with respect to the two inner products, and the
    derived contraction report.

    lambda_i^2 are the eigenvalues of the pull-back Gram dF^T h dF relative
    to g; equivalently the squared singular values of dF between the metric
    inner products."""
    dF, g, h = sample.dF, sample.g_gram, sample.h_gram
    n = g.shape[0]
    M = dF.T @ h @ dF
    lam_sq = scipy.linalg.eigh(M, g, eigvals_only=True)
    lam_sq = np.clip(lam_sq, 0.0, None)
    lam = np.sqrt(lam_sq)
    if lam.size < n:                  # cannot happen: M is n x n
        lam = np.pad(lam, (0, n - lam.size))
    return _report_from_lambdas(lam)


def equivariant_lambdas(psi, dpsi, r, n, target_radius, domain_radius):
    """Vectorized singular values of the rotationally symmetric map
    (r, w) -> (psi(r), w) between round spheres: |psi'| * rho_N/rho_M
    radially and rho_N sin(psi) / (rho_M sin r) tangentially with
    multiplicity n - 1.  Returns (lambda_radial, lambda_tangential)."""
    ratio = target_radius / domain_radius
    lam_rad = np.abs(dpsi) * ratio
    lam_tan = ratio * np.sin(psi) / np.sin(r)
    return lam_rad, lam_tan


def analyze_equivariant(psi: float, dpsi: float, r: float, n: int,
                        target_radius: float = 1.0,
                        domain_radius: float = 1.0) -> PullbackReport:
    """PullbackReport of an equivariant sphere-to-sphere map at radius r."""
    if n < 2:
        raise ValueError("equivariant reduction needs n >= 2")
    if not (0.0 < r < np.pi):
        raise PoleEvaluation(f"radial coordinate {r} outside (0, pi)")
    lam_rad, lam_tan = equivariant_lambdas(
        psi, dpsi, r, n, target_radius, domain_radius
    )
    lam = np.concatenate(([lam_rad], np.full(n - 1, lam_tan)))
    return _report_from_lambdas(lam)
