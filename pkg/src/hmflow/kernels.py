"""Inner integration loops for the equivariant radial flow.

Compiled with numba when available; the same code runs (slowly) as plain
Python otherwise.  The loops are deliberately allocation-light: desk-scale
runs take millions of explicit steps.
"""

from __future__ import annotations

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]

        def deco(f):
            return f

        return deco


STATUS_OK = 0
STATUS_BLOWUP = 1

SCHEME_EULER = 0
SCHEME_RK4 = 1

CFL_SAFETY = 0.2


@njit(cache=True)
def equiv_tension(psi, pole_lo, pole_hi, h, cot_r, inv_sin2, phi1,
                  nm1, inv_rho_m2, out):
    """Radial tension field; returns sup of |psi'| for reuse."""
    J1 = psi.shape[0]
    sup_d1 = 0.0
    for j in range(J1):
        left = psi[j - 1] if j > 0 else pole_lo
        right = psi[j + 1] if j < J1 - 1 else pole_hi
        d1 = (right - left) / (2.0 * h)
        d2 = (right - 2.0 * psi[j] + left) / (h * h)
        sp = np.sin(psi[j])
        cp = np.cos(psi[j])
        out[j] = (d2 + nm1 * (cot_r[j] * d1 - sp * cp * inv_sin2[j])
                  - phi1[j] * d1) * inv_rho_m2
        ad1 = abs(d1)
        if ad1 > sup_d1:
            sup_d1 = ad1
    return sup_d1


@njit(cache=True)
def equiv_sup_energy(psi, pole_lo, pole_hi, h, inv_sin2, nm1, ratio2):
    """Sup over nodes of the energy density sum(lambda_i^2)."""
    J1 = psi.shape[0]
    sup_e = 0.0
    for j in range(J1):
        left = psi[j - 1] if j > 0 else pole_lo
        right = psi[j + 1] if j < J1 - 1 else pole_hi
        d1 = (right - left) / (2.0 * h)
        sp = np.sin(psi[j])
        e = ratio2 * (d1 * d1 + nm1 * sp * sp * inv_sin2[j])
        if e > sup_e or not np.isfinite(e):
            sup_e = e
    return sup_e


@njit(cache=True)
def equiv_advance(psi, pole_lo, pole_hi, h, cot_r, inv_sin2, phi1,
                  n, rho_m, ratio2, nsteps, dt_fixed, guard, scheme, t0):
    """Advance nsteps explicit steps.  dt_fixed <= 0 selects the automatic
    CFL bound, recomputed every step.  Returns the last three slices with
    their times so monitors can form centered space-time windows.

    Return: (status, steps_done, t_pp, t_p, t, psi_pp, psi_p, psi, last_dt)
    """
    nm1 = float(n - 1)
    inv_rho_m2 = 1.0 / (rho_m * rho_m)
    h_phys2 = (rho_m * h) * (rho_m * h)
    J1 = psi.shape[0]
    tau = np.empty(J1)
    k2 = np.empty(J1)
    k3 = np.empty(J1)
    k4 = np.empty(J1)
    stage = np.empty(J1)

    psi_pp = psi.copy()
    psi_p = psi.copy()
    t_pp = t0
    t_p = t0
    t = t0
    status = STATUS_OK
    steps_done = 0
    dt = 0.0

    for _ in range(nsteps):
        sup_e = equiv_sup_energy(psi, pole_lo, pole_hi, h, inv_sin2, nm1, ratio2)
        if not np.isfinite(sup_e) or sup_e > guard:
            status = STATUS_BLOWUP
            break
        if dt_fixed > 0.0:
            dt = dt_fixed
        else:
            dt = CFL_SAFETY * h_phys2 / (2.0 * sup_e + 1.0)

        equiv_tension(psi, pole_lo, pole_hi, h, cot_r, inv_sin2, phi1,
                      nm1, inv_rho_m2, tau)
        psi_new = np.empty(J1)
        if scheme == SCHEME_EULER:
            for j in range(J1):
                psi_new[j] = psi[j] + dt * tau[j]
        else:
            for j in range(J1):
                stage[j] = psi[j] + 0.5 * dt * tau[j]
            equiv_tension(stage, pole_lo, pole_hi, h, cot_r, inv_sin2, phi1,
                          nm1, inv_rho_m2, k2)
            for j in range(J1):
                stage[j] = psi[j] + 0.5 * dt * k2[j]
            equiv_tension(stage, pole_lo, pole_hi, h, cot_r, inv_sin2, phi1,
                          nm1, inv_rho_m2, k3)
            for j in range(J1):
                stage[j] = psi[j] + dt * k3[j]
            equiv_tension(stage, pole_lo, pole_hi, h, cot_r, inv_sin2, phi1,
                          nm1, inv_rho_m2, k4)
            for j in range(J1):
                psi_new[j] = psi[j] + dt / 6.0 * (
                    tau[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]
                )

        psi_pp = psi_p
        t_pp = t_p
        psi_p = psi
        t_p = t
        psi = psi_new
        t = t + dt
        steps_done += 1

    return status, steps_done, t_pp, t_p, t, psi_pp, psi_p, psi, dt
