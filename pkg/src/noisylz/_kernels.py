"""Numba kernels for the two per-step hot loops.

Both kernels are branch-free IEEE float64 code without fastmath, so results
are bit-reproducible across processes and worker counts.
"""

import math

import numba
import numpy as np


@numba.njit(cache=True)
def phase_path_kernel(m00, m01, m10, m11, l00, l10, l11, phi0, nu0, normals):
    """Iterate x' = M x + L xi for the pre-factored one-step map."""
    n = normals.shape[0]
    phi = np.empty(n + 1)
    nu = np.empty(n + 1)
    p = phi0
    v = nu0
    phi[0] = p
    nu[0] = v
    for k in range(n):
        e0 = l00 * normals[k, 0]
        e1 = l10 * normals[k, 0] + l11 * normals[k, 1]
        p_next = m00 * p + m01 * v + e0
        v_next = m10 * p + m11 * v + e1
        phi[k + 1] = p_next
        nu[k + 1] = v_next
        p = p_next
        v = v_next
    return phi, nu


@numba.njit(cache=True)
def evolve_two_level(v0, f0, t_start, dt, n_steps, phi_mid, driven, sample_every):
    """Midpoint-exponential propagation of the two-level state.

    Starts from the diabatic ground state (0, 1) at t_start.  Each step
    applies the closed-form unitary exp(-i*dt*H) with H evaluated at the
    step midpoint; H is traceless, H = a . sigma with

        a_x = (v0/2) * (1 + cos(phi)),  a_y = -(v0/2) * sin(phi),
        a_z = -(f0/2) * t_mid

    when driven, and a_x = v0/2, a_y = 0 for the undriven (static coupling)
    reference.  Returns (sampled |c0|^2 every sample_every steps,
    max |norm - 1|, final c0, final c1).
    """
    c0 = 0.0 + 0.0j
    c1 = 1.0 + 0.0j
    half_v0 = 0.5 * v0
    n_samples = n_steps // sample_every
    p_samples = np.empty(n_samples)
    max_drift = 0.0
    for k in range(n_steps):
        t_mid = t_start + (k + 0.5) * dt
        a_z = -0.5 * f0 * t_mid
        if driven:
            ph = phi_mid[k]
            a_x = half_v0 * (1.0 + math.cos(ph))
            a_y = -half_v0 * math.sin(ph)
        else:
            a_x = half_v0
            a_y = 0.0
        a = math.sqrt(a_x * a_x + a_y * a_y + a_z * a_z)
        theta = a * dt
        cth = math.cos(theta)
        if theta > 1e-6:
            f = math.sin(theta) / a
        else:
            f = dt * (1.0 - theta * theta / 6.0)
        u00 = cth - 1j * f * a_z
        u01 = (-f * a_y) - 1j * (f * a_x)
        u10 = (f * a_y) - 1j * (f * a_x)
        u11 = cth + 1j * f * a_z
        c0_next = u00 * c0 + u01 * c1
        c1_next = u10 * c0 + u11 * c1
        c0 = c0_next
        c1 = c1_next
        norm = c0.real * c0.real + c0.imag * c0.imag + c1.real * c1.real + c1.imag * c1.imag
        drift = abs(norm - 1.0)
        if drift > max_drift:
            max_drift = drift
        if (k + 1) % sample_every == 0:
            idx = (k + 1) // sample_every - 1
            p_samples[idx] = c0.real * c0.real + c0.imag * c0.imag
    return p_samples, max_drift, c0, c1
