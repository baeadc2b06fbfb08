"""Closed-form solutions used as independent oracles.

None of these touch a grid stencil; they are evaluated pointwise.
"""
from __future__ import annotations

import numpy as np


def coherent_center(t, q0, p0, mass=1.0, omega=1.0):
    """Classical harmonic trajectory ``(q(t), p(t))``."""
    t = np.asarray(t, dtype=float)
    q = q0 * np.cos(omega * t) + p0 / (mass * omega) * np.sin(omega * t)
    p = p0 * np.cos(omega * t) - mass * omega * q0 * np.sin(omega * t)
    return q, p


def coherent_state(x, t, q0, p0, mass=1.0, omega=1.0, hbar=1.0):
    """Harmonic-oscillator coherent state with ground-state width."""
    x = np.asarray(x, dtype=float)
    q, p = coherent_center(t, q0, p0, mass, omega)
    norm = (mass * omega / (np.pi * hbar)) ** 0.25
    expo = (
        -mass * omega * (x - q) ** 2 / (2 * hbar)
        + 1j * p * x / hbar
        - 0.5j * p * q / hbar
        - 0.5j * omega * t
    )
    return norm * np.exp(expo)


def coherent_center_phase(t, q0, p0, mass=1.0, omega=1.0, hbar=1.0):
    """Phase of the coherent state at its own center, ``p q / (2 hbar) - omega t / 2``."""
    q, p = coherent_center(t, q0, p0, mass, omega)
    return 0.5 * p * q / hbar - 0.5 * omega * np.asarray(t, dtype=float)


def harmonic_action(t0, t1, q0, p0, mass=1.0, omega=1.0):
    """Classical action of the harmonic trajectory on ``[t0, t1]``.

    On shell ``p qdot - H = (p^2/m - m w^2 q^2)/2 = d(p q)/dt / 2``.
    """
    qa, pa = coherent_center(t0, q0, p0, mass, omega)
    qb, pb = coherent_center(t1, q0, p0, mass, omega)
    return 0.5 * (pb * qb - pa * qa)


def free_gaussian(x, t, x0, p0, sigma, mass=1.0, hbar=1.0):
    """Free spreading Gaussian; ``sigma`` is the initial position spread."""
    x = np.asarray(x, dtype=float)
    k0 = p0 / hbar
    tau = hbar * t / (2 * mass * sigma**2)
    y = x - x0
    expo = (-(y**2) / (4 * sigma**2) + 1j * k0 * y - 1j * k0**2 * hbar * t / (2 * mass)) / (1 + 1j * tau)
    return (2 * np.pi * sigma**2) ** -0.25 * (1 + 1j * tau) ** -0.5 * np.exp(expo)


def free_gaussian_dt(x, t, x0, p0, sigma, mass=1.0, hbar=1.0):
    """Time derivative via the free Schrodinger equation, ``i hbar psi_t = -hbar^2/2m psi_xx``."""
    x = np.asarray(x, dtype=float)
    k0 = p0 / hbar
    a = 4 * sigma**2 * (1 + 1j * hbar * t / (2 * mass * sigma**2))
    # psi = C exp(-(y - v t)^2 / a + i k0 y - i w t) with y = x - x0
    v = hbar * k0 / mass
    y = x - x0 - v * t
    dlog_dx = -2 * y / a + 1j * k0
    d2log_dx2 = -2 / a
    psi = free_gaussian(x, t, x0, p0, sigma, mass, hbar)
    psi_xx = (d2log_dx2 + dlog_dx**2) * psi
    return 1j * hbar / (2 * mass) * psi_xx
