"""Stationary points of lambda over a Gaussian multiplicative family.

Slice n carries center q_n, momentum k_n, log-width s_n and phase phi_n:

    psi_n(x) ~ exp(-(x - q_n)^2 / (4 e^{2 s_n}) + i k_n (x - q_n)/hbar + i phi_n)

normalised on the grid.  lambda is the symmetrized expectation of the action
operator, which couples slice n only to slice n+1 (through mu_{n+1}), so a
finite-difference probe on one slice changes at most two terms of the sum.
The gradient exploits that: it is the central difference of lambda, computed
from the terms that actually change.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field

import numpy as np

from .action_operator import Form, expectation, slice_integrals
from .errors import NumericalError, ValidationError
from .grid import PhysicalParams, Potential, SpaceGrid, TimeGrid, quadrature
from .wavefunctional import MultiplicativeFunctional

FIELDS = ("q", "k", "s", "phi")
GRAD_STEP = 1e-5
HESS_STEP = 1e-4


@dataclass(frozen=True, eq=False)
class GaussianAnsatz:
    space: SpaceGrid
    time: TimeGrid
    q: np.ndarray
    k: np.ndarray
    s: np.ndarray
    phi: np.ndarray

    def __post_init__(self):
        for name in FIELDS:
            arr = np.array(np.broadcast_to(getattr(self, name), (self.time.N + 1,)), dtype=float)
            object.__setattr__(self, name, arr)
        check_widths(self.space, self.s)

    @classmethod
    def from_vector(cls, space, time, theta):
        q, k, s, phi = np.split(np.asarray(theta, dtype=float), 4)
        return cls(space, time, q, k, s, phi)

    @property
    def vector(self) -> np.ndarray:
        return np.concatenate([self.q, self.k, self.s, self.phi])

    def to_dict(self) -> dict:
        return {name: getattr(self, name).tolist() for name in FIELDS}


def width_bounds(space: SpaceGrid):
    """Admissible log-widths: dx < e^s < (x_max - x_min)/6."""
    return np.log(space.dx), np.log(space.length / 6.0)


def check_widths(space: SpaceGrid, s):
    lo, hi = width_bounds(space)
    s = np.asarray(s)
    if np.any(s <= lo) or np.any(s >= hi):
        raise ValidationError(f"log-widths must lie in ({lo:.4f}, {hi:.4f}); got range [{s.min():.4f}, {s.max():.4f}]")


def gaussian_slices(space: SpaceGrid, q, k, s, phi, hbar: float) -> np.ndarray:
    """(K, M) stack of grid-normalised Gaussian slices."""
    x = space.x[None, :]
    q, k, s, phi = (np.asarray(a, dtype=float)[:, None] for a in (q, k, s, phi))
    y = x - q
    expo = -(y**2) / (4.0 * np.exp(2.0 * s)) + 1j * (k * y / hbar + phi)
    amps = np.exp(expo)
    norms = quadrature(space, np.abs(amps) ** 2).real
    return amps / np.sqrt(norms)[:, None]


def build_ansatz(ansatz: GaussianAnsatz, params: PhysicalParams) -> MultiplicativeFunctional:
    slices = gaussian_slices(ansatz.space, ansatz.q, ansatz.k, ansatz.s, ansatz.phi, params.hbar)
    return MultiplicativeFunctional(ansatz.space, ansatz.time, slices)


def lambda_of(ansatz: GaussianAnsatz, potential: Potential, params: PhysicalParams, tol: float = 1e-8) -> float:
    lam = expectation(build_ansatz(ansatz, params), potential, params, Form.SYMMETRIZED).lam
    if abs(lam.imag) > tol:
        raise NumericalError(f"symmetrized lambda has imaginary residue {lam.imag:.3e}")
    return float(lam.real)


class _LocalLambda:
    """Per-slice pieces of lambda for fast probing."""

    def __init__(self, space, time, potential, params):
        self.space, self.time, self.params = space, time, params
        self.u_rows = np.array([potential(space.x, t, params) for t in time.t])
        self.eps = time.eps

    def integrals(self, fields):
        slices = gaussian_slices(self.space, *fields, self.params.hbar)
        return slice_integrals(self.space, slices, self.u_rows, Form.SYMMETRIZED)

    def gradient(self, theta, steps=None):
        """Central differences of lambda with respect to every entry of theta."""
        space, params, eps = self.space, self.params, self.eps
        hbar, m = params.hbar, params.mass
        N = self.time.N
        fields = list(np.split(np.asarray(theta, dtype=float), 4))
        base = self.integrals(fields)
        if steps is None:
            steps = probe_steps(theta, space)
        steps = np.split(steps, 4)
        grad = np.zeros((4, N + 1), dtype=complex)
        lo, hi = width_bounds(space)
        has_next = np.arange(N + 1) < N
        for f_idx in range(4):
            h = steps[f_idx].copy()
            if f_idx == 2:
                s = fields[2]
                bad = (s - h <= lo) | (s + h >= hi)
                h[bad] *= 0.5
                if np.any((s - h <= lo) | (s + h >= hi)):
                    raise ValidationError("width bound violated at a gradient probe point")
            plus = [f.copy() for f in fields]
            minus = [f.copy() for f in fields]
            plus[f_idx] += h
            minus[f_idx] -= h
            ip, im = self.integrals(plus), self.integrals(minus)
            own = np.zeros(N + 1, dtype=complex)
            mu_next = np.append(base.mu[1:], 0.0)
            own[has_next] = (
                hbar / 1j * (mu_next * (ip.a - im.a) - (ip.b - im.b))
                + eps * hbar**2 / (2 * m) * (ip.kin - im.kin)
                - eps * (ip.pot - im.pot)
            )[has_next]
            coupling = np.zeros(N + 1, dtype=complex)
            coupling[1:] = hbar / 1j * base.a[:-1] * (ip.mu[1:] - im.mu[1:])
            grad[f_idx] = (own + coupling) / (2.0 * h)
        if np.max(np.abs(grad.imag)) > 1e-6:
            raise NumericalError(f"lambda gradient has imaginary residue {np.max(np.abs(grad.imag)):.3e}")
        return grad.real.ravel()


def probe_steps(theta, space: SpaceGrid, h: float = GRAD_STEP) -> np.ndarray:
    """h scaled per parameter: relative for centers/momenta, absolute for log-width and phase."""
    theta = np.asarray(theta, dtype=float)
    scale = np.maximum(1.0, np.abs(theta))
    n = theta.size // 4
    scale[2 * n:] = 1.0
    return h * scale


def grad_lambda(ansatz: GaussianAnsatz, potential: Potential, params: PhysicalParams, h: float = GRAD_STEP) -> np.ndarray:
    """Central finite-difference gradient over all 4(N+1) parameters, ordered (q, k, s, phi)."""
    local = _LocalLambda(ansatz.space, ansatz.time, potential, params)
    theta = ansatz.vector
    return local.gradient(theta, probe_steps(theta, ansatz.space, h))


@dataclass
class OptimizationTrace:
    space: SpaceGrid
    time: TimeGrid
    iterations: list = field(default_factory=list)  # (theta, lambda, grad max-norm)
    converged: bool = False
    final_lambda: float = float("nan")
    free: np.ndarray | None = None

    @property
    def final(self) -> GaussianAnsatz:
        return GaussianAnsatz.from_vector(self.space, self.time, self.iterations[-1][0])

    @property
    def grad_norms(self) -> np.ndarray:
        return np.array([it[2] for it in self.iterations])

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["iter", "lambda", "grad_norm"])
            for i, (_, lam, g) in enumerate(self.iterations):
                writer.writerow([i, repr(float(lam)), repr(float(g))])

    def write_params_json(self, path):
        with open(path, "w") as fh:
            json.dump({"converged": self.converged, "final_lambda": self.final_lambda,
                       **self.final.to_dict()}, fh, indent=2)


def default_frozen(time: TimeGrid) -> list:
    """Fixed-endpoint data: the centers of the first and last slice."""
    return [("q", 0), ("q", time.N)]


def _free_mask(time: TimeGrid, frozen) -> np.ndarray:
    mask = np.ones((4, time.N + 1), dtype=bool)
    for name, n in frozen:
        mask[FIELDS.index(name), n] = False
    return mask.ravel()


def _colored_hessian(local: _LocalLambda, theta, free, N):
    """FD Jacobian of the gradient; slices three apart are probed together."""
    size = theta.size
    hess = np.zeros((size, size))
    steps = HESS_STEP * np.maximum(1.0, np.abs(theta))
    steps[2 * (N + 1):] = HESS_STEP
    slice_of = np.tile(np.arange(N + 1), 4)
    for f_idx in range(4):
        for color in range(3):
            cols = np.flatnonzero((slice_of % 3 == color) & (np.arange(size) // (N + 1) == f_idx) & free)
            if cols.size == 0:
                continue
            delta = np.zeros(size)
            delta[cols] = steps[cols]
            dg = (local.gradient(theta + delta) - local.gradient(theta - delta))
            for c in cols:
                n = slice_of[c]
                rows = np.flatnonzero(np.abs(slice_of - n) <= 1)
                hess[rows, c] = dg[rows] / (2.0 * steps[c])
    hess = 0.5 * (hess + hess.T)
    return hess[np.ix_(free, free)]


def extremize_lambda(initial: GaussianAnsatz, potential: Potential, params: PhysicalParams, frozen=None,
                     tol: float = 1e-7, max_iter: int = 500) -> OptimizationTrace:
    """Drive the gradient of lambda to zero over the free parameters.

    Stationary point, not minimum: lambda is unbounded in both directions.
    Newton steps on a finite-difference Hessian, with Broyden updates between
    refreshes; a step is accepted only if it lowers the gradient max-norm.
    """
    space, time = initial.space, initial.time
    frozen = default_frozen(time) if frozen is None else list(frozen)
    free = _free_mask(time, frozen)
    local = _LocalLambda(space, time, potential, params)

    def lam(theta):
        return lambda_of(GaussianAnsatz.from_vector(space, time, theta), potential, params)

    theta = initial.vector
    grad = local.gradient(theta)
    gmax = float(np.max(np.abs(grad[free])))
    trace = OptimizationTrace(space, time, free=free)
    trace.iterations.append((theta.copy(), lam(theta), gmax))
    hess = None
    fresh = False
    for _ in range(max_iter):
        if gmax < tol:
            trace.converged = True
            break
        if hess is None:
            hess = _colored_hessian(local, theta, free, time.N)
            fresh = True
        step = np.zeros_like(theta)
        step[free] = -np.linalg.lstsq(hess, grad[free], rcond=1e-12)[0]
        accepted = False
        alpha = 1.0
        for _ in range(30):
            trial = theta + alpha * step
            try:
                check_widths(space, np.split(trial, 4)[2])
                g_trial = local.gradient(trial)
            except ValidationError:
                alpha *= 0.5
                continue
            gmax_trial = float(np.max(np.abs(g_trial[free])))
            if gmax_trial < gmax:
                accepted = True
                break
            alpha *= 0.5
        if not accepted:
            if fresh:
                break
            hess = None
            continue
        d_theta = (trial - theta)[free]
        d_grad = (g_trial - grad)[free]
        hess = hess + np.outer(d_grad - hess @ d_theta, d_theta) / (d_theta @ d_theta)
        fresh = False
        theta, grad, gmax = trial, g_trial, gmax_trial
        trace.iterations.append((theta.copy(), lam(theta), gmax))
    trace.converged = trace.converged or gmax < tol
    trace.final_lambda = trace.iterations[-1][1]
    return trace
