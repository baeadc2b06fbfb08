"""Discrete canonical action, its extremum, and the non-simultaneous Poisson bracket.

Positions live on the time points (x_0..x_N) and momenta on the intervals
(p_0..p_{N-1}), so each p_n pairs with Delta x_n = x_{n+1} - x_n.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import ConvergenceError, SingularSystemError, ValidationError
from .grid import PhysicalParams, Potential, TimeGrid


@dataclass(frozen=True, eq=False)
class ClassicalPath:
    time: TimeGrid
    x: np.ndarray
    p: np.ndarray

    def __post_init__(self):
        x = np.array(self.x, dtype=float)
        p = np.array(self.p, dtype=float)
        if x.shape != (self.time.N + 1,) or p.shape != (self.time.N,):
            raise ValidationError(
                f"path needs {self.time.N + 1} positions and {self.time.N} momenta, "
                f"got {x.shape} and {p.shape}"
            )
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "p", p)

    @property
    def eps(self) -> float:
        return self.time.eps

    def hamilton_residuals(self, potential: Potential, params: PhysicalParams):
        """(Delta x/eps - p/m, Delta p/eps + U'(x_n)) at interior points."""
        eps = self.eps
        velocity = np.diff(self.x) / eps - self.p / params.mass
        force = np.array([
            (self.p[n] - self.p[n - 1]) / eps + potential.grad(self.x[n], self.time.t[n], params)
            for n in range(1, self.time.N)
        ])
        return velocity, force


def classical_action(path: ClassicalPath, potential: Potential, params: PhysicalParams) -> float:
    """sum_n eps [p_n Delta x_n / eps - p_n^2 / 2m - U(x_n, t_n)]."""
    eps = path.eps
    u = np.array([potential(path.x[n], path.time.t[n], params) for n in range(path.time.N)], dtype=float)
    return float(np.sum(path.p * np.diff(path.x) - eps * path.p**2 / (2 * params.mass) - eps * u))


def action_gradient(path: ClassicalPath, potential: Potential, params: PhysicalParams):
    """Analytic partials (dI/dx over all N+1 points, dI/dp over all N intervals)."""
    eps, N = path.eps, path.time.N
    grad_p = np.diff(path.x) - eps * path.p / params.mass
    force = np.array([potential.grad(path.x[n], path.time.t[n], params) for n in range(N)], dtype=float)
    grad_x = np.zeros(N + 1)
    grad_x[1:] += path.p
    grad_x[:-1] -= path.p
    grad_x[:-1] -= eps * force
    return grad_x, grad_p


def _interior_system(z, x0, xN, time, potential, params):
    """Residual and Jacobian of the interior stationarity conditions."""
    N, eps, m = time.N, time.eps, params.mass
    x = np.concatenate(([x0], z[: N - 1], [xN]))
    p = z[N - 1:]
    path = ClassicalPath(time, x, p)
    gx, gp = action_gradient(path, potential, params)
    resid = np.concatenate((gx[1:-1], gp))
    size = 2 * N - 1
    jac = np.zeros((size, size))
    for i, n in enumerate(range(1, N)):
        jac[i, i] = -eps * float(potential.curvature(x[n], time.t[n], params))
        jac[i, N - 1 + n - 1] = 1.0  # p_{n-1}
        jac[i, N - 1 + n] = -1.0  # p_n
    for n in range(N):
        row = N - 1 + n
        jac[row, N - 1 + n] = -eps / m
        if 1 <= n + 1 <= N - 1:
            jac[row, n] = 1.0  # x_{n+1}
        if 1 <= n <= N - 1:
            jac[row, n - 1] = -1.0  # x_n
    return resid, jac


def extremize(x0: float, xN: float, potential: Potential, params: PhysicalParams, time: TimeGrid,
              guess: ClassicalPath | None = None, tol: float = 1e-10, max_iter: int = 50,
              cond_limit: float = 1e12) -> ClassicalPath:
    """Newton iteration for the stationary path with fixed endpoints."""
    N = time.N
    if guess is None:
        x_init = np.linspace(x0, xN, N + 1)
        guess = ClassicalPath(time, x_init, params.mass * np.diff(x_init) / time.eps)
    z = np.concatenate((guess.x[1:-1], guess.p))
    resid, jac = _interior_system(z, x0, xN, time, potential, params)
    for _ in range(max_iter):
        if np.max(np.abs(resid)) < tol:
            break
        cond = np.linalg.cond(jac)
        if not np.isfinite(cond) or cond > cond_limit:
            raise SingularSystemError(f"Newton system is singular (condition number {cond:.3e})")
        z = z - np.linalg.solve(jac, resid)
        resid, jac = _interior_system(z, x0, xN, time, potential, params)
    else:
        worst = float(np.max(np.abs(resid)))
        if worst >= tol:
            raise ConvergenceError(f"extremize did not converge, residual {worst:.3e}", worst)
    return ClassicalPath(time, np.concatenate(([x0], z[: N - 1], [xN])), z[N - 1:])


def discrete_focal_omega(time: TimeGrid, k: int = 1) -> float:
    """Harmonic frequency at which the fixed-endpoint system degenerates.

    The discrete analogue of omega*T = k*pi: the Dirichlet second difference
    has eigenvalues -(2/eps)^2 sin^2(k pi / 2N).
    """
    return 2.0 / time.eps * math.sin(k * math.pi / (2 * time.N))


# ------------------------------------------------------------ Poisson brackets


@dataclass(frozen=True)
class Observable:
    """Differentiable function of (x, p) with its gradient."""

    value: Callable
    grad: Callable  # path -> (d/dx (N+1,), d/dp (N,))

    def __add__(self, other):
        other = _lift(other)
        return Observable(lambda path: self.value(path) + other.value(path),
                          lambda path: _add(self.grad(path), other.grad(path)))

    __radd__ = __add__

    def __neg__(self):
        return Observable(lambda path: -self.value(path),
                          lambda path: tuple(-g for g in self.grad(path)))

    def __sub__(self, other):
        return self + (-_lift(other))

    def __mul__(self, other):
        other = _lift(other)

        def grad(path):
            a, b = self.value(path), other.value(path)
            ga, gb = self.grad(path), other.grad(path)
            return (ga[0] * b + a * gb[0], ga[1] * b + a * gb[1])

        return Observable(lambda path: self.value(path) * other.value(path), grad)

    __rmul__ = __mul__


def _add(g, h):
    return (g[0] + h[0], g[1] + h[1])


def _zeros(path):
    return (np.zeros(path.time.N + 1), np.zeros(path.time.N))


def constant(c: float) -> Observable:
    return Observable(lambda path: float(c), _zeros)


def _lift(obj):
    return obj if isinstance(obj, Observable) else constant(obj)


def coordinate(n: int) -> Observable:
    def grad(path):
        gx, gp = _zeros(path)
        gx[n] = 1.0
        return gx, gp

    return Observable(lambda path: float(path.x[n]), grad)


def momentum(n: int) -> Observable:
    def grad(path):
        gx, gp = _zeros(path)
        gp[n] = 1.0
        return gx, gp

    return Observable(lambda path: float(path.p[n]), grad)


def action_observable(potential: Potential, params: PhysicalParams) -> Observable:
    return Observable(lambda path: classical_action(path, potential, params),
                      lambda path: action_gradient(path, potential, params))


def poisson_bracket(a: Observable, b: Observable, path: ClassicalPath) -> float:
    """sum_n (1/eps) [dA/dx_n dB/dp_n - dA/dp_n dB/dx_n], so {x_n, p_m} = delta_nm / eps.

    x_N has no conjugate momentum on the interval grid and drops out.
    """
    ax, ap = a.grad(path)
    bx, bp = b.grad(path)
    N = path.time.N
    return float(np.sum(ax[:N] * bp - ap * bx[:N]) / path.eps)
