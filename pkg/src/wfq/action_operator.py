"""The quantum action operator on multiplicative functionals.

Time-sliced form used everywhere (left Riemann sums over n = 0..N-1)::

    (I Psi)[x] = sum_n [ (hbar/i) dx_n psi_n'(x_n)
                         + (eps hbar^2 / 2m) psi_n''(x_n)
                         - eps U(x_n, t_n) psi_n(x_n) ] prod_{m != n} psi_m(x_m)

The momentum operator is (hbar_tilde/i) times the variational derivative,
and because hbar_tilde = eps*hbar the 1/eps of the variational derivative
cancels slice by slice.

Expectation values are computed in closed form from per-slice integrals.
For the velocity term, integrating dx_n = x_{n+1} - x_n against the product
measure gives::

    <Psi| (hbar/i) dx_n d/dx_n |Psi> = (hbar/i) [ mu_{n+1} A_n - B_n ]

with mu = int x |psi|^2, A = int conj(psi) psi', B = int x conj(psi) psi'
(all remaining slices integrate to their norms).  The symmetrized form uses
(conj(psi) psi' - conj(psi') psi)/2 in A and B and -|psi'|^2 for the kinetic
integrand.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum

import numpy as np
from numpy.polynomial import polynomial as P

from .errors import ValidationError
from .grid import PhysicalParams, Potential, first_difference, interpolate_rows, quadrature, second_difference
from .schrodinger import WaveHistory
from .wavefunctional import BrokenLine, MultiplicativeFunctional, leave_one_out_products, variational_derivative

NORM_TOL = 1e-6


class Form(str, Enum):
    RAW = "raw"
    SYMMETRIZED = "symmetrized"


@dataclass(frozen=True)
class ActionExpectation:
    lam: complex
    velocity_term: complex
    kinetic_term: complex
    potential_term: complex
    form: Form
    eps: float
    N: int
    M: int

    def to_dict(self) -> dict:
        out = {"form": Form(self.form).value, "lambda_re": self.lam.real, "lambda_im": self.lam.imag}
        for name in ("velocity_term", "kinetic_term", "potential_term"):
            value = getattr(self, name)
            out[f"{name}_re"] = value.real
            out[f"{name}_im"] = value.imag
        out.update(eps=self.eps, N=self.N, M=self.M)
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def momentum_apply(psi: MultiplicativeFunctional, line: BrokenLine, n: int, params: PhysicalParams) -> complex:
    """(hbar_tilde / i) dPsi/dx(t_n) at the broken line."""
    return params.hbar_tilde / 1j * variational_derivative(psi, line, n)


def apply_action_terms(psi, line, potential: Potential, params: PhysicalParams) -> np.ndarray:
    """Per-slice contributions (shape ``(N,)``) of the action operator at ``line``."""
    eps, hbar, m = psi.time.eps, params.hbar, params.mass
    vals = psi.values_at(line)
    d1 = psi.derivatives_at(line)
    d2 = psi.second_derivatives_at(line)
    others = leave_one_out_products(vals)[:-1]
    x, t = line.vertices[:-1], psi.time.t[:-1]
    u = np.array([potential(x[n], t[n], params) for n in range(psi.N)], dtype=float)
    slice_part = (
        hbar / 1j * line.increments() * d1[:-1]
        + eps * hbar**2 / (2 * m) * d2[:-1]
        - eps * u * vals[:-1]
    )
    return slice_part * others


def apply_action(psi: MultiplicativeFunctional, line: BrokenLine, potential: Potential, params: PhysicalParams) -> complex:
    return complex(np.sum(apply_action_terms(psi, line, potential, params)))


@dataclass(frozen=True)
class SliceIntegrals:
    """Per-slice quadratures entering the closed-form expectation."""

    norm: np.ndarray  # int |psi|^2
    mu: np.ndarray  # int x |psi|^2
    a: np.ndarray  # int conj(psi) psi'  (antisymmetrized for the symmetrized form)
    b: np.ndarray  # int x conj(psi) psi'
    kin: np.ndarray  # int conj(psi) psi''  or  -int |psi'|^2
    pot: np.ndarray  # int U(t_n) |psi|^2


def slice_integrals(space, factors, u_rows, form: Form) -> SliceIntegrals:
    """Integrals for an ``(K, M)`` stack of slices; ``u_rows`` is U on each slice's time."""
    form = Form(form)
    factors = np.asarray(factors)
    rho = np.abs(factors) ** 2
    d1 = first_difference(space, factors)
    if form is Form.RAW:
        cross = np.conj(factors) * d1
        kin_density = np.conj(factors) * second_difference(space, factors)
    else:
        cross = 1j * (np.conj(factors) * d1).imag
        kin_density = -np.abs(d1) ** 2
    x = space.x
    return SliceIntegrals(
        norm=quadrature(space, rho).real,
        mu=quadrature(space, x * rho).real,
        a=quadrature(space, cross),
        b=quadrature(space, x * cross),
        kin=quadrature(space, kin_density),
        pot=quadrature(space, u_rows * rho).real,
    )


def _potential_rows(space, time, potential, params, rows=None):
    ts = time.t if rows is None else time.t[rows]
    return np.array([potential(space.x, t, params) for t in ts])


def assemble_expectation(ints: SliceIntegrals, eps: float, params: PhysicalParams):
    """(velocity, kinetic, potential) contributions from precomputed slice integrals.

    Other slices enter through their norms, so the result equals the full
    quadratic form even before normalisation.
    """
    hbar, m = params.hbar, params.mass
    nu = ints.norm
    # products of the norms of every slice except n, and except the pair (n, n+1)
    without_n = leave_one_out_products(nu).real
    prefix = np.concatenate(([1.0], np.cumprod(nu)))
    suffix = np.concatenate((np.cumprod(nu[::-1])[::-1], [1.0]))
    pair = prefix[:-2] * suffix[2:]
    velocity = hbar / 1j * np.sum((ints.mu[1:] * ints.a[:-1] - ints.b[:-1] * nu[1:]) * pair)
    kinetic = eps * hbar**2 / (2 * m) * np.sum(ints.kin[:-1] * without_n[:-1])
    potential = -eps * np.sum(ints.pot[:-1] * without_n[:-1])
    return velocity, kinetic, potential


def expectation(psi, potential: Potential, params: PhysicalParams, form: Form = Form.SYMMETRIZED,
                check_norm: bool = True) -> ActionExpectation:
    """lambda = (Psi, I Psi) for a multiplicative functional (or a WaveHistory)."""
    if isinstance(psi, WaveHistory):
        psi = MultiplicativeFunctional.from_history(psi)
    form = Form(form)
    space, time = psi.space, psi.time
    ints = slice_integrals(space, psi.factors, _potential_rows(space, time, potential, params), form)
    if check_norm:
        worst = float(np.max(np.abs(ints.norm - 1.0)))
        if worst > NORM_TOL:
            raise ValidationError(f"factor norms deviate from 1 by {worst:.3e}")
    v_term, k_term, p_term = assemble_expectation(ints, time.eps, params)
    lam = v_term + k_term + p_term
    return ActionExpectation(complex(lam), complex(v_term), complex(k_term), complex(p_term),
                             form, time.eps, time.N, space.M)


# ---------------------------------------------------------------- commutators


@dataclass(frozen=True)
class PolynomialFunctional:
    """coef * prod_n p_n(x_n) with per-slice polynomial coefficients (low to high)."""

    polys: tuple
    coef: complex = 1.0

    @classmethod
    def from_coefficients(cls, coefficient_rows, coef=1.0):
        return cls(tuple(np.asarray(c, dtype=float) for c in coefficient_rows), coef)

    @property
    def N(self) -> int:
        return len(self.polys) - 1

    def __call__(self, vertices) -> complex:
        vertices = np.asarray(vertices, dtype=float)
        value = self.coef
        for c, x in zip(self.polys, vertices):
            value = value * P.polyval(x, c)
        return value

    def times_x(self, n: int) -> "PolynomialFunctional":
        polys = list(self.polys)
        polys[n] = P.polymulx(polys[n])
        return PolynomialFunctional(tuple(polys), self.coef)

    def momentum(self, n: int, params: PhysicalParams) -> "PolynomialFunctional":
        """(hbar_tilde/i) (1/eps) d/dx_n, differentiating the polynomial exactly."""
        polys = list(self.polys)
        polys[n] = P.polyder(polys[n]) if polys[n].size > 1 else np.zeros(1)
        return PolynomialFunctional(tuple(polys), self.coef * (params.hbar_tilde / 1j) / params.eps)


@dataclass(frozen=True)
class CommutatorReport:
    n: int
    n_prime: int
    measured: complex
    expected: complex
    abs_error: float


def commutator_check(n: int, n_prime: int, functional: PolynomialFunctional, lines, params: PhysicalParams) -> CommutatorReport:
    """[x(t_n), p(t_n')] F against i hbar delta_{n n'} F at each sample line; worst case reported."""
    N = functional.N
    if not (0 <= n <= N and 0 <= n_prime <= N):
        raise ValidationError(f"slice indices ({n}, {n_prime}) outside 0..{N}")
    xp = functional.momentum(n_prime, params).times_x(n)
    px = functional.times_x(n).momentum(n_prime, params)
    delta = 1.0 if n == n_prime else 0.0
    worst = None
    for line in lines:
        vertices = line.vertices if isinstance(line, BrokenLine) else np.asarray(line, dtype=float)
        measured = xp(vertices) - px(vertices)
        expected = 1j * params.hbar * delta * functional(vertices)
        err = abs(measured - expected)
        if worst is None or err > worst[2]:
            worst = (measured, expected, err)
    return CommutatorReport(n, n_prime, complex(worst[0]), complex(worst[1]), float(worst[2]))


def stencil_commutator(psi: MultiplicativeFunctional, line: BrokenLine, n: int, n_prime: int,
                       params: PhysicalParams) -> complex:
    """[x(t_n), p(t_n')] Psi with the central-difference stencil in place of d/dx.

    Deviates from i hbar delta Psi by O(dx^2); see the convergence tests.
    """
    x_field = psi.space.x
    factors = np.array(psi.factors)
    xn = line.vertices[n]

    def p_at(fac):
        d = interpolate_rows(psi.space, first_difference(psi.space, fac), line.vertices)
        v = interpolate_rows(psi.space, fac, line.vertices)
        return params.hbar_tilde / 1j / psi.time.eps * d[n_prime] * leave_one_out_products(v)[n_prime]

    xp = xn * p_at(factors)
    shifted = factors.copy()
    shifted[n] = x_field * factors[n]
    px = p_at(shifted)
    return complex(xp - px)
