"""Per-slice wave functions: Crank-Nicolson propagation and the discrete Schrodinger action."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .errors import NumericalError, ValidationError
from .grid import (
    PhysicalParams,
    Potential,
    SpaceGrid,
    TimeGrid,
    first_difference,
    quadrature,
    second_difference,
    stencil_matrices,
)

NORM_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class SliceState:
    """psi(x, t) sampled on ``space`` at a single time ``t``."""

    space: SpaceGrid
    amps: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        amps = np.array(self.amps, dtype=complex)
        if amps.shape != (self.space.M,):
            raise ValidationError(f"slice needs {self.space.M} amplitudes, got shape {amps.shape}")
        amps.flags.writeable = False
        object.__setattr__(self, "amps", amps)

    @classmethod
    def from_function(cls, space: SpaceGrid, f, t: float = 0.0, normalize: bool = True):
        state = cls(space, f(space.x), t)
        return state.normalized() if normalize else state

    def norm(self) -> float:
        return float(quadrature(self.space, np.abs(self.amps) ** 2))

    def normalized(self) -> "SliceState":
        nrm = self.norm()
        if not nrm > 0:
            raise ValidationError("cannot normalize a zero state")
        return SliceState(self.space, self.amps / np.sqrt(nrm), self.t)

    def at_time(self, t: float) -> "SliceState":
        return SliceState(self.space, self.amps, t)


@dataclass(frozen=True, eq=False)
class WaveHistory:
    """Slices psi(., t_n) for n = 0..N, stored as an ``(N+1, M)`` array."""

    space: SpaceGrid
    time: TimeGrid
    amps: np.ndarray

    def __post_init__(self):
        amps = np.array(self.amps, dtype=complex)
        expected = (self.time.N + 1, self.space.M)
        if amps.shape != expected:
            raise ValidationError(f"history needs shape {expected}, got {amps.shape}")
        amps.flags.writeable = False
        object.__setattr__(self, "amps", amps)

    @classmethod
    def from_function(cls, space: SpaceGrid, time: TimeGrid, f, normalize: bool = True):
        """Sample ``f(x, t)`` at every slice."""
        amps = np.array([f(space.x, t) for t in time.t], dtype=complex)
        if normalize:
            amps /= np.sqrt(quadrature(space, np.abs(amps) ** 2))[:, None]
        return cls(space, time, amps)

    @classmethod
    def from_slices(cls, time: TimeGrid, slices):
        slices = list(slices)
        if len(slices) != time.N + 1:
            raise ValidationError(f"need {time.N + 1} slices, got {len(slices)}")
        for s, t in zip(slices, time.t):
            if s.t != t:
                raise ValidationError(f"slice time {s.t} does not match grid time {t}")
        return cls(slices[0].space, time, np.array([s.amps for s in slices]))

    @property
    def N(self) -> int:
        return self.time.N

    def slice(self, n: int) -> SliceState:
        return SliceState(self.space, self.amps[n], float(self.time.t[n]))

    def norms(self) -> np.ndarray:
        return quadrature(self.space, np.abs(self.amps) ** 2).real


def second_derivative(state: SliceState) -> np.ndarray:
    return second_difference(state.space, state.amps)


def hamiltonian(space: SpaceGrid, potential: Potential, params: PhysicalParams, t: float):
    """Sparse H = -hbar^2/(2m) D2 + U(x, t)."""
    _, d2 = stencil_matrices(space)
    kinetic = -(params.hbar**2) / (2 * params.mass) * d2
    return (kinetic + sp.diags(potential(space.x, t, params))).tocsc()


def apply_hamiltonian(state: SliceState, potential: Potential, params: PhysicalParams, t=None):
    t = state.t if t is None else t
    psi = state.amps
    kin = -(params.hbar**2) / (2 * params.mass) * second_difference(state.space, psi)
    return kin + potential(state.space.x, t, params) * psi


def energy(state: SliceState, potential: Potential, params: PhysicalParams, t=None) -> float:
    """<psi|H|psi> in the grid quadrature."""
    hpsi = apply_hamiltonian(state, potential, params, t)
    return float(quadrature(state.space, np.conj(state.amps) * hpsi).real)


def position_expectation(state: SliceState) -> float:
    return float(quadrature(state.space, state.space.x * np.abs(state.amps) ** 2).real)


def momentum_expectation(state: SliceState, params: PhysicalParams) -> float:
    dpsi = first_difference(state.space, state.amps)
    return float(params.hbar * quadrature(state.space, np.conj(state.amps) * dpsi).imag)


class _CrankNicolson:
    """Cached factorisation of (1 + i eps H / 2 hbar) for one step size."""

    def __init__(self, space, potential, params, eps):
        self.space, self.potential, self.params, self.eps = space, potential, params, eps
        self._cached = None

    def _factor(self, t_mid):
        if self._cached is not None and not self.potential.time_dependent:
            return self._cached
        h = hamiltonian(self.space, self.potential, self.params, t_mid)
        coef = 0.5j * self.eps / self.params.hbar
        ident = sp.identity(self.space.M, dtype=complex, format="csc")
        try:
            lu = splu((ident + coef * h).tocsc())
        except RuntimeError as exc:
            raise NumericalError(f"Crank-Nicolson system is singular: {exc}") from exc
        rhs = (ident - coef * h).tocsr()
        self._cached = (lu, rhs)
        return self._cached

    def step(self, state: SliceState) -> SliceState:
        lu, rhs = self._factor(state.t + 0.5 * self.eps)
        new = lu.solve(rhs @ state.amps)
        if not np.all(np.isfinite(new)):
            raise NumericalError("Crank-Nicolson step produced non-finite amplitudes")
        return SliceState(self.space, new, state.t + self.eps)


def cn_step(state: SliceState, potential: Potential, params: PhysicalParams, eps=None) -> SliceState:
    """One Crank-Nicolson step with the potential sampled at the midpoint time."""
    return _CrankNicolson(state.space, potential, params, params.eps if eps is None else eps).step(state)


def evolve(initial: SliceState, potential: Potential, params: PhysicalParams, time: TimeGrid) -> WaveHistory:
    """Propagate ``initial`` (at t = 0) through all N steps of ``time``."""
    if initial.t != 0.0:
        raise ValidationError(f"initial state must sit at t = 0, got t = {initial.t}")
    if abs(initial.norm() - 1.0) > 1e-8:
        raise ValidationError(f"initial state is not normalized (norm {initial.norm():.3e})")
    stepper = _CrankNicolson(initial.space, potential, params, time.eps)
    amps = np.empty((time.N + 1, initial.space.M), dtype=complex)
    amps[0] = initial.amps
    state = initial
    for n in range(1, time.N + 1):
        state = stepper.step(state)
        # keep the label on the grid; the step accumulates eps additions
        state = state.at_time(float(time.t[n]))
        amps[n] = state.amps
    return WaveHistory(initial.space, time, amps)


def ground_state(space: SpaceGrid, potential: Potential, params: PhysicalParams, t: float = 0.0):
    """Lowest eigenpair of the discretised H; returns ``(E0, SliceState)``."""
    h = hamiltonian(space, potential, params, t).toarray()
    vals, vecs = np.linalg.eigh(0.5 * (h + h.conj().T))
    vec = vecs[:, 0]
    vec = vec * np.exp(-1j * np.angle(vec[np.argmax(np.abs(vec))]))
    return float(vals[0]), SliceState(space, vec, t).normalized()


def stationary_history(state: SliceState, energy_value: float, time: TimeGrid, params: PhysicalParams) -> WaveHistory:
    """psi(x) exp(-i E t_n / hbar) on every slice."""
    phases = np.exp(-1j * energy_value * time.t / params.hbar)
    return WaveHistory(state.space, time, phases[:, None] * state.amps[None, :])


def schrodinger_action_terms(history: WaveHistory, potential: Potential, params: PhysicalParams):
    """The three pieces (time-derivative, kinetic, potential) of the discrete action.

    Sums run over n = 0..N-1 with the forward difference for psi dot.
    """
    space, time = history.space, history.time
    eps, hbar = time.eps, params.hbar
    psi = history.amps[:-1]
    psi_dot = (history.amps[1:] - psi) / eps
    dpsi = first_difference(space, psi)
    overlap = np.conj(psi) * psi_dot
    phase = 0.5j * hbar * (overlap - np.conj(overlap))
    kinetic = -(hbar**2) / (2 * params.mass) * np.abs(dpsi) ** 2
    u = np.array([potential(space.x, t, params) for t in time.t[:-1]])
    potential_density = -u * np.abs(psi) ** 2
    return tuple(eps * np.sum(quadrature(space, term)) for term in (phase, kinetic, potential_density))


def schrodinger_action(history: WaveHistory, potential: Potential, params: PhysicalParams, tol: float = 1e-10) -> float:
    total = sum(schrodinger_action_terms(history, potential, params))
    if abs(total.imag) > tol:
        raise NumericalError(f"Schrodinger action has imaginary residue {total.imag:.3e}")
    return float(total.real)
