"""Multiplicative wave functionals Psi[x(t)] = prod_n psi_n(x_n) evaluated on broken lines.

Between grid points, slice fields (and their difference fields) are read off
by linear interpolation.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .grid import SpaceGrid, TimeGrid, first_difference, interpolate_rows, quadrature, second_difference
from .schrodinger import SliceState, WaveHistory


@dataclass(frozen=True, eq=False)
class BrokenLine:
    """Vertices x_0..x_N of a trajectory sampled on the time grid."""

    vertices: np.ndarray

    def __post_init__(self):
        v = np.array(self.vertices, dtype=float)
        if v.ndim != 1 or v.size < 3:
            raise ValidationError("a broken line needs at least three vertices")
        v.flags.writeable = False
        object.__setattr__(self, "vertices", v)

    @classmethod
    def from_indices(cls, space: SpaceGrid, indices):
        return cls(space.x[np.asarray(indices, dtype=int)])

    @classmethod
    def from_curve(cls, time: TimeGrid, curve):
        return cls(curve(time.t))

    @property
    def N(self) -> int:
        return self.vertices.size - 1

    def increments(self) -> np.ndarray:
        """Delta x_n = x_{n+1} - x_n for n = 0..N-1."""
        return np.diff(self.vertices)


@dataclass(frozen=True, eq=False)
class MultiplicativeFunctional:
    """Ordered factors psi_0..psi_N, one slice field per time point."""

    space: SpaceGrid
    time: TimeGrid
    factors: np.ndarray

    def __post_init__(self):
        f = np.array(self.factors, dtype=complex)
        expected = (self.time.N + 1, self.space.M)
        if f.shape != expected:
            raise ValidationError(f"functional needs factors of shape {expected}, got {f.shape}")
        f.flags.writeable = False
        object.__setattr__(self, "factors", f)

    @classmethod
    def from_history(cls, history: WaveHistory):
        return cls(history.space, history.time, history.amps)

    @classmethod
    def from_slices(cls, time: TimeGrid, slices):
        slices = list(slices)
        return cls(slices[0].space, time, np.array([s.amps for s in slices]))

    @property
    def N(self) -> int:
        return self.time.N

    def factor(self, n: int) -> SliceState:
        return SliceState(self.space, self.factors[n], float(self.time.t[n]))

    def slice_norms(self) -> np.ndarray:
        return quadrature(self.space, np.abs(self.factors) ** 2).real

    def _check_line(self, line: BrokenLine):
        if line.N != self.N:
            raise ValidationError(f"broken line has N={line.N}, functional has N={self.N}")

    def values_at(self, line: BrokenLine) -> np.ndarray:
        """psi_n(x_n) for every n."""
        self._check_line(line)
        return interpolate_rows(self.space, self.factors, line.vertices)

    def derivatives_at(self, line: BrokenLine) -> np.ndarray:
        """Central-difference field psi_n' interpolated at x_n."""
        self._check_line(line)
        return interpolate_rows(self.space, first_difference(self.space, self.factors), line.vertices)

    def second_derivatives_at(self, line: BrokenLine) -> np.ndarray:
        self._check_line(line)
        return interpolate_rows(self.space, second_difference(self.space, self.factors), line.vertices)


def leave_one_out_products(values) -> np.ndarray:
    """out[n] = prod_{m != n} values[m], without dividing."""
    values = np.asarray(values)
    prefix = np.concatenate(([1.0 + 0j], np.cumprod(values[:-1])))
    suffix = np.concatenate((np.cumprod(values[::-1][:-1])[::-1], [1.0 + 0j]))
    return prefix * suffix


def evaluate(psi: MultiplicativeFunctional, line: BrokenLine) -> complex:
    return complex(np.prod(psi.values_at(line)))


def functional_norm(psi: MultiplicativeFunctional) -> float:
    """(Psi, Psi) = prod_n int |psi_n|^2."""
    return float(np.prod(psi.slice_norms()))


def variational_derivative(psi: MultiplicativeFunctional, line: BrokenLine, n: int) -> complex:
    """(1/eps) dF/dx_n for the product functional."""
    if not 0 <= n <= psi.N:
        raise ValidationError(f"slice index {n} outside 0..{psi.N}")
    others = leave_one_out_products(psi.values_at(line))
    return complex(psi.derivatives_at(line)[n] * others[n] / psi.time.eps)


def backshift_lhs_terms(psi: MultiplicativeFunctional, line: BrokenLine) -> np.ndarray:
    others = leave_one_out_products(psi.values_at(line))
    d = psi.derivatives_at(line)
    return (line.increments() * d[:-1] * others[:-1]) / psi.time.eps


def backshift_rhs_terms(history: WaveHistory, line: BrokenLine) -> np.ndarray:
    if line.N != history.N:
        raise ValidationError(f"broken line has N={line.N}, history has N={history.N}")
    here = interpolate_rows(history.space, history.amps, line.vertices)
    # psi_{n+1} read at x_n: the forward time difference at fixed position
    ahead = interpolate_rows(history.space, history.amps[1:], line.vertices[:-1])
    psi_dot = (ahead - here[:-1]) / history.time.eps
    others = leave_one_out_products(here)
    return -psi_dot * others[:-1]


def backshift_lhs(psi: MultiplicativeFunctional, line: BrokenLine) -> complex:
    """sum_{n<N} Delta x_n (1/eps) dF/dx_n."""
    return complex(np.sum(backshift_lhs_terms(psi, line)))


def backshift_rhs(history: WaveHistory, line: BrokenLine) -> complex:
    """-sum_{n<N} psi_dot(x_n, t_n) prod_{m != n} psi(x_m, t_m)."""
    return complex(np.sum(backshift_rhs_terms(history, line)))


def backshift_endpoint_log(history: WaveHistory, line: BrokenLine) -> complex:
    """log psi_N(x_N) - log psi_0(x_0), unwrapped along the line.

    ``eps * (lhs - rhs) / Psi`` tends to this quantity, not to zero: shifting
    the broken line by one step and shifting time by one step agree only up
    to the two end factors.
    """
    vals = interpolate_rows(history.space, history.amps, line.vertices)
    return complex(np.sum(np.log(vals[1:] / vals[:-1])))
