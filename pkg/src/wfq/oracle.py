"""Brute-force representation of functionals and of the action operator on tiny grids.

A general functional F(x_0, ..., x_N) restricted to grid trajectories is an
array with one axis of length M per slice.  Flattening is mixed radix with
slice 0 the fastest digit: ``flat[j_0 + M j_1 + M^2 j_2 + ...]``.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import reduce

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import norm as sparse_norm

from .errors import NumericalError, ValidationError
from .grid import PhysicalParams, Potential, SpaceGrid, TimeGrid, stencil_matrices
from .wavefunctional import MultiplicativeFunctional

ORACLE_CAP = 4096


def _check_cap(M: int, N: int):
    size = M ** (N + 1)
    if size > ORACLE_CAP:
        raise ValidationError(f"M^(N+1) = {M}^{N + 1} = {size} exceeds the oracle cap {ORACLE_CAP}")
    return size


@dataclass(frozen=True, eq=False)
class TrajectoryTensor:
    space: SpaceGrid
    time: TimeGrid
    values: np.ndarray  # shape (M,) * (N+1), axis n is slice n

    def __post_init__(self):
        _check_cap(self.space.M, self.time.N)
        vals = np.array(self.values, dtype=complex)
        if vals.ndim == 1:
            vals = vals.reshape((self.space.M,) * (self.time.N + 1), order="F")
        if vals.shape != (self.space.M,) * (self.time.N + 1):
            raise ValidationError(f"tensor shape {vals.shape} does not match the grids")
        object.__setattr__(self, "values", vals)

    @property
    def flat(self) -> np.ndarray:
        return self.values.ravel(order="F")

    def weights(self) -> np.ndarray:
        """Product quadrature weights, flattened like ``flat``."""
        w = self.space.weights
        return reduce(np.kron, [w] * (self.time.N + 1))

    def inner(self, other: "TrajectoryTensor") -> complex:
        return complex(np.sum(self.weights() * np.conj(self.flat) * other.flat))

    def norm(self) -> float:
        return float(self.inner(self).real)

    def __add__(self, other):
        return TrajectoryTensor(self.space, self.time, self.values + other.values)

    def __mul__(self, scalar):
        return TrajectoryTensor(self.space, self.time, scalar * self.values)

    __rmul__ = __mul__


def index_tuple(flat_index: int, M: int, N: int) -> tuple:
    digits = []
    for _ in range(N + 1):
        flat_index, r = divmod(flat_index, M)
        digits.append(r)
    return tuple(digits)


def embed(psi: MultiplicativeFunctional) -> TrajectoryTensor:
    """Outer product of the slice factors."""
    _check_cap(psi.space.M, psi.N)
    values = reduce(np.multiply.outer, list(psi.factors))
    return TrajectoryTensor(psi.space, psi.time, values)


@dataclass(frozen=True, eq=False)
class DenseOperator:
    space: SpaceGrid
    time: TimeGrid
    matrix: sp.csr_matrix

    def apply(self, tensor: TrajectoryTensor) -> TrajectoryTensor:
        return TrajectoryTensor(self.space, self.time, self.matrix @ tensor.flat)

    def rayleigh_quotient(self, tensor: TrajectoryTensor) -> complex:
        return tensor.inner(self.apply(tensor)) / tensor.inner(tensor)

    def eigen_residual(self, tensor: TrajectoryTensor) -> float:
        """||I Psi - lambda Psi|| / ||Psi|| with lambda the Rayleigh quotient."""
        lam = self.rayleigh_quotient(tensor)
        resid = self.apply(tensor) + (-lam) * tensor
        return float(np.sqrt(resid.norm() / tensor.norm()))


def _slice_operator(op, n: int, M: int, N: int):
    """Kronecker embedding of an (M, M) operator acting on slice n."""
    left = sp.identity(M ** (N - n), format="csr")
    right = sp.identity(M**n, format="csr")
    return sp.kron(left, sp.kron(op, right, format="csr"), format="csr")


def slice_coordinates(space: SpaceGrid, N: int, n: int, coordinates=None) -> np.ndarray:
    """x_{j_n} for every flat index."""
    M = space.M
    x = space.x if coordinates is None else np.asarray(coordinates, dtype=float)
    return np.tile(np.repeat(x, M**n), M ** (N - n))


def build_dense_action(space: SpaceGrid, time: TimeGrid, potential: Potential, params: PhysicalParams,
                       with_velocity: bool = True, with_kinetic: bool = True, with_potential: bool = True,
                       coordinates=None) -> DenseOperator:
    """Sparse matrix of the time-sliced action operator over all grid trajectories.

    ``coordinates`` relabels the positions attached to grid indices (used to
    check relabeling invariance on periodic grids); default ``space.x``.
    """
    M, N = space.M, time.N
    size = _check_cap(M, N)
    eps, hbar, m = time.eps, params.hbar, params.mass
    d1, d2 = stencil_matrices(space)
    coords = [slice_coordinates(space, N, n, coordinates) for n in range(N + 1)]
    total = sp.csr_matrix((size, size), dtype=complex)
    for n in range(N):
        if with_velocity:
            dx_n = coords[n + 1] - coords[n]
            total = total + hbar / 1j * sp.diags(dx_n) @ _slice_operator(d1, n, M, N)
        if with_kinetic:
            total = total + eps * hbar**2 / (2 * m) * _slice_operator(d2, n, M, N)
        if with_potential:
            total = total - eps * sp.diags(potential(coords[n], time.t[n], params))
    return DenseOperator(space, time, total.tocsr())


@dataclass(frozen=True, eq=False)
class Spectrum:
    values: np.ndarray
    vectors: np.ndarray  # columns, normalised in the product quadrature


def eigen_decompose(op: DenseOperator) -> Spectrum:
    """Full spectrum of the (generally non-Hermitian) operator matrix."""
    dense = op.matrix.toarray()
    try:
        vals, vecs = np.linalg.eig(dense)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigensolver failed: {exc}") from exc
    w = TrajectoryTensor(op.space, op.time, np.zeros(dense.shape[0])).weights()
    norms = np.sqrt(np.sum(w[:, None] * np.abs(vecs) ** 2, axis=0))
    order = np.lexsort((vals.imag, vals.real))
    return Spectrum(vals[order], (vecs / norms)[:, order])


def hermiticity_defect(op: DenseOperator) -> float:
    """||W A - (W A)^H|| / ||W A|| in the weighted inner product."""
    w = TrajectoryTensor(op.space, op.time, np.zeros(op.matrix.shape[0])).weights()
    wa = sp.diags(w) @ op.matrix
    diff = wa - wa.conj().T
    return float(sparse_norm(diff) / sparse_norm(wa))
