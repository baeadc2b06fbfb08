"""Uniform space/time grids, physical constants and potentials.

Everything here is immutable. Field arrays follow one convention throughout
the package: the last axis is the space index ``j``, and a leading axis (when
present) is the time-slice index ``n``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from functools import cached_property

import numpy as np

from .errors import ValidationError


class Boundary(str, Enum):
    DIRICHLET = "dirichlet"
    PERIODIC = "periodic"


@dataclass(frozen=True)
class SpaceGrid:
    """Uniform 1D grid.

    Dirichlet grids include both endpoints (``dx = L/(M-1)``) and treat the
    amplitude outside ``[x_min, x_max]`` as zero.  Periodic grids hold the
    points ``x_min + j*dx`` for ``j < M`` with ``dx = L/M``; ``x_max`` is the
    image of ``x_min``.
    """

    x_min: float
    x_max: float
    M: int
    boundary: Boundary = Boundary.DIRICHLET

    def __post_init__(self):
        object.__setattr__(self, "boundary", Boundary(self.boundary))
        if int(self.M) != self.M or self.M < 3:
            raise ValidationError(f"space grid needs M >= 3 points, got M={self.M}")
        object.__setattr__(self, "M", int(self.M))
        if not (math.isfinite(self.x_min) and math.isfinite(self.x_max)):
            raise ValidationError("space grid bounds must be finite")
        if not self.x_min < self.x_max:
            raise ValidationError(f"need x_min < x_max, got [{self.x_min}, {self.x_max}]")

    @property
    def periodic(self) -> bool:
        return self.boundary is Boundary.PERIODIC

    @property
    def length(self) -> float:
        return self.x_max - self.x_min

    @property
    def dx(self) -> float:
        if self.periodic:
            return self.length / self.M
        return self.length / (self.M - 1)

    @cached_property
    def x(self) -> np.ndarray:
        pts = self.x_min + self.dx * np.arange(self.M)
        if not self.periodic:
            pts[-1] = self.x_max
        pts.flags.writeable = False
        return pts

    @cached_property
    def weights(self) -> np.ndarray:
        """Quadrature weights: plain Riemann (periodic) or trapezoid (Dirichlet)."""
        w = np.full(self.M, self.dx)
        if not self.periodic:
            w[0] = w[-1] = 0.5 * self.dx
        w.flags.writeable = False
        return w

    def contains(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return (x >= self.x_min) & (x <= self.x_max)


@dataclass(frozen=True)
class TimeGrid:
    T: float
    N: int

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 2:
            raise ValidationError(f"time grid needs N >= 2 subintervals, got N={self.N}")
        object.__setattr__(self, "N", int(self.N))
        if not (math.isfinite(self.T) and self.T > 0):
            raise ValidationError(f"total time T must be positive, got T={self.T}")

    @property
    def eps(self) -> float:
        return self.T / self.N

    @cached_property
    def t(self) -> np.ndarray:
        ts = self.eps * np.arange(self.N + 1)
        ts[-1] = self.T
        ts.flags.writeable = False
        return ts

    def refined(self, factor: int = 2) -> "TimeGrid":
        return TimeGrid(self.T, self.N * factor)


@dataclass(frozen=True)
class PhysicalParams:
    """Mass, Planck constant and the time step they are paired with.

    ``hbar_tilde = eps * hbar`` is the rescaled constant that appears in the
    functional momentum operator.
    """

    mass: float = 1.0
    hbar: float = 1.0
    eps: float = 1.0

    def __post_init__(self):
        for name in ("mass", "hbar", "eps"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValidationError(f"{name} must be positive, got {value}")

    @property
    def hbar_tilde(self) -> float:
        return self.eps * self.hbar

    def with_eps(self, eps: float) -> "PhysicalParams":
        return PhysicalParams(self.mass, self.hbar, eps)


def make_grids(space: dict, time: dict, physical: dict | None = None):
    """Validate plain config mappings and return ``(SpaceGrid, TimeGrid, PhysicalParams)``."""
    physical = dict(physical or {})
    try:
        sg = SpaceGrid(
            float(space["x_min"]),
            float(space["x_max"]),
            int(space["M"]),
            Boundary(str(space.get("boundary", "dirichlet")).lower()),
        )
        tg = TimeGrid(float(time["T"]), int(time["N"]))
    except KeyError as exc:
        raise ValidationError(f"missing grid field {exc.args[0]!r}") from None
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ValidationError):
            raise
        raise ValidationError(str(exc)) from None
    params = PhysicalParams(
        float(physical.get("mass", 1.0)), float(physical.get("hbar", 1.0)), tg.eps
    )
    return sg, tg, params


# ---------------------------------------------------------------- potentials


class Potential:
    """U(x, t); subclasses evaluate elementwise on arrays."""

    time_dependent = False

    def __call__(self, x, t, params: PhysicalParams):
        raise NotImplementedError

    def grad(self, x, t, params: PhysicalParams):
        """dU/dx."""
        raise NotImplementedError

    def curvature(self, x, t, params: PhysicalParams):
        """d2U/dx2."""
        raise NotImplementedError


@dataclass(frozen=True)
class Free(Potential):
    def __call__(self, x, t, params):
        return np.zeros_like(np.asarray(x, dtype=float))

    def grad(self, x, t, params):
        return np.zeros_like(np.asarray(x, dtype=float))

    def curvature(self, x, t, params):
        return np.zeros_like(np.asarray(x, dtype=float))


@dataclass(frozen=True)
class Harmonic(Potential):
    omega: float = 1.0

    def __post_init__(self):
        if not self.omega > 0:
            raise ValidationError(f"harmonic omega must be positive, got {self.omega}")

    def __call__(self, x, t, params):
        x = np.asarray(x, dtype=float)
        return 0.5 * params.mass * self.omega**2 * x**2

    def grad(self, x, t, params):
        return params.mass * self.omega**2 * np.asarray(x, dtype=float)

    def curvature(self, x, t, params):
        x = np.asarray(x, dtype=float)
        return np.full_like(x, params.mass * self.omega**2)


@dataclass(frozen=True)
class Quartic(Potential):
    a: float = 1.0

    def __call__(self, x, t, params):
        return self.a * np.asarray(x, dtype=float) ** 4

    def grad(self, x, t, params):
        return 4.0 * self.a * np.asarray(x, dtype=float) ** 3

    def curvature(self, x, t, params):
        return 12.0 * self.a * np.asarray(x, dtype=float) ** 2


@dataclass(frozen=True)
class TimeLinearCoupling(Potential):
    g: float = 1.0
    time_dependent = True

    def __call__(self, x, t, params):
        return self.g * np.asarray(x, dtype=float) * t

    def grad(self, x, t, params):
        return np.full_like(np.asarray(x, dtype=float), self.g * t)

    def curvature(self, x, t, params):
        return np.zeros_like(np.asarray(x, dtype=float))


@dataclass(frozen=True, eq=False)
class Tabulated(Potential):
    """Values on ``time.t x space.x`` (shape ``(N+1, M)``), bilinearly interpolated.

    Queries outside the tabulated rectangle raise; there is no extrapolation.
    """

    values: np.ndarray
    space: SpaceGrid
    time: TimeGrid
    time_dependent = True

    def __post_init__(self):
        vals = np.array(self.values, dtype=float)
        expected = (self.time.N + 1, self.space.M)
        if vals.shape != expected:
            raise ValidationError(f"tabulated potential has shape {vals.shape}, grid needs {expected}")
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)

    def _locate(self, x, t):
        x = np.asarray(x, dtype=float)
        sg, tg = self.space, self.time
        x_hi = sg.x_max if not sg.periodic else sg.x[-1]
        if np.any((x < sg.x_min) | (x > x_hi)) or not (0.0 <= t <= tg.T):
            raise ValidationError("tabulated potential queried off its grid")
        u = np.clip((x - sg.x_min) / sg.dx, 0, sg.M - 1)
        j = np.minimum(np.floor(u).astype(int), sg.M - 2)
        v = min(t / tg.eps, tg.N)
        n = min(int(math.floor(v)), tg.N - 1)
        return u - j, j, v - n, n

    def __call__(self, x, t, params=None):
        wx, j, wt, n = self._locate(x, t)
        row = (1 - wt) * self.values[n] + wt * self.values[n + 1]
        return (1 - wx) * row[j] + wx * row[j + 1]

    def grad(self, x, t, params=None):
        wx, j, wt, n = self._locate(x, t)
        row = (1 - wt) * self.values[n] + wt * self.values[n + 1]
        return (row[j + 1] - row[j]) / self.space.dx

    def curvature(self, x, t, params=None):
        return np.zeros_like(np.asarray(x, dtype=float))


def sample_potential(potential: Potential, x, t, params: PhysicalParams):
    return potential(x, t, params)


def potential_from_config(section: dict, space: SpaceGrid | None = None, time: TimeGrid | None = None) -> Potential:
    kind = str(section.get("kind", "")).strip().lower()
    if kind == "free":
        return Free()
    if kind == "harmonic":
        return Harmonic(float(section.get("omega", 1.0)))
    if kind == "quartic":
        return Quartic(float(section.get("a", 1.0)))
    if kind in ("time_linear", "timelinearcoupling", "time_linear_coupling"):
        return TimeLinearCoupling(float(section.get("g", 1.0)))
    if kind == "tabulated":
        if space is None or time is None:
            raise ValidationError("tabulated potential needs the grids")
        values = np.loadtxt(section["values_file"], delimiter=",", ndmin=2)
        return Tabulated(values, space, time)
    raise ValidationError(f"unknown potential kind {kind!r}")


# --------------------------------------------------------- quadrature/stencils


def quadrature(space: SpaceGrid, values) -> complex:
    """Integrate samples over the grid (last axis)."""
    values = np.asarray(values)
    if values.shape[-1] != space.M:
        raise ValidationError(f"expected {space.M} samples, got {values.shape[-1]}")
    return values @ space.weights


def _neighbours(space: SpaceGrid, f):
    f = np.asarray(f)
    if space.periodic:
        return np.roll(f, -1, axis=-1), np.roll(f, 1, axis=-1)
    up = np.zeros_like(f)
    down = np.zeros_like(f)
    up[..., :-1] = f[..., 1:]
    down[..., 1:] = f[..., :-1]
    return up, down


def first_difference(space: SpaceGrid, f) -> np.ndarray:
    """Central difference (f[j+1] - f[j-1]) / (2 dx) along the last axis."""
    up, down = _neighbours(space, f)
    return (up - down) / (2.0 * space.dx)


def second_difference(space: SpaceGrid, f) -> np.ndarray:
    """Three-point stencil (f[j+1] - 2 f[j] + f[j-1]) / dx^2 along the last axis."""
    up, down = _neighbours(space, f)
    return (up - 2.0 * np.asarray(f) + down) / space.dx**2


def stencil_matrices(space: SpaceGrid):
    """Sparse (M, M) matrices of the first and second difference stencils."""
    import scipy.sparse as sp

    M, dx = space.M, space.dx
    eye_up = sp.eye(M, k=1, format="lil")
    eye_down = sp.eye(M, k=-1, format="lil")
    if space.periodic:
        eye_up[M - 1, 0] = 1.0
        eye_down[0, M - 1] = 1.0
    up, down = eye_up.tocsr(), eye_down.tocsr()
    d1 = (up - down) / (2.0 * dx)
    d2 = (up + down - 2.0 * sp.eye(M, format="csr")) / dx**2
    return d1.tocsr(), d2.tocsr()


def locate(space: SpaceGrid, points):
    """Left neighbour index, right neighbour index and weight for linear interpolation.

    Points within 1e-9 grid cells of a node snap onto it, so grid-point
    queries read stored values bit-exactly.
    """
    points = np.asarray(points, dtype=float)
    if np.any(~space.contains(points)):
        bad = points[~space.contains(points)]
        raise ValidationError(f"point(s) {bad[:3]} outside [{space.x_min}, {space.x_max}]")
    u = (points - space.x_min) / space.dx
    nearest = np.rint(u)
    u = np.where(np.abs(u - nearest) < 1e-9, nearest, u)
    if space.periodic:
        j = np.floor(u).astype(int)
        w = u - j
        return j % space.M, (j + 1) % space.M, w
    j = np.minimum(np.floor(u).astype(int), space.M - 2)
    return j, j + 1, u - j


def interpolate_rows(space: SpaceGrid, fields, points) -> np.ndarray:
    """Row ``n`` of ``fields`` evaluated at ``points[n]``."""
    fields = np.asarray(fields)
    j0, j1, w = locate(space, points)
    rows = np.arange(fields.shape[0])
    return (1.0 - w) * fields[rows, j0] + w * fields[rows, j1]
