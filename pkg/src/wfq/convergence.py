"""Observed convergence orders from step-size sweeps."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError

# metrics at or below this are numerically zero
ZERO_FLOOR = 1e-13


@dataclass(frozen=True)
class ConvergenceResult:
    eps: np.ndarray
    metric: np.ndarray
    order: float  # inf when exact
    pair_orders: np.ndarray
    exact: bool
    reliable: bool

    def order_label(self) -> str:
        return "exact" if self.exact else f"{self.order:.3f}"

    def to_dict(self) -> dict:
        return {
            "eps": self.eps.tolist(),
            "metric": self.metric.tolist(),
            "order": "exact" if self.exact else self.order,
            "pair_orders": self.pair_orders.tolist(),
            "reliable": self.reliable,
        }

    def rows(self):
        return [(float(e), float(m)) for e, m in zip(self.eps, self.metric)]


def convergence_study(eps, metric, floor: float = ZERO_FLOOR, rtol: float = 1e-6) -> ConvergenceResult:
    """Least-squares slope of log(metric) against log(eps).

    ``eps`` must hold at least three values in geometric progression.  If
    every metric is below ``floor`` the order is reported as exact; if the
    metric does not decrease monotonically with eps the fit is flagged as
    unreliable.
    """
    eps = np.asarray(eps, dtype=float)
    metric = np.abs(np.asarray(metric, dtype=float))
    order_idx = np.argsort(eps)[::-1]
    eps, metric = eps[order_idx], metric[order_idx]
    if eps.size < 3:
        raise ValidationError("a convergence study needs at least three step sizes")
    ratios = eps[:-1] / eps[1:]
    if not np.allclose(ratios, ratios[0], rtol=rtol):
        raise ValidationError(f"step sizes are not in geometric progression: {eps}")
    if np.all(metric <= floor):
        return ConvergenceResult(eps, metric, float("inf"), np.full(eps.size - 1, np.inf), True, True)
    safe = np.maximum(metric, np.finfo(float).tiny)
    pair_orders = np.log(safe[:-1] / safe[1:]) / np.log(ratios)
    slope = np.polyfit(np.log(eps), np.log(safe), 1)[0]
    monotone = bool(np.all(np.diff(metric) < 0))
    return ConvergenceResult(eps, metric, float(slope), pair_orders, False, monotone)
