"""Per-round convex losses.

Two families are enough for the testbed: quadratic tracking losses
``0.5 * ||a - theta||^2`` and linear losses ``<g, a>``. Values and gradients
accept a single point or an (n, d) batch of rows.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np


@dataclass(frozen=True)
class QuadraticLoss:
    """0.5 * ||a - theta||^2 with gradient a - theta."""

    theta: np.ndarray
    kind: str = field(default="quadratic", init=False)

    def __post_init__(self):
        t = np.atleast_1d(np.asarray(self.theta, dtype=float))
        t.flags.writeable = False
        object.__setattr__(self, "theta", t)

    def value(self, a: np.ndarray) -> float | np.ndarray:
        a = np.asarray(a, dtype=float)
        if a.ndim == 1:
            d = a - self.theta
            return 0.5 * float(d @ d)
        d = a - self.theta
        return 0.5 * np.einsum("ij,ij->i", d, d)

    def grad(self, a: np.ndarray) -> np.ndarray:
        return np.asarray(a, dtype=float) - self.theta


@dataclass(frozen=True)
class LinearLoss:
    """<g, a> with constant gradient g."""

    g: np.ndarray
    kind: str = field(default="linear", init=False)

    def __post_init__(self):
        g = np.atleast_1d(np.asarray(self.g, dtype=float))
        g.flags.writeable = False
        object.__setattr__(self, "g", g)

    def value(self, a: np.ndarray) -> float | np.ndarray:
        a = np.asarray(a, dtype=float)
        if a.ndim == 1:
            return float(a @ self.g)
        return a @ self.g

    def grad(self, a: np.ndarray) -> np.ndarray:
        a = np.asarray(a, dtype=float)
        if a.ndim == 1:
            return self.g.copy()
        return np.broadcast_to(self.g, a.shape).copy()


LossFunction = QuadraticLoss | LinearLoss


def split_losses(
    losses: Sequence[LossFunction],
) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """Split a slice into quadratic targets and linear gradients."""
    thetas, grads = [], []
    for loss in losses:
        if isinstance(loss, QuadraticLoss):
            thetas.append(loss.theta)
        elif isinstance(loss, LinearLoss):
            grads.append(loss.g)
        else:
            raise TypeError(f"unknown loss type: {type(loss)!r}")
    return thetas, grads


def stack_quadratic_targets(losses: Sequence[LossFunction]) -> np.ndarray | None:
    """(T, d) target array when every loss is quadratic, else None."""
    if all(isinstance(l, QuadraticLoss) for l in losses) and len(losses) > 0:
        return np.stack([l.theta for l in losses])
    return None
