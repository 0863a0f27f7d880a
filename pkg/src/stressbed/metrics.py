"""Performance and nonstationarity measures.

Implements static and dynamic regret, the per-block worst-case comparator
over block-constant sequences, path-length, and the two temporal-variability
measures (value- and gradient-based). For quadratic and linear losses the
consecutive-round difference is affine, so the value variability uses exact
support-function maxima; anything else falls back to grid sampling and is
tagged accordingly.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import InvalidInputError, UnsupportedOracleError
from .geometry import ActionSpace, block_argmin
from .losses import LinearLoss, LossFunction, QuadraticLoss
from .records import ComparatorSequence, EnvironmentTrace


@dataclass(frozen=True)
class VariabilityReport:
    """Realized volatility of one (trace, comparator) pair."""

    path_length: float
    temporal_variability_f: float
    temporal_variability_g: float
    method: str


def _loss_list(losses) -> Sequence[LossFunction]:
    if isinstance(losses, EnvironmentTrace):
        return losses.losses
    return losses


def _homogeneous(losses) -> tuple[str, np.ndarray] | None:
    """(kind, (T, d) parameter stack) when all losses share one family."""
    if isinstance(losses, EnvironmentTrace):
        return losses.loss_kind, losses.targets
    if len(losses) == 0:
        return None
    if all(isinstance(l, QuadraticLoss) for l in losses):
        return "quadratic", np.stack([l.theta for l in losses])
    if all(isinstance(l, LinearLoss) for l in losses):
        return "linear", np.stack([l.g for l in losses])
    return None


def _as_actions(actions) -> np.ndarray:
    if isinstance(actions, ComparatorSequence):
        return actions.actions
    a = np.asarray(actions, dtype=float)
    return np.atleast_2d(a) if a.ndim == 1 else a


def total_loss(losses, actions) -> float:
    """Sum of per-round losses evaluated at the given action rows."""
    acts = _as_actions(actions)
    homo = _homogeneous(losses)
    if homo is not None:
        kind, params = homo
        if params.shape[0] != acts.shape[0]:
            raise InvalidInputError("losses and actions must have equal length")
        if kind == "quadratic":
            diff = acts - params
            return float(0.5 * np.einsum("ij,ij->", diff, diff))
        return float(np.einsum("ij,ij->", acts, params))
    seq = _loss_list(losses)
    if len(seq) != acts.shape[0]:
        raise InvalidInputError("losses and actions must have equal length")
    return float(sum(l.value(a) for l, a in zip(seq, acts)))


def static_regret(losses, actions, u, space: ActionSpace | None = None) -> float:
    """Cumulative loss of the actions minus that of one fixed comparator."""
    u = np.asarray(u, dtype=float)
    if space is not None and not space.contains(u):
        raise InvalidInputError("static comparator lies outside the action space")
    acts = _as_actions(actions)
    fixed = np.broadcast_to(u, acts.shape)
    return total_loss(losses, acts) - total_loss(losses, fixed)


def dynamic_regret(losses, actions, comparators, space: ActionSpace | None = None) -> float:
    """Cumulative loss of the actions minus that of a comparator sequence."""
    comp = _as_actions(comparators)
    acts = _as_actions(actions)
    if comp.shape != acts.shape:
        raise InvalidInputError("actions and comparators must have equal shape")
    if space is not None:
        for row in comp:
            if not space.contains(row):
                raise InvalidInputError("comparator sequence leaves the action space")
    return total_loss(losses, acts) - total_loss(losses, comp)


def best_comparator_in_UK(space: ActionSpace, losses, K: int) -> ComparatorSequence:
    """The block-constant comparator maximizing dynamic regret.

    The maximum over block-constant sequences is attained at the per-block
    minimizers, so this stitches `block_argmin` results into a sequence. A
    final partial block is treated as a full block of its own.
    """
    if K < 1:
        raise InvalidInputError("K must be >= 1")
    K = int(K)
    seq = _loss_list(losses)
    T = len(seq)
    if T == 0:
        raise InvalidInputError("empty loss sequence")
    homo = _homogeneous(losses)
    if homo is not None and homo[0] == "quadratic":
        params = homo[1]
        starts = np.arange(0, T, K)
        sums = np.add.reduceat(params, starts, axis=0)
        counts = np.diff(np.append(starts, T)).astype(float)
        means = sums / counts[:, None]
        mins = space.project(means)
        actions = np.repeat(mins, counts.astype(int), axis=0)
    else:
        rows = []
        for start in range(0, T, K):
            m = block_argmin(space, seq[start : start + K])
            rows.extend([m] * len(seq[start : start + K]))
        actions = np.stack(rows)
    return ComparatorSequence(actions=actions, block_size=K)


def path_length(comparators, metric: str = "euclid") -> float:
    """Sum of consecutive comparator distances, plain or squared Euclidean."""
    u = _as_actions(comparators)
    if u.shape[0] < 1:
        raise InvalidInputError("path length needs at least one round")
    steps = np.linalg.norm(u[1:] - u[:-1], axis=1)
    if metric == "euclid":
        return float(np.sum(steps))
    if metric == "sq_euclid":
        return float(np.sum(steps**2))
    raise InvalidInputError(f"unknown metric {metric!r}")


def _support_batch(space: ActionSpace, C: np.ndarray) -> np.ndarray:
    return np.atleast_1d(space.support(C))


def _affine_abs_sup(space: ActionSpace, C: np.ndarray, b: np.ndarray) -> np.ndarray:
    """sup_a |<c, a> + b| rowwise; exact via the support function."""
    hi = _support_batch(space, C) + b
    lo = -_support_batch(space, -C) + b
    return np.maximum(np.abs(hi), np.abs(lo))


def temporal_variability(
    losses, space: ActionSpace, grid_resolution: int = 200
) -> tuple[float, float]:
    """(V_f, V_g): summed worst-case consecutive change in loss values and
    squared change in gradients, maximized over the action space."""
    v_f, v_g, _ = _variability(losses, space, grid_resolution)
    return v_f, v_g


def variability_report(
    losses, comparators, space: ActionSpace, grid_resolution: int = 200
) -> VariabilityReport:
    v_f, v_g, method = _variability(losses, space, grid_resolution)
    return VariabilityReport(
        path_length=path_length(comparators),
        temporal_variability_f=v_f,
        temporal_variability_g=v_g,
        method=method,
    )


def _variability(losses, space, grid_resolution) -> tuple[float, float, str]:
    seq = _loss_list(losses)
    if len(seq) < 2:
        return 0.0, 0.0, "exact"
    homo = _homogeneous(losses)
    if homo is not None:
        kind, params = homo
        prev, cur = params[:-1], params[1:]
        if kind == "quadratic":
            # l_t - l_{t-1} = <theta_{t-1} - theta_t, a> + (|theta_t|^2 - |theta_{t-1}|^2)/2
            C = prev - cur
            b = 0.5 * (np.einsum("ij,ij->i", cur, cur) - np.einsum("ij,ij->i", prev, prev))
        else:
            C = cur - prev
            b = np.zeros(len(C))
        v_f = float(np.sum(_affine_abs_sup(space, C, b)))
        # gradient difference is the constant theta_{t-1} - theta_t (resp. g_t - g_{t-1})
        v_g = float(np.sum(np.einsum("ij,ij->i", C, C)))
        return v_f, v_g, "exact"
    # mixed loss families: fall back to grid sampling
    if space.dimension > 3:
        raise UnsupportedOracleError(
            "grid-sampled variability supports dimension <= 3 only"
        )
    pts = space.grid(grid_resolution)
    v_f = 0.0
    v_g = 0.0
    for prev, cur in zip(seq[:-1], seq[1:]):
        v_f += float(np.max(np.abs(cur.value(pts) - prev.value(pts))))
        gd = cur.grad(pts) - prev.grad(pts)
        v_g += float(np.max(np.einsum("ij,ij->i", gd, gd)))
    return v_f, v_g, f"grid-{grid_resolution}"
