"""Trace, comparator and run-record containers.

These are immutable value objects shared by the environment generators, the
learner runner and the metrics. All validation happens at construction.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import InvalidInputError
from .losses import LinearLoss, LossFunction, QuadraticLoss


@dataclass(frozen=True)
class EnvironmentTrace:
    """A full loss sequence plus the hidden metadata the generator knew.

    ``targets`` holds the stacked per-round loss parameters ((T, d) array of
    quadratic targets or linear gradients depending on ``loss_kind``);
    ``losses`` materializes them as loss objects on first use.
    """

    horizon: int
    loss_kind: str
    targets: np.ndarray
    latent_states: tuple[int, ...] | None = None
    switch_times: tuple[int, ...] | None = None
    env_id: str = ""
    family: str = ""
    seed: int = 0
    v_target: float = 0.0
    realized_path_length: float = 0.0
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        targets = np.asarray(self.targets, dtype=float)
        if targets.ndim != 2 or targets.shape[0] != self.horizon:
            raise InvalidInputError("targets must be a (T, d) array")
        targets.flags.writeable = False
        object.__setattr__(self, "targets", targets)
        if self.loss_kind not in ("quadratic", "linear"):
            raise InvalidInputError(f"unknown loss kind {self.loss_kind!r}")
        if self.latent_states is not None:
            states = tuple(int(s) for s in self.latent_states)
            if len(states) != self.horizon:
                raise InvalidInputError("latent_states length must equal horizon")
            object.__setattr__(self, "latent_states", states)
        if self.switch_times is not None:
            st = tuple(int(t) for t in self.switch_times)
            if any(b <= a for a, b in zip(st, st[1:])):
                raise InvalidInputError("switch_times must be strictly increasing")
            if st and (st[0] < 2 or st[-1] > self.horizon):
                raise InvalidInputError("switch_times must lie in [2, T]")
            object.__setattr__(self, "switch_times", st)

    @property
    def dimension(self) -> int:
        return self.targets.shape[1]

    @cached_property
    def losses(self) -> tuple[LossFunction, ...]:
        if self.loss_kind == "quadratic":
            return tuple(QuadraticLoss(row) for row in self.targets)
        return tuple(LinearLoss(row) for row in self.targets)

    def loss_at(self, t: int) -> LossFunction:
        """Loss of round ``t`` (1-based)."""
        return self.losses[t - 1]


@dataclass(frozen=True)
class ComparatorSequence:
    """A comparator sequence u_{1:T}, optionally constant on K-blocks."""

    actions: np.ndarray
    block_size: int | None = None

    def __post_init__(self):
        actions = np.asarray(self.actions, dtype=float)
        if actions.ndim != 2:
            raise InvalidInputError("comparator actions must be a (T, d) array")
        if self.block_size is not None:
            K = int(self.block_size)
            if K < 1:
                raise InvalidInputError("block size must be >= 1")
            T = actions.shape[0]
            for start in range(0, T, K):
                block = actions[start : start + K]
                if not np.all(block == block[0]):
                    raise InvalidInputError(
                        f"comparator not constant on block starting at round {start + 1}"
                    )
            object.__setattr__(self, "block_size", K)
        actions.flags.writeable = False
        object.__setattr__(self, "actions", actions)

    @property
    def horizon(self) -> int:
        return self.actions.shape[0]

    @property
    def dimension(self) -> int:
        return self.actions.shape[1]


@dataclass(frozen=True)
class RunRecord:
    """Per-round actions and losses of one learner run on one trace."""

    learner_id: str
    env_id: str
    seed: int
    actions: np.ndarray
    loss_values: np.ndarray

    def __post_init__(self):
        actions = np.asarray(self.actions, dtype=float)
        values = np.asarray(self.loss_values, dtype=float)
        if actions.ndim != 2 or values.ndim != 1 or actions.shape[0] != values.size:
            raise InvalidInputError("actions must be (T, d) and loss_values (T,)")
        actions.flags.writeable = False
        values.flags.writeable = False
        object.__setattr__(self, "actions", actions)
        object.__setattr__(self, "loss_values", values)

    @property
    def horizon(self) -> int:
        return self.loss_values.size

    @cached_property
    def cumulative_loss(self) -> np.ndarray:
        return np.cumsum(self.loss_values)

    @property
    def total_loss(self) -> float:
        return float(np.sum(self.loss_values))
