"""Online learners under full-information feedback.

The game contract: the harness calls ``act(t)`` to get the round-t action,
evaluates the round's loss at that action, then calls ``observe(t, fb)``
with the value, the gradient at the played point, the full loss handle and,
when the environment supports hindsight observability, the round's latent
regime id. A learner never sees a loss before acting on that round.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError, RunAbortedError
from .geometry import ActionSpace, block_argmin
from .losses import LinearLoss, LossFunction, QuadraticLoss
from .records import EnvironmentTrace, RunRecord

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Feedback:
    """Everything revealed to the learner after it committed to an action."""

    value: float
    gradient: np.ndarray
    loss: LossFunction
    latent_state: int | None = None


def ogd_step(space: ActionSpace, x: np.ndarray, gradient: np.ndarray, eta: float) -> np.ndarray:
    """One projected gradient step; the workhorse of half the roster."""
    gradient = np.asarray(gradient, dtype=float)
    if not np.all(np.isfinite(gradient)):
        raise RunAbortedError("non-finite gradient in OGD update")
    return space.project(x - eta * gradient)


def hedge_step(weights: np.ndarray, expert_losses: np.ndarray, eta_meta: float) -> np.ndarray:
    """Multiplicative-weights update: w_i ∝ w_i * exp(-eta * loss_i).

    If every weight underflows to zero the vector resets to uniform and a
    warning is logged; aggregation must not silently die mid-run.
    """
    weights = np.asarray(weights, dtype=float)
    expert_losses = np.asarray(expert_losses, dtype=float)
    if not np.all(np.isfinite(expert_losses)):
        raise RunAbortedError("non-finite expert losses in hedge update")
    if eta_meta < 0:
        raise InvalidInputError("hedge step size must be >= 0")
    new = weights * np.exp(-eta_meta * expert_losses)
    total = float(np.sum(new))
    if total <= 0.0 or not np.isfinite(total):
        log.warning("hedge weights underflowed; resetting to uniform")
        return np.full(weights.size, 1.0 / weights.size)
    return new / total


class Learner:
    """Base class; subclasses implement ``act`` and ``observe``."""

    learner_id = "base"

    def __init__(self, space: ActionSpace, horizon: int, seed: int = 0):
        self.space = space
        self.horizon = int(horizon)
        self.seed = int(seed)
        self._params: dict = {}

    def act(self, t: int) -> np.ndarray:
        raise NotImplementedError

    def observe(self, t: int, fb: Feedback) -> None:
        raise NotImplementedError

    def get_params(self) -> dict:
        """Hyperparameters as configured, for config echo and CSV provenance."""
        return dict(self._params)

    # shared schedule helper
    def _eta(self, t: int, step: float | None, grad_bound: float | None) -> float:
        if step is not None:
            return step
        G = grad_bound if grad_bound is not None else self.space.diameter()
        return self.space.diameter() / (G * math.sqrt(t))


class OGD(Learner):
    """Projected online gradient descent.

    ``step=None`` uses the diminishing schedule D/(G sqrt(t)) with D the set
    diameter and G the configured gradient bound (defaults to the diameter,
    which is exact for quadratic tracking losses with in-set targets).
    """

    learner_id = "ogd"

    def __init__(self, space, horizon, seed=0, step=None, grad_bound=None):
        super().__init__(space, horizon, seed)
        self.step = step
        self.grad_bound = grad_bound
        self.x = space.centroid()
        self._params = {"step": step, "grad_bound": grad_bound}

    def act(self, t):
        return self.x

    def observe(self, t, fb):
        self.x = ogd_step(self.space, self.x, fb.gradient, self._eta(t, self.step, self.grad_bound))


class GreedyLearner(Learner):
    """Plays the minimizer of the single previous loss; centroid at t=1.

    The textbook one-step-behind baseline: its regret against per-round
    comparators is controlled by how much the environment moves per round,
    and by nothing else.
    """

    learner_id = "greedy"

    def __init__(self, space, horizon, seed=0):
        super().__init__(space, horizon, seed)
        self.x = space.centroid()

    def act(self, t):
        return self.x

    def observe(self, t, fb):
        self.x = block_argmin(self.space, [fb.loss])


class WindowedLearner(Learner):
    """Follow-the-leader over a sliding window of the last W losses.

    ``window=None`` means all history. Quadratic windows reduce to the
    projected rolling mean of targets; linear parts fold into the center.
    """

    learner_id = "windowed"

    def __init__(self, space, horizon, seed=0, window=None):
        super().__init__(space, horizon, seed)
        if window is not None and window < 1:
            raise InvalidInputError("window length must be >= 1")
        self.window = window
        self._params = {"window": window}
        self._buf: list[LossFunction] = []
        self._theta_sum = np.zeros(space.dimension)
        self._n_quad = 0
        self._g_sum = np.zeros(space.dimension)
        self.x = space.centroid()

    def act(self, t):
        return self.x

    def _push(self, loss: LossFunction):
        if isinstance(loss, QuadraticLoss):
            self._theta_sum += loss.theta
            self._n_quad += 1
        else:
            self._g_sum += loss.g

    def _pop(self, loss: LossFunction):
        if isinstance(loss, QuadraticLoss):
            self._theta_sum -= loss.theta
            self._n_quad -= 1
        else:
            self._g_sum -= loss.g

    def observe(self, t, fb):
        self._buf.append(fb.loss)
        self._push(fb.loss)
        if self.window is not None and len(self._buf) > self.window:
            self._pop(self._buf.pop(0))
        if self._n_quad > 0:
            center = (self._theta_sum - self._g_sum) / self._n_quad
            self.x = self.space.project(center)
        else:
            self.x = self.space.linear_argmin(self._g_sum)


class RestartLearner(Learner):
    """OGD whose iterate and step schedule reset every ``period`` rounds."""

    learner_id = "restart"

    def __init__(self, space, horizon, seed=0, period=64, step=None, grad_bound=None):
        super().__init__(space, horizon, seed)
        if period < 1:
            raise InvalidInputError("restart period must be >= 1")
        self.period = int(period)
        self.step = step
        self.grad_bound = grad_bound
        self._params = {"period": period, "step": step, "grad_bound": grad_bound}
        self.x = space.centroid()
        self._inner_t = 0

    def act(self, t):
        return self.x

    def observe(self, t, fb):
        self._inner_t += 1
        self.x = ogd_step(
            self.space, self.x, fb.gradient, self._eta(self._inner_t, self.step, self.grad_bound)
        )
        if self._inner_t >= self.period:
            self.x = self.space.centroid()
            self._inner_t = 0


class MetaExpertLearner(Learner):
    """Hedge over a geometric grid of constant-step OGD experts.

    Maintains N = ceil(log2 T) + 1 experts with steps eta_i = 2^i * D/(G sqrt(T)),
    plays the weight-averaged iterate (feasible by convexity), feeds every
    expert the gradient at its own iterate, and reweights by exponentiated
    expert losses.
    """

    learner_id = "meta_expert"

    def __init__(self, space, horizon, seed=0, n_experts=None, eta_meta=None, grad_bound=None):
        super().__init__(space, horizon, seed)
        if n_experts is None:
            n_experts = int(math.ceil(math.log2(max(horizon, 2)))) + 1
        if n_experts < 1:
            raise InvalidInputError("need at least one expert")
        self._params = {"n_experts": n_experts, "eta_meta": eta_meta, "grad_bound": grad_bound}
        D = space.diameter()
        G = grad_bound if grad_bound is not None else D
        base = D / (G * math.sqrt(max(horizon, 1)))
        self.etas = base * (2.0 ** np.arange(n_experts))
        if eta_meta is None:
            # loss values live in roughly [0, G*D]; classic sqrt(8 ln N / T) scaling
            scale = max(G * D, 1e-12)
            eta_meta = math.sqrt(8.0 * math.log(max(n_experts, 2)) / max(horizon, 1)) / scale
        self.eta_meta = float(eta_meta)
        self.iterates = np.tile(space.centroid(), (n_experts, 1))
        self.weights = np.full(n_experts, 1.0 / n_experts)

    def act(self, t):
        return self.weights @ self.iterates

    def observe(self, t, fb):
        expert_losses = np.atleast_1d(fb.loss.value(self.iterates))
        grads = fb.loss.grad(self.iterates)
        if not np.all(np.isfinite(grads)):
            raise RunAbortedError("non-finite expert gradient")
        self.iterates = self.space.project(self.iterates - self.etas[:, None] * grads)
        self.weights = hedge_step(self.weights, expert_losses, self.eta_meta)


class RegimeLearner(Learner):
    """One OGD memory slot per hindsight-revealed regime id.

    Acts with the slot of the predicted current regime (by default the last
    revealed id; with ``use_transitions`` a frequency table over
    (regime, run-length) pairs, which learns exact cyclic schedules). On
    reveal, the update is routed to the revealed regime's slot using the
    loss handle's gradient at that slot, so each slot runs plain OGD on its
    own subsequence. Unseen regimes start at the centroid.
    """

    learner_id = "regime"

    def __init__(self, space, horizon, seed=0, step=None, grad_bound=None, use_transitions=False):
        super().__init__(space, horizon, seed)
        self.step = step
        self.grad_bound = grad_bound
        self.use_transitions = bool(use_transitions)
        self._params = {
            "step": step,
            "grad_bound": grad_bound,
            "use_transitions": use_transitions,
        }
        self.memory: dict[int, np.ndarray] = {}
        self.visits: dict[int, int] = {}
        self._last: int | None = None
        self._run_length = 0
        self._transitions: dict[tuple[int, int], dict[int, int]] = {}

    def _predict(self) -> int | None:
        if self._last is None:
            return None
        if self.use_transitions:
            row = self._transitions.get((self._last, self._run_length))
            if row:
                best = max(row.items(), key=lambda kv: (kv[1], -kv[0]))
                return best[0]
        return self._last

    def act(self, t):
        r = self._predict()
        if r is None or r not in self.memory:
            return self.space.centroid()
        return self.memory[r]

    def observe(self, t, fb):
        if fb.latent_state is None:
            raise RunAbortedError(
                "regime learner needs hindsight regime reveals; environment sent none"
            )
        r = int(fb.latent_state)
        x = self.memory.get(r)
        if x is None:
            x = self.space.centroid()
        grad = fb.loss.grad(x)
        self.visits[r] = self.visits.get(r, 0) + 1
        eta = self._eta(self.visits[r], self.step, self.grad_bound)
        self.memory[r] = ogd_step(self.space, x, grad, eta)
        if self._last is not None:
            key = (self._last, self._run_length)
            row = self._transitions.setdefault(key, {})
            row[r] = row.get(r, 0) + 1
        if r == self._last:
            self._run_length += 1
        else:
            self._run_length = 1
        self._last = r


LEARNERS: dict[str, tuple[type[Learner], dict]] = {
    "ogd": (OGD, {"step": None, "grad_bound": None}),
    "greedy": (GreedyLearner, {}),
    "windowed": (WindowedLearner, {"window": None}),
    "restart": (RestartLearner, {"period": 64, "step": None, "grad_bound": None}),
    "meta_expert": (MetaExpertLearner, {"n_experts": None, "eta_meta": None, "grad_bound": None}),
    "regime": (RegimeLearner, {"step": None, "grad_bound": None, "use_transitions": False}),
}


def make_learner(
    learner_id: str, space: ActionSpace, horizon: int, seed: int = 0, **params
) -> Learner:
    if learner_id not in LEARNERS:
        raise InvalidInputError(f"unknown learner {learner_id!r}")
    cls, defaults = LEARNERS[learner_id]
    unknown = set(params) - set(defaults)
    if unknown:
        raise InvalidInputError(f"unknown hyperparameters for {learner_id!r}: {sorted(unknown)}")
    return cls(space, horizon, seed, **{**defaults, **params})


def run_learner(learner: Learner, trace: EnvironmentTrace) -> RunRecord:
    """Play one trace start to finish, enforcing the act-then-observe order
    and per-round feasibility."""
    T = trace.horizon
    space = learner.space
    actions = np.empty((T, trace.dimension))
    values = np.empty(T)
    quadratic = trace.loss_kind == "quadratic"
    losses = trace.losses
    latent = trace.latent_states
    for t in range(1, T + 1):
        a = np.asarray(learner.act(t), dtype=float)
        if not np.all(np.isfinite(a)):
            raise RunAbortedError(f"learner {learner.learner_id} played a non-finite action at round {t}")
        if not space.contains(a, 1e-9):
            raise RunAbortedError(f"learner {learner.learner_id} left the action space at round {t}")
        actions[t - 1] = a
        if quadratic:
            diff = a - trace.targets[t - 1]
            value = 0.5 * float(diff @ diff)
            grad = diff
        else:
            value = float(trace.targets[t - 1] @ a)
            grad = trace.targets[t - 1]
        values[t - 1] = value
        learner.observe(
            t,
            Feedback(
                value=value,
                gradient=grad,
                loss=losses[t - 1],
                latent_state=None if latent is None else latent[t - 1],
            ),
        )
    return RunRecord(
        learner_id=learner.learner_id,
        env_id=trace.env_id,
        seed=learner.seed,
        actions=actions,
        loss_values=values,
    )
