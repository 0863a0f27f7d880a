"""Nonstationary loss-sequence generators with a controllable stress knob.

Five families share one contract: an :class:`EnvSpec` goes in, a fully
deterministic :class:`EnvironmentTrace` comes out, and the trace records the
volatility it actually realized next to the level that was requested. All
targets are drawn through labeled child seeds of the spec seed, so traces
are bit-identical across runs and independent of generation order.

Families
--------
piecewise           i.i.d. block-constant targets (block length from K, or
                    derived from the volatility target when one is set)
drift               projected random walk with a prescribed path budget
besbes_adversarial  coin-flip batches between two antipodal targets
zhang_piecewise     budgeted segments, each minimizer far from the last
latent_regime       a recurring pool of regimes on a cyclic schedule,
                    revealed to learners in hindsight
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidSpecError
from .geometry import ActionSpace, Ball, Box, Simplex, space_from_json
from .records import EnvironmentTrace
from .seeding import child_seed, rng_for

TRACE_SCHEMA = "stressbed.trace.v1"


@dataclass(frozen=True)
class EnvSpec:
    """Everything a generator needs: family, horizon, stress level, seed."""

    family: str
    horizon: int
    space: ActionSpace
    v_target: float = 0.0
    block_size: int = 1
    num_states: int = 1
    seed: int = 0
    eps_gap: float | None = None
    jitter: bool = False

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise InvalidSpecError(f"unknown environment family {self.family!r}")
        if self.horizon < 1:
            raise InvalidSpecError("horizon must be >= 1")
        if not (np.isfinite(self.v_target) and self.v_target >= 0):
            raise InvalidSpecError("volatility target must be finite and >= 0")
        if self.block_size < 1:
            raise InvalidSpecError("block size must be >= 1")
        if self.num_states < 1:
            raise InvalidSpecError("number of latent states must be >= 1")
        if self.eps_gap is not None and self.eps_gap <= 0:
            raise InvalidSpecError("eps_gap must be positive")

    def to_json(self) -> dict:
        return {
            "family": self.family,
            "horizon": int(self.horizon),
            "space": self.space.to_json(),
            "v_target": float(self.v_target),
            "block_size": int(self.block_size),
            "num_states": int(self.num_states),
            "seed": int(self.seed),
            "eps_gap": None if self.eps_gap is None else float(self.eps_gap),
            "jitter": bool(self.jitter),
        }


def spec_from_json(obj: dict) -> EnvSpec:
    obj = dict(obj)
    obj["space"] = space_from_json(obj["space"])
    return EnvSpec(**obj)


def _env_id(spec: EnvSpec) -> str:
    digest = hashlib.blake2b(
        json.dumps(spec.to_json(), sort_keys=True).encode(), digest_size=5
    ).hexdigest()
    return f"{spec.family}-{digest}"


def mean_draw_distance(space: ActionSpace) -> float:
    """Expected distance between two independent uniform draws.

    Exact for one-dimensional boxes; otherwise a Monte-Carlo estimate with a
    fixed internal seed, so the value is a deterministic property of the set.
    """
    if isinstance(space, Box) and space.dimension == 1:
        return float(space.hi[0] - space.lo[0]) / 3.0
    rng = rng_for(0, "mean-draw-distance")
    a = space.sample(rng, 4096)
    b = space.sample(rng, 4096)
    return float(np.mean(np.linalg.norm(a - b, axis=1)))


def _switches(targets: np.ndarray) -> tuple[int, ...]:
    changed = np.any(targets[1:] != targets[:-1], axis=1)
    return tuple(int(t) for t in (np.nonzero(changed)[0] + 2))


def _realized_path(targets: np.ndarray) -> float:
    return float(np.sum(np.linalg.norm(targets[1:] - targets[:-1], axis=1)))


def _finish(
    spec: EnvSpec,
    targets: np.ndarray,
    latent: tuple[int, ...] | None,
    extra: dict,
    switch_times: tuple[int, ...] | None = "auto",  # type: ignore[assignment]
) -> EnvironmentTrace:
    if switch_times == "auto":
        switch_times = _switches(targets)
    return EnvironmentTrace(
        horizon=spec.horizon,
        loss_kind="quadratic",
        targets=targets,
        latent_states=latent,
        switch_times=switch_times,
        env_id=_env_id(spec),
        family=spec.family,
        seed=spec.seed,
        v_target=spec.v_target,
        realized_path_length=_realized_path(targets),
        extra=extra,
    )


def _blocks_from_target(spec: EnvSpec, step_scale: float) -> int:
    """Block length implied by the volatility target: roughly one target
    redraw per `step_scale` units of requested path."""
    if spec.v_target <= 0 or step_scale <= 0:
        return spec.block_size
    n_blocks = 1 + int(round(spec.v_target / step_scale))
    n_blocks = min(max(n_blocks, 1), spec.horizon)
    return math.ceil(spec.horizon / n_blocks)


def gen_piecewise(spec: EnvSpec) -> EnvironmentTrace:
    """Block-constant quadratic targets drawn i.i.d. uniform on the set."""
    T = spec.horizon
    if spec.block_size > T:
        raise InvalidSpecError(f"block size {spec.block_size} exceeds horizon {T}")
    K = _blocks_from_target(spec, mean_draw_distance(spec.space))
    n_blocks = math.ceil(T / K)
    draws = spec.space.sample(rng_for(spec.seed, "piecewise-targets"), n_blocks)
    targets = np.repeat(draws, K, axis=0)[:T]
    return _finish(spec, targets, None, {"block_length": K, "num_blocks": n_blocks})


def gen_drift(spec: EnvSpec) -> EnvironmentTrace:
    """Projected random walk whose minimizer path length tracks the target.

    Each of the T-1 steps has length v_target / (T-1) before projection;
    any shortfall from clipping at the boundary is recorded.
    """
    T = spec.horizon
    diam = spec.space.diameter()
    if spec.v_target > T * diam:
        raise InvalidSpecError("volatility target exceeds what the horizon can hold")
    rng = rng_for(spec.seed, "drift")
    start = spec.space.sample(rng)
    targets = np.empty((T, spec.space.dimension))
    targets[0] = start
    if T > 1 and spec.v_target > 0:
        step = spec.v_target / (T - 1)
        dirs = rng.standard_normal((T - 1, spec.space.dimension))
        norms = np.linalg.norm(dirs, axis=1, keepdims=True)
        norms[norms == 0] = 1.0
        dirs /= norms
        for t in range(1, T):
            targets[t] = spec.space.project(targets[t - 1] + step * dirs[t - 1])
    else:
        targets[1:] = start
    realized = _realized_path(targets)
    extra = {"clip_gap": max(spec.v_target - realized, 0.0)}
    return _finish(spec, targets, None, extra, switch_times=None)


def _gap_direction(space: ActionSpace) -> np.ndarray:
    c = space.centroid()
    if isinstance(space, Box):
        v = space.hi - c
    elif isinstance(space, Ball):
        v = np.zeros(space.dimension)
        v[0] = 1.0
    elif isinstance(space, Simplex):
        v = -c.copy()
        v[0] += 1.0
    else:  # pragma: no cover - future set kinds
        v = np.zeros(space.dimension)
        v[0] = 1.0
    return v / np.linalg.norm(v)


def gen_besbes_adversarial(spec: EnvSpec) -> EnvironmentTrace:
    """Batched coin-flip targets: each batch picks one of two antipodal
    candidates by an independent fair coin, so no learner can anticipate
    where the next optimum lands. Coin outcomes fill ``latent_states``."""
    T = spec.horizon
    diam = spec.space.diameter()
    gap = spec.eps_gap if spec.eps_gap is not None else diam / 4.0
    n_batches = max(1, int(round(spec.v_target / gap)))
    batch_len = T // n_batches
    if batch_len < 1:
        raise InvalidSpecError("volatility too high for horizon: empty batches")
    direction = _gap_direction(spec.space)
    c = spec.space.centroid()
    candidates = np.stack(
        [
            spec.space.project(c - 0.5 * gap * direction),
            spec.space.project(c + 0.5 * gap * direction),
        ]
    )
    coins = rng_for(spec.seed, "besbes-coins").integers(0, 2, size=n_batches)
    lengths = np.full(n_batches, batch_len)
    lengths[-1] = T - batch_len * (n_batches - 1)
    targets = np.repeat(candidates[coins], lengths, axis=0)
    latent = tuple(int(x) for x in np.repeat(coins, lengths))
    extra = {
        "eps_gap": gap,
        "realized_gap": float(np.linalg.norm(candidates[1] - candidates[0])),
        "batch_length": int(batch_len),
        "num_batches": int(n_batches),
        "candidates": candidates.tolist(),
    }
    return _finish(spec, targets, latent, extra)


def _far_point(space: ActionSpace, prev: np.ndarray) -> np.ndarray:
    """An extreme point at distance >= diameter/2 from ``prev``."""
    if isinstance(space, Box):
        return np.where(prev - space.lo > space.hi - prev, space.lo, space.hi)
    if isinstance(space, Ball):
        delta = space.center - prev
        norm = np.linalg.norm(delta)
        if norm == 0:
            d = np.zeros(space.dimension)
            d[0] = 1.0
        else:
            d = delta / norm
        return space.center + space.radius * d
    vertex = np.zeros(space.dimension)
    vertex[int(np.argmin(prev))] = 1.0
    return vertex


def gen_zhang_piecewise(spec: EnvSpec) -> EnvironmentTrace:
    """Budgeted switching: L = 1 + floor(V / diameter) near-equal segments,
    each segment's minimizer at least diameter/2 from the previous one."""
    T = spec.horizon
    diam = spec.space.diameter()
    n_segments = 1 + int(spec.v_target / diam)
    if n_segments > T:
        raise InvalidSpecError(f"{n_segments} segments do not fit in horizon {T}")
    rng = rng_for(spec.seed, "zhang-targets")
    mins = [spec.space.sample(rng)]
    for _ in range(n_segments - 1):
        for _ in range(64):
            cand = spec.space.sample(rng)
            if np.linalg.norm(cand - mins[-1]) >= diam / 2.0:
                break
        else:
            cand = _far_point(spec.space, mins[-1])
        mins.append(cand)
    lengths = [len(chunk) for chunk in np.array_split(np.arange(T), n_segments)]
    targets = np.repeat(np.stack(mins), lengths, axis=0)
    extra = {"num_segments": int(n_segments), "min_jump": diam / 2.0}
    return _finish(spec, targets, None, extra)


def gen_latent_regime(spec: EnvSpec) -> EnvironmentTrace:
    """A fixed pool of regime targets visited on a cyclic schedule.

    Regimes recur, so a learner that files experience per regime keeps
    getting better at each one. The block length comes from ``block_size``,
    or is derived from the volatility target when one is set. The jitter
    flag perturbs block lengths by +-25% while keeping the cyclic order.
    """
    T = spec.horizon
    X = spec.num_states
    pool = spec.space.sample(rng_for(spec.seed, "latent-targets"), X)
    if X == 1:
        targets = np.repeat(pool, T, axis=0)
        return _finish(
            spec, targets, (0,) * T, {"block_length": T, "num_blocks": 1, "num_states": 1}
        )
    # mean distance along the cyclic visiting order, for the stress knob
    cyc = np.linalg.norm(pool - np.roll(pool, -1, axis=0), axis=1)
    K = _blocks_from_target(spec, float(np.mean(cyc)))
    lengths: list[int] = []
    if spec.jitter:
        jrng = rng_for(spec.seed, "latent-jitter")
        lo = max(1, int(round(0.75 * K)))
        hi = max(lo, int(round(1.25 * K)))
        while sum(lengths) < T:
            lengths.append(int(jrng.integers(lo, hi + 1)))
    else:
        lengths = [K] * math.ceil(T / K)
    # truncate the last block to the horizon
    total = 0
    schedule: list[tuple[int, int]] = []
    for i, L in enumerate(lengths):
        take = min(L, T - total)
        if take <= 0:
            break
        schedule.append((i % X, take))
        total += take
    states = np.concatenate([np.full(n, s, dtype=int) for s, n in schedule])
    targets = pool[states]
    extra = {
        "block_length": int(K),
        "num_blocks": len(schedule),
        "num_states": int(X),
        "regime_targets": pool.tolist(),
    }
    return _finish(spec, targets, tuple(int(s) for s in states), extra)


FAMILIES = {
    "piecewise": gen_piecewise,
    "drift": gen_drift,
    "besbes_adversarial": gen_besbes_adversarial,
    "zhang_piecewise": gen_zhang_piecewise,
    "latent_regime": gen_latent_regime,
}

# spec fields each family actually reads, for `stressbed list`
FAMILY_PARAMS = {
    "piecewise": {"v_target": 0.0, "block_size": 1},
    "drift": {"v_target": 0.0},
    "besbes_adversarial": {"v_target": 0.0, "eps_gap": None},
    "zhang_piecewise": {"v_target": 0.0},
    "latent_regime": {"v_target": 0.0, "block_size": 1, "num_states": 1, "jitter": False},
}


def generate(spec: EnvSpec) -> EnvironmentTrace:
    """Dispatch to the family generator."""
    return FAMILIES[spec.family](spec)


def trace_to_json(trace: EnvironmentTrace, space: ActionSpace) -> dict:
    """Documented JSON form of a trace, for replay and cross-language use."""
    return {
        "schema": TRACE_SCHEMA,
        "env_id": trace.env_id,
        "family": trace.family,
        "seed": int(trace.seed),
        "horizon": int(trace.horizon),
        "dimension": int(trace.dimension),
        "space": space.to_json(),
        "loss_kind": trace.loss_kind,
        "targets": trace.targets.tolist(),
        "latent_states": None if trace.latent_states is None else list(trace.latent_states),
        "switch_times": None if trace.switch_times is None else list(trace.switch_times),
        "v_target": float(trace.v_target),
        "realized_path_length": float(trace.realized_path_length),
        "extra": _jsonable(trace.extra),
    }


def trace_from_json(obj: dict) -> tuple[EnvironmentTrace, ActionSpace]:
    if obj.get("schema") != TRACE_SCHEMA:
        raise InvalidSpecError(f"not a {TRACE_SCHEMA} document")
    space = space_from_json(obj["space"])
    trace = EnvironmentTrace(
        horizon=obj["horizon"],
        loss_kind=obj["loss_kind"],
        targets=np.asarray(obj["targets"], dtype=float),
        latent_states=None if obj["latent_states"] is None else tuple(obj["latent_states"]),
        switch_times=None if obj["switch_times"] is None else tuple(obj["switch_times"]),
        env_id=obj["env_id"],
        family=obj["family"],
        seed=obj["seed"],
        v_target=obj["v_target"],
        realized_path_length=obj["realized_path_length"],
        extra=obj.get("extra", {}),
    )
    return trace, space


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    return obj
