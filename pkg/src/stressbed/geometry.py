"""Bounded convex action sets and their optimization oracles.

Three set families are supported: axis-aligned boxes, Euclidean balls and
the probability simplex. Each exposes Euclidean projection (single point or
batched rows), a support function, a linear-minimization oracle with ties
broken toward the centroid, uniform sampling, and membership tests. On top
of those, :func:`block_argmin` minimizes a summed slice of losses in closed
form and :func:`grid_oracle_argmin` is the deliberately brute-force grid
minimizer the test suites use as an independent reference.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product
from typing import Sequence

import numpy as np

from .errors import InvalidInputError, UnsupportedOracleError
from .losses import LossFunction, split_losses


def _check_finite(x: np.ndarray, what: str = "input") -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise InvalidInputError(f"{what} contains non-finite entries")
    return x


class ActionSpace:
    """Base class for nonempty, convex, bounded decision sets."""

    kind: str = "abstract"
    dimension: int

    def project(self, x: np.ndarray) -> np.ndarray:
        """Euclidean projection of ``x`` (a d-vector or an (n, d) batch)."""
        raise NotImplementedError

    def contains(self, x: np.ndarray, tol: float = 1e-9) -> bool:
        raise NotImplementedError

    def diameter(self) -> float:
        raise NotImplementedError

    def centroid(self) -> np.ndarray:
        raise NotImplementedError

    def support(self, c: np.ndarray) -> float | np.ndarray:
        """max_{a in set} <c, a>, exact for all three set families.
        Accepts a single direction or an (n, d) batch of rows."""
        raise NotImplementedError

    def linear_argmin(self, g: np.ndarray) -> np.ndarray:
        """A minimizer of <g, a> over the set, ties broken toward the
        centroid so runs are deterministic."""
        raise NotImplementedError

    def sample(self, rng: np.random.Generator, n: int | None = None) -> np.ndarray:
        """Uniform draw(s) from the set."""
        raise NotImplementedError

    def grid(self, resolution: int) -> np.ndarray:
        """Deterministically ordered covering grid, rows are points."""
        raise NotImplementedError

    def to_json(self) -> dict:
        raise NotImplementedError

    # shared helpers -----------------------------------------------------

    def _prep(self, x: np.ndarray) -> tuple[np.ndarray, bool]:
        x = _check_finite(x)
        single = x.ndim == 1
        x = np.atleast_2d(x)
        if x.shape[1] != self.dimension:
            raise InvalidInputError(
                f"expected dimension {self.dimension}, got {x.shape[1]}"
            )
        return x, single


@dataclass(frozen=True)
class Box(ActionSpace):
    """Axis-aligned box  { x : lo <= x <= hi }."""

    lo: np.ndarray
    hi: np.ndarray
    kind: str = field(default="box", init=False)

    def __post_init__(self):
        lo = _check_finite(np.atleast_1d(self.lo), "box lo")
        hi = _check_finite(np.atleast_1d(self.hi), "box hi")
        if lo.shape != hi.shape or lo.ndim != 1:
            raise InvalidInputError("box bounds must be 1-d arrays of equal length")
        if np.any(hi <= lo):
            raise InvalidInputError("box must have positive extent in every coordinate")
        lo.flags.writeable = False
        hi.flags.writeable = False
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        object.__setattr__(self, "dimension", lo.size)

    def project(self, x):
        x, single = self._prep(x)
        out = np.clip(x, self.lo, self.hi)
        return out[0] if single else out

    def contains(self, x, tol=1e-9):
        x = np.asarray(x, dtype=float)
        return bool(np.all(x >= self.lo - tol) and np.all(x <= self.hi + tol))

    def diameter(self):
        return float(np.linalg.norm(self.hi - self.lo))

    def centroid(self):
        return (self.lo + self.hi) / 2.0

    def support(self, c):
        c = np.asarray(c, dtype=float)
        vals = np.sum(np.where(c >= 0, c * self.hi, c * self.lo), axis=-1)
        return float(vals) if c.ndim == 1 else vals

    def linear_argmin(self, g):
        g = _check_finite(g, "gradient")
        mid = self.centroid()
        return np.where(g > 0, self.lo, np.where(g < 0, self.hi, mid))

    def sample(self, rng, n=None):
        shape = (self.dimension,) if n is None else (n, self.dimension)
        return rng.uniform(self.lo, self.hi, size=shape)

    def grid(self, resolution):
        axes = [np.linspace(l, h, resolution) for l, h in zip(self.lo, self.hi)]
        pts = np.array(list(product(*axes)))
        return pts

    def to_json(self):
        return {
            "kind": "box",
            "dimension": int(self.dimension),
            "lo": self.lo.tolist(),
            "hi": self.hi.tolist(),
        }


@dataclass(frozen=True)
class Ball(ActionSpace):
    """Euclidean ball  { x : ||x - center|| <= radius }."""

    radius: float
    center: np.ndarray
    kind: str = field(default="ball", init=False)

    def __post_init__(self):
        if not (np.isfinite(self.radius) and self.radius > 0):
            raise InvalidInputError("ball radius must be positive and finite")
        c = _check_finite(np.atleast_1d(self.center), "ball center")
        c.flags.writeable = False
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "dimension", c.size)

    def project(self, x):
        x, single = self._prep(x)
        delta = x - self.center
        norms = np.linalg.norm(delta, axis=1)
        scale = np.ones_like(norms)
        outside = norms > self.radius
        scale[outside] = self.radius / norms[outside]
        out = self.center + delta * scale[:, None]
        return out[0] if single else out

    def contains(self, x, tol=1e-9):
        x = np.asarray(x, dtype=float)
        return bool(np.linalg.norm(x - self.center) <= self.radius + tol)

    def diameter(self):
        return 2.0 * float(self.radius)

    def centroid(self):
        return self.center.copy()

    def support(self, c):
        c = np.asarray(c, dtype=float)
        vals = c @ self.center + self.radius * np.linalg.norm(c, axis=-1)
        return float(vals) if c.ndim == 1 else vals

    def linear_argmin(self, g):
        g = _check_finite(g, "gradient")
        norm = np.linalg.norm(g)
        if norm == 0:
            return self.centroid()
        return self.center - self.radius * g / norm

    def sample(self, rng, n=None):
        m = 1 if n is None else n
        direction = rng.standard_normal((m, self.dimension))
        norms = np.linalg.norm(direction, axis=1, keepdims=True)
        norms[norms == 0] = 1.0
        direction /= norms
        # radius ~ R * U^(1/d) gives the uniform distribution on the ball
        r = self.radius * rng.random((m, 1)) ** (1.0 / self.dimension)
        pts = self.center + direction * r
        return pts[0] if n is None else pts

    def grid(self, resolution):
        axes = [
            np.linspace(c - self.radius, c + self.radius, resolution)
            for c in self.center
        ]
        pts = np.array(list(product(*axes)))
        inside = np.linalg.norm(pts - self.center, axis=1) <= self.radius + 1e-12
        return pts[inside]

    def to_json(self):
        return {
            "kind": "ball",
            "dimension": int(self.dimension),
            "radius": float(self.radius),
            "center": self.center.tolist(),
        }


@dataclass(frozen=True)
class Simplex(ActionSpace):
    """Probability simplex  { x : x >= 0, sum x = 1 }."""

    dim: int
    kind: str = field(default="simplex", init=False)

    def __post_init__(self):
        if self.dim < 2:
            raise InvalidInputError("simplex needs dimension >= 2")
        object.__setattr__(self, "dimension", int(self.dim))

    def project(self, x):
        # Sort-and-threshold construction; correctness is pinned against the
        # grid oracle in the test suite rather than assumed.
        x, single = self._prep(x)
        n = x.shape[1]
        u = np.sort(x, axis=1)[:, ::-1]
        css = np.cumsum(u, axis=1) - 1.0
        idx = np.arange(1, n + 1)
        cond = u - css / idx > 0
        rho = n - 1 - np.argmax(cond[:, ::-1], axis=1)
        theta = css[np.arange(x.shape[0]), rho] / (rho + 1.0)
        out = np.clip(x - theta[:, None], 0.0, None)
        return out[0] if single else out

    def contains(self, x, tol=1e-9):
        x = np.asarray(x, dtype=float)
        return bool(np.all(x >= -tol) and abs(float(np.sum(x)) - 1.0) <= tol)

    def diameter(self):
        return float(np.sqrt(2.0))

    def centroid(self):
        return np.full(self.dimension, 1.0 / self.dimension)

    def support(self, c):
        c = np.asarray(c, dtype=float)
        vals = np.max(c, axis=-1)
        return float(vals) if c.ndim == 1 else vals

    def linear_argmin(self, g):
        g = _check_finite(g, "gradient")
        lo = np.min(g)
        tied = np.isclose(g, lo, rtol=0.0, atol=0.0)
        out = np.zeros(self.dimension)
        out[tied] = 1.0 / np.count_nonzero(tied)
        return out

    def sample(self, rng, n=None):
        if n is None:
            return rng.dirichlet(np.ones(self.dimension))
        return rng.dirichlet(np.ones(self.dimension), size=n)

    def grid(self, resolution):
        # compositions of `resolution` into d nonnegative parts
        d = self.dimension
        pts = []
        for combo in product(range(resolution + 1), repeat=d - 1):
            s = sum(combo)
            if s <= resolution:
                pts.append(combo + (resolution - s,))
        return np.array(pts, dtype=float) / resolution

    def to_json(self):
        return {"kind": "simplex", "dimension": int(self.dimension)}


def make_space(kind: str, dimension: int, **kwargs) -> ActionSpace:
    """Factory used by config files and trace deserialization."""
    if kind == "box":
        lo = kwargs.get("lo", 0.0)
        hi = kwargs.get("hi", 1.0)
        lo = np.full(dimension, lo, dtype=float) if np.isscalar(lo) else np.asarray(lo, float)
        hi = np.full(dimension, hi, dtype=float) if np.isscalar(hi) else np.asarray(hi, float)
        return Box(lo=lo, hi=hi)
    if kind == "ball":
        center = kwargs.get("center", 0.0)
        center = (
            np.full(dimension, center, dtype=float)
            if np.isscalar(center)
            else np.asarray(center, float)
        )
        return Ball(radius=float(kwargs.get("radius", 1.0)), center=center)
    if kind == "simplex":
        return Simplex(dim=dimension)
    raise InvalidInputError(f"unknown action space kind: {kind!r}")


def space_from_json(obj: dict) -> ActionSpace:
    kind = obj["kind"]
    params = {k: v for k, v in obj.items() if k not in ("kind", "dimension")}
    return make_space(kind, obj["dimension"], **params)


def project(space: ActionSpace, x: np.ndarray) -> np.ndarray:
    """Euclidean projection onto ``space``; module-level alias of the method."""
    return space.project(x)


def block_argmin(space: ActionSpace, losses: Sequence[LossFunction]) -> np.ndarray:
    """Minimizer of the summed losses over the set.

    Quadratic slices reduce to projecting the target mean; linear slices go
    through the linear-minimization oracle; mixed slices fold the summed
    linear part into the quadratic center.
    """
    if len(losses) == 0:
        raise InvalidInputError("block_argmin needs a nonempty loss slice")
    thetas, grads = split_losses(losses)
    n_q = len(thetas)
    if n_q == 0:
        return space.linear_argmin(np.sum(grads, axis=0))
    center = np.mean(thetas, axis=0)
    if len(grads):
        center = center - np.sum(grads, axis=0) / n_q
    return space.project(center)


def grid_oracle_argmin(
    space: ActionSpace, losses: Sequence[LossFunction], resolution: int = 50
) -> np.ndarray:
    """Exhaustive minimizer over a covering grid. Intentionally naive: this
    is the independent oracle every closed-form minimizer is tested against.

    Accuracy is bounded by ``diameter * d / resolution``. Ties return the
    lowest-index grid point.
    """
    if len(losses) == 0:
        raise InvalidInputError("grid oracle needs a nonempty loss slice")
    if space.dimension > 3:
        raise UnsupportedOracleError("grid oracle supports dimension <= 3 only")
    if resolution < 10:
        raise InvalidInputError("grid oracle needs resolution >= 10")
    pts = space.grid(resolution)
    total = np.zeros(len(pts))
    for loss in losses:
        total += loss.value(pts)
    return pts[int(np.argmin(total))]
