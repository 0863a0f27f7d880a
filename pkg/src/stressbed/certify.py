"""Volatility sweeps, response-curve fitting and order-K certification.

The empirical question this module answers: when a learner is exposed to a
grid of stress levels, is its worst-case dynamic regret a strictly concave,
identity-dominated function of the realized volatility, and does it stay
sublinear in the horizon when the variation grows linearly with it? A
learner passing all three checks at block size K is certified at order K;
certification reports the smallest passing K.

Strict concavity is deliberately tested two ways and passed only on the
conjunction: a parametric power-law exponent (upper bootstrap CI of the
log-log slope below 1) and a nonparametric check that no second difference
of the level means is significantly positive. Either test alone is too easy
to fool, by noise or by non-power-law shapes respectively. Verdicts are
tri-state; an interval straddling the threshold is "inconclusive", and
certification requires "pass", not "not fail".
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import nnls

from .envs import EnvSpec, generate
from .errors import InvalidInputError, RunAbortedError
from .geometry import ActionSpace
from .learners import make_learner, run_learner
from .metrics import best_comparator_in_UK, dynamic_regret, path_length, temporal_variability
from .seeding import child_seed, rng_for

log = logging.getLogger(__name__)

PASS = "pass"
FAIL = "fail"
INCONCLUSIVE = "inconclusive"

VERDICT_KEYS = ("sublinear_in_T", "strictly_concave_in_V", "dominated_by_identity")


# ---------------------------------------------------------------------------
# cell execution: one (learner, level, rep) run, evaluated at several K


@dataclass(frozen=True)
class CellSpec:
    """One unit of work; a pure function of its fields, safe to farm out."""

    phase: str  # "sweep" or "horizon"
    family: str
    space: ActionSpace
    horizon: int
    v_target: float
    level_index: int
    rep: int
    K_list: tuple[int, ...]
    learner_id: str
    learner_params: dict = field(default_factory=dict)
    env_params: dict = field(default_factory=dict)
    env_seed: int = 0
    learner_seed: int = 0
    timing: bool = False


@dataclass
class CellResult:
    spec: CellSpec
    status: str  # "ok" or "aborted"
    v_f: float = math.nan
    v_g: float = math.nan
    static_regret: float = math.nan
    per_K: dict[int, tuple[float, float]] = field(default_factory=dict)  # K -> (v_path, regret)
    wall_ms: float = 0.0
    error: str = ""


def run_cell(spec: CellSpec) -> CellResult:
    """Generate the trace, run the learner, evaluate every requested K."""
    t0 = time.perf_counter() if spec.timing else 0.0
    env_spec = EnvSpec(
        family=spec.family,
        horizon=spec.horizon,
        space=spec.space,
        v_target=spec.v_target,
        seed=spec.env_seed,
        **spec.env_params,
    )
    trace = generate(env_spec)
    learner = make_learner(
        spec.learner_id, spec.space, spec.horizon, spec.learner_seed, **spec.learner_params
    )
    result = CellResult(spec=spec, status="ok")
    try:
        record = run_learner(learner, trace)
    except RunAbortedError as exc:  # aborted runs mark the cell, the sweep goes on
        result.status = "aborted"
        result.error = str(exc)
        if spec.timing:
            result.wall_ms = (time.perf_counter() - t0) * 1e3
        return result
    result.v_f, result.v_g = temporal_variability(trace, spec.space)
    static_comp = best_comparator_in_UK(spec.space, trace, K=spec.horizon)
    result.static_regret = dynamic_regret(trace, record.actions, static_comp)
    for K in spec.K_list:
        comp = best_comparator_in_UK(spec.space, trace, K)
        result.per_K[K] = (
            path_length(comp),
            dynamic_regret(trace, record.actions, comp),
        )
    if spec.timing:
        result.wall_ms = (time.perf_counter() - t0) * 1e3
    return result


def cell_seeds(master_seed: int, phase: str, learner_id: str, level_index: int, rep: int):
    """Environment and learner seeds for one cell. The environment seed does
    not depend on the learner, so every learner faces the same traces."""
    env_seed = child_seed(master_seed, f"env-{phase}", level_index, rep)
    learner_seed = child_seed(master_seed, f"learner-{phase}-{learner_id}", level_index, rep)
    return env_seed, learner_seed


# ---------------------------------------------------------------------------
# sweep assembly


@dataclass
class LevelStats:
    """Per-level samples across repetitions (completed runs only)."""

    v_target: float
    v_real: np.ndarray
    regret: np.ndarray
    v_f: np.ndarray
    v_g: np.ndarray
    aborted: int = 0

    @property
    def n(self) -> int:
        return len(self.regret)

    @property
    def v_mean(self) -> float:
        return float(np.mean(self.v_real)) if self.n else math.nan

    @property
    def v_sd(self) -> float:
        return float(np.std(self.v_real, ddof=1)) if self.n > 1 else 0.0

    @property
    def r_mean(self) -> float:
        return float(np.mean(self.regret)) if self.n else math.nan

    @property
    def r_sd(self) -> float:
        return float(np.std(self.regret, ddof=1)) if self.n > 1 else 0.0

    def summary(self) -> dict:
        return {
            "v_target": self.v_target,
            "v_mean": self.v_mean,
            "v_sd": self.v_sd,
            "r_mean": self.r_mean,
            "r_sd": self.r_sd,
            "n": self.n,
            "aborted": self.aborted,
        }


@dataclass
class SweepResult:
    family: str
    learner_id: str
    K: int
    horizon: int
    levels: list[LevelStats]  # sorted by realized volatility mean
    incomplete: bool = False


def assemble_sweep(cells: list[CellResult], K: int) -> SweepResult:
    """Group completed cells by level and sort levels by realized V."""
    if not cells:
        raise InvalidInputError("no cells to assemble")
    by_level: dict[int, list[CellResult]] = {}
    for c in cells:
        by_level.setdefault(c.spec.level_index, []).append(c)
    levels = []
    incomplete = False
    for idx in sorted(by_level):
        group = by_level[idx]
        ok = [c for c in group if c.status == "ok"]
        aborted = len(group) - len(ok)
        incomplete = incomplete or aborted > 0
        levels.append(
            LevelStats(
                v_target=group[0].spec.v_target,
                v_real=np.array([c.per_K[K][0] for c in ok]),
                regret=np.array([c.per_K[K][1] for c in ok]),
                v_f=np.array([c.v_f for c in ok]),
                v_g=np.array([c.v_g for c in ok]),
                aborted=aborted,
            )
        )
    levels.sort(key=lambda L: (math.inf if math.isnan(L.v_mean) else L.v_mean))
    first = cells[0].spec
    return SweepResult(
        family=first.family,
        learner_id=first.learner_id,
        K=K,
        horizon=first.horizon,
        levels=levels,
        incomplete=incomplete,
    )


def volatility_sweep(
    space: ActionSpace,
    family: str,
    levels: list[float],
    K: int,
    reps: int,
    horizon: int,
    learner_id: str,
    learner_params: dict | None = None,
    env_params: dict | None = None,
    master_seed: int = 0,
    timing: bool = False,
) -> SweepResult:
    """Run ``reps`` repetitions at each stress level and collect worst-case
    dynamic regret against the order-K comparator."""
    if len(levels) < 5:
        raise InvalidInputError("a sweep needs at least 5 volatility levels")
    if reps < 10:
        raise InvalidInputError("a sweep needs at least 10 repetitions per level")
    cells = []
    for i, v in enumerate(levels):
        for rep in range(reps):
            env_seed, learner_seed = cell_seeds(master_seed, "sweep", learner_id, i, rep)
            cells.append(
                run_cell(
                    CellSpec(
                        phase="sweep",
                        family=family,
                        space=space,
                        horizon=horizon,
                        v_target=float(v),
                        level_index=i,
                        rep=rep,
                        K_list=(int(K),),
                        learner_id=learner_id,
                        learner_params=learner_params or {},
                        env_params=env_params or {},
                        env_seed=env_seed,
                        learner_seed=learner_seed,
                        timing=timing,
                    )
                )
            )
    return assemble_sweep(cells, int(K))


# ---------------------------------------------------------------------------
# fitting


def concave_monotone_fit(v: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Least-squares fit of y on grid v subject to nondecreasing + concave.

    The constraint set is a polyhedral cone {h : A h >= 0}; the projection
    is solved exactly through its nonnegative dual, h = y + A^T mu with
    mu = argmin_{mu >= 0} ||A^T mu + y||.
    """
    v = np.asarray(v, dtype=float)
    y = np.asarray(y, dtype=float)
    n = y.size
    if n == 0:
        return y.copy()
    if np.any(np.diff(v) <= 0):
        raise InvalidInputError("grid must be strictly increasing")
    rows = []
    for i in range(n - 1):  # monotone: h_{i+1} - h_i >= 0
        row = np.zeros(n)
        row[i], row[i + 1] = -1.0, 1.0
        rows.append(row)
    for i in range(n - 2):  # concave: slope_i - slope_{i+1} >= 0
        d0 = v[i + 1] - v[i]
        d1 = v[i + 2] - v[i + 1]
        row = np.zeros(n)
        row[i] = -1.0 / d0
        row[i + 1] = 1.0 / d0 + 1.0 / d1
        row[i + 2] = -1.0 / d1
        rows.append(row)
    if not rows:
        return y.copy()
    A = np.stack(rows)
    mu, _ = nnls(A.T, -y)
    return y + A.T @ mu


def _ols_slope(x: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    xm, ym = np.mean(x), np.mean(y)
    denom = float(np.sum((x - xm) ** 2))
    if denom == 0:
        return math.nan, math.nan
    slope = float(np.sum((x - xm) * (y - ym)) / denom)
    return slope, float(ym - slope * xm)


def _masked_slopes(Xb: np.ndarray, Yb: np.ndarray) -> np.ndarray:
    """Rowwise OLS slopes ignoring non-finite entries; nan when underdetermined."""
    valid = np.isfinite(Xb) & np.isfinite(Yb)
    nv = valid.sum(axis=1)
    safe_nv = np.maximum(nv, 1)
    Xz = np.where(valid, Xb, 0.0)
    Yz = np.where(valid, Yb, 0.0)
    xm = Xz.sum(axis=1) / safe_nv
    ym = Yz.sum(axis=1) / safe_nv
    dx = np.where(valid, Xb - xm[:, None], 0.0)
    dy = np.where(valid, Yb - ym[:, None], 0.0)
    denom = (dx * dx).sum(axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        slopes = (dx * dy).sum(axis=1) / denom
    slopes[(nv < 2) | (denom <= 0)] = np.nan
    return slopes


def _paired_bootstrap(
    levels: list[LevelStats], draws: int, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray]:
    """Resample repetitions within each level; (draws, L) mean matrices."""
    L = len(levels)
    Vb = np.empty((draws, L))
    Rb = np.empty((draws, L))
    for j, lev in enumerate(levels):
        idx = rng.integers(0, lev.n, size=(draws, lev.n))
        Vb[:, j] = lev.v_real[idx].mean(axis=1)
        Rb[:, j] = lev.regret[idx].mean(axis=1)
    return Vb, Rb


def _second_differences(V: np.ndarray, R: np.ndarray) -> np.ndarray:
    """Divided-difference curvature of R over grid V (rows = draws)."""
    dv0 = V[..., 1:] - V[..., :-1]
    with np.errstate(invalid="ignore", divide="ignore"):
        slopes = (R[..., 1:] - R[..., :-1]) / dv0
        span = V[..., 2:] - V[..., :-2]
        s = 2.0 * (slopes[..., 1:] - slopes[..., :-1]) / span
    bad = (dv0[..., 1:] <= 0) | (dv0[..., :-1] <= 0)
    return np.where(bad, np.nan, s)


@dataclass
class ResponseCurve:
    """Fitted variability-response curve and its verdicts."""

    family: str
    learner_id: str
    K: int
    horizon: int
    levels: list[dict]
    v_means: np.ndarray
    r_means: np.ndarray
    beta: float
    log_c: float
    beta_ci: tuple[float, float]
    second_diffs: np.ndarray
    second_diff_ci: np.ndarray  # (m, 2) of [q05, q95]
    max_second_diff: float
    second_diff_significant: bool
    concave_fit: np.ndarray
    domination_scale: float
    domination_per_level: list[bool]
    verdicts: dict[str, str]
    bootstrap_draws: int
    excluded_levels: int
    estimated_order: int | None = None

    def to_json(self) -> dict:
        return {
            "family": self.family,
            "learner": self.learner_id,
            "K": self.K,
            "horizon": self.horizon,
            "levels": self.levels,
            "power_law": {
                "beta": _f(self.beta),
                "log_c": _f(self.log_c),
                "beta_ci": [_f(self.beta_ci[0]), _f(self.beta_ci[1])],
            },
            "second_diff": {
                "values": [_f(x) for x in self.second_diffs],
                "ci": [[_f(a), _f(b)] for a, b in self.second_diff_ci],
                "max": _f(self.max_second_diff),
                "significantly_positive": self.second_diff_significant,
            },
            "concave_fit": [_f(x) for x in self.concave_fit],
            "domination": {
                "scale": self.domination_scale,
                "per_level": self.domination_per_level,
            },
            "verdicts": dict(self.verdicts),
            "bootstrap_draws": self.bootstrap_draws,
            "excluded_levels": self.excluded_levels,
            "estimated_order": self.estimated_order,
        }


def _f(x) -> float | None:
    x = float(x)
    return None if math.isnan(x) else x


def fit_response(
    sweep: SweepResult,
    scale: float = 1.0,
    bootstrap_draws: int = 1000,
    seed: int = 0,
    min_reps: int = 10,
    min_levels: int = 5,
) -> ResponseCurve:
    """Fit the measured (V, R) curve and judge concavity and domination.

    Power law: least squares on (log V, log R) over levels with positive
    means, with a nonparametric bootstrap over repetitions for the exponent
    interval. Shape: divided-difference curvature of the level means, where
    a second difference whose lower 95% bootstrap bound is above zero counts
    as significant convexity. Domination: mean regret at or below
    scale * mean volatility at every level.
    """
    levels = [L for L in sweep.levels if L.n > 0]
    if len(levels) < 2:
        raise InvalidInputError("degenerate sweep: need at least two completed levels")
    v = np.array([L.v_mean for L in levels])
    r = np.array([L.r_mean for L in levels])
    if float(np.max(v) - np.min(v)) <= 0:
        raise InvalidInputError("degenerate sweep: no spread in realized volatility")

    pos = (v > 0) & (r > 0)
    excluded = int(np.sum(~pos))
    if excluded:
        log.warning(
            "excluding %d level(s) with nonpositive mean volatility or regret from the log fit",
            excluded,
        )
    if pos.sum() >= 2:
        beta, log_c = _ols_slope(np.log(v[pos]), np.log(r[pos]))
    else:
        beta, log_c = math.nan, math.nan

    rng = rng_for(seed, "fit-response-bootstrap")
    Vb, Rb = _paired_bootstrap(levels, bootstrap_draws, rng)
    with np.errstate(invalid="ignore", divide="ignore"):
        Xb = np.where(Vb > 0, np.log(np.maximum(Vb, 1e-300)), np.nan)
        Yb = np.where(Rb > 0, np.log(np.maximum(Rb, 1e-300)), np.nan)
    slopes = _masked_slopes(Xb, Yb)
    slopes = slopes[np.isfinite(slopes)]
    if slopes.size >= max(10, bootstrap_draws // 10):
        beta_ci = (
            float(np.percentile(slopes, 2.5)),
            float(np.percentile(slopes, 97.5)),
        )
    else:
        beta_ci = (math.nan, math.nan)

    sd_obs = _second_differences(v, r)
    sd_boot = _second_differences(Vb, Rb)
    if sd_obs.size and np.isfinite(sd_obs).any():
        # family-wise 95% noise band on the largest positive second
        # difference: Bonferroni-share the one-sided level across the m
        # interior points, so a flat-but-noisy curve is not rejected just
        # because one of several second differences wobbled upward
        m = int(np.isfinite(sd_obs).sum())
        alpha = 100.0 * 0.05 / max(m, 1)
        with np.errstate(all="ignore"):
            q_lo = np.nanpercentile(sd_boot, alpha, axis=0)
            q_hi = np.nanpercentile(sd_boot, 100.0 - alpha, axis=0)
        sd_ci = np.column_stack([q_lo, q_hi])
        max_sd = float(np.nanmax(sd_obs))
        significant = bool(np.any(np.nan_to_num(q_lo, nan=-math.inf) > 0))
    else:
        sd_ci = np.empty((0, 2))
        max_sd = math.nan
        significant = False

    # concave fit needs a strictly increasing grid; merge duplicate V levels
    uv, inverse = np.unique(v, return_inverse=True)
    ur = np.array([r[inverse == i].mean() for i in range(len(uv))])
    hhat_u = concave_monotone_fit(uv, ur)
    hhat = hhat_u[inverse]

    dom_per_level = [bool(ri <= scale * vi) for vi, ri in zip(v, r)]

    sufficient = len(levels) >= min_levels and all(L.n >= min_reps for L in levels)
    verdicts = {k: INCONCLUSIVE for k in VERDICT_KEYS}
    if sufficient:
        if significant:
            verdicts["strictly_concave_in_V"] = FAIL
        elif math.isfinite(beta_ci[1]) and beta_ci[1] < 1.0:
            verdicts["strictly_concave_in_V"] = PASS
        elif math.isfinite(beta_ci[0]) and beta_ci[0] >= 1.0:
            verdicts["strictly_concave_in_V"] = FAIL
        verdicts["dominated_by_identity"] = PASS if all(dom_per_level) else FAIL

    return ResponseCurve(
        family=sweep.family,
        learner_id=sweep.learner_id,
        K=sweep.K,
        horizon=sweep.horizon,
        levels=[L.summary() for L in levels],
        v_means=v,
        r_means=r,
        beta=beta,
        log_c=log_c,
        beta_ci=beta_ci,
        second_diffs=sd_obs,
        second_diff_ci=sd_ci,
        max_second_diff=max_sd,
        second_diff_significant=significant,
        concave_fit=hhat,
        domination_scale=scale,
        domination_per_level=dom_per_level,
        verdicts=verdicts,
        bootstrap_draws=bootstrap_draws,
        excluded_levels=excluded,
    )


# ---------------------------------------------------------------------------
# sublinearity in the horizon


@dataclass
class SublinearityResult:
    horizons: list[int]
    r_means: list[float]
    slope: float
    slope_ci: tuple[float, float]
    shifted: bool
    delta: float
    verdict: str

    def to_json(self) -> dict:
        return {
            "horizons": self.horizons,
            "r_means": [_f(x) for x in self.r_means],
            "slope": _f(self.slope),
            "slope_ci": [_f(self.slope_ci[0]), _f(self.slope_ci[1])],
            "shifted": self.shifted,
            "delta": self.delta,
            "verdict": self.verdict,
        }


def _shifted_log(means: np.ndarray) -> tuple[np.ndarray, bool]:
    m = np.min(means)
    if m <= 0:
        return np.log(means + abs(m) + 1.0), True
    return np.log(means), False


def sublinearity_from_samples(
    horizons: list[int],
    samples: list[np.ndarray],
    delta: float = 0.05,
    bootstrap_draws: int = 1000,
    seed: int = 0,
) -> SublinearityResult:
    """Slope of log mean-regret against log horizon, with a bootstrap CI.

    Nonpositive mean regret at any horizon shifts the whole curve up by
    |min| + 1 before taking logs; the result is flagged.
    """
    if len(horizons) < 3:
        raise InvalidInputError("sublinearity needs at least 3 horizons")
    x = np.log(np.asarray(horizons, dtype=float))
    means = np.array([float(np.mean(s)) for s in samples])
    y, shifted = _shifted_log(means)
    if shifted:
        log.warning("nonpositive regret at some horizon; slope computed on shifted values")
    slope, _ = _ols_slope(x, y)

    rng = rng_for(seed, "sublinearity-bootstrap")
    cols = []
    for s in samples:
        s = np.asarray(s, dtype=float)
        idx = rng.integers(0, len(s), size=(bootstrap_draws, len(s)))
        cols.append(s[idx].mean(axis=1))
    Mb = np.column_stack(cols)
    mins = Mb.min(axis=1, keepdims=True)
    Yb = np.log(np.where(mins <= 0, Mb + np.abs(mins) + 1.0, Mb))
    slopes = _masked_slopes(np.broadcast_to(x, Yb.shape).copy(), Yb)
    slopes = slopes[np.isfinite(slopes)]
    if slopes.size >= max(10, bootstrap_draws // 10):
        ci = (float(np.percentile(slopes, 2.5)), float(np.percentile(slopes, 97.5)))
    else:
        ci = (math.nan, math.nan)

    threshold = 1.0 - delta
    if math.isfinite(ci[1]) and ci[1] < threshold:
        verdict = PASS
    elif math.isfinite(ci[0]) and ci[0] >= threshold:
        verdict = FAIL
    else:
        verdict = INCONCLUSIVE
    return SublinearityResult(
        horizons=[int(t) for t in horizons],
        r_means=[float(m) for m in means],
        slope=slope,
        slope_ci=ci,
        shifted=shifted,
        delta=delta,
        verdict=verdict,
    )


def sublinearity_test(
    space: ActionSpace,
    family: str,
    rate: float,
    horizons: list[int],
    K: int,
    reps: int,
    learner_id: str,
    learner_params: dict | None = None,
    env_params: dict | None = None,
    master_seed: int = 0,
    delta: float = 0.05,
    bootstrap_draws: int = 1000,
) -> SublinearityResult:
    """Grow the horizon at a fixed volatility rate (v_target = rate * T) and
    test whether worst-case dynamic regret stays sublinear."""
    samples = []
    K = int(K)
    for h_idx, T in enumerate(horizons):
        vals = []
        for rep in range(reps):
            env_seed, learner_seed = cell_seeds(master_seed, "horizon", learner_id, h_idx, rep)
            cell = run_cell(
                CellSpec(
                    phase="horizon",
                    family=family,
                    space=space,
                    horizon=int(T),
                    v_target=rate * float(T),
                    level_index=h_idx,
                    rep=rep,
                    K_list=(K,),
                    learner_id=learner_id,
                    learner_params=learner_params or {},
                    env_params=env_params or {},
                    env_seed=env_seed,
                    learner_seed=learner_seed,
                )
            )
            if cell.status == "ok":
                vals.append(cell.per_K[K][1])
        if not vals:
            raise InvalidInputError(f"all repetitions aborted at horizon {T}")
        samples.append(np.array(vals))
    return sublinearity_from_samples(
        horizons,
        samples,
        delta=delta,
        bootstrap_draws=bootstrap_draws,
        seed=child_seed(master_seed, "boot-sub", K),
    )


# ---------------------------------------------------------------------------
# order certification


@dataclass
class KCertification:
    K: int
    curve: ResponseCurve
    sublinearity: SublinearityResult
    verdicts: dict[str, str]

    @property
    def all_pass(self) -> bool:
        return all(v == PASS for v in self.verdicts.values())

    def to_json(self) -> dict:
        return {
            "K": self.K,
            "verdicts": dict(self.verdicts),
            "response_curve": self.curve.to_json(),
            "sublinearity": self.sublinearity.to_json(),
        }


@dataclass
class CertificationResult:
    family: str
    learner_id: str
    K_grid: list[int]
    per_K: list[KCertification]
    K_star: int | None

    @property
    def certified(self) -> bool:
        return self.K_star is not None

    def to_json(self) -> dict:
        return {
            "family": self.family,
            "learner": self.learner_id,
            "K_grid": self.K_grid,
            "certified": self.certified,
            "K_star": self.K_star,
            "per_K": [k.to_json() for k in self.per_K],
        }


def merge_verdicts(curve: ResponseCurve, sub: SublinearityResult) -> dict[str, str]:
    v = dict(curve.verdicts)
    v["sublinear_in_T"] = sub.verdict
    return v


def certify_order(
    space: ActionSpace,
    family: str,
    learner_id: str,
    K_grid: list[int],
    levels: list[float],
    reps: int,
    horizon: int,
    horizons: list[int],
    rate: float,
    learner_params: dict | None = None,
    env_params: dict | None = None,
    master_seed: int = 0,
    scale: float = 1.0,
    delta: float = 0.05,
    bootstrap_draws: int = 1000,
) -> CertificationResult:
    """Sweep + fit + sublinearity at every K in the grid; the certified
    order is the smallest K whose three verdicts all pass.

    Runs are shared across K: the learner's trajectory does not depend on
    the comparator's block size, only the evaluation does.
    """
    K_grid = sorted(int(k) for k in K_grid)
    if len(levels) < 5 or reps < 10:
        raise InvalidInputError("certification needs >= 5 levels and >= 10 repetitions")
    K_tuple = tuple(K_grid)
    sweep_cells = []
    for i, v in enumerate(levels):
        for rep in range(reps):
            env_seed, learner_seed = cell_seeds(master_seed, "sweep", learner_id, i, rep)
            sweep_cells.append(
                run_cell(
                    CellSpec(
                        phase="sweep",
                        family=family,
                        space=space,
                        horizon=horizon,
                        v_target=float(v),
                        level_index=i,
                        rep=rep,
                        K_list=K_tuple,
                        learner_id=learner_id,
                        learner_params=learner_params or {},
                        env_params=env_params or {},
                        env_seed=env_seed,
                        learner_seed=learner_seed,
                    )
                )
            )
    horizon_samples: dict[int, list[np.ndarray]] = {K: [] for K in K_grid}
    for h_idx, T in enumerate(horizons):
        per_K_vals: dict[int, list[float]] = {K: [] for K in K_grid}
        for rep in range(reps):
            env_seed, learner_seed = cell_seeds(master_seed, "horizon", learner_id, h_idx, rep)
            cell = run_cell(
                CellSpec(
                    phase="horizon",
                    family=family,
                    space=space,
                    horizon=int(T),
                    v_target=rate * float(T),
                    level_index=h_idx,
                    rep=rep,
                    K_list=K_tuple,
                    learner_id=learner_id,
                    learner_params=learner_params or {},
                    env_params=env_params or {},
                    env_seed=env_seed,
                    learner_seed=learner_seed,
                )
            )
            if cell.status == "ok":
                for K in K_grid:
                    per_K_vals[K].append(cell.per_K[K][1])
        for K in K_grid:
            horizon_samples[K].append(np.array(per_K_vals[K]))

    per_K = []
    K_star = None
    for K in K_grid:
        sweep = assemble_sweep(sweep_cells, K)
        curve = fit_response(
            sweep,
            scale=scale,
            bootstrap_draws=bootstrap_draws,
            seed=child_seed(master_seed, "boot-fit", K),
        )
        sub = sublinearity_from_samples(
            horizons,
            horizon_samples[K],
            delta=delta,
            bootstrap_draws=bootstrap_draws,
            seed=child_seed(master_seed, "boot-sub", K),
        )
        verdicts = merge_verdicts(curve, sub)
        curve.verdicts = verdicts
        cert = KCertification(K=K, curve=curve, sublinearity=sub, verdicts=verdicts)
        per_K.append(cert)
        if K_star is None and cert.all_pass:
            K_star = K
    for cert in per_K:
        cert.curve.estimated_order = K_star
    return CertificationResult(
        family=family,
        learner_id=learner_id,
        K_grid=K_grid,
        per_K=per_K,
        K_star=K_star,
    )
