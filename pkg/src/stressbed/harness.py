"""Experiment configuration, execution and bit-exact serialization.

A config JSON names the space, the environment grid, the learner roster and
the statistical settings; the harness expands it into independent cells
(learner x level x repetition, each evaluated at every comparator block
size), executes them serially or on a process pool, and writes cells.csv
plus, for sweep and certify modes, report.json. Outputs are byte-identical
for a given (config, seed) regardless of the parallelism degree: every cell
derives its seeds from its own indices and rows are emitted in a canonical
order from indexed slots.
"""

from __future__ import annotations

import hashlib
import io
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .certify import (
    CellResult,
    CellSpec,
    KCertification,
    assemble_sweep,
    cell_seeds,
    fit_response,
    merge_verdicts,
    run_cell,
    sublinearity_from_samples,
)
from .envs import FAMILIES, FAMILY_PARAMS
from .errors import InvalidInputError, InvalidSpecError
from .geometry import ActionSpace, make_space
from .learners import LEARNERS
from .seeding import child_seed

CSV_COLUMNS = [
    "run_id",
    "learner",
    "family",
    "K",
    "T",
    "level",
    "rep",
    "seed",
    "v_path",
    "v_f",
    "v_g",
    "dyn_regret_worstUK",
    "static_regret",
    "wall_ms",
    "status",
]

_SPACE_KEYS = {
    "box": {"kind", "dimension", "lo", "hi"},
    "ball": {"kind", "dimension", "radius", "center"},
    "simplex": {"kind", "dimension"},
}

_ENV_KEYS = {"family", "levels", "block_size", "num_states", "eps_gap", "jitter"}
_OUTPUT_KEYS = {"dir", "rounds", "timing"}
_TOP_KEYS = {
    "name",
    "seed",
    "space",
    "env",
    "learners",
    "horizon",
    "comparator_K",
    "repetitions",
    "horizons",
    "volatility_rate",
    "domination_scale",
    "sublinearity_delta",
    "bootstrap_draws",
    "output",
    "jobs",
}


@dataclass(frozen=True)
class ExperimentConfig:
    name: str
    seed: int
    space: ActionSpace
    family: str
    levels: tuple[float, ...]
    env_params: dict
    learners: tuple[tuple[str, dict], ...]  # (id, params) pairs
    horizon: int
    comparator_K: tuple[int, ...]
    repetitions: int
    horizons: tuple[int, ...] = (1024, 4096, 16384)
    volatility_rate: float = 0.01
    domination_scale: float = 1.0
    sublinearity_delta: float = 0.05
    bootstrap_draws: int = 1000
    out_dir: str = "out"
    rounds: bool = False
    timing: bool = False
    jobs: int = 1
    config_hash: str = ""
    raw: dict = field(default_factory=dict)


def _reject_unknown(d: dict, allowed: set[str], where: str) -> None:
    unknown = set(d) - allowed
    if unknown:
        raise InvalidSpecError(f"unknown key(s) in {where}: {sorted(unknown)}")


def _require(d: dict, key: str, where: str):
    if key not in d:
        raise InvalidSpecError(f"missing required key {key!r} in {where}")
    return d[key]


def config_from_dict(raw: dict) -> ExperimentConfig:
    """Validate a parsed config document; unknown keys are errors."""
    if not isinstance(raw, dict):
        raise InvalidSpecError("config must be a JSON object")
    _reject_unknown(raw, _TOP_KEYS, "config")
    name = _require(raw, "name", "config")
    seed = int(_require(raw, "seed", "config"))

    space_obj = _require(raw, "space", "config")
    kind = _require(space_obj, "kind", "space")
    if kind not in _SPACE_KEYS:
        raise InvalidSpecError(f"unknown space kind {kind!r}")
    _reject_unknown(space_obj, _SPACE_KEYS[kind], "space")
    dim = int(_require(space_obj, "dimension", "space"))
    space = make_space(kind, dim, **{k: v for k, v in space_obj.items() if k not in ("kind", "dimension")})

    env_obj = _require(raw, "env", "config")
    _reject_unknown(env_obj, _ENV_KEYS, "env")
    family = _require(env_obj, "family", "env")
    if family not in FAMILIES:
        raise InvalidSpecError(f"unknown environment family {family!r}")
    levels = tuple(float(v) for v in _require(env_obj, "levels", "env"))
    if not levels:
        raise InvalidSpecError("env.levels must be nonempty")
    env_params = {k: v for k, v in env_obj.items() if k not in ("family", "levels")}
    allowed_params = set(FAMILY_PARAMS[family]) - {"v_target"}
    _reject_unknown(env_params, allowed_params, f"env params for {family!r}")

    learners_obj = _require(raw, "learners", "config")
    if not isinstance(learners_obj, list) or not learners_obj:
        raise InvalidSpecError("learners must be a nonempty list")
    roster = []
    for entry in learners_obj:
        _reject_unknown(entry, {"id", "params"}, "learner entry")
        lid = _require(entry, "id", "learner entry")
        if lid not in LEARNERS:
            raise InvalidSpecError(f"unknown learner {lid!r}")
        params = entry.get("params", {})
        _reject_unknown(params, set(LEARNERS[lid][1]), f"params for learner {lid!r}")
        roster.append((lid, dict(params)))

    horizon = int(_require(raw, "horizon", "config"))
    comparator_K = tuple(int(k) for k in _require(raw, "comparator_K", "config"))
    if not comparator_K or any(k < 1 for k in comparator_K):
        raise InvalidSpecError("comparator_K must be a nonempty list of ints >= 1")
    repetitions = int(_require(raw, "repetitions", "config"))
    if repetitions < 1:
        raise InvalidSpecError("repetitions must be >= 1")

    output = raw.get("output", {})
    _reject_unknown(output, _OUTPUT_KEYS, "output")

    # the hash identifies the experiment: where results land and how many
    # workers computed them is not part of it
    hashed = {k: v for k, v in raw.items() if k not in ("output", "jobs")}
    canonical = json.dumps(hashed, sort_keys=True, separators=(",", ":"))
    cfg_hash = hashlib.blake2b(canonical.encode(), digest_size=6).hexdigest()

    return ExperimentConfig(
        name=str(name),
        seed=seed,
        space=space,
        family=family,
        levels=levels,
        env_params=env_params,
        learners=tuple(roster),
        horizon=horizon,
        comparator_K=tuple(sorted(set(comparator_K))),
        repetitions=repetitions,
        horizons=tuple(int(t) for t in raw.get("horizons", (1024, 4096, 16384))),
        volatility_rate=float(raw.get("volatility_rate", 0.01)),
        domination_scale=float(raw.get("domination_scale", 1.0)),
        sublinearity_delta=float(raw.get("sublinearity_delta", 0.05)),
        bootstrap_draws=int(raw.get("bootstrap_draws", 1000)),
        out_dir=str(output.get("dir", "out")),
        rounds=bool(output.get("rounds", False)),
        timing=bool(output.get("timing", False)),
        jobs=int(raw.get("jobs", 1)),
        config_hash=cfg_hash,
        raw=raw,
    )


def load_config(path: str) -> ExperimentConfig:
    with open(path, encoding="utf-8") as fh:
        return config_from_dict(json.load(fh))


# ---------------------------------------------------------------------------
# planning and execution


def plan_cells(cfg: ExperimentConfig, mode: str) -> list[CellSpec]:
    """Expand the config into the canonical, order-defining cell list."""
    K_tuple = cfg.comparator_K
    cells = []
    for lid, params in cfg.learners:
        for i, v in enumerate(cfg.levels):
            for rep in range(cfg.repetitions):
                env_seed, learner_seed = cell_seeds(cfg.seed, "sweep", lid, i, rep)
                cells.append(
                    CellSpec(
                        phase="sweep",
                        family=cfg.family,
                        space=cfg.space,
                        horizon=cfg.horizon,
                        v_target=float(v),
                        level_index=i,
                        rep=rep,
                        K_list=K_tuple,
                        learner_id=lid,
                        learner_params=params,
                        env_params=cfg.env_params,
                        env_seed=env_seed,
                        learner_seed=learner_seed,
                        timing=cfg.timing,
                    )
                )
    if mode == "certify":
        for lid, params in cfg.learners:
            for h_idx, T in enumerate(cfg.horizons):
                for rep in range(cfg.repetitions):
                    env_seed, learner_seed = cell_seeds(cfg.seed, "horizon", lid, h_idx, rep)
                    cells.append(
                        CellSpec(
                            phase="horizon",
                            family=cfg.family,
                            space=cfg.space,
                            horizon=int(T),
                            v_target=cfg.volatility_rate * float(T),
                            level_index=h_idx,
                            rep=rep,
                            K_list=K_tuple,
                            learner_id=lid,
                            learner_params=params,
                            env_params=cfg.env_params,
                            env_seed=env_seed,
                            learner_seed=learner_seed,
                            timing=cfg.timing,
                        )
                    )
    return cells


def planned_row_count(cfg: ExperimentConfig, mode: str) -> int:
    rows = len(cfg.learners) * len(cfg.levels) * cfg.repetitions * len(cfg.comparator_K)
    if mode == "certify":
        rows += len(cfg.learners) * len(cfg.horizons) * cfg.repetitions * len(cfg.comparator_K)
    return rows


def execute_cells(cells: list[CellSpec], jobs: int = 1) -> list[CellResult]:
    """Run cells, preserving the planned order regardless of scheduling."""
    if jobs <= 1 or len(cells) <= 1:
        return [run_cell(c) for c in cells]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        chunk = max(1, len(cells) // (jobs * 4))
        return list(pool.map(run_cell, cells, chunksize=chunk))


# ---------------------------------------------------------------------------
# output files


def _fmt(x) -> str:
    if isinstance(x, float):
        return repr(x)  # shortest round-trip decimal
    return str(x)


def _row_id(spec: CellSpec, K: int) -> str:
    return f"{spec.phase}-{spec.learner_id}-{spec.family}-K{K}-L{spec.level_index}-r{spec.rep}"


def cells_rows(results: list[CellResult]) -> list[list]:
    rows = []
    for res in results:
        spec = res.spec
        for K in spec.K_list:
            v_path, regret = res.per_K.get(K, (math.nan, math.nan))
            rows.append(
                [
                    _row_id(spec, K),
                    spec.learner_id,
                    spec.family,
                    K,
                    spec.horizon,
                    spec.v_target,
                    spec.rep,
                    spec.env_seed,
                    v_path,
                    res.v_f,
                    res.v_g,
                    regret,
                    res.static_regret,
                    res.wall_ms,
                    res.status,
                ]
            )
    return rows


def write_cells_csv(path: str, results: list[CellResult], cfg: ExperimentConfig) -> int:
    """UTF-8, LF line endings, shortest round-trip floats. Returns row count."""
    rows = cells_rows(results)
    buf = io.StringIO()
    buf.write(f"# stressbed {__version__} config_hash={cfg.config_hash}\n")
    buf.write(",".join(CSV_COLUMNS) + "\n")
    for row in rows:
        buf.write(",".join(_fmt(x) for x in row) + "\n")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(buf.getvalue())
    return len(rows)


def write_rounds_csv(path: str, results: list[CellResult], cfg: ExperimentConfig) -> None:
    # per-round dumps are only kept for completed sweep cells
    from .learners import make_learner, run_learner  # local import to keep workers lean

    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"# stressbed {__version__} config_hash={cfg.config_hash}\n")
        fh.write("run_id,t,loss,cum_loss\n")
        for res in results:
            if res.status != "ok" or res.spec.phase != "sweep":
                continue
            spec = res.spec
            from .envs import EnvSpec, generate

            trace = generate(
                EnvSpec(
                    family=spec.family,
                    horizon=spec.horizon,
                    space=spec.space,
                    v_target=spec.v_target,
                    seed=spec.env_seed,
                    **spec.env_params,
                )
            )
            learner = make_learner(
                spec.learner_id, spec.space, spec.horizon, spec.learner_seed, **spec.learner_params
            )
            record = run_learner(learner, trace)
            run_id = _row_id(spec, spec.K_list[0])
            cum = 0.0
            for t, v in enumerate(record.loss_values, start=1):
                cum += float(v)
                fh.write(f"{run_id},{t},{_fmt(float(v))},{_fmt(cum)}\n")


def build_report(cfg: ExperimentConfig, results: list[CellResult], mode: str) -> dict:
    """Assemble response curves (sweep) and certifications (certify)."""
    incomplete = any(r.status != "ok" for r in results)
    report = {
        "tool": "stressbed",
        "version": __version__,
        "config_hash": cfg.config_hash,
        "name": cfg.name,
        "mode": mode,
        "incomplete": incomplete,
        "config": cfg.raw,
        "results": [],
    }
    sweep_cells = [r for r in results if r.spec.phase == "sweep"]
    horizon_cells = [r for r in results if r.spec.phase == "horizon"]
    for lid, _params in cfg.learners:
        own_sweep = [r for r in sweep_cells if r.spec.learner_id == lid]
        own_horizon = [r for r in horizon_cells if r.spec.learner_id == lid]
        entry = {"learner": lid, "family": cfg.family, "K_grid": list(cfg.comparator_K)}
        per_K = []
        K_star = None
        for K in cfg.comparator_K:
            sweep = assemble_sweep(own_sweep, K)
            try:
                curve = fit_response(
                    sweep,
                    scale=cfg.domination_scale,
                    bootstrap_draws=cfg.bootstrap_draws,
                    seed=child_seed(cfg.seed, f"boot-fit-{lid}", K),
                )
            except InvalidInputError as exc:  # degenerate or fully aborted sweep
                per_K.append({"K": K, "error": str(exc), "response_curve": None})
                continue
            if mode == "certify":
                samples = []
                for h_idx in range(len(cfg.horizons)):
                    vals = [
                        r.per_K[K][1]
                        for r in own_horizon
                        if r.spec.level_index == h_idx and r.status == "ok"
                    ]
                    samples.append(np.array(vals if vals else [math.nan]))
                sub = sublinearity_from_samples(
                    list(cfg.horizons),
                    samples,
                    delta=cfg.sublinearity_delta,
                    bootstrap_draws=cfg.bootstrap_draws,
                    seed=child_seed(cfg.seed, f"boot-sub-{lid}", K),
                )
                verdicts = merge_verdicts(curve, sub)
                curve.verdicts = verdicts
                cert = KCertification(K=K, curve=curve, sublinearity=sub, verdicts=verdicts)
                per_K.append(cert.to_json())
                if K_star is None and cert.all_pass:
                    K_star = K
            else:
                per_K.append({"K": K, "response_curve": curve.to_json()})
        entry["per_K"] = per_K
        if mode == "certify":
            entry["certified"] = K_star is not None
            entry["K_star"] = K_star
            for item in per_K:
                item["response_curve"]["estimated_order"] = K_star
        report["results"].append(entry)
    return report


def _sanitize(obj):
    """Strict-JSON form: non-finite floats become null."""
    if isinstance(obj, dict):
        return {k: _sanitize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_sanitize(v) for v in obj]
    if isinstance(obj, (float, np.floating)):
        return float(obj) if math.isfinite(obj) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    return obj


def write_report(path: str, report: dict) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(_sanitize(report), fh, indent=2, sort_keys=True, allow_nan=False)
        fh.write("\n")


def run_experiment(
    cfg: ExperimentConfig, mode: str, jobs: int | None = None, out_dir: str | None = None
) -> tuple[int, dict | None]:
    """Execute the pipeline; returns (exit_code, report_or_None)."""
    jobs = cfg.jobs if jobs is None else jobs
    out = cfg.out_dir if out_dir is None else out_dir
    os.makedirs(out, exist_ok=True)
    cells = plan_cells(cfg, mode)
    results = execute_cells(cells, jobs)
    write_cells_csv(os.path.join(out, "cells.csv"), results, cfg)
    if cfg.rounds:
        write_rounds_csv(os.path.join(out, "rounds.csv"), results, cfg)
    report = None
    if mode in ("sweep", "certify"):
        report = build_report(cfg, results, mode)
        write_report(os.path.join(out, "report.json"), report)
    aborted = any(r.status != "ok" for r in results)
    return (3 if aborted else 0), report
