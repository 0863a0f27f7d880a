"""Command-line interface.

Subcommands: ``run`` (execute the cell grid, write cells.csv), ``sweep``
(run + response-curve fits into report.json), ``certify`` (sweep + horizon
scaling + verdicts and the certified order), ``list`` (registered learners,
environment families and their hyperparameter schemas) and ``replay``
(re-run learners on a serialized trace).

Exit codes: 0 success, 2 invalid config or input, 3 completed with aborted
runs.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import __version__
from .envs import FAMILY_PARAMS, trace_from_json
from .errors import StressbedError
from .harness import load_config, plan_cells, planned_row_count, run_experiment
from .learners import LEARNERS, make_learner, run_learner
from .metrics import best_comparator_in_UK, dynamic_regret, path_length, static_regret


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", required=True, help="path to the experiment config JSON")
    p.add_argument("--seed", type=int, default=None, help="override the master seed")
    p.add_argument("--jobs", type=int, default=None, help="parallel worker processes")
    p.add_argument("--out", default=None, help="output directory")
    p.add_argument("--dry-run", action="store_true", help="validate and print the plan only")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="stressbed", description=__doc__)
    parser.add_argument("--version", action="version", version=f"stressbed {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for mode in ("run", "sweep", "certify"):
        p = sub.add_parser(mode, help=f"{mode} pipeline")
        _add_run_flags(p)
    p_list = sub.add_parser("list", help="registered learners and environment families")
    p_list.add_argument("--json", action="store_true", help="machine-readable output")
    p_replay = sub.add_parser("replay", help="re-run learners on a serialized trace")
    p_replay.add_argument("trace", help="path to a trace JSON file")
    p_replay.add_argument("--learner", required=True, help="learner id to replay")
    p_replay.add_argument("--params", default="{}", help="learner hyperparameters as JSON")
    p_replay.add_argument("--K", type=int, default=1, help="comparator block size")
    p_replay.add_argument("--seed", type=int, default=0, help="learner seed")
    return parser


def _cmd_pipeline(args, mode: str) -> int:
    try:
        cfg = load_config(args.config)
    except (StressbedError, OSError, json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    if args.seed is not None:
        raw = dict(cfg.raw)
        raw["seed"] = args.seed
        cfg = _revalidate(raw)
        if cfg is None:
            return 2
    if args.dry_run:
        rows = planned_row_count(cfg, mode)
        cells = len(plan_cells(cfg, mode))
        print(f"config ok: hash={cfg.config_hash}")
        print(f"planned cells: {cells} runs, {rows} rows")
        return 0
    code, _report = run_experiment(cfg, mode, jobs=args.jobs, out_dir=args.out)
    return code


def _revalidate(raw: dict):
    from .harness import config_from_dict

    try:
        return config_from_dict(raw)
    except StressbedError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return None


def _cmd_list(args) -> int:
    learners = {lid: dict(defaults) for lid, (_cls, defaults) in LEARNERS.items()}
    families = {name: dict(params) for name, params in FAMILY_PARAMS.items()}
    if args.json:
        print(json.dumps({"learners": learners, "families": families}, indent=2, sort_keys=True))
        return 0
    print("learners:")
    for lid, defaults in learners.items():
        schema = ", ".join(f"{k}={v!r}" for k, v in defaults.items()) or "(no hyperparameters)"
        print(f"  {lid}: {schema}")
    print("environment families:")
    for name, params in families.items():
        schema = ", ".join(f"{k}={v!r}" for k, v in params.items())
        print(f"  {name}: {schema}")
    return 0


def _cmd_replay(args) -> int:
    try:
        with open(args.trace, encoding="utf-8") as fh:
            trace, space = trace_from_json(json.load(fh))
        params = json.loads(args.params)
        learner = make_learner(args.learner, space, trace.horizon, args.seed, **params)
    except (StressbedError, OSError, json.JSONDecodeError, KeyError, ValueError) as exc:
        print(f"replay error: {exc}", file=sys.stderr)
        return 2
    try:
        record = run_learner(learner, trace)
    except StressbedError as exc:
        print(f"run aborted: {exc}", file=sys.stderr)
        return 3
    comp = best_comparator_in_UK(space, trace, args.K)
    print(f"trace: {trace.env_id} family={trace.family} T={trace.horizon}")
    print(f"learner: {args.learner} seed={args.seed}")
    print(f"total_loss: {record.total_loss!r}")
    print(f"dyn_regret_worstU{args.K}: {dynamic_regret(trace, record.actions, comp)!r}")
    u_star = best_comparator_in_UK(space, trace, trace.horizon).actions[0]
    print(f"static_regret: {static_regret(trace, record.actions, u_star)!r}")
    print(f"comparator_path_length: {path_length(comp)!r}")
    print(f"actions_mean: {np.mean(record.actions, axis=0).tolist()}")
    return 0


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command in ("run", "sweep", "certify"):
        return _cmd_pipeline(args, args.command)
    if args.command == "list":
        return _cmd_list(args)
    if args.command == "replay":
        return _cmd_replay(args)
    return 2  # pragma: no cover


if __name__ == "__main__":
    sys.exit(main())
