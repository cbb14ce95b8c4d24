"""Command-line entry point: ``rsalearn <command> [options]``.

Exit codes: 0 success, 1 self-test failure, 2 configuration or input error.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Optional

from . import experiments as ex
from .core import RSAError
from .learning import DESK_TRAIN, FULL_TRAIN, TrainConfig, curve_csv, train
from .lexicon import CheckpointError, LexiconParams
from .reports import write_report

SCHEMA_VERSION = 1
PRESETS = {"desk": (DESK_TRAIN, ex.DESK_EVAL), "full": (FULL_TRAIN, ex.FULL_EVAL)}
TOP_KEYS = {"schema_version", "preset", "seed", "out", "train", "eval"}


class ConfigError(RSAError):
    pass


@dataclass
class RunConfig:
    preset: str
    train: TrainConfig
    eval: ex.EvalConfig
    out: Path


def _section(cls, base, data, where: str):
    if not isinstance(data, dict):
        raise ConfigError(f"{where}: expected an object")
    known = {f.name for f in fields(cls)}
    for key in data:
        if key not in known:
            raise ConfigError(f"{where}: unknown key '{key}'")
    try:
        return base.replace(**data)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def load_run_config(path: Optional[str], preset: Optional[str] = None) -> RunConfig:
    """Resolve preset defaults, then the config file, into train/eval configs."""
    doc: dict = {}
    if path is not None:
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}:{exc.lineno}: invalid JSON: {exc.msg}") from exc
        if not isinstance(doc, dict):
            raise ConfigError(f"{path}: top level must be an object")
        for key in doc:
            if key not in TOP_KEYS:
                raise ConfigError(f"{path}: unknown key '{key}'")
        if doc.get("schema_version") != SCHEMA_VERSION:
            raise ConfigError(f"{path}: schema_version must be {SCHEMA_VERSION}")
    name = preset or doc.get("preset", "desk")
    if name not in PRESETS:
        raise ConfigError(f"unknown preset '{name}' (choose from {sorted(PRESETS)})")
    train_cfg, eval_cfg = PRESETS[name]
    if "seed" in doc:
        if not isinstance(doc["seed"], int):
            raise ConfigError(f"{path}: seed must be an integer")
        train_cfg = train_cfg.replace(seed=doc["seed"])
        eval_cfg = eval_cfg.replace(seed=doc["seed"])
    train_cfg = _section(TrainConfig, train_cfg, doc.get("train", {}), f"{path}: train")
    eval_cfg = _section(ex.EvalConfig, eval_cfg, doc.get("eval", {}), f"{path}: eval")
    return RunConfig(name, train_cfg, eval_cfg, Path(doc.get("out", "out")))


def apply_overrides(cfg: RunConfig, args) -> RunConfig:
    t, e = {}, {}
    if args.seed is not None:
        t["seed"] = e["seed"] = args.seed
    if args.corr is not None:
        t["corr"] = e["corr"] = args.corr
    if args.distractors is not None:
        t["n_objects"] = e["n_objects"] = args.distractors + 1
    if args.cost is not None:
        t["word_cost"] = e["word_cost"] = args.cost
    if args.speaker_level is not None:
        t["speaker_level"] = e["speaker_eval_level"] = args.speaker_level
    if args.listener_level is not None:
        t["listener_level"] = e["listener_eval_level"] = args.listener_level
    try:
        train_cfg, eval_cfg = cfg.train.replace(**t), cfg.eval.replace(**e)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    out = Path(args.out) if args.out is not None else cfg.out
    return RunConfig(cfg.preset, train_cfg, eval_cfg, out)


def _load_checkpoint(path: Optional[str]) -> LexiconParams:
    if path is None:
        raise ConfigError("this command needs --checkpoint (produce one with `rsalearn train`)")
    if not Path(path).exists():
        raise ConfigError(f"checkpoint not found: {path}")
    return LexiconParams.load(path)


def _emit(paths) -> None:
    for p in paths:
        print(p)


# ---------------------------------------------------------------------------
# commands

def cmd_selftest(args, cfg: RunConfig) -> int:
    from .selftest import run_all
    failed = False
    if args.checkpoint is not None:
        try:
            _load_checkpoint(args.checkpoint)
            print(f"[PASS] checkpoint: {args.checkpoint} loads")
        except (CheckpointError, ConfigError) as exc:
            print(f"[FAIL] checkpoint: {exc}")
            return 2
    for result in run_all(quick=args.quick):
        failed |= not result.passed
        print(f"[{'PASS' if result.passed else 'FAIL'}] {result.name}: {result.detail}")
    return 1 if failed else 0


def cmd_train(args, cfg: RunConfig) -> int:
    params, history = train(cfg.train)
    cfg.out.mkdir(parents=True, exist_ok=True)
    paths = [cfg.out / "lexicon.json", cfg.out / "curve.csv", cfg.out / "train_config.json"]
    params.save(paths[0])
    paths[1].write_text(curve_csv(history))
    paths[2].write_text(json.dumps(cfg.train.to_json(), indent=2, sort_keys=True) + "\n")
    _emit(paths)
    return 0


def cmd_eval(args, cfg: RunConfig) -> int:
    params = _load_checkpoint(args.checkpoint)
    m = ex.evaluate(params, cfg.eval)
    report = ex.Report("metrics", ex.CELL_COLUMNS, [ex.cell_row("eval", m, cfg.eval)],
                       {"eval_config": cfg.eval.to_json(), "metrics": m.to_json()})
    _emit(write_report(report, cfg.out))
    return 0


def cmd_table1(args, cfg: RunConfig) -> int:
    base = cfg.eval.replace(corr=args.corr if args.corr is not None else 1,
                            word_cost=args.cost if args.cost is not None else 0.6)
    _emit(write_report(ex.run_table1(base), cfg.out))
    return 0


def _table_env(args, cfg: RunConfig) -> dict:
    return {"corr": args.corr if args.corr is not None else 1,
            "n_objects": args.distractors + 1 if args.distractors is not None else 5,
            "word_cost": args.cost if args.cost is not None else 0.6}


def cmd_table2(args, cfg: RunConfig) -> int:
    params = _load_checkpoint(args.checkpoint)
    base = cfg.eval.replace(**_table_env(args, cfg))
    _emit(write_report(ex.run_table2(params, base), cfg.out))
    return 0


def cmd_table3(args, cfg: RunConfig) -> int:
    _emit(write_report(ex.run_table3(cfg.train, cfg.eval, **_table_env(args, cfg)), cfg.out))
    return 0


def cmd_fig3(args, cfg: RunConfig) -> int:
    report = ex.run_pairings(ex.DEFAULT_ENVIRONMENTS, cfg.train, cfg.eval, curriculum=not args.independent)
    _emit(write_report(report, cfg.out))
    return 0


def cmd_fig4(args, cfg: RunConfig) -> int:
    env = _table_env(args, cfg)
    speaker_level = ex.FIG4_TRAIN.speaker_level if args.speaker_level is None else args.speaker_level
    base_train = cfg.train.replace(speaker_level=speaker_level,
                                   corr=env["corr"], n_objects=env["n_objects"], word_cost=env["word_cost"])
    base_eval = cfg.eval.replace(games_per_constellation=ex.FIG4_EVAL.games_per_constellation,
                                 seed=cfg.eval.seed + 1)
    report = ex.run_learning_curves(base_train, base_eval, every=args.every)
    _emit(write_report(report, cfg.out, svg=True))
    return 0


COMMANDS = {
    "selftest": (cmd_selftest, "run the oracle, gradient and Fisher property suites"),
    "train": (cmd_train, "train one listener; writes lexicon.json and curve.csv"),
    "eval": (cmd_eval, "evaluate a checkpoint; writes metrics.csv"),
    "table1": (cmd_table1, "average message length by speaker level and distractor count"),
    "table2": (cmd_table2, "upgrade a trained L0 listener at evaluation time"),
    "table3": (cmd_table3, "train listeners with S1 vs S3 speakers"),
    "fig3": (cmd_fig3, "all listener/speaker training pairs across environments"),
    "fig4": (cmd_fig4, "learning curves for listener levels 0 and 2"),
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run-configuration file")
    common.add_argument("--seed", type=int, help="seed for training and evaluation streams")
    common.add_argument("--out", help="output directory (default from config, else ./out)")
    common.add_argument("--preset", choices=sorted(PRESETS), help="desk (default) or full scale")
    common.add_argument("--corr", type=int, choices=(0, 1), help="feature-correlation flag")
    common.add_argument("--distractors", type=int, help="number of distractors (objects - 1)")
    common.add_argument("--cost", type=float, help="per-word message cost")
    common.add_argument("--speaker-level", type=int, help="speaker reasoning level")
    common.add_argument("--listener-level", type=int, help="listener reasoning level")
    common.add_argument("--checkpoint", help="lexicon checkpoint (eval, table2, selftest)")

    parser = argparse.ArgumentParser(prog="rsalearn", description="Pragmatic reference-game simulations.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in COMMANDS.items():
        p = sub.add_parser(name, parents=[common], help=help_text, description=help_text)
        if name == "selftest":
            p.add_argument("--quick", action="store_true", help="smaller gradient and Fisher suites")
        if name == "fig3":
            p.add_argument("--independent", action="store_true",
                           help="train a fresh listener per environment instead of one curriculum")
        if name == "fig4":
            p.add_argument("--every", type=int, default=100, help="evaluation interval in steps")
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    handler = COMMANDS[args.command][0]
    try:
        cfg = apply_overrides(load_run_config(args.config, args.preset), args)
        return handler(args, cfg)
    except (ConfigError, CheckpointError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
