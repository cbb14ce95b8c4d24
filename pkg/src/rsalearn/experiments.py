"""Evaluation protocol and the speaker/listener pairing experiments.

Each ``run_*`` function returns a :class:`Report` whose rows can be written
as CSV plus a JSON summary (see :mod:`rsalearn.reports`).
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field, fields
from typing import Iterable, Optional, Sequence

import numpy as np

from .core import message_space
from .learning import TrainConfig, TrainingRun, train
from .lexicon import GroundTruthLexicon, Lexicon
from .rsa import AgentSpec, batch_listen, batch_speak, select_indices
from .stats import ContingencyTable, fisher_exact, stars
from .worldgen import ConcentrationConfig, sample_eval_suite, stream


@dataclass(frozen=True)
class EvalConfig:
    listener_eval_level: int = 0
    speaker_eval_level: int = 1
    corr: int = 1
    n_objects: int = 5
    word_cost: float = 0.6
    constellations: int = 10
    games_per_constellation: int = 1000
    selection: str = "greedy"
    seed: int = 0

    def __post_init__(self):
        if self.constellations < 1 or self.games_per_constellation < 1:
            raise ValueError("constellation and game counts must be at least 1")
        if self.listener_eval_level < 0 or self.speaker_eval_level < 0:
            raise ValueError("agent levels must be nonnegative")
        if self.n_objects < 2:
            raise ValueError("n_objects must be at least 2")
        if self.selection not in ("greedy", "sample"):
            raise ValueError("selection must be 'greedy' or 'sample'")

    def replace(self, **changes) -> "EvalConfig":
        return EvalConfig(**{**asdict(self), **changes})

    def to_json(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json(cls, data: dict) -> "EvalConfig":
        unknown = set(data) - {f.name for f in fields(cls)}
        if unknown:
            raise ValueError(f"unknown EvalConfig keys: {sorted(unknown)}")
        return cls(**data)


DESK_EVAL = EvalConfig()
FULL_EVAL = EvalConfig(games_per_constellation=3200)


def config_hash(*configs) -> str:
    blob = json.dumps([c.to_json() for c in configs], sort_keys=True)
    return hashlib.sha256(blob.encode()).hexdigest()[:12]


@dataclass
class Metrics:
    correct_count: int
    total_count: int
    avg_message_length: float
    per_constellation_accuracy: list[float]
    per_constellation_total: list[int] = field(default_factory=list)

    @property
    def accuracy(self) -> float:
        return self.correct_count / self.total_count

    def to_json(self) -> dict:
        return {"accuracy": self.accuracy, "correct_count": self.correct_count,
                "total_count": self.total_count, "avg_message_length": self.avg_message_length,
                "per_constellation_accuracy": self.per_constellation_accuracy}


def evaluate(lexicon: Lexicon, config: EvalConfig) -> Metrics:
    """Ground-truth speaker talks, ``lexicon``'s listener answers by argmax."""
    suite = sample_eval_suite(ConcentrationConfig(config.corr), config.constellations,
                              config.games_per_constellation, config.n_objects,
                              stream(config.seed, "eval-suite"))
    select_rng = stream(config.seed, "eval-select")
    speaker_lex = GroundTruthLexicon(lexicon.vocab)
    spec = AgentSpec(word_cost=config.word_cost)
    lengths = message_space(lexicon.vocab).lengths
    correct, total, length_sum = 0, 0, 0.0
    per_acc, per_n = [], []
    for _, games in suite:
        msgs = batch_speak(speaker_lex, games, config.speaker_eval_level, spec, config.selection, select_rng)
        probs = batch_listen(lexicon, games, msgs, config.listener_eval_level, spec)
        hits = int(np.sum(select_indices(probs) == games.target))
        correct += hits
        total += len(games)
        length_sum += float(lengths[msgs].sum())
        per_acc.append(hits / len(games))
        per_n.append(len(games))
    return Metrics(correct, total, length_sum / total, per_acc, per_n)


def compare(a: Metrics, b: Metrics) -> float:
    return fisher_exact(ContingencyTable.from_counts(a.correct_count, a.total_count,
                                                     b.correct_count, b.total_count))


@dataclass
class Report:
    name: str
    columns: list[str]
    rows: list[dict]
    summary: dict = field(default_factory=dict)


def cell_row(label: str, metrics: Metrics, eval_cfg: EvalConfig, train_cfg: Optional[TrainConfig] = None,
          p_value: Optional[float] = None) -> dict:
    configs = (eval_cfg,) if train_cfg is None else (train_cfg, eval_cfg)
    return {
        "row": label,
        "config_hash": config_hash(*configs),
        "listener_train_level": "" if train_cfg is None else train_cfg.listener_level,
        "speaker_train_level": "" if train_cfg is None else train_cfg.speaker_level,
        "listener_eval_level": eval_cfg.listener_eval_level,
        "speaker_eval_level": eval_cfg.speaker_eval_level,
        "corr": eval_cfg.corr,
        "n_objects": eval_cfg.n_objects,
        "cost": eval_cfg.word_cost,
        "accuracy": metrics.accuracy,
        "correct": metrics.correct_count,
        "n": metrics.total_count,
        "avg_len": metrics.avg_message_length,
        "p_value": "" if p_value is None else p_value,
        "stars": "" if p_value is None else stars(p_value),
    }


CELL_COLUMNS = ["row", "config_hash", "listener_train_level", "speaker_train_level", "listener_eval_level",
                "speaker_eval_level", "corr", "n_objects", "cost", "accuracy", "correct", "n", "avg_len",
                "p_value", "stars"]


# ---------------------------------------------------------------------------
# table1: message length by speaker level and distractor count

def run_table1(base: EvalConfig = DESK_EVAL, distractors: Sequence[int] = (2, 3, 4),
               speaker_levels: Sequence[int] = (1, 3)) -> Report:
    gt = GroundTruthLexicon()
    rows, cells = [], {}
    for k in distractors:
        row = {"distractors": k}
        for s in speaker_levels:
            # the listener plays no part in message length; any level works
            cfg = base.replace(n_objects=k + 1, speaker_eval_level=s, listener_eval_level=0)
            m = evaluate(gt, cfg)
            row[f"S{s}"] = m.avg_message_length
            cells[f"{k}/S{s}"] = {"avg_message_length": m.avg_message_length, "n": m.total_count}
        rows.append(row)
    return Report("table1", ["distractors"] + [f"S{s}" for s in speaker_levels], rows,
                  {"eval_config": base.to_json(), "cells": cells})


# ---------------------------------------------------------------------------
# table2: upgrading a trained literal listener at evaluation time

def easy_l0_config(base: TrainConfig = TrainConfig()) -> TrainConfig:
    return base.replace(speaker_level=1, listener_level=0, corr=0, n_objects=3)


def run_table2(trained_l0: Lexicon, base: EvalConfig = DESK_EVAL) -> Report:
    """Rows a-d: (listener 0, S3), (listener 2, S3), (listener 0, S1), (listener 2, S1)."""
    layout = [("a", 0, 3), ("b", 2, 3), ("c", 0, 1), ("d", 2, 1)]
    metrics, cfgs = {}, {}
    for label, lv, sv in layout:
        cfgs[label] = base.replace(listener_eval_level=lv, speaker_eval_level=sv)
        metrics[label] = evaluate(trained_l0, cfgs[label])
    p_ab = compare(metrics["b"], metrics["a"])
    p_cd = compare(metrics["d"], metrics["c"])
    p_values = {"a": None, "b": p_ab, "c": None, "d": p_cd}
    rows = [cell_row(label, metrics[label], cfgs[label], p_value=p_values[label]) for label, _, _ in layout]
    summary = {
        "eval_config": base.to_json(),
        "p_value_a_vs_b": p_ab,
        "p_value_c_vs_d": p_cd,
        "p_value_a_vs_c": compare(metrics["a"], metrics["c"]),
        "p_value_b_vs_d": compare(metrics["b"], metrics["d"]),
        "accuracy": {label: metrics[label].accuracy for label in metrics},
    }
    return Report("table2", CELL_COLUMNS, rows, summary)


# ---------------------------------------------------------------------------
# table3: learning from speakers of different depth

def run_table3(base_train: TrainConfig = TrainConfig(), base_eval: EvalConfig = DESK_EVAL,
               corr: int = 1, n_objects: int = 5, word_cost: float = 0.6) -> Report:
    """Rows a-d: listener 0 trained with S1/S3, listener 2 trained with S1/S3; all evaluated with S1."""
    layout = [("a", 0, 1), ("b", 0, 3), ("c", 2, 1), ("d", 2, 3)]
    metrics, tcfgs, ecfgs = {}, {}, {}
    for label, lv, sv in layout:
        tcfgs[label] = base_train.replace(listener_level=lv, speaker_level=sv, corr=corr,
                                          n_objects=n_objects, word_cost=word_cost)
        params, _ = train(tcfgs[label])
        ecfgs[label] = base_eval.replace(listener_eval_level=lv, speaker_eval_level=1, corr=corr,
                                         n_objects=n_objects, word_cost=word_cost)
        metrics[label] = evaluate(params, ecfgs[label])
    p_ab = compare(metrics["a"], metrics["b"])
    p_cd = compare(metrics["c"], metrics["d"])
    p_values = {"a": p_ab, "b": None, "c": p_cd, "d": None}
    rows = [cell_row(label, metrics[label], ecfgs[label], tcfgs[label], p_values[label])
            for label, _, _ in layout]
    summary = {"train_config": base_train.to_json(), "eval_config": base_eval.to_json(),
               "p_value_a_vs_b": p_ab, "p_value_c_vs_d": p_cd,
               "accuracy": {label: metrics[label].accuracy for label in metrics}}
    return Report("table3", CELL_COLUMNS, rows, summary)


# ---------------------------------------------------------------------------
# fig3: all four pairings across environments

DEFAULT_ENVIRONMENTS = tuple((n, c) for n in (3, 4, 5) for c in (0, 1))
PAIRS = ((0, 1), (0, 3), (2, 1), (2, 3))


def run_pairings(environments: Iterable[tuple[int, int]] = DEFAULT_ENVIRONMENTS,
                 base_train: TrainConfig = TrainConfig(), base_eval: EvalConfig = DESK_EVAL,
                 curriculum: bool = True) -> Report:
    """Accuracy of every (listener, speaker) training pair, upgraded to L2 and evaluated with S1.

    With ``curriculum`` each pair's listener is one learner carried through the
    environments in order, so the environments should go from easy to hard;
    otherwise every environment trains a fresh listener.
    """
    environments = list(environments)
    if curriculum and environments != sorted(environments):
        raise ValueError("environments must be ordered by difficulty (n_objects, then corr)")
    acc: dict[tuple[int, int], list[float]] = {}
    for lv, sv in PAIRS:
        run = None
        acc[(lv, sv)] = []
        for stage, (n, c) in enumerate(environments):
            cfg = base_train.replace(listener_level=lv, speaker_level=sv, n_objects=n, corr=c,
                                     seed=base_train.seed + (stage if curriculum else 0))
            fresh = TrainingRun(cfg)
            if curriculum and run is not None:
                fresh.params, fresh.state = run.params, run.state
            run = fresh
            run.run(cfg.steps)
            ecfg = base_eval.replace(listener_eval_level=2, speaker_eval_level=1, n_objects=n, corr=c)
            acc[(lv, sv)].append(evaluate(run.params, ecfg).accuracy)
    rows = []
    for i, (n, c) in enumerate(environments):
        row = {"n_objects": n, "corr": c}
        for lv, sv in PAIRS:
            row[f"L{lv}_S{sv}"] = acc[(lv, sv)][i]
        row["parity_gap"] = abs(row["L0_S1"] - row["L2_S3"])
        rows.append(row)
    columns = ["n_objects", "corr"] + [f"L{lv}_S{sv}" for lv, sv in PAIRS] + ["parity_gap"]
    return Report("fig3", columns, rows, {"train_config": base_train.to_json(), "eval_config": base_eval.to_json(),
                                          "curriculum": curriculum})


# ---------------------------------------------------------------------------
# fig4: learning curves for two listener depths

FIG4_TRAIN = TrainConfig(speaker_level=1, corr=1, n_objects=5)
FIG4_EVAL = DESK_EVAL.replace(games_per_constellation=300, seed=1)


def run_learning_curves(base_train: TrainConfig = FIG4_TRAIN, base_eval: EvalConfig = FIG4_EVAL,
                        levels: tuple[int, int] = (0, 2), every: int = 100) -> Report:
    """Held-out accuracy every ``every`` steps for two learners differing only in listener level.

    Each learner is evaluated at its own level with its training speaker in
    the training environment's settings.
    """
    if every < 1:
        raise ValueError("evaluation interval must be at least 1")
    grid = list(range(0, base_train.steps + 1, every))
    curves = {}
    for lv in levels:
        cfg = base_train.replace(listener_level=lv)
        ecfg = base_eval.replace(listener_eval_level=lv, speaker_eval_level=cfg.speaker_level,
                                 corr=cfg.corr, n_objects=cfg.n_objects, word_cost=cfg.word_cost)
        run = TrainingRun(cfg)
        accs, losses = [], []
        for target in grid:
            start = len(run.history)
            run.run(target - run.state.step)
            window = run.history[start:]
            accs.append(evaluate(run.params, ecfg).accuracy)
            losses.append(float(np.mean([r.loss for r in window])) if window else float("nan"))
        curves[lv] = (accs, losses)

    rows = []
    for i, step in enumerate(grid):
        row = {"step": step}
        for lv in levels:
            row[f"L{lv}_accuracy"] = curves[lv][0][i]
        for lv in levels:
            loss = curves[lv][1][i]
            row[f"L{lv}_loss"] = "" if np.isnan(loss) else loss
        rows.append(row)
    columns = ["step"] + [f"L{lv}_accuracy" for lv in levels] + [f"L{lv}_loss" for lv in levels]
    summary = {"train_config": base_train.to_json(), "eval_config": base_eval.to_json(),
               "steps_to_70": {f"L{lv}": steps_to_reach(grid, curves[lv][0], 0.7) for lv in levels}}
    return Report("fig4", columns, rows, summary)


def steps_to_reach(grid: Sequence[int], accuracies: Sequence[float], threshold: float) -> Optional[int]:
    for step, a in zip(grid, accuracies):
        if a >= threshold:
            return step
    return None
