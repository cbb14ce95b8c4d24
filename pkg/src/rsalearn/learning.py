"""Lexicon learning by differentiating through the listener's reasoning.

The loss for one game is the negative log-probability the listener (at its
own level, over its own lexicon) assigns to the target. The gradient runs
back through every softmax of the recursion to the literal score table and
from there into the four embedding tables.
"""
from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np

from .core import GameContext, Message, message_space
from .lexicon import GroundTruthLexicon, LexiconParams, init_params
from .rsa import AgentSpec, batch_speak, message_costs, reason
from .worldgen import (ConcentrationConfig, GameBatch, sample_batch, sample_generator_params,
                       stream)

PROB_FLOOR = 1e-12
LOG_FLOOR = np.log(PROB_FLOOR)


@dataclass(frozen=True)
class TrainConfig:
    speaker_level: int = 1
    listener_level: int = 0
    corr: int = 0
    n_objects: int = 3
    word_cost: float = 0.6
    steps: int = 2000
    batch_size: int = 32
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    weight_decay: float = 0.01
    dim: int = 16
    init_scale: float = 0.1
    selection: str = "greedy"
    seed: int = 0

    def __post_init__(self):
        if self.speaker_level < 0 or self.listener_level < 0:
            raise ValueError("agent levels must be nonnegative")
        if self.corr not in (0, 1):
            raise ValueError("corr must be 0 or 1")
        if self.n_objects < 2:
            raise ValueError("n_objects must be at least 2")
        if self.steps < 0 or self.batch_size < 1:
            raise ValueError("steps must be >= 0 and batch_size >= 1")
        if self.selection not in ("greedy", "sample"):
            raise ValueError("selection must be 'greedy' or 'sample'")

    def replace(self, **changes) -> "TrainConfig":
        return TrainConfig(**{**asdict(self), **changes})

    def to_json(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json(cls, data: dict) -> "TrainConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown TrainConfig keys: {sorted(unknown)}")
        return cls(**data)


DESK_TRAIN = TrainConfig()
FULL_TRAIN = TrainConfig(steps=25920, batch_size=32, lr=1e-5)


@dataclass(frozen=True)
class TrainStepRecord:
    step: int
    loss: float
    grad_norm: float


@dataclass
class OptimizerState:
    m: LexiconParams
    v: LexiconParams
    step: int = 0
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    weight_decay: float = 0.01

    @classmethod
    def fresh(cls, params: LexiconParams, **hyper) -> "OptimizerState":
        return cls(params.zeros_like(), params.zeros_like(), 0, **hyper)


# ---------------------------------------------------------------------------
# loss and gradient

def _loss_and_grad_scores(params: LexiconParams, games: GameBatch, messages: np.ndarray,
                          listener_level: int, spec: AgentSpec, need_grad: bool = True):
    scores = params.batch_scores(games)
    tape = reason(scores, listener_level, "listener", spec, message_costs(params.vocab, spec.word_cost))
    B = len(games)
    b = np.arange(B)
    logp = tape.top[b, games.target, messages]
    clamped = np.maximum(logp, LOG_FLOOR)
    losses = -clamped
    if not need_grad:
        return losses, None
    g_top = np.zeros_like(tape.top)
    # the floor is flat, so clamped games contribute no gradient
    g_top[b, games.target, messages] = np.where(logp > LOG_FLOOR, -1.0 / B, 0.0)
    return losses, tape.backward(g_top)


def _scores_to_params_grad(params: LexiconParams, games: GameBatch, g_scores: np.ndarray) -> LexiconParams:
    space = message_space(params.vocab)
    O = params.object_embeddings(games.colors, games.shapes)          # (B, N, d)
    W = params.message_embeddings()                                   # (M, d)
    g_O = g_scores @ W                                                # (B, N, d)
    g_W = np.einsum("bnm,bnd->md", g_scores, O)                       # (M, d)
    d = params.dim
    g_cf = np.zeros((params.vocab.n_colors, d))
    g_sf = np.zeros((params.vocab.n_shapes, d))
    np.add.at(g_cf, games.colors.ravel(), g_O.reshape(-1, d))
    np.add.at(g_sf, games.shapes.ravel(), g_O.reshape(-1, d))
    g_cw = np.zeros((params.vocab.n_colors, d))
    g_sw = np.zeros((params.vocab.n_shapes, d))
    has_c = space.color_idx >= 0
    has_s = space.shape_idx >= 0
    np.add.at(g_cw, space.color_idx[has_c], g_W[has_c])
    np.add.at(g_sw, space.shape_idx[has_s], g_W[has_s])
    return params.replace(g_cf, g_sf, g_cw, g_sw)


def batch_loss_and_grad(params: LexiconParams, games: GameBatch, messages: np.ndarray,
                        listener_level: int, spec: AgentSpec) -> tuple[float, LexiconParams]:
    """Mean loss over the batch and its exact gradient."""
    losses, g_scores = _loss_and_grad_scores(params, games, np.asarray(messages), listener_level, spec)
    return float(losses.mean()), _scores_to_params_grad(params, games, g_scores)


def batch_loss(params: LexiconParams, games: GameBatch, messages: np.ndarray,
               listener_level: int, spec: AgentSpec) -> float:
    losses, _ = _loss_and_grad_scores(params, games, np.asarray(messages), listener_level, spec,
                                      need_grad=False)
    return float(losses.mean())


def nll_loss(params: LexiconParams, game: GameContext, message: Message, listener_level: int,
             spec: AgentSpec = AgentSpec()) -> float:
    w = message_space(params.vocab).index(message)
    return batch_loss(params, GameBatch.from_contexts([game]), np.array([w]), listener_level, spec)


def backward(params: LexiconParams, game: GameContext, message: Message, listener_level: int,
             spec: AgentSpec = AgentSpec()) -> LexiconParams:
    w = message_space(params.vocab).index(message)
    return batch_loss_and_grad(params, GameBatch.from_contexts([game]), np.array([w]),
                               listener_level, spec)[1]


# ---------------------------------------------------------------------------
# optimizer

def adamw_step(params: LexiconParams, grads: LexiconParams, state: OptimizerState
               ) -> tuple[LexiconParams, OptimizerState]:
    p_arrays, g_arrays = params.arrays(), grads.arrays()
    if any(p.shape != g.shape for p, g in zip(p_arrays, g_arrays)):
        raise ValueError("gradient shapes do not match parameter shapes")
    if any(p.shape != m.shape for p, m in zip(p_arrays, state.m.arrays())):
        raise ValueError("optimizer state shapes do not match parameter shapes")
    t = state.step + 1
    b1, b2 = state.beta1, state.beta2
    bc1 = 1 - b1 ** t
    bc2 = 1 - b2 ** t
    new_p, new_m, new_v = [], [], []
    for p, g, m, v in zip(p_arrays, g_arrays, state.m.arrays(), state.v.arrays()):
        m = b1 * m + (1 - b1) * g
        v = b2 * v + (1 - b2) * g * g
        p = p * (1 - state.lr * state.weight_decay)
        p = p - state.lr * (m / bc1) / (np.sqrt(v / bc2) + state.eps)
        new_p.append(p)
        new_m.append(m)
        new_v.append(v)
    new_state = OptimizerState(params.replace(*new_m), params.replace(*new_v), t, state.lr, b1, b2,
                               state.eps, state.weight_decay)
    return params.replace(*new_p), new_state


def grad_norm(grads: LexiconParams) -> float:
    return float(np.sqrt(sum(float(np.sum(g * g)) for g in grads.arrays())))


# ---------------------------------------------------------------------------
# training loop

@dataclass
class TrainingRun:
    """Streams of a run: the environment, the initial lexicon and the speaker's choices."""
    config: TrainConfig

    def __post_init__(self):
        cfg = self.config
        self.env_rng = stream(cfg.seed, "train-env")
        self.game_rng = stream(cfg.seed, "train-games")
        self.select_rng = stream(cfg.seed, "train-select")
        self.generator = sample_generator_params(ConcentrationConfig(cfg.corr), self.env_rng)
        self.params = init_params(cfg.dim, cfg.init_scale, stream(cfg.seed, "train-init"))
        self.state = OptimizerState.fresh(self.params, lr=cfg.lr, beta1=cfg.beta1, beta2=cfg.beta2,
                                          eps=cfg.eps, weight_decay=cfg.weight_decay)
        self.speaker = GroundTruthLexicon(self.params.vocab)
        self.spec = AgentSpec(word_cost=cfg.word_cost)
        self.history: list[TrainStepRecord] = []

    def step(self) -> TrainStepRecord:
        cfg = self.config
        games = sample_batch(self.generator, cfg.n_objects, cfg.batch_size, self.game_rng)
        messages = batch_speak(self.speaker, games, cfg.speaker_level, self.spec, cfg.selection,
                               self.select_rng)
        loss, grads = batch_loss_and_grad(self.params, games, messages, cfg.listener_level, self.spec)
        record = TrainStepRecord(self.state.step, loss, grad_norm(grads))
        self.params, self.state = adamw_step(self.params, grads, self.state)
        self.history.append(record)
        return record

    def run(self, steps: int) -> None:
        for _ in range(steps):
            self.step()


def train(config: TrainConfig, callback=None) -> tuple[LexiconParams, list[TrainStepRecord]]:
    """Train a listener; ``callback(step, params)`` is called after every update."""
    run = TrainingRun(config)
    for _ in range(config.steps):
        run.step()
        if callback is not None:
            callback(run.state.step, run.params)
    return run.params, run.history


def curve_csv(history: list[TrainStepRecord]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["step", "loss", "grad_norm"])
    for rec in history:
        writer.writerow([rec.step, repr(rec.loss), repr(rec.grad_norm)])
    return buf.getvalue()


def save_config(config: TrainConfig, path: str | Path) -> None:
    Path(path).write_text(json.dumps(config.to_json(), indent=2, sort_keys=True) + "\n")


def load_config(path: str | Path) -> TrainConfig:
    return TrainConfig.from_json(json.loads(Path(path).read_text()))
