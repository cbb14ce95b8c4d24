"""Exact Rational Speech Act recursion over the full message space.

Everything is computed in log space on (..., N, |V|) tables whose entry
(i, w) relates object i and message w:

* the level-0 listener normalizes literal scores over objects,
* a level-n speaker normalizes ``lam * (log L_{n-1} - cost)`` over messages,
* a level-n listener normalizes ``log S_{n-1} + log prior`` over objects.

A level-0 speaker is the literal speaker ``softmax(lam * (D - cost))``, so
odd listener levels are defined too, although the experiments only use
listeners 0/2 and speakers 1/3. Literal falsehoods under the ground-truth
lexicon are -inf and come out as exact zeros.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .core import DEFAULT_VOCAB, GameContext, Message, RSAError, Vocabulary, message_space
from .lexicon import Lexicon
from .worldgen import GameBatch

OBJECT_AXIS = -2
MESSAGE_AXIS = -1
TIE_TOL = 1e-12


class AllZeroSupport(RSAError):
    """The queried message has zero probability under every object."""


@dataclass(frozen=True)
class AgentSpec:
    level: int = 0
    lam: float = 1.0
    word_cost: float = 0.6
    prior: Optional[tuple[float, ...]] = field(default=None)

    def __post_init__(self):
        if self.level < 0:
            raise ValueError("level must be nonnegative")
        if self.lam <= 0:
            raise ValueError("lam must be positive")
        if self.word_cost < 0:
            raise ValueError("word_cost must be nonnegative")
        if self.prior is not None:
            p = np.asarray(self.prior, dtype=float)
            if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-9:
                raise ValueError("prior must be a probability vector")
            object.__setattr__(self, "prior", tuple(float(x) for x in p))

    def at_level(self, level: int) -> "AgentSpec":
        return AgentSpec(level, self.lam, self.word_cost, self.prior)

    def log_prior(self, n_objects: int) -> np.ndarray:
        if self.prior is None:
            return np.full(n_objects, -np.log(n_objects))
        if len(self.prior) != n_objects:
            raise ValueError(f"prior has {len(self.prior)} entries for {n_objects} objects")
        with np.errstate(divide="ignore"):
            return np.log(np.asarray(self.prior))


def message_cost(message: Message, word_cost: float) -> float:
    if word_cost < 0:
        raise ValueError("word_cost must be nonnegative")
    return word_cost * message.length


def message_costs(vocab: Vocabulary, word_cost: float) -> np.ndarray:
    return word_cost * message_space(vocab).lengths


# ---------------------------------------------------------------------------
# log-space primitives

def log_softmax(x: np.ndarray, axis: int) -> np.ndarray:
    """Log-softmax that keeps -inf entries at -inf and maps all -inf slices to all -inf."""
    m = np.max(x, axis=axis, keepdims=True)
    dead = ~np.isfinite(m)
    m = np.where(dead, 0.0, m)
    with np.errstate(divide="ignore"):
        lse = np.log(np.sum(np.exp(x - m), axis=axis, keepdims=True)) + m
    out = x - np.where(dead, 0.0, lse)
    return np.where(dead, -np.inf, out)


def log_softmax_backward(grad_out: np.ndarray, out: np.ndarray, axis: int) -> np.ndarray:
    return grad_out - np.exp(out) * np.sum(grad_out, axis=axis, keepdims=True)


@dataclass
class Tape:
    """Forward record of a reasoning chain: ``tables[k]`` is the level-k log table."""
    axes: list[int]
    tables: list[np.ndarray]
    lam: float

    @property
    def top(self) -> np.ndarray:
        return self.tables[-1]

    def backward(self, grad_top: np.ndarray) -> np.ndarray:
        """Pull a gradient on the top table back to the literal score table."""
        g = grad_top
        for k in range(len(self.tables) - 1, -1, -1):
            g = log_softmax_backward(g, self.tables[k], self.axes[k])
            if self.axes[k] == MESSAGE_AXIS:
                g = self.lam * g
        return g


def reason(scores: np.ndarray, level: int, kind: str, spec: AgentSpec, costs: np.ndarray) -> Tape:
    """Run the recursion from literal ``scores`` (..., N, |V|) up to one agent.

    ``kind`` is "listener" or "speaker"; the returned tape's top table is
    log L_level(i | w) (normalized over objects) or log S_level(w | i)
    (normalized over messages).
    """
    if kind not in ("listener", "speaker"):
        raise ValueError(f"unknown agent kind {kind!r}")
    n_objects = scores.shape[OBJECT_AXIS]
    log_prior = spec.log_prior(n_objects)[:, None]
    # the kind at level 0 of this chain; kinds alternate going up
    current = kind if level % 2 == 0 else ("speaker" if kind == "listener" else "listener")
    if current == "listener":
        axes, tables = [OBJECT_AXIS], [log_softmax(scores, OBJECT_AXIS)]
    else:
        axes, tables = [MESSAGE_AXIS], [log_softmax(spec.lam * (scores - costs), MESSAGE_AXIS)]
    for _ in range(level):
        prev = tables[-1]
        if current == "listener":
            current = "speaker"
            axes.append(MESSAGE_AXIS)
            tables.append(log_softmax(spec.lam * (prev - costs), MESSAGE_AXIS))
        else:
            current = "listener"
            axes.append(OBJECT_AXIS)
            tables.append(log_softmax(prev + log_prior, OBJECT_AXIS))
    return Tape(axes, tables, spec.lam)


# ---------------------------------------------------------------------------
# batched agents

def listener_log_table(lexicon: Lexicon, games: GameBatch, level: int, spec: AgentSpec) -> np.ndarray:
    costs = message_costs(lexicon.vocab, spec.word_cost)
    return reason(lexicon.batch_scores(games), level, "listener", spec, costs).top


def speaker_log_table(lexicon: Lexicon, games: GameBatch, level: int, spec: AgentSpec) -> np.ndarray:
    costs = message_costs(lexicon.vocab, spec.word_cost)
    return reason(lexicon.batch_scores(games), level, "speaker", spec, costs).top


def batch_listen(lexicon: Lexicon, games: GameBatch, messages: np.ndarray, level: int,
                 spec: AgentSpec) -> np.ndarray:
    """(B, N) listener distributions over objects for one message index per game."""
    table = listener_log_table(lexicon, games, level, spec)
    cols = table[np.arange(len(games)), :, messages]
    if np.any(np.all(np.isneginf(cols), axis=1)):
        raise AllZeroSupport("a message has zero probability for every object in its context")
    return np.exp(cols)


def batch_speak(lexicon: Lexicon, games: GameBatch, level: int, spec: AgentSpec, mode: str = "greedy",
                rng: np.random.Generator | None = None) -> np.ndarray:
    """One message index per game from the level-``level`` speaker describing each target."""
    table = speaker_log_table(lexicon, games, level, spec)
    dists = np.exp(table[np.arange(len(games)), games.target, :])
    return select_indices(dists, mode, rng)


def select_indices(dists: np.ndarray, mode: str = "greedy", rng: np.random.Generator | None = None) -> np.ndarray:
    dists = np.atleast_2d(dists)
    if mode == "greedy":
        best = dists.max(axis=1, keepdims=True)
        return np.argmax(dists >= best - TIE_TOL, axis=1)
    if mode == "sample":
        if rng is None:
            raise ValueError("sampling needs an rng")
        cdf = np.cumsum(dists, axis=1)
        u = rng.random(len(dists)) * cdf[:, -1]
        idx = (u[:, None] >= cdf).sum(axis=1)
        return np.minimum(idx, dists.shape[1] - 1)
    raise ValueError(f"unknown selection mode {mode!r}")


# ---------------------------------------------------------------------------
# single-context API

def _single(context: GameContext) -> GameBatch:
    return GameBatch.from_contexts([context])


def listener(level: int, lexicon: Lexicon, context: GameContext, message: Message,
             spec: AgentSpec = AgentSpec()) -> np.ndarray:
    """Distribution over the context's object indices given ``message``."""
    w = message_space(lexicon.vocab).index(message)
    return batch_listen(lexicon, _single(context), np.array([w]), level, spec)[0]


def speaker(level: int, lexicon: Lexicon, context: GameContext, target: int | None = None,
            spec: AgentSpec = AgentSpec()) -> np.ndarray:
    """Distribution over all messages (canonical order) for describing ``target``."""
    if target is None:
        target = context.target
    if not 0 <= target < context.n_objects:
        raise ValueError(f"target index {target} out of range")
    table = speaker_log_table(lexicon, _single(context), level, spec)[0]
    return np.exp(table[target])


def select_message(dist: np.ndarray, mode: str = "greedy", rng: np.random.Generator | None = None,
                   vocab: Vocabulary = DEFAULT_VOCAB) -> Message:
    """Greedy takes the lowest-index maximum; sample draws from ``dist`` with ``rng``."""
    idx = int(select_indices(np.asarray(dist, dtype=float), mode, rng)[0])
    return message_space(vocab).messages[idx]
