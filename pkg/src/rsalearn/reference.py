"""Scalar brute-force evaluation of the reasoning recursion.

Deliberately naive: explicit loops over objects and messages with
``math.exp``/``math.log`` on plain floats, sharing no code with the
vectorized path beyond the domain types. Used as an oracle by the self
test and the test suite, never by experiments.
"""
from __future__ import annotations

import math
from typing import Callable, Sequence

from .core import GameContext, Message, ObjectFeatures, Vocabulary, enumerate_messages, is_true


def truth_scorer(vocab: Vocabulary) -> Callable[[ObjectFeatures, Message], float | None]:
    """Literal scorer returning ``None`` for literally false pairs."""
    def score(obj, msg):
        return 0.0 if is_true(msg, obj, vocab) else None
    return score


def embedding_scorer(params) -> Callable[[ObjectFeatures, Message], float]:
    vocab = params.vocab

    def score(obj, msg):
        total = 0.0
        for k in range(params.dim):
            o = float(params.color_feature_emb[obj.color][k]) + float(params.shape_feature_emb[obj.shape][k])
            w = 0.0
            if msg.color_word is not None:
                w += float(params.color_word_emb[vocab.color_index(msg.color_word)][k])
            if msg.shape_word is not None:
                w += float(params.shape_word_emb[vocab.shape_index(msg.shape_word)][k])
            total += o * w
        return total
    return score


class BruteForceRSA:
    """Direct recursive definition of L_n(i | w) and S_n(w | i) for one context."""

    def __init__(self, context: GameContext, scorer, vocab: Vocabulary, word_cost: float = 0.6,
                 lam: float = 1.0, prior: Sequence[float] | None = None):
        self.objects = list(context.objects)
        self.messages = enumerate_messages(vocab)
        self.scorer = scorer
        self.word_cost = word_cost
        self.lam = lam
        n = len(self.objects)
        self.prior = list(prior) if prior is not None else [1.0 / n] * n
        self._memo: dict = {}

    def cost(self, msg: Message) -> float:
        return self.word_cost * ((msg.color_word is not None) + (msg.shape_word is not None))

    def listener(self, level: int, i: int, msg: Message) -> float:
        key = ("L", level, i, msg)
        if key not in self._memo:
            self._memo[key] = self._listener(level, i, msg)
        return self._memo[key]

    def speaker(self, level: int, msg: Message, i: int) -> float:
        key = ("S", level, i, msg)
        if key not in self._memo:
            self._memo[key] = self._speaker(level, msg, i)
        return self._memo[key]

    def _listener(self, level, i, msg):
        if level == 0:
            weights = []
            for o in self.objects:
                s = self.scorer(o, msg)
                weights.append(0.0 if s is None else math.exp(s))
        else:
            weights = [self.speaker(level - 1, msg, j) * self.prior[j] for j in range(len(self.objects))]
        total = sum(weights)
        return weights[i] / total if total > 0 else 0.0

    def _speaker_utility(self, level, msg, i):
        if level == 0:
            s = self.scorer(self.objects[i], msg)
            return None if s is None else s - self.cost(msg)
        p = self.listener(level - 1, i, msg)
        return None if p == 0.0 else math.log(p) - self.cost(msg)

    def _speaker(self, level, msg, i):
        utils = [self._speaker_utility(level, m, i) for m in self.messages]
        finite = [u for u in utils if u is not None]
        top = max(finite)
        weights = [0.0 if u is None else math.exp(self.lam * (u - top)) for u in utils]
        mine = weights[self.messages.index(msg)]
        return mine / sum(weights)

    def listener_dist(self, level: int, msg: Message) -> list[float]:
        return [self.listener(level, i, msg) for i in range(len(self.objects))]

    def speaker_dist(self, level: int, i: int) -> list[float]:
        return [self.speaker(level, m, i) for m in self.messages]


def fisher_enumeration(table: Sequence[Sequence[int]]) -> float:
    """Two-sided Fisher p-value by exact integer enumeration of all tables with the same margins."""
    (a, b), (c, d) = table
    row1, col1, n = a + b, a + c, a + b + c + d
    if n == 0:
        return 1.0
    lo, hi = max(0, row1 + col1 - n), min(row1, col1)
    weights = {x: math.comb(col1, x) * math.comb(n - col1, row1 - x) for x in range(lo, hi + 1)}
    observed = weights[a]
    kept = sum(w for w in weights.values() if w <= observed)
    return kept / math.comb(n, row1)
