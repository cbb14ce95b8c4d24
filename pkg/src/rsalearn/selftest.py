"""Property suites run by ``rsalearn selftest`` and mirrored by the acceptance tests."""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .core import GameContext, InvalidContext, ObjectFeatures, Vocabulary, message_space
from .learning import batch_loss, batch_loss_and_grad
from .lexicon import GroundTruthLexicon, init_params
from .reference import BruteForceRSA, embedding_scorer, fisher_enumeration, truth_scorer
from .rsa import AgentSpec, listener_log_table, speaker_log_table
from .stats import fisher_exact
from .worldgen import ConcentrationConfig, GameBatch, make_rng, sample_batch, sample_generator_params

SMALL_VOCAB = Vocabulary(("red", "blue"), ("circle", "square"))


@dataclass
class SuiteResult:
    name: str
    passed: bool
    detail: str


def small_world_contexts(max_objects: int = 3) -> list[GameContext]:
    """Every valid context over the 2-color/2-shape world with 2..max_objects objects."""
    kinds = [ObjectFeatures(c, s) for c in range(2) for s in range(2)]
    out = []
    for n in range(2, max_objects + 1):
        for objs in itertools.product(kinds, repeat=n):
            for t in range(n):
                try:
                    out.append(GameContext(objs, t))
                except InvalidContext:
                    pass
    return out


def oracle_max_error(contexts, lexicon, scorer, word_cost=0.6,
                     listener_levels=(0, 2), speaker_levels=(1, 3)) -> float:
    """Largest absolute gap between the vectorized recursion and the brute-force oracle."""
    vocab = lexicon.vocab
    messages = message_space(vocab).messages
    spec = AgentSpec(word_cost=word_cost)
    worst = 0.0
    for ctx in contexts:
        games = GameBatch.from_contexts([ctx])
        brute = BruteForceRSA(ctx, scorer, vocab, word_cost=word_cost)
        for level in listener_levels:
            table = np.exp(listener_log_table(lexicon, games, level, spec)[0])
            for w, msg in enumerate(messages):
                ref = np.array(brute.listener_dist(level, msg))
                if ref.sum() == 0:
                    # message false of every object: the table column must be all zero too
                    worst = max(worst, float(np.max(table[:, w])))
                    continue
                worst = max(worst, float(np.max(np.abs(table[:, w] - ref))))
        for level in speaker_levels:
            table = np.exp(speaker_log_table(lexicon, games, level, spec)[0])
            for i in range(ctx.n_objects):
                ref = np.array(brute.speaker_dist(level, i))
                worst = max(worst, float(np.max(np.abs(table[i] - ref))))
    return worst


def suite_oracle(tol: float = 1e-12, max_objects: int = 3) -> SuiteResult:
    contexts = small_world_contexts(max_objects)
    gt = GroundTruthLexicon(SMALL_VOCAB)
    err_gt = oracle_max_error(contexts, gt, truth_scorer(SMALL_VOCAB))
    params = init_params(3, 1.0, make_rng(11), vocab=SMALL_VOCAB)
    err_emb = oracle_max_error(contexts, params, embedding_scorer(params))
    worst = max(err_gt, err_emb)
    return SuiteResult("oracle-equivalence", worst <= tol,
                       f"{len(contexts)} contexts, max |diff| truth={err_gt:.2e} embedding={err_emb:.2e}")


def relative_error(analytic: np.ndarray, numeric: np.ndarray, floor: float = 1e-12) -> float:
    """Max-norm relative error ``|a - n|_inf / max(|a|_inf, |n|_inf)``."""
    scale = max(float(np.max(np.abs(analytic))), float(np.max(np.abs(numeric))), floor)
    return float(np.max(np.abs(analytic - numeric))) / scale


def central_difference(f: Callable[[np.ndarray], float], x: np.ndarray, h: float = 1e-5) -> np.ndarray:
    grad = np.zeros_like(x)
    for k in range(len(x)):
        e = np.zeros_like(x)
        e[k] = h
        grad[k] = (f(x + e) - f(x - e)) / (2 * h)
    return grad


def gradient_instance(rng: np.random.Generator, level: int, dim: int = 4):
    params = init_params(dim, float(rng.uniform(0.3, 1.5)), rng)
    n = int(rng.integers(2, 6))
    gen = sample_generator_params(ConcentrationConfig(int(rng.integers(2))), rng)
    games = sample_batch(gen, n, 1, rng)
    msg = np.array([int(rng.integers(len(message_space(params.vocab))))])
    spec = AgentSpec(word_cost=float(rng.uniform(0.0, 1.0)))
    return params, games, msg, spec


def gradient_check_errors(n_instances: int = 100, levels=(0, 2), seed: int = 5, h: float = 1e-5) -> list[float]:
    rng = make_rng(seed)
    errors = []
    for level in levels:
        for _ in range(n_instances):
            params, games, msg, spec = gradient_instance(rng, level)
            _, grads = batch_loss_and_grad(params, games, msg, level, spec)
            numeric = central_difference(
                lambda x: batch_loss(params.from_flat(x), games, msg, level, spec), params.flat(), h)
            errors.append(relative_error(grads.flat(), numeric))
    return errors


def suite_gradients(n_instances: int = 100, tol: float = 1e-4) -> SuiteResult:
    errors = gradient_check_errors(n_instances)
    worst = max(errors)
    return SuiteResult("gradient-check", worst < tol,
                       f"{len(errors)} instances at levels 0 and 2, max relative error {worst:.2e}")


def all_tables(max_total: int):
    for n in range(max_total + 1):
        for a in range(n + 1):
            for b in range(n - a + 1):
                for c in range(n - a - b + 1):
                    yield [[a, b], [c, n - a - b - c]]


def suite_fisher(max_total: int = 40, tol: float = 1e-9) -> SuiteResult:
    worst = 0.0
    count = 0
    for table in all_tables(max_total):
        worst = max(worst, abs(fisher_exact(table) - fisher_enumeration(table)))
        count += 1
    anchor = abs(fisher_exact([[3, 1], [1, 3]]) - 34 / 70)
    return SuiteResult("fisher-exact", worst <= tol and anchor <= tol,
                       f"{count} tables with total <= {max_total}, max |diff| {worst:.2e}")


def run_all(quick: bool = False) -> list[SuiteResult]:
    if quick:
        return [suite_oracle(), suite_gradients(20), suite_fisher(20)]
    return [suite_oracle(), suite_gradients(), suite_fisher()]
