import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rsalearn.core import DEFAULT_VOCAB, GameContext, enumerate_messages, is_true, make_message, message_space
from rsalearn.lexicon import GroundTruthLexicon, init_params
from rsalearn.reference import BruteForceRSA, embedding_scorer, truth_scorer
from rsalearn.rsa import (AgentSpec, AllZeroSupport, listener, log_softmax, message_cost, reason, select_indices,
                          select_message, speaker)
from rsalearn.worldgen import ConcentrationConfig, make_rng, sample_game, sample_generator_params

from conftest import BLUE, CIRCLE, RED, SQUARE, obj

GT = GroundTruthLexicon()
MSGS = enumerate_messages()
SPACE = message_space(DEFAULT_VOCAB)


def test_message_cost():
    assert message_cost(make_message("red"), 0.6) == 0.6
    assert message_cost(make_message("red", "circle"), 0.6) == pytest.approx(1.2)
    assert message_cost(make_message("red", "circle"), 0.0) == 0.0


def test_literal_listener_is_ambiguous(fig1_context):
    assert listener(0, GT, fig1_context, make_message("red")).tolist() == [0.5, 0.5, 0.0]


def test_pragmatic_listener_resolves_red(fig1_context):
    # L2 is the S1 likelihood ratio; S1 weights are L0(t|w) * exp(-cost)
    e1, e2 = math.exp(-0.6), math.exp(-1.2)
    s1_rc = 0.5 * e1 / (0.5 * e1 + 0.5 * e1 + e2)
    s1_rs = 0.5 * e1 / (0.5 * e1 + e1 + e2)
    expected = [s1_rc / (s1_rc + s1_rs), s1_rs / (s1_rc + s1_rs), 0.0]
    got = listener(2, GT, fig1_context, make_message("red"), AgentSpec(word_cost=0.6))
    assert got == pytest.approx(expected, abs=1e-12)
    assert got == pytest.approx([0.569, 0.431, 0.0], abs=5e-4)
    assert int(np.argmax(got)) == 0


def test_full_description_is_one_hot_for_literal_listener():
    rng = make_rng(3)
    for _ in range(50):
        ctx = sample_game(sample_generator_params(ConcentrationConfig(1), rng), 5, rng)
        t = ctx.target_object
        full = make_message(DEFAULT_VOCAB.color_words[t.color], DEFAULT_VOCAB.shape_words[t.shape])
        dist = listener(0, GT, ctx, full)
        assert dist[ctx.target] == 1.0 and dist.sum() == 1.0


def test_s1_distribution(fig1_context):
    dist = speaker(1, GT, fig1_context, 0, AgentSpec(word_cost=0.6))
    w = np.array([0.5 * math.exp(-0.6), 0.5 * math.exp(-0.6), math.exp(-1.2)])
    w /= w.sum()
    support = {str(MSGS[i]): p for i, p in enumerate(dist) if p > 0}
    assert set(support) == {"red", "circle", "red circle"}
    assert support["red"] == pytest.approx(w[0], abs=1e-12)
    assert support["circle"] == pytest.approx(w[1], abs=1e-12)
    assert support["red circle"] == pytest.approx(w[2], abs=1e-12)
    assert [round(support[k], 3) for k in ("red", "circle", "red circle")] == [0.323, 0.323, 0.354]


def test_high_cost_concentrates_on_best_one_word(fig1_context):
    # target red square: two-word messages vanish, one-word ones keep their L0 ratio 1 : 0.5
    dist = speaker(1, GT, fig1_context, 1, AgentSpec(word_cost=50.0))
    assert dist[SPACE.index(make_message("red", "square"))] < 1e-20
    assert dist[SPACE.index(make_message(None, "square"))] == pytest.approx(2 / 3, abs=1e-12)
    assert MSGS[int(np.argmax(dist))] == make_message(None, "square")


def test_unique_one_word_is_argmax():
    ctx = GameContext((obj(RED, CIRCLE), obj(BLUE, SQUARE), obj(BLUE, CIRCLE)), 1)
    dist = speaker(1, GT, ctx, 1, AgentSpec(word_cost=0.6))
    assert MSGS[int(np.argmax(dist))] == make_message(None, "square")


def test_false_messages_get_zero_speaker_mass(fig1_context):
    for level in (1, 3):
        dist = speaker(level, GT, fig1_context, 0)
        for m, p in zip(MSGS, dist):
            if not is_true(m, fig1_context.objects[0]):
                assert p == 0.0


def test_all_zero_support(fig1_context):
    with pytest.raises(AllZeroSupport):
        listener(0, GT, fig1_context, make_message("green"))
    with pytest.raises(AllZeroSupport):
        listener(2, GT, fig1_context, make_message("green"))


def test_select_message_one_hot_and_ties():
    one_hot = np.zeros(41)
    one_hot[7] = 1.0
    assert select_message(one_hot, "greedy") == MSGS[7]
    assert select_message(one_hot, "sample", make_rng(0)) == MSGS[7]
    dist = np.zeros(41)
    dist[[3, 9, 12]] = [0.2, 0.4, 0.4]
    assert select_message(dist, "greedy") == MSGS[9]


def test_sampling_frequencies_match():
    rng = make_rng(1)
    dist = np.zeros(41)
    dist[[0, 5, 20, 40]] = [0.1, 0.2, 0.3, 0.4]
    draws = select_indices(np.tile(dist, (100_000, 1)), "sample", rng)
    freq = np.bincount(draws, minlength=41) / len(draws)
    assert 0.5 * np.abs(freq - dist).sum() < 0.01


def random_context(seed, n=4, corr=1):
    rng = make_rng(seed)
    return sample_game(sample_generator_params(ConcentrationConfig(corr), rng), n, rng)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.sampled_from([(0, "listener"), (2, "listener"), (1, "speaker"),
                                                 (3, "speaker"), (1, "listener"), (0, "speaker")]))
def test_outputs_are_probability_vectors(seed, agent):
    level, kind = agent
    ctx = random_context(seed, n=2 + seed % 4)
    for lex in (GT, init_params(4, 1.0, make_rng(seed))):
        if kind == "speaker":
            for t in range(ctx.n_objects):
                d = speaker(level, lex, ctx, t)
                assert abs(d.sum() - 1) < 1e-9 and d.min() >= 0 and d.max() <= 1
        else:
            t = ctx.target_object
            m = make_message(DEFAULT_VOCAB.color_words[t.color], None)
            d = listener(level, lex, ctx, m)
            assert abs(d.sum() - 1) < 1e-9 and d.min() >= 0 and d.max() <= 1


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.floats(-5, 5))
def test_column_shift_invariance(seed, shift):
    params = init_params(4, 1.0, make_rng(seed))
    ctx = random_context(seed)
    from rsalearn.lexicon import score_matrix
    scores = score_matrix(params, ctx)
    costs = 0.6 * SPACE.lengths
    spec = AgentSpec()
    w = seed % 41
    shifted = scores.copy()
    shifted[:, w] += shift
    base = np.exp(reason(scores, 0, "listener", spec, costs).top[:, w])
    moved = np.exp(reason(shifted, 0, "listener", spec, costs).top[:, w])
    assert np.allclose(base, moved, atol=1e-12)
    # a per-object constant added to log L0 leaves that object's S1 row unchanged
    log_l0 = reason(scores, 0, "listener", spec, costs).top
    s1 = log_softmax(log_l0 - costs, -1)
    s1_shift = log_softmax(log_l0 + shift * np.arange(ctx.n_objects)[:, None] - costs, -1)
    assert np.allclose(np.exp(s1), np.exp(s1_shift), atol=1e-12)


def test_small_world_oracle_equivalence_spot():
    from rsalearn.selftest import SMALL_VOCAB, small_world_contexts, oracle_max_error
    contexts = small_world_contexts(3)[::7]
    params = init_params(2, 1.0, make_rng(4), vocab=SMALL_VOCAB)
    assert oracle_max_error(contexts, params, embedding_scorer(params)) < 1e-12
    assert oracle_max_error(contexts, GroundTruthLexicon(SMALL_VOCAB), truth_scorer(SMALL_VOCAB)) < 1e-12


def test_zero_cost_equal_probabilities_for_equal_l0():
    ctx = random_context(21, n=5)
    spec = AgentSpec(word_cost=0.0)
    for t in range(ctx.n_objects):
        s1 = speaker(1, GT, ctx, t, spec)
        brute = BruteForceRSA(ctx, truth_scorer(DEFAULT_VOCAB), DEFAULT_VOCAB, word_cost=0.0)
        l0 = np.array([brute.listener(0, t, m) for m in MSGS])
        for value in set(l0[l0 > 0].round(12)):
            group = s1[np.isclose(l0, value, atol=1e-12)]
            assert np.allclose(group, group[0], atol=1e-15)


def test_prior_enters_pragmatic_listener(fig1_context):
    skewed = AgentSpec(prior=(0.1, 0.8, 0.1))
    d = listener(2, GT, fig1_context, make_message("red"), skewed)
    brute = BruteForceRSA(fig1_context, truth_scorer(DEFAULT_VOCAB), DEFAULT_VOCAB, prior=[0.1, 0.8, 0.1])
    assert d == pytest.approx(brute.listener_dist(2, make_message("red")), abs=1e-12)
    assert d[1] > d[0]


def test_agent_spec_validation():
    with pytest.raises(ValueError):
        AgentSpec(word_cost=-1)
    with pytest.raises(ValueError):
        AgentSpec(prior=(0.5, 0.6))
    with pytest.raises(ValueError):
        AgentSpec(level=-1)
