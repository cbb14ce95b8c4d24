"""Literal interpretation functions D(object, message).

``LexiconParams`` is the learnable scorer: an object embeds as the sum of
its color and shape feature vectors, a message as the sum of its word
vectors, and the score is their dot product. ``GroundTruthLexicon`` is the
0/-inf log-indicator of literal truth used by knowledgeable speakers.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Union

import numpy as np

from .core import (DEFAULT_VOCAB, GameContext, Message, ObjectFeatures, RSAError, Vocabulary,
                   message_space)
from .worldgen import GameBatch

NEG_INF = -np.inf
CHECKPOINT_FORMAT = "rsalearn-lexicon"
CHECKPOINT_VERSION = 1
FIELDS = ("color_feature_emb", "shape_feature_emb", "color_word_emb", "shape_word_emb")


class CheckpointError(RSAError):
    pass


@dataclass(eq=False)
class LexiconParams:
    color_feature_emb: np.ndarray
    shape_feature_emb: np.ndarray
    color_word_emb: np.ndarray
    shape_word_emb: np.ndarray
    vocab: Vocabulary = DEFAULT_VOCAB

    def __post_init__(self):
        for name in FIELDS:
            setattr(self, name, np.array(getattr(self, name), dtype=float))
        d = self.dim
        expected = {"color_feature_emb": self.vocab.n_colors, "shape_feature_emb": self.vocab.n_shapes,
                    "color_word_emb": self.vocab.n_colors, "shape_word_emb": self.vocab.n_shapes}
        for name, rows in expected.items():
            arr = getattr(self, name)
            if arr.shape != (rows, d):
                raise ValueError(f"{name} must have shape {(rows, d)}, got {arr.shape}")
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} has non-finite entries")
        if d < 1:
            raise ValueError("embedding width must be at least 1")

    @property
    def dim(self) -> int:
        return self.color_feature_emb.shape[1]

    @property
    def n_params(self) -> int:
        return sum(getattr(self, name).size for name in FIELDS)

    def arrays(self) -> tuple[np.ndarray, ...]:
        return tuple(getattr(self, name) for name in FIELDS)

    def replace(self, *arrays: np.ndarray) -> "LexiconParams":
        return LexiconParams(*arrays, vocab=self.vocab)

    def zeros_like(self) -> "LexiconParams":
        return self.replace(*(np.zeros_like(a) for a in self.arrays()))

    def copy(self) -> "LexiconParams":
        return self.replace(*(a.copy() for a in self.arrays()))

    def flat(self) -> np.ndarray:
        return np.concatenate([a.ravel() for a in self.arrays()])

    def from_flat(self, vec: np.ndarray) -> "LexiconParams":
        out, pos = [], 0
        for a in self.arrays():
            out.append(np.asarray(vec[pos:pos + a.size], dtype=float).reshape(a.shape))
            pos += a.size
        return self.replace(*out)

    def __eq__(self, other):
        if not isinstance(other, LexiconParams):
            return NotImplemented
        return self.vocab == other.vocab and all(
            np.array_equal(a, b) for a, b in zip(self.arrays(), other.arrays()))

    # embeddings -----------------------------------------------------------

    def object_embeddings(self, colors: np.ndarray, shapes: np.ndarray) -> np.ndarray:
        return self.color_feature_emb[colors] + self.shape_feature_emb[shapes]

    def message_embeddings(self) -> np.ndarray:
        """(|V|, d) matrix of summed word vectors, rows in canonical message order."""
        space = message_space(self.vocab)
        W = np.zeros((len(space), self.dim))
        has_c = space.color_idx >= 0
        has_s = space.shape_idx >= 0
        W[has_c] += self.color_word_emb[space.color_idx[has_c]]
        W[has_s] += self.shape_word_emb[space.shape_idx[has_s]]
        return W

    def message_embedding(self, message: Message) -> np.ndarray:
        vec = np.zeros(self.dim)
        if message.color_word is not None:
            vec += self.color_word_emb[self.vocab.color_index(message.color_word)]
        if message.shape_word is not None:
            vec += self.shape_word_emb[self.vocab.shape_index(message.shape_word)]
        return vec

    def batch_scores(self, games: GameBatch) -> np.ndarray:
        """(B, N, |V|) literal scores for every object and message of every game."""
        O = self.object_embeddings(games.colors, games.shapes)
        return O @ self.message_embeddings().T

    # checkpoints ----------------------------------------------------------

    def to_json(self) -> dict:
        doc = {"format": CHECKPOINT_FORMAT, "version": CHECKPOINT_VERSION, "dim": self.dim,
               "color_words": list(self.vocab.color_words), "shape_words": list(self.vocab.shape_words)}
        for name in FIELDS:
            doc[name] = getattr(self, name).tolist()
        return doc

    @classmethod
    def from_json(cls, doc: dict) -> "LexiconParams":
        if not isinstance(doc, dict) or doc.get("format") != CHECKPOINT_FORMAT:
            raise CheckpointError("not an rsalearn lexicon checkpoint")
        if doc.get("version") != CHECKPOINT_VERSION:
            raise CheckpointError(f"unsupported checkpoint version {doc.get('version')!r}")
        try:
            vocab = Vocabulary(tuple(doc["color_words"]), tuple(doc["shape_words"]))
            params = cls(*(np.asarray(doc[name], dtype=float) for name in FIELDS), vocab=vocab)
        except (KeyError, TypeError, ValueError) as exc:
            raise CheckpointError(f"malformed checkpoint: {exc}") from exc
        if params.dim != doc.get("dim"):
            raise CheckpointError("checkpoint dim does not match its arrays")
        return params

    def save(self, path: Union[str, Path]) -> None:
        Path(path).write_text(json.dumps(self.to_json()) + "\n")

    @classmethod
    def load(cls, path: Union[str, Path]) -> "LexiconParams":
        try:
            doc = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise CheckpointError(f"cannot read checkpoint {path}: {exc}") from exc
        return cls.from_json(doc)


@dataclass(frozen=True)
class GroundTruthLexicon:
    vocab: Vocabulary = DEFAULT_VOCAB

    def batch_scores(self, games: GameBatch) -> np.ndarray:
        space = message_space(self.vocab)
        c = games.colors[..., None]
        s = games.shapes[..., None]
        ok = ((space.color_idx < 0) | (space.color_idx == c)) & ((space.shape_idx < 0) | (space.shape_idx == s))
        return np.where(ok, 0.0, NEG_INF)


Lexicon = Union[LexiconParams, GroundTruthLexicon]


def init_params(dim: int = 16, init_scale: float = 0.1, rng: np.random.Generator | None = None,
                vocab: Vocabulary = DEFAULT_VOCAB) -> LexiconParams:
    if dim < 1:
        raise ValueError("dim must be at least 1")
    if init_scale < 0:
        raise ValueError("init_scale must be nonnegative")
    if rng is None:
        from .worldgen import make_rng
        rng = make_rng(0)
    sizes = (vocab.n_colors, vocab.n_shapes, vocab.n_colors, vocab.n_shapes)
    return LexiconParams(*(init_scale * rng.standard_normal((k, dim)) for k in sizes), vocab=vocab)


def literal_score(params: LexiconParams, obj: ObjectFeatures, message: Message) -> float:
    obj_vec = params.color_feature_emb[obj.color] + params.shape_feature_emb[obj.shape]
    return float(obj_vec @ params.message_embedding(message))


def score_matrix(lexicon: Lexicon, context: GameContext, messages: list[Message] | None = None) -> np.ndarray:
    """(N, len(messages)) literal scores; all messages of the vocabulary by default."""
    space = message_space(lexicon.vocab)
    full = lexicon.batch_scores(GameBatch.from_contexts([context]))[0]
    if messages is None:
        return full
    if not messages:
        raise ValueError("message list must be non-empty")
    return full[:, [space.index(m) for m in messages]]
