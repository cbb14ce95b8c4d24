"""Domain vocabulary shared by every module: objects, messages, contexts.

Objects are symbolic (color, shape) pairs. Messages name the color, the
shape, or both; the message space of a vocabulary is every such one- or
two-word message in a fixed canonical order.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Optional, Sequence

import numpy as np

N_COLORS = 6
N_SHAPES = 5


class RSAError(Exception):
    """Base class for domain errors raised by this package."""


class EmptyMessage(RSAError):
    pass


class UnknownWord(RSAError):
    pass


class InvalidContext(RSAError):
    pass


@dataclass(frozen=True)
class ObjectFeatures:
    color: int
    shape: int

    def __post_init__(self):
        if not (0 <= self.color < N_COLORS):
            raise ValueError(f"color index {self.color} out of range 0..{N_COLORS - 1}")
        if not (0 <= self.shape < N_SHAPES):
            raise ValueError(f"shape index {self.shape} out of range 0..{N_SHAPES - 1}")


@dataclass(frozen=True)
class Vocabulary:
    color_words: tuple[str, ...]
    shape_words: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "color_words", tuple(self.color_words))
        object.__setattr__(self, "shape_words", tuple(self.shape_words))
        words = self.color_words + self.shape_words
        if len(set(words)) != len(words):
            raise ValueError("word identifiers must be unique across colors and shapes")
        if not (1 <= len(self.color_words) <= N_COLORS):
            raise ValueError(f"need 1..{N_COLORS} color words")
        if not (1 <= len(self.shape_words) <= N_SHAPES):
            raise ValueError(f"need 1..{N_SHAPES} shape words")

    @property
    def n_colors(self) -> int:
        return len(self.color_words)

    @property
    def n_shapes(self) -> int:
        return len(self.shape_words)

    def color_index(self, word: str) -> int:
        try:
            return self.color_words.index(word)
        except ValueError:
            raise UnknownWord(f"unknown color word {word!r}") from None

    def shape_index(self, word: str) -> int:
        try:
            return self.shape_words.index(word)
        except ValueError:
            raise UnknownWord(f"unknown shape word {word!r}") from None

    def describe(self, obj: ObjectFeatures) -> str:
        return f"{self.color_words[obj.color]} {self.shape_words[obj.shape]}"


DEFAULT_VOCAB = Vocabulary(
    color_words=("red", "green", "blue", "yellow", "magenta", "cyan"),
    shape_words=("circle", "square", "triangle", "pentagon", "cross"),
)


@dataclass(frozen=True)
class Message:
    color_word: Optional[str] = None
    shape_word: Optional[str] = None

    def __post_init__(self):
        if self.color_word is None and self.shape_word is None:
            raise EmptyMessage("a message needs a color word, a shape word, or both")

    @property
    def length(self) -> int:
        return (self.color_word is not None) + (self.shape_word is not None)

    def __str__(self) -> str:
        return " ".join(w for w in (self.color_word, self.shape_word) if w is not None)


def make_message(color_word: Optional[str] = None, shape_word: Optional[str] = None,
                 vocab: Vocabulary = DEFAULT_VOCAB) -> Message:
    """Build a canonical message, validating both words against ``vocab``."""
    if color_word is None and shape_word is None:
        raise EmptyMessage("a message needs a color word, a shape word, or both")
    if color_word is not None:
        vocab.color_index(color_word)
    if shape_word is not None:
        vocab.shape_index(shape_word)
    return Message(color_word, shape_word)


def parse_message(text: str, vocab: Vocabulary = DEFAULT_VOCAB) -> Message:
    """Inverse of ``str(message)``; accepts either word order."""
    words = text.split()
    if not words:
        raise EmptyMessage("empty message string")
    if len(words) > 2:
        raise UnknownWord(f"messages have at most two words: {text!r}")
    color = shape = None
    for w in words:
        if w in vocab.color_words and color is None:
            color = w
        elif w in vocab.shape_words and shape is None:
            shape = w
        else:
            raise UnknownWord(f"cannot place word {w!r} in {text!r}")
    return make_message(color, shape, vocab)


def is_true(message: Message, obj: ObjectFeatures, vocab: Vocabulary = DEFAULT_VOCAB) -> bool:
    if message.color_word is not None and vocab.color_index(message.color_word) != obj.color:
        return False
    if message.shape_word is not None and vocab.shape_index(message.shape_word) != obj.shape:
        return False
    return True


def enumerate_messages(vocab: Vocabulary = DEFAULT_VOCAB) -> list[Message]:
    """All one- and two-word messages, ordered by (color index, shape index) with absent first."""
    colors = [None] + list(vocab.color_words)
    shapes = [None] + list(vocab.shape_words)
    return [Message(c, s) for c in colors for s in shapes if not (c is None and s is None)]


class MessageSpace:
    """Array view of ``enumerate_messages`` used by the vectorized code paths.

    ``color_idx``/``shape_idx`` hold -1 where the slot is absent.
    """

    def __init__(self, vocab: Vocabulary):
        self.vocab = vocab
        self.messages = tuple(enumerate_messages(vocab))
        self._lookup = {m: i for i, m in enumerate(self.messages)}
        self.color_idx = np.array(
            [-1 if m.color_word is None else vocab.color_index(m.color_word) for m in self.messages])
        self.shape_idx = np.array(
            [-1 if m.shape_word is None else vocab.shape_index(m.shape_word) for m in self.messages])
        self.lengths = np.array([m.length for m in self.messages], dtype=float)
        for arr in (self.color_idx, self.shape_idx, self.lengths):
            arr.setflags(write=False)

    def __len__(self) -> int:
        return len(self.messages)

    def index(self, message: Message) -> int:
        try:
            return self._lookup[message]
        except KeyError:
            raise UnknownWord(f"message {str(message)!r} is not in this vocabulary") from None


@lru_cache(maxsize=None)
def message_space(vocab: Vocabulary = DEFAULT_VOCAB) -> MessageSpace:
    return MessageSpace(vocab)


@dataclass(frozen=True)
class GameContext:
    """Ordered objects plus the 0-based index of the target."""
    objects: tuple[ObjectFeatures, ...]
    target: int

    def __post_init__(self):
        object.__setattr__(self, "objects", tuple(self.objects))
        if len(self.objects) < 2:
            raise InvalidContext("a context needs at least two objects")
        if not (0 <= self.target < len(self.objects)):
            raise InvalidContext(f"target index {self.target} out of range")
        tgt = self.objects[self.target]
        for i, o in enumerate(self.objects):
            if i != self.target and o == tgt:
                raise InvalidContext("a distractor duplicates the target in both color and shape")

    @property
    def n_objects(self) -> int:
        return len(self.objects)

    @property
    def target_object(self) -> ObjectFeatures:
        return self.objects[self.target]

    def colors(self) -> np.ndarray:
        return np.array([o.color for o in self.objects])

    def shapes(self) -> np.ndarray:
        return np.array([o.shape for o in self.objects])


def check_probvec(values: Sequence[float] | np.ndarray, tol: float = 1e-9) -> np.ndarray:
    """Validate a probability vector and return it as an array."""
    arr = np.asarray(values, dtype=float)
    if np.any(arr < 0) or not np.all(np.isfinite(arr)):
        raise ValueError("probability entries must be finite and nonnegative")
    if abs(arr.sum() - 1.0) > tol:
        raise ValueError(f"probabilities sum to {arr.sum()!r}, not 1")
    return arr
