"""Seeded generation of reference-game contexts.

A constellation is one draw of the four generator distributions: the
shape prior, the color prior and the two feature-to-feature conditionals.
Targets are drawn from the priors; distractor features are drawn from
the conditionals, chained from the target through the preceding distractor.

All randomness comes from ``numpy.random.Generator`` over the Philox
counter-based bit generator, seeded through ``make_rng``/``stream``.
"""
from __future__ import annotations

import zlib
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .core import N_COLORS, N_SHAPES, GameContext, ObjectFeatures, RSAError

MAX_REJECTIONS = 1000


class RejectionOverflow(RSAError):
    """Raised when duplicate-of-target distractors keep being drawn."""


def make_rng(seed: int | np.random.SeedSequence) -> np.random.Generator:
    if not isinstance(seed, np.random.SeedSequence):
        seed = np.random.SeedSequence(int(seed))
    return np.random.Generator(np.random.Philox(seed))


def stream(seed: int, name: str) -> np.random.Generator:
    """Independent named stream derived from a run seed.

    Streams with different names never share state, so e.g. the games a
    learner sees do not depend on how many draws message selection made.
    """
    tag = zlib.crc32(name.encode("utf-8"))
    return make_rng(np.random.SeedSequence([int(seed) & 0xFFFFFFFFFFFFFFFF, tag]))


def split(rng: np.random.Generator, n: int) -> list[np.random.Generator]:
    return [np.random.Generator(bg) for bg in rng.bit_generator.spawn(n)]


@dataclass(frozen=True)
class ConcentrationConfig:
    corr: int = 0
    alpha_base: float = 1.0
    alpha_boost: float = 5.0

    def __post_init__(self):
        if self.corr not in (0, 1):
            raise ValueError("corr must be 0 or 1")
        if self.alpha_base <= 0 or self.alpha_boost <= 0:
            raise ValueError("concentration parameters must be positive")


@dataclass(frozen=True, eq=False)
class GeneratorParams:
    p_shape: np.ndarray
    p_color: np.ndarray
    p_shape_given_shape: np.ndarray
    p_color_given_color: np.ndarray

    def __post_init__(self):
        shapes = {"p_shape": (N_SHAPES,), "p_color": (N_COLORS,),
                  "p_shape_given_shape": (N_SHAPES, N_SHAPES),
                  "p_color_given_color": (N_COLORS, N_COLORS)}
        for name, shape in shapes.items():
            arr = np.array(getattr(self, name), dtype=float)
            if arr.shape != shape:
                raise ValueError(f"{name} must have shape {shape}, got {arr.shape}")
            if np.any(arr < 0) or np.any(np.abs(arr.sum(axis=-1) - 1.0) > 1e-9):
                raise ValueError(f"{name} rows must be probability vectors")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    def __eq__(self, other):
        if not isinstance(other, GeneratorParams):
            return NotImplemented
        return all(np.array_equal(getattr(self, k), getattr(other, k)) for k in self._fields())

    @staticmethod
    def _fields():
        return ("p_shape", "p_color", "p_shape_given_shape", "p_color_given_color")

    @classmethod
    def uniform(cls) -> "GeneratorParams":
        return cls(np.full(N_SHAPES, 1 / N_SHAPES), np.full(N_COLORS, 1 / N_COLORS),
                   np.full((N_SHAPES, N_SHAPES), 1 / N_SHAPES),
                   np.full((N_COLORS, N_COLORS), 1 / N_COLORS))

    def to_json(self) -> dict:
        return {k: getattr(self, k).tolist() for k in self._fields()}

    @classmethod
    def from_json(cls, data: dict) -> "GeneratorParams":
        return cls(**{k: np.asarray(data[k], dtype=float) for k in cls._fields()})


def _conditional(k: int, config: ConcentrationConfig, rng: np.random.Generator) -> np.ndarray:
    rows = []
    for i in range(k):
        alpha = np.full(k, config.alpha_base)
        if config.corr:
            # the boosted partner index is drawn from the k-1 indices other than i
            j = int(rng.integers(k - 1))
            j += j >= i
            alpha[i] = alpha[j] = config.alpha_boost
        rows.append(rng.dirichlet(alpha))
    return np.stack(rows)


def sample_generator_params(config: ConcentrationConfig, rng: np.random.Generator) -> GeneratorParams:
    p_shape = rng.dirichlet(np.full(N_SHAPES, 1.0))
    p_color = rng.dirichlet(np.full(N_COLORS, 1.0))
    ss = _conditional(N_SHAPES, config, rng)
    cc = _conditional(N_COLORS, config, rng)
    return GeneratorParams(p_shape, p_color, ss, cc)


@dataclass(frozen=True, eq=False)
class GameBatch:
    """A batch of contexts as integer arrays: colors/shapes are (B, N), target is (B,)."""
    colors: np.ndarray
    shapes: np.ndarray
    target: np.ndarray

    def __len__(self) -> int:
        return len(self.target)

    @property
    def n_objects(self) -> int:
        return self.colors.shape[1]

    def context(self, b: int) -> GameContext:
        objs = tuple(ObjectFeatures(int(c), int(s)) for c, s in zip(self.colors[b], self.shapes[b]))
        return GameContext(objs, int(self.target[b]))

    def contexts(self) -> list[GameContext]:
        return [self.context(b) for b in range(len(self))]

    def __iter__(self) -> Iterator[GameContext]:
        return iter(self.contexts())

    @classmethod
    def from_contexts(cls, contexts: list[GameContext]) -> "GameBatch":
        n = {c.n_objects for c in contexts}
        if len(n) != 1:
            raise ValueError("all contexts in a batch must have the same size")
        return cls(np.array([c.colors() for c in contexts]), np.array([c.shapes() for c in contexts]),
                   np.array([c.target for c in contexts]))

    def __eq__(self, other):
        if not isinstance(other, GameBatch):
            return NotImplemented
        return (np.array_equal(self.colors, other.colors) and np.array_equal(self.shapes, other.shapes)
                and np.array_equal(self.target, other.target))


def _draw(cdf_rows: np.ndarray, u: np.ndarray) -> np.ndarray:
    # inverse-CDF categorical draw, one row of cdf_rows per uniform
    return np.minimum((u[..., None] >= cdf_rows).sum(axis=-1), cdf_rows.shape[-1] - 1)


def sample_batch(params: GeneratorParams, n_objects: int, batch_size: int,
                 rng: np.random.Generator, conditioning: str = "chain") -> GameBatch:
    """Draw ``batch_size`` independent games with ``n_objects`` objects each.

    With ``conditioning="chain"`` the first distractor's features are drawn
    given the target's and every later distractor's given its predecessor's;
    ``"target"`` conditions every distractor on the target. A distractor equal
    to the target in both features is redrawn from the same conditional.
    """
    if n_objects < 2:
        raise ValueError("n_objects must be at least 2")
    if conditioning not in ("chain", "target"):
        raise ValueError(f"unknown conditioning {conditioning!r}")
    B, D = batch_size, n_objects - 1
    t_color = _draw(np.cumsum(params.p_color), rng.random(B))
    t_shape = _draw(np.cumsum(params.p_shape), rng.random(B))
    cdf_cc = np.cumsum(params.p_color_given_color, axis=1)
    cdf_ss = np.cumsum(params.p_shape_given_shape, axis=1)

    d_color = np.empty((B, D), dtype=np.int64)
    d_shape = np.empty((B, D), dtype=np.int64)
    prev_c, prev_s = t_color, t_shape
    for k in range(D):
        rows_c, rows_s = cdf_cc[prev_c], cdf_ss[prev_s]
        c = _draw(rows_c, rng.random(B))
        s = _draw(rows_s, rng.random(B))
        bad = (c == t_color) & (s == t_shape)
        attempts = 0
        while bad.any():
            attempts += 1
            if attempts > MAX_REJECTIONS:
                raise RejectionOverflow(
                    f"{MAX_REJECTIONS} consecutive resamples produced target duplicates; "
                    "generator parameters are degenerate")
            bi = np.nonzero(bad)[0]
            c[bi] = _draw(rows_c[bi], rng.random(len(bi)))
            s[bi] = _draw(rows_s[bi], rng.random(len(bi)))
            bad = (c == t_color) & (s == t_shape)
        d_color[:, k], d_shape[:, k] = c, s
        if conditioning == "chain":
            prev_c, prev_s = c, s

    target = rng.integers(n_objects, size=B)
    # distractors keep their draw order around the uniformly placed target
    pos = np.arange(n_objects)[None, :]
    is_t = pos == target[:, None]
    slot = np.clip(pos - (pos > target[:, None]), 0, D - 1)
    colors = np.where(is_t, t_color[:, None], np.take_along_axis(d_color, slot, axis=1))
    shapes = np.where(is_t, t_shape[:, None], np.take_along_axis(d_shape, slot, axis=1))
    return GameBatch(colors.astype(np.int64), shapes.astype(np.int64), target.astype(np.int64))


def sample_game(params: GeneratorParams, n_objects: int, rng: np.random.Generator) -> GameContext:
    return sample_batch(params, n_objects, 1, rng).context(0)


def sample_eval_suite(config: ConcentrationConfig, constellations: int = 10, games_per: int = 3200,
                      n_objects: int = 5, rng: np.random.Generator | None = None
                      ) -> list[tuple[GeneratorParams, GameBatch]]:
    """Sample ``constellations`` generator parameter sets with ``games_per`` games each."""
    if constellations < 1 or games_per < 1:
        raise ValueError("constellation and game counts must be at least 1")
    if rng is None:
        rng = make_rng(0)
    suite = []
    for _ in range(constellations):
        params = sample_generator_params(config, rng)
        suite.append((params, sample_batch(params, n_objects, games_per, rng)))
    return suite


def suite_to_json(suite: list[tuple[GeneratorParams, GameBatch]]) -> dict:
    return {
        "format": "rsalearn-suite",
        "version": 1,
        "constellations": [
            {"params": params.to_json(),
             "games": {"colors": games.colors.tolist(), "shapes": games.shapes.tolist(),
                       "target": games.target.tolist()}}
            for params, games in suite
        ],
    }


def suite_from_json(data: dict) -> list[tuple[GeneratorParams, GameBatch]]:
    if data.get("format") != "rsalearn-suite" or data.get("version") != 1:
        raise ValueError("not a version-1 rsalearn suite document")
    out = []
    for entry in data["constellations"]:
        g = entry["games"]
        out.append((GeneratorParams.from_json(entry["params"]),
                    GameBatch(np.asarray(g["colors"], dtype=np.int64), np.asarray(g["shapes"], dtype=np.int64),
                              np.asarray(g["target"], dtype=np.int64))))
    return out
