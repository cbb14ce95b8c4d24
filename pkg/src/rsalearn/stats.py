"""Two-sided Fisher exact test for 2x2 tables."""
from __future__ import annotations

import math
from dataclasses import dataclass

REL_SLACK = 1e-7


@dataclass(frozen=True)
class ContingencyTable:
    """Counts laid out as ``[[correct_a, correct_b], [incorrect_a, incorrect_b]]``."""
    correct_a: int
    correct_b: int
    incorrect_a: int
    incorrect_b: int

    def __post_init__(self):
        for v in (self.correct_a, self.correct_b, self.incorrect_a, self.incorrect_b):
            if int(v) != v or v < 0:
                raise ValueError("contingency counts must be nonnegative integers")

    @classmethod
    def from_counts(cls, correct_a: int, total_a: int, correct_b: int, total_b: int) -> "ContingencyTable":
        return cls(correct_a, correct_b, total_a - correct_a, total_b - correct_b)

    def rows(self) -> list[list[int]]:
        return [[self.correct_a, self.correct_b], [self.incorrect_a, self.incorrect_b]]


def _log_comb(n: int, k: int) -> float:
    return math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1)


def fisher_exact(table: ContingencyTable | list[list[int]]) -> float:
    """Two-sided p-value: total hypergeometric mass of tables no likelier than the observed one."""
    if not isinstance(table, ContingencyTable):
        (a, b), (c, d) = table
        table = ContingencyTable(a, b, c, d)
    a, b = table.correct_a, table.correct_b
    c, d = table.incorrect_a, table.incorrect_b
    row1, col1, n = a + b, a + c, a + b + c + d
    if n == 0 or row1 in (0, n) or col1 in (0, n):
        return 1.0
    lo, hi = max(0, row1 + col1 - n), min(row1, col1)

    def logpmf(x):
        return _log_comb(col1, x) + _log_comb(n - col1, row1 - x) - _log_comb(n, row1)

    observed = logpmf(a)
    threshold = observed + math.log1p(REL_SLACK)
    log_terms = [logpmf(x) for x in range(lo, hi + 1)]
    kept = [t for t in log_terms if t <= threshold]
    top = max(kept)
    p = math.exp(top) * math.fsum(math.exp(t - top) for t in kept)
    return min(1.0, p)


def stars(p: float) -> str:
    if p < 0.01:
        return "**"
    if p < 0.05:
        return "*"
    return ""
