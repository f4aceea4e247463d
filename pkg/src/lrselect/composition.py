"""Compositional tables, pairwise logratios and their graph structure.

A composition is a row of strictly positive parts where only ratios carry
information. The pairwise logratio log(x_num / x_den) is the basic predictor
unit here; sets of such terms are viewed as graphs on the parts (edge =
term), which is what makes redundancy detectable as an undirected cycle.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import DataValidationError

DEFAULT_ZERO_FRACTION = 0.65

__all__ = [
    "CompositionTable",
    "LogratioTerm",
    "LogContrast",
    "TermGraph",
    "UnionFind",
    "close",
    "replace_zeros",
    "lr_values",
    "lr_matrix",
    "alr_terms",
    "term_to_logcontrast",
    "overlaps",
    "creates_cycle",
]


@dataclass(frozen=True)
class LogratioTerm:
    """Ordered pair of part indices identifying log(x_num / x_den)."""

    num: int
    den: int

    def __post_init__(self):
        if self.num == self.den:
            raise DataValidationError(f"logratio term needs two distinct parts, got ({self.num}, {self.den})")
        if self.num < 0 or self.den < 0:
            raise DataValidationError(f"part indices must be nonnegative, got ({self.num}, {self.den})")

    @property
    def parts(self) -> frozenset[int]:
        return frozenset((self.num, self.den))

    def flipped(self) -> "LogratioTerm":
        return LogratioTerm(self.den, self.num)

    def label(self, parts: Sequence[str]) -> str:
        return f"{parts[self.num]}/{parts[self.den]}"

    def unordered(self) -> tuple[int, int]:
        return (min(self.num, self.den), max(self.num, self.den))


@dataclass(frozen=True)
class CompositionTable:
    """n samples by J strictly positive parts, with stable part order.

    Immutable after construction; the sample matrix is copied and write
    protected so tables can be shared across threads.
    """

    parts: tuple[str, ...]
    samples: np.ndarray
    sample_ids: tuple[str, ...]

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 2:
            raise DataValidationError(f"sample matrix must be 2-D, got shape {samples.shape}")
        n, j = samples.shape
        object.__setattr__(self, "parts", tuple(str(p) for p in self.parts))
        object.__setattr__(self, "sample_ids", tuple(str(s) for s in self.sample_ids))
        if j != len(self.parts):
            raise DataValidationError(f"{len(self.parts)} part names for {j} columns")
        if n != len(self.sample_ids):
            raise DataValidationError(f"{len(self.sample_ids)} sample ids for {n} rows")
        if j < 2:
            raise DataValidationError("a composition needs at least 2 parts")
        if n < 1:
            raise DataValidationError("a composition needs at least 1 sample")
        if any(not p for p in self.parts):
            raise DataValidationError("part names must be nonempty")
        if len(set(self.parts)) != j:
            dupes = sorted({p for p in self.parts if self.parts.count(p) > 1})
            raise DataValidationError(f"duplicate part names: {', '.join(dupes)}")
        bad = np.argwhere(~(samples > 0.0))
        if bad.size:
            i, k = bad[0]
            raise DataValidationError(
                f"nonpositive abundance {samples[i, k]!r} at sample {self.sample_ids[i]!r}, part {self.parts[k]!r}"
            )
        if not np.all(np.isfinite(samples)):
            raise DataValidationError("abundances must be finite")
        samples = samples.copy()
        samples.flags.writeable = False
        object.__setattr__(self, "samples", samples)

    @property
    def n(self) -> int:
        return self.samples.shape[0]

    @property
    def j(self) -> int:
        return self.samples.shape[1]

    def part_index(self, name: str) -> int:
        try:
            return self.parts.index(name)
        except ValueError:
            raise DataValidationError(f"unknown part name {name!r}") from None

    def term_from_label(self, label: str) -> LogratioTerm:
        """Parse a 'Num/Den' string against this table's part names."""
        if label.count("/") != 1:
            raise DataValidationError(f"ratio label must be 'Num/Den', got {label!r}")
        num, den = label.split("/")
        return LogratioTerm(self.part_index(num.strip()), self.part_index(den.strip()))


@dataclass(frozen=True)
class LogContrast:
    """Length-J coefficient vector over log-parts, constrained to sum to zero."""

    coeffs: np.ndarray

    def __post_init__(self):
        coeffs = np.asarray(self.coeffs, dtype=np.float64)
        total = float(coeffs.sum())
        if abs(total) > 1e-10:
            raise DataValidationError(f"log-contrast coefficients must sum to 0, got {total}")
        coeffs = coeffs.copy()
        coeffs.flags.writeable = False
        object.__setattr__(self, "coeffs", coeffs)


class UnionFind:
    """Disjoint sets over part indices 0..j-1, with path compression."""

    def __init__(self, j: int):
        self._parent = list(range(j))
        self._rank = [0] * j

    def find(self, a: int) -> int:
        root = a
        while self._parent[root] != root:
            root = self._parent[root]
        while self._parent[a] != root:
            self._parent[a], a = root, self._parent[a]
        return root

    def union(self, a: int, b: int) -> bool:
        """Merge the sets of a and b; False if they were already joined."""
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        if self._rank[ra] < self._rank[rb]:
            ra, rb = rb, ra
        self._parent[rb] = ra
        if self._rank[ra] == self._rank[rb]:
            self._rank[ra] += 1
        return True


@dataclass(frozen=True)
class TermGraph:
    """Term set viewed as a directed graph: edge denominator -> numerator."""

    vertices: tuple[int, ...]
    edges: tuple[LogratioTerm, ...]

    @classmethod
    def from_terms(cls, terms: Iterable[LogratioTerm]) -> "TermGraph":
        terms = tuple(terms)
        verts = sorted({p for t in terms for p in (t.num, t.den)})
        return cls(vertices=tuple(verts), edges=terms)

    def is_acyclic(self) -> bool:
        """True iff the underlying undirected graph has no cycle (non-redundant set)."""
        if not self.edges:
            return True
        uf = UnionFind(max(self.vertices) + 1)
        return all(uf.union(t.num, t.den) for t in self.edges)

    def is_connected(self) -> bool:
        if len(self.vertices) <= 1:
            return True
        uf = UnionFind(max(self.vertices) + 1)
        for t in self.edges:
            uf.union(t.num, t.den)
        roots = {uf.find(v) for v in self.vertices}
        return len(roots) == 1


def close(table: CompositionTable) -> CompositionTable:
    """Normalize each row to sum to 1. Logratio values are unaffected."""
    totals = table.samples.sum(axis=1, keepdims=True)
    return CompositionTable(table.parts, table.samples / totals, table.sample_ids)


def replace_zeros(
    raw: np.ndarray,
    fraction: float = DEFAULT_ZERO_FRACTION,
    parts: Sequence[str] | None = None,
    sample_ids: Sequence[str] | None = None,
) -> CompositionTable:
    """Multiplicative zero replacement.

    Each zero in column j becomes fraction * (smallest positive value in
    column j); the positive entries of the affected row are shrunk by a
    common factor so the row total is preserved.
    """
    raw = np.asarray(raw, dtype=np.float64)
    if raw.ndim != 2:
        raise DataValidationError(f"expected a 2-D matrix, got shape {raw.shape}")
    n, j = raw.shape
    if not 0.0 < fraction < 1.0:
        raise DataValidationError(f"replacement fraction must lie in (0, 1), got {fraction}")
    parts = tuple(parts) if parts is not None else tuple(f"part{k + 1}" for k in range(j))
    sample_ids = tuple(sample_ids) if sample_ids is not None else tuple(f"sample{i + 1}" for i in range(n))
    neg = np.argwhere(raw < 0)
    if neg.size:
        i, k = neg[0]
        raise DataValidationError(f"negative abundance at sample {sample_ids[i]!r}, part {parts[k]!r}")

    if not (raw == 0).any():
        return CompositionTable(parts, raw, sample_ids)

    col_has_pos = (raw > 0).any(axis=0)
    if not col_has_pos.all():
        k = int(np.argmin(col_has_pos))
        raise DataValidationError(f"part {parts[k]!r} is zero in every sample; no detection limit to impute from")
    row_totals = raw.sum(axis=1)
    if not (row_totals > 0).all():
        i = int(np.argmin(row_totals > 0))
        raise DataValidationError(f"sample {sample_ids[i]!r} is all zeros")

    col_min_pos = np.where(raw > 0, raw, np.inf).min(axis=0)
    delta = fraction * col_min_pos
    zero_mask = raw == 0
    imputed_per_row = (zero_mask * delta).sum(axis=1)
    shrink = 1.0 - imputed_per_row / row_totals
    if not (shrink > 0).all():
        i = int(np.argmin(shrink > 0))
        raise DataValidationError(
            f"imputed mass exceeds the row total for sample {sample_ids[i]!r}; lower the replacement fraction"
        )
    out = np.where(zero_mask, delta, raw * shrink[:, None])
    return CompositionTable(parts, out, sample_ids)


def lr_values(table: CompositionTable, term: LogratioTerm) -> np.ndarray:
    """Per-sample log(x_num) - log(x_den)."""
    j = table.j
    if term.num >= j or term.den >= j:
        raise DataValidationError(f"term ({term.num}, {term.den}) out of range for {j} parts")
    logs = np.log(table.samples)
    return logs[:, term.num] - logs[:, term.den]


def lr_matrix(table: CompositionTable, terms: Sequence[LogratioTerm]) -> np.ndarray:
    """Column-stacked logratio values, one column per term (n x len(terms))."""
    if not terms:
        return np.empty((table.n, 0))
    return np.column_stack([lr_values(table, t) for t in terms])


def alr_terms(j: int, den: int) -> list[LogratioTerm]:
    """The J-1 additive-logratio terms with a common denominator part."""
    if not 0 <= den < j:
        raise DataValidationError(f"denominator index {den} out of range for {j} parts")
    return [LogratioTerm(k, den) for k in range(j) if k != den]


def term_to_logcontrast(term: LogratioTerm, j: int) -> LogContrast:
    """Coefficient vector with +1 on the numerator and -1 on the denominator."""
    coeffs = np.zeros(j)
    coeffs[term.num] = 1.0
    coeffs[term.den] = -1.0
    return LogContrast(coeffs)


def overlaps(a: LogratioTerm, b: LogratioTerm) -> bool:
    """True iff the two terms share a part (their contrast vectors are non-orthogonal)."""
    return bool(a.parts & b.parts)


def creates_cycle(selected: Sequence[LogratioTerm], candidate: LogratioTerm) -> bool:
    """True iff adding candidate closes an undirected cycle over the parts.

    Equivalent to the candidate's log-contrast vector being linearly
    dependent on those of the selected terms.
    """
    highest = max([candidate.num, candidate.den] + [p for t in selected for p in (t.num, t.den)])
    uf = UnionFind(highest + 1)
    for t in selected:
        if not uf.union(t.num, t.den):
            raise DataValidationError(f"selected terms already contain a cycle at ({t.num}, {t.den})")
    return uf.find(candidate.num) == uf.find(candidate.den)
