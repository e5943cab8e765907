"""Metric spaces over a fixed point set, with distance-evaluation counting.

A metric space wraps one coordinate column of a dataset and exposes
distances between stored points (by id) and from free query payloads to
stored points.  Every public distance call increments the space's
evaluation counter by exactly one per point pair, including bulk calls,
so instrumentation stays comparable between the brute-force oracle and
the tree-based indexes.

The product of several spaces combines factor distances by max.
"""

from __future__ import annotations

import math
import threading
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Any, Iterable, Sequence

import numpy as np

from .errors import ConfigurationError, InputError

__all__ = [
    "EvalCounter",
    "MetricSpace",
    "AbsDiffMetric",
    "MinkowskiMetric",
    "LevenshteinMetric",
    "ProductMetric",
    "FactorStats",
    "DatasetSummary",
    "dataset_summary",
    "levenshtein",
]


class EvalCounter:
    """Distance-evaluation counter sharded per thread.

    Each thread increments its own cell, so concurrent queries never lose
    updates; reads take a lock and sum the shards.  Cells outlive their
    threads, keeping totals stable after worker pools shut down.
    """

    __slots__ = ("_lock", "_local", "_cells")

    def __init__(self) -> None:
        self._lock = threading.Lock()
        self._local = threading.local()
        self._cells: list[list[int]] = []

    def add(self, k: int) -> None:
        try:
            self._local.cell[0] += k
        except AttributeError:
            cell = [k]
            self._local.cell = cell
            with self._lock:
                self._cells.append(cell)

    @property
    def total(self) -> int:
        with self._lock:
            return sum(cell[0] for cell in self._cells)

    def reset(self) -> None:
        with self._lock:
            for cell in self._cells:
                cell[0] = 0


def _as_id_array(ids: Any, n: int) -> np.ndarray:
    out = np.asarray(ids, dtype=np.intp)
    if out.ndim != 1:
        raise InputError(f"point ids must form a 1-d sequence, got shape {out.shape}")
    if out.size and (out.min() < 0 or out.max() >= n):
        raise InputError(f"point id out of range [0, {n})")
    return out


class MetricSpace(ABC):
    """One factor metric over points 0..n-1.

    Subclasses implement the uncounted kernels ``_pairs`` and ``_point``;
    the public methods validate ids, count evaluations, and always route
    scalar calls through the same kernel as bulk calls so repeated
    distance computations are bit-identical.
    """

    def __init__(self, name: str, size: int) -> None:
        self.name = name
        self._n = int(size)
        self.counter = EvalCounter()

    def __len__(self) -> int:
        return self._n

    @property
    def evals(self) -> int:
        """Total distance evaluations performed through this space."""
        return self.counter.total

    @abstractmethod
    def _pairs(self, x: int, ids: np.ndarray) -> np.ndarray:
        """Distances from stored point x to each stored point in ids."""

    @abstractmethod
    def _point(self, q: Any, ids: np.ndarray) -> np.ndarray:
        """Distances from free payload q to each stored point in ids."""

    def _check_id(self, x: int) -> int:
        x = int(x)
        if not 0 <= x < self._n:
            raise InputError(f"point id {x} out of range [0, {self._n})")
        return x

    def dist(self, x: int, y: int) -> float:
        x = self._check_id(x)
        y = self._check_id(y)
        self.counter.add(1)
        return float(self._pairs(x, np.asarray([y], dtype=np.intp))[0])

    def dist_many(self, x: int, ids: Any) -> np.ndarray:
        x = self._check_id(x)
        ids = _as_id_array(ids, self._n)
        self.counter.add(ids.size)
        return self._pairs(x, ids)

    def dist_point(self, q: Any, y: int) -> float:
        y = self._check_id(y)
        self.counter.add(1)
        return float(self._point(q, np.asarray([y], dtype=np.intp))[0])

    def dist_point_many(self, q: Any, ids: Any) -> np.ndarray:
        ids = _as_id_array(ids, self._n)
        self.counter.add(ids.size)
        return self._point(q, ids)


class AbsDiffMetric(MetricSpace):
    """Absolute difference between scalar coordinates."""

    def __init__(self, name: str, values: Any) -> None:
        vals = np.asarray(values, dtype=np.float64)
        if vals.ndim != 1:
            raise ConfigurationError("abs1d coordinates must be scalars")
        super().__init__(name, vals.size)
        self._vals = vals

    def _pairs(self, x: int, ids: np.ndarray) -> np.ndarray:
        return np.abs(self._vals[ids] - self._vals[x])

    def _point(self, q: Any, ids: np.ndarray) -> np.ndarray:
        try:
            qv = float(q)
        except (TypeError, ValueError) as exc:
            raise InputError(f"factor {self.name!r} expects a numeric payload, got {q!r}") from exc
        return np.abs(self._vals[ids] - qv)


class MinkowskiMetric(MetricSpace):
    """L1 or L2 distance between fixed-dimension real vectors."""

    def __init__(self, name: str, vectors: Any, p: int) -> None:
        mat = np.asarray(vectors, dtype=np.float64)
        if mat.ndim != 2:
            raise ConfigurationError("vector coordinates must form an (n, dim) array")
        if p not in (1, 2):
            raise ConfigurationError(f"unsupported Minkowski order {p}")
        super().__init__(name, mat.shape[0])
        self._mat = mat
        self._p = p

    @property
    def dim(self) -> int:
        return self._mat.shape[1]

    def _reduce(self, diff: np.ndarray) -> np.ndarray:
        if self._p == 2:
            return np.sqrt((diff * diff).sum(axis=1))
        return np.abs(diff).sum(axis=1)

    def _pairs(self, x: int, ids: np.ndarray) -> np.ndarray:
        return self._reduce(self._mat[ids] - self._mat[x])

    def _point(self, q: Any, ids: np.ndarray) -> np.ndarray:
        qv = np.asarray(q, dtype=np.float64)
        if qv.shape != (self._mat.shape[1],):
            raise InputError(
                f"factor {self.name!r} expects a vector of length {self._mat.shape[1]}, got {q!r}"
            )
        return self._reduce(self._mat[ids] - qv)


def levenshtein(a: str, b: str) -> int:
    """Classic edit distance (unit-cost insert, delete, substitute)."""
    if a == b:
        return 0
    if len(a) < len(b):
        a, b = b, a
    if not b:
        return len(a)
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        cur = [i]
        for j, cb in enumerate(b, start=1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (ca != cb)))
        prev = cur
    return prev[-1]


class LevenshteinMetric(MetricSpace):
    """Edit distance between short strings."""

    def __init__(self, name: str, strings: Sequence[str]) -> None:
        for s in strings:
            if not isinstance(s, str):
                raise ConfigurationError(f"levenshtein coordinates must be strings, got {s!r}")
        super().__init__(name, len(strings))
        self._strings = list(strings)

    def _pairs(self, x: int, ids: np.ndarray) -> np.ndarray:
        sx = self._strings[x]
        return np.array([levenshtein(sx, self._strings[i]) for i in ids], dtype=np.float64)

    def _point(self, q: Any, ids: np.ndarray) -> np.ndarray:
        if not isinstance(q, str):
            raise InputError(f"factor {self.name!r} expects a string payload, got {q!r}")
        return np.array([levenshtein(q, self._strings[i]) for i in ids], dtype=np.float64)


class ProductMetric:
    """Max combination of factor metrics over a shared point set.

    Point-to-point distance is the max of factor distances, and every
    call charges one evaluation to each factor's counter.  Query payloads
    are per-factor tuples aligned with ``factors``.
    """

    def __init__(self, factors: Sequence[MetricSpace]) -> None:
        factors = list(factors)
        if not factors:
            raise ConfigurationError("a product metric needs at least one factor")
        sizes = {len(f) for f in factors}
        if len(sizes) != 1:
            raise ConfigurationError(f"factors disagree on point count: {sorted(sizes)}")
        self.factors = factors
        self.name = "max(" + ", ".join(f.name for f in factors) + ")"
        self._n = sizes.pop()

    def __len__(self) -> int:
        return self._n

    @property
    def m(self) -> int:
        return len(self.factors)

    @property
    def evals(self) -> int:
        return sum(f.evals for f in self.factors)

    def dist(self, x: int, y: int) -> float:
        return max(f.dist(x, y) for f in self.factors)

    def dist_many(self, x: int, ids: Any) -> np.ndarray:
        rows = [f.dist_many(x, ids) for f in self.factors]
        out = rows[0]
        for row in rows[1:]:
            out = np.maximum(out, row)
        return out

    def _split_payload(self, q: Any) -> Sequence[Any]:
        if not isinstance(q, (tuple, list)) or len(q) != len(self.factors):
            raise InputError(
                f"product payload must list one coordinate per factor ({len(self.factors)})"
            )
        return q

    def dist_point(self, q: Any, y: int) -> float:
        qs = self._split_payload(q)
        return max(f.dist_point(qi, y) for f, qi in zip(self.factors, qs))

    def dist_point_many(self, q: Any, ids: Any) -> np.ndarray:
        qs = self._split_payload(q)
        rows = [f.dist_point_many(qi, ids) for f, qi in zip(self.factors, qs)]
        out = rows[0]
        for row in rows[1:]:
            out = np.maximum(out, row)
        return out


# ---------------------------------------------------------------------------
# Dataset-wide distance statistics.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FactorStats:
    """Pairwise-distance extremes for one factor (or the product)."""

    diameter: float
    min_distance: float
    spread: float
    has_duplicates: bool


@dataclass(frozen=True)
class DatasetSummary:
    n: int
    per_factor: dict[str, FactorStats]
    product: FactorStats


def _stats(diameter: float, min_dist: float) -> FactorStats:
    dup = min_dist == 0.0
    spread = math.inf if dup else diameter / min_dist
    return FactorStats(diameter=diameter, min_distance=min_dist, spread=spread, has_duplicates=dup)


def dataset_summary(pm: ProductMetric, points: Iterable[int]) -> DatasetSummary:
    """Exact spread and diameter per factor and for the product.

    Runs the full all-pairs scan (n*(n-1)/2 evaluations per factor).
    Duplicate points force an infinite spread, flagged per factor.
    """
    ids = _as_id_array(list(points), len(pm))
    n = ids.size
    if n < 2:
        raise InputError("dataset summary needs n >= 2 points")
    m = pm.m
    fmax = [0.0] * m
    fmin = [math.inf] * m
    pmax, pmin = 0.0, math.inf
    for i in range(n - 1):
        rest = ids[i + 1 :]
        prod_row = None
        for j, f in enumerate(pm.factors):
            row = f.dist_many(ids[i], rest)
            fmax[j] = max(fmax[j], float(row.max()))
            fmin[j] = min(fmin[j], float(row.min()))
            prod_row = row if prod_row is None else np.maximum(prod_row, row)
        pmax = max(pmax, float(prod_row.max()))
        pmin = min(pmin, float(prod_row.min()))
    per_factor = {
        f.name: _stats(fmax[j], fmin[j]) for j, f in enumerate(pm.factors)
    }
    return DatasetSummary(n=n, per_factor=per_factor, product=_stats(pmax, pmin))
