"""Pseudo-observations and empirical copulas.

Every statistic and permutation scheme in this package operates on
normalized ranks rather than raw data.  A raw n x d sample is mapped to its
pseudo-observations (column-wise empirical-cdf values, i.e. max-ranks
scaled by 1/n), two pseudo-samples are pooled by stacking, and a pooled
matrix can be re-normalized group by group after a permutation.
"""

from __future__ import annotations

import numpy as np

from .errors import DataError, DimensionMismatchError, DomainError

__all__ = [
    "Sample",
    "PseudoSample",
    "PooledPseudo",
    "pseudo_obs",
    "empirical_copula",
    "pool",
    "rerank_groups",
]


def _as_matrix(data, *, what: str) -> np.ndarray:
    arr = np.asarray(data, dtype=float)
    if arr.ndim != 2:
        raise DataError(f"{what} must be a 2-d matrix, got shape {arr.shape}")
    if arr.shape[0] < 1:
        raise DataError(f"{what} needs at least one row")
    if arr.shape[1] < 2:
        raise DataError(f"{what} needs at least two columns, got {arr.shape[1]}")
    return arr


class Sample:
    """An n x d matrix of raw observations for one group.

    The array is copied and frozen; entries must be finite.
    """

    __slots__ = ("data",)

    def __init__(self, data):
        arr = _as_matrix(data, what="Sample")
        if not np.all(np.isfinite(arr)):
            raise DataError("Sample contains NaN or infinite entries")
        arr = arr.copy()
        arr.setflags(write=False)
        self.data = arr

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def d(self) -> int:
        return self.data.shape[1]

    def __repr__(self):
        return f"Sample(n={self.n}, d={self.d})"


class PseudoSample:
    """Normalized ranks of one group: entries in (0, 1].

    On tie-free input each column is a permutation of {1/n, ..., 1}.
    ``has_ties`` records whether any source column contained duplicates.
    """

    __slots__ = ("data", "has_ties")

    def __init__(self, data, has_ties: bool = False):
        arr = _as_matrix(data, what="PseudoSample")
        if np.any(arr <= 0.0) or np.any(arr > 1.0):
            raise DataError("pseudo-observations must lie in (0, 1]")
        arr = arr.copy()
        arr.setflags(write=False)
        self.data = arr
        self.has_ties = bool(has_ties)

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def d(self) -> int:
        return self.data.shape[1]

    def __repr__(self):
        return f"PseudoSample(n={self.n}, d={self.d}, has_ties={self.has_ties})"


class PooledPseudo:
    """Two stacked pseudo-samples; the first n rows belong to group 1."""

    __slots__ = ("data", "n", "m", "has_ties")

    def __init__(self, data, n: int, m: int, has_ties: bool = False):
        arr = _as_matrix(data, what="PooledPseudo")
        if arr.shape[0] != n + m:
            raise DataError(f"pooled matrix has {arr.shape[0]} rows, expected n+m={n + m}")
        if n < 1 or m < 1:
            raise DataError("both group sizes must be positive")
        arr = arr.copy()
        arr.setflags(write=False)
        self.data = arr
        self.n = int(n)
        self.m = int(m)
        self.has_ties = bool(has_ties)

    @property
    def N(self) -> int:
        return self.n + self.m

    @property
    def d(self) -> int:
        return self.data.shape[1]

    @property
    def lam(self) -> float:
        """Group-1 weight n/(n+m)."""
        return self.n / self.N

    def split(self) -> tuple[np.ndarray, np.ndarray]:
        return self.data[: self.n], self.data[self.n :]

    def __repr__(self):
        return f"PooledPseudo(n={self.n}, m={self.m}, d={self.d})"


def _maxrank_columns(arr: np.ndarray) -> np.ndarray:
    """Column-wise max-ranks: entry (i, q) = #{i': arr[i', q] <= arr[i, q]}.

    Vectorized over columns; ties receive the count-<= (maximum) rank.
    """
    n = arr.shape[0]
    order = np.argsort(arr, axis=0, kind="stable")
    s = np.take_along_axis(arr, order, axis=0)
    # For each sorted position, the 1-based index of the last element of its
    # equal-value run, propagated backwards through the run.
    boundary = np.empty(s.shape, dtype=bool)
    boundary[:-1] = s[1:] != s[:-1]
    boundary[-1] = True
    idx = np.where(boundary, np.arange(1, n + 1)[:, None], 0)
    run_end = np.flip(np.maximum.accumulate(np.flip(idx, axis=0), axis=0), axis=0)
    ranks = np.empty(arr.shape, dtype=np.int64)
    np.put_along_axis(ranks, order, run_end, axis=0)
    return ranks


def pseudo_obs(x: Sample | np.ndarray) -> PseudoSample:
    """Map a raw sample to its pseudo-observations.

    Entry (i, q) is the fraction of rows i' with x[i', q] <= x[i, q]
    (max-rank / n).  Invariant under strictly increasing column-wise
    transforms; ties keep the literal count-<= value and set ``has_ties``.
    """
    arr = x.data if isinstance(x, Sample) else _as_matrix(x, what="Sample")
    if not np.all(np.isfinite(arr)):
        raise DataError("cannot rank data containing NaN or infinite entries")
    n = arr.shape[0]
    ranks = _maxrank_columns(arr)
    has_ties = bool(np.any(np.sort(arr, axis=0)[:-1] == np.sort(arr, axis=0)[1:])) if n > 1 else False
    return PseudoSample(ranks / n, has_ties=has_ties)


def _ecdf_count(data: np.ndarray, points: np.ndarray) -> np.ndarray:
    """#(rows of data <= point, componentwise) for each point, by direct counting."""
    npts = points.shape[0]
    out = np.empty(npts, dtype=np.int64)
    # chunk the query points so the broadcast stays within ~16M elements
    chunk = max(1, int(16_000_000 / max(1, data.size)))
    for lo in range(0, npts, chunk):
        hi = min(lo + chunk, npts)
        hit = np.all(data[None, :, :] <= points[lo:hi, None, :], axis=2)
        out[lo:hi] = hit.sum(axis=1)
    return out


def empirical_copula(p: PseudoSample | np.ndarray, u) -> float:
    """Evaluate the empirical copula of a pseudo-sample at one point.

    Returns the fraction of pseudo-rows that are <= u componentwise.
    """
    data = p.data if isinstance(p, PseudoSample) else np.asarray(p, dtype=float)
    point = np.asarray(u, dtype=float)
    if point.shape != (data.shape[1],):
        raise DimensionMismatchError(
            f"evaluation point has shape {point.shape}, expected ({data.shape[1]},)"
        )
    if np.any(point < 0.0) or np.any(point > 1.0):
        raise DomainError("evaluation point must lie in the unit cube")
    return float(_ecdf_count(data, point[None, :])[0]) / data.shape[0]


def empirical_copula_batch(data: np.ndarray, points: np.ndarray) -> np.ndarray:
    """Empirical copula of ``data`` rows at many points (no validation)."""
    return _ecdf_count(data, points) / data.shape[0]


def pool(p1: PseudoSample, p2: PseudoSample) -> PooledPseudo:
    """Stack two pseudo-samples, group 1 first."""
    if p1.d != p2.d:
        raise DimensionMismatchError(f"cannot pool d={p1.d} with d={p2.d}")
    data = np.vstack([p1.data, p2.data])
    return PooledPseudo(data, n=p1.n, m=p2.n, has_ties=p1.has_ties or p2.has_ties)


def rerank_groups(z: PooledPseudo) -> tuple[PseudoSample, PseudoSample]:
    """Re-normalize a (typically permuted) pooled matrix within each group.

    Applies :func:`pseudo_obs` separately to rows 1..n and rows n+1..N so
    that each group's margins are again empirical-uniform.  Idempotent, and
    the identity on an unpermuted pooled matrix.
    """
    top, bottom = z.split()
    return pseudo_obs(top), pseudo_obs(bottom)


def rerank_blocks(blocks: np.ndarray) -> np.ndarray:
    """Batched re-ranking: max-ranks/n along axis 1 of a (B, n, d) array."""
    nb = blocks.shape[1]
    order = np.argsort(blocks, axis=1, kind="stable")
    s = np.take_along_axis(blocks, order, axis=1)
    boundary = np.empty(s.shape, dtype=bool)
    boundary[:, :-1, :] = s[:, 1:, :] != s[:, :-1, :]
    boundary[:, -1, :] = True
    idx = np.where(boundary, np.arange(1, nb + 1)[None, :, None], 0)
    run_end = np.flip(np.maximum.accumulate(np.flip(idx, axis=1), axis=1), axis=1)
    ranks = np.empty(blocks.shape, dtype=np.int64)
    np.put_along_axis(ranks, order, run_end, axis=1)
    return ranks / nb
