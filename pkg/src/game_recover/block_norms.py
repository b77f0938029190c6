"""Row-partitioned block matrices and the mixed norms built on them.

A row-partitioned block matrix stacks blocks ``A_1, ..., A_B`` vertically,
with block ``b`` owning ``partition[b]`` consecutive rows.  The two block
norms (max block Frobenius norm, max block entrywise absolute sum) measure
the largest block; the plain matrix norms ignore the partition.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class RowBlockMatrix:
    """A dense p x q matrix with an explicit partition of its rows into blocks.

    Parameters
    ----------
    data : ndarray, shape (p, q)
    partition : sequence of int
        Row counts per block; must be positive and sum to p.
    """

    data: np.ndarray
    partition: tuple[int, ...]
    _offsets: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        data = np.asarray(self.data, dtype=float)
        part = tuple(int(b) for b in self.partition)
        if data.ndim != 2:
            raise ValueError(f"data must be 2-D, got ndim={data.ndim}")
        if any(b < 1 for b in part):
            raise ValueError(f"partition entries must be >= 1, got {part}")
        if sum(part) != data.shape[0]:
            raise ValueError(
                f"partition sums to {sum(part)} but data has {data.shape[0]} rows"
            )
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "partition", part)
        object.__setattr__(
            self, "_offsets", np.concatenate(([0], np.cumsum(part)))
        )

    @property
    def n_blocks(self) -> int:
        return len(self.partition)

    def block(self, b: int) -> np.ndarray:
        """Rows of block b (a view into data)."""
        return self.data[self._offsets[b]:self._offsets[b + 1]]

    def blocks(self):
        """Iterate over the block views in order."""
        for b in range(self.n_blocks):
            yield self.block(b)


def uniform_partition(rows: int, block_rows: int) -> tuple[int, ...]:
    """Partition `rows` into equal blocks of `block_rows` rows each."""
    if rows % block_rows != 0:
        raise ValueError(f"{rows} rows do not split into blocks of {block_rows}")
    return (block_rows,) * (rows // block_rows)


def norm_b_inf_f(a: RowBlockMatrix) -> float:
    """Max over blocks of the block Frobenius norm."""
    if a.data.size == 0:
        return 0.0
    return max(float(np.linalg.norm(blk)) for blk in a.blocks())


def norm_b_inf_1(a: RowBlockMatrix) -> float:
    """Max over blocks of the block entrywise absolute sum."""
    if a.data.size == 0:
        return 0.0
    return max(float(np.abs(blk).sum()) for blk in a.blocks())


def norm_inf_2(a: np.ndarray) -> float:
    """Max over rows of the row l2 norm."""
    a = np.asarray(a, dtype=float)
    if a.size == 0:
        return 0.0
    return float(np.sqrt((a * a).sum(axis=1)).max())


def norm_inf_inf(a: np.ndarray) -> float:
    """Max over rows of the row l1 norm (the l-inf operator norm)."""
    a = np.asarray(a, dtype=float)
    if a.size == 0:
        return 0.0
    return float(np.abs(a).sum(axis=1).max())


def norm_spectral(a: np.ndarray) -> float:
    """Largest singular value."""
    a = np.asarray(a, dtype=float)
    if a.size == 0:
        return 0.0
    return float(np.linalg.svd(a, compute_uv=False)[0])


def norm_frobenius(a: np.ndarray) -> float:
    a = np.asarray(a, dtype=float)
    return float(np.linalg.norm(a))
