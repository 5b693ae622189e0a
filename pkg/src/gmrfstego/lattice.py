"""Checkerboard tessellation and per-pixel cross-neighborhood trees.

Pixels split into two interleaved sets by the parity of row + column, so
every up/down/left/right neighbor of a pixel lies in the opposite set.
Holding one set fixed therefore decouples the other into independent
per-pixel problems, which is what the alternating optimizer exploits.

Each pixel is the center of a small tree joining it to its in-bounds
cross neighbors; an activation flag per clique lets weakly used edges
drop out so the pixel falls back to the independent single-pixel model.
Two representations exist: CliqueTree objects for inspection and small
cases, and stacked boolean grids (one slab per direction) that the
optimizer consumes.  Both are derived from the same rule.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# direction order is fixed everywhere: up, down, left, right
DIRECTIONS = ((-1, 0), (1, 0), (0, -1), (0, 1))
DIRECTION_NAMES = ("up", "down", "left", "right")


@dataclass(frozen=True)
class SublatticePartition:
    """Checkerboard split of an image into sets A and B."""

    height: int
    width: int
    a_mask: np.ndarray

    @property
    def b_mask(self) -> np.ndarray:
        return ~self.a_mask

    @property
    def a_indices(self) -> np.ndarray:
        return np.flatnonzero(self.a_mask.ravel())

    @property
    def b_indices(self) -> np.ndarray:
        return np.flatnonzero(~self.a_mask.ravel())


@dataclass(frozen=True)
class CliqueTree:
    """One center pixel, its existing cross neighbors, and their flags."""

    center: tuple
    neighbors: tuple
    thetas: tuple


def tessellate(width: int, height: int) -> SublatticePartition:
    """Split pixels by parity of row + column; (0, 0) lands in A."""
    if width < 2 or height < 2:
        raise ValueError("image too small to tessellate")
    rows = np.arange(height)[:, None]
    cols = np.arange(width)[None, :]
    return SublatticePartition(height, width, (rows + cols) % 2 == 0)


def neighbor_valid(shape) -> np.ndarray:
    """Boolean slab per direction marking in-bounds neighbors."""
    h, w = shape
    valid = np.ones((4, h, w), dtype=bool)
    valid[0, 0, :] = False
    valid[1, -1, :] = False
    valid[2, :, 0] = False
    valid[3, :, -1] = False
    return valid


def neighbor_values(arr: np.ndarray, direction: int,
                    fill: float = 0.0) -> np.ndarray:
    """Grid of each pixel's neighbor value along one direction.

    Out-of-bounds positions take the fill value.
    """
    di, dj = DIRECTIONS[direction]
    out = np.full(arr.shape, fill, dtype=arr.dtype)
    h, w = arr.shape
    src_i = slice(max(0, di), h + min(0, di))
    src_j = slice(max(0, dj), w + min(0, dj))
    dst_i = slice(max(0, -di), h + min(0, -di))
    dst_j = slice(max(0, -dj), w + min(0, -dj))
    out[dst_i, dst_j] = arr[src_i, src_j]
    return out


def allocate_theta_grid(beta: np.ndarray, beta_t: float) -> np.ndarray:
    """Activation slabs: a clique stays on only when both its endpoint
    change probabilities reach the threshold (and the neighbor exists)."""
    high = beta >= beta_t
    thetas = neighbor_valid(beta.shape).copy()
    for d in range(4):
        thetas[d] &= high & neighbor_values(high, d, fill=False)
    return thetas


def build_trees(partition: SublatticePartition):
    """CliqueTree per pixel, grouped as (trees_a, trees_b), row-major.

    Fresh trees have every existing clique active.
    """
    trees_a, trees_b = [], []
    h, w = partition.height, partition.width
    for i in range(h):
        for j in range(w):
            nbrs = tuple((i + di, j + dj) for di, dj in DIRECTIONS
                         if 0 <= i + di < h and 0 <= j + dj < w)
            tree = CliqueTree((i, j), nbrs, (1,) * len(nbrs))
            if partition.a_mask[i, j]:
                trees_a.append(tree)
            else:
                trees_b.append(tree)
    return trees_a, trees_b


def allocate_cliques(trees, beta: np.ndarray, beta_t: float = 0.1):
    """Re-derive activation flags from the current change probabilities."""
    out = []
    for tree in trees:
        center_on = beta[tree.center] >= beta_t
        thetas = tuple(int(center_on and beta[n] >= beta_t)
                       for n in tree.neighbors)
        out.append(CliqueTree(tree.center, tree.neighbors, thetas))
    return out
