"""Deterministic statistics on plane trees.

Everything is a single pass over the DFS outdegree encoding: extremal
degrees, height, the fringe decomposition at the (DFS-first) max-degree
vertex, fringe-pattern counting, and the segment decomposition behind the
independence theorem for the rotated outdegree list.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .distributions import OmegaSplit
from .sampler import MarkedTree, PlaneTree


def max_outdegree(tree: PlaneTree) -> int:
    return int(tree.degrees.max())


def kth_outdegree(tree: PlaneTree, i: int) -> int:
    """i-th largest outdegree (i = 1 is the maximum)."""
    if not 1 <= i <= tree.size:
        raise ValueError(f"order statistic index {i} out of range")
    return int(np.partition(tree.degrees, tree.size - i)[tree.size - i])


def height(tree: PlaneTree) -> int:
    """Maximal root-to-vertex edge distance."""
    return kernels.tree_height(tree.degrees)


def depth_of_vertex(tree: PlaneTree, idx: int) -> int:
    """Edge distance from the root to the DFS vertex at position idx."""
    if not 0 <= idx < tree.size:
        raise ValueError("vertex index out of range")
    stack: list[int] = []
    for i, d in enumerate(tree.degrees):
        if i == idx:
            return len(stack)
        if d > 0:
            stack.append(int(d))
        else:
            while stack and stack[-1] == 1:
                stack.pop()
            if stack:
                stack[-1] -= 1
    raise AssertionError("unreachable")


@dataclass(frozen=True)
class FringeDecomposition:
    """Tree split at the DFS-first max-degree vertex.

    ``f0`` is the tree with that vertex's descendants removed and the
    vertex marked; the fringes F_1..F_Delta are stored as one concatenated
    degree array plus boundary offsets (no per-fringe objects are
    materialized for large trees).
    """

    f0: MarkedTree
    fringe_degrees: np.ndarray
    offsets: np.ndarray  # length Delta+1; fringe i spans offsets[i-1]:offsets[i]

    @property
    def n_fringes(self) -> int:
        return len(self.offsets) - 1

    @property
    def sizes(self) -> np.ndarray:
        return np.diff(self.offsets)

    def fringe(self, i: int) -> PlaneTree:
        """F_i for 1 <= i <= Delta, left to right."""
        if not 1 <= i <= self.n_fringes:
            raise ValueError("fringe index out of range")
        return PlaneTree(self.fringe_degrees[self.offsets[i - 1]:self.offsets[i]])

    def fringes(self):
        for i in range(1, self.n_fringes + 1):
            yield self.fringe(i)

    def reassemble(self) -> PlaneTree:
        """Inverse operation; reproduces the original tree exactly."""
        f0d = self.f0.tree.degrees
        m = self.f0.mark
        parts = [f0d[:m], np.asarray([self.n_fringes], dtype=np.int64),
                 self.fringe_degrees, f0d[m + 1:]]
        return PlaneTree(np.concatenate(parts))


def fringe_bounds(degrees: np.ndarray):
    """(j0, subtree_end, fringe end positions) at the DFS-first max vertex.

    Fringe m ends at the first passage of level W_{j0} - m after j0; with
    unit down-steps those passages are exactly the strict running-minimum
    records of the walk.
    """
    j0 = int(np.argmax(degrees))
    delta = int(degrees[j0])
    if delta == 0:
        return j0, j0, np.asarray([], dtype=np.int64)
    walk = np.cumsum(degrees - 1.0).astype(np.int64)
    seg = walk[j0 + 1:]
    cm = np.minimum(np.minimum.accumulate(seg), walk[j0])
    rec = np.flatnonzero(np.diff(np.concatenate([[walk[j0]], cm])) < 0)
    ends = j0 + 1 + rec[:delta]
    return j0, int(ends[-1]), ends


def fringe_decomposition(tree: PlaneTree) -> FringeDecomposition:
    d = tree.degrees
    j0, end, ends = fringe_bounds(d)
    f0_degrees = np.concatenate([d[:j0], np.asarray([0], dtype=np.int64), d[end + 1:]])
    f0 = MarkedTree(PlaneTree(f0_degrees), j0)
    fringe_degrees = d[j0 + 1:end + 1].copy()
    offsets = np.concatenate([[0], ends - j0]).astype(np.int64)
    return FringeDecomposition(f0, fringe_degrees, offsets)


def fringe_sizes(tree: PlaneTree) -> np.ndarray:
    """Sizes |F_1|..|F_Delta| without building the decomposition object."""
    j0, _, ends = fringe_bounds(tree.degrees)
    if len(ends) == 0:
        return np.asarray([], dtype=np.int64)
    return np.diff(np.concatenate([[j0], ends])).astype(np.int64)


def count_pattern(tree: PlaneTree, pattern: PlaneTree) -> int:
    """Number of fringe copies of ``pattern``: occurrences of its outdegree
    list as a substring of the cyclically extended list of the tree.
    Matches of a tree encoding can never overlap."""
    d = tree.degrees
    p = pattern.degrees
    n, m = len(d), len(p)
    if m > n:
        return 0
    dd = np.concatenate([d, d[:m - 1]]) if m > 1 else d
    mask = np.ones(n, dtype=bool)
    for j in range(m):
        mask &= dd[j:j + n] == p[j]
    return int(np.count_nonzero(mask))


@dataclass(frozen=True)
class SegmentDecomposition:
    """D-blocks of the outdegree list rotated to start after the max-degree
    vertex: each block is a run of Omega^c outdegrees closed by one Omega
    outdegree; the trailing partial run has no closing Omega degree."""

    run_lengths: np.ndarray
    omega_degrees: np.ndarray
    omega_c_degrees: np.ndarray
    tail: np.ndarray
    giant_degree: int

    @property
    def n_blocks(self) -> int:
        return len(self.omega_degrees)

    def reassembled(self) -> np.ndarray:
        """Rotated list with the giant degree restored at the front."""
        out = [np.asarray([self.giant_degree], dtype=np.int64)]
        pos = 0
        for run, y in zip(self.run_lengths, self.omega_degrees):
            out.append(self.omega_c_degrees[pos:pos + run])
            out.append(np.asarray([y], dtype=np.int64))
            pos += run
        out.append(self.tail)
        return np.concatenate(out)


def segment_decomposition(tree: PlaneTree, split: OmegaSplit) -> SegmentDecomposition:
    d = tree.degrees
    j0 = int(np.argmax(d))
    rot = np.concatenate([d[j0 + 1:], d[:j0]])
    mask = split.omega.mask(rot)
    ends = np.flatnonzero(mask)
    if len(ends):
        run_lengths = np.diff(np.concatenate([[-1], ends])) - 1
        tail = rot[ends[-1] + 1:]
        in_runs = np.ones(len(rot), dtype=bool)
        in_runs[ends] = False
        in_runs[ends[-1] + 1:] = False
        omega_c = rot[in_runs]
    else:
        run_lengths = np.asarray([], dtype=np.int64)
        tail = rot
        omega_c = np.asarray([], dtype=np.int64)
    return SegmentDecomposition(run_lengths.astype(np.int64), rot[ends],
                                omega_c, tail, int(d[j0]))


def lukasiewicz_partial_sums(decomp: FringeDecomposition, gridpoints) -> np.ndarray:
    """Sum of |F_i| for i <= floor(Delta*t), per requested t in [0, 1]."""
    csizes = np.concatenate([[0], np.cumsum(decomp.sizes)])
    delta = decomp.n_fringes
    idx = np.floor(delta * np.asarray(gridpoints, dtype=np.float64)).astype(np.int64)
    return csizes[np.clip(idx, 0, delta)]
