"""Brute-force ground truth at small scale.

Exhaustively enumerates weighted plane trees up to a size cap, restricts
to exact conditioning events, and pushes forward through the tree
statistics. Also houses the goodness-of-fit helpers (chi-square with cell
pooling, two-sample chi-square, KS statistic) used to certify samplers.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import gammaincc

from . import treeops
from .distributions import OmegaSet
from .sampler import PlaneTree

MAX_CAP = 12  # Catalan(11) = 58786 trees of size 12


@lru_cache(maxsize=None)
def _forests(total: int, parts: int):
    """All ordered forests of `parts` trees with `total` vertices (tuples)."""
    if parts == 0:
        return ((),) if total == 0 else ()
    if total < parts:
        return ()
    out = []
    for first in range(1, total - parts + 2):
        for tree in _tree_shapes(first):
            for rest in _forests(total - first, parts - 1):
                out.append(tree + rest)
    return tuple(out)


@lru_cache(maxsize=None)
def _tree_shapes(m: int):
    """Degree sequences of all plane trees with m vertices, lexicographic."""
    if m == 1:
        return ((0,),)
    out = []
    for d in range(1, m):
        for forest in _forests(m - 1, d):
            out.append((d,) + forest)
    return tuple(sorted(out))


@dataclass(frozen=True)
class WeightedTreeTable:
    trees: tuple
    weights: np.ndarray
    cap: int

    @property
    def total_mass(self) -> float:
        return float(self.weights.sum())

    def __iter__(self):
        return iter(zip(self.trees, self.weights))


def enumerate_trees(law, cap: int) -> WeightedTreeTable:
    """All plane trees with at most cap vertices, weighted by pmf products.

    Works for any law exposing a vectorized pmf; enumeration order is by
    size, then lexicographic on the degree sequence."""
    if not 1 <= cap <= MAX_CAP:
        raise ValueError(f"cap must lie in [1, {MAX_CAP}]")
    trees = []
    weights = []
    for m in range(1, cap + 1):
        for shape in _tree_shapes(m):
            trees.append(PlaneTree(np.asarray(shape, dtype=np.int64)))
            weights.append(float(np.prod(np.asarray(law.pmf(np.asarray(shape, dtype=np.int64))))))
    return WeightedTreeTable(tuple(trees), np.asarray(weights), cap)


def exact_conditional_law(table: WeightedTreeTable, omega, n: int):
    """Restriction to {L_Omega(T) = n, |T| <= cap}, renormalized.

    Returns a list of (PlaneTree, probability)."""
    omega = OmegaSet.parse(omega)
    hits = [(t, w) for t, w in table
            if int(np.count_nonzero(omega.mask(t.degrees))) == n]
    if not hits:
        raise ValueError(f"no tree with L_Omega = {n} below the cap")
    z = sum(w for _, w in hits)
    return [(t, w / z) for t, w in hits]


_STATISTICS = {
    "delta": treeops.max_outdegree,
    "delta2": lambda t: treeops.kth_outdegree(t, 2) if t.size >= 2 else 0,
    "height": treeops.height,
    "size": lambda t: t.size,
}


def exact_statistic_law(cond_law, statistic, pattern: PlaneTree | None = None) -> dict:
    """Pushforward pmf of a conditional law through a tree statistic."""
    if statistic == "pattern":
        fn = lambda t: treeops.count_pattern(t, pattern)
    else:
        fn = _STATISTICS[statistic]
    out: dict = {}
    for tree, p in cond_law:
        v = int(fn(tree))
        out[v] = out.get(v, 0.0) + p
    return out


# -- goodness of fit ---------------------------------------------------------


@dataclass(frozen=True)
class GofResult:
    chi2: float
    dof: int
    pvalue: float


def _pool_cells(keys, expected_counts, min_expected: float):
    """Group sorted cells so each pooled expected count reaches the floor."""
    groups = []
    current = []
    acc = 0.0
    for key in keys:
        current.append(key)
        acc += expected_counts[key]
        if acc >= min_expected:
            groups.append(tuple(current))
            current = []
            acc = 0.0
    if current:
        if groups:
            groups[-1] = groups[-1] + tuple(current)
        else:
            groups.append(tuple(current))
    return groups


def goodness_of_fit(observed: dict, exact_pmf: dict, pooling: float = 5.0) -> GofResult:
    """Pearson chi-square of an integer/tuple-keyed histogram against an
    exact pmf; cells pooled (in sorted key order) to the expected floor;
    p-value from the regularized upper incomplete gamma."""
    n_total = sum(observed.values())
    if n_total < 1:
        raise ValueError("need at least one sample")
    keys = sorted(set(observed) | set(exact_pmf))
    expected = {k: exact_pmf.get(k, 0.0) * n_total for k in keys}
    groups = _pool_cells(keys, expected, pooling)
    if len(groups) <= 1:
        only = groups[0] if groups else ()
        o = sum(observed.get(k, 0) for k in only)
        return GofResult(0.0, 0, 1.0 if o == n_total else 0.0)
    chi2 = 0.0
    for g in groups:
        o = sum(observed.get(k, 0) for k in g)
        e = sum(expected[k] for k in g)
        if e <= 0.0:
            if o:
                return GofResult(float("inf"), len(groups) - 1, 0.0)
            continue
        chi2 += (o - e) ** 2 / e
    dof = len(groups) - 1
    return GofResult(float(chi2), dof, float(gammaincc(dof / 2.0, chi2 / 2.0)))


def two_sample_chi2(counts_a: dict, counts_b: dict, pooling: float = 5.0) -> GofResult:
    """Two-sample chi-square on a shared cell set, pooling (sorted order)
    until both expected counts reach the floor."""
    n_a = sum(counts_a.values())
    n_b = sum(counts_b.values())
    if n_a < 1 or n_b < 1:
        raise ValueError("both samples must be non-empty")
    keys = sorted(set(counts_a) | set(counts_b))
    pooled = {k: (counts_a.get(k, 0) + counts_b.get(k, 0)) / (n_a + n_b) for k in keys}
    floor = {k: min(n_a, n_b) * pooled[k] for k in keys}
    groups = _pool_cells(keys, floor, pooling)
    if len(groups) <= 1:
        return GofResult(0.0, 0, 1.0)
    chi2 = 0.0
    for g in groups:
        a = sum(counts_a.get(k, 0) for k in g)
        b = sum(counts_b.get(k, 0) for k in g)
        p = (a + b) / (n_a + n_b)
        for o, n in ((a, n_a), (b, n_b)):
            e = n * p
            if e > 0:
                chi2 += (o - e) ** 2 / e
    dof = len(groups) - 1
    return GofResult(float(chi2), dof, float(gammaincc(dof / 2.0, chi2 / 2.0)))


def ks_statistic(samples: np.ndarray, cdf) -> float:
    """One-sample Kolmogorov-Smirnov distance against a continuous CDF."""
    x = np.sort(np.asarray(samples, dtype=np.float64))
    n = len(x)
    if n == 0:
        raise ValueError("empty sample")
    f = np.asarray(cdf(x), dtype=np.float64)
    hi = np.max(np.arange(1, n + 1) / n - f)
    lo = np.max(f - np.arange(0, n) / n)
    return float(max(hi, lo))
