"""Random tree samplers and the blow-up/contraction bijection.

Trees are stored as DFS-ordered outdegree lists (the Lukasiewicz
encoding); no pointer structures are built. Two sequence samplers feed
the cycle-lemma rotation: an exact forced-coordinate rejection sampler
for moderate n, and the one-pass big-jump sampler whose total-variation
error vanishes as n grows. Conditioning on Omega-outdegree counts goes
through the tilted tree plus per-vertex decorations blown up into
ancestry chains.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .distributions import OffspringLaw, OmegaSplit
from .streams import UniformStream

DEFAULT_DRAW_BUDGET = 10 ** 8
DEFAULT_SIZE_CAP = 10 ** 6


class BudgetExceededError(RuntimeError):
    """Exact-sampler proposal budget exhausted; use the big-jump sampler."""


class _Sentinel:
    __slots__ = ("_name",)

    def __init__(self, name: str):
        self._name = name

    def __repr__(self) -> str:
        return self._name


#: the paper's diamond outcome of the big-jump sampler
INVALID = _Sentinel("INVALID")
#: size-cap abort of unconditioned/limit-tree sampling (a value, not an error)
CAP_EXCEEDED = _Sentinel("CAP_EXCEEDED")


@dataclass(frozen=True)
class PlaneTree:
    """Rooted ordered tree as its canonical DFS outdegree list."""

    degrees: np.ndarray

    def __post_init__(self):
        d = np.ascontiguousarray(self.degrees, dtype=np.int64)
        object.__setattr__(self, "degrees", d)
        if not kernels.validate_lukasiewicz(d):
            raise ValueError("degree list violates the Lukasiewicz property")

    @property
    def size(self) -> int:
        return len(self.degrees)

    @property
    def key(self) -> tuple:
        """Hashable identity for histograms."""
        return tuple(int(x) for x in self.degrees)

    def __eq__(self, other) -> bool:
        return isinstance(other, PlaneTree) and np.array_equal(self.degrees, other.degrees)

    def __hash__(self) -> int:
        return hash(self.degrees.tobytes())


@dataclass(frozen=True)
class MarkedTree:
    tree: PlaneTree
    mark: int

    def __post_init__(self):
        if not (0 <= self.mark < self.tree.size):
            raise ValueError("mark index out of range")

    @property
    def key(self) -> tuple:
        return (self.tree.key, self.mark)


@dataclass(frozen=True)
class Decoration:
    """One ancestry-chain recipe (y, x_1..x_l) from the weighted set A_k."""

    y: int
    xs: tuple

    @property
    def total(self) -> int:
        return self.y + sum(self.xs)

    def chain_degrees(self) -> list:
        """Chain outdegrees read top-down: (x_l+1, ..., x_1+1, y)."""
        return [x + 1 for x in reversed(self.xs)] + [self.y]


def _trusted_tree(degrees: np.ndarray) -> PlaneTree:
    """Wrap a contiguous int64 degree array the samplers built themselves
    (validity guaranteed by construction; property tests cover it)."""
    t = object.__new__(PlaneTree)
    object.__setattr__(t, "degrees", degrees)
    return t


def _as_split(law_or_split) -> OmegaSplit:
    if isinstance(law_or_split, OmegaSplit):
        return law_or_split
    law = law_or_split
    split = getattr(law, "_trivial_split", None)
    if split is None:
        split = OmegaSplit(law, "all")
        law._trivial_split = split
    return split


class _DrawTables:
    """Duck adapter handing a split's sampling tables to the kernels."""

    __slots__ = ("split",)

    def __init__(self, split: OmegaSplit):
        self.split = split

    @property
    def sample_cdf(self):
        return self.split.tilted_cdf

    @property
    def sample_guide(self):
        return self.split._guide

    @property
    def accept_pmf(self):
        return self.split.tilted_vals

    @property
    def accept_M(self):
        return self.split.max_tilted_pmf

    def sample_ensure(self, u: float) -> None:
        self.split.ensure_draw_coverage(u)


class _LawTables:
    """Duck adapter for drawing from the base offspring law."""

    __slots__ = ("law",)

    def __init__(self, law: OffspringLaw):
        self.law = law

    @property
    def sample_cdf(self):
        return self.law.sampling_tables[0]

    @property
    def sample_guide(self):
        return self.law.sampling_tables[1]

    def sample_ensure(self, u: float) -> None:
        self.law.ensure_coverage(u)


def sample_offspring(law_or_split, stream: UniformStream, size: int | None = None):
    """Exact i.i.d. draws from the law (or its tilted law for a split)."""
    if isinstance(law_or_split, OmegaSplit):
        tables = _DrawTables(law_or_split)
    else:
        tables = _LawTables(law_or_split)
    n = 1 if size is None else int(size)
    u = stream.take(n)
    out = np.empty(n, dtype=np.int64)
    kernels.resolve_iid(tables, u, out)
    return int(out[0]) if size is None else out


def sample_size_biased(sb, stream: UniformStream, cap: int | None = None):
    """One draw of xi-hat; math.inf with probability 1 - E[xi]."""
    return sb.draw(stream, cap=cap)


# -- conditioned degree sequences ------------------------------------------


def exact_conditioned_sequence(law_or_split, n: int, stream: UniformStream,
                               max_draws: int = DEFAULT_DRAW_BUDGET) -> np.ndarray:
    """(xi_1..xi_n | S_n = n-1) by forced-last-coordinate rejection.

    Proposal: draw xi_1..xi_{n-1} i.i.d., set the last coordinate to the
    forced value n-1-S; accept with probability pmf(forced)/M. Accepted
    vectors carry probability proportional to the full product of pmfs on
    the target event, so the output law is exactly the conditioned one.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    split = _as_split(law_or_split)
    split.ensure_tables(n + 1)
    out, attempts, draws = kernels.exact_sequence(_DrawTables(split), n, stream, max_draws)
    if out is None:
        raise BudgetExceededError(
            f"exact sampler exceeded {max_draws} proposal draws after {attempts} attempts; "
            "use bigjump mode")
    return out


def bigjump_sequence(law_or_split, n: int, stream: UniformStream):
    """One-pass asymptotic sampler: outdegrees (n-1-S_{n-1}, xi_1..xi_{n-1}).

    Returns INVALID when the first outdegree would be negative (the
    diamond outcome); no resampling happens here. Draws beyond the cdf
    table clamp to len(cdf) > n-1: any such draw makes the outcome
    INVALID exactly as the true value would, so valid outputs are exact.
    """
    if n < 2:
        raise ValueError("bigjump mode requires n >= 2")
    split = _as_split(law_or_split)
    split.ensure_tables(n + 2)
    u = stream.take(n - 1)
    tail = np.empty(n - 1, dtype=np.int64)
    kernels.resolve_iid_clamped(split.tilted_cdf, u, tail)
    first = n - 1 - int(tail.sum())
    if first < 0:
        return INVALID
    out = np.empty(n, dtype=np.int64)
    out[0] = first
    out[1:] = tail
    return out


def rotate_to_tree(seq: np.ndarray) -> PlaneTree:
    """Cycle-lemma rotation onto the unique admissible shift.

    k0 is the first index attaining the prefix-sum minimum of (d_i - 1);
    the rotation starts right after it (at the front when k0 is last).
    The rotated list satisfies the Lukasiewicz property by the cycle
    lemma (sum -1, entries >= -1 in the x-encoding).
    """
    d = np.ascontiguousarray(seq, dtype=np.int64)
    n = len(d)
    if n == 0 or int(d.sum()) != n - 1:
        raise ValueError("sequence does not sum to -1 in the x-encoding")
    if int(d.min()) < 0:
        raise ValueError("outdegrees must be non-negative")
    walk = np.cumsum(d - 1)
    k0 = int(np.argmin(walk))
    start = 0 if k0 == n - 1 else k0 + 1
    rot = np.concatenate([d[start:], d[:start]]) if start else d
    return _trusted_tree(rot)


def sample_tree_Tn(law, n: int, stream: UniformStream, mode: str = "exact",
                   max_draws: int = DEFAULT_DRAW_BUDGET):
    """Tree with n vertices: chosen sequence sampler + rotation."""
    return sample_tree_Tn_Omega(_as_split(law), n, stream, mode=mode, max_draws=max_draws)


def sample_tree_Tn_Omega(split: OmegaSplit, n: int, stream: UniformStream,
                         mode: str = "exact", max_draws: int = DEFAULT_DRAW_BUDGET):
    """Tree with exactly n vertices of outdegree in Omega.

    Samples the tilted tree, decorates every vertex, and blows chains up.
    For the trivial split (Omega = N0) the decoration phase is skipped
    entirely, so the draw stream is consumed exactly as by the plain
    n-vertex sampler.
    """
    if mode == "exact":
        seq = exact_conditioned_sequence(split, n, stream, max_draws)
    elif mode == "bigjump":
        seq = bigjump_sequence(split, n, stream)
        if seq is INVALID:
            return INVALID
    else:
        raise ValueError(f"unknown mode {mode!r}")
    tilde = rotate_to_tree(seq)
    if split.is_trivial:
        return tilde
    split.ensure_tables(int(tilde.degrees.max()) + 1)
    blown = kernels.decorate_blowup(split, tilde.degrees, stream)
    tree = _trusted_tree(blown)
    n_omega = int(np.count_nonzero(split.omega.mask(tree.degrees)))
    if n_omega != n:
        raise AssertionError(f"blow-up violated L_Omega = n ({n_omega} != {n})")
    return tree


# -- decorations and the blow-up bijection ----------------------------------


def sample_decoration(split: OmegaSplit, k: int, stream: UniformStream) -> Decoration:
    """Draw from A_k with probability proportional to the chain weight.

    Backward DP: y with weight phi_Omega(y) r(k-y); then parts emitted
    left to right, stopping with weight 1 at remainder 0 and emitting x
    with weight phi*_x r(m-x). Implemented by the same kernel that powers
    the tree sampler; the chain segment is decoded back into (y, xs).
    """
    split.ensure_tables(int(k) + 1)
    seg = kernels.decorate_blowup(split, np.asarray([k], dtype=np.int64), stream)
    y = int(seg[-1])
    xs = tuple(int(v) - 1 for v in seg[:-1][::-1])
    return Decoration(y, xs)


def blow_up(tilde_tree: PlaneTree, decorations, split: OmegaSplit) -> PlaneTree:
    """Replace every vertex by its ancestry chain (top-down x_l+1..x_1+1, y).

    The original children fill the non-chain slots bottom-first, which in
    the DFS encoding is exactly a per-vertex segment substitution.
    """
    out: list[int] = []
    for k, dec in zip(tilde_tree.degrees, decorations, strict=True):
        if dec.total != int(k):
            raise ValueError(f"decoration sums to {dec.total}, vertex outdegree is {int(k)}")
        out.extend(dec.chain_degrees())
    tree = PlaneTree(np.asarray(out, dtype=np.int64))
    n_omega = int(np.count_nonzero(split.omega.mask(tree.degrees)))
    if n_omega != tilde_tree.size:
        raise AssertionError("blow-up must create exactly one Omega-degree per tilted vertex")
    return tree


def contract(tree: PlaneTree, split: OmegaSplit):
    """Inverse of blow_up: cut the DFS list into maximal Omega^c runs each
    closed by one Omega outdegree; every segment is one tilted vertex."""
    d = tree.degrees
    mask = split.omega.mask(d)
    ends = np.flatnonzero(mask)
    tilted = np.empty(len(ends), dtype=np.int64)
    decorations = []
    start = 0
    for t, e in enumerate(ends):
        run = d[start:e]
        y = int(d[e])
        xs = tuple(int(v) - 1 for v in run[::-1])
        decorations.append(Decoration(y, xs))
        tilted[t] = y + int(run.sum()) - len(run)
        start = e + 1
    if start != len(d):
        raise AssertionError("degree list did not end on an Omega outdegree")
    return PlaneTree(tilted), decorations


# -- unconditioned and limit trees ------------------------------------------


def sample_unconditioned(law: OffspringLaw, stream: UniformStream,
                         size_cap: int = DEFAULT_SIZE_CAP):
    """Unconditioned subcritical tree in DFS order; CAP_EXCEEDED beyond cap."""
    out = kernels.unconditioned_degrees(_LawTables(law), stream, size_cap)
    if out is None:
        return CAP_EXCEEDED
    return _trusted_tree(out)


def sample_marked_limit_tree(law: OffspringLaw, stream: UniformStream,
                             size_cap: int = DEFAULT_SIZE_CAP):
    """The local limit tree: spine of size-biased draws, marked at the
    infinite draw; non-special offspring carry independent unconditioned
    trees. Returns CAP_EXCEEDED when the assembly would exceed size_cap."""
    from .distributions import SizeBiasedLaw

    sb = getattr(law, "_size_biased", None)
    if sb is None:
        sb = SizeBiasedLaw(law)
        law._size_biased = sb
    tables = _LawTables(law)
    out: list[int] = []
    mark = -1
    pending: list[str] = ["spine"]
    while pending:
        task = pending.pop()
        if len(out) >= size_cap:
            return CAP_EXCEEDED
        if task == "tree":
            sub = kernels.unconditioned_degrees(tables, stream, size_cap - len(out))
            if sub is None:
                return CAP_EXCEEDED
            out.extend(int(v) for v in sub)
            continue
        k = sb.draw(stream, cap=size_cap)
        if k == float("inf"):
            mark = len(out)
            out.append(0)
            continue
        k = int(k)
        if k >= size_cap - len(out):
            return CAP_EXCEEDED
        u = stream.take1()
        special = int(u * k)
        if special >= k:
            special = k - 1
        out.append(k)
        # LIFO: push right siblings first so DFS order is left to right
        for _ in range(k - 1 - special):
            pending.append("tree")
        pending.append("spine")
        for _ in range(special):
            pending.append("tree")
    return MarkedTree(PlaneTree(np.asarray(out, dtype=np.int64)), mark)


# -- serialization -----------------------------------------------------------


def tree_to_line(tree) -> str:
    """One tree per line: space-separated DFS outdegrees (mark after '|')."""
    if isinstance(tree, MarkedTree):
        return tree_to_line(tree.tree) + f" | {tree.mark}"
    return " ".join(str(int(d)) for d in tree.degrees)


def tree_from_line(line: str):
    """Parse and validate a serialized tree (raises on invalid encodings)."""
    line = line.strip()
    if "|" in line:
        body, markpart = line.split("|")
        tree = PlaneTree(np.asarray([int(t) for t in body.split()], dtype=np.int64))
        return MarkedTree(tree, int(markpart))
    return PlaneTree(np.asarray([int(t) for t in line.split()], dtype=np.int64))
