"""Exact machinery for the hierarchical pinning recursion.

The partition value of generation n is driven by a binary-tree branching
process: each present node has two children with probability 1/B, none
otherwise.  Surviving leaves carry the disorder rewards, and products of
leaf indicators have the closed form B^(-v) where v counts the internal
nodes of the union of root-to-leaf paths.  Everything here is either an
exact sum over that tree structure or a log-stable evaluation of the
recursion itself.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import InvalidParameter

B_CRITICAL = math.sqrt(2.0)


@dataclass(frozen=True)
class HierParams:
    B: float
    beta: float
    h: float

    def __post_init__(self):
        if not 1.0 < self.B < 2.0:
            raise InvalidParameter(f"B must lie in (1, 2), got {self.B}")
        if self.beta < 0.0:
            raise InvalidParameter("disorder strength must be nonnegative")


@dataclass(frozen=True)
class LeafSet:
    """Surviving leaves of one branching realization, indices in 1..2^n."""

    n: int
    alive: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.alive, dtype=np.int64)
        a = np.unique(a)
        if a.size and (a[0] < 1 or a[-1] > 2**self.n):
            raise InvalidParameter("leaf indices out of range")
        a.setflags(write=False)
        object.__setattr__(self, "alive", a)

    @property
    def size(self) -> int:
        return int(self.alive.size)


@dataclass(frozen=True)
class TreeIndexSet:
    """A nonempty set of leaves of the depth-n binary tree."""

    n: int
    leaves: tuple[int, ...]

    def __post_init__(self):
        ls = tuple(sorted(set(int(i) for i in self.leaves)))
        if len(ls) != len(self.leaves):
            raise InvalidParameter("duplicate leaves")
        if not ls:
            raise InvalidParameter("empty index set")
        if ls[0] < 1 or ls[-1] > 2**self.n:
            raise InvalidParameter("leaf indices out of range")
        object.__setattr__(self, "leaves", ls)


def annealed_map_step(x: float, B: float) -> float:
    """One step of the disorder-averaged recursion x -> (x^2 + B - 1)/B."""
    if x < 0.0:
        raise InvalidParameter("the recursion acts on nonnegative values")
    return (x * x + (B - 1.0)) / B


def alpha_of_B(B: float) -> float:
    if not 1.0 < B < 2.0:
        raise InvalidParameter(f"B must lie in (1, 2), got {B}")
    return math.log(2.0 / B) / math.log(2.0)


def annealed_iterate(x0: float, n: int, B: float) -> float:
    x = x0
    for _ in range(n):
        x = annealed_map_step(x, B)
    return x


def annealed_envelope(n: int, B: float) -> float:
    """n-fold iterate started from 0; climbs monotonically toward B - 1."""
    if n < 0:
        raise InvalidParameter("generation count must be nonnegative")
    return annealed_iterate(0.0, n, B)


def envelope_generation(B: float, tol: float) -> int:
    """First generation at which (B-1) minus the envelope drops below tol."""
    x, n = 0.0, 0
    while (B - 1.0) - x > tol:
        x = annealed_map_step(x, B)
        n += 1
        if n > 10_000:
            raise InvalidParameter("envelope did not reach the tolerance")
    return n


def _combine_pair(s: np.ndarray | float, logB: float, logC: float):
    """log((e^s + C)/B) without overflow; s may be hugely positive or negative."""
    m = np.maximum(s, logC)
    return m + np.log1p(np.exp(-np.abs(s - logC))) - logB


def annealed_log_iterate(log_x0: float, n: int, B: float) -> float:
    logB, logC = math.log(B), math.log(B - 1.0)
    L = log_x0
    for _ in range(n):
        L = float(_combine_pair(2.0 * L, logB, logC))
    return L


def annealed_free_energy(B: float, h: float, rel_tol: float = 1e-12,
                         max_gen: int = 400) -> float:
    """Growth rate 2^-n log(iterate from e^h); 0 for h <= 0."""
    if h <= 0.0:
        return 0.0
    logB, logC = math.log(B), math.log(B - 1.0)
    L = h
    prev = h
    for n in range(1, max_gen + 1):
        L = float(_combine_pair(2.0 * L, logB, logC))
        cur = L / 2.0**n
        if n > 8 and abs(cur - prev) <= rel_tol * max(abs(cur), 1e-300):
            return cur
        prev = cur
    return prev


def join_level(i: int, j: int) -> int:
    """Tree level at which the root paths of leaves i != j merge."""
    return (int(i) - 1 ^ int(j) - 1).bit_length()


def subtree_node_count(idx: TreeIndexSet) -> int:
    """Internal nodes (levels 1..n, root included, leaves not) in the union
    of root-to-leaf paths."""
    total = 0
    leaves = np.asarray(idx.leaves, dtype=np.int64) - 1
    for level in range(1, idx.n + 1):
        total += np.unique(leaves >> level).size
    return total


def gw_product_expectation(idx: TreeIndexSet, B: float) -> float:
    """Mean of the product of leaf-survival indicators over the set."""
    return float(B) ** -subtree_node_count(idx)


def pair_overlap_sum(n: int, B: float) -> float:
    """Sum over ordered leaf pairs of the squared two-point function.

    Closed form by join level: 2^n * sum_a 2^(a-1) B^(-2(n+a-1)).
    Equals n exactly at the critical point B = sqrt(2).
    """
    if n < 1:
        raise InvalidParameter("need n >= 1")
    a = np.arange(1, n + 1, dtype=float)
    val = 2.0**n * np.sum(2.0 ** (a - 1) * float(B) ** (-2.0 * (n + a - 1)))
    return float(val) * _overlap_scale()


# mutation hook for the acceptance negative control; leave at 1.0
_OVERLAP_MUTATION = 1.0


def _overlap_scale() -> float:
    return _OVERLAP_MUTATION


def sample_leafset_batch(n: int, B: float, rng: np.random.Generator,
                         size: int) -> np.ndarray:
    """Boolean matrix (size, 2^n): which leaves survive, per realization."""
    alive = np.ones((size, 1), dtype=bool)
    p = 1.0 / B
    for _ in range(n):
        branch = alive & (rng.random(alive.shape) < p)
        alive = np.repeat(branch, 2, axis=1)
    return alive


def sample_leafset(n: int, B: float, rng: np.random.Generator) -> LeafSet:
    row = sample_leafset_batch(n, B, rng, 1)[0]
    return LeafSet(n=n, alive=np.flatnonzero(row) + 1)


def _gw_cascade_sparse(n: int, B: float, rng: np.random.Generator,
                       size: int) -> tuple[np.ndarray, np.ndarray]:
    """Alive leaves of `size` branching realizations as (sample, leaf) pairs.

    Only alive nodes are tracked, so the cost per realization is the
    number of alive nodes (~2^(n/2) at critical B) instead of 2^n.
    Rows come out sorted by (sample, leaf).
    """
    sid = np.arange(size, dtype=np.int64)
    nid = np.zeros(size, dtype=np.int64)
    p = 1.0 / B
    for _ in range(n):
        keep = rng.random(sid.size) < p
        sid = np.repeat(sid[keep], 2)
        nid = np.repeat(nid[keep] << 1, 2)
        nid[1::2] |= 1
    return sid, nid


def gw_overlap_samples(n: int, B: float, rng: np.random.Generator,
                       size: int) -> tuple[np.ndarray, np.ndarray]:
    """(overlap statistic, alive count) over `size` realizations.

    The overlap statistic is assembled scale by scale from squared dyadic
    block counts; sibling blocks are adjacent in the sorted sparse
    representation, so each merge is a vectorized pairwise reduction.
    Agrees with y_statistic exactly.
    """
    sid, blk = _gw_cascade_sparse(n, B, rng, size)
    counts = np.bincount(sid, minlength=size).astype(float)
    y = np.zeros(size)
    prev_sq = counts.copy()
    c = np.ones(sid.size)
    for a in range(1, n + 1):
        parent = blk >> 1
        if sid.size:
            same = (sid[1:] == sid[:-1]) & (parent[1:] == parent[:-1])
            first = np.flatnonzero(same)  # never adjacent: a parent has <= 2 children
            c[first] += c[first + 1]
            keep = np.ones(sid.size, dtype=bool)
            keep[first + 1] = False
            sid, blk, c = sid[keep], parent[keep], c[keep]
        sq = np.zeros(size)
        np.add.at(sq, sid, c * c)
        y += float(B) ** -(n + a - 1.0) * (sq - prev_sq)
        prev_sq = sq
    return y / n, counts


def hier_log_partition_batch(params: HierParams, n: int,
                             omega: np.ndarray) -> np.ndarray:
    """log of the generation-n partition value for each disorder row.

    omega has shape (..., 2^n); the recursion is evaluated entirely in the
    log domain, so doubly-exponential growth in the localized phase cannot
    overflow.
    """
    om = np.asarray(omega, dtype=float)
    if om.shape[-1] != 2**n:
        raise InvalidParameter(f"disorder must have 2^{n} = {2**n} entries per row")
    logB, logC = math.log(params.B), math.log(params.B - 1.0)
    L = params.beta * om - 0.5 * params.beta**2 + params.h
    for _ in range(n):
        L = _combine_pair(L[..., 0::2] + L[..., 1::2], logB, logC)
    return L[..., 0]


def hier_log_partition(params: HierParams, n: int, omega: np.ndarray) -> float:
    return float(hier_log_partition_batch(params, n, np.asarray(omega, dtype=float)))


def y_statistic(ls: LeafSet, B: float) -> float:
    """Overlap statistic of one leaf set: pair sum of two-point functions over n.

    O(p^2) over the p surviving leaves, join levels from index arithmetic.
    """
    if ls.n < 1:
        raise InvalidParameter("need generation >= 1")
    if ls.size < 2:
        return 0.0
    idx = ls.alive - 1
    x = np.bitwise_xor.outer(idx, idx)
    a = np.frexp(x.astype(float))[1]  # bit length of the xor = join level
    w = float(B) ** -(ls.n + a - 1.0)
    np.fill_diagonal(w, 0.0)
    return float(w.sum()) / ls.n


def y_statistic_batch(alive: np.ndarray, n: int, B: float) -> np.ndarray:
    """Vectorized overlap statistic via dyadic block counts.

    Ordered pairs with join level exactly a are counted by the difference
    of squared block sums at scales a and a-1; agrees with y_statistic
    exactly, at O(2^n) per row.
    """
    counts = alive.astype(np.float64)
    prev_sq = counts.sum(axis=1)  # scale-0 blocks are single leaves
    y = np.zeros(alive.shape[0])
    for a in range(1, n + 1):
        counts = counts[:, 0::2] + counts[:, 1::2]
        sq = (counts * counts).sum(axis=1)
        y += float(B) ** -(n + a - 1.0) * (sq - prev_sq)
        prev_sq = sq
    return y / n


def _y2_brute(n: int, B: float) -> float:
    """Second moment of the overlap statistic by full quadruple enumeration."""
    size = 2**n
    idx = np.arange(size, dtype=np.int64)
    shapes = [(size, 1, 1, 1), (1, size, 1, 1), (1, 1, size, 1), (1, 1, 1, size)]
    quad = [idx.reshape(s) for s in shapes]
    # distinct-value count among four small ints, via pairwise equalities:
    # 0 eq -> 4 distinct, 1 -> 3, 2 or 3 -> 2, 6 -> 1
    distinct_of_eq = np.array([4, 3, 2, 2, 0, 0, 1], dtype=np.int8)
    v = np.zeros((size,) * 4, dtype=np.int16)
    for level in range(1, n + 1):
        anc = [q >> level for q in quad]
        eq = np.zeros((size,) * 4, dtype=np.int8)
        for p in range(4):
            for q in range(p + 1, 4):
                eq = eq + (anc[p] == anc[q])
        v += distinct_of_eq[eq]
    x = np.bitwise_xor.outer(idx, idx)
    a = np.frexp(x.astype(float))[1]
    e2 = float(B) ** -(n + a - 1.0)
    np.fill_diagonal(e2, 0.0)  # zero diagonal enforces i != j and k != l
    w = e2.reshape(size, size, 1, 1) * e2.reshape(1, 1, size, size)
    total = float(np.sum(w * float(B) ** (-v.astype(np.float64))))
    return total / n**2


def _y2_topology(n: int, B: float) -> float:
    """Second moment of the overlap statistic by exact join-topology sums.

    Ordered pair-of-pairs are grouped by the shape of the four-leaf
    subtree: coinciding pairs, three distinct leaves (one shared), and the
    two four-leaf shapes (two sibling pairs under a common join, or a
    chain of three join levels).  Set counts are exact, not bounds.
    """
    B = float(B)
    lg = math.log(B)

    def bp(e: float) -> float:
        return math.exp(-lg * e)

    a_ = np.arange(1, n + 1, dtype=float)
    # both pairs identical: 2 ordered alignments of the same pair
    case2 = 2.0 * 2.0**n * np.sum(2.0 ** (a_ - 1) * bp(3.0) ** (n + a_ - 1))

    # three distinct leaves: close pair joins at a, apex leaf at c > a
    case3 = 0.0
    for c in range(2, n + 1):
        inner = 0.0
        for a in range(1, c):
            pair_products = bp(2 * (n + c - 1)) + 2.0 * bp(2 * n + a + c - 2)
            inner += 2.0 ** (n + a + c - 3) * bp(n + a + c - 2) * pair_products
        case3 += inner
    case3 *= 8.0

    # four leaves, two sibling pairs at levels a and b under a join at c
    case4a = 0.0
    for c in range(2, n + 1):
        ab = np.arange(1, c, dtype=float)
        cnt = 2.0 ** (n + c - 3) * np.multiply.outer(2.0**ab, 2.0**ab)
        vpow = bp(1.0) ** (n + c - 3 + np.add.outer(ab, ab))
        prods = bp(1.0) ** (2 * n - 2 + np.add.outer(ab, ab)) + 2.0 * bp(2 * (n + c - 1))
        case4a += float(np.sum(cnt * vpow * prods))

    # four leaves on a chain: joins at a1 < a2 < a3
    case4b = 0.0
    for a3 in range(3, n + 1):
        for a2 in range(2, a3):
            for a1 in range(1, a2):
                cnt = 2.0 ** (n + a1 + a2 + a3 - 4)
                vpow = bp(n + a1 + a2 + a3 - 3)
                prods = bp(2 * n + a1 + a3 - 2) + 2.0 * bp(2 * n + a2 + a3 - 2)
                case4b += cnt * vpow * prods
    case4b *= 8.0

    return (float(case2) + case3 + case4a + case4b) / n**2


def y_second_moment(n: int, method: str = "auto") -> float:
    """Exact mean square of the overlap statistic at the critical B.

    Quadruple enumeration up to n = 6, closed topology sums beyond; the
    two agree to 1e-10 where both run.
    """
    if n < 2:
        raise InvalidParameter("need n >= 2")
    if method == "auto":
        method = "brute" if n <= 6 else "topology"
    if method == "brute":
        if n > 7:
            raise InvalidParameter("enumeration is O(2^(4n)); use the topology sums")
        return _y2_brute(n, B_CRITICAL)
    if method == "topology":
        return _y2_topology(n, B_CRITICAL)
    raise InvalidParameter(f"unknown method {method!r}")


@lru_cache(maxsize=None)
def k_hat(n_cap: int = 30) -> float:
    """Running max of the overlap second moment over generations 2..n_cap."""
    return max(y_second_moment(n, method="topology") for n in range(2, n_cap + 1))


def fractional_threshold(B: float, gamma: float) -> float:
    """Contraction threshold B^g - 2(B-1)^g for the fractional-moment recursion."""
    if not 0.0 < gamma < 1.0:
        raise InvalidParameter("moment order must lie in (0, 1)")
    return float(B) ** gamma - 2.0 * (float(B) - 1.0) ** gamma


def gamma_positive_threshold(B: float) -> float:
    """Smallest moment order with a positive contraction threshold."""
    return math.log(2.0) / math.log(B / (B - 1.0))


def gamma_for_gap(B: float, zeta: float, tol: float = 1e-12) -> float:
    """Moment order at which the threshold^(1/gamma) reaches 2 - B - zeta/4.

    The gap function increases toward 2 - B as gamma -> 1, so bisection
    returns the boundary (smallest feasible) order.
    """
    target = 2.0 - B - zeta / 4.0
    if target <= 0.0:
        return gamma_positive_threshold(B)

    def gap(g: float) -> float:
        t = fractional_threshold(B, g)
        return -math.inf if t <= 0.0 else t ** (1.0 / g)

    lo = gamma_positive_threshold(B)
    hi = 1.0 - 1e-15
    if gap(hi) < target:
        raise InvalidParameter("zeta too large: the gap condition is unreachable")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if gap(mid) >= target:
            hi = mid
        else:
            lo = mid
    return hi
