"""Independent brute-force oracles used to validate the fast paths.

Everything here proceeds by enumeration or direct definition-chasing and
deliberately avoids the closed forms it is meant to check.
"""
from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

from .renewal import RenewalLaw


@lru_cache(maxsize=None)
def gw_outcomes(depth: int, B: float) -> tuple[tuple[float, frozenset], ...]:
    """All (probability, alive-leafset) outcomes of the branching tree.

    The outcome count squares with each level (1, 2, 5, 26, 677, ...), so
    this is for depth <= 4 only.
    """
    if depth > 4:
        raise ValueError("outcome enumeration explodes beyond depth 4")
    if depth == 0:
        return ((1.0, frozenset({1})),)
    sub = gw_outcomes(depth - 1, B)
    half = 2 ** (depth - 1)
    agg: dict[frozenset, float] = {frozenset(): (B - 1.0) / B}
    for p_l, s_l in sub:
        for p_r, s_r in sub:
            leaves = frozenset(s_l | {i + half for i in s_r})
            agg[leaves] = agg.get(leaves, 0.0) + p_l * p_r / B
    return tuple((p, s) for s, p in agg.items())


def gw_enumeration_expectation(n: int, leaves, B: float) -> float:
    """E[prod of leaf indicators] by summing over every branching outcome."""
    target = frozenset(int(i) for i in leaves)
    return sum(p for p, alive in gw_outcomes(n, B) if target <= alive)


def subtree_nodes_by_paths(n: int, leaves) -> int:
    """Count internal nodes by materializing each root-to-leaf path."""
    nodes = set()
    for leaf in leaves:
        node = int(leaf) - 1
        for level in range(1, n + 1):
            node >>= 1
            nodes.add((level, node))
    return len(nodes)


def overlap_sum_brute(n: int, B: float) -> float:
    """Ordered pair sum of squared two-point functions by enumeration."""
    total = 0.0
    for i in range(1, 2**n + 1):
        for j in range(1, 2**n + 1):
            if i != j:
                v = subtree_nodes_by_paths(n, (i, j))
                total += float(B) ** (-2 * v)
    return total


def enumerate_paths(law: RenewalLaw, N: int):
    """Every renewal path on [0, N] (by gap tuples) with its probability.

    Yields (points tuple, probability of exactly this restriction),
    including the event that the next gap jumps past the horizon.
    """
    def rec(pos: int, prob: float, pts: tuple):
        yield pts, prob * law.survival(N - pos)
        for gap in range(1, min(law.n_max, N - pos) + 1):
            yield from rec(pos + gap, prob * float(law.mass[gap]), pts + (pos + gap,))

    yield from rec(0, 1.0, (0,))


def green_by_enumeration(law: RenewalLaw, N: int) -> np.ndarray:
    """u(0..N) summed over every path, for small horizons."""
    u = np.zeros(N + 1)
    u[0] = 1.0
    for pts, prob in enumerate_paths(law, N):
        for p in pts[1:]:
            u[p] += prob
    return u


def conditioning_ratio_brute(law: RenewalLaw, N: int) -> float:
    """max over n of P(last epoch <= N is n | 2N renewed)/P(...) by paths."""
    last_any = np.zeros(N + 1)
    last_pin = np.zeros(N + 1)
    pin_total = 0.0
    for pts, prob in enumerate_paths(law, 2 * N):
        arr = [p for p in pts if p <= N]
        last = max(arr)
        last_any[last] += prob
        if 2 * N in pts:
            last_pin[last] += prob
            pin_total += prob
    with np.errstate(invalid="ignore", divide="ignore"):
        ratios = (last_pin / pin_total) / last_any
    return float(np.nanmax(ratios))


def zeta_by_series(s: float, terms: int = 200_000) -> float:
    """Direct series for the zeta normalizer, with an integral tail correction."""
    n = np.arange(1, terms + 1, dtype=float)
    head = float(np.sum(n**-s))
    tail = (terms + 0.5) ** (1.0 - s) / (s - 1.0)
    return head + tail


def y_mean_by_enumeration(n: int, B: float) -> float:
    """E[Y_n] by summing the overlap statistic over all branching outcomes."""
    from .hierarchy import LeafSet, y_statistic

    total = 0.0
    for p, alive in gw_outcomes(n, B):
        if len(alive) >= 2:
            total += p * y_statistic(LeafSet(n=n, alive=np.array(sorted(alive))), B)
    return total


def weighted_contact_mean_brute(law: RenewalLaw, L: int) -> float:
    """Mean of the inverse-sqrt-weighted contact count by path enumeration."""
    total = 0.0
    for pts, prob in enumerate_paths(law, L):
        total += prob * sum(1.0 / math.sqrt(p) for p in pts[1:] if p <= L)
    return total
