"""Quenched renewal pinning: exact DP partition functions, the block
coarse-graining decomposition, tilted-block weights, and the pair-sum
limit statistics.

All partition computations run in the log domain.  The coarse-grained
terms are evaluated by a restricted DP over (first-return, last-in-window)
states per selected block, so the nested sums of the decomposition are
never materialized.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .errors import (DimensionMismatch, HorizonExceeded, InvalidParameter,
                     ResourceGuard)
from .gaussian import build_block_coupling, factorize, holder_cost, sample_tilted_batch
from .numerics import MeanAccumulator, PoolEstimate, logsumexp_1d
from .renewal import (GreenTable, RenewalLaw, RenewalPath, conditioning_ratio,
                      green_function, homogeneous_free_energy, sample_path)

MAX_DP_SIZE = 100_000
MAX_BLOCK_COUNT = 6


@dataclass(frozen=True)
class QuenchedConfig:
    law: RenewalLaw
    beta: float
    h: float
    N: int

    def __post_init__(self):
        if self.N < 1:
            raise InvalidParameter("system size must be at least 1")
        if self.beta < 0.0:
            raise InvalidParameter("disorder strength must be nonnegative")


@dataclass(frozen=True)
class CoarseGrainPlan:
    """Window size k, target blocks of the first-return scan, and the
    tilted block set M (targets plus their right neighbors)."""

    k: int
    targets: tuple[int, ...]
    gamma: float

    def __post_init__(self):
        t = tuple(int(i) for i in self.targets)
        if not t or any(b <= a for a, b in zip(t, t[1:])) or t[0] < 1:
            raise InvalidParameter("targets must be strictly increasing, 1-based")
        object.__setattr__(self, "targets", t)

    @property
    def n_blocks(self) -> int:
        return self.targets[-1]

    @property
    def N(self) -> int:
        return self.k * self.n_blocks

    @property
    def M(self) -> tuple[int, ...]:
        m = set(self.targets) | {i + 1 for i in self.targets[:-1]}
        return tuple(sorted(m))


def window_size(h: float) -> int:
    """Coarse-graining window floor(1/h); defined for h > 0."""
    if h <= 0.0:
        raise InvalidParameter("the window size is defined for h > 0 only")
    return int(math.floor(1.0 / h))


def _site_log_weights(cfg: QuenchedConfig, omega: np.ndarray) -> np.ndarray:
    om = np.asarray(omega, dtype=float)
    if om.size < cfg.N:
        raise DimensionMismatch(f"need at least N={cfg.N} disorder values")
    w = np.empty(cfg.N + 1)
    w[0] = 0.0
    w[1:] = cfg.beta * om[: cfg.N] + cfg.h - 0.5 * cfg.beta**2
    return w


def log_partition_profile(cfg: QuenchedConfig, omega: np.ndarray) -> np.ndarray:
    """Endpoint-pinned log partition values at every size 0..N.

    O(N * min(N, n_max)): gaps beyond the stored law horizon carry no
    mass, so the recursion window is banded automatically.
    """
    if cfg.N > MAX_DP_SIZE:
        raise ResourceGuard(f"N={cfg.N} beyond the desk-scale guard {MAX_DP_SIZE}")
    logz = _site_log_weights(cfg, omega)
    with np.errstate(divide="ignore"):
        logK = np.log(cfg.law.mass)
    band = cfg.law.n_max
    L = np.empty(cfg.N + 1)
    L[0] = 0.0
    for n in range(1, cfg.N + 1):
        w = min(n, band)
        terms = L[n - 1 : n - w - 1 if n - w - 1 >= 0 else None : -1] + logK[1 : w + 1]
        L[n] = logz[n] + logsumexp_1d(terms)
    return L


def log_partition_dp(cfg: QuenchedConfig, omega: np.ndarray) -> float:
    """log of the endpoint-pinned quenched partition value at size N."""
    return float(log_partition_profile(cfg, omega)[cfg.N])


def quenched_free_energy(cfg: QuenchedConfig, samples: int,
                         rng: np.random.Generator) -> PoolEstimate:
    """Mean of log Z / N over IID standard Gaussian disorder.

    The annealed baseline attached to the estimate is the exact finite-N
    value (the zero-disorder DP at the same size), so the Jensen ordering
    holds sample by sample in expectation at every N.
    """
    acc = MeanAccumulator()
    for _ in range(samples):
        acc.add(np.array([log_partition_dp(cfg, rng.standard_normal(cfg.N)) / cfg.N]))
    annealed = annealed_log_partition(cfg) / cfg.N
    return PoolEstimate.from_accumulator(acc, cfg.N, "quenched-free-energy",
                                         annealed=annealed)


def annealed_log_partition(cfg: QuenchedConfig) -> float:
    """Exact finite-size annealed value: the zero-disorder DP."""
    pure = QuenchedConfig(law=cfg.law, beta=0.0, h=cfg.h, N=cfg.N)
    return log_partition_dp(pure, np.zeros(cfg.N))


def annealed_rate(cfg: QuenchedConfig) -> float:
    """Asymptotic annealed free energy from the characteristic equation."""
    return homogeneous_free_energy(cfg.law, cfg.h)


def _pinned_rows(cfg: QuenchedConfig, logz: np.ndarray, starts, span: int) -> dict:
    """log partition pinned at both ends: rows L[a][b-a] for b in [a, a+span] cap N."""
    with np.errstate(divide="ignore"):
        logK = np.log(cfg.law.mass)
    band = cfg.law.n_max
    rows = {}
    for a in starts:
        hi = min(a + span, cfg.N)
        L = np.full(hi - a + 1, -np.inf)
        L[0] = 0.0
        for b in range(a + 1, hi + 1):
            i = b - a
            w = min(i, band)
            terms = L[i - 1 : i - w - 1 if i - w - 1 >= 0 else None : -1] + logK[1 : w + 1]
            L[i] = logz[b] + logsumexp_1d(terms)
        rows[a] = L
    return rows


def log_coarse_grain_term(cfg: QuenchedConfig, omega: np.ndarray, targets,
                          k: int | None = None) -> float:
    """log of one coarse-grained term of the partition decomposition.

    The term collects every pinned path whose first-return scan visits
    exactly the given target blocks: first return n_r in block i_r, last
    contact j_r before n_r + k, no contacts in the long gaps between.
    """
    if k is None:
        k = window_size(cfg.h)
    targets = tuple(int(i) for i in targets)
    if cfg.N % k != 0:
        raise InvalidParameter("N must be divisible by the window size")
    n_blocks = cfg.N // k
    if not targets or targets[-1] != n_blocks:
        raise InvalidParameter("the last target must be the final block")
    if any(b <= a for a, b in zip(targets, targets[1:])) or targets[0] < 1:
        raise InvalidParameter("targets must be strictly increasing, 1-based")

    logz = _site_log_weights(cfg, omega)
    with np.errstate(divide="ignore"):
        logK = np.log(cfg.law.mass)
    block_positions = {
        b: np.arange((b - 1) * k + 1, b * k + 1) for b in set(targets)
    }
    starts = sorted({int(n) for b in targets for n in block_positions[b]})
    pinned = _pinned_rows(cfg, logz, starts, k - 1)

    ell = len(targets)
    # state after round r: log-weights indexed by (n_r, j_r)
    state: dict[tuple[int, int], float] = {}
    for r, block in enumerate(targets):
        new_state: dict[tuple[int, int], float] = {}
        for n in block_positions[block]:
            if r == 0:
                if n > cfg.law.n_max:
                    continue
                w_in = float(logK[n])
            else:
                terms = [
                    w + logK[n - j]
                    for (np_, j), w in state.items()
                    if n >= np_ + k and 1 <= n - j <= cfg.law.n_max
                ]
                if not terms:
                    continue
                w_in = logsumexp_1d(np.array(terms))
            w_in += logz[n]
            row = pinned[n]
            if r == ell - 1:
                if n <= cfg.N:
                    new_state[(n, cfg.N)] = w_in + float(row[cfg.N - n])
            else:
                for j in range(n, min(n + k - 1, cfg.N) + 1):
                    val = w_in + float(row[j - n])
                    if np.isfinite(val):
                        new_state[(n, j)] = val
        state = new_state
        if not state:
            return -math.inf
    return logsumexp_1d(np.array(list(state.values())))


def coarse_grain_term(cfg: QuenchedConfig, omega: np.ndarray, targets,
                      k: int | None = None) -> float:
    return math.exp(log_coarse_grain_term(cfg, omega, targets, k))


def enumerate_target_sets(n_blocks: int):
    """All strictly increasing block sequences ending at the last block."""
    if n_blocks > MAX_BLOCK_COUNT:
        raise ResourceGuard(f"too many blocks ({n_blocks} > {MAX_BLOCK_COUNT})")
    inner = list(range(1, n_blocks))
    for mask in range(2 ** len(inner)):
        picked = [inner[i] for i in range(len(inner)) if mask >> i & 1]
        yield tuple(picked) + (n_blocks,)


def decomposition_residual(cfg: QuenchedConfig, omega: np.ndarray, k: int) -> float:
    """Relative gap between the full partition value and the sum of its
    coarse-grained terms (zero up to roundoff)."""
    log_terms = [log_coarse_grain_term(cfg, omega, t, k)
                 for t in enumerate_target_sets(cfg.N // k)]
    total = logsumexp_1d(np.array(log_terms))
    ref = log_partition_dp(cfg, omega)
    return abs(math.expm1(total - ref))


def _pair_sum_profile(points: np.ndarray, horizon: int) -> np.ndarray:
    """S[m] = sum over path pairs i<j<=m of 1/sqrt(j-i), for m = 0..horizon."""
    jumps = np.zeros(horizon + 1)
    pts = points[(points >= 1) & (points <= horizon)]
    if pts.size >= 2:
        diff = (pts[:, None] - pts[None, :]).astype(float)
        inv = np.zeros_like(diff)
        pos = diff > 0
        inv[pos] = 1.0 / np.sqrt(diff[pos])
        jumps[pts] = inv.sum(axis=1)
    return np.cumsum(jumps)


@dataclass(frozen=True)
class UWeightTable:
    """Shared-path estimates of the tilted block weight, all gaps below k.

    u_over_c8[j] estimates U(j)/c8 = u(j) * s(k, j) where s is the mean
    of the in-block anti-correlation factor over free renewal paths on
    [1, j/2].
    """

    beta: float
    k: int
    gamma: float
    u: np.ndarray          # Green values u(0..k-1)
    s_mean: np.ndarray     # indexed by the half-window m = 0..(k-1)//2
    s_err: np.ndarray
    samples: int

    def s_of_gap(self, j: np.ndarray | int):
        return self.s_mean[np.asarray(j) // 2]

    @property
    def u_over_c8(self) -> np.ndarray:
        j = np.arange(self.k)
        return self.u[: self.k] * self.s_mean[j // 2]

    @property
    def u_err_over_c8(self) -> np.ndarray:
        j = np.arange(self.k)
        return self.u[: self.k] * self.s_err[j // 2]


def u_weight_table(beta: float, k: int, gamma: float, law: RenewalLaw,
                   samples: int, rng: np.random.Generator,
                   denom_constant: float = 9.0) -> UWeightTable:
    if k < 2:
        raise InvalidParameter("window must be at least 2")
    m_max = (k - 1) // 2
    table = green_function(law, max(k - 1, 1))
    hscale = (1.0 - gamma) / math.sqrt(denom_constant * k * math.log(k))
    tot = np.zeros(m_max + 1)
    totsq = np.zeros(m_max + 1)
    for _ in range(samples):
        if m_max >= 1:
            pts = sample_path(law, m_max, rng).points
            prof = _pair_sum_profile(pts, m_max)
        else:
            prof = np.zeros(1)
        vals = np.exp(-(beta**2) * hscale * prof)
        tot += vals
        totsq += vals * vals
    mean = tot / samples
    var = np.maximum(totsq / samples - mean**2, 0.0) * samples / max(samples - 1, 1)
    return UWeightTable(beta=beta, k=k, gamma=gamma, u=table.u,
                        s_mean=mean, s_err=np.sqrt(var / samples), samples=samples)


def u_weight(n: int, beta: float, k: int, gamma: float, law: RenewalLaw,
             samples: int, rng: np.random.Generator,
             denom_constant: float = 9.0) -> tuple[float, float]:
    """Estimate of U(n)/c8: Green value times the anti-correlation factor."""
    if not 0 <= n < k:
        raise InvalidParameter(f"gap {n} outside the window [0, {k})")
    if n == 0:
        return 1.0, 0.0
    tab = u_weight_table(beta, k, gamma, law, samples, rng, denom_constant)
    return float(tab.u[n] * tab.s_of_gap(n)), float(tab.u[n] * tab.s_err[n // 2])


def green_bound_constant(table: GreenTable) -> float:
    """c9: the max of u(n) sqrt(n) over the computed horizon."""
    n = np.arange(1, table.horizon + 1, dtype=float)
    return float(np.max(table.u[1:] * np.sqrt(n)))


def long_jump_constant(law: RenewalLaw, k: int, d_max: int | None = None) -> float:
    """Empirical C2: max of K(m) d^(3/2) k^(3/2) at the long-jump onset
    m = (d-2)k + 2, floored at 2^(3/2)."""
    if d_max is None:
        d_max = min(law.n_max // max(k, 1), 512)
    best = 2.0**1.5
    for d in range(3, max(d_max + 1, 4)):
        m = (d - 2) * k + 2
        if m > law.n_max:
            break
        best = max(best, float(law.mass[m]) * d**1.5 * k**1.5)
    return best


@dataclass(frozen=True)
class Lemma51Report:
    beta: float
    h: float
    gamma: float
    k: int
    c_hat: float
    c8: float
    lhs1: float                 # sum of U(j) over the window (c8 included)
    lhs1_over_sqrt_k: float
    lhs2: float                 # window sum against the long-gap mass
    eta_min: float
    eta_err: float
    c9: float
    c2_hat: float
    zeta_sum: float             # sum over n of n^(-3 gamma / 2)
    h_hat: float                # reduced pure-model reward at eta_min
    h_hat_negative: bool
    eta_star: float             # largest eta with a negative reduced reward
    delta_closing: float        # delta solving 4 c8 c9 (sqrt(d)+d) = eta_min


def reduced_reward(eta: float, gamma: float, c2: float, zeta_sum: float) -> float:
    """Reward of the reduced pure model: log(eta^g c2^g e sum n^(-3g/2))."""
    return gamma * math.log(eta) + gamma * math.log(c2) + 1.0 + math.log(zeta_sum)


def reduced_reward_threshold(gamma: float, c2: float, zeta_sum: float) -> float:
    """The eta below which the reduced reward turns negative."""
    return math.exp(-(gamma * math.log(c2) + 1.0 + math.log(zeta_sum)) / gamma)


def lemma51_conditions(beta: float, h: float, gamma: float, law: RenewalLaw,
                       samples: int, rng: np.random.Generator,
                       cond_horizon: int = 400, c8: float | None = None,
                       denom_constant: float = 9.0) -> Lemma51Report:
    """Assemble both window-sum conditions and the reduced-model reward.

    Reports the smallest eta satisfying both conditions, the exact reduced
    reward at that eta, and the eta threshold below which the reward turns
    negative (the attainability frontier of the sign test).
    """
    if h <= 0.0:
        raise InvalidParameter("the window size is defined for h > 0 only")
    k = window_size(h)
    if k < 2:
        raise InvalidParameter("h too large: window degenerates below 2")
    tab = u_weight_table(beta, k, gamma, law, samples, rng, denom_constant)
    if c8 is None:
        c_hat = conditioning_ratio(law, cond_horizon)
        c8 = math.e * c_hat
    else:
        c_hat = c8 / math.e
    uw = tab.u_over_c8 * c8
    uw_err = tab.u_err_over_c8 * c8
    lhs1 = float(uw.sum())
    j = np.arange(k)
    surv = np.array([law.survival(k - 1 - jj) for jj in range(k)])
    lhs2 = float(np.dot(uw, surv))
    eta1 = lhs1 / math.sqrt(k)
    eta_min = max(eta1, lhs2)
    err1 = float(np.sqrt(np.sum(uw_err**2))) / math.sqrt(k)
    err2 = float(np.sqrt(np.sum((uw_err * surv) ** 2)))
    eta_err = max(err1, err2)

    table = green_function(law, max(k - 1, 2))
    c9 = green_bound_constant(table)
    c2 = long_jump_constant(law, k)
    zsum = float(special.zeta(1.5 * gamma))
    hhat = reduced_reward(eta_min, gamma, c2, zsum)
    eta_star = reduced_reward_threshold(gamma, c2, zsum)
    ratio = eta_min / (4.0 * c8 * c9)
    s = 0.5 * (-1.0 + math.sqrt(1.0 + 4.0 * ratio))
    return Lemma51Report(
        beta=beta, h=h, gamma=gamma, k=k, c_hat=c_hat, c8=c8,
        lhs1=lhs1, lhs1_over_sqrt_k=eta1, lhs2=lhs2,
        eta_min=eta_min, eta_err=eta_err, c9=c9, c2_hat=c2, zeta_sum=zsum,
        h_hat=hhat, h_hat_negative=hhat < 0.0, eta_star=eta_star,
        delta_closing=s * s,
    )


@dataclass(frozen=True)
class SplitEstimate:
    k: int
    delta: float
    window_sum: float           # sum of U(j), c8 included
    small_part: float           # c8 + c8 c9 sum_{j <= delta k} 1/sqrt(j)
    large_part: float           # c8 c9 sum_{j > delta k} s(k,j)/sqrt(j)
    rhs: float                  # 4 c8 c9 (sqrt(delta)+delta) sqrt(k)
    max_s_large: float          # largest anti-correlation factor on the large range
    bound_holds: bool


def split_estimate(beta: float, k: int, delta: float, gamma: float,
                   law: RenewalLaw, samples: int, rng: np.random.Generator,
                   c8: float | None = None, cond_horizon: int = 400,
                   denom_constant: float = 9.0) -> SplitEstimate:
    """Evaluate both sides of the small/large gap split of the window sum."""
    if not 0.0 < delta < 1.0:
        raise InvalidParameter("delta must lie in (0, 1)")
    tab = u_weight_table(beta, k, gamma, law, samples, rng, denom_constant)
    if c8 is None:
        c8 = math.e * conditioning_ratio(law, cond_horizon)
    table = green_function(law, max(k - 1, 2))
    c9 = green_bound_constant(table)
    cut = int(delta * k)
    j = np.arange(1, k)
    inv_sqrt = 1.0 / np.sqrt(j)
    s_vals = tab.s_of_gap(j)
    small = c8 + c8 * c9 * float(inv_sqrt[:cut].sum())
    large = c8 * c9 * float(np.dot(inv_sqrt[cut:], s_vals[cut:]))
    window_sum = c8 * float(tab.u_over_c8.sum())
    rhs = 4.0 * c8 * c9 * (math.sqrt(delta) + delta) * math.sqrt(k)
    max_s = float(s_vals[cut:].max()) if cut < k - 1 else 0.0
    return SplitEstimate(k=k, delta=delta, window_sum=window_sum,
                         small_part=small, large_part=large, rhs=rhs,
                         max_s_large=max_s,
                         bound_holds=window_sum <= rhs)


def w_statistic(path: RenewalPath, L: int) -> float:
    """Normalized pair sum of inverse square-root gaps over the path in [1, L]."""
    if L < 3:
        raise InvalidParameter("need L >= 3")
    pts = path.points[(path.points >= 1) & (path.points <= L)]
    if pts.size < 2:
        return 0.0
    diff = (pts[:, None] - pts[None, :]).astype(float)
    mask = diff > 0
    total = float(np.sum(1.0 / np.sqrt(diff[mask])))
    return total / (math.sqrt(L) * math.log(L))


def w_limit_scale(law: RenewalLaw) -> float:
    """Scale of the half-normal limit of the pair statistic: (2 pi)^-3/2 / c_k^2."""
    return (2.0 * math.pi) ** -1.5 / law.c_k**2


def w_mean_exact(table: GreenTable, L: int) -> float:
    """Exact finite-size mean of the pair statistic from the Green table."""
    u = table.u
    if L > table.horizon:
        raise HorizonExceeded("Green table shorter than L")
    d = np.arange(1, L + 1, dtype=float)
    prefix = np.concatenate([[0.0], np.cumsum(u[1 : L + 1] / np.sqrt(d))])
    i = np.arange(1, L)
    total = float(np.dot(u[1:L], prefix[L - i]))
    return total / (math.sqrt(L) * math.log(L))


def y_log_weight_sum(path: RenewalPath, L: int) -> float:
    """sum over path points 1 <= p <= L of 1/sqrt(p)."""
    pts = path.points[(path.points >= 1) & (path.points <= L)]
    return float(np.sum(1.0 / np.sqrt(pts))) if pts.size else 0.0


def chung_erdos_check(law: RenewalLaw, L: int,
                      guard: int = 20_000) -> tuple[float, float]:
    """Exact mean and variance of the inverse-sqrt-weighted contact count.

    O(L^2); guarded at desk scale.
    """
    if L > guard:
        raise ResourceGuard(f"L={L} beyond the O(L^2) guard {guard}")
    u = green_function(law, L).u
    idx = np.arange(1, L + 1, dtype=float)
    mean = float(np.sum(u[1:] / np.sqrt(idx)))
    var = float(np.sum((u[1:] - u[1:] ** 2) / idx))
    for i in range(1, L):
        ji = np.arange(i + 1, L + 1, dtype=float)
        cross = (u[1 : L - i + 1] - u[i + 1 :]) / np.sqrt(ji)
        var += 2.0 * u[i] / math.sqrt(i) * float(np.sum(cross))
    return mean, var


@dataclass(frozen=True)
class FractionalSumBound:
    direct: PoolEstimate            # mean of Z^gamma
    termwise: PoolEstimate          # sum over target sets of Zhat^gamma
    tilted_bound: float             # sum of e^(|M|/2) (tilted mean)^gamma
    tilted_bound_err: float
    pointwise_ok: bool              # Z^gamma <= sum Zhat^gamma on every sample
    chain_margin_sigma: float       # ((iii) - (ii)) / combined sigma
    holder_max_ratio: float         # max exact holder value / e^(|M|/2)


def fractional_sum_bound(beta: float, h: float, gamma: float, law: RenewalLaw,
                         omega_samples: int, N: int, rng: np.random.Generator,
                         tilt_samples: int | None = None) -> FractionalSumBound:
    """Assemble the fractional-moment chain on a small block system.

    (i) direct Monte Carlo of the gamma-moment of Z; (ii) the termwise
    sum over coarse-grained pieces; (iii) the tilted-measure bound with
    the crude per-set cost e^(|M|/2).  (i) <= (ii) holds pointwise by
    subadditivity; (ii) <= (iii) within Monte Carlo error.
    """
    k = window_size(h)
    if N % k != 0:
        raise InvalidParameter("N must be a multiple of the window size")
    n_blocks = N // k
    if n_blocks > MAX_BLOCK_COUNT:
        raise ResourceGuard(f"too many blocks ({n_blocks} > {MAX_BLOCK_COUNT})")
    if tilt_samples is None:
        tilt_samples = omega_samples
    cfg = QuenchedConfig(law=law, beta=beta, h=h, N=N)
    sets = list(enumerate_target_sets(n_blocks))

    v_direct = np.empty(omega_samples)
    v_sum = np.empty(omega_samples)
    ok = True
    for s in range(omega_samples):
        om = rng.standard_normal(N)
        logz = log_partition_dp(cfg, om)
        v_direct[s] = math.exp(gamma * logz)
        parts = [math.exp(gamma * log_coarse_grain_term(cfg, om, t, k)) for t in sets]
        v_sum[s] = float(np.sum(parts))
        ok = ok and v_direct[s] <= v_sum[s] * (1.0 + 1e-9)

    acc_d, acc_t = MeanAccumulator(), MeanAccumulator()
    acc_d.add(v_direct)
    acc_t.add(v_sum)

    total3 = 0.0
    var3 = 0.0
    hratio = 0.0
    for t in sets:
        plan = CoarseGrainPlan(k=k, targets=t, gamma=gamma)
        spec = factorize(build_block_coupling(k, gamma, plan.M))
        cost = holder_cost(spec, 1.0, gamma)
        hratio = max(hratio, cost.value / cost.bound)
        vals = np.empty(tilt_samples)
        filled = spec.dim
        for s in range(tilt_samples):
            om = np.empty(N)
            om[:filled] = sample_tilted_batch(spec, 1.0, rng, 1)[0]
            if filled < N:
                om[filled:] = rng.standard_normal(N - filled)
            vals[s] = coarse_grain_term(cfg, om, t, k)
        m = float(vals.mean())
        se = float(vals.std(ddof=1) / math.sqrt(tilt_samples))
        factor = math.exp(0.5 * len(plan.M))
        total3 += factor * m**gamma
        var3 += (factor * gamma * m ** (gamma - 1.0) * se) ** 2

    est_d = PoolEstimate.from_accumulator(acc_d, N, "direct-gamma-moment")
    est_t = PoolEstimate.from_accumulator(acc_t, N, "termwise-gamma-moment")
    sigma = math.sqrt(est_t.std_error**2 + var3)
    return FractionalSumBound(
        direct=est_d, termwise=est_t, tilted_bound=total3,
        tilted_bound_err=math.sqrt(var3), pointwise_ok=ok,
        chain_margin_sigma=(total3 - est_t.mean) / sigma if sigma > 0 else math.inf,
        holder_max_ratio=hratio,
    )
