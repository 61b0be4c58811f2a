"""Recurrent renewal processes with polynomial inter-arrival tails.

Laws are stored up to a finite horizon n_max; whatever probability mass
lives beyond the horizon is kept as an analytic tail (power-law shape)
so that infinite sums (normalization, the characteristic equation) stay
exact up to an explicit, reported truncation.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import integrate, signal, special

from .errors import HorizonExceeded, InvalidParameter

RECURRENT_TOL = 1e-9
FFT_SWITCH = 20_000


@dataclass(frozen=True)
class RenewalLaw:
    """Inter-arrival law K(1..n_max), plus the analytic tail beyond n_max.

    mass[n] = K(n) for 1 <= n <= n_max (mass[0] is a zero pad).
    alpha, c_k describe the tail K(n) ~ c_k / n^(1+alpha); finite-support
    laws use alpha = inf, c_k = 0.
    """

    mass: np.ndarray
    alpha: float
    c_k: float
    tail_mass: float = 0.0

    def __post_init__(self):
        m = np.asarray(self.mass, dtype=float)
        if m.ndim != 1 or m.size < 3 or m[0] != 0.0:
            raise InvalidParameter("mass must be 1-d with a zero pad at index 0 and n_max >= 2")
        if np.any(m[1:] <= 0.0):
            raise InvalidParameter("every stored K(n) must be positive")
        if self.tail_mass < 0.0:
            raise InvalidParameter("tail mass must be nonnegative")
        if self.grand_total > 1.0 + 1e-12:
            raise InvalidParameter("total mass exceeds 1")
        m.setflags(write=False)
        object.__setattr__(self, "mass", m)

    @property
    def n_max(self) -> int:
        return self.mass.size - 1

    @property
    def total(self) -> float:
        return float(self.mass.sum())

    @property
    def grand_total(self) -> float:
        return self.total + self.tail_mass

    @property
    def recurrent(self) -> bool:
        return abs(self.grand_total - 1.0) <= RECURRENT_TOL

    @cached_property
    def cdf(self) -> np.ndarray:
        return np.cumsum(self.mass)

    def survival(self, m: int) -> float:
        """P(gap > m), tail mass included; exact beyond n_max only for
        finite-support laws."""
        if m > self.n_max:
            if self.tail_mass > 0.0:
                raise HorizonExceeded("gap survival beyond the stored tail")
            return self.grand_total - float(self.cdf[-1])
        return float(self.grand_total - self.cdf[m])

    def tail_consistency(self) -> float:
        """Max deviation of mass(n) n^(1+alpha)/c_k from 1 on the last decade."""
        if not np.isfinite(self.alpha) or self.c_k <= 0.0:
            return float("nan")
        lo = max(1, self.n_max // 10 * 9)
        ns = np.arange(lo, self.n_max + 1, dtype=float)
        ratio = self.mass[lo:] * ns ** (1.0 + self.alpha) / self.c_k
        return float(np.max(np.abs(ratio - 1.0)))


@dataclass(frozen=True)
class GreenTable:
    """u(n) = P(n is a renewal point) for n = 0..N."""

    u: np.ndarray
    law: RenewalLaw

    def __post_init__(self):
        u = np.asarray(self.u, dtype=float)
        u.setflags(write=False)
        object.__setattr__(self, "u", u)
        if u[0] != 1.0:
            raise InvalidParameter("u(0) must be 1")

    @property
    def horizon(self) -> int:
        return self.u.size - 1


@dataclass(frozen=True)
class RenewalPath:
    """The renewal set within [0, N]: strictly increasing points, first is 0."""

    points: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.points, dtype=np.int64)
        p.setflags(write=False)
        object.__setattr__(self, "points", p)
        if p.size == 0 or p[0] != 0:
            raise InvalidParameter("a path starts at 0")
        if p.size > 1 and np.any(np.diff(p) < 1):
            raise InvalidParameter("points must be strictly increasing")


def make_power_law(alpha: float, n_max: int) -> RenewalLaw:
    """Pure power-law gap law K(n) = n^-(1+alpha) / zeta(1+alpha), stored to n_max."""
    if not alpha > 0.0:
        raise InvalidParameter(f"tail exponent must be positive, got {alpha}")
    if n_max < 2:
        raise InvalidParameter(f"horizon must be at least 2, got {n_max}")
    ns = np.arange(n_max + 1, dtype=float)
    c = 1.0 / special.zeta(1.0 + alpha)
    mass = np.zeros(n_max + 1)
    mass[1:] = c * ns[1:] ** -(1.0 + alpha)
    tail = max(1.0 - mass.sum(), 0.0)
    return RenewalLaw(mass=mass, alpha=alpha, c_k=c, tail_mass=tail)


def law_from_mass(values, alpha: float = math.inf, c_k: float = 0.0,
                  tail_mass: float = 0.0) -> RenewalLaw:
    """Wrap explicit masses K(1), K(2), ... into a law (finite tail by default)."""
    v = np.asarray(values, dtype=float)
    mass = np.zeros(v.size + 1)
    mass[1:] = v
    return RenewalLaw(mass=mass, alpha=alpha, c_k=c_k, tail_mass=tail_mass)


def reduced_power_law(gamma: float, n_max: int) -> RenewalLaw:
    """The coarse-grained pure law with tail exponent (3/2)*gamma; needs gamma > 2/3."""
    if not gamma > 2.0 / 3.0:
        raise InvalidParameter("the reduced law needs a moment order above 2/3")
    return make_power_law(1.5 * gamma - 1.0, n_max)


def _green_direct(mass: np.ndarray, N: int) -> np.ndarray:
    u = np.empty(N + 1)
    u[0] = 1.0
    K = mass[: N + 1]
    for n in range(1, N + 1):
        u[n] = np.dot(K[1 : n + 1], u[n - 1 :: -1][:n])
    return u


def _green_divide_conquer(mass: np.ndarray, N: int, base: int = 512) -> np.ndarray:
    K = mass[: N + 1]
    u = np.zeros(N + 1)
    u[0] = 1.0
    acc = K.copy()  # contributions of u(0); acc[m] accumulates sums over finalized t < lo
    acc[0] = 0.0

    def rec(lo: int, hi: int) -> None:
        if hi - lo <= base:
            for m in range(lo, hi):
                u[m] = acc[m] + np.dot(K[1 : m - lo + 1], u[m - 1 : lo - 1 : -1])
            return
        mid = (lo + hi) // 2
        rec(lo, mid)
        conv = signal.fftconvolve(u[lo:mid], K[1 : hi - lo])
        acc[mid:hi] += conv[mid - lo - 1 : hi - lo - 1]
        rec(mid, hi)

    rec(1, N + 1)
    return u


def green_function(law: RenewalLaw, N: int, method: str = "auto") -> GreenTable:
    """Renewal mass function on [0, N] by convolution of the gap law.

    Direct O(N^2) convolution for modest N; divide-and-conquer FFT
    convolution beyond the switch point (both agree to ~1e-12 relative).
    Laws with an analytic tail must be stored at least to N; for
    finite-support laws any horizon is exact.
    """
    if N > law.n_max:
        if law.tail_mass > 0.0:
            raise HorizonExceeded(f"N={N} exceeds the stored law horizon {law.n_max}")
        mass = np.concatenate([law.mass, np.zeros(N - law.n_max)])
    else:
        mass = law.mass
    if method == "auto":
        method = "fft" if N > FFT_SWITCH else "direct"
    if method == "direct":
        u = _green_direct(mass, N)
    elif method == "fft":
        u = _green_divide_conquer(mass, N)
    else:
        raise InvalidParameter(f"unknown method {method!r}")
    return GreenTable(u=u, law=law)


def renewal_residual(table: GreenTable) -> float:
    """sup-norm of u - K*u - e0; machine-zero for a correct table."""
    u, K = table.u, table.law.mass[: table.horizon + 1]
    conv = signal.fftconvolve(u, K)[: u.size]
    res = u - conv
    res[0] -= 1.0
    return float(np.max(np.abs(res)))


def sample_path(law: RenewalLaw, N: int, rng: np.random.Generator,
                block: int = 256) -> RenewalPath:
    """IID gaps from the full law, path stopped at the horizon N.

    A draw landing in the mass beyond n_max (or in the terminating
    deficit of a sub-probability law) necessarily leaves the window, so
    it simply ends the path; the restriction to [0, N] is sampled exactly
    as long as N <= n_max.  Conditioning gaps on <= n_max instead would
    compound a per-gap bias that fat tails make visible in the point
    counts, failing the Green-table consistency checks.
    """
    if law.tail_mass > 0.0 and N > law.n_max:
        raise HorizonExceeded(
            f"exact sampling needs N <= n_max = {law.n_max} for tailed laws"
        )
    segs = [np.zeros(1, dtype=np.int64)]
    pos = 0
    cdf = law.cdf[1:]  # unnormalized: a draw above cdf[-1] exits the horizon
    while True:
        gaps = np.searchsorted(cdf, rng.random(block)) + 1
        cum = pos + np.cumsum(gaps)
        inside = cum[cum <= N]
        segs.append(inside.astype(np.int64))
        if inside.size < cum.size:
            break
        pos = int(cum[-1])
    return RenewalPath(points=np.concatenate(segs))


def _tail_integral(law: RenewalLaw, rate: float) -> float:
    """Mass beyond n_max weighted by exp(-rate*n), power-law shape, exact at rate 0."""
    if law.tail_mass == 0.0 or not np.isfinite(law.alpha):
        return 0.0
    x0 = law.n_max + 0.5
    base = x0 ** (-law.alpha) / law.alpha  # integral of x^-(1+alpha) from x0
    if rate == 0.0:
        return law.tail_mass
    # substitute u = x0/x: bounded smooth integrand on (0, 1]
    val, _ = integrate.quad(
        lambda u: u ** (law.alpha - 1.0) * math.exp(-rate * x0 / u), 0.0, 1.0,
        limit=200,
    )
    val *= x0 ** (-law.alpha)
    return law.tail_mass * val / base


def characteristic_sum(law: RenewalLaw, rate: float) -> float:
    """sum_n K(n) exp(-rate n), with the analytic tail correction."""
    ns = np.arange(1, law.n_max + 1, dtype=float)
    head = float(np.dot(law.mass[1:], np.exp(-rate * ns)))
    return head + _tail_integral(law, rate)


def homogeneous_free_energy(law: RenewalLaw, h: float,
                            rel_tol: float = 1e-10, max_iter: int = 200) -> float:
    """Pure-model free energy: the positive root of the characteristic equation.

    For h <= 0 the model is delocalized and the value is 0.
    """
    if not law.recurrent:
        raise InvalidParameter(
            "law is terminating (total mass < 1); apply terminating_shift first"
        )
    if h <= 0.0:
        return 0.0
    target = math.exp(-h)
    lo = 0.0
    hi = max(h, 1e-12)
    while characteristic_sum(law, hi) > target:
        hi *= 2.0
        if hi > 1e6:
            raise InvalidParameter("failed to bracket the free-energy root")
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if characteristic_sum(law, mid) > target:
            lo = mid
        else:
            hi = mid
        if hi - lo <= rel_tol * hi:
            break
    return 0.5 * (lo + hi)


def terminating_shift(law: RenewalLaw) -> tuple[RenewalLaw, float]:
    """Renormalize a terminating law to a recurrent one; returns (law, log-deficit)."""
    sigma = law.grand_total
    if abs(sigma - 1.0) <= 1e-12:
        return law, 0.0
    shifted = RenewalLaw(
        mass=law.mass / sigma,
        alpha=law.alpha,
        c_k=law.c_k / sigma,
        tail_mass=law.tail_mass / sigma,
    )
    return shifted, math.log(sigma)


def homogeneous_decay_profile(law_hat: RenewalLaw, h_hat: float, N: int) -> np.ndarray:
    """Endpoint-pinned homogeneous partition values Z(0..N), log-stable."""
    if N > law_hat.n_max:
        raise HorizonExceeded(f"N={N} exceeds the stored law horizon {law_hat.n_max}")
    with np.errstate(divide="ignore"):
        logK = np.log(law_hat.mass[: N + 1])
    L = np.empty(N + 1)
    L[0] = 0.0
    for n in range(1, N + 1):
        terms = L[n - 1 :: -1][:n] + logK[1 : n + 1]
        m = terms.max()
        L[n] = h_hat + m + math.log(np.exp(terms - m).sum())
    return np.exp(L)


def homogeneous_decay(law_hat: RenewalLaw, h_hat: float, N: int) -> float:
    """Value at size N of the endpoint-pinned homogeneous partition sum."""
    return float(homogeneous_decay_profile(law_hat, h_hat, N)[-1])


def conditioning_ratio_curve(law: RenewalLaw, N_max: int) -> np.ndarray:
    """Running max over N' <= N of the last-epoch conditioning ratio, N = 1..N_max.

    ratio(N, n) = P(X_N = n | 2N in tau) / P(X_N = n) with X_N the last
    renewal epoch <= N, assembled exactly from the Green table and the
    gap tails.
    """
    if 2 * N_max > law.n_max:
        if law.tail_mass > 0.0:
            raise HorizonExceeded("need the law stored to 2*N_max")
        pad = 2 * N_max - law.n_max
        K = np.concatenate([law.mass, np.zeros(pad)])
        cdf = np.concatenate([law.cdf, np.full(pad, law.cdf[-1])])
    else:
        K = law.mass
        cdf = law.cdf
    u = green_function(law, 2 * N_max).u
    out = np.empty(N_max)
    running = 0.0
    for N in range(1, N_max + 1):
        # S(N, n) = sum_{m<=N-1} u(m) K(2N-n-m) for n = 0..N, via one convolution
        conv = signal.fftconvolve(u[:N], K[: 2 * N + 1])
        t = 2 * N - np.arange(N + 1)  # index t = 2N - n
        S = conv[t]
        surv = law.grand_total - cdf[N - np.arange(N + 1)]
        feasible = surv > 0.0  # last-epoch values the law can realize at all
        ratios = S[feasible] / (u[2 * N] * surv[feasible])
        running = max(running, float(ratios.max()))
        out[N - 1] = running
    return out


def conditioning_ratio(law: RenewalLaw, N_max: int) -> float:
    """Empirical constant: the max conditioning ratio over N <= N_max, n <= N."""
    return float(conditioning_ratio_curve(law, N_max)[-1])
