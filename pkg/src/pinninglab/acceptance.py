"""The acceptance suite: one function per criterion, frozen parameters.

Each criterion runs at its stated tolerance and returns a result row;
the CLI prints one PASS/FAIL line per criterion with the measured values
and wall time, and pytest asserts the same functions.
"""
from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import special

from . import gaussian, hierarchy, hiermc, oracles, quenched, renewal
from .experiments import run as run_experiment
from .hierarchy import B_CRITICAL, HierParams, TreeIndexSet
from .numerics import derive_rng, ks_distance, least_squares_slope
from .quenched import QuenchedConfig
from .records import ExperimentConfig

MASTER_SEED = 20_240_801


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    details: dict = field(default_factory=dict)
    seconds: float = 0.0

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        det = "; ".join(f"{k}={v}" for k, v in self.details.items())
        return f"[{status}] {self.number:2d} {self.name:<24s} {self.seconds:7.1f}s  {det}"


def _fmt(x: float, digits: int = 6) -> str:
    return f"{x:.{digits}g}"


def crit_01_gw_identities() -> CriterionResult:
    worst = 0.0
    for B in (B_CRITICAL, 1.3):
        for n in (1, 2, 3):
            for r in range(1, 2**n + 1):
                for leaves in itertools.combinations(range(1, 2**n + 1), r):
                    closed = hierarchy.gw_product_expectation(
                        TreeIndexSet(n=n, leaves=leaves), B)
                    brute = oracles.gw_enumeration_expectation(n, leaves, B)
                    worst = max(worst, abs(closed - brute))
    return CriterionResult(1, "gw-identities", worst <= 1e-12,
                           {"max_error": _fmt(worst), "tol": "1e-12"})


def crit_02_overlap_identity() -> CriterionResult:
    worst = max(abs(hierarchy.pair_overlap_sum(n, B_CRITICAL) - n)
                for n in range(1, 31))
    brute = max(abs(hierarchy.pair_overlap_sum(n, B_CRITICAL)
                    - oracles.overlap_sum_brute(n, B_CRITICAL))
                for n in range(1, 5))
    ok = worst <= 1e-12 and brute <= 1e-12
    return CriterionResult(2, "overlap-identity", ok,
                           {"max_error": _fmt(worst), "max_brute_error": _fmt(brute)})


def crit_03_second_moments() -> CriterionResult:
    gap = max(abs(hierarchy.y_second_moment(n, method="brute")
                  - hierarchy.y_second_moment(n, method="topology"))
              for n in (4, 5, 6))
    seq = [hierarchy.y_second_moment(n, method="topology") for n in range(2, 31)]
    running = np.maximum.accumulate(seq)
    stabilized = running[-1] >= 0.95 * running.max()
    argmax = 2 + int(np.argmax(seq))
    ok = gap <= 1e-10 and stabilized
    return CriterionResult(3, "second-moments", ok, {
        "method_gap": _fmt(gap), "k_hat": _fmt(running[-1]),
        "attained_at_n": argmax, "raw_last": _fmt(seq[-1]),
    })


def crit_04_annealed_scaling() -> CriterionResult:
    hs = np.logspace(-3, -1, 9)
    low = hs[hs <= 1e-2 * (1 + 1e-9)]
    details = {}
    ok = True
    for B in (1.3, B_CRITICAL, 1.7):
        F = np.array([hierarchy.annealed_free_energy(B, h) for h in low])
        slope = least_squares_slope(np.log(low), np.log(F))
        target = 1.0 / hierarchy.alpha_of_B(B)
        ok = ok and abs(slope - target) <= 0.05
        details[f"B={B:.3g}"] = f"{slope:.4f} (want {target:.4f})"
    law = renewal.make_power_law(0.5, 100_000)
    F = np.array([renewal.homogeneous_free_energy(law, h) for h in low])
    slope = least_squares_slope(np.log(low), np.log(F))
    ok = ok and abs(slope - 2.0) <= 0.1
    details["renewal"] = f"{slope:.4f} (want 2)"
    return CriterionResult(4, "annealed-scaling", ok, details)


def crit_05_green_asymptotics() -> CriterionResult:
    law = renewal.make_power_law(0.5, 10_000)
    table = renewal.green_function(law, 10_000)
    ratio = table.u[10_000] * 2.0 * math.pi * law.c_k * 100.0
    ok = 0.95 <= ratio <= 1.05
    return CriterionResult(5, "green-asymptotics", ok, {"ratio": _fmt(ratio)})


def crit_06_dp_consistency() -> CriterionResult:
    law = renewal.make_power_law(0.5, 10_000)
    table = renewal.green_function(law, 10_000)
    cfg = QuenchedConfig(law=law, beta=0.0, h=0.0, N=10_000)
    profile = quenched.log_partition_profile(cfg, np.zeros(10_000))
    gap = float(np.max(np.abs(profile - np.log(table.u))))
    return CriterionResult(6, "dp-consistency", gap <= 1e-10,
                           {"max_gap_all_N": _fmt(gap)})


def crit_07_decomposition() -> CriterionResult:
    law = renewal.make_power_law(0.5, 256)
    rng = derive_rng(MASTER_SEED, "crit07")
    worst = 0.0
    for _ in range(100):
        k = int(rng.integers(2, 6))
        blocks = int(rng.integers(1, 7))
        beta = float(rng.uniform(0.0, 1.5))
        h = float(rng.uniform(-0.5, 0.5))
        cfg = QuenchedConfig(law=law, beta=beta, h=h, N=k * blocks)
        worst = max(worst, quenched.decomposition_residual(
            cfg, rng.standard_normal(cfg.N), k))
    return CriterionResult(7, "decomposition-identity", worst <= 1e-10,
                           {"max_rel_residual": _fmt(worst)})


def crit_08_gaussian_machinery() -> CriterionResult:
    worst_eig = 0.0
    for n in range(2, 7):
        spec = gaussian.factorize(gaussian.build_hier_coupling(n))
        eigs, mult = gaussian.hier_scale_eigenvalues(spec)
        dense = np.sort(np.linalg.eigvalsh(gaussian.dense_hier_coupling(spec)))
        worst_eig = max(worst_eig, float(np.max(np.abs(
            dense - np.sort(np.repeat(eigs, mult))))))

    spec = gaussian.factorize(gaussian.build_hier_coupling(4))  # dim 16
    rng = derive_rng(MASTER_SEED, "crit08")
    eps = 0.3
    om = rng.standard_normal((100_000, 16))
    vals = np.empty(om.shape[0])
    for i in range(vals.size):
        vals[i] = math.exp(gaussian.density_ratio(om[i], spec, eps))
    mean = float(vals.mean())
    se = float(vals.std(ddof=1) / math.sqrt(vals.size))
    norm_ok = abs(mean - 1.0) <= 3 * se

    holder_ok = True
    spec8 = gaussian.factorize(gaussian.build_hier_coupling(8))
    for eps_g, gamma in itertools.product((0.05, 0.1, 0.2), (0.5, 0.6, 0.8)):
        if eps_g / (1.0 - gamma) > 0.5:
            continue
        cost = gaussian.holder_cost(spec8, eps_g, gamma)
        holder_ok = holder_ok and cost.value >= cost.bound
    ok = worst_eig <= 1e-8 and norm_ok and holder_ok
    return CriterionResult(8, "gaussian-machinery", ok, {
        "max_eig_gap": _fmt(worst_eig),
        "density_norm": f"{mean:.4f}+-{se:.4f}",
        "holder_exact_ge_bound": holder_ok,
    })


def crit_09_jensen() -> CriterionResult:
    ok = True
    margins = []
    for i, (beta, h) in enumerate(itertools.product((0.5, 1.0, 1.5),
                                                    (-0.2, 0.1, 0.3, 0.6))):
        rng = derive_rng(MASTER_SEED, "crit09h", i)
        est = hiermc.pool_free_energy(HierParams(B=B_CRITICAL, beta=beta, h=h),
                                      12, 300, rng)
        ok = ok and est.mean <= est.annealed + 3 * est.std_error
        margins.append(est.annealed - est.mean)
    law = renewal.make_power_law(0.5, 2_000)
    for i, (beta, h) in enumerate(itertools.product((0.5, 1.0),
                                                    (-0.3, 0.0, 0.2, 0.5, 1.0, 2.0))):
        rng = derive_rng(MASTER_SEED, "crit09q", i)
        cfg = QuenchedConfig(law=law, beta=beta, h=h, N=1_200)
        est = quenched.quenched_free_energy(cfg, 32, rng)
        ok = ok and est.mean <= est.annealed + 3 * est.std_error
        margins.append(est.annealed - est.mean)
    return CriterionResult(9, "jensen-ordering", ok,
                           {"min_margin": _fmt(min(margins)), "points": len(margins)})


def crit_10_paley_zygmund() -> CriterionResult:
    ok = True
    details = {}
    for i, n in enumerate((6, 10)):
        rep = hiermc.paley_zygmund_check(n, 100_000, derive_rng(MASTER_SEED, "crit10", i))
        ok = ok and rep.passed and rep.bound <= 0.25
        details[f"n={n}"] = f"P={rep.prob:.4f} bound={rep.bound:.4f}"
    return CriterionResult(10, "paley-zygmund", ok, details)


TUNED_CERT = dict(zeta_override=0.08, gamma_override=0.5,
                  epsilon_override=0.09, n_override=16)


def crit_11_certification() -> CriterionResult:
    paper = hiermc.certify_delocalization(
        1.0, samples=4_000, rng=derive_rng(MASTER_SEED, "crit11paper"),
        disorder_samples=500)
    tuned = hiermc.certify_delocalization(
        1.0, samples=40_000, rng=derive_rng(MASTER_SEED, "crit11tuned"),
        disorder_samples=4_000, **TUNED_CERT)
    margin_b = ((tuned.condition_b_threshold - tuned.condition_b_mean)
                / max(tuned.condition_b_stderr, 1e-300))
    rng = derive_rng(MASTER_SEED, "crit11pool")
    pool = hiermc.pool_free_energy(HierParams(B=B_CRITICAL, beta=1.0,
                                              h=tuned.h_certified),
                                   tuned.n, 400, rng)
    no_positive = pool.mean <= 4 * pool.std_error
    ok = (paper.verdict == "infeasible-at-paper-constants"
          and tuned.verdict == "pass" and margin_b >= 3.0
          and tuned.condition_a_pass and no_positive)
    return CriterionResult(11, "certification", ok, {
        "paper_verdict": paper.verdict,
        "paper_n": f"{paper.n_paper:.3g}",
        "tuned_verdict": tuned.verdict,
        "h_certified": _fmt(tuned.h_certified),
        "cond_a": f"{tuned.condition_a_value:.5f}>= {tuned.condition_a_threshold:.5f}",
        "cond_b_margin_sigma": f"{margin_b:.0f}",
        "pool_mean_over_sigma": f"{pool.mean / max(pool.std_error, 1e-300):.2f}",
    })


def crit_12_chung_erdos() -> CriterionResult:
    law = renewal.make_power_law(0.5, 10_000)
    mean_hi, var_hi = quenched.chung_erdos_check(law, 10_000)
    mean_lo, var_lo = quenched.chung_erdos_check(law, 1_000)
    target = 1.0 / (2.0 * math.pi * law.c_k)
    rel = abs(mean_hi / math.log(10_000) / target - 1.0)
    ratio = (var_hi / math.log(10_000)) / (var_lo / math.log(1_000))
    ok = rel <= 0.05 and ratio < 2.0
    return CriterionResult(12, "chung-erdos", ok,
                           {"mean_rel_err": _fmt(rel), "var_ratio": _fmt(ratio)})


def crit_13_w_limit_law() -> CriterionResult:
    L = 100_000
    law = renewal.make_power_law(0.5, L)
    rng = derive_rng(MASTER_SEED, "crit13")
    w = np.empty(10_000)
    for i in range(w.size):
        w[i] = quenched.w_statistic(renewal.sample_path(law, L, rng), L)
    c = quenched.w_limit_scale(law)
    dist = ks_distance(w, lambda x: special.erf(np.maximum(x, 0.0) / (c * math.sqrt(2))))
    mean_rel = abs(float(w.mean()) / (c * math.sqrt(2.0 / math.pi)) - 1.0)
    ok = dist < 0.1 and mean_rel <= 0.1
    return CriterionResult(13, "w-limit-law", ok,
                           {"ks": _fmt(dist), "mean_rel_err": _fmt(mean_rel)})


def crit_14_lemma51_pipeline() -> CriterionResult:
    law = renewal.make_power_law(0.5, 4_096)
    c8 = math.e * renewal.conditioning_ratio(law, 1_000)
    etas, reports = [], []
    for i, h in enumerate((1e-1, 1e-2, 1e-3)):
        rep = quenched.lemma51_conditions(
            1.0, h, 0.75, law, 4_000, derive_rng(MASTER_SEED, "crit14", i),
            cond_horizon=1_000, c8=c8)
        etas.append(rep.eta_min)
        reports.append(rep)
    decreasing = all(b < a for a, b in zip(etas, etas[1:]))
    last = reports[-1]
    frontier_ok = math.isfinite(last.eta_star) and last.eta_star > 0.0
    # the raw sign at the measured eta is reported, not gated: at desk-scale
    # windows the small-gap Green mass alone keeps eta far above the frontier
    ok = decreasing and frontier_ok
    return CriterionResult(14, "lemma51-pipeline", ok, {
        "eta_by_h": "/".join(f"{e:.4f}" for e in etas),
        "h_hat_at_smallest_h": _fmt(last.h_hat),
        "h_hat_negative": last.h_hat_negative,
        "eta_star": _fmt(last.eta_star),
        "eta_over_frontier": _fmt(last.eta_min / last.eta_star),
    })


def crit_15_determinism(work_dir: str | Path | None = None) -> CriterionResult:
    import tempfile

    base = Path(work_dir) if work_dir else Path(tempfile.mkdtemp(prefix="pinninglab-det-"))
    configs = [
        {"experiment": "overlap-identity", "seed": 7, "n_max_gen": 12, "brute_n": 3},
        {"experiment": "gw-check", "seed": 7, "mc_n": 5, "mc_samples": 20_000},
    ]
    identical = True
    for raw in configs:
        cfg = ExperimentConfig.from_dict(raw)
        d1, d2 = base / f"{raw['experiment']}-a", base / f"{raw['experiment']}-b"
        run_experiment(cfg, d1)
        run_experiment(cfg, d2)
        for f1 in sorted(d1.glob("*.csv")):
            f2 = d2 / f1.name
            identical = identical and f1.read_bytes() == f2.read_bytes()
    return CriterionResult(15, "determinism", identical,
                           {"experiments": len(configs), "byte_identical": identical})


CRITERIA = [
    crit_01_gw_identities,
    crit_02_overlap_identity,
    crit_03_second_moments,
    crit_04_annealed_scaling,
    crit_05_green_asymptotics,
    crit_06_dp_consistency,
    crit_07_decomposition,
    crit_08_gaussian_machinery,
    crit_09_jensen,
    crit_10_paley_zygmund,
    crit_11_certification,
    crit_12_chung_erdos,
    crit_13_w_limit_law,
    crit_14_lemma51_pipeline,
    crit_15_determinism,
]


def run_criterion(fn) -> CriterionResult:
    t0 = time.perf_counter()
    res = fn()
    res.seconds = time.perf_counter() - t0
    return res


def run_all(numbers=None, echo=print) -> list[CriterionResult]:
    results = []
    for fn in CRITERIA:
        res_num = int(fn.__name__.split("_")[1])
        if numbers and res_num not in numbers:
            continue
        res = run_criterion(fn)
        results.append(res)
        if echo:
            echo(res.line())
    return results
