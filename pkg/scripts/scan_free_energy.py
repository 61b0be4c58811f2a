#!/usr/bin/env python3
"""Scan quenched vs annealed free energy for both models over an h grid."""
import argparse

from pinninglab.hierarchy import B_CRITICAL, HierParams
from pinninglab.hiermc import pool_free_energy
from pinninglab.numerics import derive_rng
from pinninglab.quenched import QuenchedConfig, quenched_free_energy
from pinninglab.renewal import make_power_law


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--beta", type=float, default=1.0)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--n", type=int, default=14, help="hierarchical generation")
    ap.add_argument("--N", type=int, default=1500, help="renewal system size")
    ap.add_argument("--samples", type=int, default=200)
    ap.add_argument("--h", type=float, nargs="*",
                    default=[-0.2, 0.0, 0.1, 0.2, 0.4, 0.8])
    args = ap.parse_args()

    law = make_power_law(0.5, max(2 * args.N, 2000))
    print(f"{'h':>8} | {'hier mean':>12} {'se':>9} {'annealed':>10} | "
          f"{'renewal mean':>12} {'se':>9} {'annealed':>10}")
    for i, h in enumerate(args.h):
        rng_h = derive_rng(args.seed, "hier", i)
        est_h = pool_free_energy(HierParams(B=B_CRITICAL, beta=args.beta, h=h),
                                 args.n, args.samples, rng_h)
        rng_q = derive_rng(args.seed, "renewal", i)
        est_q = quenched_free_energy(
            QuenchedConfig(law=law, beta=args.beta, h=h, N=args.N),
            max(8, args.samples // 8), rng_q)
        print(f"{h:8.3f} | {est_h.mean:12.6g} {est_h.std_error:9.2g} "
              f"{est_h.annealed:10.5g} | {est_q.mean:12.6g} "
              f"{est_q.std_error:9.2g} {est_q.annealed:10.5g}")


if __name__ == "__main__":
    main()
