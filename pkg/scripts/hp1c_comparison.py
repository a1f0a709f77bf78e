"""CRS versus Plum on the HP1C core, four deepest slices as supported data.

Prints both 95% bands at each dated depth and flags depths where they do
not overlap.

    python3 scripts/hp1c_comparison.py --iters 5000000
"""
import argparse
import time

import numpy as np

from pbchron.crs import crs_ages
from pbchron.data import load_hp1c, split_supported, tail_supported_estimate
from pbchron.fit import PlumConfig, run_plum
from pbchron.model import PriorConfig
from pbchron.summary import diagnostics, summarize


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--iters", type=int, default=5_000_000)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--al", type=float, default=PriorConfig().a_l)
    p.add_argument("--mc", type=int, default=5000, help="Monte Carlo draws for the CRS band")
    args = p.parse_args()

    chron, supported = split_supported(load_hp1c(), 4)
    mean, sd = tail_supported_estimate(supported)
    crs = crs_ages(chron, mean, sd, n_mc=args.mc, seed=args.seed)

    t0 = time.perf_counter()
    ens = run_plum(chron, PlumConfig(n_iter=args.iters, seed=args.seed, prior=PriorConfig(a_l=args.al)), supported=supported)
    elapsed = time.perf_counter() - t0
    s = summarize(ens, crs.depth)
    diag = diagnostics(ens)

    print(f"supported (tail mean) {mean:.2f} +/- {sd:.2f}; Plum P^S {s.p_s.mean:.2f} [{s.p_s.lo95:.2f}, {s.p_s.hi95:.2f}]")
    print(f"Plum phi {s.phi.mean:.1f} [{s.phi.lo95:.1f}, {s.phi.hi95:.1f}]; {elapsed:.1f} s, IAT phi {diag['iat_per_param']['phi']:.0f}")
    print(f"{'depth':>6} {'CRS lo':>8} {'CRS hi':>8} {'Plum lo':>8} {'Plum hi':>8}")
    n_miss = 0
    for d, clo, chi, plo, phi in zip(crs.depth, crs.age_lo95, crs.age_hi95, s.lo95, s.hi95):
        if not np.isfinite(clo):
            continue
        miss = max(clo, plo) > min(chi, phi)
        n_miss += miss
        print(f"{d:6.1f} {clo:8.1f} {chi:8.1f} {plo:8.1f} {phi:8.1f}{'  no overlap' if miss else ''}")
    print(f"depths without overlap: {n_miss}")


if __name__ == "__main__":
    main()
