"""Error of rational-kernel measures on perturbed CMV truncations with eps = delta^(1/(m+1)).

Writes noise_stability.csv (pattern, m, delta, eps, mean, sd) and prints slopes.
"""
import argparse
from pathlib import Path

import numpy as np

from koopspec import dynamics as dy, galerkin as ga, io, measure_rational as mr


def mats_for(eps):
    n = int(max(200, 60 / eps))
    a = np.zeros(n, dtype=complex)
    a[0] = 1.0
    return ga.assemble_exact(dy.cmv(n_store=n + 8), n, sparse=True), a


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--out", default="results")
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args(argv)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rho = dy.rogers_szego_density(0.2)
    base = np.array([1e-2, 1e-3, 1e-4, 1e-5, 1e-6])
    ext = np.array([1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-8, 1e-10, 1e-12])
    # dense perturbations need a dense n x n matrix, n ~ 60/eps, so only large m is affordable
    runs = [("band", m) for m in (1, 2, 4, 6)] + [("dense", m) for m in (4, 6)]
    rows = []
    for pattern, m in runs:
        deltas = ext if (pattern == "band" and m >= 4) else base
        rec = mr.noise_experiment(None, None, deltas, m, args.trials, args.seed, 0.2, rho,
                                  pattern=pattern, mats_for=mats_for)
        mean = np.array([r["mean"] for r in rec])
        rows += [(int(pattern == "dense"), m, r["delta"], r["eps"], r["mean"], r["sd"]) for r in rec]
        s5 = np.polyfit(np.log(base), np.log(mean[:5]), 1)[0]
        line = f"{pattern:5s} m={m}: slope 1e-2..1e-6 {s5:.3f}"
        if len(deltas) > 5:
            s_tail = np.polyfit(np.log(deltas[-4:]), np.log(mean[-4:]), 1)[0]
            line += f", slope 1e-6..1e-12 {s_tail:.3f}"
        print(line + f", target {m / (m + 1):.3f}", flush=True)
    io.write_csv(out / "noise_stability.csv", np.array(rows), ["dense", "m", "delta", "eps", "mean", "sd"])


if __name__ == "__main__":
    main()
