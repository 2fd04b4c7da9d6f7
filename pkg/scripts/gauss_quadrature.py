"""Convergence of the Galerkin matrix A for the Gauss map under different quadrature rules."""
import argparse
from pathlib import Path

import numpy as np

from koopspec import dictionary as dc, dynamics as dy, galerkin as ga, io, quadrature as qd


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--out", default="results")
    p.add_argument("--n", type=int, default=40, help="dictionary size")
    args = p.parse_args(argv)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    S = dy.gauss_map()
    D = dc.TensorDictionary.univariate(dc.Axis("legendre_transplanted", (-1, 0)), args.n)

    def A(rule):
        return ga.assemble(dy.generate_snapshots(S, rule.nodes, 2, rule.weights), D, keep_factors=False).A

    ref = A(qd.gauss_legendre(10_000, (-1, 0)))
    Ms = np.array([50, 100, 200, 400, 800, 1600, 3200, 6400])
    rules = {
        "gauss": lambda M, s: qd.gauss_legendre(M, (-1, 0)),
        "trapezoid": lambda M, s: qd.trapezoid(M, (-1, 0)),
        "riemann": lambda M, s: qd.riemann(M, (-1, 0)),
        "mc": lambda M, s: qd.monte_carlo(M, [(-1, 0)], seed=s),
    }
    rows = []
    for i, (name, mk) in enumerate(rules.items()):
        seeds = range(10) if name == "mc" else [0]
        e = np.array([np.sqrt(np.mean([np.abs(A(mk(M, s)) - ref).max() ** 2 for s in seeds])) for M in Ms])
        rows += [(i, M, v) for M, v in zip(Ms, e)]
        tail = Ms >= 500
        slope = np.polyfit(np.log(Ms[tail]), np.log(e[tail]), 1)[0] if name != "gauss" else float("nan")
        print(f"{name:9s} slope(M>=500) {slope:6.2f}  errors " + " ".join(f"{v:.1e}" for v in e))
    io.write_csv(out / "gauss_quadrature.csv", np.array(rows), ["rule", "M", "error"])


if __name__ == "__main__":
    main()
