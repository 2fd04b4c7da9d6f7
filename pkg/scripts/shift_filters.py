"""Filtered Fourier reconstruction of the shift-operator measure (density 1/2 on [-1, 1]).

Prints the error at theta = 0 and theta = 0.5 versus N for each filter, with slopes.
"""
import argparse
from pathlib import Path

import numpy as np

from koopspec import io, measure_filter as mf

FILTERS = ["hat", "cos", "four", "bump"]


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--out", default="results")
    args = p.parse_args(argv)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    Ns = np.array([10, 20, 50, 100, 200, 500, 1000])
    n = np.arange(Ns[-1] + 1)
    a = np.where(n == 0, 1.0, np.sin(n) / np.where(n == 0, 1, n)) / (2 * np.pi)
    rows = []
    for theta in (0.0, 0.5):
        for i, f in enumerate(FILTERS):
            e = np.array([abs(mf.nu_eval(mf.AutocorrelationSeries(a[:N + 1].astype(complex), "exact"),
                                         mf.Filter(f), [theta]).values[0] - 0.5) for N in Ns])
            rows += [(theta, i, N, v) for N, v in zip(Ns, e)]
            s = -np.polyfit(np.log(Ns), np.log(e), 1)[0]
            print(f"theta={theta:.1f} {f:5s} order {s:5.2f}  errors " + " ".join(f"{v:.1e}" for v in e))
    io.write_csv(out / "shift_filters.csv", np.array(rows), ["theta", "filter", "N", "error"])


if __name__ == "__main__":
    main()
