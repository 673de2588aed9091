#!/usr/bin/env python3
"""Decay exponent of det(I + K) - 1 in N/M, measured two independent ways.

``direct`` uses T / calT - 1 from the two Toeplitz determinants, ``fredholm``
the contour quadrature of ``det(I + AB)``.  The fitted log-log slope is
printed per symbol over consecutive M windows.
"""
import argparse
import csv
import sys

import numpy as np

from fhgas import make_symbol
from fhgas.experiments import loglog_slope
from fhgas.fredholm import fredholm_det
from fhgas.toeplitz import continuum_logdet, expectation_product


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("-N", type=int, default=8)
    p.add_argument("--M", type=int, nargs="+", default=[32, 64, 128, 256, 512])
    p.add_argument("--betas", type=float, nargs="+", default=[0.5, 1.0, 1.5, 3.0])
    p.add_argument("--thetas", type=float, nargs="+", default=[0.0, 0.1])
    p.add_argument("--fredholm", action="store_true", help="also evaluate the contour quadrature")
    args = p.parse_args(argv)

    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["theta", "beta", "M", "direct", "fredholm"])
    summary = []
    for theta in args.thetas:
        for beta in args.betas:
            sym = make_symbol(singularities=[(theta, beta)])
            logTc = continuum_logdet(sym, args.N).log_abs
            direct = []
            for M in args.M:
                d = float(np.expm1(expectation_product(sym, args.N, M).log_abs - logTc))
                f = fredholm_det(sym, args.N, M, hs=False).det_minus_one if args.fredholm else ""
                w.writerow([theta, beta, M, repr(d), repr(f) if f != "" else ""])
                direct.append(d)
            q = [args.N / M for M in args.M]
            slopes = [loglog_slope(q[i:i + 3], direct[i:i + 3]) for i in range(len(q) - 2)]
            summary.append((theta, beta, slopes))
    print("# slope of log|det - 1| vs log(N/M) over sliding 3-point windows", file=sys.stderr)
    for theta, beta, slopes in summary:
        print(f"# theta={theta:<5} beta={beta:<4} " + " ".join(f"{s:6.3f}" for s in slopes), file=sys.stderr)


if __name__ == "__main__":
    main()
