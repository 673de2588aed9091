#!/usr/bin/env python3
"""Discrete and continuum determinants over the Fisher-Hartwig prediction as N grows."""
import argparse
import csv
import math
import sys

from fhgas import make_symbol
from fhgas.asymptotics import fh_prediction
from fhgas.experiments import m_from_rule
from fhgas.toeplitz import continuum_logdet, expectation_product


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--symbol", default='{"singularities": [[0, 1.0]]}', help="JSON symbol record")
    p.add_argument("-N", type=int, nargs="+", default=[8, 16, 32, 64])
    p.add_argument("--M-rule", default="square", choices=["fixed", "multiple", "square", "q"])
    p.add_argument("--M-param", type=float, default=None)
    args = p.parse_args(argv)

    from fhgas.symbol import FHSymbol

    sym = FHSymbol.from_json(args.symbol)
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["N", "M", "log_prediction", "ratio_discrete", "ratio_continuum"])
    for N in args.N:
        M = m_from_rule(N, args.M_rule, args.M_param)
        pred = fh_prediction(sym, N).log_value
        rd = math.exp(expectation_product(sym, N, M).log_abs - pred)
        rc = math.exp(continuum_logdet(sym, N).log_abs - pred)
        w.writerow([N, M, repr(pred), repr(rd), repr(rc)])


if __name__ == "__main__":
    main()
