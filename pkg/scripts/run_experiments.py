#!/usr/bin/env python3
"""Run every config in configs/ through the CLI and write CSVs to a results directory."""
import argparse
import pathlib
import sys
import time

from fhgas.cli import main as fhgas_main

ROOT = pathlib.Path(__file__).resolve().parent.parent


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--configs", default=str(ROOT / "configs"))
    p.add_argument("--out-dir", default=str(ROOT / "results"))
    p.add_argument("--only", nargs="*", help="experiment ids to run, e.g. e1 e2")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--resume", action="store_true")
    args = p.parse_args(argv)

    out_dir = pathlib.Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    worst = 0
    for cfg in sorted(pathlib.Path(args.configs).glob("e*.*")):
        exp = cfg.name.split("_")[0]
        if args.only and exp not in args.only:
            continue
        target = out_dir / (cfg.stem + ".csv")
        cmd = [exp, "--config", str(cfg), "--out", str(target), "--reproducible", "--threads", str(args.threads)]
        if args.resume:
            cmd.append("--resume")
        t0 = time.perf_counter()
        code = fhgas_main(cmd)
        print(f"{exp}  exit {code}  {time.perf_counter() - t0:7.1f}s  -> {target}")
        worst = max(worst, code)
    return worst


if __name__ == "__main__":
    sys.exit(main())
