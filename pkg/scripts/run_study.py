"""Run the error-vs-nu simulation study over several seeds and print a win table.

Usage: python3 scripts/run_study.py [--config scripts/configs/study.yaml] [--seeds 0 1 2 3 4] [--out out/study]
"""

import argparse
import csv
from collections import defaultdict
from pathlib import Path

from mtnet import centrality as cm
from mtnet.cli import main


def parse_args():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--config", default=str(Path(__file__).parent / "configs" / "study.yaml"))
    p.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2, 3, 4])
    p.add_argument("--out", default="out/study")
    p.add_argument("--sweeps", type=int)
    p.add_argument("--burn-in", type=int)
    return p.parse_args()


def main_study() -> int:
    args = parse_args()
    wins = defaultdict(int)
    for seed in args.seeds:
        out = Path(args.out) / f"seed{seed}"
        argv = ["simulate", "--config", args.config, "--seed", str(seed), "--out", str(out)]
        if args.sweeps:
            argv += ["--sweeps", str(args.sweeps)]
        if args.burn_in is not None:
            argv += ["--burn-in", str(args.burn_in)]
        code = main(argv)
        if code != 0:
            return code
        with (out / "results.csv").open() as fh:
            for row in csv.DictReader(fh):
                if row["status"] != "ok":
                    continue
                for m in cm.HEADLINE:
                    key = (float(row["nu"]), row["beta_mode"], m)
                    wins[key] += float(row[f"{m}_denoised_mae"]) < float(row[f"{m}_raw_mae"])
    print(f"denoised < raw, out of {len(args.seeds)} seeds")
    print(f"{'nu':>6} {'beta mode':<22}" + "".join(f"{m:>20}" for m in cm.HEADLINE))
    for nu, mode in sorted({(k[0], k[1]) for k in wins}):
        print(f"{nu:6g} {mode:<22}" + "".join(f"{wins[nu, mode, m]:>20d}" for m in cm.HEADLINE))
    return 0


if __name__ == "__main__":
    raise SystemExit(main_study())
