"""Temporal accuracy of the bounded Allen-Cahn schemes against fine discrete references.

Writes one errors.csv per column under --out and prints the table.
"""
import argparse
from pathlib import Path

from lmbound.cli import sweep
from lmbound.config import RunConfig

DTS = [4e-5, 2e-5, 1e-5, 5e-6, 2.5e-6]

BASE = {
    "problem": "allen_cahn",
    "points": [128, 128],
    "t_final": 0.01,
    "params": {"epsilon2": 0.001, "stabilization": 0.0, "ic_epsilon": 0.001},
}

# (label, scheme, corrector, reference mode)
COLUMNS = [
    ("bdf1_lm", "bdf1", "lagrange", "kkt_fine"),
    ("bdf2_lm", "bdf2", "lagrange", "kkt_fine"),
    ("mcn_cutoff", "mcn", "cutoff", "self_fine"),
]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="results/accuracy_discrete_ref")
    ap.add_argument("--jobs", type=int, default=1)
    args = ap.parse_args()
    for label, scheme, corrector, ref in COLUMNS:
        cfg = RunConfig.from_dict({**BASE, "scheme": scheme, "corrector": corrector})
        table = sweep(cfg, DTS, ref, Path(args.out) / label, jobs=args.jobs)
        print(label)
        for dt, err, order in table:
            print(f"  dt={dt:.2e}  err={err:.3e}  order={'' if order is None else f'{order:.2f}'}")


if __name__ == "__main__":
    main()
