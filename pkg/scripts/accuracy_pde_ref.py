"""Second-order bounded schemes measured against an unconstrained dt = 1e-7 reference.

The reference run is slow (about five minutes on one core).
"""
import argparse
from pathlib import Path

from lmbound.cli import sweep
from lmbound.config import RunConfig
from accuracy_discrete_ref import BASE, DTS


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="results/accuracy_pde_ref")
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--smooth", action="store_true", help="use the default interface width instead")
    args = ap.parse_args()
    base = dict(BASE)
    if args.smooth:
        base["params"] = {"epsilon2": 0.001, "stabilization": 0.0}
    for corrector in ("lagrange", "cutoff"):
        cfg = RunConfig.from_dict({**base, "scheme": "mcn", "corrector": corrector})
        table = sweep(cfg, DTS, "pde_fine", Path(args.out) / corrector, jobs=args.jobs)
        print(corrector)
        for dt, err, order in table:
            print(f"  dt={dt:.2e}  err={err:.3e}  order={'' if order is None else f'{order:.2f}'}")


if __name__ == "__main__":
    main()
