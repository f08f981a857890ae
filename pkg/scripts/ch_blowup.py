"""Cahn-Hilliard with and without the bound corrector, from the same random field.

Prints when (if ever) the unconstrained run leaves the log-potential domain
and the extreme values reached by each run.
"""
import argparse
from pathlib import Path

from lmbound.cli import execute
from lmbound.config import RunConfig


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--t-final", type=float, default=0.1)
    ap.add_argument("--dt", type=float, default=1e-5)
    ap.add_argument("--out", default="results/ch_blowup")
    args = ap.parse_args()
    base = {"problem": "cahn_hilliard", "scheme": "bdf2", "points": [128, 128], "dt": args.dt,
            "t_final": args.t_final, "seed": args.seed}
    for corrector in ("none", "lagrange"):
        cfg = RunConfig.from_dict({**base, "corrector": corrector})
        res = execute(cfg, Path(args.out) / corrector, with_energy=False)
        lo = min(r.min_u for r in res.rows)
        hi = max(r.max_u for r in res.rows)
        status = f"diverged at t={res.state.divergence_time}" if res.state.diverged else f"reached t={res.state.t:.4g}"
        print(f"{corrector:9s} {status}  min={lo:.6f} max={hi:.6f}")


if __name__ == "__main__":
    main()
