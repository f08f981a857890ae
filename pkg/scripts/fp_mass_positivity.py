"""Fokker-Planck: mass drift and positivity for the three corrector settings."""
import argparse
from pathlib import Path

from lmbound.cli import execute
from lmbound.config import RunConfig


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--points", type=int, default=32)
    ap.add_argument("--dt", type=float, default=1e-4)
    ap.add_argument("--t-final", type=float, default=0.4)
    ap.add_argument("--out", default="results/fp")
    args = ap.parse_args()
    base = {"problem": "fokker_planck", "scheme": "bdf2", "points": [args.points], "dt": args.dt,
            "t_final": args.t_final}
    runs = {
        "none": {"corrector": "none"},
        "lm": {"corrector": "lagrange"},
        "lm_mass": {"corrector": "lagrange", "conserve_mass": True},
    }
    for name, extra in runs.items():
        res = execute(RunConfig.from_dict({**base, **extra}), Path(args.out) / name)
        m0 = res.rows[0].mass
        drift = max(abs(r.mass - m0) for r in res.rows) / abs(m0)
        neg = next((r.t for r in res.rows if r.min_u < 0), None)
        iters = max(r.secant_iters for r in res.rows)
        print(f"{name:8s} max relative mass drift {drift:.2e}  min {min(r.min_u for r in res.rows):.3e}  "
              f"first negative t={neg}  max secant iterations {iters}")


if __name__ == "__main__":
    main()
