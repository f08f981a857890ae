"""Command-line experiment driver.

    lmbound run CONFIG [--out DIR]
    lmbound sweep CONFIG --dt 4e-5,2e-5,... --reference {self_fine,kkt_fine,pde_fine} [--out DIR]
    lmbound compare CONFIG_A CONFIG_B [--out DIR]

Exit codes: 0 ok (a recorded divergence is still 0), 2 config error, 3 internal error.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .config import ConfigError, RunConfig
from .diagnostics import StepDiagnostics, convergence_order, step_diagnostics
from .integrators import SolverState, integrate

log = logging.getLogger("lmbound")

EXIT_OK, EXIT_CONFIG, EXIT_INTERNAL = 0, 2, 3

# reference mode -> (scheme, corrector, dt); None means "same as the swept config"
REFERENCE_MODES = {
    "self_fine": (None, None, 1e-6),
    "kkt_fine": ("mcn", "lagrange", 1e-6),
    "pde_fine": ("mcn", "none", 1e-7),
}


@dataclass
class RunResult:
    state: SolverState
    rows: list[StepDiagnostics]
    summary: dict


def _summary(cfg: RunConfig, state: SolverState, rows: list[StepDiagnostics]) -> dict:
    return {
        "problem": cfg.problem,
        "scheme": cfg.scheme,
        "corrector": cfg.corrector,
        "conserve_mass": cfg.conserve_mass,
        "dt": cfg.dt,
        "t_final": cfg.t_final,
        "steps": state.n,
        "final_time": state.t,
        "initial_mass": rows[0].mass if rows else None,
        "final_mass": rows[-1].mass if rows else None,
        "min_u": min(r.min_u for r in rows) if rows else None,
        "max_u": max(r.max_u for r in rows) if rows else None,
        "max_secant_iters": max(r.secant_iters for r in rows) if rows else 0,
        "diverged": state.diverged,
        "divergence_time": state.divergence_time,
        "divergence_reason": state.divergence_reason or None,
    }


def write_snapshot(path: Path, u: np.ndarray, cfg: RunConfig, grid, t: float):
    header = {
        "dims": list(u.shape),
        "extent": [list(map(float, e)) for e in grid.extent],
        "t": t,
        "dtype": "<f8",
        "order": "C",
    }
    with open(path, "wb") as fh:
        fh.write((json.dumps(header, sort_keys=True) + "\n").encode("utf-8"))
        fh.write(np.ascontiguousarray(u, dtype="<f8").tobytes(order="C"))


def read_snapshot(path: str | Path) -> tuple[dict, np.ndarray]:
    with open(path, "rb") as fh:
        header = json.loads(fh.readline().decode("utf-8"))
        data = np.frombuffer(fh.read(), dtype="<f8").reshape(header["dims"])
    return header, data


def execute(cfg: RunConfig, out: Optional[Path] = None, *, with_energy: bool = True) -> RunResult:
    """Run one configuration; write artifacts into ``out`` if given."""
    grid = cfg.grid()
    ops = cfg.ops(grid)
    u0 = cfg.initial_data(grid)
    rows: list[StepDiagnostics] = []
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)

    def record(state: SolverState):
        rows.append(step_diagnostics(state, ops, with_energy=with_energy))
        if out is not None and cfg.snapshot_every and state.n % cfg.snapshot_every == 0:
            write_snapshot(out / f"snap_{state.n:08d}.f64", state.u[0], cfg, grid, state.t)

    state = integrate(ops, cfg.scheme_obj(), u0, cfg.dt, cfg.t_final, cfg.corrector, cfg.conserve_mass,
                      callback=record)
    summary = _summary(cfg, state, rows)
    if out is not None:
        with open(out / "diagnostics.csv", "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(StepDiagnostics.columns())
            for r in rows:
                w.writerow(r.row())
        (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return RunResult(state, rows, summary)


def _final_field(cfg: RunConfig) -> np.ndarray:
    res = execute(cfg, None, with_energy=False)
    if res.state.diverged:
        raise RuntimeError(f"run diverged at t={res.state.divergence_time} (dt={cfg.dt})")
    return res.state.u[0]


def reference_config(cfg: RunConfig, mode: str, ref_dt: Optional[float] = None) -> RunConfig:
    if mode not in REFERENCE_MODES:
        raise ConfigError(f"reference mode must be one of {sorted(REFERENCE_MODES)}")
    scheme, corrector, dt = REFERENCE_MODES[mode]
    return cfg.with_(scheme=scheme or cfg.scheme, corrector=corrector or cfg.corrector, dt=ref_dt or dt)


def sweep(cfg: RunConfig, dt_list: Sequence[float], reference_mode: str, out: Optional[Path] = None,
          ref_dt: Optional[float] = None, jobs: int = 1) -> list[tuple[float, float, Optional[float]]]:
    """L-infinity errors at ``t_final`` against a fine reference, with observed orders."""
    dt_list = [float(d) for d in dt_list]
    if not dt_list or any(b >= a for a, b in zip(dt_list, dt_list[1:])):
        raise ConfigError("dt list must be non-empty and strictly decreasing")
    ref_cfg = reference_config(cfg, reference_mode, ref_dt)
    cfgs = [ref_cfg] + [cfg.with_(dt=d) for d in dt_list]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            fields = list(pool.map(_final_field, cfgs))
    else:
        fields = [_final_field(c) for c in cfgs]
    ref, finals = fields[0], fields[1:]
    errors = [float(np.max(np.abs(f - ref))) for f in finals]
    orders: list[Optional[float]] = [None] + convergence_order(list(zip(dt_list, errors)))
    table = list(zip(dt_list, errors, orders))
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "errors.csv", "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["dt", "linf_error", "order"])
            for d, e, o in table:
                w.writerow([repr(d), repr(e), "" if o is None else repr(o)])
    return table


def compare(cfg_a: RunConfig, cfg_b: RunConfig, out: Optional[Path] = None) -> dict:
    """Final-time difference between two runs on the same grid."""
    ra, rb = execute(cfg_a), execute(cfg_b)
    ua, ub = ra.state.u[0], rb.state.u[0]
    if ua.shape != ub.shape:
        raise ConfigError("compared runs must share a grid")
    diff = ua - ub
    result = {
        "linf_difference": float(np.max(np.abs(diff))),
        "l2_difference": float(math.sqrt(np.sum(cfg_a.grid().weights * diff * diff))),
        "a": ra.summary,
        "b": rb.summary,
    }
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        (out / "compare.json").write_text(json.dumps(result, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return result


def _parse_dt_list(text: str) -> list[float]:
    try:
        return [float(t) for t in text.replace(" ", "").split(",") if t]
    except ValueError:
        raise ConfigError(f"bad --dt list {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="lmbound", description="Bound-preserving IMEX spectral solver runs.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="single run with diagnostics and snapshots")
    r.add_argument("config")
    r.add_argument("--out")

    s = sub.add_parser("sweep", help="time-step refinement study")
    s.add_argument("config")
    s.add_argument("--dt", required=True, help="comma-separated, strictly decreasing")
    s.add_argument("--reference", required=True, choices=sorted(REFERENCE_MODES))
    s.add_argument("--ref-dt", type=float, default=None, help="override the reference time step")
    s.add_argument("--jobs", type=int, default=1)
    s.add_argument("--out")

    c = sub.add_parser("compare", help="final-time difference between two configs")
    c.add_argument("config_a")
    c.add_argument("config_b")
    c.add_argument("--out")
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        if args.command == "run":
            cfg = RunConfig.load(args.config)
            out = Path(args.out or cfg.output)
            res = execute(cfg, out)
            if res.state.diverged:
                log.warning("run diverged at t=%g (%s)", res.state.divergence_time, res.state.divergence_reason)
            print(json.dumps(res.summary, sort_keys=True))
        elif args.command == "sweep":
            cfg = RunConfig.load(args.config)
            out = Path(args.out or cfg.output)
            table = sweep(cfg, _parse_dt_list(args.dt), args.reference, out, args.ref_dt, args.jobs)
            for d, e, o in table:
                print(f"{d:.3e}  {e:.4e}  {'' if o is None else f'{o:.2f}'}")
        else:
            a, b = RunConfig.load(args.config_a), RunConfig.load(args.config_b)
            out = Path(args.out) if args.out else None
            res = compare(a, b, out)
            print(json.dumps({k: res[k] for k in ("linf_difference", "l2_difference")}))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001 - reported as an internal failure
        log.debug("internal error", exc_info=True)
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
