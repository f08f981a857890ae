import csv
import json

import numpy as np
import pytest

from lmbound.cli import main, read_snapshot, sweep
from lmbound.config import ConfigError, RunConfig


def write_cfg(path, **kw):
    base = {"problem": "heat", "scheme": "bdf2", "points": [16], "dt": 0.01, "t_final": 0.1}
    base.update(kw)
    path.write_text(json.dumps(base))
    return path


def test_config_rejects_unknown_keys():
    with pytest.raises(ConfigError):
        RunConfig.from_dict({"problem": "heat", "points": [8], "colour": "red"})
    with pytest.raises(ConfigError):
        RunConfig.from_dict({"problem": "heat", "points": [8], "params": {"epsilon2": 1}})


@pytest.mark.parametrize(
    "bad",
    [
        {"problem": "navier_stokes"},
        {"problem": "heat", "points": [8], "scheme": "rk4"},
        {"problem": "heat", "points": [8], "corrector": "soft"},
        {"problem": "heat", "points": [8], "dt": 0.03, "t_final": 0.1},
        {"problem": "fokker_planck", "points": [8, 8]},
        {"problem": "allen_cahn", "points": [8]},
        {"problem": "heat", "points": [8], "dt": -1.0},
        {"problem": "cahn_hilliard", "points": [8, 8], "params": {"delta": 2.0}},
        {"scheme": "bdf1"},
    ],
)
def test_config_validation(bad):
    with pytest.raises(ConfigError):
        RunConfig.from_dict(bad)


def test_run_writes_artifacts(tmp_path):
    cfg = write_cfg(tmp_path / "c.json", snapshot_every=5, corrector="lagrange")
    out = tmp_path / "out"
    assert main(["run", str(cfg), "--out", str(out)]) == 0
    rows = list(csv.reader(open(out / "diagnostics.csv")))
    assert rows[0] == ["t", "mass", "min_u", "max_u", "energy", "max_lambda", "xi", "secant_iters",
                       "stability_functional"]
    assert len(rows) == 12
    summary = json.loads((out / "summary.json").read_text())
    assert summary["diverged"] is False and summary["steps"] == 10
    assert "wall" not in json.dumps(summary)
    header, data = read_snapshot(out / "snap_00000010.f64")
    assert header["dims"] == [16] and header["t"] == pytest.approx(0.1)
    assert data.dtype == np.dtype("<f8")
    assert sorted(p.name for p in out.glob("snap_*")) == ["snap_00000000.f64", "snap_00000005.f64",
                                                            "snap_00000010.f64"]


def test_run_is_deterministic(tmp_path):
    cfg = write_cfg(tmp_path / "c.json", problem="fokker_planck", points=[16], dt=1e-3, t_final=0.02,
                    conserve_mass=True)
    main(["run", str(cfg), "--out", str(tmp_path / "a")])
    main(["run", str(cfg), "--out", str(tmp_path / "b")])
    for name in ("diagnostics.csv", "summary.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_bound_columns_stay_inside(tmp_path):
    cfg = write_cfg(tmp_path / "c.json", problem="fokker_planck", points=[32], dt=1e-4, t_final=0.01)
    main(["run", str(cfg), "--out", str(tmp_path / "o")])
    for r in csv.DictReader(open(tmp_path / "o" / "diagnostics.csv")):
        assert 0.0 <= float(r["min_u"]) <= float(r["max_u"]) <= 1.0


def test_exit_codes(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"problem": "heat", "bogus": 1}')
    assert main(["run", str(bad)]) == 2
    assert main(["run", str(tmp_path / "missing.json")]) == 2
    assert main(["bogus-command"]) == 2
    cfg = write_cfg(tmp_path / "c.json")
    assert main(["sweep", str(cfg), "--dt", "0.01,0.02", "--reference", "self_fine"]) == 2


def test_sweep_writes_orders(tmp_path):
    cfg = RunConfig.from_dict({"problem": "heat", "scheme": "bdf2", "points": [16], "dt": 0.01, "t_final": 0.2,
                               "corrector": "none"})
    table = sweep(cfg, [0.02, 0.01, 0.005], "self_fine", tmp_path, ref_dt=0.02 / 64)
    assert table[0][2] is None
    assert all(1.8 < o < 2.3 for _, _, o in table[1:])
    rows = list(csv.reader(open(tmp_path / "errors.csv")))
    assert rows[0] == ["dt", "linf_error", "order"] and len(rows) == 4


def test_compare(tmp_path):
    a = write_cfg(tmp_path / "a.json", corrector="lagrange")
    b = write_cfg(tmp_path / "b.json", corrector="cutoff")
    assert main(["compare", str(a), str(b), "--out", str(tmp_path / "cmp")]) == 0
    res = json.loads((tmp_path / "cmp" / "compare.json").read_text())
    # heat data stays inside the bounds, so both correctors are inactive
    assert res["linf_difference"] == 0.0
