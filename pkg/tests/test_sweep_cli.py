from __future__ import annotations

import csv
import io
import json
import math

import numpy as np
import pytest

from qcorr import cli, sweep
from qcorr.chain import ChainParams, factorizing_field, ground_sector
from qcorr.errors import DomainError, NumericalError
from qcorr.measures import entanglement_of_formation, renyi_deficit_from_tsallis
from qcorr.sweep import (
    SweepConfig, evaluation_points, parse_measures, render, run_sweep,
    scan_measurement_transition, transitions_to_csv,
)


def _table(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_measure_names_are_canonicalised():
    assert parse_measures("gamma_D, IRq(2),Iq(3),Iq(0.5),C,I2") == (
        "C", "I2", "Iq(0.5)", "Iq(3)", "IRq(2)", "gamma_D")
    for bad in ["", "X", "Iq(-1)", "Iq(abc)", "IRq(1)"]:
        with pytest.raises(DomainError, match="measures"):
            parse_measures(bad)


@pytest.mark.parametrize("kwargs,field", [
    ({"n": 7}, "n"), ({"chi": 1.5}, "chi"), ({"jx": 0.0}, "jx"),
    ({"b_min": 2.0}, "b_min"), ({"b_min": -1.0}, "b_min"), ({"b_steps": 0}, "b_steps"),
    ({"separations": (0,)}, "separations"), ({"separations": (6,)}, "separations"),
    ({"output_format": "xml"}, "output_format"), ({"side_limits": "up"}, "side_limits"),
])
def test_config_errors_name_the_field(kwargs, field):
    base = {"n": 10, "chi": 0.5}
    base.update(kwargs)
    with pytest.raises(DomainError, match=field):
        SweepConfig(**base)


def test_header_order():
    cfg = SweepConfig(6, 0.5, b_steps=2, measures="gamma_I2,I1,IRq(2),C,Iq(2)")
    head = render(cfg, run_sweep(cfg)).splitlines()[0]
    assert head == "B,L,parity,C,I1,Iq(2),IRq(2),gamma_I2,flags"


def test_output_is_deterministic_and_thread_independent(monkeypatch):
    cfg = SweepConfig(10, 0.5, b_min=0.05, b_max=1.2, b_steps=23,
                      measures="C,E,D,I1,I2,Iq(2),gamma_D")
    one = render(cfg, run_sweep(cfg, workers=1))
    assert render(cfg, run_sweep(cfg, workers=1)) == one
    monkeypatch.setenv("QCORR_THREADS", "3")
    assert render(cfg, run_sweep(cfg)) == one


def test_bad_thread_variable(monkeypatch):
    monkeypatch.setenv("QCORR_THREADS", "many")
    with pytest.raises(DomainError):
        run_sweep(SweepConfig(6, 0.5, b_steps=2))


def test_row_ordering_and_count():
    cfg = SweepConfig(8, 0.5, b_min=0.8, b_max=1.4, b_steps=7, separations="1,3")
    rows = run_sweep(cfg)
    assert len(rows) == 14
    assert [(r.B, r.L) for r in rows] == sorted((r.B, r.L) for r in rows)


def test_column_algebra():
    cfg = SweepConfig(12, 0.4, b_min=0.05, b_max=1.5, b_steps=15,
                      measures="C,E,Iq(2),Iq(0.5),IRq(2),IRq(0.5),I2")
    table = _table(render(cfg, run_sweep(cfg)))
    for row in table:
        c = float(row["C"])
        assert float(row["E"]) == pytest.approx(entanglement_of_formation(c), abs=1e-11)
        assert float(row["Iq(2)"]) == pytest.approx(float(row["I2"]), abs=1e-11)


def test_renyi_columns_follow_from_tsallis_columns():
    from qcorr.chain import pair_rdm
    from qcorr.entropy import EntropyFunctional, eval_entropy
    from qcorr.measures import x_state_spectrum
    cfg = SweepConfig(12, 0.4, b_min=0.1, b_max=1.5, b_steps=8, separations="2",
                      measures="Iq(2),IRq(2),Iq(3),IRq(3)")
    for r in run_sweep(cfg):
        x = pair_rdm(cfg.params.with_field(r.B), r.parity, r.L)
        for q in (2.0, 3.0):
            sq = eval_entropy(x_state_spectrum(x), EntropyFunctional.tsallis(q))
            expected = renyi_deficit_from_tsallis(r.values[f"Iq({q:g})"], q, sq)
            assert r.values[f"IRq({q:g})"] == pytest.approx(expected, abs=1e-9)


def _crossing_fields(rows):
    return sorted({r.B for r in rows if "crossing" in r.flags})


def test_crossing_markers_sit_where_the_ground_sector_flips():
    cfg = SweepConfig(10, 0.5, b_min=0.01, b_max=1.5, b_steps=120, separations="1")
    rows = run_sweep(cfg)
    grid = cfg.fields()
    par = [ground_sector(cfg.params.with_field(b)).parity for b in grid]
    flips = [(grid[i], grid[i + 1]) for i in range(len(grid) - 1) if par[i] != par[i + 1]]
    marks = _crossing_fields(rows)
    assert len(marks) == len(flips) == 5
    for b, (lo, hi) in zip(marks, flips):
        assert lo <= b <= hi
    bs = factorizing_field(cfg.params)
    assert marks[-1] == pytest.approx(bs, abs=1e-10)
    assert all(b <= bs + 1e-10 for b in marks)


def test_side_limit_rows_carry_both_sectors():
    cfg = SweepConfig(10, 0.5, b_min=0.5, b_max=1.0, b_steps=6, separations="2")
    rows = [r for r in run_sweep(cfg) if "crossing" in r.flags]
    assert [r.flags[-1] for r in rows] == ["left-limit", "right-limit"] * 3
    for lft, rgt in zip(rows[::2], rows[1::2]):
        assert lft.B == rgt.B and lft.parity == -rgt.parity
    left = SweepConfig(10, 0.5, b_min=0.5, b_max=1.0, b_steps=6, separations="2",
                       side_limits="left")
    assert [r.flags[-1] for r in run_sweep(left) if "crossing" in r.flags] == ["left-limit"] * 3


def test_exact_crossing_on_grid_point():
    bs = math.sqrt(0.5)
    cfg = SweepConfig(40, 0.5, b_min=bs, b_max=bs, b_steps=1, measures="I2,C")
    rows = run_sweep(cfg)
    assert len(rows) == 40
    assert all("degenerate" in r.flags and "crossing" in r.flags for r in rows)
    for side in ("left-limit", "right-limit"):
        vals = [r.values["I2"] for r in rows if side in r.flags]
        assert len(vals) == 20
        assert max(vals) - min(vals) < 1e-8
        assert np.mean(vals) == pytest.approx(0.125, abs=1e-5)


def test_discord_angle_is_transverse():
    cfg = SweepConfig(40, 0.5, b_min=0.05, b_max=1.5, b_steps=12, measures="gamma_D")
    for r in run_sweep(cfg):
        assert r.values["gamma_D"] == pytest.approx(math.pi / 2, abs=1e-3)


def test_json_output():
    cfg = SweepConfig(6, 0.5, b_steps=3, measures="C,I2", output_format="json")
    doc = json.loads(render(cfg, run_sweep(cfg)))
    assert doc["meta"]["n"] == 6 and doc["meta"]["b_steps"] == 3
    assert doc["meta"]["measures"] == ["C", "I2"] and "version" in doc["meta"]
    assert set(doc["rows"][0]) == {"B", "L", "parity", "C", "I2", "flags"}


def test_numerical_failure_becomes_error_row(monkeypatch):
    def boom(x):
        raise NumericalError("synthetic failure")

    monkeypatch.setattr(sweep, "quantum_discord", boom)
    cfg = SweepConfig(6, 0.5, b_min=1.0, b_max=1.5, b_steps=2, measures="C,D")
    rows = run_sweep(cfg)
    assert len(rows) == 6 and all(r.error == "synthetic failure" for r in rows)
    assert all(math.isnan(float(t["D"])) for t in _table(render(cfg, rows)))


def test_transition_results():
    cfg = SweepConfig(40, 0.5, b_min=0.0, b_max=1.5, b_steps=61, separations="1,5",
                      transition_scan=True)
    res = scan_measurement_transition(cfg)
    i2 = [r for r in res if r.kind == "I2"]
    assert all(0.6 <= r.start <= 0.7 and r.start == r.end for r in i2)
    i1 = [r for r in res if r.kind == "I1"]
    assert all(r.status == "ok" and r.start < r.end for r in i1)
    text = transitions_to_csv([(0.5, res)])
    assert text.splitlines()[0] == "chi,L,kind,start,end,status"


def test_transition_missing_window():
    cfg = SweepConfig(20, 0.5, b_min=1.0, b_max=1.5, b_steps=11, separations="1")
    (r,) = scan_measurement_transition(cfg, ("I2",))
    assert r.status == "no transition" and math.isnan(r.start)
    with pytest.raises(DomainError):
        scan_measurement_transition(SweepConfig(20, 0.0, b_steps=3), ("I2",))


def test_xx_transition_depends_on_separation():
    cfg = SweepConfig(40, 1.0, b_min=0.0, b_max=1.5, b_steps=61, separations="1,4,10")
    fields = [r.start for r in scan_measurement_transition(cfg, ("I2",))]
    assert max(fields) - min(fields) > 0.1


# ---- command line ---------------------------------------------------------

def test_cli_sweep_writes_csv(tmp_path, capsys):
    out = tmp_path / "s.csv"
    code = cli.main(["sweep", "--n", "6", "--chi", "0.5", "--b-steps", "3",
                     "--measures", "C,I2", "--out", str(out)])
    assert code == 0
    assert out.read_text().startswith("B,L,parity,C,I2,flags\n")


def test_cli_flags_override_config(tmp_path, capsys):
    conf = tmp_path / "run.conf"
    conf.write_text("# sweep settings\nn = 8\nchi = 0.5\nb-steps = 4\nmeasures = C\nL = 1,2\n")
    assert cli.main(["sweep", "--config", str(conf), "--b-steps", "2"]) == 0
    table = _table(capsys.readouterr().out)
    assert len(table) == 4 and set(table[0]) == {"B", "L", "parity", "C", "flags"}


@pytest.mark.parametrize("argv", [
    ["sweep", "--n", "7", "--chi", "0.5"],
    ["sweep", "--chi", "0.5"],
    ["sweep", "--n", "6", "--chi", "0.5", "--measures", "Q"],
    ["transition", "--n", "10", "--kinds", "I3"],
    ["sweep", "--config", "/nonexistent/file.conf"],
])
def test_cli_usage_errors(argv, capsys):
    assert cli.main(argv) == 1
    assert "error" in capsys.readouterr().err


def test_cli_argparse_errors_exit_with_usage_code():
    with pytest.raises(SystemExit) as exc:
        cli.main(["sweep", "--n", "six"])
    assert exc.value.code == 1


def test_cli_bad_config_line(tmp_path):
    conf = tmp_path / "bad.conf"
    conf.write_text("n 8\n")
    assert cli.main(["sweep", "--config", str(conf)]) == 1
    conf.write_text("colour = red\n")
    assert cli.main(["sweep", "--config", str(conf)]) == 1


def test_cli_numerical_failure_exit_code(monkeypatch, capsys):
    def boom(x):
        raise NumericalError("synthetic failure")

    monkeypatch.setattr(sweep, "quantum_discord", boom)
    assert cli.main(["sweep", "--n", "6", "--chi", "0.5", "--b-steps", "2",
                     "--measures", "D"]) == 2
    assert "synthetic failure" in capsys.readouterr().err


def test_cli_transition(capsys):
    code = cli.main(["transition", "--n", "12", "--chi-min", "0.5", "--chi-max", "0.5",
                     "--chi-steps", "1", "--b-steps", "31", "--L", "1", "--kinds", "I2"])
    assert code == 0
    (row,) = _table(capsys.readouterr().out)
    assert row["kind"] == "I2" and row["status"] == "ok"


def test_cli_oracle_check(capsys):
    assert cli.main(["oracle-check", "--n", "4"]) == 0
    assert "worst deviation" in capsys.readouterr().out


def test_negative_field_grid_is_mirrored():
    cfg = SweepConfig(8, 0.5, b_min=-1.0, b_max=-0.2, b_steps=5, separations="1",
                      measures="C", output_format="json")
    doc = json.loads(render(cfg, run_sweep(cfg)))
    assert doc["meta"]["negative_fields_mirrored"] is True
    pos = run_sweep(SweepConfig(8, 0.5, b_min=0.2, b_max=1.0, b_steps=5, separations="1",
                                measures="C"))
    neg = [r for r in run_sweep(cfg) if "crossing" not in r.flags]
    pos = [r for r in pos if "crossing" not in r.flags]
    assert sorted(r.values["C"] for r in neg) == pytest.approx(sorted(r.values["C"] for r in pos))


def test_evaluation_points_without_crossings():
    cfg = SweepConfig(10, 0.5, b_min=1.0, b_max=1.5, b_steps=6)
    pts = evaluation_points(cfg)
    assert len(pts) == 6 and all(p.parity == 1 and not p.flags for p in pts)


def test_transition_scan_over_configs_is_worker_independent():
    cfgs = [SweepConfig(12, chi, b_steps=31, separations="1,3", transition_scan=True)
            for chi in (0.3, 0.6)]
    serial = sweep.scan_transitions(cfgs, ("I2",), workers=1)
    assert sweep.scan_transitions(cfgs, ("I2",), workers=2) == serial
    assert serial[0] == scan_measurement_transition(cfgs[0], ("I2",))
