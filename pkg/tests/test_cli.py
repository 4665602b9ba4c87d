import json

import numpy as np
import pytest

from kinklab.cli import main


def run_cli(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_check_all_pairs(capsys):
    code, out, _ = run_cli(capsys, "check", "--family", "phi6",
                           "--all-pairs")
    assert code == 0
    assert "SatisfiedAtRightEnd" in out
    assert "SatisfiedAtLeftEnd" in out


def test_check_sg_note(capsys):
    code, out, _ = run_cli(capsys, "check", "--family", "sg",
                           "--pair", "0 6.283185307179586")
    assert code == 0
    assert "Constant" in out
    assert "trivially" in out


def test_check_named_pair_endpoint(capsys):
    code, out, _ = run_cli(capsys, "check", "--family", "phi8", "--m", "3",
                           "--pair", "1,m")
    assert code == 0
    assert "SatisfiedAtRightEnd" in out


def test_invalid_family_exits_2(capsys):
    code, _, err = run_cli(capsys, "check", "--family", "nosuch",
                           "--all-pairs")
    assert code == 2


def test_missing_pair_exits_2(capsys):
    code, _, _ = run_cli(capsys, "check", "--family", "phi6")
    assert code == 2


def test_json_output(capsys):
    code, out, _ = run_cli(capsys, "--json", "check", "--family", "phi4",
                           "--pair", "-1 1")
    assert code == 0
    rows = json.loads(out)
    assert rows[0]["classification"] == "Inconclusive"


def test_wells_csv(capsys, tmp_path):
    path = str(tmp_path / "wells.csv")
    code, _, _ = run_cli(capsys, "wells", "--family", "phi8", "--m", "1.5",
                         "--out", path)
    assert code == 0
    text = open(path).read()
    assert text.startswith("# kinklab-csv v1 wells")
    assert text.count("\n") == 5   # header + columns + 3 pairs


def test_kink_subcommand(capsys, tmp_path):
    path = str(tmp_path / "k.csv")
    code, out, _ = run_cli(capsys, "kink", "--family", "phi4",
                           "--pair", "-1 1", "--dx", "0.02", "--out", path)
    assert code == 0
    data = np.loadtxt(path, delimiter=",", skiprows=2)
    assert data.shape[1] == 7


def test_sweep_threshold_no_flip_exits_3(capsys):
    code, _, err = run_cli(capsys, "sweep", "--family", "phi8",
                           "--param", "m", "--lo", "2.5", "--hi", "3.0",
                           "--pair", "-1 1", "--threshold")
    assert code == 3


def test_sweep_table(capsys):
    code, out, _ = run_cli(capsys, "--threads", "2", "sweep",
                           "--family", "phi8", "--param", "m",
                           "--lo", "1.5", "--hi", "2.5", "--steps", "5",
                           "--pair", "-1 1")
    assert code == 0
    assert "SatisfiedAtPoint" in out
    assert "Inconclusive" in out


def test_figures_deterministic(capsys, tmp_path):
    d1, d2 = str(tmp_path / "a"), str(tmp_path / "b")
    for d in (d1, d2):
        code, _, _ = run_cli(capsys, "figures", "--which", "phi8",
                             "--n", "120", "--out", d)
        assert code == 0
    for name in ("phi8_signgrid.csv", "phi8_contour.csv"):
        b1 = open("%s/%s" % (d1, name), "rb").read()
        b2 = open("%s/%s" % (d2, name), "rb").read()
        assert b1 == b2


def test_spectrum_subcommand(capsys, tmp_path):
    path = str(tmp_path / "spec.csv")
    code, out, _ = run_cli(capsys, "spectrum", "--family", "phi4",
                           "--pair", "-1 1", "--R", "7", "--dx", "0.02",
                           "--kcount", "2", "--out", path)
    assert code == 0
    assert "richardson-extrapolated" in out
    assert (tmp_path / "spec.csv").exists()
    assert (tmp_path / "spec_convergence.csv").exists()


def test_simulate_cfl_exits_2(capsys, tmp_path):
    cfg = tmp_path / "bad.ini"
    cfg.write_text("[grid]\ndx = 0.02\ndt = 0.05\n")
    code, _, err = run_cli(capsys, "simulate", str(cfg))
    assert code == 2
    assert "CFL" in err


def test_simulate_short_run(capsys, tmp_path):
    cfg = tmp_path / "run.ini"
    cfg.write_text(
        "[model]\nfamily = phi6\npair = 0 1\n"
        "[grid]\ndx = 0.1\nt_end = 2\nboundary = sponge\n"
        "[output]\ndir = %s\n" % (tmp_path / "out"))
    code, out, _ = run_cli(capsys, "simulate", str(cfg))
    assert code == 0
    assert "decay ratio" in out
    assert (tmp_path / "out" / "track.csv").exists()


def test_report_regenerates_table(capsys):
    code, out, _ = run_cli(capsys, "report")
    assert code == 0
    # a few sentinel rows of the classification table
    assert "Constant" in out
    assert out.count("Inconclusive") >= 6
    assert "SatisfiedAtPoint" in out
