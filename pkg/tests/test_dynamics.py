import math

import numpy as np
import pytest

from kinklab import (DynamicsError, boost, conserved, local_distance,
                     make_state, modulate, rho_functional, run, step)
from kinklab.dynamics import (ModulationError, RunConfig, load_snapshot,
                              save_snapshot)


def test_static_kink_energy(phi6_kink_wide):
    s = make_state(phi6_kink_wide, 0.0, 0.0, 30.0, 0.02, "clamped")
    E, P, M = conserved(s)
    h = phi6_kink_wide.norm_Hp_sq
    # trapezoid + centered differences carry O(dx^2) quadrature error
    assert E == pytest.approx(h, rel=2e-4)
    assert abs(P) < 1e-12
    assert M == pytest.approx(h * h, rel=4e-4)


def test_traveling_kink_second_order(phi4_kink):
    c, T = 0.5, 5.0

    def err(dx):
        s = make_state(phi4_kink, c0=c, y0=0.0, R_dom=25.0, dx=dx,
                       boundary="clamped")
        dt = 0.5 * dx
        s = step(s, dt, int(round(T / dt)))
        bk = boost(phi4_kink, c)
        p1, _ = bk.fields(s.x, c * T)
        mask = np.abs(s.x) < 15.0
        return float(np.max(np.abs(s.phi1[mask] - p1[mask])))

    e1, e2 = err(0.04), err(0.02)
    assert 1.9 <= math.log2(e1 / e2) <= 2.1


def test_clamped_time_reversible(phi6_kink_wide):
    pert = {"type": "gaussian", "amplitude": 0.05, "width": 1.0}
    s0 = make_state(phi6_kink_wide, 0.0, 0.0, 30.0, 0.05, "clamped", pert)
    s1 = step(s0, 0.04, 200)
    back = s1.copy()
    back.phi2 = -back.phi2
    s2 = step(back, 0.04, 200)
    assert np.max(np.abs(s2.phi1 - s0.phi1)) < 1e-10
    assert np.max(np.abs(s2.phi2 + s0.phi2)) < 1e-10


def test_sponge_dissipates(phi6_kink_wide):
    pert = {"type": "gaussian", "amplitude": 0.05, "width": 1.0}
    s = make_state(phi6_kink_wide, 0.0, 0.0, 30.0, 0.05, "sponge", pert)
    E0, _, _ = conserved(s)
    s = step(s, 0.04, 2000)
    E1, _, _ = conserved(s)
    assert E1 < E0


def test_cfl_guard(phi6_kink_wide):
    s = make_state(phi6_kink_wide, 0.0, 0.0, 20.0, 0.02, "clamped")
    with pytest.raises(DynamicsError):
        step(s, 0.05)


def test_perturbation_validation(phi6_kink_wide):
    with pytest.raises(DynamicsError):
        make_state(phi6_kink_wide, 0.0, 0.0, 30.0, 0.05, "clamped",
                   {"type": "gaussian", "amplitude": 2.0})
    with pytest.raises(DynamicsError):
        make_state(phi6_kink_wide, 0.0, 0.0, 30.0, 0.05, "clamped",
                   {"type": "gaussian", "amplitude": 0.01, "center": 14.0})
    with pytest.raises(DynamicsError):
        make_state(phi6_kink_wide, 0.0, 0.0, 30.0, 0.05, "fancy")


def test_modulate_heuristic_rescue(phi6_kink_wide):
    # bad initial guess: the heuristic (midpoint crossing + momentum)
    # restarts Newton successfully
    s = make_state(phi6_kink_wide, c0=0.3, y0=-5.0, R_dom=40.0, dx=0.02,
                   boundary="clamped")
    mr = modulate(s, guess=(-0.9, 12.0))
    assert mr.c == pytest.approx(0.3, abs=1e-9)
    assert mr.y == pytest.approx(-5.0, abs=1e-9)


def test_modulate_raises_on_broken_field(phi6_kink_wide):
    s = make_state(phi6_kink_wide, 0.0, 0.0, 30.0, 0.05, "clamped")
    s.phi1 = s.phi1.copy()
    s.phi1[10] = np.nan
    with pytest.raises(ModulationError):
        modulate(s)


def test_local_distance_zero_on_kink(phi6_kink_wide):
    s = make_state(phi6_kink_wide, c0=0.2, y0=1.0, R_dom=30.0, dx=0.02,
                   boundary="clamped")
    assert local_distance(s, 0.2, 1.0, 10.0) < 1e-7
    assert rho_functional(s, 0.2, 1.0) < 1e-14


def test_snapshot_roundtrip(tmp_path, phi6_kink_wide):
    pert = {"type": "gaussian", "amplitude": 0.01, "width": 1.0}
    s = make_state(phi6_kink_wide, 0.0, 0.0, 20.0, 0.05, "sponge", pert)
    s = step(s, 0.04, 50)
    path = str(tmp_path / "snap.csv")
    save_snapshot(s, path)
    s2 = load_snapshot(path, phi6_kink_wide, "sponge")
    assert s2.t == pytest.approx(s.t)
    assert np.array_equal(s2.phi1, s.phi1)
    assert np.array_equal(s2.phi2, s.phi2)
    # continuing from the snapshot matches continuing the original
    a = step(s, 0.04, 50)
    b = step(s2, 0.04, 50)
    assert np.array_equal(a.phi1, b.phi1)


def test_run_config_from_file(tmp_path):
    path = tmp_path / "cfg.ini"
    path.write_text(
        "[model]\nfamily = phi6\npair = 0 1\nc0 = 0.1\n"
        "[grid]\ndx = 0.1\nt_end = 5\nboundary = clamped\n"
        "[perturbation]\ntype = gaussian\namplitude = 0.02\n"
        "[output]\nsnapshots = 2.5 5\n")
    cfg = RunConfig.from_file(str(path))
    assert cfg.family == "phi6"
    assert cfg.c0 == 0.1
    assert cfg.dx == 0.1
    assert cfg.boundary == "clamped"
    assert cfg.perturbation["amplitude"] == 0.02
    assert cfg.snapshots == (2.5, 5.0)


def test_run_produces_track(phi6_kink_wide, tmp_path):
    cfg = RunConfig(family="phi6", pair=(0.0, 1.0), dx=0.1, T_end=5.0,
                    boundary="sponge", outdir=str(tmp_path))
    track, state = run(cfg, k=phi6_kink_wide)
    assert state.t == pytest.approx(5.0, abs=0.1)
    assert len(track.t) > 5
    assert (tmp_path / "track.csv").exists()
    text = (tmp_path / "track.csv").read_text().splitlines()
    assert text[0].startswith("# kinklab-csv v1 track")
