import math

import numpy as np
import pytest

from kinklab import classify, level_set, make_family, sweep, threshold_scan
from kinklab.criterion import (calibrate_c2, lambda_schedule, m8_branches,
                               m10_branches, schedule_wells, sg_limit_report,
                               u8, u10, wells_positivity)


def test_classify_phi4(phi4):
    res = classify(phi4, phi4.pair(-1.0, 1.0))
    assert res.label == "Inconclusive"
    assert not res.satisfied


def test_classify_phi6(phi6):
    res = classify(phi6, phi6.pair(0.0, 1.0))
    assert res.label == "SatisfiedAtRightEnd"
    assert res.zeta0 == pytest.approx(1.0)
    assert res.satisfied


def test_classify_sg_constant():
    p = make_family("sg")
    res = classify(p, p.pair(0.0, 2.0 * math.pi))
    assert res.label == "Constant"


def test_classify_phi8_odd_kink_zero_at_origin():
    # for m = 1.5, U8(0) = m^4 - 4 m^2 + 1 < 0: V' changes sign at 0
    p = make_family("phi8", m=1.5)
    res = classify(p, p.pair(-1.0, 1.0))
    assert res.label == "SatisfiedAtPoint"
    assert abs(res.zeta0) < 1e-6


def test_u8_closed_form_roots():
    k1 = math.sqrt(2.0 + math.sqrt(3.0))
    assert u8(0.0, k1) == pytest.approx(0.0, abs=1e-12)
    # U8(0; m) = m^4 - 4 m^2 + 1
    assert u8(0.0, 3.0) == pytest.approx(3.0 ** 4 - 4.0 * 9.0 + 1.0)


def test_u10_threshold_value():
    # the minimum of U10 over phi hits zero at m = sqrt(21)/3
    m = math.sqrt(21.0) / 3.0
    phi = np.linspace(0.0, 1.5, 20001)
    assert abs(np.min(u10(phi, m))) < 1e-4
    assert np.min(u10(phi, 1.6)) > 0.0
    assert np.min(u10(phi, 1.5)) < 0.0


def test_branches_lie_on_contour():
    phi = np.linspace(0.3, 1.0, 50)
    up, lo = m8_branches(phi)
    ok = np.isfinite(up)
    assert np.max(np.abs(u8(phi[ok], up[ok]))) < 1e-9
    up10, lo10 = m10_branches(phi)
    ok = np.isfinite(up10)
    assert np.max(np.abs(u10(phi[ok], up10[ok]))) < 1e-9


def test_level_set_contains_threshold_point():
    pts, dev = level_set("phi8", (0.0, 2.5), (1.0, 3.0))
    assert len(pts) > 50
    k1 = math.sqrt(2.0 + math.sqrt(3.0))
    dist = np.min(np.hypot(pts[:, 0], pts[:, 1] - k1))
    assert dist < 0.02
    assert dev < 0.05


def test_threshold_scan_no_flip_raises():
    def pair_of(p, val):
        return p.pair(-1.0, 1.0)
    with pytest.raises(ValueError):
        threshold_scan("phi8", "m", 2.5, 3.0, pair_of)


def test_sweep_flags_near_threshold():
    def pair_of(p, val):
        return p.pair(-1.0, 1.0)
    k1 = math.sqrt(2.0 + math.sqrt(3.0))
    values = [k1 - 1e-3, k1 + 1e-3, 2.5]
    rows = sweep("phi8", "m", values, pair_of, flag_tol=5e-3,
                 n_samples=8192)
    labels = [r[1] for r in rows]
    assert labels[0] != labels[1]
    assert rows[0][4] and rows[1][4]
    assert not rows[2][4]


def test_sweep_threaded_matches_serial():
    def pair_of(p, val):
        return p.pair(-1.0, 1.0)
    values = np.linspace(1.5, 2.5, 7)
    serial = sweep("phi8", "m", values, pair_of)
    threaded = sweep("phi8", "m", values, pair_of, threads=4)
    assert [r[1] for r in serial] == [r[1] for r in threaded]


def test_wells_positivity_ratio():
    res = wells_positivity([1.0, 3.0])
    assert res.passes
    assert res.min_ratio == pytest.approx(0.5, abs=1e-6)


def test_calibrate_c2_requires_lambda1_above_sqrt5():
    with pytest.raises(ValueError):
        calibrate_c2(2.0)
    assert calibrate_c2(2.4) > 0.0


def test_lambda_schedule_monotone():
    lams, cs = lambda_schedule(5)
    assert len(lams) == 5
    # c_n halves, so lambda_n grows
    assert all(b >= a for a, b in zip(lams[1:], lams[2:]))
    m = schedule_wells(5)
    assert all(m[i + 1] / m[i] >= lams[i] - 1e-12 for i in range(4))


def test_sg_limit_inconclusive():
    rows = sg_limit_report("wt4n", [2])
    assert rows[0][2] == "Inconclusive"


def test_dsg_classifications():
    p = make_family("dsg1", eta=-0.1)
    pair = min(p.well_pairs(), key=lambda pr: abs(pr.midpoint))
    assert classify(p, pair).satisfied
    p = make_family("dsg1", eta=1.0)
    pair = min(p.well_pairs(), key=lambda pr: abs(pr.midpoint))
    assert not classify(p, pair).satisfied
