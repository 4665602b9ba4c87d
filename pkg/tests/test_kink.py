import math

import numpy as np
import pytest

from kinklab import KinkError, boost, build_kink, make_family
from kinklab.kink import repulsivity_profile

_trapz = np.trapezoid


def test_profile_residuals(phi4_kink):
    res = phi4_kink.residuals()
    assert res["first_integral"] < 1e-12
    assert res["third"] < 1e-10
    assert res["ode"] < 1e-3      # 3-point Laplacian is only O(dx^2)


def test_eval_matches_grid(phi4_kink):
    k = phi4_kink
    xq = np.linspace(-5.0, 5.0, 777)
    ref = np.tanh(math.sqrt(2.0) * xq)
    assert np.max(np.abs(k.eval(xq) - ref)) < 1e-8
    refp = math.sqrt(2.0) / np.cosh(math.sqrt(2.0) * xq) ** 2
    assert np.max(np.abs(k.eval(xq, 1) - refp)) < 1e-7


def test_eval_outside_grid_uses_tail(phi4_kink):
    k = phi4_kink
    xq = np.array([k.R + 1.0, k.R + 3.0])
    d = 1.0 - k.eval(xq)
    om = 2.0 * math.sqrt(2.0)
    assert d[0] > 0.0
    # decay at the linearized rate
    assert math.log(d[0] / d[1]) / 2.0 == pytest.approx(om, rel=1e-4)


def test_eval_all_consistency(phi6_kink):
    xq = np.linspace(-4.0, 4.0, 101)
    h, hp, hpp, hppp = phi6_kink.eval_all(xq)
    assert np.allclose(h, phi6_kink.eval(xq), atol=1e-14)
    assert np.allclose(hp, phi6_kink.eval(xq, 1), atol=1e-14)
    assert np.allclose(hpp, phi6_kink.eval(xq, 2), atol=1e-14)
    assert np.allclose(hppp, phi6_kink.eval(xq, 3), atol=1e-14)


def test_norm_hp_sq(phi4_kink):
    # ||H'||^2 = 4 sqrt(2) / 3 for the phi4 kink
    assert phi4_kink.norm_Hp_sq == pytest.approx(4.0 * math.sqrt(2.0) / 3.0,
                                                 rel=1e-10)


def test_boost_energy_momentum(phi4_kink):
    c = 0.5
    gamma = 1.0 / math.sqrt(1.0 - c * c)
    bk = boost(phi4_kink, c)
    x = np.arange(-3000, 3001) * 0.005
    p1, p2 = bk.fields(x, 0.0)
    dp1 = np.gradient(p1, 0.005)
    W = phi4_kink.potential.w(p1)
    E = 0.5 * _trapz(p2 ** 2 + dp1 ** 2 + 2.0 * W, dx=0.005)
    P = _trapz(p2 * dp1, dx=0.005)
    h = phi4_kink.norm_Hp_sq
    assert E == pytest.approx(gamma * h, rel=1e-4)
    assert P == pytest.approx(-c * gamma * h, rel=1e-4)
    # M = E^2 - P^2 is boost invariant: ||H'||^4
    assert E * E - P * P == pytest.approx(h * h, rel=1e-4)


def test_tail_fit_rates(phi6_kink):
    fm, fp = phi6_kink.tail_fit()
    assert fm.rate == pytest.approx(math.sqrt(2.0), rel=1e-3)
    assert fp.rate == pytest.approx(2.0 * math.sqrt(2.0), rel=1e-3)
    assert fm.amplitude > 0.0 and fp.amplitude > 0.0


def test_repulsivity_profile(phi4_kink):
    rp = repulsivity_profile(phi4_kink)
    # P(x) = V4(H) = 4 (H^2 + 1) in [4, 8], approaching W''(+-1) = 8
    assert np.min(rp.P) == pytest.approx(4.0, abs=1e-6)
    assert rp.P[0] == pytest.approx(8.0, abs=1e-5)
    assert rp.P[-1] == pytest.approx(8.0, abs=1e-5)
    assert rp.omega_sq == pytest.approx(8.0)
    # Q = W''(H) - (W'/sqrt(2W))^2(H) stays bounded through the wells
    assert np.all(np.isfinite(rp.Q))


def test_export_csv(tmp_path, phi4_kink):
    path = tmp_path / "profile.csv"
    phi4_kink.export_csv(str(path))
    first = path.read_text().splitlines()[0]
    assert first.startswith("# kinklab-csv v1 profile")
    data = np.loadtxt(str(path), delimiter=",", skiprows=2)
    assert data.shape[1] == 7
    assert np.allclose(data[:, 1], phi4_kink.H)


def test_grid_must_reach_wells(phi4):
    pair = phi4.pair(-1.0, 1.0)
    with pytest.raises(KinkError):
        build_kink(phi4, pair, 0.5, 0.01)


def test_sg_kink_exact():
    p = make_family("sg")
    k = build_kink(p, p.pair(0.0, 2.0 * math.pi), 15.0, 0.01)
    ref = 4.0 * np.arctan(np.exp(k.x))
    assert np.max(np.abs(k.H - ref)) < 1e-8
