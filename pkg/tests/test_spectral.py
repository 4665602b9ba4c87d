import math

import numpy as np
import pytest

from kinklab import (build_kink, coercivity_estimate, convergence_study,
                     discretize, eigen_lowest, expansion_check,
                     factorization_residual, null_directions,
                     quadratic_forms)


@pytest.fixture(scope="module")
def k4_coarse(phi4):
    pair = phi4.pair(-1.0, 1.0)
    return build_kink(phi4, pair, 20.0 / pair.omega, 0.02)


def test_phi4_poschl_teller_spectrum(k4_coarse):
    er = eigen_lowest(discretize("L", k4_coarse), kcount=3)
    assert abs(er.values[0]) < 1e-3
    assert abs(er.values[1] - 6.0) < 1e-2
    assert er.edge == pytest.approx(8.0)
    assert np.all(er.residuals < 1e-8)


def test_zero_mode_is_hprime(k4_coarse):
    op = discretize("L", k4_coarse)
    er = eigen_lowest(op, kcount=1)
    v = er.vectors[:, 0]
    # the operator grid drops the Dirichlet boundary points
    hp = k4_coarse.Hp[1:-1] / math.sqrt(k4_coarse.norm_Hp_sq)
    if np.dot(v, hp) < 0:
        v = -v
    assert np.max(np.abs(v - hp)) < 1e-3


def test_l0_darboux_partner_spectrum(k4_coarse):
    # L0 = U U* shares the spectrum of L = U*U except the zero mode:
    # discrete spectrum {6} below the same edge W''(zeta) = 8
    er = eigen_lowest(discretize("L0", k4_coarse), kcount=3)
    assert np.all(er.values > 3.99)
    assert er.discrete.size == 1
    assert er.discrete[0] == pytest.approx(6.0, abs=1e-2)


def test_convergence_study_richardson(phi4):
    pair = phi4.pair(-1.0, 1.0)
    study = convergence_study(phi4, pair, "L", 2, 20.0 / pair.omega, 0.02,
                              n_grids=3)
    assert abs(study.extrapolated[0]) < 1e-6
    assert abs(study.extrapolated[1] - 6.0) < 1e-4
    # lambda1 converges at second order
    assert 1.8 < study.orders[1] < 2.2


def test_factorization_identities(k4_coarse):
    f = np.exp(-k4_coarse.x ** 2)
    res = factorization_residual(k4_coarse, [f])[0]
    for key, val in res.items():
        assert val < 5e-2, (key, val)


def test_null_directions_symplectic(k4_coarse):
    dx = k4_coarse.dx
    T, D, G, F = null_directions(k4_coarse, 0.4)
    # G = J T is symplectically orthogonal to T, likewise F = J D to D
    assert abs(np.sum(T[0] * G[0] + T[1] * G[1]) * dx) < 1e-12
    assert abs(np.sum(D[0] * F[0] + D[1] * F[1]) * dx) < 1e-12


def test_quadratic_form_positive_on_bump(k4_coarse):
    x = k4_coarse.x
    u = (1e-2 * x * np.exp(-x ** 2), 1e-2 * np.exp(-x ** 2))
    form, norm_c, norm_loc = quadratic_forms(k4_coarse, 0.3, u)
    assert norm_c > 0.0
    assert norm_loc <= norm_c + 1e-12
    assert form > 0.0


def test_coercivity_constraint_matters(phi4):
    pair = phi4.pair(-1.0, 1.0)
    k = build_kink(phi4, pair, 20.0 / pair.omega, 0.05)
    mu_with = coercivity_estimate(k, 0.3, with_constraint=True)
    mu_without = coercivity_estimate(k, 0.3, with_constraint=False)
    # the translation null direction kills coercivity without the
    # symplectic constraint
    assert mu_with > 0.1
    assert abs(mu_without) < 1e-2


def test_expansion_check(phi4_kink):
    k = phi4_kink
    x = k.x
    u = (1e-3 * np.exp(-x ** 2), 1e-3 * x * np.exp(-x ** 2))
    ec = expansion_check(k, 0.3, u)
    assert ec.E_kink == pytest.approx(
        k.norm_Hp_sq / math.sqrt(1.0 - 0.09), rel=1e-4)
    assert ec.res_P < 1e-12
    assert ec.res_E < 10.0 * ec.cubic_scale + 1e-12
    assert ec.res_M < 1e-8
