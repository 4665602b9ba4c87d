"""Linearized operators around the kink and their factorization.

L  = -d_xx + W''(H)        (the Hessian of the energy at the kink)
L0 = -d_xx + P,  P = V(H)  (the transformed, kink-free comparison operator)

with the Darboux factorization L = U*U, L0 = U U* for U f = Y (f/Y)',
Y = H'.  Discretization is the standard three-point stencil with clamped
(Dirichlet) ends; eigenvalues come from LAPACK's Sturm bisection with
inverse-iteration eigenvectors.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh, eigh_tridiagonal

from .kink import KinkProfile, build_kink, repulsivity_profile
from .potentials import transformed


class SpectralError(RuntimeError):
    pass


@dataclass
class DiscreteOperator:
    kind: str            # "L" or "L0"
    x: np.ndarray        # interior nodes (Dirichlet ends dropped)
    dx: float
    pot: np.ndarray      # potential samples on the interior nodes
    edge: float          # continuum edge min(omega_-^2, omega_+^2)

    @property
    def diag(self):
        return 2.0 / self.dx ** 2 + self.pot

    @property
    def offdiag(self):
        return np.full(len(self.x) - 1, -1.0 / self.dx ** 2)

    def apply(self, f):
        out = np.empty_like(f)
        out[1:-1] = (-(f[2:] - 2.0 * f[1:-1] + f[:-2]) / self.dx ** 2
                     + self.pot[1:-1] * f[1:-1])
        out[0] = (2.0 * f[0] - f[1]) / self.dx ** 2 + self.pot[0] * f[0]
        out[-1] = (2.0 * f[-1] - f[-2]) / self.dx ** 2 + self.pot[-1] * f[-1]
        return out


def discretize(kind, k, rp=None):
    """Three-point discretization of L or L0 on the kink's grid."""
    xi = k.x[1:-1]
    if kind == "L":
        pot = k.potential.w(k.H[1:-1], 2)
    elif kind == "L0":
        if rp is None:
            rp = repulsivity_profile(k)
        pot = rp.P[1:-1]
    else:
        raise SpectralError("kind must be 'L' or 'L0'")
    return DiscreteOperator(kind, xi, k.dx, pot, k.pair.omega ** 2)


@dataclass
class EigenResult:
    values: np.ndarray
    vectors: np.ndarray       # columns, normalized in the discrete L2
    residuals: np.ndarray     # ||(T - lambda) v|| per eigenpair
    edge: float
    edge_flags: np.ndarray    # True where the eigenvalue is an edge artifact
    discrete: np.ndarray      # values below the flagged edge region


def eigen_lowest(op, kcount=4):
    """Lowest kcount eigenpairs by Sturm bisection + inverse iteration."""
    n = len(op.x)
    kcount = min(kcount, n)
    vals, vecs = eigh_tridiagonal(op.diag, op.offdiag, select="i",
                                  select_range=(0, kcount - 1))
    vecs = vecs / math.sqrt(op.dx)  # discrete L2 normalization
    res = np.empty(kcount)
    for j in range(kcount):
        r = op.apply(vecs[:, j]) - vals[j] * vecs[:, j]
        res[j] = math.sqrt(op.dx) * float(np.linalg.norm(r))
    # eigenvalues within 5 dx^2 * scale of the continuum edge are artifacts
    # of the finite box / discretization and are flagged, not reported as
    # genuine discrete spectrum
    scale = max(1.0, abs(op.edge), float(np.max(np.abs(op.pot))))
    flag_width = 5.0 * op.dx ** 2 * scale
    flags = vals >= op.edge - flag_width
    return EigenResult(vals, vecs, res, op.edge, flags, vals[~flags])


@dataclass
class ConvergenceRow:
    dx: float
    values: np.ndarray


@dataclass
class ConvergenceStudy:
    rows: list
    orders: np.ndarray        # observed convergence order per eigenvalue
    extrapolated: np.ndarray  # Richardson limit from the two finest grids


def convergence_study(p, pair, kind, kcount, R, dx, n_grids=2):
    """Eigenvalues on dx, 2*dx, ... with Richardson extrapolation.

    The three-point stencil is O(dx^2) with a very clean leading error
    term, so the extrapolated values gain ~3 digits over the finest grid.
    """
    rows = []
    for i in range(n_grids):
        h = dx * 2 ** (n_grids - 1 - i)  # coarse to fine
        k = build_kink(p, pair, R, h)
        op = discretize(kind, k)
        rows.append(ConvergenceRow(h, eigen_lowest(op, kcount).values))
    fine = rows[-1].values
    coarse = rows[-2].values
    extrap = (4.0 * fine - coarse) / 3.0
    if n_grids >= 3:
        prev = rows[-3].values
        with np.errstate(divide="ignore", invalid="ignore"):
            orders = np.log2(np.abs((prev - coarse) / (coarse - fine)))
    else:
        orders = np.full_like(fine, np.nan)
    return ConvergenceStudy(rows, orders, extrap)


# ---------------------------------------------------------------------------
# factorization identities
# ---------------------------------------------------------------------------

def _dx_centered(f, dx):
    out = np.empty_like(f)
    out[1:-1] = (f[2:] - f[:-2]) / (2.0 * dx)
    out[0] = (f[1] - f[0]) / dx
    out[-1] = (f[-1] - f[-2]) / dx
    return out


def factorization_residual(k, testfns, trim=0.1):
    """Sup-norm residuals of L = U*U, L0 = U U*, U L = L0 U and the
    commutator identity U d_x - d_x U = (L - L0)/2, on grid test functions.

    U f = Y (f/Y)', U* f = -(Y f)'/Y with Y = H'; all derivatives are the
    centered difference matching the 3-point Laplacian, so the residuals
    converge at second order.  The outer `trim` fraction of the grid is
    excluded (Y underflows there and the boundary stencils are one-sided).
    """
    Y = k.Hp
    dx = k.dx
    P = repulsivity_profile(k).P
    WppH = k.potential.w(k.H, 2)

    def U(f):
        return Y * _dx_centered(f / Y, dx)

    def Ustar(f):
        return -_dx_centered(Y * f, dx) / Y

    def L(f):
        return -_d2(f, dx) + WppH * f

    def L0(f):
        return -_d2(f, dx) + P * f

    n = len(k.x)
    lo, hi = int(trim * n), int((1.0 - trim) * n)
    # Y underflows to exactly zero in the far tails on wide grids; keep at
    # least 3 cells clear of that region so no 0/0 NaN reaches the window
    pos = np.nonzero(Y > 0.0)[0]
    lo = max(lo, int(pos[0]) + 3)
    hi = min(hi, int(pos[-1]) - 2)
    sl = slice(lo, hi)
    out = []
    for f in testfns:
        with np.errstate(divide="ignore", invalid="ignore"):
            r1 = np.max(np.abs((Ustar(U(f)) - L(f))[sl]))
            r2 = np.max(np.abs((U(Ustar(f)) - L0(f))[sl]))
            r3 = np.max(np.abs((U(L(f)) - L0(U(f)))[sl]))
            r4 = np.max(np.abs((U(_dx_centered(f, dx))
                                - _dx_centered(U(f), dx)
                                - 0.5 * (L(f) - L0(f)))[sl]))
        out.append({"UstarU-L": float(r1), "UUstar-L0": float(r2),
                    "UL-L0U": float(r3), "commutator": float(r4)})
    return out


def _d2(f, dx):
    out = np.empty_like(f)
    out[1:-1] = (f[2:] - 2.0 * f[1:-1] + f[:-2]) / dx ** 2
    out[0] = out[1]
    out[-1] = out[-2]
    return out


def factorization_orders(p, pair, R, dx, testfn_maker, n_grids=3):
    """Observed convergence order of each factorization residual."""
    hs = [dx * 2 ** (n_grids - 1 - i) for i in range(n_grids)]
    sups = []
    for h in hs:
        k = build_kink(p, pair, R, h)
        res = factorization_residual(k, [testfn_maker(k.x)])[0]
        sups.append(res)
    orders = {}
    for key in sups[0]:
        r = [s[key] for s in sups]
        orders[key] = [math.log2(r[i] / r[i + 1]) for i in range(len(r) - 1)]
    return orders


# ---------------------------------------------------------------------------
# quadratic forms, coercivity, conservation-law expansions
# ---------------------------------------------------------------------------

def _trap(f, dx):
    return dx * (np.sum(f) - 0.5 * (f[0] + f[-1]))


def null_directions(k, c, y=0.0):
    """T, D and their symplectic images G = J T, F = J D on the grid,
    for the boosted kink H_{c,y}(x) = H(gamma (x - y))."""
    gamma = 1.0 / math.sqrt(1.0 - c * c)
    xs = gamma * (k.x - y)
    Hp = gamma * k.eval(xs, 1)
    Hpp = gamma ** 2 * k.eval(xs, 2)
    T = (Hp, -c * Hpp)
    z = k.x - y
    D = (c * gamma ** 2 * z * Hp, -gamma ** 2 * Hp - c ** 2 * gamma ** 2 * z * Hpp)
    G = (T[1], -T[0])
    F = (D[1], -D[0])
    return T, D, G, F


def quadratic_forms(k, c, u, R=None):
    """gamma <LL u, u>, the c-weighted norm of u, and its local variant.

    <LL u, u> = ||u2||^2 + <L u1, u1> + 2c P[u] with L built from the
    boosted kink; ||u||_c^2 = gamma^-1 ||dx u1||^2 + gamma ||u1||^2
    + gamma ||u2 + c dx u1||^2.
    """
    u1, u2 = u
    gamma = 1.0 / math.sqrt(1.0 - c * c)
    dx = k.dx
    xs = gamma * k.x
    WppH = k.potential.w(k.eval(xs), 2)
    du1 = _dx_centered(u1, dx)
    Lu1 = -_d2(u1, dx) + WppH * u1
    form = (_trap(u2 ** 2, dx) + _trap(Lu1 * u1, dx)
            + 2.0 * c * _trap(u2 * du1, dx))
    norm_c_sq = (_trap(du1 ** 2, dx) / gamma + gamma * _trap(u1 ** 2, dx)
                 + gamma * _trap((u2 + c * du1) ** 2, dx))
    if R is None:
        R = 0.5 * k.R
    w = np.abs(k.x) < R
    loc = (_trap(du1[w] ** 2, dx) / gamma + gamma * _trap(u1[w] ** 2, dx)
           + gamma * _trap((u2[w] + c * du1[w]) ** 2, dx))
    return gamma * form, math.sqrt(norm_c_sq), math.sqrt(loc)


def coercivity_estimate(k, c, with_constraint=True):
    """min of gamma <LL u, u> / ||u||_c^2 over grid fields u = (u1, u2),
    orthogonal to F_{c,0} when with_constraint is set.

    Solved as a dense symmetric-definite generalized eigenproblem on the
    interior nodes after projecting out the constraint direction."""
    gamma = 1.0 / math.sqrt(1.0 - c * c)
    dx = k.dx
    n = len(k.x) - 2
    xi = k.x[1:-1]
    WppH = k.potential.w(k.eval(gamma * xi), 2)
    # forward-difference gradient Gf with Gf^T Gf = three-point Laplacian
    Gf = (np.diag(np.ones(n + 1)) - np.diag(np.ones(n), -1))[:, :n] / dx
    K = Gf.T @ Gf
    S = (np.diag(np.ones(n - 1), 1) - np.diag(np.ones(n - 1), -1)) / (2.0 * dx)
    I = np.eye(n)
    A = np.zeros((2 * n, 2 * n))
    A[:n, :n] = K + np.diag(WppH)
    A[:n, n:] = c * S.T
    A[n:, :n] = c * S
    A[n:, n:] = I
    A *= gamma * dx
    B = np.zeros((2 * n, 2 * n))
    B[:n, :n] = K / gamma + gamma * I + gamma * c * c * (S.T @ S)
    B[:n, n:] = gamma * c * S.T
    B[n:, :n] = gamma * c * S
    B[n:, n:] = gamma * I
    B *= dx
    if with_constraint:
        _, _, _, F = null_directions(k, c)
        v = np.concatenate([F[0][1:-1], F[1][1:-1]]) * dx
        v = v / np.linalg.norm(v)
        # Householder reflection sending v to e_0; drop the first row/col
        w = v.copy()
        w[0] += math.copysign(1.0, v[0] if v[0] != 0 else 1.0)
        w /= np.linalg.norm(w)
        A = _reflect(A, w)[1:, 1:]
        B = _reflect(B, w)[1:, 1:]
    bmin = float(eigh(B, eigvals_only=True, subset_by_index=[0, 0])[0])
    if bmin <= 0.0:
        raise SpectralError("projected norm pencil is not positive definite")
    mu = float(eigh(A, B, eigvals_only=True, subset_by_index=[0, 0])[0])
    return mu


def _reflect(M, w):
    Mw = M @ w
    wMw = float(w @ Mw)
    M = M - 2.0 * np.outer(w, Mw) - 2.0 * np.outer(Mw, w) \
        + 4.0 * wMw * np.outer(w, w)
    return M


@dataclass
class ExpansionCheck:
    E_kink: float
    P_kink: float
    M_kink: float
    res_E: float     # |E[H+u] - quadratic expansion|, the cubic remainder
    res_P: float     # momentum expansion is exact; this is roundoff
    res_M: float
    cubic_scale: float  # ||u1||_inf * ||u1||^2, the expected remainder size


def expansion_check(k, c, u):
    """Verify the conservation-law expansions around the boosted kink.

    All kink derivatives entering the expansion are the same centered
    differences used for the field, so res_E isolates the genuine cubic
    Taylor remainder of W and res_P is pure roundoff (the momentum
    expansion is an algebraic identity).  res_M additionally carries the
    O(dx^2) discrepancy of the discrete integration by parts hiding in
    the <LL u, u> form; it needs <u, G> = 0 to be meaningful.
    """
    u1, u2 = u
    gamma = 1.0 / math.sqrt(1.0 - c * c)
    dx = k.dx
    xs = gamma * k.x
    H = k.eval(xs)
    hv = -c * gamma * k.eval(xs, 1)   # kink phi2 component
    Hd = _dx_centered(H, dx)
    phi1 = H + u1
    phi2 = hv + u2
    dphi1 = Hd + _dx_centered(u1, dx)
    du1 = _dx_centered(u1, dx)
    W = k.potential.w(phi1)
    WH = k.potential.w(H)
    WpH = k.potential.w(H, 1)
    WppH = k.potential.w(H, 2)
    E = 0.5 * _trap(phi2 ** 2 + dphi1 ** 2 + 2.0 * W, dx)
    Pm = _trap(phi2 * dphi1, dx)
    M = E * E - Pm * Pm
    E_k = 0.5 * _trap(hv ** 2 + Hd ** 2 + 2.0 * WH, dx)
    P_k = _trap(hv * Hd, dx)
    lin_E = _trap(hv * u2 + Hd * du1 + WpH * u1, dx)
    lin_P = _trap(hv * du1 + u2 * Hd, dx)
    quad_E = _trap(u2 ** 2 + du1 ** 2 + WppH * u1 ** 2, dx)
    Pu = _trap(u2 * du1, dx)
    res_E = abs(E - (E_k + lin_E + 0.5 * quad_E))
    res_P = abs(Pm - (P_k + lin_P + Pu))
    form_p = quad_E + 2.0 * c * Pu   # <LL_{c} u, u>
    form_m = quad_E - 2.0 * c * Pu   # <LL_{-c} u, u>
    M_k = E_k ** 2 - P_k ** 2
    res_M = abs(M - (M_k + form_p * (E_k + 0.25 * form_m)))
    cubic = float(np.max(np.abs(u1))) * _trap(u1 ** 2, dx)
    return ExpansionCheck(E_k, P_k, M_k, float(res_E), float(res_P),
                          float(res_M), cubic)
