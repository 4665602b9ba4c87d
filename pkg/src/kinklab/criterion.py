"""The asymptotic-stability criterion on the transformed potential.

A kink joining zeta_- < zeta_+ is "repulsive" when there is a point
zeta_0 in [zeta_-, zeta_+] with (phi - zeta_0) V'(phi) <= 0 on the open
interval (and V' not identically zero); V constant is the sine-Gordon
situation and is treated as its own class.  The classifier samples V' on
a Chebyshev grid, calls signs only where they exceed a cancellation-noise
estimate, and refines crossings by bisection.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .potentials import (Potential, TransformedPotential, WellPair,
                         make_family, transformed)

LABELS = ("Constant", "SatisfiedAtLeftEnd", "SatisfiedAtRightEnd",
          "SatisfiedAtPoint", "Inconclusive")


@dataclass
class CriterionResult:
    label: str
    zeta0: float | None
    margin: float          # min of -(phi - zeta0) V' / scale over samples
    zeros: tuple           # refined interior zeros of V'
    sup_v: float
    sup_vp: float

    @property
    def satisfied(self):
        return self.label != "Inconclusive"


def _chebyshev_points(a, b, n):
    k = np.arange(n)
    t = np.cos(math.pi * (2 * k + 1) / (2 * n))
    return 0.5 * (a + b) + 0.5 * (b - a) * t[::-1]


def classify(p, pair, n_samples=2001, tol=1e-12, constant_tol=1e-9):
    """Classify one kink against the repulsivity criterion."""
    tp = transformed(p, pair)
    width = pair.width
    margin_phi = 1e-4 * width
    phi = _chebyshev_points(pair.zeta_minus + margin_phi,
                            pair.zeta_plus - margin_phi, n_samples)
    v = tp.v(phi)
    vp, noise = tp.vp_with_noise(phi)
    sup_v = float(np.max(np.abs(v)))
    sup_vp = float(np.max(np.abs(vp)))
    if sup_vp * width <= constant_tol * sup_v:
        return CriterionResult("Constant", None, 0.0, (), sup_v, sup_vp)
    # call signs only where they clear both the fixed tolerance and the
    # pointwise cancellation-noise estimate
    cut = np.maximum(tol * sup_vp, noise)
    definite = np.abs(vp) > cut
    phi_d = phi[definite]
    sign_d = np.sign(vp[definite])
    if phi_d.size == 0:
        return CriterionResult("Inconclusive", None, 0.0, (), sup_v, sup_vp)
    flips = np.nonzero(sign_d[1:] != sign_d[:-1])[0]
    zeros = tuple(_bisect_zero(tp, phi_d[i], phi_d[i + 1],
                               1e-10 * max(1.0, width)) for i in flips)
    if flips.size == 0:
        if sign_d[0] > 0:
            label, zeta0 = "SatisfiedAtRightEnd", pair.zeta_plus
        else:
            label, zeta0 = "SatisfiedAtLeftEnd", pair.zeta_minus
    elif flips.size == 1 and sign_d[0] > 0:
        label, zeta0 = "SatisfiedAtPoint", zeros[0]
    else:
        label, zeta0 = "Inconclusive", None
    if zeta0 is None:
        margin = 0.0
    else:
        margin = float(np.min(-np.sign(phi_d - zeta0) * vp[definite])) / sup_vp
    return CriterionResult(label, zeta0, margin, zeros, sup_v, sup_vp)


def _bisect_zero(tp, a, b, tol_phi):
    fa = tp.vp(a)
    for _ in range(200):
        if b - a <= tol_phi:
            break
        m = 0.5 * (a + b)
        fm = tp.vp(m)
        if fa * fm <= 0.0:
            b = m
        else:
            a, fa = m, fm
    return 0.5 * (a + b)


# ---------------------------------------------------------------------------
# parameter scans
# ---------------------------------------------------------------------------

@dataclass
class ThresholdResult:
    value: float
    bracket: tuple
    satisfied_low: bool    # classification on the low side of the bracket
    n_bisections: int


def threshold_scan(tag, param, lo, hi, pair_of, tol=1e-6, n_samples=8192):
    """Bisect for the parameter value where the classification flips.

    `pair_of(p, value)` returns the WellPair to classify for a given
    parameter value.  The endpoints must classify differently.
    """

    def satisfied(val):
        p = make_family(tag, **{param: val})
        return classify(p, pair_of(p, val), n_samples=n_samples).satisfied

    s_lo = satisfied(lo)
    s_hi = satisfied(hi)
    if s_lo == s_hi:
        raise ValueError("no classification flip in [%g, %g]" % (lo, hi))
    a, b = lo, hi
    n = 0
    while b - a > tol:
        m = 0.5 * (a + b)
        if satisfied(m) == s_lo:
            a = m
        else:
            b = m
        n += 1
    return ThresholdResult(0.5 * (a + b), (a, b), s_lo, n)


def sweep(tag, param, values, pair_of, n_samples=2001, flag_tol=1e-6,
          threads=1):
    """Classify along a parameter range; rows are (value, label, zeta0,
    margin, near_threshold)."""

    def one(val):
        p = make_family(tag, **{param: val})
        res = classify(p, pair_of(p, val), n_samples=n_samples)
        return [float(val), res.label, res.zeta0, res.margin]

    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(max_workers=threads) as ex:
            rows = list(ex.map(one, values))
    else:
        rows = [one(v) for v in values]
    # flag rows within flag_tol of a label change
    labels = [r[1] for r in rows]
    for i, row in enumerate(rows):
        near = False
        for j in (i - 1, i + 1):
            if 0 <= j < len(rows) and labels[j] != labels[i] \
                    and abs(rows[j][0] - row[0]) <= flag_tol:
                near = True
        row.append(near)
    return rows


# ---------------------------------------------------------------------------
# level sets of the phi^8 / phi^10 sign factors
# ---------------------------------------------------------------------------

def u8(phi, m):
    """V_8' = 8 phi u8(phi, m)."""
    phi2 = np.asarray(phi, float) ** 2
    m2 = m * m
    return m2 * m2 - 2.0 * m2 * (phi2 + 2.0) + 6.0 * phi2 * phi2 \
        - 2.0 * phi2 + 1.0


def u10(phi, m):
    """V_10' = 24 phi^3 u10(phi, m)."""
    phi2 = np.asarray(phi, float) ** 2
    m2 = m * m
    return m2 * m2 - 2.0 * (phi2 + 2.0 / 3.0) * m2 \
        + (10.0 / 3.0) * phi2 * phi2 - 2.0 * phi2 + 1.0


def m8_branches(phi):
    """Zero set of u8 solved for m: m = sqrt(phi^2+2 +- sqrt(-5phi^4+6phi^2+3))."""
    phi2 = np.asarray(phi, float) ** 2
    disc = -5.0 * phi2 * phi2 + 6.0 * phi2 + 3.0
    root = np.sqrt(np.where(disc >= 0.0, disc, np.nan))
    return np.sqrt(phi2 + 2.0 + root), np.sqrt(np.maximum(phi2 + 2.0 - root, 0.0))


def m10_branches(phi):
    phi2 = np.asarray(phi, float) ** 2
    disc = -(7.0 / 3.0) * phi2 * phi2 + (10.0 / 3.0) * phi2 - 5.0 / 9.0
    root = np.sqrt(np.where(disc >= 0.0, disc, np.nan))
    base = phi2 + 2.0 / 3.0
    return np.sqrt(base + root), np.sqrt(np.maximum(base - root, 0.0))


def level_set(which, phi_range, m_range, n_phi=400, n_m=400):
    """Zero contour of u8/u10 on a (phi, m) grid by linear edge crossings.

    Returns (points, max_branch_deviation): points is an (N, 2) array of
    (phi, m) contour samples; the deviation compares each point's m with
    the nearest analytic branch value at its phi.
    """
    fn = {"phi8": u8, "phi10": u10}[which]
    branches = {"phi8": m8_branches, "phi10": m10_branches}[which]
    phi = np.linspace(*phi_range, n_phi)
    m = np.linspace(*m_range, n_m)
    P, M = np.meshgrid(phi, m, indexing="ij")
    F = fn(P, M)
    pts = []
    # vertical edges (varying m)
    s = F[:, :-1] * F[:, 1:]
    ii, jj = np.nonzero(s < 0.0)
    t = F[ii, jj] / (F[ii, jj] - F[ii, jj + 1])
    for a, b, tt in zip(ii, jj, t):
        pts.append((phi[a], m[b] + tt * (m[b + 1] - m[b])))
    # horizontal edges (varying phi)
    s = F[:-1, :] * F[1:, :]
    ii, jj = np.nonzero(s < 0.0)
    t = F[ii, jj] / (F[ii, jj] - F[ii + 1, jj])
    for a, b, tt in zip(ii, jj, t):
        pts.append((phi[a] + tt * (phi[a + 1] - phi[a]), m[b]))
    pts = np.array(pts) if pts else np.empty((0, 2))
    dev = 0.0
    if pts.size:
        up, lo = branches(pts[:, 0])
        d = np.nanmin(np.abs(np.column_stack([up, lo]) - pts[:, 1:2]), axis=1)
        dev = float(np.nanmax(d))
    return pts, dev


# ---------------------------------------------------------------------------
# wells-positivity checker and the lambda_n schedule
# ---------------------------------------------------------------------------

@dataclass
class PositivityResult:
    m: tuple
    min_u: float
    min_ratio: float  # min of U / R where R > 0
    passes: bool


def _u_r_4n(phi, m):
    """U_4n and R_4n entering d(V_4n)/dphi = 8 phi U_4n."""
    phi2 = np.asarray(phi, float) ** 2
    q = [phi2 - mk * mk for mk in m]
    n = len(m)
    R = np.zeros_like(phi2)
    U = np.zeros_like(phi2)
    for k in range(n):
        prod = np.ones_like(phi2)
        for j in range(n):
            if j != k:
                prod = prod * q[j] ** 2
        R += prod
        for j in range(n):
            if j == k:
                continue
            prod = np.ones_like(phi2)
            for l in range(n):
                if l != k and l != j:
                    prod = prod * q[l] ** 2
            U += 2.0 * (phi2 + m[k] * m[k]) * q[j] * prod
    U += R
    return U, R


def wells_positivity(m, n_phi=4001, pad=0.0):
    """Check U_4n > 0 on [0, m_n], the sufficient repulsivity condition
    for all kinks of W_4n (and the even-index kinks of W_4n+2)."""
    m = [float(v) for v in m]
    phi = np.linspace(0.0, m[-1] * (1.0 + pad), n_phi)
    U, R = _u_r_4n(phi, m)
    ok = R > 0.0
    min_ratio = float(np.min(U[ok] / R[ok])) if np.any(ok) else math.nan
    return PositivityResult(tuple(m), float(np.min(U)), min_ratio,
                            bool(np.min(U) > 0.0))


def calibrate_c2(lambda1, n_m=60, n_phi=2001):
    """Numerical floor for U_8/R_8 over all two-well configurations
    (1, m2) with m2 >= lambda1; this is the c_2 seeding the schedule."""
    if lambda1 <= math.sqrt(5.0):
        raise ValueError("lambda1 must exceed sqrt(5)")
    c2 = math.inf
    for m2 in np.geomspace(lambda1, 50.0 * lambda1, n_m):
        phi = np.linspace(0.0, m2, n_phi)
        U, R = _u_r_4n(phi, [1.0, m2])
        ok = R > 0.0
        c2 = min(c2, float(np.min(U[ok] / R[ok])))
    if not c2 > 0.0:
        raise ValueError("calibration failed: ratio not positive")
    return c2


def lambda_schedule(n, lambda1=2.4):
    """Well-separation schedule m_{j+1} >= lambda_j m_j guaranteeing
    U_4n >= c_n R_4n: lambda_n = sqrt((c_n + 8)/c_n), c_{n+1} = min(1, c_n/2)."""
    lambdas = [float(lambda1)]
    cs = [math.nan]  # c_1 plays no role; the recursion starts from c_2
    c = min(1.0, calibrate_c2(lambda1))
    for _ in range(1, n):
        cs.append(c)
        lambdas.append(math.sqrt((c + 8.0) / c))
        c = min(1.0, c / 2.0)
    return lambdas[:n], cs[:n]


def schedule_wells(n, lambda1=2.4, slack=1.0):
    """An m-vector obeying the schedule: m_1 = 1, m_{j+1} = slack*lambda_j*m_j."""
    lambdas, _ = lambda_schedule(n, lambda1)
    m = [1.0]
    for j in range(n - 1):
        m.append(m[-1] * lambdas[j] * slack)
    return m


# ---------------------------------------------------------------------------
# sine-Gordon limit families
# ---------------------------------------------------------------------------

def sg_limit_report(which, n_values, pair_picker="odd"):
    """Classify kinks of the normalized trig-well families Wt_4n / Wt_4n+2.

    pair_picker: 'odd' for the kink through the origin-symmetric pair,
    or an integer index into well_pairs().
    """
    rows = []
    for n in n_values:
        p = make_family(which, n=n,
                        window=(-(2 * n + 2) * math.pi, (2 * n + 2) * math.pi))
        pairs = p.well_pairs()
        if pair_picker == "odd":
            pair = min(pairs, key=lambda pr: abs(pr.midpoint))
        else:
            pair = pairs[pair_picker]
        res = classify(p, pair)
        rows.append((n, (pair.zeta_minus, pair.zeta_plus), res.label,
                     res.sup_vp))
    return rows


def first_satisfied_n(which, pair_picker, n_max=40):
    """Smallest n at which the picked kink classifies satisfied."""
    for n in range(1, n_max + 1):
        rows = sg_limit_report(which, [n], pair_picker)
        if rows[0][2] != "Inconclusive":
            return n
    return None
