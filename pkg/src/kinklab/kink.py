"""Static kink profiles by quadrature of the first integral.

The kink H joining wells zeta_- < zeta_+ satisfies (H')^2 = 2 W(H) and is
recovered by inverting

    G(h) = int_{zeta_0}^{h} ds / sqrt(2 W(s)),    zeta_0 = midpoint,

so that G(H(x)) = x, H(0) = zeta_0.  The integrand has simple-pole-like
singularities at the wells which are subtracted analytically; the smooth
remainder is handled by adaptive Gauss-Legendre panels.  Past the point
where |H - zeta| < 1e-8 * width the profile is continued by its exponential
tail H ~ zeta_+- -+ lambda_+- exp(-+ omega_+- x).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .potentials import PotentialError, TransformedPotential, validate_wells


class KinkError(RuntimeError):
    pass


# fixed Gauss-Legendre rules for the adaptive panels
_GL_HI = np.polynomial.legendre.leggauss(24)
_GL_LO = np.polynomial.legendre.leggauss(12)


def _gl(f, a, b, rule):
    nodes, weights = rule
    mid = 0.5 * (a + b)
    half = 0.5 * (b - a)
    return half * float(np.dot(weights, f(mid + half * nodes)))


def _quad_smooth(f, a, b, tol=1e-13, noise=0.0, max_depth=24):
    """Adaptive panel integration of a smooth vectorized integrand.

    `noise` is an absolute floor below which panel disagreements are
    attributed to cancellation in the integrand rather than resolution;
    without it the subdivision can chase roundoff forever.
    """
    if a == b:
        return 0.0
    total = 0.0
    stack = [(a, b, 0)]
    while stack:
        lo, hi, depth = stack.pop()
        coarse = _gl(f, lo, hi, _GL_LO)
        fine = _gl(f, lo, hi, _GL_HI)
        if abs(fine - coarse) <= tol * (1.0 + abs(total)) + noise \
                or depth >= max_depth:
            total += fine
        else:
            mid = 0.5 * (lo + hi)
            stack.append((lo, mid, depth + 1))
            stack.append((mid, hi, depth + 1))
    return total


@dataclass
class TailFit:
    side: str
    rate: float       # fitted decay rate, should match omega_+-
    amplitude: float  # fitted lambda_+-
    residual: float   # max abs residual of the log-linear fit


class KinkProfile:
    """Tabulated kink on a symmetric uniform grid with tail asymptotics."""

    def __init__(self, potential, pair, x, H, lam_minus, lam_plus):
        self.potential = potential
        self.pair = pair
        self.x = x
        self.dx = float(x[1] - x[0])
        self.R = float(x[-1])
        self.H = H
        self.lam_minus = lam_minus
        self.lam_plus = lam_plus
        w0, w1, w2, _ = potential._derivs(H)
        self.Hp = np.sqrt(np.maximum(2.0 * w0, 0.0))
        self.Hpp = w1
        self.Hppp = self.Hp * w2
        self.norm_Hp_sq = float(np.trapezoid(self.Hp ** 2, x))

    # -- evaluation ---------------------------------------------------------

    def eval(self, xq, deriv=0):
        """H^(deriv)(xq) by cubic interpolation inside the grid and the
        exponential tail law outside."""
        xq = np.asarray(xq, dtype=float)
        scalar = xq.ndim == 0
        xq = np.atleast_1d(xq)
        out = np.empty_like(xq)
        inside = (xq >= self.x[0]) & (xq <= self.x[-1])
        if np.any(inside):
            h = _lagrange4(self.x, self.H, xq[inside])
            if deriv == 0:
                vals = h
            else:
                w0, w1, w2, _ = self.potential._derivs(h)
                hp = np.sqrt(np.maximum(2.0 * w0, 0.0))
                vals = {1: hp, 2: w1, 3: hp * w2}[deriv]
            out[inside] = vals
        pr = self.pair
        right = xq > self.x[-1]
        if np.any(right):
            d = self.lam_plus * np.exp(-pr.omega_plus * xq[right])
            sign = {0: 1.0, 1: 1.0, 2: -1.0, 3: 1.0}[deriv]
            fac = pr.omega_plus ** deriv
            base = pr.zeta_plus - d if deriv == 0 else sign * fac * d
            out[right] = base
        left = xq < self.x[0]
        if np.any(left):
            d = self.lam_minus * np.exp(pr.omega_minus * xq[left])
            fac = pr.omega_minus ** deriv
            base = pr.zeta_minus + d if deriv == 0 else fac * d
            out[left] = base
        return float(out[0]) if scalar else out

    def eval_all(self, xq):
        """(H, H', H'', H''') at xq with a single interpolation pass."""
        h = self.eval(xq)
        inside = (xq >= self.x[0]) & (xq <= self.x[-1])
        hp = np.empty_like(h)
        hpp = np.empty_like(h)
        hppp = np.empty_like(h)
        if np.any(inside):
            w0, w1, w2, _ = self.potential._derivs(h[inside])
            hp_i = np.sqrt(np.maximum(2.0 * w0, 0.0))
            hp[inside] = hp_i
            hpp[inside] = w1
            hppp[inside] = hp_i * w2
        out = ~inside
        if np.any(out):
            hp[out] = self.eval(xq[out], 1)
            hpp[out] = self.eval(xq[out], 2)
            hppp[out] = self.eval(xq[out], 3)
        return h, hp, hpp, hppp

    # -- diagnostics --------------------------------------------------------

    def tail_fit(self, fraction=0.2, max_mismatch=0.01):
        """Log-linear fits of the tails; errors out when the fitted rates
        disagree with sqrt(W''(zeta_+-)) by more than 1%.

        The fit window is chosen by tail amplitude rather than position:
        points with d = |H - zeta| between 1e-3 of the well separation
        (genuinely asymptotic) and the double-precision floor (d still
        resolvable against zeta).  `fraction` caps the window at the
        outer part of the grid when the amplitude band is wider.
        """
        pr = self.pair
        d_hi = 1e-3 * pr.width
        d_lo = 1e3 * 2.3e-16 * max(1.0, abs(pr.zeta_minus),
                                   abs(pr.zeta_plus))
        fits = []
        for side in ("minus", "plus"):
            if side == "plus":
                half = self.x > 0.0
                d = pr.zeta_plus - self.H[half]
                s = -self.x[half]
                omega = pr.omega_plus
            else:
                half = self.x < 0.0
                d = self.H[half] - pr.zeta_minus
                s = self.x[half]
                omega = pr.omega_minus
            alive = (d > d_lo) & (d < d_hi)
            if np.count_nonzero(alive) < 10:
                raise KinkError("tail window has no resolvable points; "
                                "grid too small?")
            d, s = d[alive], s[alive]
            logd = np.log(d)
            rate, logamp = np.polyfit(s, logd, 1)
            resid = float(np.max(np.abs(logd - (rate * s + logamp))))
            fit = TailFit(side, float(rate), float(math.exp(logamp)), resid)
            if abs(fit.rate - omega) > max_mismatch * omega:
                raise KinkError(
                    "tail rate %.6g does not match omega=%.6g on %s side"
                    % (fit.rate, omega, side))
            fits.append(fit)
        return tuple(fits)

    def residuals(self):
        """Consistency residuals of the tabulated profile."""
        d2 = (self.H[2:] - 2.0 * self.H[1:-1] + self.H[:-2]) / self.dx ** 2
        ode = float(np.max(np.abs(d2 - self.Hpp[1:-1])))
        first_integral = float(np.max(np.abs(
            self.Hp ** 2 - 2.0 * self.potential.w(self.H))))
        third = float(np.max(np.abs(
            self.Hppp - self.Hp * self.potential.w(self.H, 2))))
        return {"ode": ode, "first_integral": first_integral, "third": third}

    def export_csv(self, path, tp=None):
        if tp is None:
            tp = TransformedPotential(self.potential, self.pair)
        rp = repulsivity_profile(self, tp)
        header = ("# kinklab-csv v1 profile family=%s pair=(%.12g,%.12g) "
                  "dx=%g R=%g\nx,H,Hp,Hpp,Hppp,P,Q"
                  % (self.potential.family, self.pair.zeta_minus,
                     self.pair.zeta_plus, self.dx, self.R))
        data = np.column_stack([self.x, self.H, self.Hp, self.Hpp,
                                self.Hppp, rp.P, rp.Q])
        np.savetxt(path, data, delimiter=",", header=header, comments="")


def _lagrange4(xg, yg, xq):
    """Cubic 4-point Lagrange interpolation on a uniform grid."""
    dx = xg[1] - xg[0]
    # center the 4-point stencil on the interval containing xq
    i = np.clip(((xq - xg[0]) / dx).astype(int), 1, len(xg) - 3)
    t = (xq - xg[i]) / dx  # in [0, 1) away from the clipped ends
    ym1, y0, y1, y2 = yg[i - 1], yg[i], yg[i + 1], yg[i + 2]
    return (-t * (t - 1.0) * (t - 2.0) / 6.0 * ym1
            + (t * t - 1.0) * (t - 2.0) / 2.0 * y0
            - t * (t + 1.0) * (t - 2.0) / 2.0 * y1
            + t * (t * t - 1.0) / 6.0 * y2)


# ---------------------------------------------------------------------------
# construction
# ---------------------------------------------------------------------------

def build_kink(p, pair, R, dx, handoff=1e-8, quad_tol=1e-13):
    """Tabulate the kink for `pair` on [-R, R] with spacing dx."""
    report = validate_wells(p, pair.zeta_minus, pair.zeta_plus)
    if not report.valid:
        raise PotentialError("well pair fails the standing assumptions")
    zm, zp = pair.zeta_minus, pair.zeta_plus
    width = pair.width
    zeta0 = pair.midpoint
    n = int(round(R / dx))
    x = np.arange(-n, n + 1) * dx

    wfun = p._derivs  # avoid per-call wrapper overhead in the hot loop

    def integrand(s):
        return 1.0 / np.sqrt(2.0 * wfun(np.asarray(s, float))[0])

    def ginc(h1, h2, side):
        """int_{h1}^{h2} ds/sqrt(2W) with the well singularity removed.

        The remainder is smooth but is the difference of two large terms
        near the well, so the adaptive quadrature gets an absolute noise
        floor proportional to their size.
        """
        if side == "right":
            om = pair.omega_plus

            def rem(s):
                return integrand(s) - 1.0 / (om * (zp - s))

            sing = (math.log(zp - h1) - math.log(zp - h2)) / om
            big = 1.0 / (om * min(zp - h1, zp - h2))
        else:
            om = pair.omega_minus

            def rem(s):
                return integrand(s) - 1.0 / (om * (s - zm))

            sing = (math.log(h2 - zm) - math.log(h1 - zm)) / om
            big = 1.0 / (om * min(h1 - zm, h2 - zm))
        # W has relative error ~ eps*phi^2/|phi - zeta| near a well, so the
        # integrand noise scales like big^2, not big
        s_phi = max(1.0, zp * zp, zm * zm)
        noise = 100.0 * 2.3e-16 * abs(h2 - h1) * (big + s_phi * om * big * big)
        return _quad_smooth(rem, h1, h2, tol=quad_tol, noise=noise) + sing

    H = np.empty_like(x)
    H[n] = zeta0
    cut = handoff * width
    lam = {}
    for side, sgn, zeta, omega in (("right", 1.0, zp, pair.omega_plus),
                                   ("left", -1.0, zm, pair.omega_minus)):
        h_prev = zeta0
        x_prev = 0.0
        tail_from = None
        idx = range(n + 1, 2 * n + 1) if side == "right" else \
            range(n - 1, -1, -1)
        for i in idx:
            xt = x[i]
            if tail_from is not None:
                H[i] = zeta - sgn * lam[side] * math.exp(-omega * abs(xt))
                continue
            hp = math.sqrt(2.0 * p.w(h_prev))
            # Euler predictor; |x - x_prev| = dx and H increases rightward
            h = h_prev + (xt - x_prev) * hp
            # keep the iterate strictly between the previous value and zeta
            lo, hi = (h_prev, zp - 1e-18 * width) if side == "right" else \
                (zm + 1e-18 * width, h_prev)
            h = min(max(h, lo), hi)
            for _ in range(20):
                F = x_prev + ginc(h_prev, h, side) - xt
                hp = math.sqrt(2.0 * p.w(h))
                # Newton step for G(h) = x with G'(h) = 1/sqrt(2W)
                h_new = min(max(h - F * hp, lo), hi)
                # F carries O(eps/d) noise from the log terms near the
                # wells; what matters is the implied h-correction F*hp,
                # so stop once that is negligible
                done = abs(F) <= 1e-13 * (1.0 + abs(xt)) or \
                    abs(F * hp) <= 1e-12 * width
                h = h_new
                if done:
                    break
            else:
                raise KinkError("quadrature inversion failed at x=%g" % xt)
            H[i] = h
            h_prev, x_prev = h, xt
            d = (zeta - h) * sgn
            if d < cut:
                lam[side] = d * math.exp(omega * abs(xt))
                tail_from = i
        if tail_from is None:
            d_end = (zeta - h_prev) * sgn
            if d_end > 0.1 * width:
                raise KinkError(
                    "grid does not reach the %s well: |H(R)-zeta| = %.3g"
                    % (side, d_end))
            lam[side] = d_end * math.exp(omega * R)
    return KinkProfile(p, pair, x, H, lam["left"], lam["right"])


# ---------------------------------------------------------------------------
# boosts
# ---------------------------------------------------------------------------

@dataclass
class BoostedKink:
    """H_c(x) = H(gamma x) with field pair (H_c, -c H_c')."""

    base: KinkProfile
    c: float

    def __post_init__(self):
        if not -1.0 < self.c < 1.0:
            raise KinkError("|c| must be < 1")
        self.gamma = 1.0 / math.sqrt(1.0 - self.c * self.c)

    def H(self, x, deriv=0):
        return self.gamma ** deriv * self.base.eval(self.gamma *
                                                    np.asarray(x, float), deriv)

    def fields(self, x, y=0.0):
        """(phi1, phi2) of the boosted kink centred at y."""
        xs = np.asarray(x, float) - y
        return self.H(xs), -self.c * self.H(xs, 1)


def boost(k, c):
    return BoostedKink(k, c)


# ---------------------------------------------------------------------------
# repulsivity profile
# ---------------------------------------------------------------------------

@dataclass
class RepulsivityProfile:
    x: np.ndarray
    P: np.ndarray    # V(H(x)), the potential of L0
    Pp: np.ndarray   # P'(x) = H' V'(H)
    Q: np.ndarray    # (log H')'' = W''(H) - (W'(H)/H')^2
    omega_sq: float  # floor omega^2; repulsive case has P >= omega^2

    @property
    def min_P(self):
        return float(np.min(self.P))


def repulsivity_profile(k, tp=None):
    if tp is None:
        tp = TransformedPotential(k.potential, k.pair)
    H = k.H
    P = tp.v(H)
    Pp = k.Hp * tp.vp(H)
    # Q needs W'/sqrt(2W) which is 0/0 at the wells; use the Taylor limit
    # -+ omega there (the tail region is flagged by |H - zeta| < eta_end)
    w0, w1, w2, _ = k.potential._derivs(H)
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(w0 > 0.0, w1 / np.sqrt(2.0 * np.maximum(w0, 1e-300)), 0.0)
    pr = k.pair
    near_p = np.abs(H - pr.zeta_plus) < tp.eta_end
    near_m = np.abs(H - pr.zeta_minus) < tp.eta_end
    t = np.where(near_p, -pr.omega_plus, t)
    t = np.where(near_m, pr.omega_minus, t)
    Q = w2 - t * t
    return RepulsivityProfile(k.x, P, Pp, Q, k.pair.omega ** 2)
