"""Scalar-field potentials W, their wells, and the transformed potential V.

A potential here is a nonnegative function W(phi) with a finite (or
window-restricted) set of non-degenerate zeros ("wells").  Static kinks
interpolate between two consecutive wells.  The stability analysis never
looks at W directly but at the transformed potential

    V = (W')^2 / W - W''  =  -W (log W)'',

which extends continuously to the wells with V(zeta) = W''(zeta).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

_EPS = np.finfo(float).eps


class PotentialError(ValueError):
    pass


# ---------------------------------------------------------------------------
# product-of-factors machinery
#
# Every polynomial family is a product of low-degree factors ((phi^2 - m^2)^2
# and the like).  Evaluating the factors and combining derivatives with the
# Leibniz rule keeps relative accuracy near the wells, where an expanded
# polynomial would cancel catastrophically.
# ---------------------------------------------------------------------------

class _PolyFactor:
    """A polynomial factor with derivatives up to third order."""

    def __init__(self, coeffs):
        p = np.polynomial.Polynomial(coeffs)
        self._d = [p] + [p.deriv(k) for k in (1, 2, 3)]

    def derivs(self, phi):
        return tuple(d(phi) for d in self._d)


def _product_derivs(factors, phi, scale=1.0):
    """(f, f', f'', f''') of scale * prod(factors) by Leibniz accumulation."""
    p0 = np.full_like(phi, scale, dtype=float)
    p1 = np.zeros_like(p0)
    p2 = np.zeros_like(p0)
    p3 = np.zeros_like(p0)
    for f in factors:
        f0, f1, f2, f3 = f.derivs(phi)
        p3 = p3 * f0 + 3.0 * p2 * f1 + 3.0 * p1 * f2 + p0 * f3
        p2 = p2 * f0 + 2.0 * p1 * f1 + p0 * f2
        p1 = p1 * f0 + p0 * f1
        p0 = p0 * f0
    return p0, p1, p2, p3


def _squared_quadratic(a):
    """(phi^2 - a)^2 as two quadratic factors.

    Expanding the quartic would cancel catastrophically near phi^2 = a;
    the factored form keeps relative accuracy there.
    """
    q = _PolyFactor([-a, 0.0, 1.0])
    return [q, q]


# ---------------------------------------------------------------------------
# wells
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class WellPair:
    """A consecutive pair of wells bounding one kink."""

    zeta_minus: float
    zeta_plus: float
    omega_minus: float
    omega_plus: float

    @property
    def omega(self):
        return min(self.omega_minus, self.omega_plus)

    @property
    def width(self):
        return self.zeta_plus - self.zeta_minus

    @property
    def midpoint(self):
        return 0.5 * (self.zeta_minus + self.zeta_plus)

    @classmethod
    def of(cls, p, zeta_minus, zeta_plus):
        if not zeta_minus < zeta_plus:
            raise PotentialError("well pair must be ordered")
        wpp_m = p.w(zeta_minus, 2)
        wpp_p = p.w(zeta_plus, 2)
        if wpp_m <= 0.0 or wpp_p <= 0.0:
            raise PotentialError("wells must be non-degenerate (W'' > 0)")
        return cls(float(zeta_minus), float(zeta_plus),
                   math.sqrt(wpp_m), math.sqrt(wpp_p))


@dataclass(frozen=True)
class WellReport:
    """Result of checking one well pair against the standing assumptions."""

    pair: WellPair
    zero_ok: bool          # W and W' vanish at both wells within tol
    curvature_ok: bool     # W'' > 0 at both wells
    positive_between: bool # W > 0 strictly between the wells
    min_interior: float    # min of W on the open interval

    @property
    def valid(self):
        return self.zero_ok and self.curvature_ok and self.positive_between


def validate_wells(p, zeta_minus, zeta_plus, tol=1e-10, n_samples=2001):
    """Check the assumptions on W for the kink joining two wells."""
    scale = max(abs(p.w(0.5 * (zeta_minus + zeta_plus))), 1.0)
    zero_ok = True
    curvature_ok = True
    for z in (zeta_minus, zeta_plus):
        if abs(p.w(z)) > tol * scale or abs(p.w(z, 1)) > tol * scale:
            zero_ok = False
        if p.w(z, 2) <= tol:
            curvature_ok = False
    if not curvature_ok:
        raise PotentialError(
            "degenerate well: W''(zeta) <= 0 at %.6g or %.6g"
            % (zeta_minus, zeta_plus))
    pair = WellPair.of(p, zeta_minus, zeta_plus)
    # strict interior positivity, sampled away from the regularized edges
    margin = 1e-6 * pair.width
    phi = np.linspace(zeta_minus + margin, zeta_plus - margin, n_samples)
    wvals = p.w(phi)
    min_interior = float(np.min(wvals))
    positive_between = bool(np.all(wvals > 0.0))
    return WellReport(pair, zero_ok, curvature_ok, positive_between,
                      min_interior)


# ---------------------------------------------------------------------------
# the Potential object
# ---------------------------------------------------------------------------

class Potential:
    """A potential W with derivatives up to order 3 and a list of wells."""

    def __init__(self, family, derivs, wells, params=None):
        self.family = family
        self.params = dict(params or {})
        self.wells = tuple(sorted(float(z) for z in wells))
        self._derivs = derivs

    def __repr__(self):
        ps = ", ".join("%s=%s" % kv for kv in sorted(self.params.items()))
        return "Potential(%s%s)" % (self.family, ", " + ps if ps else "")

    def w(self, phi, order=0):
        """Evaluate W^(order)(phi), order in 0..3."""
        if order not in (0, 1, 2, 3):
            raise PotentialError("derivative order must be in 0..3")
        phi_arr = np.asarray(phi, dtype=float)
        scalar = phi_arr.ndim == 0
        out = self._derivs(np.atleast_1d(phi_arr))[order]
        return float(out[0]) if scalar else out

    def well_pairs(self):
        return [WellPair.of(self, a, b)
                for a, b in zip(self.wells[:-1], self.wells[1:])]

    def pair(self, zeta_minus, zeta_plus):
        return WellPair.of(self, zeta_minus, zeta_plus)


def _trig_window_wells(base_wells, period, window):
    """All translates base + period*k falling inside the window."""
    lo, hi = window
    out = []
    for z0 in base_wells:
        kmin = math.ceil((lo - z0) / period - 1e-12)
        kmax = math.floor((hi - z0) / period + 1e-12)
        out.extend(z0 + period * k for k in range(kmin, kmax + 1))
    return sorted(set(round(z, 12) for z in out))


def make_family(tag, window=(-4.0 * math.pi, 4.0 * math.pi), **params):
    """Construct one of the built-in families.

    Tags: sg, phi4, phi6, phi8(m), phi10(m), w4n(m=list), w4n2(m=list),
    wt4n(n), wt4n2(n), dsg1(eta), dsg2(eta).
    """
    if tag == "sg":
        # W = 1 - cos(phi) = 2 sin^2(phi/2); the half-angle form is
        # relatively accurate near the wells, the naive one is not.
        def derivs(phi):
            s = np.sin(0.5 * phi)
            return (2.0 * s * s, np.sin(phi), np.cos(phi), -np.sin(phi))
        wells = _trig_window_wells([0.0], 2.0 * math.pi, window)
        return Potential("sg", derivs, wells)

    if tag == "phi4":
        factors = _squared_quadratic(1.0)
        return Potential("phi4", lambda phi: _product_derivs(factors, phi),
                         [-1.0, 1.0])

    if tag == "phi6":
        factors = [_PolyFactor([0.0, 0.0, 1.0])] + _squared_quadratic(1.0)
        return Potential("phi6", lambda phi: _product_derivs(factors, phi),
                         [-1.0, 0.0, 1.0])

    if tag == "phi8":
        m = float(params["m"])
        if not m > 1.0:
            raise PotentialError("phi8 requires m > 1")
        factors = _squared_quadratic(1.0) + _squared_quadratic(m * m)
        return Potential("phi8", lambda phi: _product_derivs(factors, phi),
                         [-m, -1.0, 1.0, m], {"m": m})

    if tag == "phi10":
        m = float(params["m"])
        if not m > 1.0:
            raise PotentialError("phi10 requires m > 1")
        factors = ([_PolyFactor([0.0, 0.0, 1.0])]
                   + _squared_quadratic(1.0) + _squared_quadratic(m * m))
        return Potential("phi10", lambda phi: _product_derivs(factors, phi),
                         [-m, -1.0, 0.0, 1.0, m], {"m": m})

    if tag in ("w4n", "w4n2"):
        m = [float(v) for v in params["m"]]
        if any(b <= a for a, b in zip(m[:-1], m[1:])) or m[0] <= 0.0:
            raise PotentialError("m-vector must be strictly increasing, positive")
        factors = [f for mk in m for f in _squared_quadratic(mk * mk)]
        wells = [-mk for mk in m] + list(m)
        if tag == "w4n2":
            factors.insert(0, _PolyFactor([0.0, 0.0, 1.0]))
            wells.append(0.0)
        return Potential(tag, lambda phi: _product_derivs(factors, phi),
                         wells, {"m": tuple(m)})

    if tag == "wt4n2":
        # (1/2) phi^2 prod_k (1 - phi^2/(2 pi k)^2)^2, wells at 2 pi k
        n = int(params["n"])
        factors = [_PolyFactor([0.0, 0.0, 1.0])]
        for k in range(1, n + 1):
            a = (2.0 * math.pi * k) ** 2
            factors.append(_PolyFactor([1.0, 0.0, -1.0 / a]))
            factors.append(_PolyFactor([1.0, 0.0, -1.0 / a]))
        wells = [2.0 * math.pi * k for k in range(-n, n + 1)]
        return Potential("wt4n2",
                         lambda phi: _product_derivs(factors, phi, scale=0.5),
                         wells, {"n": n})

    if tag == "wt4n":
        # 2 prod_k (1 - phi^2/(pi (2k-1))^2)^2, wells at +-pi(2k-1)
        n = int(params["n"])
        factors = []
        for k in range(1, n + 1):
            a = (math.pi * (2 * k - 1)) ** 2
            factors.append(_PolyFactor([1.0, 0.0, -1.0 / a]))
            factors.append(_PolyFactor([1.0, 0.0, -1.0 / a]))
        wells = [math.pi * (2 * k - 1) for k in range(-n + 1, n + 1)]
        wells = sorted(set(wells + [-w for w in wells]))
        return Potential("wt4n",
                         lambda phi: _product_derivs(factors, phi, scale=2.0),
                         wells, {"n": n})

    if tag == "dsg1":
        eta = float(params["eta"])
        if eta <= -0.25 or eta == 0.0:
            raise PotentialError("dsg1 requires eta > -1/4, eta != 0")
        amp = 4.0 / (1.0 + 4.0 * abs(eta))

        def derivs(phi, eta=eta, amp=amp):
            h = 0.5 * phi
            # 1 + cos(phi/2) = 2 cos^2(phi/4), stable near the wells
            c4 = np.cos(0.25 * phi)
            w0 = amp * (eta * 2.0 * np.sin(h) ** 2 + 2.0 * c4 * c4)
            w1 = amp * (eta * np.sin(phi) - 0.5 * np.sin(h))
            w2 = amp * (eta * np.cos(phi) - 0.25 * np.cos(h))
            w3 = amp * (-eta * np.sin(phi) + 0.125 * np.sin(h))
            return w0, w1, w2, w3

        wells = _trig_window_wells([-2.0 * math.pi, 2.0 * math.pi],
                                   4.0 * math.pi, window)
        return Potential("dsg1", derivs, wells, {"eta": eta})

    if tag == "dsg2":
        eta = float(params["eta"])
        if eta >= -0.25:
            raise PotentialError("dsg2 requires eta < -1/4")
        amp = 8.0 * abs(eta) / (1.0 + 4.0 * abs(eta))
        q = 1.0 / (4.0 * eta)

        def derivs(phi, amp=amp, q=q):
            c = np.cos(0.5 * phi)
            s = np.sin(0.5 * phi)
            w0 = amp * (c - q) ** 2
            w1 = -amp * s * (c - q)
            w2 = -0.5 * amp * (c * (c - q) - s * s)
            w3 = 0.25 * amp * s * (4.0 * c - q)
            return w0, w1, w2, w3

        zeta = 2.0 * math.acos(q)
        wells = _trig_window_wells([-zeta, zeta], 4.0 * math.pi, window)
        return Potential("dsg2", derivs, wells, {"eta": eta})

    raise PotentialError("unknown family tag %r" % (tag,))


def from_callbacks(w0, w1=None, w2=None, w3=None, wells=(), family="custom",
                   params=None, scale=None):
    """Build a Potential from plain callables; missing derivatives fall
    back to centered finite differences of the next lower order."""
    if scale is None:
        ws = wells or (0.0, 1.0)
        scale = max(max(abs(z) for z in ws), 1.0)
    funcs = [w0, w1, w2, w3]
    for k in range(1, 4):
        if funcs[k] is None:
            lower = funcs[k - 1]
            h = scale * (2.0 ** (-17 + 4 * k))  # coarser steps for higher orders

            def fd(phi, f=lower, h=h):
                return (f(phi + h) - f(phi - h)) / (2.0 * h)

            funcs[k] = fd

    def derivs(phi, funcs=tuple(funcs)):
        return tuple(np.asarray(f(phi), dtype=float) for f in funcs)

    return Potential(family, derivs, wells, params)


# ---------------------------------------------------------------------------
# transformed potential
# ---------------------------------------------------------------------------

class TransformedPotential:
    """V = (W')^2/W - W'' on one well pair, with endpoint regularization.

    Within eta_end = 1e-6 * (zeta_+ - zeta_-) of a well, V and V' are
    replaced by their Taylor values V ~ W''(zeta) + W'''(zeta) d / 3,
    V' ~ W'''(zeta)/3, which removes the 0/0 at the well.
    """

    def __init__(self, p, pair):
        self.p = p
        self.pair = pair
        self.eta_end = 1e-6 * pair.width
        self._edge = []
        for z in (pair.zeta_minus, pair.zeta_plus):
            self._edge.append((z, p.w(z, 2), p.w(z, 3)))

    def _edge_mask(self, phi):
        mask = np.zeros(phi.shape, dtype=bool)
        for z, _, _ in self._edge:
            mask |= np.abs(phi - z) < self.eta_end
        return mask

    def _eval(self, phi):
        phi = np.atleast_1d(np.asarray(phi, dtype=float))
        w0, w1, w2, w3 = self.p._derivs(phi)
        mask = self._edge_mask(phi)
        safe = np.where(mask, 1.0, w0)
        ratio = np.where(mask, 0.0, w1 / safe)     # W'/W
        q = ratio * w1                             # (W')^2/W
        v = q - w2
        vp = ratio * (2.0 * w2 - q) - w3
        # cancellation-noise estimate for vp; used to call signs honestly
        noise = 100.0 * _EPS * (np.abs(ratio) * (2.0 * np.abs(w2) + np.abs(q))
                                + np.abs(w3))
        for z, wpp, wppp in self._edge:
            d = phi - z
            near = np.abs(d) < self.eta_end
            v = np.where(near, wpp + wppp * d / 3.0, v)
            vp = np.where(near, wppp / 3.0, vp)
            noise = np.where(near, 100.0 * _EPS * wpp / max(self.pair.width, 1.0),
                             noise)
        return v, vp, noise

    def v(self, phi):
        out = self._eval(phi)[0]
        return float(out[0]) if np.ndim(phi) == 0 else out

    def vp(self, phi):
        out = self._eval(phi)[1]
        return float(out[0]) if np.ndim(phi) == 0 else out

    def vp_with_noise(self, phi):
        _, vp, noise = self._eval(phi)
        return vp, noise


def transformed(p, pair):
    return TransformedPotential(p, pair)


# ---------------------------------------------------------------------------
# normalization and perturbation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AffineMap:
    """phi_new = lam * phi_old + a, with amplitude factor mu and an
    optional initial reflection phi_old -> -phi_old."""
    lam: float
    a: float
    mu: float
    reflected: bool


def normalize(p, pair, target=(0.0, 1.0)):
    """Map a well pair to target wells with W''(target lower well) = 1.

    Applies phi -> -phi first when W''(zeta_-) > W''(zeta_+), so the
    smaller curvature always sits at the lower target well.  Returns
    (Potential, AffineMap)."""
    t1, t2 = float(target[0]), float(target[1])
    if not t1 < t2:
        raise PotentialError("target wells must be ordered")
    base = p
    zm, zp = pair.zeta_minus, pair.zeta_plus
    reflected = p.w(zm, 2) > p.w(zp, 2)
    if reflected:
        inner = base._derivs

        def refl(phi, inner=inner):
            w0, w1, w2, w3 = inner(-phi)
            return w0, -w1, w2, -w3

        base = Potential(p.family + "+refl", refl,
                         [-z for z in p.wells], p.params)
        zm, zp = -pair.zeta_plus, -pair.zeta_minus
    lam = (t2 - t1) / (zp - zm)
    a = t1 - lam * zm
    mu = 1.0 / math.sqrt(base.w(zm, 2))
    pref = lam * lam * mu * mu
    inner = base._derivs

    def derivs(phi, inner=inner, lam=lam, a=a, pref=pref):
        w0, w1, w2, w3 = inner((phi - a) / lam)
        return (pref * w0, pref * w1 / lam, pref * w2 / lam ** 2,
                pref * w3 / lam ** 3)

    wells = [lam * z + a for z in base.wells]
    out = Potential("normalized:" + p.family, derivs, wells, p.params)
    return out, AffineMap(lam, a, mu, reflected)


def perturb(p, alpha, alpha0, pair=None, n_samples=4001):
    """W_alpha = (1 + alpha) W for a smooth multiplier alpha(phi).

    `alpha` is a callable alpha(phi, order) for order 0..3 (or a plain
    callable of phi, in which case derivatives are finite differences).
    Raises if 1 + alpha <= 0 anywhere on the working interval; whether
    |alpha^(k)| <= alpha0 holds is recorded in params['alpha_within_bounds'].
    """
    if callable(alpha) and not _takes_order(alpha):
        base_alpha = alpha
        aux = from_callbacks(lambda phi: np.asarray(base_alpha(phi), float))

        def alpha_fn(phi, order=0):
            return aux._derivs(np.atleast_1d(np.asarray(phi, float)))[order]
    else:
        alpha_fn = alpha

    lo = p.wells[0]
    hi = p.wells[-1]
    pad = 0.5 * (hi - lo) if hi > lo else 1.0
    phi = np.linspace(lo - pad, hi + pad, n_samples)
    a_samples = [np.atleast_1d(np.asarray(alpha_fn(phi, k), float))
                 for k in range(4)]
    if np.min(1.0 + a_samples[0]) <= 0.0:
        raise PotentialError("perturbation makes 1 + alpha <= 0")
    within = all(np.max(np.abs(a)) <= alpha0 * (1.0 + 1e-12)
                 for a in a_samples)
    inner = p._derivs

    def derivs(phi, inner=inner, alpha_fn=alpha_fn):
        w0, w1, w2, w3 = inner(phi)
        a0 = np.asarray(alpha_fn(phi, 0), float)
        a1 = np.asarray(alpha_fn(phi, 1), float)
        a2 = np.asarray(alpha_fn(phi, 2), float)
        a3 = np.asarray(alpha_fn(phi, 3), float)
        return ((1.0 + a0) * w0,
                (1.0 + a0) * w1 + a1 * w0,
                (1.0 + a0) * w2 + 2.0 * a1 * w1 + a2 * w0,
                (1.0 + a0) * w3 + 3.0 * a1 * w2 + 3.0 * a2 * w1 + a3 * w0)

    params = dict(p.params)
    params["alpha_within_bounds"] = within
    params["alpha0"] = float(alpha0)
    return Potential(p.family + "+perturbed", derivs, p.wells, params)


def _takes_order(f):
    import inspect
    try:
        sig = inspect.signature(f)
    except (TypeError, ValueError):
        return False
    return len(sig.parameters) >= 2


# ---------------------------------------------------------------------------
# custom potential files
# ---------------------------------------------------------------------------

def load_potential(path):
    """Read a potential definition file.

    Line-oriented key = value format, '#' comments.  Keys:
      kind   = polynomial | trigpoly | product
      coeffs = ascending coefficients (polynomial)
      factor = ascending coefficients, repeatable (product)
      scale  = overall prefactor (product, default 1)
      freq, const, cos, sin = trig polynomial data
      wells  = list of well locations
    """
    kind = None
    data = {"factor": []}
    with open(path) as fh:
        for raw in fh:
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise PotentialError("bad line in potential file: %r" % raw)
            key, val = (s.strip() for s in line.split("=", 1))
            if key == "kind":
                kind = val
            elif key == "factor":
                data["factor"].append([float(t) for t in val.split()])
            else:
                data[key] = val

    def floats(key, default=""):
        return [float(t) for t in data.get(key, default).split()]

    wells = floats("wells")
    if kind == "polynomial":
        coeffs = floats("coeffs")
        factors = [_PolyFactor(coeffs)]
        return Potential("custom-polynomial",
                         lambda phi: _product_derivs(factors, phi), wells)
    if kind == "product":
        scale = float(data.get("scale", "1"))
        factors = [_PolyFactor(c) for c in data["factor"]]
        return Potential("custom-product",
                         lambda phi: _product_derivs(factors, phi, scale),
                         wells)
    if kind == "trigpoly":
        nu = float(data.get("freq", "1"))
        const = float(data.get("const", "0"))
        ac = floats("cos")
        bs = floats("sin")

        def derivs(phi, nu=nu, const=const, ac=tuple(ac), bs=tuple(bs)):
            w0 = np.full_like(phi, const, dtype=float)
            w1 = np.zeros_like(w0)
            w2 = np.zeros_like(w0)
            w3 = np.zeros_like(w0)
            for k, a in enumerate(ac, start=1):
                f = k * nu
                w0 += a * np.cos(f * phi)
                w1 += -a * f * np.sin(f * phi)
                w2 += -a * f * f * np.cos(f * phi)
                w3 += a * f ** 3 * np.sin(f * phi)
            for k, b in enumerate(bs, start=1):
                f = k * nu
                w0 += b * np.sin(f * phi)
                w1 += b * f * np.cos(f * phi)
                w2 += -b * f * f * np.sin(f * phi)
                w3 += -b * f ** 3 * np.cos(f * phi)
            return w0, w1, w2, w3

        return Potential("custom-trigpoly", derivs, wells)
    raise PotentialError("potential file must set kind = polynomial | "
                         "trigpoly | product")
