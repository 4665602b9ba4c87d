"""Time evolution of perturbed kinks with modulation tracking.

The first-order system d/dt (phi1, phi2) = (phi2, d_xx phi1 - W'(phi1))
is integrated with Stormer-Verlet (kick-drift-kick) on a uniform grid.
Boundaries are either clamped (Dirichlet at the well values, exactly
time-reversible) or a sponge layer: a cubic-ramp damping -sigma(x) phi2
on the outer 15% of the domain that absorbs outgoing radiation.

The modulation parameters (c(t), y(t)) solve the orthogonality conditions
<p - H_{c,y}, F_{c,y}> = <p - H_{c,y}, G_{c,y}> = 0 by a warm-started
Newton iteration with the analytic Jacobian.
"""
from __future__ import annotations

import math
import os
from dataclasses import dataclass, field

import numpy as np

from .kink import KinkProfile, _lagrange4, boost, build_kink
from .potentials import make_family

_trapz = np.trapezoid


class DynamicsError(RuntimeError):
    pass


class ModulationError(DynamicsError):
    pass


@dataclass
class FieldState:
    x: np.ndarray
    phi1: np.ndarray
    phi2: np.ndarray
    t: float
    kink: KinkProfile
    boundary: str = "clamped"
    sigma: np.ndarray | None = None

    @property
    def dx(self):
        return float(self.x[1] - self.x[0])

    @property
    def potential(self):
        return self.kink.potential

    def copy(self):
        return FieldState(self.x, self.phi1.copy(), self.phi2.copy(),
                          self.t, self.kink, self.boundary, self.sigma)


def _sponge_profile(x, R, fraction=0.15, strength=2.0):
    xs = (1.0 - fraction) * R
    ramp = np.clip((np.abs(x) - xs) / (R - xs), 0.0, 1.0)
    return strength * ramp ** 3


def make_state(k, c0=0.0, y0=0.0, R_dom=None, dx=0.05, boundary="clamped",
               perturbation=None, sponge_strength=2.0):
    """Initial data: boosted kink at (c0, y0) plus an optional localized
    perturbation."""
    if R_dom is None:
        R_dom = 40.0 / k.pair.omega
    n = int(round(R_dom / dx))
    x = np.arange(-n, n + 1) * dx
    bk = boost(k, c0)
    phi1, phi2 = bk.fields(x, y0)
    if perturbation:
        u1, u2 = _build_perturbation(perturbation, x, k)
        phi1 = phi1 + u1
        phi2 = phi2 + u2
    if boundary == "sponge":
        sigma = _sponge_profile(x, n * dx, strength=sponge_strength)
    elif boundary == "clamped":
        sigma = None
    else:
        raise DynamicsError("boundary must be 'clamped' or 'sponge'")
    return FieldState(x, phi1, phi2, 0.0, k, boundary, sigma)


def _build_perturbation(spec, x, k):
    kind = spec.get("type", "gaussian")
    u1 = np.zeros_like(x)
    u2 = np.zeros_like(x)
    if kind == "none":
        return u1, u2
    if kind == "file":
        data = np.loadtxt(spec["path"], delimiter=",", skiprows=_skip(spec["path"]))
        if data.shape[0] != len(x) or np.max(np.abs(data[:, 0] - x)) > 1e-12:
            raise DynamicsError("perturbation file grid does not match")
        return data[:, 1], data[:, 2]
    amp = float(spec.get("amplitude", 0.01))
    width = float(spec.get("width", 1.0))
    center = float(spec.get("center", 0.0))
    comp = int(spec.get("component", 1))
    sep = k.pair.width
    if abs(amp) >= sep:
        raise DynamicsError("perturbation amplitude exceeds well separation")
    R = float(x[-1])
    if abs(center) + 4.0 * width > 0.5 * R:
        raise DynamicsError("perturbation must be confined to |x| < R_dom/2")
    bump = amp * np.exp(-((x - center) / width) ** 2)
    if kind == "velocity_bump" or comp == 2:
        u2 = bump
    else:
        u1 = bump
    return u1, u2


def _skip(path):
    with open(path) as fh:
        for i, line in enumerate(fh):
            if not line.startswith("#") and not line[0].isalpha():
                return i
    return 0


# ---------------------------------------------------------------------------
# integrator
# ---------------------------------------------------------------------------

def _force(phi1, dx, p):
    F = np.zeros_like(phi1)
    F[1:-1] = (phi1[2:] - 2.0 * phi1[1:-1] + phi1[:-2]) / dx ** 2 \
        - p.w(phi1[1:-1], 1)
    return F


def step(s, dt, nsteps=1):
    """Advance by nsteps of Stormer-Verlet; returns a new FieldState."""
    if dt > 0.9 * s.dx + 1e-15:
        raise DynamicsError("CFL violated: need dt <= 0.9 dx")
    p = s.potential
    dx = s.dx
    phi1 = s.phi1.copy()
    phi2 = s.phi2.copy()
    damp = None
    if s.sigma is not None:
        damp = 1.0 / (1.0 + 0.5 * dt * s.sigma)
    half = 0.5 * dt
    for _ in range(nsteps):
        F = _force(phi1, dx, p)
        if damp is None:
            phi2 += half * F
        else:
            phi2 = (phi2 + half * F) * damp
        phi1[1:-1] += dt * phi2[1:-1]
        F = _force(phi1, dx, p)
        if damp is None:
            phi2 += half * F
        else:
            phi2 = (phi2 + half * F) * damp
    return FieldState(s.x, phi1, phi2, s.t + nsteps * dt, s.kink,
                      s.boundary, s.sigma)


def conserved(s):
    """(E, P, M) by trapezoid quadrature with centered differences."""
    dphi = np.gradient(s.phi1, s.dx)
    W = s.potential.w(s.phi1)
    E = 0.5 * _trapz(s.phi2 ** 2 + dphi ** 2 + 2.0 * W, dx=s.dx)
    P = _trapz(s.phi2 * dphi, dx=s.dx)
    return float(E), float(P), float(E * E - P * P)


# ---------------------------------------------------------------------------
# modulation
# ---------------------------------------------------------------------------

@dataclass
class ModulationResult:
    c: float
    y: float
    u1: np.ndarray
    u2: np.ndarray
    res_F: float
    res_G: float
    iterations: int
    scale: float      # gamma^3 ||H'||^2, the natural residual scale

    @property
    def converged(self):
        return max(abs(self.res_F), abs(self.res_G)) <= 1e-12 * self.scale


def _modulation_system(s, c, y):
    k = s.kink
    gamma = 1.0 / math.sqrt(1.0 - c * c)
    xs = gamma * (s.x - y)
    H, hp, hpp, hppp = k.eval_all(xs)
    Hp = gamma * hp
    Hpp = gamma ** 2 * hpp
    Hppp = gamma ** 3 * hppp
    u1 = s.phi1 - H
    u2 = s.phi2 + c * Hp
    z = s.x - y
    g2 = gamma * gamma
    T = (Hp, -c * Hpp)
    D = (c * g2 * z * Hp, -g2 * Hp - c * c * g2 * z * Hpp)
    G = (T[1], -T[0])
    Fv = (D[1], -D[0])
    dx = s.dx
    F1 = _trapz(u1 * Fv[0] + u2 * Fv[1], dx=dx)
    F2 = _trapz(u1 * G[0] + u2 * G[1], dx=dx)
    g4 = g2 * g2
    A = (c * g2 * Hp + c * g2 * z * Hpp,
         -(1.0 + c * c) * g2 * Hpp - c * c * g2 * z * Hppp)
    B = (g4 * (1.0 + 2.0 * c * c) * z * Hp + c * c * g4 * z * z * Hpp,
         -3.0 * c * g4 * Hp - c * g4 * (3.0 + 2.0 * c * c) * z * Hpp
         - c ** 3 * g4 * z * z * Hppp)
    Tp = (Hpp, -c * Hppp)
    uJA = _trapz(u1 * A[1] - u2 * A[0], dx=dx)
    uJB = _trapz(u1 * B[1] - u2 * B[0], dx=dx)
    uJTp = _trapz(u1 * Tp[1] - u2 * Tp[0], dx=dx)
    lead = gamma ** 3 * k.norm_Hp_sq
    J = np.array([[-lead - uJA, uJB],
                  [-uJTp, -lead + uJA]])
    return F1, F2, J, u1, u2, lead


def _heuristic_guess(s):
    k = s.kink
    mid = k.pair.midpoint
    d = s.phi1 - mid
    idx = np.nonzero(d[:-1] * d[1:] <= 0.0)[0]
    if idx.size:
        i = idx[len(idx) // 2]
        frac = d[i] / (d[i] - d[i + 1]) if d[i] != d[i + 1] else 0.5
        y = s.x[i] + frac * s.dx
    else:
        y = 0.0
    _, P, _ = conserved(s)
    sv = -P / k.norm_Hp_sq
    c = sv / math.sqrt(1.0 + sv * sv)
    return c, y


def modulate(s, guess=(0.0, 0.0), max_iter=50, tol_factor=1e-12):
    """Solve the orthogonality conditions for (c, y) by Newton iteration."""
    for attempt, (c, y) in enumerate([tuple(guess), _heuristic_guess(s)]):
        best = None
        ok = False
        for it in range(1, max_iter + 1):
            c = min(max(c, -0.995), 0.995)
            F1, F2, J, u1, u2, lead = _modulation_system(s, c, y)
            res = max(abs(F1), abs(F2))
            if best is None or res < best:
                best = res
            if res <= tol_factor * lead:
                ok = True
                break
            try:
                dy, dc = np.linalg.solve(J, [F1, F2])
            except np.linalg.LinAlgError:
                break
            if not (np.isfinite(dy) and np.isfinite(dc)):
                break
            y -= dy
            c -= dc
            if abs(c) >= 1.0 or abs(y) > s.x[-1] + 10.0:
                break
        if ok:
            return ModulationResult(c, y, u1, u2, F1, F2, it, lead)
    raise ModulationError(
        "modulation Newton failed to converge (orbit departure?): "
        "best residual %.3g vs tolerance %.3g" % (best, tol_factor * lead))


# ---------------------------------------------------------------------------
# distances and the decay functional
# ---------------------------------------------------------------------------

def _interp_state(s, xq):
    return (_lagrange4(s.x, s.phi1, xq), _lagrange4(s.x, s.phi2, xq))


def local_distance(s, c, y, R):
    """|| p(.+y) - H_c ||_{c,R}: the c-weighted norm on |x| < R after
    recentering the field at y."""
    gamma = 1.0 / math.sqrt(1.0 - c * c)
    dx = s.dx
    n = int(round(R / dx))
    xw = np.arange(-n, n + 1) * dx
    xq = np.clip(xw + y, s.x[0], s.x[-1])
    p1, p2 = _interp_state(s, xq)
    k = s.kink
    u1 = p1 - k.eval(gamma * xw)
    u2 = p2 + c * gamma * k.eval(gamma * xw, 1)
    du1 = np.gradient(u1, dx)
    val = (_trapz(du1 ** 2, dx=dx) / gamma + gamma * _trapz(u1 ** 2, dx=dx)
           + gamma * _trapz((u2 + c * du1) ** 2, dx=dx))
    return math.sqrt(val)


def rho_functional(s, c, y):
    """L = int [ (dz z1)^2 + z1^2 + z2^2 ] rho^2, rho = sech(omega x / 10),
    in the kink frame z = gamma (x - y); evaluated by substitution on the
    lab grid."""
    gamma = 1.0 / math.sqrt(1.0 - c * c)
    k = s.kink
    xs = gamma * (s.x - y)
    H, hp, _, _ = k.eval_all(xs)
    u1 = s.phi1 - H
    u2 = s.phi2 + c * gamma * hp
    du1 = np.gradient(u1, s.dx)
    rho2 = 1.0 / np.cosh(k.pair.omega * xs / 10.0) ** 2
    integrand = ((du1 / gamma) ** 2 + u1 ** 2 + (u2 + c * du1) ** 2) * rho2
    return float(gamma * _trapz(integrand, dx=s.dx))


# ---------------------------------------------------------------------------
# run configuration and driver
# ---------------------------------------------------------------------------

@dataclass
class RunConfig:
    family: str = "phi6"
    params: dict = field(default_factory=dict)
    pair: tuple = (0.0, 1.0)
    c0: float = 0.0
    y0: float = 0.0
    R_dom: float | None = None
    dx: float = 0.05
    dt: float | None = None
    T_end: float = 200.0
    sample_stride: int = 10
    boundary: str = "sponge"
    sponge_strength: float = 2.0
    kink_R: float | None = None
    kink_dx: float = 0.01
    perturbation: dict = field(default_factory=lambda: {"type": "gaussian",
                                                        "amplitude": 0.01,
                                                        "width": 1.0,
                                                        "center": 0.0,
                                                        "component": 1})
    distance_radii: tuple = (5.0, 10.0, 20.0)
    outdir: str | None = None
    snapshots: tuple = ()
    resume: str | None = None

    @classmethod
    def from_file(cls, path):
        import configparser
        cp = configparser.ConfigParser(inline_comment_prefixes=("#",))
        with open(path) as fh:
            cp.read_file(fh)
        cfg = cls()
        md = cp["model"] if cp.has_section("model") else {}
        cfg.family = md.get("family", cfg.family)
        for key in ("m", "eta", "n"):
            if key in md:
                cfg.params[key] = (int(md[key]) if key == "n"
                                   else float(md[key]))
        if "pair" in md:
            cfg.pair = tuple(float(v) for v in md["pair"].split())
        cfg.c0 = float(md.get("c0", cfg.c0))
        cfg.y0 = float(md.get("y0", cfg.y0))
        gd = cp["grid"] if cp.has_section("grid") else {}
        if "r_dom" in gd:
            cfg.R_dom = float(gd["r_dom"])
        cfg.dx = float(gd.get("dx", cfg.dx))
        if "dt" in gd:
            cfg.dt = float(gd["dt"])
        cfg.T_end = float(gd.get("t_end", cfg.T_end))
        cfg.sample_stride = int(gd.get("sample_stride", cfg.sample_stride))
        cfg.boundary = gd.get("boundary", cfg.boundary)
        cfg.sponge_strength = float(gd.get("sponge_strength",
                                           cfg.sponge_strength))
        pd = cp["perturbation"] if cp.has_section("perturbation") else {}
        if pd:
            cfg.perturbation = {"type": pd.get("type", "gaussian")}
            for key in ("amplitude", "width", "center"):
                if key in pd:
                    cfg.perturbation[key] = float(pd[key])
            if "component" in pd:
                cfg.perturbation["component"] = int(pd["component"])
            if "path" in pd:
                cfg.perturbation["path"] = pd["path"]
        od = cp["output"] if cp.has_section("output") else {}
        if "dir" in od:
            cfg.outdir = od["dir"]
        if "snapshots" in od:
            cfg.snapshots = tuple(float(v) for v in od["snapshots"].split())
        if "resume" in od:
            cfg.resume = od["resume"]
        return cfg

    def build(self):
        p = make_family(self.family, **self.params)
        pair = p.pair(*self.pair)
        kR = self.kink_R if self.kink_R else 30.0 / pair.omega
        k = build_kink(p, pair, kR, self.kink_dx)
        return k


@dataclass
class ModulationTrack:
    t: np.ndarray
    c: np.ndarray
    y: np.ndarray
    E: np.ndarray
    P: np.ndarray
    M: np.ndarray
    dist: dict            # radius -> array
    Lfun: np.ndarray
    res_F: np.ndarray
    res_G: np.ndarray
    iters: np.ndarray
    c0: float

    def window(self, fraction=0.1):
        n = max(2, int(len(self.t) * fraction))
        return slice(len(self.t) - n, len(self.t))

    @property
    def c_plus(self):
        return float(np.mean(self.c[self.window()]))

    @property
    def c_plus_std(self):
        return float(np.std(self.c[self.window()]))

    @property
    def sup_c_dev(self):
        return float(np.max(np.abs(self.c - self.c0)))

    @property
    def L_peak(self):
        return float(np.max(self.Lfun))

    @property
    def L_final(self):
        return float(np.mean(self.Lfun[self.window()]))

    @property
    def decay_ratio(self):
        return self.L_final / self.L_peak if self.L_peak > 0 else 0.0

    @property
    def int_L(self):
        return float(_trapz(self.Lfun, self.t))


_TRACK_COLS = "t,c,y,E,P,M,{dist},Lfun,res_F,res_G,newton_iters"


def run(cfg, k=None, state=None, progress=None):
    """Evolve a configured run, tracking modulation parameters; returns
    (ModulationTrack, final FieldState)."""
    if k is None:
        k = cfg.build()
    dt = cfg.dt if cfg.dt else 0.8 * cfg.dx
    if state is None:
        state = make_state(k, cfg.c0, cfg.y0, cfg.R_dom, cfg.dx,
                           cfg.boundary, cfg.perturbation,
                           cfg.sponge_strength)
        if cfg.resume:
            state = load_snapshot(cfg.resume, k, cfg.boundary,
                                  cfg.sponge_strength)
    nsteps = max(0, int(round((cfg.T_end - state.t) / dt)))
    stride = cfg.sample_stride
    rows = []
    guess = (cfg.c0, cfg.y0)
    snap_times = sorted(cfg.snapshots)
    snap_idx = 0

    def sample(st):
        nonlocal guess
        mr = modulate(st, guess)
        guess = (mr.c, mr.y)
        E, P, M = conserved(st)
        d = [local_distance(st, mr.c, mr.y, R) for R in cfg.distance_radii]
        L = rho_functional(st, mr.c, mr.y)
        rows.append([st.t, mr.c, mr.y, E, P, M] + d
                    + [L, mr.res_F, mr.res_G, mr.iterations])

    sample(state)
    done = 0
    while done < nsteps:
        chunk = min(stride, nsteps - done)
        state = step(state, dt, chunk)
        done += chunk
        sample(state)
        if progress:
            progress(state.t, rows[-1])
        while snap_idx < len(snap_times) and state.t >= snap_times[snap_idx] - 0.5 * dt:
            if cfg.outdir:
                save_snapshot(state, os.path.join(
                    cfg.outdir, "snapshot_%g.csv" % snap_times[snap_idx]))
            snap_idx += 1
    arr = np.array(rows)
    nd = len(cfg.distance_radii)
    track = ModulationTrack(
        t=arr[:, 0], c=arr[:, 1], y=arr[:, 2], E=arr[:, 3], P=arr[:, 4],
        M=arr[:, 5],
        dist={R: arr[:, 6 + i] for i, R in enumerate(cfg.distance_radii)},
        Lfun=arr[:, 6 + nd], res_F=arr[:, 7 + nd], res_G=arr[:, 8 + nd],
        iters=arr[:, 9 + nd], c0=cfg.c0)
    if cfg.outdir:
        os.makedirs(cfg.outdir, exist_ok=True)
        save_snapshot(state, os.path.join(cfg.outdir,
                                          "snapshot_%g.csv" % state.t))
        write_track(track, cfg, os.path.join(cfg.outdir, "track.csv"))
    return track, state


def write_track(track, cfg, path):
    dist_cols = ",".join("local_distance@%g" % R for R in cfg.distance_radii)
    header = ("# kinklab-csv v1 track family=%s pair=(%g,%g) c0=%g\n"
              % (cfg.family, cfg.pair[0], cfg.pair[1], cfg.c0)
              + _TRACK_COLS.format(dist=dist_cols))
    cols = [track.t, track.c, track.y, track.E, track.P, track.M]
    cols += [track.dist[R] for R in cfg.distance_radii]
    cols += [track.Lfun, track.res_F, track.res_G, track.iters]
    np.savetxt(path, np.column_stack(cols), delimiter=",", header=header,
               comments="")


def save_snapshot(s, path):
    header = ("# kinklab-csv v1 snapshot t=%.12g dx=%.12g\nx,phi1,phi2"
              % (s.t, s.dx))
    np.savetxt(path, np.column_stack([s.x, s.phi1, s.phi2]), delimiter=",",
               header=header, comments="")


def load_snapshot(path, k, boundary="sponge", sponge_strength=2.0):
    with open(path) as fh:
        first = fh.readline()
    t = 0.0
    for tok in first.split():
        if tok.startswith("t="):
            t = float(tok[2:])
    data = np.loadtxt(path, delimiter=",", skiprows=2)
    x = data[:, 0]
    sigma = None
    if boundary == "sponge":
        sigma = _sponge_profile(x, float(x[-1]), strength=sponge_strength)
    return FieldState(x, data[:, 1], data[:, 2], t, k, boundary, sigma)
