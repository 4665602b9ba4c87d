"""Command-line front end.

Subcommands
-----------
wells     validate the well structure of a potential
check     classify kinks by the asymptotic-stability criterion
kink      build a kink profile and export it as CSV
sweep     classify along a parameter range / bisect a threshold
figures   sign-grid and zero-contour data for the phi^8 / phi^10 factors
spectrum  lowest eigenvalues of the linearized operators
simulate  time evolution with modulation tracking (config file driven)
report    regenerate the full classification table

Exit codes: 0 pass, 2 usage/validation error, 3 no result in range,
4 runtime abort.  All CSV output carries a versioned schema header.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from . import criterion, dynamics, kink, potentials, spectral

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NORESULT = 3
EXIT_ABORT = 4

_FAMILY_PARAMS = ("m", "eta", "n")


def _threads(args):
    if args.threads is not None:
        return args.threads
    env = os.environ.get("KINKLAB_THREADS")
    if env:
        return int(env)
    return os.cpu_count() or 1


def _family_kwargs(args):
    kw = {}
    for key in _FAMILY_PARAMS:
        val = getattr(args, key, None)
        if val is not None:
            kw[key] = val
    return kw


def _load_potential(args):
    if getattr(args, "potential_file", None):
        return potentials.load_potential(args.potential_file)
    if not args.family:
        raise potentials.PotentialError("need --family or --potential-file")
    return potentials.make_family(args.family, **_family_kwargs(args))


def _parse_pair(tokens, params):
    """Pair endpoints may be numbers or parameter names, e.g. '1,m'."""
    out = []
    for tok in tokens.replace(",", " ").split():
        neg = tok.startswith("-") and not tok[1:].replace(".", "").isdigit() \
            and tok[1:] in params
        name = tok[1:] if neg else tok
        if name in params:
            out.append(-params[name] if neg else params[name])
        else:
            out.append(float(tok))
    if len(out) != 2:
        raise ValueError("pair needs exactly two endpoints: %r" % tokens)
    return out[0], out[1]


def _emit(args, rows, header):
    if args.json:
        print(json.dumps([dict(zip(header, r)) for r in rows], indent=2))
        return
    widths = [max(len(str(h)), max((len(_fmt(r[i])) for r in rows),
                                   default=0))
              for i, h in enumerate(header)]
    line = "  ".join(h.ljust(w) for h, w in zip(header, widths))
    print(line)
    print("-" * len(line))
    for r in rows:
        print("  ".join(_fmt(v).ljust(w) for v, w in zip(r, widths)))


def _fmt(v):
    if isinstance(v, float):
        return "%.10g" % v
    return str(v)


def _write_csv(path, rows, header, schema):
    with open(path, "w") as fh:
        fh.write("# kinklab-csv v1 %s\n" % schema)
        fh.write(",".join(header) + "\n")
        for r in rows:
            fh.write(",".join(_fmt(v) for v in r) + "\n")


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_wells(args):
    p = _load_potential(args)
    rows = []
    ok = True
    for pair in p.well_pairs():
        rep = potentials.validate_wells(p, pair.zeta_minus, pair.zeta_plus)
        ok = ok and rep.valid
        rows.append([pair.zeta_minus, pair.zeta_plus, pair.omega_minus,
                     pair.omega_plus, rep.min_interior,
                     "valid" if rep.valid else "INVALID"])
    header = ("zeta_minus", "zeta_plus", "omega_minus", "omega_plus",
              "min_W_interior", "status")
    _emit(args, rows, header)
    if args.out:
        _write_csv(args.out, rows, header, "wells family=%s" % p.family)
    return EXIT_OK if ok else EXIT_NORESULT


def _classify_rows(p, pairs):
    rows = []
    for pair in pairs:
        res = criterion.classify(p, pair)
        note = ""
        if res.label == "Constant":
            note = "V is constant: linear Klein-Gordon dynamics around " \
                   "the kink (criterion holds trivially)"
        rows.append([p.family, "(%g,%g)" % (pair.zeta_minus, pair.zeta_plus),
                     res.label,
                     res.zeta0 if res.zeta0 is not None else "", res.margin,
                     note])
    return rows


def cmd_check(args):
    p = _load_potential(args)
    if args.all_pairs:
        pairs = p.well_pairs()
    elif args.pair:
        pairs = [p.pair(*_parse_pair(args.pair, p.params))]
    else:
        print("check: need --pair or --all-pairs", file=sys.stderr)
        return EXIT_USAGE
    rows = _classify_rows(p, pairs)
    header = ("family", "pair", "classification", "zeta0", "margin", "note")
    _emit(args, rows, header)
    if args.out:
        _write_csv(args.out, rows, header, "check family=%s" % p.family)
    return EXIT_OK


def cmd_kink(args):
    p = _load_potential(args)
    pair = p.pair(*_parse_pair(args.pair, p.params))
    R = args.R if args.R else 20.0 / pair.omega
    k = kink.build_kink(p, pair, R, args.dx)
    res = k.residuals()
    tf_minus, tf_plus = k.tail_fit()
    rows = [["sup |H''-W'(H)|", res["ode"]],
            ["sup |(H')^2-2W(H)|", res["first_integral"]],
            ["omega_minus fit", tf_minus.rate],
            ["omega_plus fit", tf_plus.rate],
            ["lambda_minus", k.lam_minus],
            ["lambda_plus", k.lam_plus],
            ["||H'||^2", k.norm_Hp_sq]]
    _emit(args, rows, ("quantity", "value"))
    if args.out:
        k.export_csv(args.out)
        print("profile written to %s" % args.out)
    return EXIT_OK


def cmd_sweep(args):
    p0 = potentials.make_family(args.family, **{args.param: args.lo})

    def pair_of(p, val):
        return p.pair(*_parse_pair(args.pair, p.params))

    if args.threshold:
        try:
            tr = criterion.threshold_scan(args.family, args.param, args.lo,
                                          args.hi, pair_of, tol=args.tol)
        except ValueError as exc:
            print("sweep: %s" % exc, file=sys.stderr)
            return EXIT_NORESULT
        rows = [[tr.value, tr.bracket[0], tr.bracket[1],
                 "satisfied" if tr.satisfied_low else "inconclusive",
                 tr.n_bisections]]
        header = ("threshold", "bracket_lo", "bracket_hi", "low_side",
                  "bisections")
        _emit(args, rows, header)
        if args.out:
            _write_csv(args.out, rows, header,
                       "threshold family=%s param=%s" % (args.family,
                                                         args.param))
        return EXIT_OK
    values = np.linspace(args.lo, args.hi, args.steps)
    rows = criterion.sweep(args.family, args.param, values, pair_of,
                           threads=_threads(args))
    out = [[v, lab, z if z is not None else "", mg, nf]
           for v, lab, z, mg, nf in rows]
    header = (args.param, "classification", "zeta0", "margin",
              "near_threshold")
    _emit(args, out, header)
    if args.out:
        _write_csv(args.out, out, header,
                   "sweep family=%s param=%s" % (args.family, args.param))
    return EXIT_OK


def cmd_figures(args):
    which = args.which
    phi_range = (0.0, args.phi_max)
    m_range = (1.0, args.m_max)
    fn = {"phi8": criterion.u8, "phi10": criterion.u10}[which]
    phi = np.linspace(*phi_range, args.n)
    m = np.linspace(*m_range, args.n)
    nthreads = _threads(args)
    if nthreads > 1:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(max_workers=nthreads) as ex:
            cols = list(ex.map(lambda mm: fn(phi, mm), m))
        F = np.column_stack(cols)
    else:
        P, M = np.meshgrid(phi, m, indexing="ij")
        F = fn(P, M)
    pts, dev = criterion.level_set(which, phi_range, m_range,
                                   n_phi=args.n, n_m=args.n)
    os.makedirs(args.out, exist_ok=True)
    grid_path = os.path.join(args.out, "%s_signgrid.csv" % which)
    with open(grid_path, "w") as fh:
        fh.write("# kinklab-csv v1 signgrid which=%s\nphi,m,sign\n" % which)
        for i in range(0, args.n, max(1, args.n // 200)):
            for j in range(0, args.n, max(1, args.n // 200)):
                fh.write("%.10g,%.10g,%d\n"
                         % (phi[i], m[j], 1 if F[i, j] > 0 else -1))
    cont_path = os.path.join(args.out, "%s_contour.csv" % which)
    _write_csv(cont_path, [list(pt) for pt in pts], ("phi", "m"),
               "contour which=%s branch_deviation=%.3g" % (which, dev))
    print("sign grid: %s" % grid_path)
    print("contour (%d points, branch deviation %.3g): %s"
          % (len(pts), dev, cont_path))
    return EXIT_OK


def cmd_spectrum(args):
    p = _load_potential(args)
    pair = p.pair(*_parse_pair(args.pair, p.params))
    study = spectral.convergence_study(p, pair, args.kind, args.kcount,
                                       args.R, args.dx)
    k = kink.build_kink(p, pair, args.R, args.dx)
    er = spectral.eigen_lowest(spectral.discretize(args.kind, k),
                               args.kcount)
    rows = [[i, v, r, int(f)] for i, (v, r, f)
            in enumerate(zip(er.values, er.residuals, er.edge_flags))]
    header = ("index", "eigenvalue", "residual", "at_continuum_edge")
    _emit(args, rows, header)
    print("richardson-extrapolated:",
          " ".join("%.10g" % v for v in study.extrapolated))
    if args.out:
        _write_csv(args.out, rows, header,
                   "spectrum family=%s kind=%s dx=%g R=%g"
                   % (p.family, args.kind, args.dx, args.R))
        conv = [[r.dx] + list(r.values) for r in study.rows]
        _write_csv(os.path.splitext(args.out)[0] + "_convergence.csv", conv,
                   ["dx"] + ["lambda%d" % i for i in range(args.kcount)],
                   "spectrum-convergence family=%s kind=%s"
                   % (p.family, args.kind))
    return EXIT_OK


def cmd_simulate(args):
    try:
        cfg = dynamics.RunConfig.from_file(args.config)
    except (OSError, KeyError, ValueError) as exc:
        print("simulate: bad config: %s" % exc, file=sys.stderr)
        return EXIT_USAGE
    if args.resume:
        cfg.resume = args.resume
    if args.outdir:
        cfg.outdir = args.outdir
    dt = cfg.dt if cfg.dt else 0.8 * cfg.dx
    if dt > 0.9 * cfg.dx + 1e-15:
        print("simulate: CFL violated (dt=%g > 0.9 dx=%g)" % (dt, cfg.dx),
              file=sys.stderr)
        return EXIT_USAGE
    try:
        track, state = dynamics.run(cfg)
    except dynamics.DynamicsError as exc:
        print("simulate: aborted: %s" % exc, file=sys.stderr)
        return EXIT_ABORT
    if not np.all(np.isfinite(state.phi1)):
        print("simulate: non-finite field values", file=sys.stderr)
        return EXIT_ABORT
    E0, M0 = track.E[0], track.M[0]
    rows = [["c_plus", track.c_plus],
            ["c_plus_std", track.c_plus_std],
            ["sup |c - c0|", track.sup_c_dev],
            ["L decay ratio", track.decay_ratio],
            ["int L dt", track.int_L],
            ["E drift (rel)", abs(track.E[-1] - E0) / max(abs(E0), 1e-30)],
            ["M drift (rel)", abs(track.M[-1] - M0) / max(abs(M0), 1e-30)]]
    _emit(args, rows, ("quantity", "value"))
    return EXIT_OK


_REPORT_CASES = [
    ("sg", {}, "odd"),
    ("phi4", {}, [(-1.0, 1.0)]),
    ("phi6", {}, [(0.0, 1.0), (-1.0, 0.0)]),
    ("phi8", {"m": 1.5}, [(-1.0, 1.0), (1.0, 1.5)]),
    ("phi8", {"m": 3.0}, [(1.0, 3.0), (-1.0, 1.0)]),
    ("phi10", {"m": 2.0}, [(0.0, 1.0), (1.0, 2.0)]),
    ("dsg1", {"eta": -0.1}, "odd"),
    ("dsg1", {"eta": 1.0}, "odd"),
    ("dsg2", {"eta": -1.0}, "odd+next"),
]


def report_rows():
    """The full classification table of the built-in families."""
    rows = []
    for tag, params, pairs in _REPORT_CASES:
        p = potentials.make_family(tag, **params)
        if pairs == "odd":
            plist = [min(p.well_pairs(), key=lambda pr: abs(pr.midpoint))]
        elif pairs == "odd+next":
            wp = sorted(p.well_pairs(), key=lambda pr: abs(pr.midpoint))
            plist = [wp[0], wp[1]]
        else:
            plist = [p.pair(a, b) for a, b in pairs]
        for pair in plist:
            res = criterion.classify(p, pair)
            ptxt = ",".join("%s=%g" % kv for kv in params.items())
            rows.append([tag, ptxt, "(%g,%g)"
                         % (pair.zeta_minus, pair.zeta_plus), res.label])
    for n in (2, 5, 10):
        out = criterion.sg_limit_report("wt4n", [n])
        for nn, pr, label, _ in out:
            rows.append(["wt4n", "n=%d" % nn, "(%g,%g)" % pr, label])
    return rows


def cmd_report(args):
    rows = report_rows()
    header = ("family", "params", "pair", "classification")
    _emit(args, rows, header)
    if args.out:
        _write_csv(args.out, rows, header, "report")
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def _add_family_flags(sp):
    sp.add_argument("--family", help="built-in family tag "
                    "(sg phi4 phi6 phi8 phi10 w4n w4n2 wt4n wt4n2 dsg1 dsg2)")
    sp.add_argument("--m", type=float, help="outer-well parameter")
    sp.add_argument("--eta", type=float, help="double sine-Gordon parameter")
    sp.add_argument("--n", type=int, help="number of trig-well factors")
    sp.add_argument("--potential-file",
                    help="custom potential definition file")


def build_parser():
    ap = argparse.ArgumentParser(
        prog="kinklab",
        description="Kink solitons in (1+1)-d scalar field theories: "
        "criterion checks, profiles, spectra, and dynamics.")
    ap.add_argument("--json", action="store_true",
                    help="emit records as JSON instead of a table")
    ap.add_argument("--threads", type=int, default=None,
                    help="worker pool size for sweep/figures "
                    "(default: KINKLAB_THREADS or logical cores)")
    sub = ap.add_subparsers(dest="cmd", required=True)

    sp = sub.add_parser("wells", help="validate well structure")
    _add_family_flags(sp)
    sp.add_argument("--out", help="CSV output path")
    sp.set_defaults(fn=cmd_wells)

    sp = sub.add_parser("check", help="classify kinks by the criterion")
    _add_family_flags(sp)
    sp.add_argument("--pair", help="well pair, e.g. '-1 1' or '1,m'")
    sp.add_argument("--all-pairs", action="store_true")
    sp.add_argument("--out", help="CSV output path")
    sp.set_defaults(fn=cmd_check)

    sp = sub.add_parser("kink", help="build a kink profile")
    _add_family_flags(sp)
    sp.add_argument("--pair", required=True)
    sp.add_argument("--R", type=float, default=None,
                    help="half-width of the grid (default 20/omega)")
    sp.add_argument("--dx", type=float, default=0.01)
    sp.add_argument("--out", help="profile CSV output path")
    sp.set_defaults(fn=cmd_kink)

    sp = sub.add_parser("sweep", help="parameter sweep / threshold bisection")
    sp.add_argument("--family", required=True)
    sp.add_argument("--param", required=True, choices=("m", "eta"))
    sp.add_argument("--lo", type=float, required=True)
    sp.add_argument("--hi", type=float, required=True)
    sp.add_argument("--steps", type=int, default=41)
    sp.add_argument("--pair", required=True,
                    help="well pair; endpoints may name the parameter, "
                    "e.g. '1,m'")
    sp.add_argument("--threshold", action="store_true",
                    help="bisect for the classification flip")
    sp.add_argument("--tol", type=float, default=1e-6)
    sp.add_argument("--out", help="CSV output path")
    sp.set_defaults(fn=cmd_sweep)

    sp = sub.add_parser("figures", help="phi8/phi10 sign grid and contour")
    sp.add_argument("--which", required=True, choices=("phi8", "phi10"))
    sp.add_argument("--phi-max", type=float, default=2.5)
    sp.add_argument("--m-max", type=float, default=3.0)
    sp.add_argument("--n", type=int, default=400)
    sp.add_argument("--out", default="figures")
    sp.set_defaults(fn=cmd_figures)

    sp = sub.add_parser("spectrum", help="eigenvalues of L or L0")
    _add_family_flags(sp)
    sp.add_argument("--pair", required=True)
    sp.add_argument("--kind", default="L", choices=("L", "L0"))
    sp.add_argument("--R", type=float, default=20.0)
    sp.add_argument("--dx", type=float, default=0.005)
    sp.add_argument("--kcount", type=int, default=4)
    sp.add_argument("--out", help="CSV output path")
    sp.set_defaults(fn=cmd_spectrum)

    sp = sub.add_parser("simulate", help="run a configured simulation")
    sp.add_argument("config", help="RunConfig INI file")
    sp.add_argument("--resume", help="snapshot CSV to continue from")
    sp.add_argument("--outdir", help="override output directory")
    sp.set_defaults(fn=cmd_simulate)

    sp = sub.add_parser("report", help="regenerate the classification table")
    sp.add_argument("--out", help="CSV output path")
    sp.set_defaults(fn=cmd_report)
    return ap


def main(argv=None):
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.fn(args)
    except (potentials.PotentialError, ValueError) as exc:
        print("kinklab: %s" % exc, file=sys.stderr)
        return EXIT_USAGE
    except (kink.KinkError, spectral.SpectralError,
            dynamics.DynamicsError) as exc:
        print("kinklab: aborted: %s" % exc, file=sys.stderr)
        return EXIT_ABORT


if __name__ == "__main__":
    sys.exit(main())
