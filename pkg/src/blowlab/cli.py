"""Command-line orchestration: spectra, evolutions, energy tables, validation.

Subcommands
-----------
spectrum   eigenvalue quantization vs collocation spectrum, JSON report
evolve     similarity-coordinate evolution (optionally tuning T), CSV + JSON
energy     blow-up rate table of the local energy norm, CSV + JSON
validate   run every invariant suite, one line per check

Exit codes: 0 ok, 1 validation failure, 2 domain error, 3 solver failure,
4 overflow / perturbation too large.  All outputs are deterministic for a
fixed seed.
"""

import argparse
import json
import math
import sys
from dataclasses import dataclass

import numpy as np

from . import evolve as ev
from . import model as md
from . import spectral as sp
from . import validate as vl
from .errors import (AmplitudeAbort, DomainError, PerturbationTooLarge,
                     SolverError)
from .grid import build_grid


@dataclass
class RunConfig:
    p: float = 3.0
    n: int = 96
    eps: float = 0.1
    tau_end: float = 10.0
    amplitude: float = 1e-3
    seed: int = 0
    out: str = ""
    T: float = 1.0
    tune: bool = False
    halfplane: float = None
    dtau: float = None
    field_out: str = ""


def _summary_path(out):
    stem = out.rsplit(".", 1)[0] if "." in out else out
    return stem + ".summary.json"


def cmd_spectrum(cfg):
    params = md.params_new(cfg.p, eps=cfg.eps)
    coarse = build_grid(cfg.n)
    fine = build_grid(int(math.ceil(1.5 * cfg.n)))
    ops = sp.assemble_L(coarse, params)
    report = sp.discrete_eigenvalues(ops, (coarse, fine),
                                     halfplane=cfg.halfplane)
    out = cfg.out or "spectrum.json"
    with open(out, "w") as fh:
        fh.write(report.to_json() + "\n")
    stable = report.stable_eigenvalues()
    print(f"spectrum: p={cfg.p} n={coarse.n}/{fine.n} "
          f"analytic={report.analytic} stable={len(stable)} "
          f"projection_rank={report.projection_rank} -> {out}")
    return 0


def _seeded_data(cfg, params):
    gdata = build_grid(cfg.n, 1.5)
    rng = np.random.default_rng(cfg.seed)
    fg = md.random_polynomial_data(gdata, rng, params,
                                   amplitude=cfg.amplitude)
    return md.data_to_v(fg, params)


def cmd_evolve(cfg):
    params = md.params_new(cfg.p, T=cfg.T, eps=cfg.eps)
    grid = build_grid(cfg.n)
    ops = sp.assemble_L(grid, params)
    proj = sp.riesz_projection(ops)
    dtau = cfg.dtau if cfg.dtau is not None else ev.stable_dtau(ops)
    v = _seeded_data(cfg, params)
    t_star = None
    abort = None
    if cfg.tune:
        t_star, traj = ev.tune_T(v, params, cfg.tau_end, grid, ops,
                                 projection=proj, dtau=dtau)
    else:
        init = md.U_map(v, cfg.T, params, grid)
        try:
            traj = ev.integrate(init, cfg.tau_end, ops, grid, params,
                                nonlinear=True, dtau=dtau, projection=proj)
        except AmplitudeAbort as exc:
            # untuned runs grow like e^tau; keep the partial trajectory so
            # the growth rate stays measurable, then report the abort
            traj = exc.trajectory
            abort = exc
    out = cfg.out or "trajectory.csv"
    traj.to_csv(out)
    summary = {
        "p": cfg.p, "n": cfg.n, "eps": cfg.eps, "seed": cfg.seed,
        "amplitude": cfg.amplitude, "tau_end": cfg.tau_end,
        "dtau": dtau, "T": cfg.T, "T_star": t_star,
        "mu": params.mu, "rate": None, "fit_amplitude": None,
        "growth_rate": None, "xnorm_mu": None,
        "aborted_at": None if abort is None else float(traj.taus[-1]),
    }
    span = float(traj.taus[-1] - traj.taus[0])
    window = (min(2.0, 0.5 * span), float(traj.taus[-1]) - min(1.0, 0.2 * span))
    if traj.norms.max() > 1e-14:
        summary["xnorm_mu"] = traj.xnorm(params.mu)
        try:
            rate, amp = ev.decay_fit(traj, window)
            summary["rate"] = rate
            summary["fit_amplitude"] = amp
        except DomainError:
            pass
        try:
            summary["growth_rate"] = ev.growth_fit(
                traj.taus, traj.unstable_coeffs, window)
        except DomainError:
            pass
    if cfg.field_out:
        # reconstructed physical field at the last sample; trajectory time
        # is the shifted variable, the unshifted one is tau - log T
        T_used = t_star if t_star is not None else cfg.T
        p_used = md.params_new(cfg.p, T=T_used, eps=cfg.eps)
        tau_phys = float(traj.taus[-1]) - math.log(T_used)
        rec = md.reconstruct_field(traj.states[-1], tau_phys, p_used, grid)
        md.field_to_csv(rec, T_used - math.exp(-tau_phys), cfg.field_out)
    spath = _summary_path(out)
    with open(spath, "w") as fh:
        json.dump(summary, fh, indent=2)
        fh.write("\n")
    if abort is not None:
        print(f"evolve: partial trajectory to tau={traj.taus[-1]:.1f} "
              f"-> {out}, {spath}")
        raise abort
    print(f"evolve: p={cfg.p} n={cfg.n} tuned={cfg.tune} "
          f"T_star={t_star} rate={summary['rate']} -> {out}, {spath}")
    return 0


def cmd_energy(cfg):
    params = md.params_new(cfg.p, T=cfg.T, eps=cfg.eps)
    ts = np.linspace(0.0, 0.9, 46)
    vals = []
    for t in ts:
        gr = build_grid(cfg.n, params.T - t)
        pair = md.RadialPair(f=np.full(cfg.n, md.psi_T(params, t)),
                             g=np.full(cfg.n, md.psi_T_t(params, t)),
                             grid=gr)
        vals.append(md.energy_norm(pair))
    slope = float(np.polyfit(np.log(params.T - ts), np.log(vals), 1)[0])
    theory = -(5.0 - cfg.p) / (2.0 * (cfg.p - 1.0))
    out = cfg.out or "energy.csv"
    with open(out, "w") as fh:
        fh.write("t,energy_norm\n")
        for t, val in zip(ts, vals):
            fh.write(f"{t:.10g},{val:.17g}\n")
    spath = _summary_path(out)
    with open(spath, "w") as fh:
        json.dump({"p": cfg.p, "T": cfg.T, "slope": slope,
                   "slope_theory": theory,
                   "slope_error": abs(slope - theory)}, fh, indent=2)
        fh.write("\n")
    print(f"energy: p={cfg.p} slope={slope:.6f} theory={theory:.6f} "
          f"-> {out}, {spath}")
    return 0


def cmd_validate(cfg):
    results = vl.run_all(p=cfg.p, n=cfg.n, eps=cfg.eps, seed=cfg.seed)
    failures = 0
    for res in results:
        print(res.line())
        failures += 0 if res.ok else 1
    print(f"validate: {len(results) - failures}/{len(results)} checks passed")
    return 0 if failures == 0 else 1


def build_parser():
    parser = argparse.ArgumentParser(
        prog="blowlab",
        description="Numerical laboratory for stable self-similar blow-up "
                    "of the radial focusing wave equation.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(sp_):
        sp_.add_argument("--p", type=float, default=3.0,
                         help="nonlinearity exponent in (1, 3]")
        sp_.add_argument("--n", type=int, default=96, help="grid size")
        sp_.add_argument("--eps", type=float, default=0.1,
                         help="rate loss epsilon")
        sp_.add_argument("--seed", type=int, default=0)
        sp_.add_argument("--out", type=str, default="")

    p_spec = sub.add_parser("spectrum", help="eigenvalue report (JSON)")
    common(p_spec)
    p_spec.add_argument("--halfplane", type=float, default=None,
                        help="report eigenvalues with Re above this "
                             "(default: omega_tilde + 0.1)")

    p_ev = sub.add_parser("evolve", help="similarity-coordinate evolution")
    common(p_ev)
    p_ev.add_argument("--tau-end", type=float, default=10.0)
    p_ev.add_argument("--amplitude", type=float, default=1e-3)
    p_ev.add_argument("--T", type=float, default=1.0)
    p_ev.add_argument("--dtau", type=float, default=None,
                      help="RK4 step (default: largest stable step)")
    p_ev.add_argument("--field-out", type=str, default="",
                      help="also write the reconstructed physical field at "
                           "the last sample (CSV t,r,psi,psi_t)")
    tune = p_ev.add_mutually_exclusive_group()
    tune.add_argument("--tune-T", dest="tune", action="store_true",
                      help="bisect the blow-up time to suppress the "
                           "unstable mode")
    tune.add_argument("--no-tune", dest="tune", action="store_false")
    p_ev.set_defaults(tune=False)

    p_en = sub.add_parser("energy", help="energy blow-up rate table")
    common(p_en)
    p_en.add_argument("--T", type=float, default=1.0)

    p_val = sub.add_parser("validate", help="run every invariant suite")
    common(p_val)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    cfg = RunConfig(p=args.p, n=args.n, eps=args.eps, seed=args.seed,
                    out=args.out)
    if args.command == "evolve":
        cfg.tau_end = args.tau_end
        cfg.amplitude = args.amplitude
        cfg.T = args.T
        cfg.tune = args.tune
        cfg.dtau = args.dtau
        cfg.field_out = args.field_out
    elif args.command == "energy":
        cfg.T = args.T
    elif args.command == "spectrum":
        cfg.halfplane = args.halfplane
    handler = {"spectrum": cmd_spectrum, "evolve": cmd_evolve,
               "energy": cmd_energy, "validate": cmd_validate}[args.command]
    try:
        return handler(cfg)
    except DomainError as exc:
        print(f"error: domain: {exc}", file=sys.stderr)
        return 2
    except SolverError as exc:
        print(f"error: solver: {exc}", file=sys.stderr)
        return 3
    except PerturbationTooLarge as exc:
        print(f"error: overflow: {exc}; retry with a smaller --amplitude",
              file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
