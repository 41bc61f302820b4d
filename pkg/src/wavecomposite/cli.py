"""
Command line entry point: ``wavecomposite <subcommand> --config PATH [--out DIR]``.
"""

from __future__ import annotations

import argparse
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__, io
from .ansatz import (ansatz_fields, build_ansatz, default_residual_times, min_profile_width,
                     residual_bound_report, residual_series)
from .cauchy import Grid1D, run_cauchy, theorem_proxy
from .config import RunConfig, load_config
from .diagnostics import verify
from .errors import WaveCompositeError
from .periodic import estimate_decay, solve_periodic
from .profiles import (build_composite, fit_gaussian_bound, ode_residual, rarefaction_fields,
                       solve_contact_profile)
from .riemann import EndStates, composite_end_states, riemann_fields, solve_pattern

log = logging.getLogger("wavecomposite")

SUBCOMMANDS = ("riemann", "profile-contact", "profile-rarefaction", "periodic", "ansatz", "simulate",
               "verify", "sweep")


def _pattern(cfg: RunConfig):
    g = cfg.gas
    right = cfg.right
    if right is None:
        ends = composite_end_states(g, cfg.left, cfg.get_float("delta"), cfg.get_float("delta.pressure_drop"))
    else:
        ends = EndStates(cfg.left, right)
    return g, solve_pattern(g, ends)


def _pattern_dict(g, pat) -> dict:
    return {
        "left": pat.ends.left.as_tuple(), "right": pat.ends.right.as_tuple(),
        "vm_left": pat.vm_left, "vm_right": pat.vm_right, "um": pat.um,
        "thm_left": pat.thm_left, "thm_right": pat.thm_right, "p_mid": pat.p_mid(g),
        "s_left": pat.s_left, "s_right": pat.s_right, "delta": pat.delta,
        "fan_speeds": list(pat.fan_speeds(g)),
    }


def cmd_riemann(cfg: RunConfig, out: Path) -> int:
    g, pat = _pattern(cfg)
    xi = np.linspace(cfg.get_float("riemann.xi_min"), cfg.get_float("riemann.xi_max"), cfg.get_int("riemann.n"))
    v, u, th = riemann_fields(g, pat, xi)
    io.write_csv(out / "riemann.csv", ["xi", "v", "u", "theta"], [xi, v, u, th])
    info = _pattern_dict(g, pat)
    io.write_json(out / "pattern.json", info)
    for k in ("vm_left", "vm_right", "um", "thm_left", "thm_right", "p_mid"):
        print(f"{k:10s} {info[k]:.12g}")
    return 0


def cmd_profile_contact(cfg: RunConfig, out: Path) -> int:
    g, pat = _pattern(cfg)
    cp = solve_contact_profile(g, pat.thm_left, pat.thm_right, pat.p_mid(g), L=cfg.get_float("profile.L"),
                               n=cfg.get_int("profile.n"))
    theta = cp.theta_of_xi(cp.xi)
    io.write_csv(out / "contact_profile.csv", ["xi", "Theta", "dTheta"], [cp.xi, theta, cp.dtheta_of_xi(cp.xi)])
    info = {"ode_residual": ode_residual(cp), "newton_residual": cp.newton_residual, "L": cp.L,
            "Theta_at_0": float(cp.theta_of_xi(np.array([0.0]))[0]), "a": cp.a_coeff}
    if not cp.degenerate:
        info["C1"], info["C2"] = fit_gaussian_bound(cp)
    io.write_json(out / "contact_profile.json", info)
    print(f"ODE residual {info['ode_residual']:.3e}, Theta(0) = {info['Theta_at_0']:.12g}")
    return 0


def cmd_profile_rarefaction(cfg: RunConfig, out: Path) -> int:
    g, pat = _pattern(cfg)
    cw = build_composite(g, pat, L=cfg.get_float("profile.L"), n=cfg.get_int("profile.n"))
    times = cfg.get_list("rarefaction.times")
    rows = []
    for t in times:
        lam = max(abs(x) for x in pat.fan_speeds(g))
        x = np.linspace(-(lam * t + 20), lam * t + 20, 4001)
        f1 = rarefaction_fields(g, cw.r1.wave, cw.r1.anchor, cw.r1.s_fixed, 1, x, t)
        f3 = rarefaction_fields(g, cw.r3.wave, cw.r3.anchor, cw.r3.s_fixed, 3, x, t)
        io.write_csv(out / f"rarefaction_t{t:g}.csv", ["x", "v1", "u1", "theta1", "v3", "u3", "theta3"],
                     [x, f1.v, f1.u, f1.theta, f3.v, f3.u, f3.theta])
        rows.append((t, float(np.max(f1.u_x)), float(np.max(f3.u_x))))
    tt, a, b = (np.array(c) for c in zip(*rows))
    io.write_csv(out / "rarefaction_norms.csv", ["t", "Linf_u1x", "Linf_u3x"], [tt, a, b])
    return 0


def cmd_periodic(cfg: RunConfig, out: Path) -> int:
    g, pat = _pattern(cfg)
    pert = cfg.perturbation
    T = cfg.get_float("periodic.T")
    summary = {}
    for side, base in (("minus", pat.ends.left), ("plus", pat.ends.right)):
        sol = solve_periodic(g, base, pert, n=cfg.get_int("periodic.n"), T=T,
                             sample_dt=cfg.get_float("periodic.sample_dt"), scheme=cfg["time.scheme"],
                             cfl=cfg.get_float("time.cfl"), eps0=cfg.get_float("pert.eps0"))
        keys = sorted(sol.norms)
        io.write_csv(out / f"periodic_{side}.csv", ["t"] + keys, [sol.times] + [sol.norms[k] for k in keys])
        info = {"conservation_drift": sol.conservation_drift, "truncation": sol.truncation}
        if not pert.is_zero:
            est = estimate_decay(sol)
            info.update(est._asdict())
            print(f"{side}: rate {est.rate:.5f}, r2 {est.r2:.6f}, window {est.window}")
        summary[side] = info
    io.write_json(out / "periodic.json", summary)
    return 0


def _ansatz_for(cfg: RunConfig, T: float):
    g, pat = _pattern(cfg)
    cw = build_composite(g, pat, L=cfg.get_float("profile.L"), n=cfg.get_int("profile.n"))
    af = build_ansatz(g, cw, cfg.perturbation, T=T, n_torus=cfg.get_int("periodic.n_ansatz"),
                      sample_dt=cfg.get_float("periodic.sample_dt"), eps0=cfg.get_float("pert.eps0"),
                      scheme=cfg["time.scheme"], middle=False)
    return g, pat, cw, af


def cmd_ansatz(cfg: RunConfig, out: Path) -> int:
    times = cfg.get_list("ansatz.times")
    T = max(max(times), cfg.get_float("time.T"))
    g, pat, cw, af = _ansatz_for(cfg, T)
    grid = Grid1D(cfg.get_float("grid.xmin"), cfg.get_float("grid.xmax"), cfg.get_int("grid.ncells"))
    x = grid.centers
    for t in times:
        v, u, th = ansatz_fields(af, x, t)
        io.write_csv(out / f"ansatz_t{t:g}.csv", ["x", "vbar", "ubar", "thetabar"], [x, v, u, th])
    ts = default_residual_times(cfg.get_float("time.T"))
    ser = residual_series(af, ts)
    keys = ("F", "F_closed", "G", "H", "G1", "G2", "G3", "H1", "H2", "H3", "H4")
    io.write_csv(out / "residual_norms.csv", ["t"] + [f"L1_{k}" for k in keys], [ts] + [ser.L1[k] for k in keys])
    rep = residual_bound_report(ser)
    io.write_json(out / "residual_report.json", rep)
    for k in ("G2_exponent", "H4_exponent", "G3_rate", "F_rate", "F_agreement_max_rel"):
        print(f"{k:22s} {rep[k]}")
    return 0


def simulate(cfg: RunConfig, out: Path) -> dict:
    """Run the Cauchy problem and write snapshots, norms, the phi history and run metadata."""
    out.mkdir(parents=True, exist_ok=True)
    T = cfg.get_float("time.T")
    g, pat, cw, af = _ansatz_for(cfg, T)
    grid = Grid1D(cfg.get_float("grid.xmin"), cfg.get_float("grid.xmax"), cfg.get_int("grid.ncells"))
    cps = cfg.get_list("time.checkpoints")
    run = run_cauchy(g, af, grid, T=T, checkpoints=cps, cfl=cfg.get_float("time.cfl"))
    names = ("Linf_diff_ansatz", "Linf_diff_riemann", "Linf_diff_riemann_wide", "H1_pert", "L2_pert")
    io.write_csv(out / "norms.csv", ["t"] + list(names), [run.times] + [run.series[k] for k in names])
    snaps = []
    x = grid.centers
    for t, st in sorted(run.checkpoints.items()):
        v, u, th = st.primitive(g)
        vb, ub, tb = ansatz_fields(af, x, t)
        name = f"snapshot_t{t:08.3f}.bin"
        io.write_snapshot(out / name, t, grid.x_min, grid.x_max, [x, v, u, th, vb, ub, tb])
        if cfg.get_bool("output.csv_snapshots"):
            io.write_csv(out / f"snapshot_t{t:08.3f}.csv", list(io.SNAPSHOT_COLUMNS), [x, v, u, th, vb, ub, tb])
        snaps.append(name)
    io.write_snapshot(out / "phi_history.bin", T, grid.x_min, grid.x_max, run.phi_history)
    io.write_csv(out / "phi_times.csv", ["t"], [run.times])
    c2 = None if cw.contact.degenerate else fit_gaussian_bound(cw.contact)[1]
    meta = {
        "version": __version__, "config_digest": cfg.digest(), "T": T, "delta": pat.delta,
        "eps1": cfg.perturbation.eps1,
        "grid": {"x_min": grid.x_min, "x_max": grid.x_max, "n_cells": grid.n_cells, "dx": grid.dx},
        "pattern": _pattern_dict(g, pat), "conservation": run.conservation,
        "initial_identity": list(run.initial_identity), "footprint": list(run.footprint),
        "min_profile_width": min_profile_width(af), "C2": c2, "sigma": cfg.get_float("weights.sigma"),
        "snapshots": snaps, "wall_time": run.wall_time, "proxy": theorem_proxy(run, cps),
    }
    io.write_json(out / "run.json", meta)
    (out / "config.txt").write_text(cfg.to_text())
    return meta


def cmd_simulate(cfg: RunConfig, out: Path) -> int:
    meta = simulate(cfg, out)
    p = meta["proxy"]
    print(f"wall {meta['wall_time']:.1f}s  conservation {meta['conservation']['relative']:.2e}")
    a, r = list(p["ansatz_checkpoints"]), list(p["riemann_checkpoints"])
    if len(a) > 1:
        print(f"ansatz distance ratio t={a[0]:g}/t={a[-1]:g}: {p['ansatz_ratio']:.3f}")
    if len(r) > 1:
        print(f"Riemann fan distance ratio t={r[0]:g}/t={r[-1]:g}: {p['riemann_ratio']:.3f}")
    return 0


def cmd_verify(cfg: RunConfig, out: Path) -> int:
    rep = verify(out)
    io.write_json(out / "report.json", rep.to_dict())
    for name, v in sorted(rep.verdicts.items()):
        print(f"{'PASS' if v['pass'] else 'FAIL'}  {name:32s} value={v['value']} threshold={v['threshold']}")
    return 0 if rep.all_pass else 1


def _sweep_one(args):
    text, out = args
    cfg = RunConfig(dict(text))
    meta = simulate(cfg, Path(out))
    rep = verify(Path(out))
    io.write_json(Path(out) / "report.json", rep.to_dict())
    return meta["delta"], meta["eps1"], rep.all_pass, meta["proxy"]["ansatz_ratio"]


def cmd_sweep(cfg: RunConfig, out: Path) -> int:
    jobs = []
    for d in cfg.get_list("sweep.delta"):
        for e in cfg.get_list("sweep.eps1"):
            sub = cfg.with_overrides(**{"delta": d, "pert.eps1": e})
            jobs.append((tuple(sub.values.items()), str(out / f"delta{d:g}_eps{e:g}")))
    workers = cfg.get_int("sweep.workers")
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            rows = list(ex.map(_sweep_one, jobs))
    else:
        rows = [_sweep_one(j) for j in jobs]
    d, e, ok, r = (np.array(c, dtype=float) for c in zip(*rows))
    io.write_csv(out / "sweep.csv", ["delta", "eps1", "all_pass", "ansatz_ratio"], [d, e, ok, r])
    return 0


HANDLERS = {
    "riemann": cmd_riemann, "profile-contact": cmd_profile_contact,
    "profile-rarefaction": cmd_profile_rarefaction, "periodic": cmd_periodic, "ansatz": cmd_ansatz,
    "simulate": cmd_simulate, "verify": cmd_verify, "sweep": cmd_sweep,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="wavecomposite", description=__doc__)
    ap.add_argument("--version", action="version", version=__version__)
    ap.add_argument("subcommand", choices=SUBCOMMANDS)
    ap.add_argument("--config", type=Path, help="key = value configuration file")
    ap.add_argument("--out", type=Path, help="output directory (overrides output.dir)")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        cfg = load_config(args.config)
        out = args.out if args.out is not None else Path(cfg["output.dir"])
        out.mkdir(parents=True, exist_ok=True)
        return HANDLERS[args.subcommand](cfg, out)
    except (WaveCompositeError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
