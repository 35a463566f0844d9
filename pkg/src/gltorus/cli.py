"""Command-line driver: simulation, analysis suites, and report emission.

Subcommands: simulate, monotonicity, clearing-out, hodge, gauge, vortex,
mcf-ring, validate, run.  Reports are CSV (curves) + JSON (scalars) with a
matplotlib PNG next to each delimited file; a run writes manifest.json with
content hashes.  GLTORUS_OUT prefixes output directories; --threads caps
the analysis worker pool.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time

import numpy as np

from . import reporting
from .config import ENV_OUTPUT_ROOT, load_config, parse_radii, validate
from .dynamics import (IntegratorConfig, VortexRing, evolve, load_trajectory,
                       make_initial, save_trajectory)
from .energy import energy_density
from .fields import current, load_snapshot
from .geometry import TorusGeometry
from .hodge import gauge_decompose, hodge_decompose, winding
from .mcf import brakke_diagnostic, ring_mcf_compare
from .parallel import set_max_threads
from .vortex import density_scan, extract_vortex_set
from .weighted import fit_monotonicity_constants, monotonicity_scan

log = logging.getLogger("gltorus")


def _out_path(args, default_dir):
    out = getattr(args, "out", None) or default_dir
    root = os.environ.get(ENV_OUTPUT_ROOT)
    if root and not os.path.isabs(out):
        out = os.path.join(root, out)
    os.makedirs(out, exist_ok=True)
    return out


def _simulate(config, eps, seed_shift=0):
    initial = config.initial
    if hasattr(initial, "seed"):
        initial = type(initial)(initial.m0, initial.seed + seed_shift, initial.k_cut)
    fld = make_initial(config.geometry, eps, initial)
    return evolve(fld, config.integrator)


def cmd_simulate(args):
    config = load_config(args.config)
    out = _out_path(args, config.out_dir)
    t0 = time.time()
    traj = _simulate(config, config.epsilon)
    save_trajectory(traj, out)
    reporting.energy_figure(traj.times, traj.energies, os.path.join(out, "energy.png"))
    print(f"trajectory: {len(traj.snapshots)} snapshots -> {out} "
          f"({time.time() - t0:.1f}s)")
    return 0


def _load_traj(args):
    if getattr(args, "traj", None):
        return load_trajectory(args.traj)
    config = load_config(args.config)
    return _simulate(config, config.epsilon)


def cmd_monotonicity(args):
    traj = _load_traj(args)
    center = tuple(float(v) for v in args.center.split(","))
    radii = parse_radii(args.radii)
    led = monotonicity_scan(traj, (center, args.T), radii, tau_mono=args.tau_mono)
    out = _out_path(args, "monotonicity-out")
    rows = []
    for i in range(len(led.radii)):
        rows.append([led.radii[i], led.Z[i], led.zprime[i], led.xi_int[i],
                     led.phi_int[i], led.psi_int[i], led.pot_int[i],
                     bool(led.monotone_ok[i])])
    csv_path = os.path.join(out, "monotonicity.csv")
    reporting.write_csv(csv_path, ["R", "Z", "dZ_reconstructed", "xi_int", "phi_int",
                                   "psi_int", "pot_int", "monotone_ok"], rows)
    reporting.monotonicity_figure(led, os.path.join(out, "monotonicity.png"))
    fit = fit_monotonicity_constants(led)
    reporting.write_json(os.path.join(out, "monotonicity.json"), {
        "violations": led.violations(),
        "reconstruction_error": led.reconstruction_error(),
        "fitted_constants": fit,
        "E0": led.E0,
    })
    print(f"monotonicity: {csv_path} (violations: {led.violations()})")
    return 0


def cmd_clearing_out(args):
    from .suites import clearing_out_suite

    ladder = [float(v) for v in args.ladder.split(",")]
    sigmas = [float(v) for v in args.sigma.split(",")]
    out = _out_path(args, "clearing-out-out")
    report = clearing_out_suite(ladder, sigmas, grid_n=args.grid)
    rows = [[s["eps"], s["kind"], s["x"][0], s["x"][1], s["x"][2] if len(s["x"]) > 2 else 0.0,
             s["R"], s["T"], s["E_norm"], s["one_minus_mod"]] for s in report["samples"]]
    csv_path = os.path.join(out, "clearing_out.csv")
    reporting.write_csv(csv_path, ["eps", "kind", "x0", "x1", "x2", "R", "T",
                                   "E_norm", "one_minus_mod"], rows)
    reporting.clearing_figure(report["samples"], os.path.join(out, "clearing_out.png"))
    summary = {k: v for k, v in report.items() if k != "samples"}
    reporting.write_json(os.path.join(out, "clearing_out.json"), summary)
    print(f"clearing-out: {csv_path}")
    print(json.dumps({k: summary[k] for k in ("eta_hat", "wave_monotone_decreasing",
                                              "wave_modulus_ok", "line_floor_ok")}, indent=1))
    return 0


def cmd_hodge(args):
    fld = load_snapshot(args.snapshot)
    parts = hodge_decompose(current(fld))
    wv = winding(current(fld))
    out = {
        "winding_raw": list(wv.raw),
        "winding_floor": list(wv.integer),
        "part_norms": parts.part_norms(),
        "orthogonality_defects": parts.orthogonality_defects(),
        "reconstruction_defect": parts.reconstruction_defect(),
    }
    if args.json:
        reporting.write_json(args.json, out)
    print(json.dumps(out, indent=1, sort_keys=True))
    return 0


def cmd_gauge(args):
    traj = load_trajectory(args.traj)
    dec = gauge_decompose(traj, (args.t_from, args.t_to))
    out = _out_path(args, "gauge-out")
    reporting.write_json(os.path.join(out, "gauge.json"), {
        "winding_raw": list(dec.winding.raw),
        "winding_floor": list(dec.winding.integer),
        "diagnostics": dec.diagnostics,
        "times": dec.times,
    })
    from .fields import save_snapshot

    save_snapshot(dec.u_h, os.path.join(out, "u_h.glf"))
    for i, w in enumerate(dec.w_fields):
        save_snapshot(w, os.path.join(out, f"w_{i:04d}.glf"))
    np.savez_compressed(os.path.join(out, "phi.npz"),
                        times=np.asarray(dec.times),
                        **{f"phi_{i:04d}": g for i, g in enumerate(dec.phi_grids)})
    print(f"gauge: diagnostics + components -> {out}")
    return 0


def cmd_vortex(args):
    fld = load_snapshot(args.snapshot)
    vs = extract_vortex_set(fld)
    payload = {"time": vs.time, "dim": vs.dim, "core_radius_hint": vs.core_radius_hint}
    if vs.dim == 2:
        payload["points"] = [{"position": list(p), "degree": int(d)} for p, d in vs.points]
    else:
        payload["filaments"] = [{
            "vertices": fil.vertices.tolist(),
            "degrees": fil.degrees.tolist(),
            "closure_shift": fil.shift.tolist(),
            "length": fil.length(),
        } for fil in vs.filaments]
    path = args.emit or "polyline.json"
    reporting.write_json(path, payload)
    fig = os.path.splitext(path)[0] + ".png"
    reporting.vortex_figure(vs, fig)
    print(f"vortex set -> {path} (+ {fig})")
    return 0


def cmd_mcf_ring(args):
    n = args.grid
    geom = TorusGeometry((args.side,) * 3, (n,) * 3)
    eps = args.epsilon
    r0 = args.r0
    t_end = args.t_end if args.t_end > 0 else 0.75 * r0**2
    fld = make_initial(geom, eps, VortexRing((args.side / 2,) * 3, r0, axis=args.axis))
    cfg = IntegratorConfig(dt_factor=args.dt_factor, t_end=t_end,
                           snapshot_stride=args.stride)
    traj = evolve(fld, cfg)
    res = ring_mcf_compare(traj, r0, axis=args.axis)
    chi = np.ones(geom.grid_sizes)
    bd = brakke_diagnostic(traj, chi)
    out = _out_path(args, "mcf-ring-out")
    track = res["track"]
    bmap = {round(r["time"], 12): r for r in bd["rows"]}
    rows = []
    for i, t in enumerate(track.times):
        row = bmap.get(round(t, 12), {})
        rows.append([t, track.radii[i], track.r_exact[i], track.tube_energy[i],
                     row.get("Dt_nu", np.nan), row.get("B", np.nan)])
    csv_path = os.path.join(out, "mcf_ring.csv")
    reporting.write_csv(csv_path, ["t", "r_measured", "r_exact", "tube_energy",
                                   "brakke_lhs", "brakke_rhs"], rows)
    reporting.ring_figure(track, os.path.join(out, "mcf_ring.png"))
    reporting.write_json(os.path.join(out, "mcf_ring.json"), {
        "max_rel_radius_err": res["max_rel_radius_err"],
        "collapse_time": res["collapse_time"],
        "collapse_exact": res["collapse_exact"],
        "collapse_rel_err": res["collapse_rel_err"],
        "brakke_all_consistent": bd["all_consistent"],
    })
    print(f"mcf-ring: {csv_path}; max rel radius err "
          f"{res['max_rel_radius_err']:.3f}, collapse rel err {res['collapse_rel_err']:.3f}")
    return 0


def cmd_validate(args):
    config = load_config(args.config)
    diags = validate(config)
    for d in diags:
        print(d)
    if not diags:
        print("ok: no diagnostics")
    return 0


def cmd_run(args):
    config = load_config(args.config)
    out_root = _out_path(args, config.out_dir)
    diags = validate(config)
    for d in diags:
        print(d)
    if any(d.startswith("error") for d in diags):
        print("aborting: validation errors")
        return 2

    ladder_summary = []
    for eps in config.epsilons:
        sub = out_root if not config.is_ladder() else os.path.join(out_root, f"eps_{eps:g}")
        os.makedirs(sub, exist_ok=True)
        files, timings = [], {}
        t0 = time.time()
        np.random.seed(config.seed)
        traj = _simulate(config, eps)
        timings["simulate"] = time.time() - t0
        save_trajectory(traj, os.path.join(sub, "trajectory"))
        files.append(os.path.join(sub, "trajectory", "trajectory.json"))
        summary = {"epsilon": eps, "E0": traj.initial_energy(),
                   "E0_normalized": traj.initial_energy() / abs(np.log(eps)),
                   "analyses": {}}

        for name, runner in (("monotonicity", _run_monotonicity),
                             ("hodge", _run_hodge),
                             ("gauge", _run_gauge),
                             ("vortex", _run_vortex),
                             ("mcf", _run_mcf)):
            block = config.analyses.get(name)
            if not block or not block.get("enable"):
                continue
            t1 = time.time()
            try:
                emitted, result = runner(traj, block, sub, config)
                files.extend(emitted)
                summary["analyses"][name] = result
            except Exception as exc:  # analysis failures stay isolated
                log.exception("analysis %s failed", name)
                summary["analyses"][name] = {"error": f"{type(exc).__name__}: {exc}"}
            timings[name] = time.time() - t1

        files.append(reporting.write_json(os.path.join(sub, "summary.json"), summary))
        reporting.write_manifest(sub, config.raw, files, timings)
        ladder_summary.append(summary)
        print(f"eps={eps:g}: done ({sum(timings.values()):.1f}s)")

    if config.is_ladder():
        reporting.write_json(os.path.join(out_root, "ladder_summary.json"),
                             {"epsilons": list(config.epsilons), "runs": ladder_summary})
    return 0


def _run_monotonicity(traj, block, out, config):
    center = tuple(float(v) for v in block.get("center", "0.5,0.5,0.5").split(","))
    T = float(block.get("t", block.get("T", traj.times[-1])))
    radii = parse_radii(block.get("radii", f"{2 * max(traj.geom.spacing)}:"
                                           f"{0.9 * np.sqrt(T)}:12"))
    led = monotonicity_scan(traj, (center, T), radii,
                            tau_mono=float(block.get("tau_mono", 1e-3)))
    rows = [[led.radii[i], led.Z[i], led.zprime[i], led.xi_int[i], led.phi_int[i],
             led.psi_int[i], led.pot_int[i], bool(led.monotone_ok[i])]
            for i in range(len(led.radii))]
    csv_path = reporting.write_csv(os.path.join(out, "monotonicity.csv"),
                                   ["R", "Z", "dZ_reconstructed", "xi_int", "phi_int",
                                    "psi_int", "pot_int", "monotone_ok"], rows)
    fig = reporting.monotonicity_figure(led, os.path.join(out, "monotonicity.png"))
    return [csv_path, fig], {"violations": led.violations(),
                             "reconstruction_error": led.reconstruction_error(),
                             "fitted_constants": fit_monotonicity_constants(led)}


def _run_hodge(traj, block, out, config):
    snap = traj.snapshots[-1] if block.get("time", "end") == "end" else \
        traj.nearest_snapshot(float(block["time"]))
    parts = hodge_decompose(current(snap))
    wv = winding(current(snap))
    payload = {
        "winding_raw": list(wv.raw),
        "winding_floor": list(wv.integer),
        "part_norms": parts.part_norms(),
        "orthogonality_defects": parts.orthogonality_defects(),
        "reconstruction_defect": parts.reconstruction_defect(),
    }
    path = reporting.write_json(os.path.join(out, "hodge.json"), payload)
    return [path], payload


def _run_gauge(traj, block, out, config):
    t1 = float(block.get("from", traj.times[0]))
    t2 = float(block.get("to", traj.times[-1]))
    dec = gauge_decompose(traj, (t1, t2))
    payload = {"winding_raw": list(dec.winding.raw),
               "winding_floor": list(dec.winding.integer),
               "diagnostics": dec.diagnostics}
    path = reporting.write_json(os.path.join(out, "gauge.json"), payload)
    return [path], payload


def _run_vortex(traj, block, out, config):
    snap = traj.snapshots[-1] if block.get("time", "end") == "end" else \
        traj.nearest_snapshot(float(block["time"]))
    vs = extract_vortex_set(snap)
    payload = {"time": vs.time, "n_filaments": len(vs.filaments),
               "n_points": len(vs.points), "total_length": vs.total_length()}
    if block.get("density_point"):
        x = tuple(float(v) for v in block["density_point"].split(","))
        radii = parse_radii(block.get("density_radii",
                                      f"{2.5 * max(traj.geom.spacing)}:"
                                      f"{0.9 * traj.geom.inj}:8"))
        led = energy_density(snap)
        sample = density_scan(led, x, radii)
        csv_path = reporting.write_csv(
            os.path.join(out, "density.csv"), ["r", "theta", "theta_parabolic"],
            [[sample.radii[i], sample.theta[i], sample.theta_parabolic[i]]
             for i in range(len(sample.radii))])
        fig = reporting.density_figure(sample, os.path.join(out, "density.png"))
        path = reporting.write_json(os.path.join(out, "vortex.json"), payload)
        figv = reporting.vortex_figure(vs, os.path.join(out, "vortex.png"))
        return [csv_path, fig, path, figv], payload
    path = reporting.write_json(os.path.join(out, "vortex.json"), payload)
    figv = reporting.vortex_figure(vs, os.path.join(out, "vortex.png"))
    return [path, figv], payload


def _run_mcf(traj, block, out, config):
    r0 = float(block.get("r0", getattr(config.initial, "radius", 0.3)))
    axis = int(block.get("axis", getattr(config.initial, "axis", 2)))
    res = ring_mcf_compare(traj, r0, axis=axis)
    chi = np.ones(traj.geom.grid_sizes)
    bd = brakke_diagnostic(traj, chi)
    track = res["track"]
    bmap = {round(r["time"], 12): r for r in bd["rows"]}
    rows = [[t, track.radii[i], track.r_exact[i], track.tube_energy[i],
             bmap.get(round(t, 12), {}).get("Dt_nu", np.nan),
             bmap.get(round(t, 12), {}).get("B", np.nan)]
            for i, t in enumerate(track.times)]
    csv_path = reporting.write_csv(os.path.join(out, "mcf_ring.csv"),
                                   ["t", "r_measured", "r_exact", "tube_energy",
                                    "brakke_lhs", "brakke_rhs"], rows)
    fig = reporting.ring_figure(track, os.path.join(out, "mcf_ring.png"))
    result = {"max_rel_radius_err": res["max_rel_radius_err"],
              "collapse_time": res["collapse_time"],
              "collapse_rel_err": res["collapse_rel_err"],
              "brakke_all_consistent": bd["all_consistent"]}
    return [csv_path, fig], result


def build_parser():
    parser = argparse.ArgumentParser(prog="gltorus", description=__doc__)
    parser.add_argument("--threads", type=int, default=1,
                        help="cap for analysis worker pools")
    parser.add_argument("--out", help="output directory (GLTORUS_OUT prefixes it)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run the simulation from a config file")
    p.add_argument("config")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("monotonicity", help="weighted-energy scan Z(R)")
    p.add_argument("--config")
    p.add_argument("--traj", help="existing trajectory directory")
    p.add_argument("--center", required=True, help="x,y[,z]")
    p.add_argument("--T", type=float, required=True)
    p.add_argument("--radii", required=True, help="r0:r1:n")
    p.add_argument("--tau-mono", type=float, default=1e-3, dest="tau_mono")
    p.set_defaults(func=cmd_monotonicity)

    p = sub.add_parser("clearing-out", help="clearing-out scatter over an eps ladder")
    p.add_argument("--sigma", default="0.25")
    p.add_argument("--ladder", default="0.1,0.05,0.025")
    p.add_argument("--grid", type=int, default=48)
    p.set_defaults(func=cmd_clearing_out)

    p = sub.add_parser("hodge", help="Hodge decomposition of ju for one snapshot")
    p.add_argument("--snapshot", required=True)
    p.add_argument("--json", help="also write the report to this path")
    p.set_defaults(func=cmd_hodge)

    p = sub.add_parser("gauge", help="gauge decomposition u = w e^{i phi} u_h")
    p.add_argument("--traj", required=True)
    p.add_argument("--from", dest="t_from", type=float, required=True)
    p.add_argument("--to", dest="t_to", type=float, required=True)
    p.set_defaults(func=cmd_gauge)

    p = sub.add_parser("vortex", help="extract the vortex set from a snapshot")
    p.add_argument("--snapshot", required=True)
    p.add_argument("--emit", default="polyline.json")
    p.set_defaults(func=cmd_vortex)

    p = sub.add_parser("mcf-ring", help="shrinking-ring benchmark against MCF")
    p.add_argument("--r0", type=float, default=0.3)
    p.add_argument("--epsilon", type=float, default=0.05)
    p.add_argument("--grid", type=int, default=96)
    p.add_argument("--side", type=float, default=1.0)
    p.add_argument("--axis", type=int, default=2)
    p.add_argument("--t-end", type=float, default=0.0, dest="t_end")
    p.add_argument("--dt-factor", type=float, default=0.2, dest="dt_factor")
    p.add_argument("--stride", type=int, default=8)
    p.set_defaults(func=cmd_mcf_ring)

    p = sub.add_parser("validate", help="static config checks")
    p.add_argument("config")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("run", help="simulation plus all enabled analyses")
    p.add_argument("config")
    p.set_defaults(func=cmd_run)
    return parser


def main(argv=None):
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    set_max_threads(args.threads)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
