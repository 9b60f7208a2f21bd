"""Command-line entry point: scenario runner and canned verification checks.

Subcommands: run, kalman, spectrum, resolvent, decay, verify-example.
Exit codes: 0 success, 1 verification check failed, 2 schema/usage error,
3 numerical failure (the message names the failing operation).
"""
from __future__ import annotations

import argparse
import os
import sys
from importlib import resources
from pathlib import Path

import numpy as np

from . import branches as br
from .discretize import assemble_generator
from .evolve import decay_study, excited_abscissa
from .fileio import (SchemaError, Scenario, load_matrix, load_scenario,
                     write_csv, write_json)
from .kalman import (block_partition, coercivity_constant, commutator_norm,
                     coupling_pair, eig_group, kalman_rank, max_invariant_dim,
                     verify_coercivity)
from .spectra import (ConvergenceError, modal_reduce, optimality_exponent,
                      resolvent_scan, spectrum_report)
from .svgplot import line_plot

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_SCHEMA = 2
EXIT_NUMERICAL = 3

VERIFY_IDS = ("viscous", "kelvin-voigt", "boundary")
_BUNDLED = {
    "viscous": "coupled_wave_viscous.json",
    "kelvin-voigt": "coupled_wave_kelvin_voigt.json",
    "boundary": "coupled_string_tip.json",
}


def _threads(args) -> int:
    if getattr(args, "threads", None):
        return max(1, args.threads)
    env = os.environ.get("STABKIT_THREADS", "")
    return max(1, int(env)) if env.isdigit() else 1


def _out_dir(scn: Scenario, args) -> Path:
    if getattr(args, "out", None):
        return Path(args.out)
    if scn.out:
        return Path(scn.out)
    return Path("stabkit-out") / scn.name


def _run_kalman(scn: Scenario, seed: int) -> dict:
    pair = scn.model.pair
    facts = {
        "rank": kalman_rank(pair),
        "det_D": float(np.linalg.det(pair.D)),
        "commutator_norm": commutator_norm(pair),
        "max_invariant_dim": max_invariant_dim(pair),
    }
    groups = eig_group(pair.A)
    partition = block_partition(pair, groups)
    facts["blocks_independent"] = bool(np.all(partition.independence))
    if facts["blocks_independent"]:
        facts["coercivity_constant"] = coercivity_constant(partition)
        samples = int(scn.params.get("kalman", {}).get("samples", 1000))
        ok, worst = verify_coercivity(partition, samples, seed)
        facts["coercivity_verified"] = bool(ok)
        facts["coercivity_worst_slack"] = worst
    return facts


def _run_spectrum(gen, out: Path) -> dict:
    rep = spectrum_report(gen)
    write_csv(out / "spectrum.csv", ["re", "im", "residual"],
              [(float(v.real), float(v.imag), float(r))
               for v, r in zip(rep.eigenvalues, rep.residuals)])
    return {"abscissa": rep.abscissa, "size": gen.size,
            "max_residual": float(np.max(rep.residuals))}


def _resonant_betas(model, lo: float, hi: float, points: int) -> list[float]:
    # place samples on the slow-branch resonances so the scan traces the
    # growth envelope; offset keeps each beta off the spectrum's Im values
    pencils = modal_reduce(model, range(1, model.grid.n + 1), frequencies="discrete")
    betas = []
    for p in pencils:
        slow = max(p.roots, key=lambda r: r.real)
        if slow.imag <= 0:
            continue
        if lo <= slow.imag <= hi:
            betas.append(slow.imag + max(1e-9, 1e-3 * abs(slow.real)))
    if len(betas) > points:
        idx = np.unique(np.linspace(0, len(betas) - 1, points).astype(int))
        betas = [betas[i] for i in idx]
    return betas


def _run_resolvent(scn: Scenario, gen, out: Path, threads: int) -> dict:
    p = scn.params.get("resolvent", {})
    lo = float(p.get("beta_min", 10.0))
    hi = float(p.get("beta_max", 200.0))
    points = int(p.get("points", 30))
    placement = p.get("placement", "auto")
    betas: list[float] = []
    if placement in ("auto", "resonant"):
        try:
            betas = _resonant_betas(scn.model, lo, hi, points)
        except ValueError:
            if placement == "resonant":
                raise
    if not betas:
        betas = list(np.geomspace(lo, hi, points))
    window = tuple(p["window"]) if "window" in p else None
    scan = resolvent_scan(gen, betas, window=window, threads=threads)
    write_csv(out / "scan.csv", ["beta", "norm"],
              list(zip(scan.betas.tolist(), scan.norms.tolist())))
    if scn.svg:
        line_plot(out / "scan.svg", [(scan.betas, scan.norms, "resolvent norm")],
                  "resolvent growth along the imaginary axis",
                  "beta", "norm", logx=True, logy=True)
    return {"fitted_exponent": scan.fitted_exponent,
            "theta_implied": scan.theta_implied,
            "window": list(scan.window), "dropped": scan.dropped}


def _run_decay(scn: Scenario, gen, out: Path) -> dict:
    p = scn.params["decay"]
    direction = np.array(p["direction"], dtype=float) if "direction" in p else None
    report = decay_study(scn.model, gen, modes=int(p["modes"]), dt=float(p["dt"]),
                         direction=direction,
                         profile_exponent=float(p.get("profile_exponent", -2.5)),
                         sample_ratio=float(p.get("sample_ratio", 1.2)),
                         t_final=p.get("t_final"))
    abscissa, _ = excited_abscissa(scn.model, gen, int(p["modes"]))
    write_csv(out / "decay.csv", ["t", "E", "residual"],
              list(zip(report.times.tolist(), report.energies.tolist(),
                       report.dissipation_residuals.tolist())))
    if scn.svg:
        line_plot(out / "decay.svg", [(report.times, report.energies, "energy")],
                  "energy decay", "t", "E", logx=True, logy=True)
    return {"theta": report.fitted_theta, "window": list(report.fit_window),
            "graph_norm0": report.graph_norm0, "abscissa": abscissa}


_FAMILIES = {
    "viscous": (br.viscous_branch, 2),
    "kelvin_voigt": (br.kelvin_voigt_branch, 4),
    "tip": (br.tip_branch, 2),
}


def _run_branches(scn: Scenario, out: Path) -> dict:
    p = scn.params["branches"]
    family = p["family"]
    solver, power = _FAMILIES[family]
    points = solver(range(int(p["first"]), int(p["last"]) + 1))
    rows = []
    for pt in points:
        rows.append((pt.index, float(pt.beta.real), float(pt.beta.imag),
                     float(pt.prediction.real), float(pt.prediction.imag),
                     float(pt.rel_err)))
    write_csv(out / "branches.csv",
              ["index", "re", "im", "pred_re", "pred_im", "rel_err"], rows)
    scale = [pt.index * np.pi if family != "tip" else pt.index for pt in points]
    scaled_re = [float(pt.beta.real) * s**power for pt, s in zip(points, scale)]
    summary = {"family": family, "scaled_re_last": scaled_re[-1]}
    if len(points) >= 8:
        summary["theta"] = optimality_exponent([pt.beta for pt in points])
    return summary


def run_scenario(scn: Scenario, out: Path, seed: int, threads: int) -> dict:
    if not scn.analyses:
        return {}
    summary: dict = {"name": scn.name, "seed": seed}
    needs_gen = any(a in scn.analyses for a in ("spectrum", "resolvent", "decay"))
    gen = assemble_generator(scn.model) if needs_gen else None
    for analysis in ("kalman", "spectrum", "resolvent", "decay", "branches"):
        if analysis not in scn.analyses:
            continue
        try:
            if analysis == "kalman":
                summary["kalman"] = _run_kalman(scn, seed)
            elif analysis == "spectrum":
                summary["spectrum"] = _run_spectrum(gen, out)
            elif analysis == "resolvent":
                summary["resolvent"] = _run_resolvent(scn, gen, out, threads)
            elif analysis == "decay":
                summary["decay"] = _run_decay(scn, gen, out)
            else:
                summary["branches"] = _run_branches(scn, out)
        except (ConvergenceError, np.linalg.LinAlgError, ValueError) as exc:
            raise ConvergenceError(f"analysis '{analysis}' failed: {exc}") from exc
    write_json(out / "summary.json", summary)
    return summary


def _bundled_scenario(verify_id: str) -> Scenario:
    ref = resources.files("stabkit") / "scenarios" / _BUNDLED[verify_id]
    with resources.as_file(ref) as path:
        return load_scenario(path)


def _check(label: str, ok: bool, detail: str, lines: list[str]) -> bool:
    lines.append(f"{label}: {'PASS' if ok else 'FAIL'} ({detail})")
    return ok


def verify_example(verify_id: str) -> tuple[bool, list[str]]:
    """Run the bundled checks for one benchmark family; returns (all passed, lines)."""
    scn = _bundled_scenario(verify_id)
    pair = scn.model.pair
    lines: list[str] = []
    ok = True
    ok &= _check("kalman rank = 2", kalman_rank(pair) == 2, f"rank={kalman_rank(pair)}", lines)
    det = float(np.linalg.det(pair.D))
    ok &= _check("det(D) = 0", abs(det) <= 1e-12, f"det={det:.2e}", lines)
    comm = commutator_norm(pair)
    comm_target = 1.0 if verify_id == "boundary" else 2.0
    ok &= _check(f"commutator norm = {comm_target:g}", abs(comm - comm_target) <= 1e-10,
                 f"norm={comm:.12f}", lines)
    if verify_id == "viscous":
        pts = br.viscous_branch(range(5, 51))
        scaled = [p.beta.real * (p.index * np.pi)**2 for p in pts]
        lim = br.VISCOUS_BRANCH_LIMIT
        ok &= _check("Re*nu^2 -> -2/125", abs(scaled[-1] - lim) <= 0.05 * abs(lim),
                     f"at k=50: {scaled[-1]:.6f}", lines)
        diffs = np.diff([s for p, s in zip(pts, scaled) if p.index >= 10])
        ok &= _check("Re*nu^2 monotone for k >= 10", bool(np.all(diffs < 0)),
                     f"max diff={diffs.max():.2e}", lines)
        theta = optimality_exponent([p.beta for p in pts])
        ok &= _check("theta = 0.5 +/- 0.05", abs(theta - 0.5) <= 0.05,
                     f"theta={theta:.4f}", lines)
    elif verify_id == "kelvin-voigt":
        pts = br.kelvin_voigt_branch(range(5, 51))
        scaled = [p.beta.real * (p.index * np.pi)**4 for p in pts]
        lim = br.KELVIN_VOIGT_BRANCH_LIMIT
        ok &= _check("Re*nu^4 -> -2/125", abs(scaled[-1] - lim) <= 0.05 * abs(lim),
                     f"at k=50: {scaled[-1]:.6f}", lines)
        theta = optimality_exponent([p.beta for p in pts])
        ok &= _check("theta = 0.25 +/- 0.03", abs(theta - 0.25) <= 0.03,
                     f"theta={theta:.4f}", lines)
    else:
        pts = br.tip_branch(range(3, 41))
        worst_res = max(p.residual for p in pts)
        ok &= _check("|f(beta)| <= 1e-10 * scale", worst_res <= 1e-10,
                     f"worst residual={worst_res:.2e}", lines)
        ok &= _check("Re(beta) < 0", all(p.beta.real < 0 for p in pts),
                     f"max Re={max(p.beta.real for p in pts):.2e}", lines)
        im_err = max(abs(p.beta.imag - p.prediction.imag) * p.index for p in pts)
        ok &= _check("Im matches asymptote within 1e-3/n", im_err <= 1e-3,
                     f"max n*|dIm|={im_err:.2e}", lines)
        lim = br.TIP_BRANCH_LIMIT
        scaled = pts[-1].beta.real * pts[-1].index**2
        ok &= _check("Re*n^2 -> -1/(32 pi^2)", abs(scaled - lim) <= 0.05 * abs(lim),
                     f"at n=40: {scaled:.6f}", lines)
    return bool(ok), lines


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="stabkit",
                                 description="coupled damped-wave stability toolkit")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--out", help="output directory (overrides the scenario)")
        p.add_argument("--seed", type=int, default=None, help="sampling seed override")
        p.add_argument("--threads", type=int, default=None,
                       help="worker threads (or STABKIT_THREADS)")
        p.add_argument("--svg", action="store_true", help="also emit SVG plots")

    p_run = sub.add_parser("run", help="run every analysis a scenario requests")
    p_run.add_argument("scenario")
    common(p_run)
    for name in ("spectrum", "resolvent", "decay"):
        p = sub.add_parser(name, help=f"run only the {name} analysis of a scenario")
        p.add_argument("scenario")
        common(p)
    p_k = sub.add_parser("kalman", help="rank/commutator/coercivity facts for a pair")
    p_k.add_argument("--A", required=True, help="JSON file with the coupling matrix")
    p_k.add_argument("--D", required=True, help="JSON file with the control matrix")
    p_k.add_argument("--samples", type=int, default=1000)
    p_k.add_argument("--seed", type=int, default=0)
    p_v = sub.add_parser("verify-example", help="check a bundled benchmark family")
    p_v.add_argument("id", choices=VERIFY_IDS)
    return ap


def main(argv=None) -> int:
    ap = _build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_SCHEMA if exc.code not in (0,) else 0

    try:
        if args.command == "kalman":
            A, defect_a = load_matrix(args.A)
            D, defect_d = load_matrix(args.D)
            pair = coupling_pair(A, D)
            print(f"kalman rank: {kalman_rank(pair)}")
            print(f"max invariant kernel dim: {max_invariant_dim(pair)}")
            print(f"commutator norm: {commutator_norm(pair)!r}")
            print(f"asymmetry defect: A {defect_a!r}, D {defect_d!r}")
            groups = eig_group(pair.A)
            partition = block_partition(pair, groups)
            if np.all(partition.independence):
                c = coercivity_constant(partition)
                okc, worst = verify_coercivity(partition, args.samples, args.seed)
                print(f"coercivity constant: {c!r}")
                print(f"coercivity verified on {args.samples} samples: "
                      f"{'yes' if okc else 'NO'} (worst slack {worst:.2e})")
            else:
                print("coercivity constant: undefined (dependent block)")
            return EXIT_OK

        if args.command == "verify-example":
            passed, lines = verify_example(args.id)
            for line in lines:
                print(line)
            return EXIT_OK if passed else EXIT_CHECK_FAILED

        scn = load_scenario(args.scenario)
        if args.command != "run":
            if args.command == "decay" and "decay" not in scn.params:
                raise SchemaError("scenario has no decay parameters")
            scn.analyses = [args.command]
        if getattr(args, "svg", False):
            scn.svg = True
        if not scn.analyses:
            return EXIT_OK
        seed = args.seed if args.seed is not None else scn.seed
        out = _out_dir(scn, args)
        summary = run_scenario(scn, out, seed, _threads(args))
        if summary:
            print(f"wrote {out / 'summary.json'}")
        return EXIT_OK
    except SchemaError as exc:
        print(f"schema error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except FileNotFoundError as exc:
        print(f"schema error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except (ConvergenceError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ValueError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    raise SystemExit(main())
