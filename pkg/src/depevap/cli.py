"""Command-line harness: reproducible experiments with manifests.

Every experiment is described by a manifest (a flat JSON object); flags
override manifest entries.  Each run writes deterministic CSV data files
plus run_metadata.json (manifest echo, seed, package version, wall
time).  Rerunning the same manifest reproduces the data files byte for
byte; the metadata file carries the only nondeterministic content
(timing) and is excluded from that guarantee.

Exit codes: 0 success, 2 capacity guard tripped on some grid points
(partial results written), 1 hard error.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from importlib import metadata as _im
from pathlib import Path

from .entropy import entropy_dp, entropy_exact, entropy_formula, fit_power_law, \
    mid_cut_row, midcut_distribution
from .errors import CapacityError, InvalidParameterError
from .exact import build_state
from .hamiltonian import assemble_hamiltonian, sector_spectrum, term_residuals
from .params import ModelParams
from .scaling import ensemble, exponent_report
from .seqgen import fidelity, run_generation

EXPERIMENTS = ("scaling", "exact-entropy", "dp-entropy", "hamiltonian-check",
               "seqgen-check", "phase-sweep")

DEFAULTS = {
    "L": [3],
    "p": [0.5],
    "mode": "reflecting",
    "colored": True,
    "seed": 0,
    "samples": 200,
    "tmax": 4000,
    "out": "out",
    "max_nodes": 10_000_000,
    "cut_row": None,
    "fit_lo": 100,
    "fit_hi": None,
}


def load_manifest(path) -> dict:
    with open(path) as fh:
        data = json.load(fh)
    if "experiment" not in data:
        raise InvalidParameterError("manifest lacks an 'experiment' entry")
    return normalize_manifest(data)


def save_manifest(manifest: dict, path):
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def normalize_manifest(data: dict) -> dict:
    if data.get("experiment") not in EXPERIMENTS:
        raise InvalidParameterError(f"experiment must be one of {EXPERIMENTS}")
    out = dict(DEFAULTS)
    out.update(data)
    if not isinstance(out["L"], list):
        out["L"] = [out["L"]]
    if not isinstance(out["p"], list):
        out["p"] = [out["p"]]
    if not out["L"] or not out["p"]:
        raise InvalidParameterError("manifest grid must be non-empty")
    for L in out["L"]:
        ModelParams(L=L, p=out["p"][0], boundary_mode=out["mode"],
                    colored=out["colored"], seed=out["seed"])
    return out


def _write_csv(path: Path, header, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([repr(c) if isinstance(c, float) else c for c in row])


def _grid(manifest):
    for L in manifest["L"]:
        for p in manifest["p"]:
            yield ModelParams(L=L, p=p, boundary_mode=manifest["mode"],
                              colored=manifest["colored"], seed=manifest["seed"])


def run_experiment(manifest: dict) -> tuple[list, int]:
    """Run one experiment; returns (artifact paths, exit code)."""
    manifest = normalize_manifest(manifest)
    outdir = Path(manifest["out"])
    outdir.mkdir(parents=True, exist_ok=True)
    started = time.time()
    runner = {
        "scaling": _run_scaling,
        "exact-entropy": _run_exact_entropy,
        "dp-entropy": _run_dp_entropy,
        "hamiltonian-check": _run_hamiltonian_check,
        "seqgen-check": _run_seqgen_check,
        "phase-sweep": _run_phase_sweep,
    }[manifest["experiment"]]
    paths, capacity_hit = runner(manifest, outdir)
    try:
        version = _im.version("depevap")
    except _im.PackageNotFoundError:
        version = "unknown"
    meta = {"manifest": manifest, "seed": manifest["seed"],
            "version": version, "wall_time_s": time.time() - started}
    meta_path = outdir / "run_metadata.json"
    with open(meta_path, "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return paths + [meta_path], 2 if capacity_hit else 0


def _run_scaling(manifest, outdir):
    paths = []
    summary = []
    for params in _grid(manifest):
        series = ensemble(params, manifest["samples"], manifest["tmax"])
        rows = [(int(t), w, ws, m, ms, f, series.n_samples)
                for t, w, ws, m, ms, f in zip(series.times, series.W, series.W_stderr,
                                              series.mid_height, series.mid_stderr,
                                              series.W_fluct)]
        path = outdir / f"scaling_L{params.L}_p{params.p}.csv"
        _write_csv(path, ["t", "W_mean", "W_stderr", "mid_mean", "mid_stderr",
                          "W_fluct", "n"], rows)
        paths.append(path)
        window = None
        if manifest["fit_hi"]:
            window = (manifest["fit_lo"], manifest["fit_hi"])
        rep = exponent_report(series, fit_window=window)
        summary.append((params.L, params.p,
                        rep["W"]["exponent"], rep["W"]["r_squared"],
                        rep["mid"]["exponent"], rep["mid"]["r_squared"],
                        rep.get("W_fluct", {}).get("exponent", float("nan")),
                        rep["fit_window"][0], rep["fit_window"][1],
                        rep["saturation_time"] if rep["saturation_time"] else -1))
    path = outdir / "scaling_summary.csv"
    _write_csv(path, ["L", "p", "W_exponent", "W_r2", "mid_exponent", "mid_r2",
                      "W_fluct_exponent", "fit_lo", "fit_hi", "saturation_t"], summary)
    paths.append(path)
    return paths, False


def _entropy_rows(manifest, methods):
    rows = []
    capacity = False
    for params in _grid(manifest):
        cut = manifest["cut_row"] or mid_cut_row(params.L)
        try:
            if "svd" in methods:
                report = entropy_exact(build_state(params, max_nodes=manifest["max_nodes"]), cut)
                rows.append((params.L, params.p, params.boundary_mode, cut, "svd",
                             report.S_uncolored, report.color_term, report.S_total))
            report = entropy_dp(params, cut)
            rows.append((params.L, params.p, params.boundary_mode, cut, "dp",
                         report.S_uncolored, report.color_term, report.S_total))
        except CapacityError:
            rows.append((params.L, params.p, params.boundary_mode, cut, "capacity",
                         float("nan"), float("nan"), float("nan")))
            capacity = True
    return rows, capacity


def _run_exact_entropy(manifest, outdir):
    rows, capacity = _entropy_rows(manifest, ("svd", "dp"))
    path = outdir / "exact_entropy.csv"
    _write_csv(path, ["L", "p", "mode", "cut", "method",
                      "S_uncolored", "color_term", "S_total"], rows)
    return [path], capacity


def _run_dp_entropy(manifest, outdir):
    rows, capacity = _entropy_rows(manifest, ("dp",))
    path = outdir / "dp_entropy.csv"
    _write_csv(path, ["L", "p", "mode", "cut", "method",
                      "S_uncolored", "color_term", "S_total"], rows)
    return [path], capacity


def _run_hamiltonian_check(manifest, outdir):
    res_rows = []
    spec_rows = []
    capacity = False
    for params in _grid(manifest):
        params = params.with_(boundary_mode="absorbing")
        try:
            state = build_state(params, max_nodes=manifest["max_nodes"])
            terms = assemble_hamiltonian(params)
            for n, (term, r) in enumerate(zip(terms, term_residuals(terms, state))):
                res_rows.append((params.L, params.p, n, term.kind,
                                 ";".join("/".join(map(str, s)) for s in term.support), r))
            for n, val in enumerate(sector_spectrum(terms, params, k=4)):
                spec_rows.append((params.L, params.p, n, val))
        except CapacityError:
            res_rows.append((params.L, params.p, -1, "capacity", "", float("nan")))
            capacity = True
    p1 = outdir / "hamiltonian_residuals.csv"
    _write_csv(p1, ["L", "p", "term", "kind", "support", "residual"], res_rows)
    p2 = outdir / "hamiltonian_spectrum.csv"
    _write_csv(p2, ["L", "p", "index", "eigenvalue"], spec_rows)
    return [p1, p2], capacity


def _run_seqgen_check(manifest, outdir):
    rows = []
    capacity = False
    for params in _grid(manifest):
        params = params.with_(boundary_mode="reflecting")
        try:
            gen, success = run_generation(params, max_branches=manifest["max_nodes"])
            state = build_state(params, max_nodes=manifest["max_nodes"])
            _, success_cool = run_generation(params, cooling=True,
                                             max_branches=manifest["max_nodes"])
            rows.append((params.L, params.p, params.colored,
                         fidelity(gen, state), success, success_cool))
        except CapacityError:
            rows.append((params.L, params.p, params.colored,
                         float("nan"), float("nan"), float("nan")))
            capacity = True
    path = outdir / "seqgen_fidelity.csv"
    _write_csv(path, ["L", "p", "colored", "fidelity", "success", "success_cooling"], rows)
    return [path], capacity


def _run_phase_sweep(manifest, outdir):
    rows = []
    capacity = False
    by_p = {}
    for params in _grid(manifest):
        cut = manifest["cut_row"] or mid_cut_row(params.L)
        try:
            report = entropy_dp(params, cut)
            rows.append((params.L, params.p, cut, report.S_uncolored,
                         report.color_term, report.S_total))
            by_p.setdefault(params.p, []).append((params.L, report.S_total))
        except CapacityError:
            rows.append((params.L, params.p, cut, float("nan"), float("nan"), float("nan")))
            capacity = True
    p1 = outdir / "phase_sweep.csv"
    _write_csv(p1, ["L", "p", "cut", "S_uncolored", "color_term", "S_total"], rows)
    fits = []
    for p, pts in sorted(by_p.items()):
        if len(pts) >= 3:
            Ls, Ss = zip(*sorted(pts))
            exc, amp, r2 = fit_power_law(Ls, Ss)
            fits.append((p, exc, amp, r2))
    p2 = outdir / "phase_exponents.csv"
    _write_csv(p2, ["p", "exponent", "amplitude", "r_squared"], fits)
    return [p1, p2], capacity


def build_parser():
    parser = argparse.ArgumentParser(prog="depevap",
                                     description="deposition-evaporation lattice-state experiments")
    sub = parser.add_subparsers(dest="experiment", required=True)
    for name in EXPERIMENTS:
        sp = sub.add_parser(name)
        sp.add_argument("--manifest", type=str, default=None)
        sp.add_argument("--L", type=int, action="append", default=None)
        sp.add_argument("--p", type=float, action="append", default=None)
        sp.add_argument("--mode", choices=("reflecting", "absorbing"), default=None)
        colored = sp.add_mutually_exclusive_group()
        colored.add_argument("--colored", dest="colored", action="store_true", default=None)
        colored.add_argument("--uncolored", dest="colored", action="store_false")
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--samples", type=int, default=None)
        sp.add_argument("--tmax", type=int, default=None)
        sp.add_argument("--out", type=str, default=None)
        sp.add_argument("--cut-row", dest="cut_row", type=int, default=None)
        sp.add_argument("--max-nodes", dest="max_nodes", type=int, default=None)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    manifest = {"experiment": args.experiment}
    if args.manifest:
        manifest = load_manifest(args.manifest)
        manifest["experiment"] = args.experiment
    for key in ("L", "p", "mode", "colored", "seed", "samples", "tmax", "out",
                "cut_row", "max_nodes"):
        value = getattr(args, key)
        if value is not None:
            manifest[key] = value
    try:
        paths, code = run_experiment(manifest)
    except (InvalidParameterError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    for path in paths:
        print(path)
    return code


if __name__ == "__main__":
    sys.exit(main())
