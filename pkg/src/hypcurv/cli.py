"""Command-line front end: analyze, scan, classify, solve, probe, boundary, verify.

Reports are JSON (17 significant digits, manifest embedded) or CSV with a manifest
sidecar.  Exit codes: 0 success, 1 verification/numeric failure, 2 usage error.
"""

from __future__ import annotations

import os
import sys

import click
import numpy as np

from . import acceptance, asymptotics, plaplace, rigidity
from .curvature import curvature_point_report
from .errors import HypcurvError
from .gridfn import save_grid_function
from .heightfield import field_from_json, field_to_descriptor, sample_height_grid
from .inequalities import grad_direction_ricci, point_regime_report, scan_field
from .reportio import RunManifest, dumps, format_float, write_report

#: classify tolerances per profile: (ricci_null, product, variance)
TOLERANCE_PROFILES = {
    "strict": (1e-9, 1e-9, 1e-18),
    "fd": (1e-6, 1e-6, 1e-10),
}


def _parse_tuple(text: str) -> np.ndarray:
    try:
        return np.array([float(t) for t in text.split(",")])
    except ValueError as exc:
        raise click.UsageError(f"cannot parse tuple {text!r}: {exc}")


def _parse_grid(text: str):
    """Grid spec 'lo1,..,lon:hi1,..,hin:nodes' -> (lo, hi, nodes)."""
    parts = text.split(":")
    if len(parts) != 3:
        raise click.UsageError("grid spec must be 'lo..:hi..:nodes'")
    lo, hi = _parse_tuple(parts[0]), _parse_tuple(parts[1])
    try:
        nodes = int(parts[2])
    except ValueError:
        raise click.UsageError(f"bad node count {parts[2]!r}")
    if lo.shape != hi.shape or np.any(lo >= hi) or nodes < 3:
        raise click.UsageError("grid spec needs lo < hi and nodes >= 3")
    return lo, hi, nodes


def _load_surface(path: str):
    try:
        return field_from_json(path)
    except (HypcurvError, KeyError, ValueError, OSError) as exc:
        raise click.UsageError(f"invalid surface descriptor {path}: {exc}")


def _emit(payload: dict, manifest: RunManifest, out: str, name: str):
    doc = {"manifest": manifest.to_dict()}
    doc.update(payload)
    text = dumps(doc)
    click.echo(text, nl=False)
    if out:
        os.makedirs(out, exist_ok=True)
        path = os.path.join(out, name)
        with open(path, "w") as fh:
            fh.write(text)


surface_opt = click.option("--surface", required=True, type=click.Path(exists=True),
                           help="Surface descriptor JSON.")
out_opt = click.option("--out", default=None, type=click.Path(), help="Output directory.")
seed_opt = click.option("--seed", default=7, type=int, show_default=True,
                        help="Seed for randomized sample points.")
profile_opt = click.option("--tolerance-profile", default="fd",
                           type=click.Choice(list(TOLERANCE_PROFILES)), show_default=True,
                           help="Tolerances for classification thresholds.")


@click.group()
def main():
    """Numerical lab for graph hypersurfaces in the hyperbolic upper half-space."""


@main.command()
@surface_opt
@click.option("--point", required=True, help="Evaluation point, comma separated.")
@click.option("--step", default=None, type=float, help="FD step for residuals.")
@out_opt
def analyze(surface, point, step, out):
    """Curvature and inequality report at one point."""
    field = _load_surface(surface)
    x = _parse_tuple(point)
    manifest = RunManifest("analyze", inputs={"surface": field_to_descriptor(field)},
                           config={"point": x.tolist(), "step": step})
    try:
        report = curvature_point_report(field, x, step)
        jet = field.jet(x)
        regime = point_regime_report(jet, field.n)
        report["regime"] = regime.regime.value
        report["factors"] = list(regime.factors)
        report["density"] = regime.n_subharmonic_density
        report["at_critical_point"] = regime.at_critical_point
        if not regime.at_critical_point:
            report["grad_direction_ricci"] = grad_direction_ricci(jet)
    except HypcurvError as exc:
        click.echo(dumps({"error": str(exc)}), nl=False, err=True)
        sys.exit(1)
    _emit(report, manifest, out, "analyze.json")


@main.command()
@surface_opt
@click.option("--grid", "grid_spec", required=True, help="Scan grid 'lo:hi:nodes'.")
@seed_opt
@out_opt
def scan(surface, grid_spec, seed, out):
    """CSV scan of curvature quantities over a point grid."""
    field = _load_surface(surface)
    lo, hi, nodes = _parse_grid(grid_spec)
    if lo.shape != (field.n,):
        raise click.UsageError("grid dimension does not match the surface")
    axes = [np.linspace(lo[d], hi[d], nodes) for d in range(field.n)]
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=-1)
    pts = [x for x in pts if field.contains(x)]
    manifest = RunManifest("scan", inputs={"surface": field_to_descriptor(field)},
                           config={"grid": grid_spec}, seed=seed)
    try:
        rows = scan_field(field, pts)
    except HypcurvError as exc:
        click.echo(dumps({"error": str(exc)}), nl=False, err=True)
        sys.exit(1)
    n = field.n
    header = ([f"x{i+1}" for i in range(n)] + ["f", "H"]
              + [f"kappa{i+1}" for i in range(n)]
              + ["min_ric_eig", "A", "B", "AB_minus_nm1", "density", "regime"])
    lines = [",".join(header)]
    for row in rows:
        cells = [format_float(v) if isinstance(v, float) else str(v) for v in row]
        lines.append(",".join(cells))
    text = "\n".join(lines) + "\n"
    click.echo(text, nl=False)
    if out:
        os.makedirs(out, exist_ok=True)
        with open(os.path.join(out, "scan.csv"), "w") as fh:
            fh.write(text)
        manifest.outputs.append("scan.csv")
        write_report(os.path.join(out, "scan.manifest.json"), {}, manifest)


@main.command()
@surface_opt
@click.option("--levels", default="1,2,3,4", show_default=True,
              help="Sublevel depths for the recession analysis.")
@click.option("--grid", "grid_spec", default=None,
              help="Analysis window 'lo:hi:nodes' (default: centered window).")
@click.option("--samples", default=100, show_default=True, help="Curvature sample count.")
@seed_opt
@profile_opt
@out_opt
def classify(surface, levels, grid_spec, samples, seed, tolerance_profile, out):
    """Global verdict: rigidity constancy scan + recession-set count."""
    field = _load_surface(surface)
    levels_list = [float(t) for t in levels.split(",")]
    lo, hi, nodes = _default_window(field, grid_spec)
    spacing = float((hi[0] - lo[0]) / (nodes - 1))
    rng = np.random.default_rng(seed)
    ric_tol, product_tol, var_tol = TOLERANCE_PROFILES[tolerance_profile]
    manifest = RunManifest(
        "classify", inputs={"surface": field_to_descriptor(field)},
        config={"levels": levels_list, "window": [lo.tolist(), hi.tolist()],
                "spacing": spacing, "samples": samples,
                "tolerance_profile": tolerance_profile},
        seed=seed)
    try:
        rec = asymptotics.recession_report(field, levels_list, lo, hi, spacing)
        kwargs = {}
        if field.kind == "equidistant_cone":
            kwargs = {"r_min": float(np.min(np.abs(field.domain.hi)) / 4),
                      "r_max": float(np.min(np.abs(field.domain.hi)))}
        pts = field.sample_points(samples, rng, **kwargs)
        scan_res = rigidity.constancy_scan(field, pts, field.n)
        jet = field.jet(pts[0])
        nonneg = rigidity.min_ricci_eigenvalue(jet, field.n) >= -ric_tol
        verdict = rigidity.classify_global(scan_res, rec.boundary_points, field.n,
                                           nonneg_ricci=False,
                                           product_tol=product_tol, var_tol=var_tol)
        payload = rigidity.verdict_report(scan_res, rec.boundary_points, field.n)
        payload["verdict"] = verdict.value
        payload["nonneg_ricci_at_first_sample"] = bool(nonneg)
        payload["recession"] = asymptotics.recession_json(rec)
    except HypcurvError as exc:
        click.echo(dumps({"error": str(exc)}), nl=False, err=True)
        sys.exit(1)
    _emit(payload, manifest, out, "classify.json")


def _default_window(field, grid_spec):
    if grid_spec is not None:
        return _parse_grid(grid_spec)
    lo = field.domain.lo * 0.25
    hi = field.domain.hi * 0.25
    return lo, hi, 65


@main.command()
@surface_opt
@click.option("--grid", "grid_spec", required=True, help="Solve grid 'lo:hi:nodes'.")
@click.option("--p", "p_value", default=None, type=float,
              help="Dirichlet exponent (default: the dimension n).")
@out_opt
def solve(surface, grid_spec, p_value, out):
    """p-harmonic Dirichlet solve with boundary data h = log f."""
    field = _load_surface(surface)
    lo, hi, nodes = _parse_grid(grid_spec)
    spacing = float((hi[0] - lo[0]) / (nodes - 1))
    p = float(p_value) if p_value is not None else float(field.n)
    if p < 2:
        raise click.UsageError(f"p must be >= 2, got {p}")
    manifest = RunManifest("solve", inputs={"surface": field_to_descriptor(field)},
                           config={"grid": grid_spec, "p": p})
    try:
        grid = sample_height_grid(field, lo, hi, spacing)
        grid = plaplace.tighten_boundary(grid)
        cfg = plaplace.SolverConfig(p=p)
        res = plaplace.solve_p_harmonic(grid, cfg)
    except HypcurvError as exc:
        click.echo(dumps({"error": str(exc)}), nl=False, err=True)
        sys.exit(1)
    payload = {
        "converged": res.converged,
        "iterations": res.iterations,
        "final_energy": float(res.energy_trace[-1]),
    }
    if out:
        os.makedirs(out, exist_ok=True)
        save_grid_function(res.grid, os.path.join(out, "solution.csv"),
                           os.path.join(out, "solution.json"))
        with open(os.path.join(out, "energy_trace.csv"), "w") as fh:
            fh.write("iteration,energy,step\n")
            steps = [0.0] + list(res.step_trace)
            for i, (e, s) in enumerate(zip(res.energy_trace, steps)):
                fh.write(f"{i},{format_float(float(e))},{format_float(float(s))}\n")
        manifest.outputs += ["solution.csv", "solution.json", "energy_trace.csv"]
    _emit(payload, manifest, out, "solve.json")


@main.command()
@surface_opt
@click.option("--grid", "grid_spec", required=True, help="Probe box 'lo:hi:nodes'.")
@click.option("--p", "p_value", default=None, type=float,
              help="Dirichlet exponent (default: the dimension n).")
@out_opt
def probe(surface, grid_spec, p_value, out):
    """Viscosity comparison probe on one box: is h = log f p-subharmonic there?"""
    field = _load_surface(surface)
    lo, hi, nodes = _parse_grid(grid_spec)
    spacing = float((hi[0] - lo[0]) / (nodes - 1))
    p = float(p_value) if p_value is not None else float(field.n)
    if p < 2:
        raise click.UsageError(f"p must be >= 2, got {p}")
    manifest = RunManifest("probe", inputs={"surface": field_to_descriptor(field)},
                           config={"grid": grid_spec, "p": p})
    try:
        cfg = plaplace.SolverConfig(p=p)
        result = plaplace.viscosity_probe(field, lo, hi, cfg, spacing=spacing)
    except HypcurvError as exc:
        click.echo(dumps({"error": str(exc)}), nl=False, err=True)
        sys.exit(1)
    payload = {
        "subharmonic": result.subharmonic,
        "min_margin": result.min_margin,
        "tolerance": result.tolerance,
        "excised_nodes": result.excised_nodes,
        "spacing": result.spacing,
    }
    _emit(payload, manifest, out, "probe.json")


@main.command()
@surface_opt
@click.option("--levels", default="1,2,3,4", show_default=True)
@click.option("--grid", "grid_spec", default=None, help="Window 'lo:hi:nodes'.")
@out_opt
def boundary(surface, levels, grid_spec, out):
    """Recession-set report: sublevel components and boundary-point count."""
    field = _load_surface(surface)
    levels_list = [float(t) for t in levels.split(",")]
    lo, hi, nodes = _default_window(field, grid_spec)
    spacing = float((hi[0] - lo[0]) / (nodes - 1))
    manifest = RunManifest("boundary", inputs={"surface": field_to_descriptor(field)},
                           config={"levels": levels_list,
                                   "window": [lo.tolist(), hi.tolist()],
                                   "spacing": spacing})
    try:
        rep = asymptotics.recession_report(field, levels_list, lo, hi, spacing)
    except HypcurvError as exc:
        click.echo(dumps({"error": str(exc)}), nl=False, err=True)
        sys.exit(1)
    _emit(asymptotics.recession_json(rep), manifest, out, "boundary.json")


@main.command()
@click.option("--suite", default="all", show_default=True,
              help="Criterion names (comma separated) or 'all'.")
@seed_opt
@out_opt
def verify(suite, seed, out):
    """Run the acceptance suite; nonzero exit on any failure."""
    names = None if suite == "all" else [s.strip() for s in suite.split(",")]
    try:
        results = acceptance.run_suite(names, seed=seed, echo=click.echo)
    except KeyError as exc:
        raise click.UsageError(str(exc))
    manifest = RunManifest("verify", config={"suite": suite}, seed=seed)
    payload = {
        "passed": all(r.passed for r in results),
        "criteria": [{"name": r.name, "passed": r.passed, "detail": r.detail,
                      "elapsed": r.elapsed} for r in results],
    }
    if out:
        os.makedirs(out, exist_ok=True)
        write_report(os.path.join(out, "verify.json"), payload, manifest)
    if not payload["passed"]:
        sys.exit(1)


if __name__ == "__main__":
    main()
