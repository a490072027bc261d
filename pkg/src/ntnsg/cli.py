"""Command-line front end.

Every command resolves its flags and optional config file into one
:class:`~ntnsg.config.Config`, runs, writes CSV output atomically and a JSON
manifest beside it. ``ntnsg rerun MANIFEST`` replays a manifest.

Exit codes: 0 success, 1 rerun checksum mismatch, 2 configuration error,
3 numeric non-convergence, 4 I/O error.
"""

from __future__ import annotations

import argparse
import json
import math
import platform
import sys
import time
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__, kernels
from .config import (
    Config,
    ConfigError,
    build_fading,
    build_link,
    build_localizability_study,
    build_metric_config,
    build_planar_study,
    build_spec,
    load_config,
    parse_config,
    r_earth,
    shell_radius,
)
from .engine import EngineConfigError, coverage_probability, k_localizability, resolve_threads
from .fading import FadingError
from .geometry import GeometryError, cartesian_to_spherical
from .io import atomic_write, csv_text, sha256_file, write_json
from .link import LinkError
from .processes import HomBPP, ProcessError, sample, sample_batch
from .rng import stream
from .special import NonConvergenceError
from .studies import LOCALIZABILITY_COLUMNS, PLANAR_COLUMNS, StudyError, run_localizability_study, run_planar_study
from .topology import (
    TopologyError,
    TopologyParams,
    contact_angle_cdf,
    contact_angle_pdf,
    contact_angles,
    k_availability,
)

EXIT_OK, EXIT_MISMATCH, EXIT_CONFIG, EXIT_NONCONV, EXIT_IO = 0, 1, 2, 3, 4

DEFAULT_OUTPUT = {
    "sample": "points.csv",
    "topology": "topology.csv",
    "coverage": "coverage.csv",
    "localize": "localize.csv",
    "study-planar": "planar.csv",
    "study-localizability": "localizability.csv",
}


def default_config_text(name) -> str:
    return resources.files("ntnsg").joinpath("configs", f"{name}.cfg").read_text(encoding="utf-8")


# -- command bodies (pure: Config in, CSV text + summary out) ---------------


def run_sample(cfg: Config, threads=None):
    spec = build_spec(cfg)
    radius = shell_radius(cfg)
    seed = cfg.get("run", "seed", 0)
    s = sample(spec, radius, seed)
    r, pol, az = cartesian_to_spherical(s.xyz) if len(s.xyz) else (np.zeros(0),) * 3
    cols = ("x_km", "y_km", "z_km", "polar_rad", "azimuth_rad")
    rows = [dict(zip(cols, (x, y, z, p, a))) for (x, y, z), p, a in zip(s.xyz, pol, az)]
    return csv_text(rows, cols), {"points": len(rows)}


def _topology_grid(cfg: Config):
    spec = build_spec(cfg)
    if not isinstance(spec, HomBPP):
        raise ConfigError("closed-form topology statistics need process.model = hom-bpp", field="process.model")
    radius = shell_radius(cfg)
    p = TopologyParams(spec.count, radius, r_earth(cfg))
    assoc = cfg.get("topology", "association", "visibility")
    theta_max = p.theta_max(assoc, cfg.get("topology", "d_max"))
    n = cfg.get("topology", "grid_points", 181)
    if n < 2:
        raise ConfigError("grid_points must be >= 2", field="topology.grid_points")
    return spec, p, theta_max, np.linspace(0.0, theta_max, n)


def run_topology(cfg: Config, threads=None):
    spec, p, theta_max, theta = _topology_grid(cfg)
    ks = cfg.get("topology", "k_values", (1, 4, 6))
    for k in ks:
        if not 0 <= k <= p.n_ntp:
            raise ConfigError(f"k={k} outside [0, {p.n_ntp}]", field="topology.k_values")
    d = np.sqrt((p.r_ntp - p.r_earth) ** 2 + 4 * p.r_ntp * p.r_earth * np.sin(0.5 * theta) ** 2)
    cols = ["theta_rad", "distance_km", "contact_cdf", "contact_pdf", "availability"]
    cols += [f"k_availability_{k}" for k in ks]
    data = {
        "theta_rad": theta,
        "distance_km": d,
        "contact_cdf": np.asarray(contact_angle_cdf(theta, p)),
        "contact_pdf": np.asarray(contact_angle_pdf(theta, p)),
        "availability": np.asarray(contact_angle_cdf(theta, p)),
    }
    for k in ks:
        data[f"k_availability_{k}"] = np.broadcast_to(k_availability(k, theta, p), theta.shape)
    summary = {"theta_max_rad": theta_max,
               "k_availability_at_theta_max": {str(k): k_availability(k, theta_max, p) for k in ks}}
    if cfg.get("topology", "empirical", False):
        samples = cfg.get("topology", "samples", 100_000)
        batch = sample_batch(spec, p.r_ntp, stream(cfg.get("run", "seed", 0), 0), samples)
        ang = np.sort(contact_angles(batch, np.array([0.0, 0.0, 1.0])))
        data["empirical_contact_cdf"] = np.searchsorted(ang, theta, side="right") / len(ang)
        cols.append("empirical_contact_cdf")
        summary["max_abs_diff"] = float(np.max(np.abs(data["empirical_contact_cdf"] - data["contact_cdf"])))
    rows = [{c: data[c][i] for c in cols} for i in range(len(theta))]
    return csv_text(rows, cols), summary


def _metric_inputs(cfg, threads):
    return (build_spec(cfg), build_link(cfg), build_fading(cfg), build_metric_config(cfg, threads),
            shell_radius(cfg), r_earth(cfg))


_METRIC_COLUMNS = ("parameter", "estimate", "std_error", "trials")


def run_coverage(cfg: Config, threads=None):
    spec, link, fad, mcfg, radius, re = _metric_inputs(cfg, threads)
    res = coverage_probability(spec, link, fad, mcfg, radius=radius, r_earth=re)
    row = {"parameter": "coverage", "estimate": res.estimate, "std_error": res.std_error, "trials": res.trials}
    return csv_text([row], _METRIC_COLUMNS), {"estimate": res.estimate, "std_error": res.std_error}


def run_localize(cfg: Config, threads=None):
    spec, link, fad, mcfg, radius, re = _metric_inputs(cfg, threads)
    res = k_localizability(spec, link, fad, mcfg, radius=radius, r_earth=re)
    row = {"parameter": f"localizability_k{mcfg.k}", "estimate": res.estimate, "std_error": res.std_error,
           "trials": res.trials}
    return csv_text([row], _METRIC_COLUMNS), {"estimate": res.estimate, "std_error": res.std_error,
                                              "subset": mcfg.subset}


def run_study_planar(cfg: Config, threads=None):
    study = build_planar_study(cfg)
    res = run_planar_study(study)
    summary = {"cap_angle_mode": study.cap_angle_mode,
               "crossings_deg": {repr(a): res.crossing(a) for a in study.altitudes}}
    return csv_text(res.rows, PLANAR_COLUMNS), summary


def run_study_localizability(cfg: Config, threads=None):
    study = build_localizability_study(cfg, threads)
    res = run_localizability_study(study)
    return csv_text(res.rows, LOCALIZABILITY_COLUMNS), {"subset": study.subset,
                                                        "sats_per_orbit": study.sats_per_orbit}


COMMANDS = {
    "sample": run_sample,
    "topology": run_topology,
    "coverage": run_coverage,
    "localize": run_localize,
    "study-planar": run_study_planar,
    "study-localizability": run_study_localizability,
}


# -- orchestration ----------------------------------------------------------


def manifest_path(output: Path) -> Path:
    return output.with_name(output.name + ".manifest.json")


def execute(command: str, cfg: Config, output: Path, threads=None, manifest: Path | None = None) -> dict:
    """Run ``command``, write ``output`` and its manifest; return the manifest dict."""
    # canonicalize first so the manifest config is exactly what ran
    cfg = parse_config(cfg.to_text(), source=cfg.source)
    t0 = time.perf_counter()
    text, summary = COMMANDS[command](cfg, threads)
    elapsed = time.perf_counter() - t0
    output = Path(output)
    atomic_write(output, text)
    man = {
        "tool": "ntnsg",
        "version": __version__,
        "command": command,
        "config": cfg.to_text(),
        "seed": cfg.get("run", "seed", 0),
        "threads": resolve_threads(threads),
        "backend": kernels.BACKEND,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "duration_s": elapsed,
        "outputs": {output.name: sha256_file(output)},
        "summary": summary,
    }
    write_json(manifest or manifest_path(output), man)
    return man


def rerun(manifest_file: Path, output: Path | None = None, threads=None, check=True):
    man = json.loads(Path(manifest_file).read_text(encoding="utf-8"))
    if man.get("command") not in COMMANDS:
        raise ConfigError(f"manifest names unknown command {man.get('command')!r}", source=manifest_file)
    cfg = parse_config(man["config"], source=f"{manifest_file}:config")
    (name, expected), = man["outputs"].items()
    output = Path(output) if output else Path(manifest_file).parent / name
    new = execute(man["command"], cfg, output, threads)
    got = new["outputs"][output.name]
    return got == expected, expected, got, output


# -- argument parsing -------------------------------------------------------


def _add_common(p, out_default):
    p.add_argument("--config", type=Path, help="key-value config file; flags override it")
    p.add_argument("--seed", type=int)
    p.add_argument("--threads", type=int, help="worker threads (default: $NTNSG_THREADS or all CPUs)")
    p.add_argument("-o", "--output", type=Path, default=None, help=f"output CSV (default {out_default})")


def _add_process(p):
    p.add_argument("--model", help="hom-bpp, hom-ppp, nonhom-bpp, cpp, dsbpp, ogm, plp")
    p.add_argument("--count", type=int)
    p.add_argument("--mean-count", type=float)
    p.add_argument("--mean-orbits", type=float)
    p.add_argument("--mean-sats-per-orbit", type=float)
    p.add_argument("--orbits", type=int)
    p.add_argument("--sats-per-orbit", type=int)
    p.add_argument("--total", type=int, help="dsbpp total satellites; the last orbit takes the remainder")
    p.add_argument("--inclination-deg", type=float)
    p.add_argument("--sats", type=int)
    p.add_argument("--equal-spacing", action="store_true", default=None)
    p.add_argument("--altitude-km", type=float)


def _add_metric(p):
    p.add_argument("--trials", type=int)
    p.add_argument("--threshold-db", type=float, help="SINR threshold in dB")
    p.add_argument("--association", choices=("nearest", "random"))
    p.add_argument("--interference", choices=("none", "all_visible_others"))
    p.add_argument("--elevation-mask-deg", type=float)
    p.add_argument("--fading", help="none, nakagami, sr, rician, pointing, mixed-lognormal")


def build_parser():
    ap = argparse.ArgumentParser(prog="ntnsg", description="Spherical stochastic geometry for non-terrestrial networks")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sample", help="draw one constellation realization")
    _add_common(p, DEFAULT_OUTPUT["sample"])
    _add_process(p)

    p = sub.add_parser("topology", help="closed-form contact and availability statistics")
    _add_common(p, DEFAULT_OUTPUT["topology"])
    p.add_argument("--n-ntp", type=int)
    p.add_argument("--altitude-km", type=float)
    p.add_argument("--k", type=int, nargs="+", dest="k_values")
    p.add_argument("--grid-points", type=int)
    p.add_argument("--association", choices=("visibility", "distance"))
    p.add_argument("--d-max-km", type=float)
    p.add_argument("--empirical", action="store_true", default=None, help="add a Monte Carlo contact CDF column")
    p.add_argument("--samples", type=int)

    for name in ("coverage", "localize"):
        p = sub.add_parser(name, help=f"Monte Carlo {'coverage probability' if name == 'coverage' else 'K-localizability'}")
        _add_common(p, DEFAULT_OUTPUT[name])
        _add_process(p)
        _add_metric(p)
        if name == "localize":
            p.add_argument("--k", type=int)
            p.add_argument("--subset", choices=("any", "nearest"))

    p = sub.add_parser("study", help="case-study drivers")
    p.add_argument("kind", choices=("planar", "localizability"))
    _add_common(p, "planar.csv / localizability.csv")
    p.add_argument("--trials", type=int)

    p = sub.add_parser("rerun", help="replay a manifest and compare checksums")
    p.add_argument("manifest", type=Path)
    p.add_argument("-o", "--output", type=Path, default=None, help="where to write (default: next to the manifest)")
    p.add_argument("--threads", type=int)
    return ap


def _overrides(args) -> dict:
    a = vars(args)
    g = lambda k: a.get(k)  # noqa: E731
    ov = {
        ("run", "seed"): g("seed"),
        ("run", "trials"): g("trials"),
        ("process", "model"): g("model"),
        ("process", "count"): g("count") if args.command != "topology" else g("n_ntp"),
        ("process", "mean_count"): g("mean_count"),
        ("process", "mean_orbits"): g("mean_orbits"),
        ("process", "mean_sats_per_orbit"): g("mean_sats_per_orbit"),
        ("process", "orbits"): g("orbits"),
        ("process", "sats_per_orbit"): g("sats_per_orbit"),
        ("process", "total"): g("total"),
        ("process", "inclination"): None if g("inclination_deg") is None else math.radians(g("inclination_deg")),
        ("process", "sats"): g("sats"),
        ("process", "equal_spacing"): g("equal_spacing"),
        ("process", "altitude"): g("altitude_km"),
        ("link", "sinr_threshold"): None if g("threshold_db") is None else 10.0 ** (g("threshold_db") / 10.0),
        ("metric", "interference"): g("interference"),
        ("metric", "elevation_mask"): None if g("elevation_mask_deg") is None else math.radians(g("elevation_mask_deg")),
        ("fading", "model"): g("fading"),
    }
    if args.command == "topology":
        ov.update({
            ("process", "model"): "hom-bpp" if g("n_ntp") is not None else None,
            ("topology", "k_values"): tuple(g("k_values")) if g("k_values") else None,
            ("topology", "grid_points"): g("grid_points"),
            ("topology", "association"): g("association"),
            ("topology", "d_max"): g("d_max_km"),
            ("topology", "empirical"): g("empirical"),
            ("topology", "samples"): g("samples"),
        })
    else:
        ov[("metric", "association")] = g("association")
    if args.command == "localize":
        ov[("metric", "k")] = g("k")
        ov[("metric", "subset")] = g("subset")
    return ov


def _fail(code, exc):
    err = {"error": type(exc).__name__, "message": str(exc), "exit_code": code}
    for attr in ("field", "line", "source"):
        if getattr(exc, attr, None) is not None:
            err[attr] = str(getattr(exc, attr)) if attr == "source" else getattr(exc, attr)
    print(json.dumps(err), file=sys.stderr)
    return code


CONFIG_ERRORS = (ConfigError, EngineConfigError, StudyError, ProcessError, FadingError, LinkError,
                 TopologyError, GeometryError)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "rerun":
            ok, expected, got, out = rerun(args.manifest, args.output, args.threads)
            print(json.dumps({"output": str(out), "expected": expected, "got": got, "match": ok}))
            return EXIT_OK if ok else EXIT_MISMATCH
        command = f"study-{args.kind}" if args.command == "study" else args.command
        if args.config is not None:
            base = load_config(args.config)
        elif args.command == "study":
            base = parse_config(default_config_text(args.kind), source=f"default {args.kind}.cfg")
        else:
            base = Config()
        cfg = base.merged(_overrides(args))
        output = args.output or Path(DEFAULT_OUTPUT[command])
        man = execute(command, cfg, output, args.threads)
        print(json.dumps({"output": str(output), "sha256": man["outputs"][output.name],
                          "manifest": str(manifest_path(output)), "summary": man["summary"]}, default=str))
        return EXIT_OK
    except CONFIG_ERRORS as exc:
        return _fail(EXIT_CONFIG, exc)
    except NonConvergenceError as exc:
        return _fail(EXIT_NONCONV, exc)
    except (OSError, json.JSONDecodeError) as exc:
        return _fail(EXIT_IO, exc)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
