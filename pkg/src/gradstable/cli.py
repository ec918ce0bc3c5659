"""Command line: ``gradstable analyze --poly <text|file> --vars x,y,z ...``.

Options can also come from a key=value file given with ``--config``; flags
given on the command line override the file.
"""

from __future__ import annotations

import argparse
import sys
from fractions import Fraction
from pathlib import Path

from .flow import FlowParams, integrate_trajectory
from .parse import ParseError, parse_polynomial, read_polynomial_source
from .pipeline import (EXIT_INCONSISTENT, EXIT_INTERNAL, EXIT_OK, EXIT_PARSE, ConfigError, RunConfig,
                       run_pipeline, write_report)
from .plots import sign_map_csv, sign_map_ppm, trajectory_csv
from .poly import PolynomialError
from .sphere import DEFAULT_RADII, build_mesh, classify_region
from .theorems import InconsistentInvariants

_DEFAULTS = RunConfig(polynomial_source="", variables=[])

# option name -> (RunConfig field, converter)
_BOOL = {"1": True, "true": True, "yes": True, "on": True, "0": False, "false": False, "no": False, "off": False}


def _bool(text: str) -> bool:
    try:
        return _BOOL[text.strip().lower()]
    except KeyError:
        raise ConfigError(f"not a boolean: {text!r}") from None


def _floats(text: str) -> list[float]:
    try:
        return [float(Fraction(t.strip())) for t in text.split(",") if t.strip()]
    except (ValueError, ZeroDivisionError):
        raise ConfigError(f"bad radius list: {text!r}") from None


def _names(text: str) -> list[str]:
    return [t.strip() for t in text.split(",") if t.strip()]


_KEYS = {
    "poly": ("polynomial_source", str),
    "vars": ("variables", _names),
    "radii": ("radii", _floats),
    "mesh_level": ("mesh_level", int),
    "max_extra_levels": ("max_extra_levels", int),
    "certified_threshold": ("certified_threshold", float),
    "census": ("census", _bool),
    "census_level": ("census_level", int),
    "census_radius": ("census_radius", lambda s: _floats(s)[0]),
    "milnor": ("milnor", _bool),
    "max_truncation": ("max_truncation", int),
    "degree": ("degree", _bool),
    "criticals": ("criticals", _bool),
    "equiv": ("equivalence_map", str),
    "out": ("output_path", str),
    "format": ("format", str),
    "emit_plots": ("emit_plots", str),
    "timings": ("include_timings", _bool),
}


def read_config_file(path: str | Path) -> dict:
    """key=value lines; '#' starts a comment; keys use the long option names."""
    values = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in _KEYS:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        field_name, conv = _KEYS[key]
        values[field_name] = conv(value)
    return values


def build_parser() -> argparse.ArgumentParser:
    d = _DEFAULTS
    radii = ",".join(str(r) for r in DEFAULT_RADII)
    parser = argparse.ArgumentParser(prog="gradstable",
                                     description="Topological criteria for the stable set of grad f at 0.")
    sub = parser.add_subparsers(dest="command", required=True)
    a = sub.add_parser("analyze", help="analyze one polynomial germ",
                       formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    S = argparse.SUPPRESS
    a.add_argument("--config", help="key=value file with any of the options below", default=S)
    a.add_argument("--poly", help="polynomial text, or a file containing it", default=S)
    a.add_argument("--vars", help="comma separated variable names, e.g. x,y,z", default=S)
    a.add_argument("--radii", help=f"strictly decreasing sphere radii (default {radii})", default=S)
    a.add_argument("--mesh-level", type=int, help=f"base mesh level (default {d.mesh_level})", default=S)
    a.add_argument("--max-extra-levels", type=int,
                   help=f"adaptive splits of uncertified cells (default {d.max_extra_levels})", default=S)
    a.add_argument("--certified-threshold", type=float,
                   help=f"minimum certified area fraction (default {d.certified_threshold})", default=S)
    a.add_argument("--census", action="store_const", const=True, default=S,
                   help="run the gradient-flow census (default off)")
    a.add_argument("--census-level", type=int, help=f"census grid level (default {d.census_level})", default=S)
    a.add_argument("--census-radius", help=f"census seed radius (default {d.census_radius})", default=S)
    a.add_argument("--milnor", action="store_const", const=True, default=S,
                   help="compute the Milnor number (default off; always on for n >= 4)")
    a.add_argument("--max-truncation", type=int,
                   help=f"Milnor truncation limit (default {d.max_truncation})", default=S)
    a.add_argument("--degree", action="store_const", const=True, default=S,
                   help="compute the local degree of -grad f (default off)")
    a.add_argument("--no-criticals", dest="criticals", action="store_const", const=False, default=S,
                   help="skip the critical-point search of omega on the sphere")
    a.add_argument("--equiv", help="map phi as 'c1; c2; ...': also analyze g = f o phi", default=S)
    a.add_argument("--out", help="write the report here instead of stdout", default=S)
    a.add_argument("--format", choices=["json", "markdown", "JSON", "MARKDOWN"],
                   help="report format (default JSON)", default=S)
    a.add_argument("--emit-plots", help="directory for sign-map CSV/PPM and trajectory CSV", default=S)
    a.add_argument("--no-timings", dest="timings", action="store_const", const=False, default=S,
                   help="omit timings so reports are byte-stable")
    return parser


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    values: dict = {}
    given = vars(ns)
    if "config" in given:
        values.update(read_config_file(given["config"]))
    for key, (field_name, conv) in _KEYS.items():
        if key in given:
            raw = given[key]
            values[field_name] = conv(raw) if isinstance(raw, str) and conv is not str else raw
    if "polynomial_source" not in values or not values["polynomial_source"]:
        raise ConfigError("--poly is required")
    if "variables" not in values:
        raise ConfigError("--vars is required")
    return RunConfig(**values)


def emit_plots(config: RunConfig, report, regions: dict, directory: str | Path) -> list[Path]:
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    f = parse_polynomial(read_polynomial_source(config.polynomial_source), config.variables)
    n = f.n_vars
    if n not in (2, 3):
        return written
    r = config.radii[-1]
    rc = classify_region(f, build_mesh(n, r, config.mesh_level), config.max_extra_levels)
    for name, region in (("s_r", rc), ("omega", regions.get("omega"))):
        if region is None:
            continue
        p = out / f"sign_map_{name}.csv"
        sign_map_csv(region, p)
        q = out / f"sign_map_{name}.ppm"
        sign_map_ppm(region, q)
        written += [p, q]
    census = report.census
    if census is not None:
        picked = {}
        for rec in census.records:
            picked.setdefault(rec.outcome.value, rec)
        for outcome, rec in sorted(picked.items()):
            traced = integrate_trajectory(f, rec.seed, FlowParams(), record=True)
            p = out / f"trajectory_{outcome.lower()}.csv"
            trajectory_csv(traced, p)
            written.append(p)
    return written


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    try:
        config = config_from_args(ns)
        regions: dict = {}
        report = run_pipeline(config, keep_regions=regions)
    except (ParseError, PolynomialError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except InconsistentInvariants as exc:
        print(f"inconsistent invariants: {exc}", file=sys.stderr)
        for key, value in exc.dump.items():
            print(f"  {key}: {value}", file=sys.stderr)
        return EXIT_INCONSISTENT
    except Exception as exc:  # report anything else with context
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    text = write_report(report, config.output_path, config.format)
    if not config.output_path:
        sys.stdout.write(text)
    if config.emit_plots:
        for p in emit_plots(config, report, regions, config.emit_plots):
            print(f"wrote {p}", file=sys.stderr)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
