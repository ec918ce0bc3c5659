"""Run configuration, orchestration of a full analysis, and the report."""

from __future__ import annotations

import json
import time
from importlib import resources
from dataclasses import asdict, dataclass, field
from pathlib import Path

from . import __version__
from .critical import find_sphere_critical_points
from .degree import DegreeError, euler_from_degree, local_degree, milnor_number
from .flow import FlowParams, run_census
from .parse import parse_map, parse_polynomial, read_polynomial_source
from .poly import QuadraticSignature, compose, initial_form, quadratic_signature
from .sphere import (CERTIFIED_FRACTION_THRESHOLD, DEFAULT_EXTRA_LEVELS, DEFAULT_LEVEL, DEFAULT_RADII,
                     radius_sweep, unit_sphere_summaries)
from .theorems import InvariantBundle, Verdict, apply_ladder, duality_convert, transfer_equivalence

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_PARSE = 2
EXIT_INCONSISTENT = 3


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    polynomial_source: str
    variables: list[str]
    radii: list[float] = field(default_factory=lambda: list(DEFAULT_RADII))
    mesh_level: int = DEFAULT_LEVEL
    max_extra_levels: int = DEFAULT_EXTRA_LEVELS
    certified_threshold: float = CERTIFIED_FRACTION_THRESHOLD
    census: bool = False
    census_level: int = 6
    census_radius: float = 1 / 8
    milnor: bool = False
    max_truncation: int = 12
    degree: bool = False
    criticals: bool = True
    equivalence_map: str | None = None
    output_path: str | None = None
    format: str = "JSON"
    emit_plots: str | None = None
    include_timings: bool = True

    def validate(self) -> None:
        if not self.variables:
            raise ConfigError("no variables given")
        if len(set(self.variables)) != len(self.variables):
            raise ConfigError("variable names must be distinct")
        if len(self.variables) < 2:
            raise ConfigError("at least two variables are needed")
        if not 0 < self.certified_threshold <= 1:
            raise ConfigError("certified threshold must lie in (0, 1]")
        if len(self.radii) < 3:
            raise ConfigError("at least three radii are needed to judge stabilization")
        if any(r <= 0 for r in self.radii) or any(a <= b for a, b in zip(self.radii, self.radii[1:])):
            raise ConfigError("radii must be positive and strictly decreasing")
        if self.mesh_level < 0 or self.census_level < 0 or self.max_extra_levels < 0:
            raise ConfigError("levels must be non-negative")
        if self.format.upper() not in ("JSON", "MARKDOWN"):
            raise ConfigError("format must be JSON or MARKDOWN")
        self.format = self.format.upper()

    def to_dict(self) -> dict:
        d = asdict(self)
        d["radii"] = [float(r) for r in self.radii]
        return d


@dataclass
class Report:
    config: dict
    polynomial: str
    omega: str
    degree_d: int
    bundle: InvariantBundle
    verdict: Verdict
    sweep: dict | None = None
    census: object = None
    equivalence: dict | None = None
    timings: dict = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list)
    version: str = __version__

    def to_dict(self) -> dict:
        d = {
            "tool": "gradstable", "version": self.version, "config": self.config,
            "polynomial": self.polynomial, "omega": self.omega, "degree_d": self.degree_d,
            "bundle": self.bundle.to_dict(), "sweep": self.sweep, "verdict": self.verdict.to_dict(),
            "census": None if self.census is None else self.census.to_dict(),
            "equivalence": self.equivalence, "warnings": list(self.warnings),
        }
        if self.config.get("include_timings", True):
            d["timings"] = {k: round(v, 3) for k, v in self.timings.items()}
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    def to_markdown(self) -> str:
        return render_markdown(self.to_dict())


class _Timer:
    def __init__(self, timings: dict, key: str):
        self.timings, self.key = timings, key

    def __enter__(self):
        self.t0 = time.perf_counter()

    def __exit__(self, *exc):
        self.timings[self.key] = self.timings.get(self.key, 0.0) + time.perf_counter() - self.t0


def analyze_polynomial(f, config: RunConfig, timings: dict, warnings: list[str], label: str = "",
                       keep_regions: dict | None = None):
    """Bundle and verdict for one polynomial.  Returns (bundle, verdict, sweep dict, census)."""
    n = f.n_vars
    init = initial_form(f)
    omega, d = init.omega, init.degree_d
    prefix = f"{label}: " if label else ""
    quad_sig = quadratic_signature(omega) if d == 2 else None
    theta = f.homogeneous_part(2)
    theta_sig = quadratic_signature(theta) if not theta.is_zero() else QuadraticSignature(0, n, 0)
    bundle = InvariantBundle(n=n, degree_d=d, quad_signature=quad_sig, theta_signature=theta_sig)
    sweep_dict = None
    census = None
    if n in (2, 3):
        with _Timer(timings, f"{prefix}unit_sphere"):
            om, omp, rc_omega = unit_sphere_summaries(omega, config.mesh_level, config.max_extra_levels,
                                                      config.certified_threshold)
        with _Timer(timings, f"{prefix}radius_sweep"):
            sweep = radius_sweep(f, config.radii, config.mesh_level, config.max_extra_levels,
                                 config.certified_threshold)
        if keep_regions is not None:
            keep_regions["omega"] = rc_omega
        bundle.omega, bundle.omega_prime = om, omp
        bundle.s_r, bundle.s_prime_r = sweep.s_r, sweep.s_prime_r
        sweep_dict = sweep.to_dict()
        if not sweep.stabilized:
            warnings.append(f"{prefix}radius sweep did not stabilize; S_r invariants are not used as proof")
        for s in (om, omp, sweep.s_r, sweep.s_prime_r):
            if not s.certified:
                warnings.append(f"{prefix}{s.region} not certified: {'; '.join(s.notes) or 'see summary'}")
        if config.criticals:
            with _Timer(timings, f"{prefix}sphere_criticals"):
                bundle.sphere_criticals = find_sphere_critical_points(omega)
    else:
        warnings.append(f"{prefix}n = {n}: sphere topology is computed for n = 2 or 3 only; "
                        "using the quadratic part and the Milnor number")

    if config.degree and n in (2, 3):
        with _Timer(timings, f"{prefix}degree"):
            try:
                bundle.degree_result = local_degree(f, config.radii[-1])
                other = local_degree(f, config.radii[-2])
                if other.degree != bundle.degree_result.degree:
                    warnings.append(f"{prefix}degree differs between radii {config.radii[-2]} and "
                                    f"{config.radii[-1]}: {other.degree} vs {bundle.degree_result.degree}")
            except DegreeError as exc:
                warnings.append(f"{prefix}degree unavailable: {exc}")
        if n == 3 and bundle.degree_result is not None and bundle.s_r is not None and bundle.s_r.certified:
            chi_pos, chi_neg = euler_from_degree(bundle.degree_result)
            if chi_neg != bundle.s_r.euler:
                warnings.append(f"{prefix}chi(S_r) from the mesh ({bundle.s_r.euler}) and from the degree "
                                f"({chi_neg}) disagree")
    if config.milnor or n >= 4:
        with _Timer(timings, f"{prefix}milnor"):
            bundle.milnor = milnor_number(f, config.max_truncation)
        if not bundle.milnor.certified:
            warnings.append(f"{prefix}Milnor number not certified within truncation {config.max_truncation} "
                            "(critical point may not be algebraically isolated)")
    if config.census and n in (2, 3):
        with _Timer(timings, f"{prefix}census"):
            census = run_census(f, config.census_radius, config.census_level, FlowParams())
        bundle.census = census

    with _Timer(timings, f"{prefix}ladder"):
        bundle = duality_convert(bundle)
        verdict = apply_ladder(bundle)
    return bundle, verdict, sweep_dict, census


def run_pipeline(config: RunConfig, keep_regions: dict | None = None) -> Report:
    """Parse, compute every requested invariant, and run the ladder.

    Raises ParseError/CriticalPointError/ConfigError for bad input and
    InconsistentInvariants when certified computations disagree.
    """
    config.validate()
    timings: dict[str, float] = {}
    warnings: list[str] = []
    text = read_polynomial_source(config.polynomial_source)
    with _Timer(timings, "parse"):
        f = parse_polynomial(text, config.variables)
    init = initial_form(f)
    bundle, verdict, sweep, census = analyze_polynomial(f, config, timings, warnings, keep_regions=keep_regions)
    names = config.variables
    equivalence = None
    if config.equivalence_map:
        phi = parse_map(read_polynomial_source(config.equivalence_map), names)
        g = compose(f, phi)
        g_bundle, g_verdict, g_sweep, _ = analyze_polynomial(g, config, timings, warnings, label="g")
        g_bundle.equivalence_source = {"polynomial": f.to_string(names), "fired": verdict.fired_ids()}
        transferred = transfer_equivalence(verdict, phi, g_verdict, source_label=f.to_string(names))
        equivalence = {
            "map": [c.to_string(names) for c in phi.components],
            "g": g.to_string(names),
            "bundle": g_bundle.to_dict(),
            "sweep": g_sweep,
            "verdict": transferred.to_dict(),
        }
    if verdict.interior_nonempty.value == "PROVED":
        assert verdict.t_infinite.value == "PROVED"
    return Report(config=config.to_dict(), polynomial=f.to_string(names), omega=init.omega.to_string(names),
                  degree_d=init.degree_d, bundle=bundle, verdict=verdict, sweep=sweep, census=census,
                  equivalence=equivalence, timings=timings, warnings=warnings)


def render_markdown(d: dict) -> str:
    """Human-readable view of a report dictionary."""
    v = d["verdict"]
    b = d["bundle"]
    lines = [
        f"# gradstable report (version {d['version']})",
        "",
        f"- f = `{d['polynomial']}`",
        f"- initial form omega = `{d['omega']}` (degree {d['degree_d']})",
        f"- infinitely many converging trajectories: **{v['t_infinite']}**",
        f"- stable set has non-empty interior: **{v['interior_nonempty']}**",
        "",
        "## Invariants",
        "",
        "| set | b0 | chi | b1 | empty | certified |",
        "|---|---|---|---|---|---|",
    ]
    for key, name in (("s_r", "S_r"), ("s_prime_r", "S'_r"), ("omega", "Omega"), ("omega_prime", "Omega'")):
        s = b.get(key)
        if s is None:
            lines.append(f"| {name} | - | - | - | - | - |")
        else:
            lines.append(f"| {name} | {s['b0']} | {s['euler']} | {s['b1']} | {s['empty']} | {s['certified']} |")
    extra = []
    if b.get("quad_signature"):
        extra.append(f"- signature of omega: {tuple(b['quad_signature'])}")
    if b.get("degree_result"):
        extra.append(f"- local degree of -grad f: {b['degree_result']['degree']}")
    if b.get("milnor"):
        m = b["milnor"]
        extra.append(f"- Milnor number: {m['mu']} ({m['status']})")
    if extra:
        lines += [""] + extra
    lines += ["", "## Criteria", "", "| id | outcome | certified | inputs |", "|---|---|---|---|"]
    for c in v["evaluations"]:
        inputs = ", ".join(f"{k}={val}" for k, val in c["inputs"].items())
        lines.append(f"| {c['id']} | {c['outcome']} | {c['certified']} | {inputs} |")
    for c in v["fired_criteria"]:
        if c.get("note"):
            lines.append(f"| {c['id']} | {c['outcome']} | {c['certified']} | {c['note']} |")
    if v["advisories"]:
        lines += ["", "## Advisories", ""]
        for a in v["advisories"]:
            lines.append(f"- {a['id']}: {a['conclusion']} {json.dumps(a['detail'])}")
    if d.get("census"):
        c = d["census"]
        lines += ["", "## Census", "",
                  f"- radius {c['radius']}, grid level {c['grid_level']}, seeds {c['seeds']}",
                  f"- converging fraction {c['converging_fraction']:.4f} +/- {c['uncertainty']:.4f}, "
                  f"clusters {c['cluster_count']}"]
    if d.get("equivalence"):
        e = d["equivalence"]
        ev = e["verdict"]
        lines += ["", "## Right-equivalent g", "", f"- g = `{e['g']}`",
                  f"- infinitely many converging trajectories: **{ev['t_infinite']}**",
                  f"- stable set has non-empty interior: **{ev['interior_nonempty']}**"]
        if ev.get("transferred_from"):
            lines.append(f"- {ev['transferred_from']}")
    if d["warnings"]:
        lines += ["", "## Warnings", ""] + [f"- {w}" for w in d["warnings"]]
    if "timings" in d:
        lines += ["", "## Timings (s)", ""] + [f"- {k}: {t}" for k, t in d["timings"].items()]
    return "\n".join(lines) + "\n"


def report_schema() -> dict:
    """The JSON schema that every report written by :func:`write_report` satisfies."""
    return json.loads(resources.files(__package__).joinpath("report.schema.json").read_text())


def write_report(report: Report, path: str | Path | None, fmt: str = "JSON") -> str:
    text = report.to_markdown() if fmt.upper() == "MARKDOWN" else report.to_json()
    if path:
        Path(path).write_text(text)
    return text
