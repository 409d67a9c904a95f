"""Scenario runner: INI config in, CSV tables and a run manifest out.

Verbs
-----
``outage``    analytic and/or Monte Carlo outage over a sweep
``moments``   exact vs. Taylor-approximated moments of ``S`` over ``sigma_s / w``
``validate``  parse and check a config without computing anything

Exit codes: 0 success, 1 validation error, 2 numerical failure (some rows
could not be computed; they are still written with a non-``ok`` status).
"""
from __future__ import annotations

import argparse
import configparser
import csv
import itertools
import logging
import math
import re
import sys
import time
from dataclasses import dataclass, field, replace
from importlib import resources
from io import StringIO
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import __version__
from .alphamu import fit_alpha_mu, outage_probability
from .channel_moments import PRESETS, TurbulenceParams, moment_set
from .errors import ConfigurationError, DomainError, NumericalError
from .geometry import (
    MIN_CCR_SPACING,
    CCRLayout,
    LinkGeometry,
    circular_radius_for,
    derive_budget,
    layout_circular,
    layout_linear,
)
from .simulate import DEFAULT_CHUNK, ConventionalBaseline, SimulationPlan, simulate_conventional, simulate_outage

log = logging.getLogger("retrofso")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2
MODES = ("analytic-exact", "analytic-approx", "montecarlo", "all")
SWEEP_VARIABLES = ("p_gs", "sigma_s", "p_th")
PRESET_NAMES = ("fig2", "fig3", "fig4", "fig5")

OUTAGE_COLUMNS = (
    "sweep_variable",
    "sweep_value",
    "threshold",
    "analytic_method",
    "status",
    "alpha",
    "mu",
    "r_hat",
    "analytic_outage",
    "empirical_outage",
    "empirical_outage_se",
    "m1_analytic",
    "m2_analytic",
    "m4_analytic",
    "m1_empirical",
    "m2_empirical",
    "m4_empirical",
    "message",
)
BASELINE_COLUMNS = (
    "sweep_variable",
    "sweep_value",
    "p_t_fraction",
    "p_t",
    "conventional_outage",
    "conventional_outage_se",
)
MOMENT_COLUMNS = (
    "sigma_ratio",
    "sigma_s",
    "order",
    "exact",
    "approx",
    "approx_first_order",
    "rel_error",
    "rel_error_first_order",
)

_GEOMETRY_KEYS = {
    "z", "wavelength", "a_gs", "a_re", "visibility", "sigma_atm",
    "theta_gs", "w", "sigma_s", "rho_refl", "p_gs", "p_th",
}
_ALLOWED = {
    "geometry": _GEOMETRY_KEYS,
    "layout": {"kind", "m", "spacing", "radius", "positions", "min_spacing"},
    "turbulence": {"preset", "alpha1", "beta1", "rho_alpha", "rho_beta"},
    "sweep": {"variable", "values"},
    "run": {"mode", "samples", "seed", "workers", "chunk_size"},
    "baseline": {"p_t_fractions", "beamwidth", "rx_radius", "rx_gain"},
    "series": None,  # dotted keys, checked separately
    "moments": {"ratios"},
    "manifest": None,  # written by us, ignored on read
}


class ConfigError(ConfigurationError):
    """Config problem with an optional source location."""

    def __init__(self, message, path=None, line=None):
        where = ""
        if path is not None:
            where = f"{path}:{line}: " if line is not None else f"{path}: "
        super().__init__(where + message)


# ---------------------------------------------------------------- config ---


class _Source:
    """Parsed INI text plus the line number of every ``[section] key``."""

    _SECTION = re.compile(r"^\s*\[([^\]]+)\]")
    _KEY = re.compile(r"^\s*([^=:#;\s][^=:]*?)\s*[=:]")

    def __init__(self, text: str, path: str):
        self.path = path
        self.lines: Dict[Tuple[str, Optional[str]], int] = {}
        section = None
        for no, line in enumerate(text.splitlines(), start=1):
            m = self._SECTION.match(line)
            if m:
                section = m.group(1).strip()
                self.lines[(section, None)] = no
                continue
            if section is not None and not line[:1].isspace():
                k = self._KEY.match(line)
                if k:
                    self.lines.setdefault((section, k.group(1).strip().lower()), no)
        self.parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
        try:
            self.parser.read_string(text, source=path)
        except configparser.Error as exc:
            line = getattr(exc, "lineno", None)
            raise ConfigError(str(exc).splitlines()[0], path, line) from None

    def error(self, section, key, message):
        line = self.lines.get((section, key), self.lines.get((section, None)))
        label = f"[{section}] {key}: " if key else f"[{section}]: "
        return ConfigError(label + message, self.path, line)


def _number(src, section, key, raw, kind=float, positive=False, nonneg=False):
    try:
        value = kind(float(raw)) if kind is int else kind(raw)
        if kind is int and float(raw) != value:
            raise ValueError
    except (TypeError, ValueError):
        raise src.error(section, key, f"expected {'an integer' if kind is int else 'a number'}, got {raw!r}")
    if isinstance(value, float) and not math.isfinite(value):
        raise src.error(section, key, f"must be finite, got {raw!r}")
    if positive and not value > 0:
        raise src.error(section, key, f"must be positive, got {raw!r}")
    if nonneg and not value >= 0:
        raise src.error(section, key, f"must be >= 0, got {raw!r}")
    return value


def _list(raw: str) -> List[str]:
    return [t for t in re.split(r"[,\s]+", raw.strip()) if t]


@dataclass
class Scenario:
    """One fully resolved scenario (a single point of the [series] product)."""

    label: str
    geometry: LinkGeometry
    layout: CCRLayout
    turbulence: TurbulenceParams
    overrides: Dict[str, str] = field(default_factory=dict)


@dataclass
class RunConfig:
    path: str
    source: _Source
    scenarios: List[Scenario]
    sweep_variable: Optional[str]
    sweep_values: List[float]
    mode: str
    samples: int
    seed: int
    workers: int
    chunk_size: int
    baseline: Optional[Dict[str, object]]
    ratios: List[float]

    def resolved_ini(self) -> str:
        """The config with CLI overrides applied, re-runnable as is."""
        cp = configparser.ConfigParser(interpolation=None)
        for name in self.source.parser.sections():
            if name == "manifest":
                continue
            cp[name] = dict(self.source.parser[name])
        if not cp.has_section("run"):
            cp.add_section("run")
        cp["run"].update(
            mode=self.mode,
            samples=str(self.samples),
            seed=str(self.seed),
            workers=str(self.workers),
            chunk_size=str(self.chunk_size),
        )
        cp["manifest"] = {
            "version": __version__,
            "numpy": np.__version__,
            "seed": str(self.seed),
        }
        buf = StringIO()
        cp.write(buf)
        return buf.getvalue()


def _build_geometry(src, values, sweep_variable=None, sweep_values=()):
    kw = {}
    if sweep_variable and sweep_variable not in values and sweep_values:
        # the swept quantity may be left out of [geometry]
        values = dict(values, **{sweep_variable: str(sweep_values[0])})
    for key, raw in values.items():
        if key not in _GEOMETRY_KEYS:
            raise src.error("geometry", key, "unknown key")
        nonneg = key in ("sigma_s", "sigma_atm")
        kw[key] = _number(src, "geometry", key, raw, positive=not nonneg, nonneg=nonneg)
    for key in ("z", "a_gs", "a_re", "sigma_s", "rho_refl", "p_gs", "p_th"):
        if key not in kw:
            raise src.error("geometry", None, f"missing required key {key!r}")
    try:
        return LinkGeometry(**kw)
    except ConfigurationError as exc:
        raise src.error("geometry", None, str(exc)) from None


def _build_layout(src, values):
    kind = values.get("kind", "circular").strip().lower()
    min_spacing = _number(src, "layout", "min_spacing", values.get("min_spacing", MIN_CCR_SPACING), positive=True)
    try:
        if kind == "explicit":
            if "positions" not in values:
                raise src.error("layout", "kind", "explicit layouts need 'positions'")
            pts = []
            for chunk in values["positions"].split(";"):
                xy = _list(chunk)
                if len(xy) != 2:
                    raise src.error("layout", "positions", f"expected 'x y' pairs separated by ';', got {chunk!r}")
                pts.append([_number(src, "layout", "positions", v) for v in xy])
            return CCRLayout(np.array(pts), min_spacing=min_spacing)
        if "m" not in values:
            raise src.error("layout", None, "missing required key 'm'")
        m = _number(src, "layout", "m", values["m"], kind=int, positive=True)
        if kind == "linear":
            spacing = _number(src, "layout", "spacing", values.get("spacing", min_spacing), positive=True)
            return layout_linear(m, spacing, min_spacing=min_spacing)
        if kind == "circular":
            raw = values.get("radius", "auto").strip().lower()
            if raw == "auto":
                radius = circular_radius_for(m, min_spacing)
            else:
                radius = _number(src, "layout", "radius", raw, positive=True)
            return layout_circular(m, radius, min_spacing=min_spacing)
    except ConfigurationError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise src.error("layout", None, str(exc)) from None
    raise src.error("layout", "kind", f"expected linear, circular or explicit, got {kind!r}")


def _build_turbulence(src, values):
    for key in values:
        if key not in _ALLOWED["turbulence"]:
            raise src.error("turbulence", key, "unknown key")
    if "preset" in values:
        name = values["preset"].strip().lower()
        if name not in PRESETS:
            raise src.error("turbulence", "preset", f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
        base = PRESETS[name]
    else:
        base = None
    kw = {}
    for key in ("alpha1", "beta1", "rho_alpha", "rho_beta"):
        if key in values:
            kw[key] = _number(src, "turbulence", key, values[key])
        elif base is not None:
            kw[key] = getattr(base, key)
    if "alpha1" not in kw or "beta1" not in kw:
        raise src.error("turbulence", None, "give a preset or both alpha1 and beta1")
    try:
        return TurbulenceParams(**kw)
    except DomainError as exc:
        raise src.error("turbulence", None, str(exc)) from None


def _series_points(src) -> List[Dict[str, str]]:
    if not src.parser.has_section("series"):
        return [{}]
    axes = []
    for key, raw in src.parser["series"].items():
        section, _, name = key.partition(".")
        allowed = _ALLOWED.get(section)
        if not name or allowed is None or section in ("series", "manifest", "sweep", "run") or name not in allowed:
            raise src.error("series", key, "series keys must look like 'geometry.sigma_s' or 'layout.m'")
        vals = _list(raw)
        if not vals:
            raise src.error("series", key, "empty value list")
        axes.append([(key, v) for v in vals])
    return [dict(combo) for combo in itertools.product(*axes)]


def _label(overrides: Dict[str, str]) -> str:
    if not overrides:
        return "outage"
    parts = [f"{k.split('.', 1)[1]}-{v}" for k, v in overrides.items()]
    return "outage_" + "_".join(parts)


def load_config(path, samples=None, seed=None, workers=None, mode=None, text=None) -> RunConfig:
    """Parse and validate a scenario config; CLI overrides win over the file."""
    path = str(path)
    if text is None:
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc.strerror}", path) from None
    src = _Source(text, path)
    p = src.parser
    for name in p.sections():
        if name not in _ALLOWED:
            raise src.error(name, None, "unknown section")
        allowed = _ALLOWED[name]
        if allowed is not None:
            for key in p[name]:
                if key not in allowed:
                    raise src.error(name, key, "unknown key")
    for name in ("geometry", "layout", "turbulence"):
        if not p.has_section(name):
            raise ConfigError(f"missing section [{name}]", path)

    sweep_variable, sweep_values = None, []
    if p.has_section("sweep"):
        sweep_variable = p["sweep"].get("variable", "p_gs").strip().lower()
        if sweep_variable not in SWEEP_VARIABLES:
            raise src.error("sweep", "variable", f"expected one of {SWEEP_VARIABLES}, got {sweep_variable!r}")
        sweep_values = [
            _number(src, "sweep", "values", v, nonneg=sweep_variable == "sigma_s", positive=sweep_variable != "sigma_s")
            for v in _list(p["sweep"].get("values", ""))
        ]
        if not sweep_values:
            raise src.error("sweep", "values", "sweep list is empty")

    scenarios = []
    for overrides in _series_points(src):
        sections = {name: dict(p[name]) for name in ("geometry", "layout", "turbulence")}
        for key, value in overrides.items():
            section, _, name = key.partition(".")
            sections[section][name] = value
        scenarios.append(
            Scenario(
                label=_label(overrides),
                geometry=_build_geometry(src, sections["geometry"], sweep_variable, sweep_values),
                layout=_build_layout(src, sections["layout"]),
                turbulence=_build_turbulence(src, sections["turbulence"]),
                overrides=overrides,
            )
        )

    run = p["run"] if p.has_section("run") else {}
    mode_v = (mode or run.get("mode", "all")).strip().lower()
    if mode_v not in MODES:
        raise src.error("run", "mode", f"expected one of {MODES}, got {mode_v!r}")
    samples_v = samples if samples is not None else _number(src, "run", "samples", run.get("samples", "1000000"), kind=int)
    seed_v = seed if seed is not None else _number(src, "run", "seed", run.get("seed", "0"), kind=int)
    workers_v = workers if workers is not None else _number(src, "run", "workers", run.get("workers", "1"), kind=int)
    chunk_v = _number(src, "run", "chunk_size", run.get("chunk_size", str(DEFAULT_CHUNK)), kind=int)
    if samples_v < 1:
        raise src.error("run", "samples", "must be >= 1")
    if workers_v < 1:
        raise src.error("run", "workers", "must be >= 1")
    if chunk_v < 1:
        raise src.error("run", "chunk_size", "must be >= 1")
    if not 0 <= seed_v < 2**64:
        raise src.error("run", "seed", "must be a 64-bit unsigned integer")

    baseline = None
    if p.has_section("baseline"):
        b = p["baseline"]
        fractions = [_number(src, "baseline", "p_t_fractions", v, positive=True) for v in _list(b.get("p_t_fractions", "1"))]
        if not fractions:
            raise src.error("baseline", "p_t_fractions", "empty list")
        baseline = {
            "p_t_fractions": fractions,
            "beamwidth": _number(src, "baseline", "beamwidth", b["beamwidth"], positive=True) if "beamwidth" in b else None,
            "rx_radius": _number(src, "baseline", "rx_radius", b["rx_radius"], positive=True) if "rx_radius" in b else None,
            "rx_gain": _number(src, "baseline", "rx_gain", b.get("rx_gain", "1"), positive=True),
        }

    ratios = []
    if p.has_section("moments"):
        ratios = [_number(src, "moments", "ratios", v, nonneg=True) for v in _list(p["moments"].get("ratios", ""))]
        if not ratios:
            raise src.error("moments", "ratios", "ratio list is empty")

    return RunConfig(
        path=path,
        source=src,
        scenarios=scenarios,
        sweep_variable=sweep_variable,
        sweep_values=sweep_values,
        mode=mode_v,
        samples=int(samples_v),
        seed=int(seed_v),
        workers=int(workers_v),
        chunk_size=int(chunk_v),
        baseline=baseline,
        ratios=ratios,
    )


def preset_path(name: str):
    """Location of a shipped figure preset."""
    if name not in PRESET_NAMES:
        raise ConfigError(f"unknown preset {name!r}; choose from {PRESET_NAMES}")
    return resources.files("retrofso").joinpath("presets", f"{name}.ini")


# ----------------------------------------------------------------- output ---


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def write_csv(path: Path, columns: Sequence[str], rows: Sequence[Dict[str, object]]):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_fmt(row.get(c)) for c in columns])


# ------------------------------------------------------------- execution ---


def _analytic_methods(mode):
    return {
        "analytic-exact": ["exact"],
        "analytic-approx": ["approx"],
        "montecarlo": [],
        "all": ["exact", "approx"],
    }[mode]


def _point_geometry(geom: LinkGeometry, variable, value) -> LinkGeometry:
    return replace(geom, **{variable: value}) if variable else geom


def run_scenario_rows(cfg: RunConfig, scenario: Scenario, timing: List[Dict[str, object]]):
    """Compute outage rows (and baseline rows) for one scenario."""
    var = cfg.sweep_variable
    values = cfg.sweep_values or [None]
    methods = _analytic_methods(cfg.mode)
    want_mc = cfg.mode in ("montecarlo", "all")

    # p_gs and p_th only move the threshold, so moments and samples are shared
    shared = var in ("p_gs", "p_th")
    groups = [values] if shared else [[v] for v in values]
    rows, base_rows = [], []
    for group in groups:
        t0 = time.perf_counter()
        geom0 = _point_geometry(scenario.geometry, var, group[0]) if var else scenario.geometry
        budget = derive_budget(geom0)
        thresholds = []
        for v in group:
            g = _point_geometry(scenario.geometry, var, v) if var else scenario.geometry
            thresholds.append(derive_budget(g).threshold(g.p_th))

        analytic = {}
        for method in methods:
            try:
                ms = moment_set(scenario.turbulence, scenario.layout, budget.w, geom0.sigma_s, budget.a0, mode=method)
            except (NumericalError, DomainError) as exc:
                analytic[method] = (None, None, "moment-failed", str(exc))
                continue
            try:
                fit = fit_alpha_mu(ms)
                analytic[method] = (ms, fit, "ok", "")
            except DomainError as exc:
                analytic[method] = (ms, None, "fit-infeasible", str(exc))
            except NumericalError as exc:
                analytic[method] = (ms, None, "fit-failed", str(exc))

        mc = None
        if want_mc:
            plan = SimulationPlan(
                geometry=geom0,
                layout=scenario.layout,
                turbulence=scenario.turbulence,
                samples=cfg.samples,
                seed=cfg.seed,
                workers=cfg.workers,
                chunk_size=cfg.chunk_size,
            )
            mc = simulate_outage(plan, thresholds)

        for j, v in enumerate(group):
            g = _point_geometry(scenario.geometry, var, v) if var else scenario.geometry
            c = derive_budget(g).c
            base = {
                "sweep_variable": var or "",
                "sweep_value": v,
                "threshold": thresholds[j],
            }
            if mc is not None:
                base.update(
                    empirical_outage=float(mc.outage[j]),
                    empirical_outage_se=float(mc.outage_se[j]),
                    m1_empirical=mc.moments[1],
                    m2_empirical=mc.moments[2],
                    m4_empirical=mc.moments[4],
                )
            if not methods:
                rows.append(dict(base, analytic_method="none", status="ok"))
            for method in methods:
                ms, fit, status, message = analytic[method]
                row = dict(base, analytic_method=method, status=status, message=message)
                if ms is not None:
                    row.update(m1_analytic=ms.m1, m2_analytic=ms.m2, m4_analytic=ms.m4)
                if fit is not None:
                    row.update(
                        alpha=fit.alpha,
                        mu=fit.mu,
                        r_hat=fit.r_hat,
                        analytic_outage=float(outage_probability(g.p_th, c, fit)),
                    )
                rows.append(row)

        if cfg.baseline is not None and want_mc:
            for v in group:
                g = _point_geometry(scenario.geometry, var, v) if var else scenario.geometry
                fr = cfg.baseline["p_t_fractions"]
                plan = SimulationPlan(
                    geometry=g,
                    layout=scenario.layout,
                    turbulence=scenario.turbulence,
                    samples=cfg.samples,
                    seed=cfg.seed,
                    workers=cfg.workers,
                    chunk_size=cfg.chunk_size,
                    baseline=ConventionalBaseline(
                        beamwidth=cfg.baseline["beamwidth"],
                        rx_radius=cfg.baseline["rx_radius"],
                        rx_gain=cfg.baseline["rx_gain"],
                    ),
                )
                out, se = simulate_conventional(plan, [f * g.p_gs for f in fr])
                for f, o, s in zip(fr, out, se):
                    base_rows.append(
                        {
                            "sweep_variable": var or "",
                            "sweep_value": v,
                            "p_t_fraction": f,
                            "p_t": f * g.p_gs,
                            "conventional_outage": float(o),
                            "conventional_outage_se": float(s),
                        }
                    )
        elapsed = time.perf_counter() - t0
        for v in group:
            timing.append({"file": scenario.label, "sweep_value": v, "seconds": elapsed / len(group)})
        log.info("%s: %s=%s done in %.2f s", scenario.label, var, ",".join(map(str, group)), elapsed)
    return rows, base_rows


def run_scenario(cfg: RunConfig, out_dir) -> Dict[str, List[Dict[str, object]]]:
    """Run every scenario of ``cfg`` and write one CSV per scenario.

    Also writes ``manifest.ini`` (the resolved config, re-runnable) and
    ``timing.csv`` (wall-clock per sweep point, kept apart so result files
    stay bit-identical between runs). Returns the rows keyed by file stem.
    """
    if not cfg.sweep_values:
        raise ConfigError("[sweep] section with a non-empty 'values' list is required for 'outage'", cfg.path)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    results, timing = {}, []
    for scenario in cfg.scenarios:
        rows, base_rows = run_scenario_rows(cfg, scenario, timing)
        write_csv(out / f"{scenario.label}.csv", OUTAGE_COLUMNS, rows)
        results[scenario.label] = rows
        if base_rows:
            stem = scenario.label.replace("outage", "baseline", 1)
            write_csv(out / f"{stem}.csv", BASELINE_COLUMNS, base_rows)
            results[stem] = base_rows
    (out / "manifest.ini").write_text(cfg.resolved_ini(), encoding="utf-8")
    write_csv(out / "timing.csv", ("file", "sweep_value", "seconds"), timing)
    return results


def run_moment_report(cfg: RunConfig, out_dir) -> List[Dict[str, object]]:
    """Exact vs. second- and first-order Taylor moments of ``S`` over ``sigma_s / w``."""
    if not cfg.ratios:
        raise ConfigError("[moments] section with a non-empty 'ratios' list is required for 'moments'", cfg.path)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows, timing = [], []
    for scenario in cfg.scenarios:
        budget = derive_budget(scenario.geometry)
        for ratio in cfg.ratios:
            t0 = time.perf_counter()
            sigma = ratio * budget.w
            sets = {
                mode: moment_set(scenario.turbulence, scenario.layout, budget.w, sigma, budget.a0, mode=mode)
                for mode in ("exact", "approx", "approx1")
            }
            for k in (1, 2, 4):
                exact, approx, first = (getattr(sets[m], f"m{k}") for m in ("exact", "approx", "approx1"))
                rows.append(
                    {
                        "sigma_ratio": ratio,
                        "sigma_s": sigma,
                        "order": k,
                        "exact": exact,
                        "approx": approx,
                        "approx_first_order": first,
                        "rel_error": abs(approx - exact) / exact,
                        "rel_error_first_order": abs(first - exact) / exact,
                    }
                )
            timing.append({"file": "moments", "sweep_value": ratio, "seconds": time.perf_counter() - t0})
            log.info("moments: sigma_s/w=%s done", ratio)
    write_csv(out / "moments.csv", MOMENT_COLUMNS, rows)
    (out / "manifest.ini").write_text(cfg.resolved_ini(), encoding="utf-8")
    write_csv(out / "timing.csv", ("file", "sweep_value", "seconds"), timing)
    return rows


# -------------------------------------------------------------------- cli ---


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="retrofso",
        description="Outage analysis of retroreflector-based FSO fine tracking.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="verb", required=True)
    for verb, help_text in (
        ("outage", "analytic and/or Monte Carlo outage over a sweep"),
        ("moments", "exact vs. approximate moments of S over sigma_s/w"),
        ("validate", "check a config and exit"),
    ):
        p = sub.add_parser(verb, help=help_text)
        src = p.add_mutually_exclusive_group(required=True)
        src.add_argument("--config", type=Path, help="scenario INI file")
        src.add_argument("--preset", choices=PRESET_NAMES, help="shipped figure preset")
        if verb != "validate":
            p.add_argument("--out", type=Path, required=True, help="output directory")
        p.add_argument("--samples", type=int, help="Monte Carlo sample count (overrides config)")
        p.add_argument("--seed", type=int, help="random seed (overrides config)")
        p.add_argument("--workers", type=int, help="worker processes (overrides config)")
        p.add_argument("--mode", choices=MODES, help="which pipelines to run (overrides config)")
        p.add_argument("-v", "--verbose", action="store_true", help="log one line per sweep point")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        if args.preset:
            ref = preset_path(args.preset)
            path, text = f"preset:{args.preset}", ref.read_text(encoding="utf-8")
        else:
            path, text = str(args.config), None
        cfg = load_config(
            path, samples=args.samples, seed=args.seed, workers=args.workers, mode=args.mode, text=text
        )
        if args.verb == "validate":
            if not (cfg.sweep_values or cfg.ratios):
                raise ConfigError("config has neither a [sweep] nor a [moments] section", cfg.path)
            print(f"{cfg.path}: ok ({len(cfg.scenarios)} scenario(s))")
            return EXIT_OK
        if args.verb == "moments":
            run_moment_report(cfg, args.out)
            return EXIT_OK
        results = run_scenario(cfg, args.out)
    except ConfigurationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    failed = [
        (name, row["sweep_value"])
        for name, rows in results.items()
        for row in rows
        if row.get("status", "ok") != "ok"
    ]
    if failed:
        print(f"warning: {len(failed)} row(s) could not be computed; see the 'status' column", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
