"""Run configuration: flat-section key-value text files.

Sections: [run], [layers], [physics], [initial], [case.<name>],
[boundary.<tag>], [gauges], [output], [source]. Values are numbers,
comma-separated vectors, `x:y` pairs separated by `;` for points, and
`t:v; t:v` series for time-dependent boundary data.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .analytic import StationaryChannel, ThackerBowl, DrainingTank
from .boundary import BoundaryData
from .layers import LayerConfig
from .viscous import RheologyParams
from .integrator import StepControl


class ConfigError(ValueError):
    """Configuration file problem, with section/key context."""


def _floats(s: str) -> np.ndarray:
    return np.array([float(v) for v in s.replace(",", " ").split()])


def _series(s: str):
    """Parse 't:v; t:v' into an (k, 2) array, or a scalar/vector."""
    if ":" in s:
        pairs = [p for p in s.split(";") if p.strip()]
        arr = np.array([[float(a), float(b)] for a, b in (p.split(":") for p in pairs)])
        return arr
    vals = _floats(s)
    return float(vals[0]) if vals.size == 1 else vals


def _points(s: str) -> np.ndarray:
    pts = [p for p in s.split(";") if p.strip()]
    return np.array([[float(a), float(b)] for a, b in (p.split(":") for p in pts)])


_CASE_TYPES = {"channel": StationaryChannel, "thacker": ThackerBowl, "draining": DrainingTank}

_CASE_KEYMAP = {"gamma": "gam", "t_0": "t0", "t_1": "t1"}


def build_case(kind: str, params: dict):
    if kind not in _CASE_TYPES:
        raise ConfigError(f"unknown analytic case type '{kind}'")
    kwargs = {}
    for k, v in params.items():
        if k == "type":
            continue
        kwargs[_CASE_KEYMAP.get(k, k)] = float(v)
    try:
        return _CASE_TYPES[kind](**kwargs)
    except TypeError as e:
        raise ConfigError(f"case '{kind}': {e}")


@dataclass
class SourceSpec:
    """Instantaneous bed-displacement source (synthetic tsunami runs)."""

    amplitude: float
    x0: float
    y0: float
    sigma: float
    t_trigger: float = 0.0

    def displacement(self, x, y):
        r2 = (x - self.x0) ** 2 + (y - self.y0) ** 2
        return self.amplitude * np.exp(-r2 / self.sigma ** 2)


@dataclass
class RunConfig:
    mesh_path: str
    layers: LayerConfig
    g: float
    h_dry: float
    control: StepControl
    rheology: RheologyParams
    boundaries: dict
    initial: dict
    cases: dict
    gauges: np.ndarray
    gauge_stride: int
    epochs: list
    outdir: str
    figures: bool
    source: SourceSpec | None
    steady_tol: float = 0.0
    steady_min_t: float = 0.0

    def primary_case(self):
        init = self.initial
        if init.get("kind") == "case":
            return self.cases[init["case"]]
        if len(self.cases) == 1:
            return next(iter(self.cases.values()))
        return None


def load_config(path) -> RunConfig:
    cp = configparser.ConfigParser(inline_comment_prefixes=("#",))
    cp.optionxform = str
    read = cp.read(path)
    if not read:
        raise ConfigError(f"cannot read config file {path}")
    base = Path(path).parent

    def get(section, key, default=None, cast=float):
        if cp.has_option(section, key):
            v = cp.get(section, key)
            return cast(v) if cast is not None else v
        if default is None:
            raise ConfigError(f"[{section}] {key} is required")
        return default

    run = "run"
    mesh_path = str(base / get(run, "mesh", cast=None))
    g = get(run, "g", 9.81)
    h_dry = get(run, "h_dry", 1e-8)
    control = StepControl(
        beta=get(run, "beta", 0.45),
        dt_max=get(run, "dt_max", np.inf),
        t_end=get(run, "t_end"),
        order=int(get(run, "order", 1)),
    )

    if cp.has_option("layers", "fractions"):
        layers = LayerConfig(_floats(cp.get("layers", "fractions")))
    else:
        layers = LayerConfig.uniform(int(get("layers", "count", 1)))

    rp = RheologyParams(
        nu=get("physics", "nu", 0.0) if cp.has_section("physics") else 0.0,
        kappa=get("physics", "kappa", 0.0) if cp.has_section("physics") else 0.0,
        wind=get("physics", "wind", 0.0) if cp.has_section("physics") else 0.0,
        t_s=tuple(_floats(cp.get("physics", "wind_dir"))) if cp.has_option("physics", "wind_dir") else (1.0, 0.0),
    )

    cases = {}
    for section in cp.sections():
        if section.startswith("case."):
            name = section.split(".", 1)[1]
            params = dict(cp.items(section))
            cases[name] = build_case(params.get("type", name), params)

    if not cp.has_section("initial"):
        raise ConfigError("[initial] section is required")
    initial = dict(cp.items("initial"))
    initial["kind"] = initial.get("kind", "still")
    if initial["kind"] == "case" and initial.get("case") not in cases:
        raise ConfigError(f"[initial] case '{initial.get('case')}' is not defined")
    if initial["kind"] == "file":
        initial["path"] = str(base / initial["path"])

    boundaries = {}
    for section in cp.sections():
        if not section.startswith("boundary."):
            continue
        tag = section.split(".", 1)[1]
        items = dict(cp.items(section))
        kind = items.get("kind")
        if kind is None:
            raise ConfigError(f"[{section}] kind is required")
        data = BoundaryData(
            kind=kind,
            h=_series(items["h"]) if "h" in items else None,
            q=_series(items["q"]) if "q" in items else None,
            profile=items.get("profile", "uniform"),
        )
        if kind == "analytic":
            cname = items.get("case")
            if cname not in cases:
                raise ConfigError(f"[{section}] analytic boundary needs a defined case, got '{cname}'")
            data.case = cases[cname]
        boundaries[tag] = data

    gauges = np.zeros((0, 2))
    stride = 1
    if cp.has_section("gauges"):
        if cp.has_option("gauges", "points"):
            gauges = _points(cp.get("gauges", "points"))
        stride = int(get("gauges", "stride", 1))

    epochs = []
    outdir = "out"
    figures = True
    if cp.has_section("output"):
        if cp.has_option("output", "epochs"):
            epochs = sorted(float(v) for v in _floats(cp.get("output", "epochs")))
        outdir = get("output", "dir", "out", cast=None)
        figures = get("output", "figures", "true", cast=None).lower() in ("1", "true", "yes")

    source = None
    if cp.has_section("source"):
        source = SourceSpec(
            amplitude=get("source", "amplitude"),
            x0=get("source", "x0", 0.0),
            y0=get("source", "y0", 0.0),
            sigma=get("source", "sigma"),
            t_trigger=get("source", "t_trigger", 0.0),
        )

    return RunConfig(
        mesh_path=mesh_path,
        layers=layers,
        g=g,
        h_dry=h_dry,
        control=control,
        rheology=rp,
        boundaries=boundaries,
        initial=initial,
        cases=cases,
        gauges=gauges,
        gauge_stride=stride,
        epochs=epochs,
        outdir=str(base / outdir),
        figures=figures,
        source=source,
        steady_tol=get(run, "steady_tol", 0.0),
        steady_min_t=get(run, "steady_min_t", 0.0),
    )
