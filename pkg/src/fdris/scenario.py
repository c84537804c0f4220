"""
Scenario files and built-in presets.

A scenario is a JSON document.  Angles are degrees, distances metres,
powers dBm and frequencies Hz; :func:`load_scenario` converts everything
to radians and watts.  Missing fields take the values in ``DEFAULTS``, so a
minimal file only needs ``willies``::

    {
      "name": "two-wardens",
      "ris": {"l_y": 6, "l_z": 6},
      "willies": [{"theta_deg": 115, "phi_deg": 30, "dist_m": 45},
                  {"theta_deg": 110, "phi_deg": 25, "dist_m": 20}],
      "covert": {"xi": 0.2}
    }

See ``SCHEMA`` for the full list of fields.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path

import jsonschema
import numpy as np

from .covert import CovertConfig, dbm_to_watt
from .geometry import RisGeometry, SphericalPosition

__all__ = ["Scenario", "SCHEMA", "PRESETS", "ScenarioError", "load_scenario", "scenario_from_dict",
           "preset", "resolve_scenario"]

_POSITION = {
    "type": "object",
    "properties": {
        "theta_deg": {"type": "number"},
        "phi_deg": {"type": "number"},
        "dist_m": {"type": "number", "exclusiveMinimum": 0},
    },
    "required": ["theta_deg", "phi_deg", "dist_m"],
    "additionalProperties": False,
}

SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "FD-RIS covert scenario",
    "type": "object",
    "properties": {
        "name": {"type": "string"},
        "ris": {
            "type": "object",
            "properties": {
                "l_y": {"type": "integer", "minimum": 1},
                "l_z": {"type": "integer", "minimum": 1},
                "f_c_hz": {"type": "number", "exclusiveMinimum": 0},
                "spacing_m": {"type": "number", "exclusiveMinimum": 0},
                "g": {"type": "integer", "minimum": 1},
                "a0": {"type": "number", "exclusiveMinimum": 0},
                "phi0_deg": {"type": "number"},
            },
            "additionalProperties": False,
        },
        "alice": _POSITION,
        "bob": _POSITION,
        "willies": {"type": "array", "items": _POSITION, "minItems": 1},
        "covert": {
            "type": "object",
            "properties": {
                "varsigma": {"type": "number", "exclusiveMinimum": 1},
                "xi": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
                "psi": {"type": "number", "minimum": 0},
                "sigma2_w_dbm": {"oneOf": [{"type": "number"},
                                           {"type": "array", "items": {"type": "number"}, "minItems": 1}]},
                "sigma2_b_dbm": {"type": "number"},
                "p_t_dbm": {"type": "number"},
            },
            "additionalProperties": False,
        },
        "rician_beta_db": {"type": "number"},
        "f_bounds_hz": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0},
                        "minItems": 2, "maxItems": 2},
        "n_mc": {"type": "integer", "minimum": 1},
        "seed": {"type": "integer", "minimum": 0},
    },
    "required": ["willies"],
    "additionalProperties": False,
}

DEFAULTS = {
    "name": "custom",
    "ris": {"l_y": 6, "l_z": 6, "f_c_hz": 28e9, "g": 1, "a0": 1.0, "phi0_deg": 0.0},
    "alice": {"theta_deg": 70.0, "phi_deg": 10.0, "dist_m": 70.0},
    "bob": {"theta_deg": 120.0, "phi_deg": 30.0, "dist_m": 20.0},
    "covert": {"varsigma": 2.0, "xi": 0.2, "psi": 100.0, "sigma2_w_dbm": -110.0,
               "sigma2_b_dbm": -110.0, "p_t_dbm": 15.0},
    "rician_beta_db": 15.0,
    "f_bounds_hz": [10e6, 30e6],
    "n_mc": 20,
    "seed": 0,
}


class ScenarioError(ValueError):
    """Invalid scenario file or dictionary."""


@dataclass(frozen=True)
class Scenario:
    name: str
    geom: RisGeometry
    alice: SphericalPosition
    bob: SphericalPosition
    willies: tuple
    cfg: CovertConfig
    rician_beta_db: float
    f_bounds: tuple
    n_mc: int
    seed: int

    def __post_init__(self):
        if len(self.willies) < 1:
            raise ScenarioError("at least one warden is required")
        if not self.f_bounds[0] < self.f_bounds[1]:
            raise ScenarioError("f_bounds must satisfy min < max")
        if self.n_mc < 1:
            raise ScenarioError("n_mc must be >= 1")
        if self.cfg.n_wardens not in (1, len(self.willies)):
            raise ScenarioError("sigma2_w must be a scalar or have one entry per warden")

    @property
    def rician_beta(self):
        return 10.0 ** (self.rician_beta_db / 10.0)

    def with_elements(self, n):
        """Square panel with ``n`` elements (``n`` must be a perfect square)."""
        side = int(round(np.sqrt(n)))
        if side * side != n:
            raise ScenarioError(f"L={n} is not a perfect square")
        return replace(self, geom=replace(self.geom, l_y=side, l_z=side, spacing=self.geom.spacing))

    def with_xi(self, xi):
        return replace(self, cfg=self.cfg.replace(xi=xi))

    def with_dfmax(self, dfmax):
        return replace(self, f_bounds=(self.f_bounds[0], float(dfmax)))

    def with_mc(self, n_mc=None, seed=None):
        return replace(self, n_mc=self.n_mc if n_mc is None else n_mc,
                       seed=self.seed if seed is None else seed)


def _merge(base, over):
    out = dict(base)
    for key, val in over.items():
        if isinstance(val, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], val)
        else:
            out[key] = val
    return out


def _pos(d):
    return SphericalPosition.from_degrees(d["theta_deg"], d["phi_deg"], d["dist_m"])


def _describe(err: jsonschema.ValidationError):
    path = "/".join(str(p) for p in err.absolute_path) or "<root>"
    return f"field {path}: {err.message}"


def scenario_from_dict(data: dict) -> Scenario:
    """Validate ``data`` against :data:`SCHEMA` and build a :class:`Scenario`."""
    validator = jsonschema.Draft202012Validator(SCHEMA)
    errors = sorted(validator.iter_errors(data), key=lambda e: list(e.absolute_path))
    if errors:
        raise ScenarioError("; ".join(_describe(e) for e in errors))
    d = _merge(DEFAULTS, data)
    ris = d["ris"]
    geom = RisGeometry(l_y=ris["l_y"], l_z=ris["l_z"], f_c=float(ris["f_c_hz"]),
                       spacing=ris.get("spacing_m"), g=ris["g"], a0=float(ris["a0"]),
                       phi0=float(np.deg2rad(ris["phi0_deg"])))
    cv = d["covert"]
    cfg = CovertConfig(varsigma=float(cv["varsigma"]), xi=float(cv["xi"]), psi=float(cv["psi"]),
                       sigma2_w=tuple(np.atleast_1d(dbm_to_watt(cv["sigma2_w_dbm"])).tolist()),
                       sigma2_b=float(dbm_to_watt(cv["sigma2_b_dbm"])),
                       p_t=float(dbm_to_watt(cv["p_t_dbm"])))
    try:
        return Scenario(name=d["name"], geom=geom, alice=_pos(d["alice"]), bob=_pos(d["bob"]),
                        willies=tuple(_pos(w) for w in d["willies"]), cfg=cfg,
                        rician_beta_db=float(d["rician_beta_db"]),
                        f_bounds=(float(d["f_bounds_hz"][0]), float(d["f_bounds_hz"][1])),
                        n_mc=int(d["n_mc"]), seed=int(d["seed"]))
    except ValueError as exc:
        raise ScenarioError(str(exc)) from exc


def load_scenario(path) -> Scenario:
    """Read a scenario JSON file; errors name the offending line or field."""
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    try:
        return scenario_from_dict(data)
    except ScenarioError as exc:
        raise ScenarioError(f"{path}: {exc}") from exc


def _wardens(thetas, phis, dists):
    return [{"theta_deg": t, "phi_deg": p, "dist_m": d} for t, p, d in zip(thetas, phis, dists)]


PRESETS = {
    "case1": {"name": "case1", "willies": _wardens((85, 90, 100, 145), (50, 15, 45, 60), (45, 20, 55, 30))},
    "case2": {"name": "case2", "willies": _wardens((115, 110, 110, 125), (30, 25, 35, 40), (45, 20, 55, 30))},
    "case3": {"name": "case3", "willies": _wardens((120, 110, 110, 125), (30, 25, 35, 40), (15, 20, 55, 30))},
    # beampattern comparison geometry; the case1 wardens only satisfy K >= 1
    "fig2": {
        "name": "fig2",
        "ris": {"l_y": 10, "l_z": 10},
        "alice": {"theta_deg": 30, "phi_deg": 70, "dist_m": 100},
        "bob": {"theta_deg": 50, "phi_deg": 40, "dist_m": 40},
        "willies": _wardens((85, 90, 100, 145), (50, 15, 45, 60), (45, 20, 55, 30)),
        "f_bounds_hz": [10e6, 40e6],
    },
}


def preset(name: str) -> Scenario:
    try:
        return scenario_from_dict(PRESETS[name])
    except KeyError:
        raise ScenarioError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None


def resolve_scenario(spec: str) -> Scenario:
    """Preset name or path to a JSON file."""
    if spec in PRESETS:
        return preset(spec)
    return load_scenario(spec)
