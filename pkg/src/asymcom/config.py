# config.py
"""
JSON job files.

Complex numbers are written as [re, im] or plain reals. A `preset` key
("abel", "tan", "linear") supplies the ODE and defaults; keys in the file
override it, the `tolerances` block key by key.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional, Union

from .abel import ABEL_COEFFS, DEMO_PATH, DEMO_Y0, TOUR_PATH, TOUR_Y0, SING_X0, SING_Y0, closed_anchors
from .algebra import Contour
from .errors import ConfigError
from .model import MAX_ORDER, OdeSpec


@dataclass(frozen=True)
class Tolerances:
    rtol: float = 1e-10
    atol: float = 1e-12
    newton_tol: float = 1e-10
    eps_near: float = 0.05
    overlap: float = 0.1
    r0: float = 10.0
    blowup: float = 1e6
    k_tol: float = 0.02


@dataclass(frozen=True)
class PhaseSpec:
    angles: tuple[float, ...] = (-math.pi / 4, 5 * math.pi / 4)
    re: tuple[float, float, int] = (-0.6, 0.6, 25)
    im: tuple[float, float, int] = (-0.6, 0.6, 25)

    def grid(self) -> tuple[list[float], list[float]]:
        def axis(spec):
            lo, hi, num = spec
            return [lo + (hi - lo) * i / (num - 1) for i in range(num)] if num > 1 else [lo]
        return axis(self.re), axis(self.im)


@dataclass(frozen=True)
class JobConfig:
    ode: OdeSpec
    preset: Optional[str] = None
    contour: Optional[Contour] = None
    base_y: complex = 1 + 0j
    anchors: tuple[complex, ...] = ()
    close_top: bool = False
    y_grid: tuple[complex, ...] = ()
    x_path: tuple[complex, ...] = ()
    y0: complex = 0j
    K: Optional[complex] = None
    x_min: float = 0.0
    rk_samples: int = 50
    x0: complex = 0j
    sing_y0: complex = 0j
    direction: complex = 1 + 0j
    shifts: tuple[tuple[int, ...], ...] = ()
    verify: bool = True
    detour: complex = 0j
    workers: Optional[int] = None
    phase: PhaseSpec = field(default_factory=PhaseSpec)
    tolerances: Tolerances = field(default_factory=Tolerances)
    source: str = ""

    @property
    def n(self) -> int:
        return self.ode.n


# ---------------------------------------------------------------------------
# Presets
# ---------------------------------------------------------------------------

def _pair(z: complex) -> list[float]:
    return [z.real, z.imag]


PRESETS: dict[str, dict[str, Any]] = {
    "abel": {
        "ode": {"coeffs": [list(c) for c in ABEL_COEFFS], "n": 2},
        "contour": {"winding": [1, 0, 0]},
        "base_y": DEMO_Y0,
        "anchors": "closed",
        "y_grid": [[0.6, 0.2], [1.0, 0.2], [1.5, -0.2], [2.0, 0.6], [3.0, -0.6]],
        "x_path": [_pair(complex(z)) for z in DEMO_PATH],
        "y0": DEMO_Y0,
        "rk_samples": 400,
        "x0": _pair(SING_X0),
        "sing_y0": _pair(SING_Y0),
        "shifts": [[0, 0, 0]],
        "regions": {"x_path": [_pair(complex(z)) for z in TOUR_PATH], "y0": TOUR_Y0},
    },
    "tan": {
        "ode": {"coeffs": [[1, 0, 1]], "n": 1},
        "contour": {"winding": [1, 0]},
        "base_y": 1.0,
        "y_grid": [0.5, 1.0, 2.0],
        "x0": 1.0,
        "sing_y0": 0.0,
        "shifts": [[0, 0], [0, 1]],
        "detour": [0.0, 1.0],
    },
    "linear": {
        "ode": {"coeffs": [[0, -1]], "n": 1},
        "contour": {"winding": [1]},
        "base_y": 1.0,
        "y_grid": [0.5, 1.0, 2.0],
        "x_path": [1.0, 10.0],
        "y0": math.exp(-1.0),
        "K": 0.0,
    },
}


# ---------------------------------------------------------------------------
# Parsing helpers
# ---------------------------------------------------------------------------

def _invalid(key: str, message: str, value: Any = None) -> ConfigError:
    details = {"key": key}
    if value is not None:
        details["value"] = value
    return ConfigError("InvalidConfig", message, details)


def parse_complex(value: Any, key: str) -> complex:
    if isinstance(value, bool):
        raise _invalid(key, "expected a number or [re, im]", value)
    if isinstance(value, (int, float)):
        return complex(value)
    if isinstance(value, (list, tuple)) and len(value) == 2 and all(
            isinstance(v, (int, float)) and not isinstance(v, bool) for v in value):
        return complex(value[0], value[1])
    raise _invalid(key, "expected a number or [re, im]", value)


def _complex_list(value: Any, key: str) -> tuple[complex, ...]:
    if not isinstance(value, list):
        raise _invalid(key, "expected a list", value)
    return tuple(parse_complex(v, f"{key}[{i}]") for i, v in enumerate(value))


def _number(value: Any, key: str, *, positive: bool = False) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise _invalid(key, "expected a real number", value)
    if positive and not value > 0:
        raise _invalid(key, "must be positive", value)
    return float(value)


def _int(value: Any, key: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise _invalid(key, "expected an integer", value)
    return value


def _parse_ode(raw: Any) -> OdeSpec:
    if not isinstance(raw, dict) or "coeffs" not in raw:
        raise _invalid("ode", "expected {\"coeffs\": [[...], ...], \"n\": int}")
    coeffs = raw["coeffs"]
    if not isinstance(coeffs, list) or not coeffs:
        raise _invalid("ode.coeffs", "expected a non-empty list of coefficient lists", coeffs)
    polys = [_complex_list(c, f"ode.coeffs[{k}]") for k, c in enumerate(coeffs)]
    n = _int(raw.get("n", 2), "ode.n")
    if not 1 <= n <= MAX_ORDER:
        raise _invalid("ode.n", f"truncation order must lie in 1..{MAX_ORDER}", n)
    return OdeSpec.from_coeffs(polys, n)


def _parse_contour(raw: Any) -> Optional[Contour]:
    if raw is None:
        return None
    if not isinstance(raw, dict) or "winding" not in raw:
        raise _invalid("contour", "expected {\"winding\": [...], \"radii\": [...]}")
    winding = tuple(_int(w, f"contour.winding[{i}]") for i, w in enumerate(raw["winding"]))
    radii = tuple(_number(r, f"contour.radii[{i}]", positive=True) for i, r in enumerate(raw.get("radii", ())))
    orientation = _int(raw.get("orientation", 1), "contour.orientation")
    if orientation not in (1, -1):
        raise _invalid("contour.orientation", "must be +1 or -1", orientation)
    if not any(winding):
        raise _invalid("contour.winding", "winding vector is all zero", list(winding))
    return Contour(winding, radii, orientation)


def _parse_tolerances(raw: Any) -> Tolerances:
    if not isinstance(raw, dict):
        raise _invalid("tolerances", "expected an object", raw)
    known = Tolerances.__dataclass_fields__
    for k in raw:
        if k not in known:
            raise _invalid(f"tolerances.{k}", "unknown tolerance")
    vals = {}
    for k, v in raw.items():
        vals[k] = _number(v, f"tolerances.{k}", positive=True)
    return Tolerances(**vals)


def _parse_phase(raw: Any) -> PhaseSpec:
    if not isinstance(raw, dict):
        raise _invalid("phase", "expected an object", raw)
    out = {}
    if "angles" in raw:
        out["angles"] = tuple(_number(t, f"phase.angles[{i}]") for i, t in enumerate(raw["angles"]))
    for axis in ("re", "im"):
        if axis in raw:
            spec = raw[axis]
            if not isinstance(spec, list) or len(spec) != 3:
                raise _invalid(f"phase.{axis}", "expected [lo, hi, num]", spec)
            out[axis] = (_number(spec[0], f"phase.{axis}[0]"), _number(spec[1], f"phase.{axis}[1]"),
                         _int(spec[2], f"phase.{axis}[2]"))
    return PhaseSpec(**out)


def _merge(base: dict, override: dict) -> dict:
    out = dict(base)
    for k, v in override.items():
        if k in ("tolerances", "phase", "regions") and isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = {**out[k], **v}
        else:
            out[k] = v
    return out


_TOP_KEYS = {
    "preset", "ode", "contour", "base_y", "anchors", "close_top", "y_grid", "x_path", "y0", "K",
    "x_min", "rk_samples", "x0", "sing_y0", "direction", "shifts", "verify", "detour", "workers",
    "phase", "tolerances", "regions",
}


# ---------------------------------------------------------------------------
# Loading
# ---------------------------------------------------------------------------

def config_from_dict(raw: dict, source: str = "<dict>", section: Optional[str] = None) -> JobConfig:
    """
    Build a JobConfig from a parsed job file. `section` lifts a nested block
    (e.g. "regions") over the top level before parsing.
    """
    if not isinstance(raw, dict):
        raise _invalid("<root>", "job file must hold a JSON object")
    for k in raw:
        if k not in _TOP_KEYS:
            raise _invalid(k, "unknown key")

    preset = raw.get("preset")
    if preset is not None:
        if preset not in PRESETS:
            raise _invalid("preset", f"unknown preset (choose from {', '.join(sorted(PRESETS))})", preset)
        raw = _merge(PRESETS[preset], raw)
    if section and isinstance(raw.get(section), dict):
        raw = _merge(raw, raw[section])
    if "ode" not in raw:
        raise _invalid("ode", "missing ODE (give \"ode\" or a \"preset\")")

    ode = _parse_ode(raw["ode"])
    base_y = parse_complex(raw.get("base_y", 1.0), "base_y")
    anchors_raw = raw.get("anchors", [])
    if anchors_raw == "closed":
        if preset != "abel":
            raise _invalid("anchors", "closed-form anchors exist only for the abel preset")
        anchors = closed_anchors(base_y, ode.n)
    else:
        anchors = _complex_list(anchors_raw, "anchors")

    shifts_raw = raw.get("shifts", [])
    if not isinstance(shifts_raw, list):
        raise _invalid("shifts", "expected a list of integer vectors", shifts_raw)
    shifts = tuple(
        tuple(_int(m, f"shifts[{i}][{j}]") for j, m in enumerate(s)) for i, s in enumerate(shifts_raw)
    )

    K = raw.get("K")
    workers = raw.get("workers")
    return JobConfig(
        ode=ode,
        preset=preset,
        contour=_parse_contour(raw.get("contour")),
        base_y=base_y,
        anchors=anchors,
        close_top=bool(raw.get("close_top", False)),
        y_grid=_complex_list(raw.get("y_grid", []), "y_grid"),
        x_path=_complex_list(raw.get("x_path", []), "x_path"),
        y0=parse_complex(raw.get("y0", 0.0), "y0"),
        K=None if K is None else parse_complex(K, "K"),
        x_min=_number(raw.get("x_min", 0.0), "x_min"),
        rk_samples=_int(raw.get("rk_samples", 50), "rk_samples"),
        x0=parse_complex(raw.get("x0", 0.0), "x0"),
        sing_y0=parse_complex(raw.get("sing_y0", 0.0), "sing_y0"),
        direction=parse_complex(raw.get("direction", 1.0), "direction"),
        shifts=shifts,
        verify=bool(raw.get("verify", True)),
        detour=parse_complex(raw.get("detour", 0.0), "detour"),
        workers=None if workers is None else _int(workers, "workers"),
        phase=_parse_phase(raw.get("phase", {})),
        tolerances=_parse_tolerances(raw.get("tolerances", {})),
        source=source,
    )


def load_config(path: Union[str, Path], section: Optional[str] = None) -> JobConfig:
    p = Path(path)
    if not p.exists():
        raise ConfigError("ConfigNotFound", f"job file not found: {p}", {"path": str(p)})
    try:
        raw = json.loads(p.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ConfigError("InvalidConfig", f"invalid JSON: {e.msg}",
                          {"path": str(p), "line": e.lineno, "column": e.colno}) from e
    return config_from_dict(raw, str(p), section)


def require(cfg: JobConfig, key: str, ok: bool) -> None:
    if not ok:
        raise ConfigError("InvalidConfig", f"this command needs `{key}`", {"key": key, "source": cfg.source})
