# report.py
"""Byte-stable JSON results and CSV tables with a committed column order."""
from __future__ import annotations

import csv
import json
import math
from dataclasses import fields, is_dataclass
from functools import lru_cache
from importlib.resources import files
from pathlib import Path
from typing import Any, Iterable, Mapping, Optional

import numpy as np

from .errors import ConfigError
from .model import ConstantSeries, Equilibrium, SingularityReport


# ---------------------------------------------------------------------------
# JSON
# ---------------------------------------------------------------------------

def to_jsonable(obj: Any) -> Any:
    """complex -> [re, im]; tuples, arrays and dataclasses to plain containers."""
    if isinstance(obj, (bool, str)) or obj is None:
        return obj
    if isinstance(obj, (complex, np.complexfloating)):
        return [float(obj.real), float(obj.imag)]
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    if isinstance(obj, np.ndarray):
        return [to_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, Mapping):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if is_dataclass(obj):
        return {f.name: to_jsonable(getattr(obj, f.name)) for f in fields(obj)}
    return str(obj)


def _json_dumps_stable(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, ensure_ascii=False)


def write_json(path: Path, obj: Any) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(_json_dumps_stable(to_jsonable(obj)) + "\n", encoding="utf-8")
    return path


def series_summary(series: ConstantSeries) -> dict:
    out = {
        "kind": series.kind,
        "n": series.n,
        "a": series.a,
        "c": list(series.c),
        "base_y": series.base_y,
        "base_F": list(series.base_F),
        "roots": list(series.ode.roots.roots),
    }
    if series.contour is not None:
        out["contour"] = {"winding": list(series.contour.winding), "orientation": series.contour.orientation}
    return out


def singularity_dict(r: SingularityReport) -> dict:
    return {
        "x_sing": r.x_sing,
        "branch_shift": list(r.branch_shift),
        "order_used": r.order_used,
        "x0": r.x0,
        "y0": r.y0,
        "status": r.status,
        "verified": r.verified,
        "x_found": r.x_found,
        "digits": r.digits,
        "note": r.note,
    }


def equilibrium_dict(e: Equilibrium) -> dict:
    return {"index": e.index, "root": e.root, "eigenvalue": e.eigenvalue, "stability": e.stability}


# ---------------------------------------------------------------------------
# CSV
# ---------------------------------------------------------------------------

@lru_cache(maxsize=1)
def load_schema() -> dict:
    return json.loads(files("asymcom").joinpath("csv_schema.json").read_text(encoding="utf-8"))


def columns(table: str, order: Optional[int] = None) -> list[str]:
    schema = load_schema()
    if table not in schema:
        raise ConfigError("InvalidConfig", f"unknown table {table!r}", {"tables": sorted(schema)})
    spec = schema[table]
    cols = list(spec["columns"])
    if "per_order" in spec:
        if order is None:
            raise ConfigError("InvalidConfig", f"table {table!r} needs the truncation order", {})
        for k in range(order + 1):
            cols.extend(c.format(k=k) for c in spec["per_order"])
    return cols


def cx(prefix: str, z: Optional[complex]) -> dict[str, Any]:
    if z is None:
        return {f"{prefix}_re": None, f"{prefix}_im": None}
    z = complex(z)
    return {f"{prefix}_re": z.real, f"{prefix}_im": z.imag}


def _cell(v: Any) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def write_csv(path: Path, table: str, rows: Iterable[Mapping[str, Any]], order: Optional[int] = None) -> Path:
    """UTF-8, header row, '.' decimals; rows are keyed by the schema's column names."""
    cols = columns(table, order)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for row in rows:
            extra = set(row) - set(cols)
            if extra:
                raise ConfigError("InvalidConfig", f"columns not in the {table} schema",
                                  {"columns": sorted(extra)})
            w.writerow([_cell(row.get(c)) for c in cols])
    return path
