"""Reading and writing designs, provenance sidecars and reports.

CSV designs hold one point per row with 17 significant digits, enough for an
exact binary64 round trip. Provenance for a CSV file ``d.csv`` lives next to
it in ``d.provenance.json``; JSON designs embed it.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from rspd.design import Design, Provenance, as_points
from rspd.errors import DesignParseError

FLOAT_FMT = "%.17g"


def sidecar_path(path) -> Path:
    path = Path(path)
    return path.with_name(path.stem + ".provenance.json")


def _fmt(v: float) -> str:
    return FLOAT_FMT % v


def _is_number(cell: str) -> bool:
    try:
        float(cell)
    except ValueError:
        return False
    return True


def _infer_format(path, fmt):
    if fmt is not None:
        if fmt not in ("csv", "json"):
            raise ValueError(f"unknown design format {fmt!r}")
        return fmt
    return "json" if Path(path).suffix.lower() == ".json" else "csv"


def _check_values(X, allow_out_of_range, rows=None):
    bad = ~np.isfinite(X)
    if not allow_out_of_range:
        bad |= (X < 0.0) | (X > 1.0)
    if np.any(bad):
        i, j = map(int, np.argwhere(bad)[0])
        line = rows[i] if rows is not None else None
        raise DesignParseError(
            f"value {X[i, j]!r} is not finite" if not np.isfinite(X[i, j])
            else f"value {X[i, j]!r} is outside [0, 1]",
            line=line, column=j + 1,
        )


def _read_csv(path, allow_out_of_range):
    rows, lines = [], []
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            cells = [c.strip() for c in row]
            if not cells or all(c == "" for c in cells):
                continue
            if not rows and not lines and not all(_is_number(c) for c in cells):
                lines.append(None)  # header row
                continue
            for j, c in enumerate(cells, start=1):
                if not _is_number(c):
                    raise DesignParseError(f"cell {c!r} is not a number", line=lineno, column=j)
            if rows and len(cells) != len(rows[0]):
                raise DesignParseError(
                    f"row has {len(cells)} columns, expected {len(rows[0])}", line=lineno
                )
            rows.append([float(c) for c in cells])
            lines.append(lineno)
    if not rows:
        raise DesignParseError("file contains no data rows")
    X = np.array(rows, dtype=float)
    _check_values(X, allow_out_of_range, [ln for ln in lines if ln is not None])
    return X


def read_design(path, fmt: str | None = None, allow_out_of_range: bool = False) -> Design:
    """Load a design from CSV or JSON.

    A non-numeric first CSV row is treated as a header. A provenance sidecar
    next to a CSV file is attached when present.

    Raises
    ------
    DesignParseError
        On ragged rows, non-numeric or non-finite cells, or values outside
        ``[0, 1]`` unless ``allow_out_of_range``.
    """
    path = Path(path)
    if _infer_format(path, fmt) == "json":
        try:
            doc = json.loads(path.read_text())
            X = np.array(doc["points"], dtype=float)
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise DesignParseError(f"malformed JSON design: {exc}") from exc
        if X.ndim != 2 or X.shape[0] == 0:
            raise DesignParseError("JSON points must be a nonempty list of equal-length rows")
        _check_values(X, allow_out_of_range)
        prov = doc.get("provenance")
        return Design(X, Provenance.from_dict(prov) if prov else None)
    X = _read_csv(path, allow_out_of_range)
    side = sidecar_path(path)
    prov = Provenance.from_dict(json.loads(side.read_text())) if side.exists() else None
    return Design(X, prov)


def design_to_csv(design, header: bool = False) -> str:
    X = as_points(design)
    out = []
    if header:
        out.append(",".join(f"x{k + 1}" for k in range(X.shape[1])))
    out.extend(",".join(_fmt(v) for v in row) for row in X)
    return "\n".join(out) + "\n"


def design_to_json(design) -> str:
    X = as_points(design)
    doc = {"n": X.shape[0], "p": X.shape[1], "points": X.tolist()}
    prov = getattr(design, "provenance", None)
    if prov is not None:
        doc["provenance"] = prov.to_dict()
    return json.dumps(doc, indent=2) + "\n"


def write_design(design, path, fmt: str | None = None, header: bool = False) -> None:
    """Write ``design`` as CSV (plus provenance sidecar when available) or JSON."""
    path = Path(path)
    if _infer_format(path, fmt) == "json":
        path.write_text(design_to_json(design))
        return
    path.write_text(design_to_csv(design, header))
    prov = getattr(design, "provenance", None)
    if prov is not None:
        write_json(prov.to_dict(), sidecar_path(path))


def write_json(obj, path) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def format_value(v: float) -> str:
    """Decimal rendering used in report tables; non-finite values spelled out."""
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return _fmt(v)
