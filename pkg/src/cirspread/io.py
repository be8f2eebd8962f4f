"""CSV/JSON ingestion and output for the command-line front end.

Everything at this boundary is in basis points; the library works in
decimals. Input CSVs carry a mandatory header.
"""

from __future__ import annotations

import csv
import datetime as dt
import json
from collections import defaultdict
from pathlib import Path

import numpy as np

from cirspread.cir import CirParams
from cirspread.curves import DiscountCurve, SpreadCurve
from cirspread.errors import ValidationError

BP = 1e-4


class CsvFormatError(ValidationError):
    pass


def _read_rows(path, columns: tuple[str, ...]) -> list[tuple[int, dict[str, str]]]:
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise CsvFormatError(f"{path}:1: empty file, expected header {','.join(columns)}") from None
        missing = [c for c in columns if c not in header]
        if missing:
            raise CsvFormatError(f"{path}:1: header lacks column(s) {', '.join(missing)}")
        rows = []
        for lineno, raw in enumerate(reader, start=2):
            if not raw or all(not c.strip() for c in raw):
                continue
            if len(raw) != len(header):
                raise CsvFormatError(f"{path}:{lineno}: expected {len(header)} fields, got {len(raw)}")
            rows.append((lineno, dict(zip(header, (c.strip() for c in raw)))))
    return rows


def _parse_date(text: str, where: str) -> dt.date:
    try:
        return dt.date.fromisoformat(text)
    except ValueError:
        raise CsvFormatError(f"{where}: bad date {text!r} (expected YYYY-MM-DD)") from None


def _parse_float(text: str, where: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise CsvFormatError(f"{where}: bad number {text!r}") from None
    if not np.isfinite(value):
        raise CsvFormatError(f"{where}: non-finite number {text!r}")
    return value


def read_dated_curves(path, value_column: str) -> dict[dt.date, tuple[np.ndarray, np.ndarray]]:
    """``date,tenor_years,<value_column>`` rows grouped by date, tenors sorted."""
    groups: dict[dt.date, list[tuple[float, float]]] = defaultdict(list)
    for lineno, row in _read_rows(path, ("date", "tenor_years", value_column)):
        where = f"{path}:{lineno}"
        d = _parse_date(row["date"], where)
        tenor = _parse_float(row["tenor_years"], where)
        if tenor <= 0:
            raise CsvFormatError(f"{where}: tenor must be positive")
        groups[d].append((tenor, _parse_float(row[value_column], where)))
    out = {}
    for d in sorted(groups):
        pts = sorted(groups[d])
        tenors = np.array([p[0] for p in pts])
        if np.any(np.diff(tenors) <= 0):
            raise CsvFormatError(f"{path}: duplicate tenor on {d}")
        out[d] = (tenors, np.array([p[1] for p in pts]))
    if not out:
        raise CsvFormatError(f"{path}: no data rows")
    return out


def pick_date(curves: dict, date: dt.date | None):
    if date is None:
        date = max(curves)
    if date not in curves:
        raise ValidationError(f"no curve for {date}")
    return date, curves[date]


def read_spread_curves(path) -> dict[dt.date, SpreadCurve]:
    return {
        d: SpreadCurve(t, v * BP) for d, (t, v) in read_dated_curves(path, "spread_bp").items()
    }


def read_discount_curve(path, date: dt.date | None = None) -> DiscountCurve:
    _, (t, v) = pick_date(read_dated_curves(path, "discount_factor"), date)
    return DiscountCurve(t, v)


def read_vols(path) -> tuple[np.ndarray, np.ndarray]:
    """``tenor_years,vol_bp`` rows, returned in decimals."""
    pts = []
    for lineno, row in _read_rows(path, ("tenor_years", "vol_bp")):
        where = f"{path}:{lineno}"
        pts.append((_parse_float(row["tenor_years"], where), _parse_float(row["vol_bp"], where) * BP))
    if not pts:
        raise CsvFormatError(f"{path}: no data rows")
    pts.sort()
    return np.array([p[0] for p in pts]), np.array([p[1] for p in pts])


def read_tenor_series(path, tenor: float, value_column: str = "spread_bp"):
    """Dated series of one tenor from a ``date,tenor_years,<value>`` file (decimal)."""
    dates, values = [], []
    for d, (t, v) in read_dated_curves(path, value_column).items():
        hit = np.nonzero(np.isclose(t, tenor))[0]
        if hit.size:
            dates.append(d)
            values.append(v[hit[0]] * BP)
    return dates, np.array(values)


def read_params(path) -> CirParams:
    """CIR parameters from a bare ``{kappa, theta, sigma, y0}`` object or a calibration report."""
    with Path(path).open(encoding="utf-8") as fh:
        data = json.load(fh)
    if "params" in data:
        data = data["params"]
    try:
        return CirParams(*(float(data[k]) for k in ("kappa", "theta", "sigma", "y0")))
    except KeyError as exc:
        raise ValidationError(f"{path}: missing parameter {exc.args[0]!r}") from None


def write_csv(path, header, rows) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def write_json(path, obj) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")


def _json_default(o):
    if isinstance(o, (dt.date, dt.datetime)):
        return o.isoformat()
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, Path):
        return str(o)
    raise TypeError(f"not JSON serialisable: {type(o).__name__}")


def fmt_bp(x: float) -> str:
    return f"{x / BP:.4f}"


def level_column(level: float) -> str:
    pct = level * 100
    return f"q{int(round(pct)):02d}" if abs(pct - round(pct)) < 1e-9 else f"q{pct:g}"
