"""Reading daily index CSVs and reading/writing result files.

Accepted CSV layouts are detected from the header row:

* ``yahoo``:   Date,Open,High,Low,Close,Adj Close,Volume
* ``minimal``: Date,Close,Volume
* ``price``:   Date,Close

Only the ``Close`` column is used as the price (never ``Adj Close``).
"""
from __future__ import annotations

import csv
import datetime as dt
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .calibrate import CalibrationResult, MarketSeries, SlopeSweep
from .errors import DataError
from .stats import CorrelationCurve, ExpFit

__all__ = [
    "CsvSchema",
    "SCHEMAS",
    "detect_schema",
    "read_market_csv",
    "write_market_csv",
    "ResultBundle",
    "write_results",
    "read_results",
    "export_curve",
    "write_series",
    "read_series",
    "SCHEMA_VERSION",
]

SCHEMA_VERSION = 1
_MISSING = {"", "null", "nan", "na", "n/a"}


@dataclass(frozen=True)
class CsvSchema:
    name: str
    columns: tuple
    date_format: str = "%Y-%m-%d"

    @property
    def has_volume(self) -> bool:
        return "volume" in self.columns


SCHEMAS = {
    "yahoo": CsvSchema("yahoo", ("date", "open", "high", "low", "close", "adj close", "volume")),
    "minimal": CsvSchema("minimal", ("date", "close", "volume")),
    "price": CsvSchema("price", ("date", "close")),
}


def _canon(name: str) -> str:
    return " ".join(name.strip().lower().replace("_", " ").split())


def detect_schema(header) -> CsvSchema:
    cols = tuple(_canon(h) for h in header)
    for schema in SCHEMAS.values():
        if cols == schema.columns:
            return schema
    raise DataError(f"unrecognised header {list(header)!r}; expected one of "
                    + "; ".join(",".join(s.columns) for s in SCHEMAS.values()))


def _parse_float(text: str, what: str, path, line: int) -> float:
    try:
        value = float(text)
    except ValueError:
        raise DataError(f"cannot parse {what} {text!r}", path=path, line=line) from None
    if not math.isfinite(value):
        raise DataError(f"non-finite {what} {text!r}", path=path, line=line)
    return value


def read_market_csv(path, schema: str | CsvSchema | None = None, name: str | None = None) -> MarketSeries:
    """Parse and validate a daily price/volume file.

    Rows with a missing or zero volume are kept for price statistics; their
    volume is stored as NaN so volume-weighted estimators skip them.
    """
    path = Path(path)
    try:
        fh = path.open(newline="", encoding="utf-8-sig")
    except OSError as exc:
        raise DataError(f"cannot open: {exc.strerror}", path=path) from exc
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError("empty file", path=path, line=1) from None
        detected = detect_schema(header)
        if isinstance(schema, str):
            schema = SCHEMAS[schema]
        if schema is not None and schema.columns != detected.columns:
            raise DataError(f"header does not match schema {schema.name!r}", path=path, line=1)
        schema = detected
        cols = {c: i for i, c in enumerate(schema.columns)}

        dates, close, volume = [], [], []
        prev = None
        for row in reader:
            line = reader.line_num
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != len(schema.columns):
                raise DataError(f"expected {len(schema.columns)} fields, found {len(row)}", path=path, line=line)
            try:
                day = dt.datetime.strptime(row[cols["date"]].strip(), schema.date_format).date()
            except ValueError:
                raise DataError(f"cannot parse date {row[cols['date']]!r}", path=path, line=line) from None
            if prev is not None:
                if day == prev:
                    raise DataError(f"duplicate date {day}", path=path, line=line)
                if day < prev:
                    raise DataError(f"date {day} is out of order (previous row is {prev})", path=path, line=line)
            prev = day
            price = _parse_float(row[cols["close"]].strip(), "close", path, line)
            if price <= 0:
                raise DataError(f"nonpositive close {price!r}", path=path, line=line)
            dates.append(day)
            close.append(price)
            if schema.has_volume:
                text = row[cols["volume"]].strip()
                vol = math.nan if text.lower() in _MISSING else _parse_float(text, "volume", path, line)
                if vol < 0:
                    raise DataError(f"negative volume {vol!r}", path=path, line=line)
                volume.append(math.nan if vol == 0 else vol)
    if len(dates) < 2:
        raise DataError("need at least two data rows", path=path)
    return MarketSeries(
        dates=np.array(dates, dtype="datetime64[D]"),
        close=np.array(close),
        volume=np.array(volume) if schema.has_volume else None,
        name=name if name is not None else path.stem,
    )


def write_market_csv(series: MarketSeries, path) -> None:
    """Write a series in the minimal (or price-only) layout; missing volume is written as 0."""
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        if series.volume is None:
            w.writerow(["Date", "Close"])
            for d, c in zip(series.dates, series.close):
                w.writerow([str(d), repr(float(c))])
        else:
            w.writerow(["Date", "Close", "Volume"])
            for d, c, v in zip(series.dates, series.close, series.volume):
                w.writerow([str(d), repr(float(c)), repr(float(v)) if np.isfinite(v) else "0"])


@dataclass
class ResultBundle:
    metadata: dict = field(default_factory=dict)
    curves: dict = field(default_factory=dict)
    fits: dict = field(default_factory=dict)
    calibrations: dict = field(default_factory=dict)
    slopes: dict = field(default_factory=dict)
    tables: dict = field(default_factory=dict)


def _arr(a):
    return None if a is None else [float(x) if isinstance(x, (float, np.floating)) else int(x) for x in a]


def _curve_to_dict(c: CorrelationCurve) -> dict:
    return {"lags": _arr(c.lags), "values": _arr(c.values), "n_samples": _arr(c.n_samples),
            "stderr": _arr(c.stderr)}


def _curve_from_dict(d: dict) -> CorrelationCurve:
    return CorrelationCurve(np.array(d["lags"], dtype=np.int64), np.array(d["values"], dtype=np.float64),
                            np.array(d["n_samples"], dtype=np.int64),
                            None if d.get("stderr") is None else np.array(d["stderr"], dtype=np.float64))


def _fit_to_dict(f: ExpFit) -> dict:
    return {"c": f.c, "xi": f.xi, "residual_norm": f.residual_norm, "n_points": f.n_points,
            "fit_range": list(f.fit_range), "c_stderr": f.c_stderr, "xi_stderr": f.xi_stderr,
            "low_confidence": f.low_confidence}


def _fit_from_dict(d: dict) -> ExpFit:
    d = dict(d)
    d["fit_range"] = tuple(d["fit_range"])
    return ExpFit(**d)


def _to_jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _to_jsonable(obj.tolist())
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def bundle_to_dict(bundle: ResultBundle) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "metadata": _to_jsonable(bundle.metadata),
        "curves": {k: _curve_to_dict(v) for k, v in bundle.curves.items()},
        "fits": {k: _fit_to_dict(v) for k, v in bundle.fits.items()},
        "calibrations": {k: _to_jsonable(v.to_dict()) for k, v in bundle.calibrations.items()},
        "slopes": {k: _to_jsonable(v.to_dict()) for k, v in bundle.slopes.items()},
        "tables": _to_jsonable(bundle.tables),
    }


def bundle_from_dict(data: dict) -> ResultBundle:
    version = data.get("schema_version")
    if version != SCHEMA_VERSION:
        raise DataError(f"unsupported results schema_version {version!r}")
    return ResultBundle(
        metadata=data.get("metadata", {}),
        curves={k: _curve_from_dict(v) for k, v in data.get("curves", {}).items()},
        fits={k: _fit_from_dict(v) for k, v in data.get("fits", {}).items()},
        calibrations={k: CalibrationResult.from_dict(v) for k, v in data.get("calibrations", {}).items()},
        slopes={k: SlopeSweep.from_dict(v) for k, v in data.get("slopes", {}).items()},
        tables=data.get("tables", {}),
    )


def write_results(bundle: ResultBundle, path) -> None:
    """Serialize ``bundle`` as JSON; floats are written with round-trip precision."""
    path = Path(path)
    text = json.dumps(bundle_to_dict(bundle), indent=2, sort_keys=True) + "\n"
    try:
        path.write_text(text, encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot write results: {exc.strerror}", path=path) from exc


def read_results(path) -> ResultBundle:
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise DataError(f"cannot read results: {exc.strerror}", path=path) from exc
    except json.JSONDecodeError as exc:
        raise DataError(f"invalid JSON: {exc.msg}", path=path, line=exc.lineno) from exc
    return bundle_from_dict(data)


def export_curve(curve: CorrelationCurve, path) -> None:
    """Plain ``lag value`` pairs, one per line, for external plotting tools."""
    with Path(path).open("w", encoding="utf-8") as fh:
        for lag, value in zip(curve.lags, curve.values):
            fh.write(f"{int(lag)} {float(value)!r}\n")


_SERIES_MAGIC = "# asymherd-series v1 "


def write_series(raw, path, metadata: dict | None = None) -> None:
    """One integer return per line, preceded by a JSON metadata comment."""
    raw = np.asarray(raw)
    lines = [_SERIES_MAGIC + json.dumps(_to_jsonable(metadata or {}), sort_keys=True)]
    lines.extend(str(int(x)) for x in raw)
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_series(path) -> tuple[np.ndarray, dict]:
    """Read a series file written by :func:`write_series` (or a bare one-number-per-line file)."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read series: {exc.strerror}", path=path) from exc
    meta = {}
    values = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        s = line.strip()
        if not s:
            continue
        if s.startswith("#"):
            if s.startswith(_SERIES_MAGIC.strip()) and lineno == 1:
                meta = json.loads(s[len(_SERIES_MAGIC):])
            continue
        try:
            values.append(float(s))
        except ValueError:
            raise DataError(f"cannot parse value {s!r}", path=path, line=lineno) from None
    arr = np.array(values, dtype=np.float64)
    if arr.size and np.all(arr == np.round(arr)):
        arr = arr.astype(np.int64)
    return arr, meta
