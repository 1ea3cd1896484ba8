"""Reading cloud files and writing invariants in a canonical text form.

Three input formats are understood:

* ``csv``: one point per line, ``n`` comma-separated numbers.  Blank lines and
  lines starting with ``#`` are skipped.
* ``xyz``: one or more frames, each a point-count line, a comment line (used as
  the cloud name when non-empty) and that many coordinate lines.  A leading
  non-numeric token on a coordinate line is an atom label and is ignored.
* ``json``: an object mapping cloud names to lists of coordinate lists.

Canonical JSON has sorted keys, no insignificant whitespace and floats with
17 significant digits, so equal invariants serialise to identical bytes and
parsing the text back gives the same floats.
"""

from __future__ import annotations

import csv
import io as _io
import json
import math
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import InputFormatError, InvalidInputError
from .geometry import DEFAULT_TOL, PointCloud, Tolerance
from .invariants import WeightedDistribution, _Relative
from .moments import MomentVector

__all__ = [
    "CloudFile",
    "FORMATS",
    "guess_format",
    "parse_cloud_text",
    "parse_cloud_file",
    "canonical_json",
    "dump_invariant",
    "load_invariant",
    "cloud_to_csv",
    "clouds_to_json",
    "moments_to_csv",
]

FORMATS = ("csv", "xyz", "json")


@dataclass
class CloudFile:
    """Named clouds read from one file, all in the same dimension."""

    format: str
    clouds: dict[str, PointCloud] = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return next(iter(self.clouds.values())).dim

    @property
    def names(self) -> list[str]:
        return list(self.clouds)

    def __len__(self):
        return len(self.clouds)

    def __getitem__(self, name: str) -> PointCloud:
        try:
            return self.clouds[name]
        except KeyError:
            raise InvalidInputError(f"no cloud named {name!r}; available: {', '.join(self.clouds)}") from None


def guess_format(path) -> str:
    ext = Path(path).suffix.lower().lstrip(".")
    if ext in ("csv", "txt"):
        return "csv"
    if ext == "xyz":
        return "xyz"
    if ext in ("json", "json-set"):
        return "json"
    raise InputFormatError(f"cannot tell the format of {os.fspath(path)!r}; pass it explicitly")


def _number(token: str, line: int) -> float:
    try:
        v = float(token)
    except ValueError:
        raise InputFormatError(f"not a number: {token.strip()!r}", line) from None
    if not math.isfinite(v):
        raise InputFormatError(f"non-finite coordinate {token.strip()!r}", line)
    return v


def _parse_csv(text: str, name: str) -> dict[str, PointCloud]:
    rows, dim = [], None
    for lineno, row in enumerate(csv.reader(_io.StringIO(text)), start=1):
        if not row or all(not c.strip() for c in row) or row[0].lstrip().startswith("#"):
            continue
        vals = [_number(c, lineno) for c in row]
        if dim is None:
            dim = len(vals)
        elif len(vals) != dim:
            raise InputFormatError(f"expected {dim} coordinates, got {len(vals)}", lineno)
        rows.append(vals)
    if not rows:
        raise InputFormatError("no points found")
    return {name: PointCloud(rows)}


def _parse_xyz(text: str, name: str) -> dict[str, PointCloud]:
    lines = text.splitlines()
    clouds: dict[str, PointCloud] = {}
    dim = None
    i = 0
    frame = 0
    while i < len(lines):
        if not lines[i].strip():
            i += 1
            continue
        head = lines[i].split()
        try:
            count = int(head[0])
        except ValueError:
            raise InputFormatError(f"expected a point count, got {lines[i].strip()!r}", i + 1) from None
        if len(head) != 1 or count < 1:
            raise InputFormatError("point count must be a single positive integer", i + 1)
        if i + 1 >= len(lines):
            raise InputFormatError("missing comment line", i + 2)
        title = lines[i + 1].strip() or f"{name}:{frame}"
        pts = []
        for k in range(count):
            lineno = i + 3 + k
            if lineno > len(lines):
                raise InputFormatError(f"frame ends after {k} of {count} points", lineno)
            tokens = lines[lineno - 1].split()
            if tokens:
                try:
                    float(tokens[0])
                except ValueError:
                    tokens = tokens[1:]
            if not tokens:
                raise InputFormatError("no coordinates on this line", lineno)
            vals = [_number(t, lineno) for t in tokens]
            if dim is None:
                dim = len(vals)
            elif len(vals) != dim:
                raise InputFormatError(f"expected {dim} coordinates, got {len(vals)}", lineno)
            pts.append(vals)
        if title in clouds:
            raise InputFormatError(f"duplicate frame name {title!r}", i + 2)
        clouds[title] = PointCloud(pts)
        i += 2 + count
        frame += 1
    if not clouds:
        raise InputFormatError("no frames found")
    return clouds


def _json_line(text: str, key: str) -> int | None:
    needle = json.dumps(key)
    pos = text.find(needle)
    return text.count("\n", 0, pos) + 1 if pos >= 0 else None


def _parse_json(text: str) -> dict[str, PointCloud]:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputFormatError(exc.msg, exc.lineno) from None
    if not isinstance(data, dict) or not data:
        raise InputFormatError("expected a non-empty object mapping names to point lists", 1)
    clouds, dim = {}, None
    for key, pts in data.items():
        line = _json_line(text, key)
        if not isinstance(pts, list) or not pts:
            raise InputFormatError(f"cloud {key!r} must be a non-empty list of points", line)
        for p in pts:
            if not isinstance(p, list) or not p or not all(
                isinstance(v, (int, float)) and not isinstance(v, bool) for v in p
            ):
                raise InputFormatError(f"cloud {key!r} has a point that is not a list of numbers", line)
        d = len(pts[0])
        if any(len(p) != d for p in pts):
            raise InputFormatError(f"cloud {key!r} has ragged points", line)
        if dim is None:
            dim = d
        elif d != dim:
            raise InputFormatError(f"cloud {key!r} lives in R^{d}, earlier clouds in R^{dim}", line)
        try:
            clouds[key] = PointCloud(pts)
        except InvalidInputError as exc:
            raise InputFormatError(f"cloud {key!r}: {exc}", line) from None
    return clouds


def parse_cloud_text(text: str, format: str, name: str = "cloud") -> CloudFile:
    if format == "json-set":
        format = "json"
    if format not in FORMATS:
        raise InputFormatError(f"unknown format {format!r}; expected one of {FORMATS}")
    if not text.strip():
        raise InputFormatError("file is empty")
    if format == "csv":
        clouds = _parse_csv(text, name)
    elif format == "xyz":
        clouds = _parse_xyz(text, name)
    else:
        clouds = _parse_json(text)
    return CloudFile(format, clouds)


def parse_cloud_file(path, format: str | None = None) -> CloudFile:
    """Read every cloud in ``path``; ``format`` defaults to the file extension."""
    path = Path(path)
    fmt = format or guess_format(path)
    try:
        text = path.read_text(encoding="utf-8")
    except UnicodeDecodeError as exc:
        raise InputFormatError(f"{path}: not UTF-8 ({exc.reason})") from None
    except OSError as exc:
        raise InputFormatError(f"{path}: {exc.strerror or exc}") from None
    return parse_cloud_text(text, fmt, name=path.stem)


def _encode(obj) -> str:
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if not math.isfinite(v):
            raise InvalidInputError("cannot serialise a non-finite float")
        if v == 0.0:
            v = 0.0  # drop the sign of -0.0
        return format(v, ".17g")
    if isinstance(obj, str):
        return json.dumps(obj, ensure_ascii=False)
    if isinstance(obj, dict):
        items = sorted(obj.items())
        return "{" + ",".join(json.dumps(str(k), ensure_ascii=False) + ":" + _encode(v) for k, v in items) + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        return "[" + ",".join(_encode(v) for v in obj) + "]"
    raise InvalidInputError(f"cannot serialise {type(obj).__name__}")


def canonical_json(obj) -> str:
    """Deterministic JSON text: sorted keys, compact separators, ``%.17g`` floats."""
    return _encode(obj)


def dump_invariant(obj) -> str:
    """Canonical JSON for an Ord, Ocd or weighted distribution."""
    if isinstance(obj, (WeightedDistribution, _Relative)):
        return canonical_json(obj.to_dict())
    raise InvalidInputError(f"cannot serialise {type(obj).__name__}")


def load_invariant(text: str, tol: Tolerance = DEFAULT_TOL):
    """Inverse of :func:`dump_invariant`."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputFormatError(exc.msg, exc.lineno) from None
    if not isinstance(data, dict) or "kind" not in data:
        raise InputFormatError("not a serialised invariant")
    try:
        if data["kind"] in ("osd", "scd"):
            return WeightedDistribution.from_dict(data, tol)
        return _Relative.from_dict(data, tol)
    except (KeyError, TypeError, ValueError) as exc:
        raise InputFormatError(f"malformed invariant: {exc}") from None


def cloud_to_csv(cloud: PointCloud) -> str:
    return "".join(",".join(format(float(v), ".17g") for v in p) + "\n" for p in cloud.points)


def clouds_to_json(clouds: dict[str, PointCloud]) -> str:
    return canonical_json({name: c.points.tolist() for name, c in clouds.items()})


def moments_to_csv(rows: list[tuple[str, MomentVector]]) -> str:
    """CSV lines ``name,kind,l,m,n,coords...`` for named moment vectors."""
    out = _io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    for name, vec in rows:
        row = vec.csv_row()
        writer.writerow([name, *row[:4], *(format(v, ".17g") for v in row[4:])])
    return out.getvalue()
