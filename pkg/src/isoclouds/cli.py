"""Command-line entry point: ``isoclouds {compute,dist,matrix,dedup,moments}``.

Exit status: 0 on success, 1 on usage errors, 2 on unreadable or malformed
input, 3 when two clouds cannot be compared (different ``m`` or ``n``).
"""

from __future__ import annotations

import argparse
import csv
import io
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import io as cio
from .errors import IncomparableInputError, InputFormatError, IsoCloudsError
from .geometry import PointCloud
from .invariants import build_osd, build_scd
from .metrics import distribution_distance, linf
from .moments import cdm, odm

EXIT_OK, EXIT_USAGE, EXIT_FORMAT, EXIT_INCOMPARABLE = 0, 1, 2, 3
INVARIANTS = ("osd", "scd", "odm", "cdm")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _threads() -> int:
    raw = os.environ.get("ISOCLOUDS_THREADS")
    if raw is None:
        return os.cpu_count() or 1
    try:
        val = int(raw)
    except ValueError:
        raise UsageError(f"ISOCLOUDS_THREADS must be a positive integer, got {raw!r}") from None
    if val < 1:
        raise UsageError(f"ISOCLOUDS_THREADS must be a positive integer, got {raw!r}")
    return val


def _map(fn, items) -> list:
    """``list(map(fn, items))`` over a thread pool capped by ISOCLOUDS_THREADS; order is preserved."""
    items = list(items)
    workers = min(_threads(), max(len(items), 1))
    if workers == 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


# -- inputs ------------------------------------------------------------------

def _load(spec: str, fmt: str | None) -> dict[str, PointCloud]:
    """Clouds named by ``path`` or ``path:name``."""
    path, name = spec, None
    if not Path(spec).exists() and ":" in spec:
        path, name = spec.rsplit(":", 1)
    cf = cio.parse_cloud_file(path, fmt)
    if name is None:
        return dict(cf.clouds)
    if name not in cf.clouds:
        raise InputFormatError(f"{path}: no cloud named {name!r}")
    return {name: cf.clouds[name]}


def _load_one(spec: str, fmt: str | None) -> tuple[str, PointCloud]:
    clouds = _load(spec, fmt)
    if len(clouds) != 1:
        raise UsageError(f"{spec} holds {len(clouds)} clouds; select one with {spec}:NAME")
    return next(iter(clouds.items()))


def _parse_anchor(text: str | None):
    """``None``/``centroid`` or a point index given as ``K`` or ``index:K``."""
    if text is None or text == "centroid":
        return None
    raw = text[len("index:"):] if text.startswith("index:") else text
    try:
        k = int(raw)
    except ValueError:
        raise UsageError(f"--anchor must be 'centroid', K or index:K, got {text!r}") from None
    if k < 0:
        raise UsageError("anchor index must be non-negative")
    return k


def _anchored(cloud: PointCloud, anchor):
    """Cloud and origin for an SCD; an anchor index removes that point from the cloud."""
    if anchor is None:
        return cloud, None
    if anchor >= cloud.m:
        raise UsageError(f"anchor index {anchor} out of range for a cloud of {cloud.m} points")
    origin = cloud.points[anchor].copy()
    rest = np.delete(cloud.points, anchor, axis=0)
    if rest.shape[0] == 0:
        raise UsageError("removing the anchor leaves no points")
    return PointCloud(rest), origin


def _reflect(cloud: PointCloud) -> PointCloud:
    pts = cloud.points.copy()
    pts[:, 0] = -pts[:, 0]
    return PointCloud(pts)


# -- computations --------------------------------------------------------------

def _distribution(cloud: PointCloud, invariant: str, anchor):
    if invariant == "osd":
        return build_osd(cloud)
    c, origin = _anchored(cloud, anchor)
    return build_scd(c, origin)


def _moment(cloud: PointCloud, invariant: str, order: int, anchor, signed=True):
    if invariant == "odm":
        return odm(cloud, order, signed=signed)
    c, origin = _anchored(cloud, anchor)
    return cdm(c, order, origin, signed=signed)


def _check_sizes(a: PointCloud, b: PointCloud):
    if a.m != b.m or a.dim != b.dim:
        raise IncomparableInputError(f"clouds differ in size: m={a.m}, n={a.dim} vs m={b.m}, n={b.dim}")


def _check_method(invariant: str, method: str):
    if invariant in ("osd", "scd") and method not in ("lac", "emd"):
        raise UsageError(f"--invariant {invariant} needs --method lac or emd")
    if invariant in ("odm", "cdm") and method != "linf":
        raise UsageError(f"--invariant {invariant} needs --method linf")


class _Cache:
    """Invariants per cloud, computed once."""

    def __init__(self, invariant, anchor, order=1):
        self.invariant, self.anchor, self.order = invariant, anchor, order
        self.store = {}

    def get(self, name, cloud, mirrored=False):
        # keyed by object identity: two files may hold clouds with the same name
        key = (id(cloud), mirrored)
        if key not in self.store:
            c = _reflect(cloud) if mirrored else cloud
            if self.invariant in ("osd", "scd"):
                self.store[key] = _distribution(c, self.invariant, self.anchor)
            else:
                self.store[key] = _moment(c, self.invariant, self.order, self.anchor).coords
        return self.store[key]


def _pair_distance(cache: _Cache, a, b, method: str, mode: str) -> float:
    (na, ca), (nb, cb) = a, b
    _check_sizes(ca, cb)
    if cache.invariant in ("osd", "scd"):
        return distribution_distance(cache.get(na, ca), cache.get(nb, cb), method, mode)
    d = linf(cache.get(na, ca), cache.get(nb, cb))
    if mode == "isometry":
        d = min(d, linf(cache.get(na, ca), cache.get(nb, cb, mirrored=True)))
    return d


def _fmt(v: float) -> str:
    return format(float(v) + 0.0, ".17g")


def _write(out: str | None, text: str):
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8")


# -- subcommands -------------------------------------------------------------

def cmd_compute(args) -> int:
    clouds = _load(args.input, args.format)
    anchor = _parse_anchor(args.anchor)
    if args.invariant in ("osd", "scd"):
        if args.moment is not None:
            raise UsageError("--moment applies to odm and cdm only")
        items = list(clouds.items())
        dists = _map(lambda kv: _distribution(kv[1], args.invariant, anchor), items)
        if len(items) == 1:
            text = cio.dump_invariant(dists[0])
        else:
            text = cio.canonical_json({name: d.to_dict() for (name, _), d in zip(items, dists)})
        _write(args.out, text + "\n")
    else:
        order = 1 if args.moment is None else args.moment
        rows = [(name, _moment(c, args.invariant, order, anchor)) for name, c in clouds.items()]
        _write(args.out, cio.moments_to_csv(rows))
    return EXIT_OK


def cmd_dist(args) -> int:
    _check_method(args.invariant, args.method)
    a = _load_one(args.a, args.format)
    b = _load_one(args.b, args.format)
    _check_sizes(a[1], b[1])
    cache = _Cache(args.invariant, _parse_anchor(args.anchor))
    print(_fmt(_pair_distance(cache, a, b, args.method, args.mode)))
    return EXIT_OK


def _pairs(n: int):
    return [(i, j) for i in range(n) for j in range(i + 1, n)]


def cmd_matrix(args) -> int:
    _check_method(args.invariant, args.method)
    clouds = list(_load(args.input, args.format).items())
    for _, c in clouds[1:]:
        _check_sizes(clouds[0][1], c)
    cache = _Cache(args.invariant, _parse_anchor(args.anchor))
    # fill the cache serially so worker threads only read it
    for name, c in clouds:
        cache.get(name, c)
        if args.mode == "isometry" and args.invariant in ("odm", "cdm"):
            cache.get(name, c, mirrored=True)
    pairs = _pairs(len(clouds))
    vals = _map(lambda p: _pair_distance(cache, clouds[p[0]], clouds[p[1]], args.method, args.mode), pairs)
    mat = np.zeros((len(clouds), len(clouds)))
    for (i, j), v in zip(pairs, vals):
        mat[i, j] = mat[j, i] = v
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["cloud", *(n for n, _ in clouds)])
    for (name, _), row in zip(clouds, mat):
        w.writerow([name, *(_fmt(v) for v in row)])
    _write(args.out, buf.getvalue())
    return EXIT_OK


def cmd_dedup(args) -> int:
    if args.threshold < 0:
        raise UsageError("--threshold must be non-negative")
    if args.method not in ("lac", "emd"):
        raise UsageError("--method must be lac or emd")
    clouds = list(_load(args.input, args.format).items())
    anchor = _parse_anchor(args.anchor)
    moment_kind = "odm" if args.invariant == "osd" else "cdm"
    # first moments with unsigned strengths: their L-inf gap never exceeds the
    # EMD (or LAC) distance, so pairs above the threshold can be skipped safely
    bounds = _map(lambda kv: _moment(kv[1], moment_kind, 1, anchor, signed=False).coords, clouds)
    cache = _Cache(args.invariant, anchor)
    candidates, pruned = [], 0
    for i, j in _pairs(len(clouds)):
        ci, cj = clouds[i][1], clouds[j][1]
        if ci.m != cj.m or ci.dim != cj.dim:
            continue
        if linf(bounds[i], bounds[j]) > args.threshold:
            pruned += 1
            continue
        candidates.append((i, j))
    for name, c in clouds:
        if any(name == clouds[i][0] or name == clouds[j][0] for i, j in candidates):
            cache.get(name, c)
    vals = _map(lambda p: _pair_distance(cache, clouds[p[0]], clouds[p[1]], args.method, args.mode), candidates)
    parent = list(range(len(clouds)))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for (i, j), v in zip(candidates, vals):
        if v <= args.threshold:
            ri, rj = find(i), find(j)
            parent[max(ri, rj)] = min(ri, rj)
    groups: dict[int, list[str]] = {}
    for k, (name, _) in enumerate(clouds):
        groups.setdefault(find(k), []).append(name)
    text = "".join(" ".join(g) + "\n" for g in groups.values())
    _write(args.out, text)
    print(f"{len(groups)} groups, {pruned} of {pruned + len(candidates)} pairs pruned by the moment bound",
          file=sys.stderr)
    return EXIT_OK


def cmd_moments(args) -> int:
    try:
        orders = [int(t) for t in args.orders.split(",") if t.strip()]
    except ValueError:
        raise UsageError(f"--orders must be comma-separated integers, got {args.orders!r}") from None
    if not orders or any(o < 1 for o in orders):
        raise UsageError("--orders needs positive integers")
    clouds = _load(args.input, args.format)
    anchor = _parse_anchor(args.anchor)
    rows = [(name, _moment(c, args.invariant, o, anchor)) for name, c in clouds.items() for o in orders]
    _write(args.out, cio.moments_to_csv(rows))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="isoclouds", description="Isometry invariants and distances for point clouds.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, inv_choices=INVARIANTS, inv_default=None):
        sp.add_argument("--format", choices=("csv", "xyz", "json", "json-set"), help="input format (default: extension)")
        sp.add_argument("--anchor", help="SCD/CDM origin: centroid (default), K or index:K (point K is removed)")
        if inv_default is None:
            sp.add_argument("--invariant", choices=inv_choices, required=True)
        else:
            sp.add_argument("--invariant", choices=inv_choices, default=inv_default)

    sp = sub.add_parser("compute", help="write an invariant as canonical JSON (osd/scd) or CSV (odm/cdm)")
    sp.add_argument("--in", dest="input", required=True, help="cloud file, optionally path:NAME")
    sp.add_argument("--moment", type=int, help="moment order for odm/cdm (default 1)")
    sp.add_argument("--out", help="output file (default: stdout)")
    common(sp)
    sp.set_defaults(func=cmd_compute)

    sp = sub.add_parser("dist", help="print the distance between two clouds")
    sp.add_argument("--a", required=True, help="first cloud, path or path:NAME")
    sp.add_argument("--b", required=True, help="second cloud, path or path:NAME")
    sp.add_argument("--method", choices=("lac", "emd", "linf"), default=None)
    sp.add_argument("--mode", choices=("rigid", "isometry"), default="rigid")
    common(sp)
    sp.set_defaults(func=cmd_dist)

    sp = sub.add_parser("matrix", help="pairwise distance matrix of all clouds in a file, as CSV")
    sp.add_argument("--in", dest="input", required=True)
    sp.add_argument("--method", choices=("lac", "emd", "linf"), default=None)
    sp.add_argument("--mode", choices=("rigid", "isometry"), default="rigid")
    sp.add_argument("--out")
    common(sp)
    sp.set_defaults(func=cmd_matrix)

    sp = sub.add_parser("dedup", help="group clouds whose distance is at most a threshold")
    sp.add_argument("--in", dest="input", required=True)
    sp.add_argument("--threshold", type=float, required=True)
    sp.add_argument("--method", choices=("lac", "emd"), default="emd")
    sp.add_argument("--mode", choices=("rigid", "isometry"), default="rigid")
    sp.add_argument("--out")
    common(sp, ("osd", "scd"), "osd")
    sp.set_defaults(func=cmd_dedup)

    sp = sub.add_parser("moments", help="moment vectors of every cloud, as CSV rows")
    sp.add_argument("--in", dest="input", required=True)
    sp.add_argument("--orders", default="1")
    sp.add_argument("--out")
    common(sp, ("odm", "cdm"), "odm")
    sp.set_defaults(func=cmd_moments)
    return p


def _default_method(args):
    if getattr(args, "method", "x") is None:
        args.method = "linf" if args.invariant in ("odm", "cdm") else "emd"


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    _default_method(args)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"isoclouds: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except InputFormatError as exc:
        print(f"isoclouds: input error: {exc}", file=sys.stderr)
        return EXIT_FORMAT
    except IncomparableInputError as exc:
        print(f"isoclouds: incomparable inputs: {exc}", file=sys.stderr)
        return EXIT_INCOMPARABLE
    except IsoCloudsError as exc:
        print(f"isoclouds: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
