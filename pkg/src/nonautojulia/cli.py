"""Command-line entry point: ``nonautojulia <command> --config run.json --out DIR``.

A run is described by one JSON document::

    {"spec": {"kind": "constant", "c": [5, 0], "m": 2},
     "K": 6, "level": 6, "stage": 0, "mesh": 1024, "epsilon": 0.5,
     "region": {"center": [0, 0], "width": 6, "height": 6},
     "resolution": [512, 512], "scales": null, "levels": [3, 4, 5, 6],
     "points": null, "csv": true}

Flags override scalar fields and are echoed into ``<command>.meta.json``.
Exit status: 0 success, 1 validation/precondition failure, 2 I/O failure.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .dimension import (bowen_estimate, box_count, cylinder_scales, default_scales,
                        write_counts_csv, write_trend_csv)
from .errors import ConfigParseError, IoFailure, JuliaError, MeshTooCoarse, PreconditionError
from .geometry import classify, separation_check, thinness_table, write_thinness_csv
from .ncifs import limit_points, verify_system
from .render import Region, encode_outputs, render_grid
from .seqcore import ParamSpec, checkpoint, escape_codes, validate

COMMANDS = ("validate", "render", "dimension", "boxcount", "annuli", "survival", "verify")

DEFAULTS = {
    "K": None, "level": None, "stage": 0, "mesh": 1024, "epsilon": 0.5,
    "region": {"center": [0.0, 0.0], "width": 6.0, "height": 6.0},
    "resolution": [512, 512], "scales": None, "levels": None, "points": None,
    "csv": True, "threads": None, "allow_weak": False,
}
SCALAR_KEYS = ("K", "level", "stage", "mesh", "epsilon", "csv", "threads", "allow_weak")


@dataclass
class RunConfig:
    command: str
    spec: ParamSpec
    params: dict
    overrides: dict = field(default_factory=dict)
    out: str = "."

    @property
    def horizon(self):
        return self.params["K"]

    def resolved(self):
        return {"command": self.command, "spec": self.spec.to_json(), **self.params}


def _parse_value(text):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def _spec_shortcut(text):
    """``hdmax`` or ``constant:RE[,IM]:M``."""
    parts = text.split(":")
    try:
        if parts == ["hdmax"]:
            return {"kind": "hdmax"}
        if parts[0] == "constant" and len(parts) == 3:
            re_im = [float(v) for v in parts[1].split(",")] + [0.0]
            return {"kind": "constant", "c": re_im[:2], "m": int(parts[2])}
    except ValueError:
        pass
    raise ConfigParseError(f"--spec: expected 'hdmax' or 'constant:RE[,IM]:M', got {text!r}")


def load_document(path):
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise IoFailure(path, exc.strerror or str(exc)) from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigParseError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    if not isinstance(doc, dict):
        raise ConfigParseError(f"{path}: top level must be an object")
    return doc


def build_config(args):
    doc = load_document(args.config) if args.config else {}
    if args.spec:
        doc["spec"] = _spec_shortcut(args.spec)
    if "spec" not in doc:
        raise ConfigParseError("field 'spec': missing (use --config or --spec)")
    if doc.get("command", args.command) != args.command:
        raise ConfigParseError(f"field 'command': {doc['command']!r} conflicts with {args.command!r}")
    unknown = set(doc) - set(DEFAULTS) - {"spec", "command"}
    if unknown:
        raise ConfigParseError(f"unknown field(s): {', '.join(sorted(unknown))}")
    spec = ParamSpec.from_json(doc["spec"])

    overrides = {}
    for name in SCALAR_KEYS:
        value = getattr(args, name, None)
        if value is not None and value is not False:
            overrides[name] = value
    for item in args.set or ():
        key, sep, value = item.partition("=")
        if not sep or key not in DEFAULTS:
            raise ConfigParseError(f"--set {item!r}: expected KEY=VALUE with KEY in {sorted(DEFAULTS)}")
        overrides[key] = _parse_value(value)

    params = dict(DEFAULTS)
    params.update({k: v for k, v in doc.items() if k in DEFAULTS})
    params.update(overrides)
    if params["K"] is None:
        params["K"] = spec.horizon_default
    if params["level"] is None:
        params["level"] = params["K"]
    if params["threads"] is None:
        params["threads"] = os.cpu_count() or 1
    return RunConfig(args.command, spec, params, overrides, args.out)


def _int_param(params, name, lo):
    v = params[name]
    if isinstance(v, bool) or not isinstance(v, int) or v < lo:
        raise PreconditionError(name, f"must be an integer >= {lo}, got {v!r}")
    return v


def check_preconditions(cfg):
    """Reject parameters outside the target operation's domain before any work is done."""
    p, spec = cfg.params, cfg.spec
    K = _int_param(p, "K", 1)
    if spec.length is not None and K > spec.length:
        raise PreconditionError("K", f"must be <= {spec.length} (explicit list length)")
    _int_param(p, "threads", 1)
    if cfg.command == "validate":
        return
    report = validate(spec, K, p["allow_weak"])
    if not report.passed:
        raise PreconditionError("spec", "; ".join(report.violations()))
    if cfg.command in ("boxcount", "annuli", "survival"):
        level = _int_param(p, "level", 1)
        if level > K:
            raise PreconditionError("level", f"must be <= K = {K}")
    if cfg.command == "render":
        stage = _int_param(p, "stage", 0)
        if stage >= checkpoint(spec, K):
            raise PreconditionError("stage", f"must be < M_K = {checkpoint(spec, K)}")
        res = p["resolution"]
        if (not isinstance(res, list) or len(res) != 2
                or not all(isinstance(v, int) and v >= 1 for v in res)):
            raise PreconditionError("resolution", "must be [nx, ny] with positive integers")
        _region(p["region"])
    if cfg.command == "annuli":
        _int_param(p, "mesh", 64)
    if cfg.command == "verify":
        eps = p["epsilon"]
        if not isinstance(eps, (int, float)) or not 0 < eps <= 1:
            raise PreconditionError("epsilon", f"must satisfy 0 < epsilon <= 1, got {eps!r}")


def _region(doc):
    try:
        re, im = doc["center"]
        return Region(complex(re, im), float(doc["width"]), float(doc["height"]))
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, PreconditionError):
            raise
        raise PreconditionError("region", f"expected center/width/height ({exc})") from exc


# ---------------------------------------------------------------------------
# commands; each returns (ok, report, written file names)


def _dump(obj):
    return json.dumps(obj, sort_keys=True, indent=2, default=_json_default) + "\n"


def _json_default(obj):
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if isinstance(obj, np.generic):
        return obj.item()
    raise TypeError(f"not serializable: {type(obj).__name__}")


def _write_text(path, text):
    try:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise IoFailure(path, exc.strerror or str(exc)) from exc


def cmd_validate(cfg, out):
    report = validate(cfg.spec, cfg.horizon, cfg.params["allow_weak"])
    return report.passed, report.to_json(), []


def cmd_render(cfg, out):
    p = cfg.params
    grid = render_grid(cfg.spec, _region(p["region"]), tuple(p["resolution"]), p["stage"],
                       cfg.horizon, threads=p["threads"])
    files = ["render.pgm"] + (["render.csv"] if p["csv"] else [])
    encode_outputs(grid, os.path.join(out, files[0]),
                   os.path.join(out, files[1]) if p["csv"] else None)
    codes, counts = np.unique(grid.cells, return_counts=True)
    report = {"resolution": list(grid.resolution), "start_stage": grid.start_stage, "K": grid.K,
              "histogram": {str(int(c)): int(n) for c, n in zip(codes, counts)},
              "survived": int(grid.survived().sum())}
    return True, report, files


def cmd_dimension(cfg, out):
    report = bowen_estimate(cfg.spec, cfg.horizon)
    write_trend_csv(os.path.join(out, "dimension_trend.csv"), report)
    return True, report.to_json(), ["dimension_trend.csv"]


def cmd_boxcount(cfg, out):
    p, spec, k = cfg.params, cfg.spec, cfg.params["level"]
    if p["scales"] is not None:
        scales = p["scales"]
    elif p["levels"] is not None:
        scales = cylinder_scales(spec, p["levels"])
    else:
        scales = default_scales(spec, k)
    result = box_count(limit_points(spec, k), scales, threads=p["threads"])
    write_counts_csv(os.path.join(out, "boxcount.csv"), result)
    doc = result.to_json()
    doc["level"] = k
    doc["bowen_ratio"] = bowen_estimate(spec, k).ratio
    return True, doc, ["boxcount.csv"]


def cmd_annuli(cfg, out):
    p, spec = cfg.params, cfg.spec
    table = thinness_table(spec, cfg.horizon)
    write_thinness_csv(os.path.join(out, "thinness.csv"), table)
    doc = {"classification": classify(spec, cfg.horizon).to_json(), "thinness": table.to_json()}
    try:
        sep = separation_check(spec, p["level"], p["mesh"])
        doc["separation"] = sep.to_json()
        ok = sep.passed
    except MeshTooCoarse as exc:
        doc["separation"] = {"k": p["level"], "passed": False, "untrusted": str(exc)}
        ok = False
    return ok, doc, ["thinness.csv"]


def cmd_survival(cfg, out):
    p, spec, k = cfg.params, cfg.spec, cfg.params["level"]
    if p["points"] is not None:
        try:
            z = np.array([complex(re, im) for re, im in p["points"]], dtype=complex)
        except (TypeError, ValueError) as exc:
            raise PreconditionError("points", f"expected [[re, im], ...] ({exc})") from exc
    else:
        z = limit_points(spec, k, anchor=0j)
    codes = escape_codes(spec, z, k)
    lines = ["re,im,code,survives"]
    lines += [f"{w.real!r},{w.imag!r},{int(c)},{int(c == -1)}" for w, c in zip(z, codes)]
    _write_text(os.path.join(out, "survival.csv"), "\n".join(lines) + "\n")
    doc = {"level": k, "points": int(z.size), "survived": int(np.count_nonzero(codes == -1))}
    return True, doc, ["survival.csv"]


def cmd_verify(cfg, out):
    check = verify_system(cfg.spec, cfg.horizon, eps=float(cfg.params["epsilon"]))
    return check.all_ok, check.to_json(), []


DISPATCH = {"validate": cmd_validate, "render": cmd_render, "dimension": cmd_dimension,
            "boxcount": cmd_boxcount, "annuli": cmd_annuli, "survival": cmd_survival,
            "verify": cmd_verify}


def run(cfg):
    """Dispatch ``cfg``; returns the exit status."""
    check_preconditions(cfg)
    try:
        os.makedirs(cfg.out, exist_ok=True)
    except OSError as exc:
        raise IoFailure(cfg.out, exc.strerror or str(exc)) from exc
    ok, report, files = DISPATCH[cfg.command](cfg, cfg.out)
    report_name = f"{cfg.command}.json"
    _write_text(os.path.join(cfg.out, report_name), _dump(report))
    files = [report_name] + files
    meta = {"artifact_version": __version__, "command": cfg.command,
            "config": cfg.resolved(), "overrides": cfg.overrides,
            "spec": cfg.spec.describe(), "horizon": cfg.horizon,
            "outputs": files, "status": "ok" if ok else "failed"}
    # threads never affect results, so they stay out of the byte-compared outputs
    meta["config"].pop("threads")
    meta["overrides"] = {k: v for k, v in cfg.overrides.items() if k != "threads"}
    _write_text(os.path.join(cfg.out, f"{cfg.command}.meta.json"), _dump(meta))
    if cfg.command == "validate" and not ok:
        for line in report["violations"]:
            print(line, file=sys.stderr)
    return 0 if ok else 1


def build_parser():
    parser = argparse.ArgumentParser(prog="nonautojulia", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="JSON run document")
        p.add_argument("--spec", help="shortcut: 'hdmax' or 'constant:RE[,IM]:M'")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--threads", type=int)
        p.add_argument("--allow-weak", dest="allow_weak", action="store_true")
        p.add_argument("-K", "--horizon", dest="K", type=int)
        p.add_argument("--level", type=int)
        p.add_argument("--stage", type=int)
        p.add_argument("--mesh", type=int)
        p.add_argument("--epsilon", type=float)
        p.add_argument("--set", action="append", metavar="KEY=VALUE")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return run(build_config(args))
    except IoFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ConfigParseError, PreconditionError, JuliaError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
