"""Command line entry point: ``lorentz-verify <subcommand> ...``.

Every subcommand assembles a scenario document and hands it to the runner,
so its output has the same report schema as ``run``.  Exit status: 0 when
all checks pass, 1 when any fails, 2 on configuration or usage errors.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys

from .errors import ConfigError
from .runner import emit_report, list_builtins, run_scenario


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(2)


def _common(p):
    p.add_argument("--tol", type=float, default=None, help="override every check tolerance")
    p.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    p.add_argument("--format", choices=("json", "text"), default="text")
    p.add_argument("--out", default=None, help="write the report to this path")


def _model(p, default="de-sitter-grw"):
    p.add_argument("--model", default=default)
    p.add_argument("--n", type=int, default=2, help="fiber dimension")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="lorentz-verify", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="cmd", required=True, parser_class=_Parser)

    p = sub.add_parser("verify-ambient", help="curvature and connection checks of a model")
    _model(p)
    p.add_argument("--c", type=float, default=None, help="expected sectional curvature")
    p.add_argument("--npts", type=int, default=100)
    _common(p)

    p = sub.add_parser("verify-conformal", help="classify a vector field")
    _model(p)
    p.add_argument("--field", default="canonical", help="canonical, position, desitter-W or time-scaled:<warp>")
    p.add_argument("--label", default=None, help="expected classification")
    p.add_argument("--psi-of-t", default=None, help="expected factor as a named function of t")
    p.add_argument("--psi", type=float, default=None, help="expected constant factor")
    _common(p)

    p = sub.add_parser("curvature", help="slice shape operator and support-function identities")
    _model(p)
    p.add_argument("--t0", type=float, default=1.0)
    _common(p)

    p = sub.add_parser("flow", help="flow a leaf circle along the canonical field")
    _model(p)
    p.add_argument("--t0", type=float, default=1.0)
    p.add_argument("--theta", type=float, default=math.pi / 2)
    p.add_argument("--eps", type=float, default=0.4)
    _common(p)

    p = sub.add_parser("stability", help="strong r-stability probe on a GRW slice")
    _model(p)
    p.add_argument("--t0", type=float, default=1.0)
    p.add_argument("--r", type=int, default=1)
    p.add_argument("--expect", default=None)
    _common(p)

    p = sub.add_parser("run", help="run a scenario file or built-in suite")
    p.add_argument("scenario")
    _common(p)

    p = sub.add_parser("list", help="list built-in models, fields, immersions, checks and suites")
    p.add_argument("--format", choices=("json", "text"), default="text")
    p.add_argument("--out", default=None)
    return ap


def _field_desc(spec: str) -> dict:
    if spec.startswith("time-scaled:"):
        return {"kind": "time-scaled", "warp": spec.split(":", 1)[1]}
    return {"kind": spec}


def scenario_from_args(a) -> dict:
    amb = {"model": a.model, "n": a.n}
    sc = {"schema_version": 1, "id": a.cmd, "seed": 0, "ambient": amb, "fields": [], "immersions": []}
    if a.cmd == "verify-ambient":
        params = {"npts": a.npts}
        if a.c is not None:
            params["c"] = a.c
        sc["checks"] = [{"name": "sectional_curvature", "params": params, "tol": 1e-7},
                        {"name": "levi_civita", "params": {"npts": 20}, "tol": 1e-10}]
        if a.model.endswith("-grw"):
            sc["checks"].append({"name": "warp_curvature", "params": {k: v for k, v in params.items() if k == "c"},
                                 "tol": 1e-10})
    elif a.cmd == "verify-conformal":
        sc["fields"] = [dict(name="V", **_field_desc(a.field))]
        params = {"field": "V"}
        for key, val in (("label", a.label), ("psi_of_t", a.psi_of_t), ("psi", a.psi)):
            if val is not None:
                params[key] = val
        sc["checks"] = [{"name": "conformal_certificate", "params": params, "tol": 1e-8}]
    elif a.cmd == "curvature":
        sc["fields"] = [{"name": "V", "kind": "canonical"}]
        sc["immersions"] = [{"name": "slice", "kind": "slice", "t0": a.t0, "pad": 0.4}]
        sc["checks"] = [{"name": "slice_shape_operator", "params": {"t0": [a.t0]}, "tol": 1e-8},
                        {"name": "support_identities", "params": {"immersion": "slice", "field": "V"}, "tol": 1e-5}]
    elif a.cmd == "flow":
        sc["fields"] = [{"name": "V", "kind": "canonical"}]
        sc["immersions"] = [{"name": "base", "kind": "leaf-circle", "field": "V", "t0": a.t0, "theta": a.theta}]
        sc["checks"] = [{"name": "simons_flow", "params": {"base": "base", "field": "V", "eps": a.eps}, "tol": 1e-5}]
    elif a.cmd == "stability":
        sc["fields"] = [{"name": "V", "kind": "canonical"}]
        sc["immersions"] = [{"name": "slice", "kind": "slice", "t0": a.t0}]
        params = {"immersion": "slice", "field": "V", "r": a.r}
        if a.expect:
            params["expect"] = a.expect
        sc["checks"] = [{"name": "stability_probe", "params": params, "tol": 1e-8}]
    return sc


def _write(text: str, out):
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        a = build_parser().parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        if a.cmd == "list":
            cat = list_builtins()
            if a.format == "json":
                text = json.dumps(cat, indent=2) + "\n"
            else:
                text = "".join(f"{sec}:\n" + "".join(f"  {k:28s} {d}\n" for k, d in rows)
                               for sec, rows in cat.items())
            _write(text, a.out)
            return 0
        source = a.scenario if a.cmd == "run" else scenario_from_args(a)
        report = run_scenario(source, seed=a.seed, tol=a.tol)
        _write(emit_report(report, a.format), a.out)
        return report.exit_code
    except ConfigError as e:
        sys.stderr.write(f"configuration error: {type(e).__name__}: {e}\n")
        return 2
