"""Command-line front end: approximate / certify / dump.

Exit codes: 0 success, 1 input or construction error, 2 certification
failure (for `approximate` the artifact file is still written).
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .expr import BinOp, Const, DomainError, Expr, ParseError, differentiate, eval_grid, parse
from .fitting import InfeasibleBudgetError, RankDeficientError
from .functionals import QuadratureError
from .jsonio import format_number, read_artifact, write_artifact
from .pipeline import (
    ApproximationSpec,
    Artifact,
    CertificationFailure,
    CompactWindow,
    PipelineError,
    approximate,
    approximate_compact,
    certify,
)
from .stages import GlueDiscontinuityError, NonPositiveEnvelopeError, StageConsistencyError

__all__ = ["main", "main_entry", "load_spec_file"]

_SPEC_KEYS = {"function", "m", "epsilon", "K", "degree_cap", "mode", "grid_per_unit"}

_INPUT_ERRORS = (
    ParseError, ValueError, KeyError, TypeError, OSError, json.JSONDecodeError,
)
_RUN_ERRORS = (
    InfeasibleBudgetError, RankDeficientError, QuadratureError, DomainError,
    GlueDiscontinuityError, NonPositiveEnvelopeError, StageConsistencyError,
    PipelineError,
)


def _parse_function(raw) -> Expr:
    if isinstance(raw, str):
        return parse(raw)
    if isinstance(raw, dict) and set(raw) <= {"re", "im"} and "re" in raw:
        re_part = parse(raw["re"])
        if "im" in raw:
            im_part = parse(raw["im"])
            return BinOp("+", re_part, BinOp("*", Const(1j), im_part))
        return re_part
    raise ValueError('"function" must be a string or {"re": ..., "im": ...}')


def load_spec_file(path: str) -> ApproximationSpec:
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    if not isinstance(doc, dict):
        raise ValueError("spec file must be a JSON object")
    unknown = set(doc) - _SPEC_KEYS
    if unknown:
        raise ValueError(f"unknown spec keys: {sorted(unknown)}")
    if "function" not in doc or "m" not in doc:
        raise ValueError('spec file requires "function" and "m"')
    f = _parse_function(doc["function"])
    m = doc["m"]
    if not isinstance(m, int) or isinstance(m, bool):
        raise ValueError('"m" must be an integer')
    degree_cap = doc.get("degree_cap", 96)
    grid_per_unit = doc.get("grid_per_unit", 100)
    mode = doc.get("mode", "line")

    if mode == "line":
        if "epsilon" not in doc or "K" not in doc:
            raise ValueError('whole-line mode requires "epsilon" and "K"')
        eps = parse(doc["epsilon"])
        K = doc["K"]
        if not isinstance(K, int) or isinstance(K, bool):
            raise ValueError('"K" must be an integer')
        return ApproximationSpec(
            f=f, m=m, eps=eps, K=K, degree_cap=degree_cap, grid_per_unit=grid_per_unit,
        )
    if isinstance(mode, dict) and set(mode) == {"compact"}:
        win = mode["compact"]
        if not isinstance(win, dict) or set(win) != {"a", "b", "eps"}:
            raise ValueError('compact mode must be {"compact": {"a":..., "b":..., "eps":...}}')
        return ApproximationSpec(
            f=f, m=m, degree_cap=degree_cap, grid_per_unit=grid_per_unit,
            compact=CompactWindow(float(win["a"]), float(win["b"]), float(win["eps"])),
        )
    raise ValueError('"mode" must be "line" or {"compact": {...}}')


def _run_pipeline(spec: ApproximationSpec) -> Artifact:
    if spec.compact is None:
        return approximate(spec)
    c = spec.compact
    return approximate_compact(
        spec.f, c.a, c.b, c.eps, spec.m,
        degree_cap=spec.degree_cap, grid_per_unit=spec.grid_per_unit,
    )


def cmd_approximate(spec_path: str, out_path: str) -> int:
    try:
        spec = load_spec_file(spec_path)
    except _INPUT_ERRORS as exc:
        print(f"error: invalid spec: {exc}", file=sys.stderr)
        return 1
    try:
        artifact = _run_pipeline(spec)
    except CertificationFailure as exc:
        write_artifact(exc.artifact, out_path)
        print(f"certification failed: {exc}", file=sys.stderr)
        return 2
    except _RUN_ERRORS as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    write_artifact(artifact, out_path)
    return 0


def _print_certificate_table(cert) -> None:
    print(f"{'order':>5}  {'sup|f^(i)-g^(i)|':>20}  {'sup ratio':>14}  {'worst x':>12}")
    for o in cert.orders:
        print(
            f"{o.order:>5}  {format_number(o.sup_abs_error):>20}  "
            f"{format_number(o.sup_ratio):>14}  {format_number(o.worst_x):>12}"
        )
    print(f"max node residual:   {format_number(cert.max_node_residual())}")
    print(f"max moment residual: {format_number(cert.max_moment_residual())}")
    print(f"certificate: {'PASS' if cert.passed else 'FAIL'}")


def cmd_certify(artifact_path: str, spec_path: str) -> int:
    try:
        spec = load_spec_file(spec_path)
        raw = read_artifact(artifact_path)
        if raw["m"] != spec.m:
            raise ValueError(f"artifact/spec mismatch in m: {raw['m']} vs {spec.m}")
        expected_k = 0 if spec.compact is not None else spec.K
        if raw["K"] != expected_k:
            raise ValueError(f"artifact/spec mismatch in K: {raw['K']} vs {expected_k}")
        artifact = Artifact(
            g=raw["g"], taylor=raw["taylor"], m=raw["m"], K=raw["K"], stages=[], spec=spec,
        )
        cert = certify(artifact, spec, spec.grid_per_unit)
    except _INPUT_ERRORS + _RUN_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    _print_certificate_table(cert)
    return 0 if cert.passed else 2


def cmd_dump(artifact_path: str, spec_path: str, csv_path: str, deriv_order: int) -> int:
    try:
        spec = load_spec_file(spec_path)
        raw = read_artifact(artifact_path)
        if deriv_order < 0 or deriv_order > raw["m"]:
            raise ValueError(f"derivative order {deriv_order} outside 0..{raw['m']}")
        lo, hi = spec.domain
        xs = np.linspace(lo, hi, int(round((hi - lo) * spec.grid_per_unit)) + 1)
        f_i = spec.f
        g_i = raw["g"]
        for _ in range(deriv_order):
            f_i = differentiate(f_i)
            g_i = g_i.derivative()
        fv = eval_grid(f_i, xs)
        gv = g_i.eval_many(xs)
        if spec.compact is not None:
            eps_vals = np.full(xs.shape, spec.compact.eps)
        else:
            eps_vals = eval_grid(spec.eps, xs).real
        with open(csv_path, "w", encoding="utf-8") as fh:
            fh.write("x,f_re,f_im,g_re,g_im,eps,abs_err\n")
            for x, f, g, e in zip(xs, fv, gv, eps_vals):
                row = (x, f.real, f.imag, g.real, g.imag, e, abs(f - g))
                fh.write(",".join(format_number(v) for v in row) + "\n")
    except _INPUT_ERRORS + _RUN_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="entirefit",
        description="Simultaneous polynomial approximation of a function and its derivatives",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_approx = sub.add_parser("approximate", help="run the pipeline on a spec file")
    p_approx.add_argument("--spec", required=True)
    p_approx.add_argument("--out", required=True)

    p_cert = sub.add_parser("certify", help="re-certify an artifact against a spec file")
    p_cert.add_argument("--artifact", required=True)
    p_cert.add_argument("--spec", required=True)

    p_dump = sub.add_parser("dump", help="dump plot-ready CSV samples of one derivative order")
    p_dump.add_argument("--artifact", required=True)
    p_dump.add_argument("--spec", required=True)
    p_dump.add_argument("--csv", required=True)
    p_dump.add_argument("--deriv", required=True, type=int)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "approximate":
        return cmd_approximate(args.spec, args.out)
    if args.command == "certify":
        return cmd_certify(args.artifact, args.spec)
    return cmd_dump(args.artifact, args.spec, args.csv, args.deriv)


def main_entry() -> None:
    sys.exit(main())
