import argparse
import csv
import io
import json
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

from cfk import CfkError, CfkModel, genus, hf_rank, hfk_ranks, load_model, mirror
from rational import RationalError, assemble_and_rank, four_maps, normalize_blocks, xz_ranks
from surgery import (
    InvalidSurgery,
    NotSimple,
    RankReport,
    SurgeryError,
    SurgerySpec,
    cone21_report,
    cone22_report,
    hf_surgery_rank,
    simple_y_rank,
)
from verify import Verdict, VerifyError, corpus_run, is_simple, verify_file


FORMATS = ("text", "json", "csv")
SURGERY_ROUTES = ("both", "cone21", "combinatorial23", "closed_form")


class UsageError(ValueError):
    pass


def resolve_model_path(raw: str) -> Path:
    path = Path(raw)
    if not path.exists() and path.with_suffix(".json").exists():
        return path.with_suffix(".json")
    if not path.exists():
        raise UsageError(f"model file not found: {raw}")
    return path


def _model(raw: str) -> CfkModel:
    return load_model(resolve_model_path(raw))


def _value(value: Any) -> str:
    if isinstance(value, (dict, list)):
        return json.dumps(value, sort_keys=True, separators=(",", ":"))
    if value is None:
        return ""
    return str(value)


def emit_rows(rows: List[Dict[str, Any]], fmt: str) -> str:
    if fmt == "json":
        return json.dumps(rows, sort_keys=True, indent=2, ensure_ascii=False) + "\n"
    if fmt == "csv":
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        header = list(rows[0]) if rows else []
        writer.writerow(header)
        for row in rows:
            writer.writerow([_value(row.get(key)) for key in header])
        return buffer.getvalue()
    blocks = []
    for row in rows:
        width = max((len(key) for key in row), default=0)
        blocks.append("\n".join(f"{key.ljust(width)}  {_value(value)}" for key, value in row.items()))
    return "\n\n".join(blocks) + ("\n" if blocks else "")


def emit_report(verdicts: Sequence[Verdict], fmt: str) -> str:
    if fmt == "json":
        return json.dumps([v.to_dict() for v in verdicts], sort_keys=True, indent=2, ensure_ascii=False) + "\n"
    if fmt == "csv":
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(["model", "check", "passed", "lhs", "rhs"])
        for verdict in verdicts:
            for check in verdict.checks:
                writer.writerow([verdict.model, check.check_id, str(check.passed).lower(), _value(check.lhs), _value(check.rhs)])
        return buffer.getvalue()
    lines = []
    for verdict in verdicts:
        lines.append(f"{verdict.model}: {'PASS' if verdict.overall else 'FAIL'} ({len(verdict.checks)} checks)")
        for check in verdict.checks:
            mark = "ok" if check.passed else "FAIL"
            detail = "" if check.passed else f" lhs={_value(check.lhs)} rhs={_value(check.rhs)}"
            lines.append(f"  [{mark}] {check.check_id}{detail}")
    return "\n".join(lines) + ("\n" if lines else "")


# --------------------------------------------------------------
# verbs
# --------------------------------------------------------------
def cmd_validate(args: argparse.Namespace) -> tuple[int, str]:
    rows = []
    for raw in args.models:
        c = _model(raw)
        rows.append(
            {
                "model": c.name,
                "generators": len(c.generators),
                "arrows": len(c.arrows),
                "flip": c.flip.kind,
                "status": "valid",
            }
        )
    return 0, emit_rows(rows, args.format)


def cmd_ranks(args: argparse.Namespace) -> tuple[int, str]:
    c = _model(args.model)
    hfk = hfk_ranks(c)
    row = {
        "model": c.name,
        "genus": genus(c),
        "hf": hf_rank(c),
        "hfk": {str(s): v for s, v in sorted(hfk.items(), reverse=True)},
        "hfk_total": sum(hfk.values()),
        "simple": is_simple(c),
    }
    return 0, emit_rows([row], args.format)


def _oriented(c: CfkModel, p: int) -> tuple[CfkModel, int]:
    # -p/q surgery on K is p/q surgery on the mirror with orientation reversed
    return (mirror(c), -p) if p < 0 else (c, p)


def cmd_surgery(args: argparse.Namespace) -> tuple[int, str]:
    c, p = _oriented(_model(args.model), args.p)
    spec = SurgerySpec(p, args.q)
    routes = ("cone21", "combinatorial23") if args.route == "both" else (args.route,)
    reports: List[RankReport] = []
    for route in routes:
        if route == "cone21":
            reports.append(cone21_report(c, spec, args.margin))
        elif route == "combinatorial23":
            reports.append(RankReport("combinatorial23", assemble_and_rank(c, spec)))
        else:
            reports.append(RankReport("closed_form", simple_y_rank(c, spec)))
    values = {report.route: report.total for report in reports}
    agree = len(set(values.values())) == 1
    row: Dict[str, Any] = {"model": c.name, "slope": f"{args.p}/{args.q}", **values}
    if len(reports) > 1:
        row["agree"] = agree
    return (0 if agree else 1), emit_rows([row], args.format)


def cmd_knot_surgery(args: argparse.Namespace) -> tuple[int, str]:
    c = _model(args.model)
    report = cone22_report(c, args.n, variant=args.variant)
    row: Dict[str, Any] = {
        "model": c.name,
        **report.details,
        "ranks": report.to_dict()["value"],
        "total": report.total,
    }
    code = 0
    if is_simple(c):
        hf = hf_surgery_rank(c, SurgerySpec(args.n, 1))
        row["hf_surgery"] = hf
        row["agree"] = hf == row["total"]
        code = 0 if row["agree"] else 1
    return code, emit_rows([row], args.format)


def cmd_blocks(args: argparse.Namespace) -> tuple[int, str]:
    c = _model(args.model)
    spec = SurgerySpec(args.p, args.q)
    maps, triple = four_maps(c)
    blocks = normalize_blocks(maps)
    report = xz_ranks(blocks, spec)
    row = {
        "model": c.name,
        "slope": spec.label,
        **triple.to_dict(),
        "r_phi": blocks.r_phi,
        "r_psibar": blocks.r_psibar,
        "blocks": {name: getattr(blocks, name).to_lists() for name in ("a", "b", "c", "d", "m", "n", "l", "k")},
        **report.to_dict(),
    }
    return 0, emit_rows([row], args.format)


def cmd_verify(args: argparse.Namespace) -> tuple[int, str]:
    target = Path(args.path)
    if target.is_dir():
        verdicts = corpus_run(target, args.pmax, args.qmax)
    else:
        verdicts = [verify_file(resolve_model_path(args.path), args.pmax, args.qmax)]
    code = 0 if all(v.overall for v in verdicts) else 1
    return code, emit_report(verdicts, args.format)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=FORMATS, default="text")

    parser = argparse.ArgumentParser(description="Heegaard Floer rank calculator for CFK models over GF(2).")
    verbs = parser.add_subparsers(dest="verb", required=True)

    validate = verbs.add_parser("validate", parents=[common], help="parse and validate model files")
    validate.add_argument("models", nargs="+")
    validate.set_defaults(handler=cmd_validate)

    ranks = verbs.add_parser("ranks", parents=[common], help="genus, HF-hat and knot Floer ranks")
    ranks.add_argument("model")
    ranks.set_defaults(handler=cmd_ranks)

    surgery = verbs.add_parser("surgery", parents=[common], help="rank of HF-hat of p/q surgery")
    surgery.add_argument("model")
    surgery.add_argument("-p", type=int, required=True)
    surgery.add_argument("-q", type=int, default=1)
    surgery.add_argument("--route", choices=SURGERY_ROUTES, default="both")
    surgery.add_argument("--margin", type=int, default=None)
    surgery.set_defaults(handler=cmd_surgery)

    knot = verbs.add_parser("knot-surgery", parents=[common], help="per-Spin^c ranks of the core of n-surgery")
    knot.add_argument("model")
    knot.add_argument("-n", type=int, required=True)
    knot.add_argument("--variant", choices=("quotient", "subcomplex"), default="quotient")
    knot.set_defaults(handler=cmd_knot_surgery)

    blocks = verbs.add_parser("blocks", parents=[common], help="block normal forms and x/z ranks")
    blocks.add_argument("model")
    blocks.add_argument("-p", type=int, default=1)
    blocks.add_argument("-q", type=int, default=1)
    blocks.set_defaults(handler=cmd_blocks)

    verify = verbs.add_parser("verify", parents=[common], help="run the verification suite")
    verify.add_argument("path")
    verify.add_argument("--pmax", type=int, default=4)
    verify.add_argument("--qmax", type=int, default=4)
    verify.set_defaults(handler=cmd_verify)
    return parser


def execute(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        code, report = args.handler(args)
    except (UsageError, CfkError, InvalidSurgery, NotSimple, OSError) as exc:
        print(f"[CLI][ERROR] {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    except (SurgeryError, RationalError, VerifyError) as exc:
        print(f"[CLI][FAIL] {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    sys.stdout.write(report)
    return code


def main() -> int:
    return execute(sys.argv[1:])


if __name__ == "__main__":
    sys.exit(main())
