"""Command-line front end.

Exit codes: 0 success, 1 validation failure, 2 analytic anomaly (arbitrage where
a price was requested, infeasible or unbounded problem), 3 parse or usage error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Sequence, TextIO

from superhedge.document import parse_market_document
from superhedge.errors import DocumentParseError, InputError, MarketValidationError
from superhedge.market import arbitrage_search, validate_market
from superhedge.polyhedra import fourier_motzkin_project
from superhedge.pricing import build_measure_polytope, full_report, price
from superhedge.rational import format_exact, format_rational
from superhedge import report as fmt

EXIT_OK, EXIT_INVALID, EXIT_ANOMALY, EXIT_PARSE = 0, 1, 2, 3
METHOD_ALIASES = {"primal": "primal", "dual": "dual_lp", "measures": "measures"}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="superhedge", description="Exact seller's superreplication pricing.")
    parser.add_argument("--format", choices=("both", "json", "table"), default="both",
                        help="what to print on stdout (default: JSON document, then table)")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("validate", help="check the market invariants")
    p.add_argument("file")

    p = sub.add_parser("price", help="price one claim")
    p.add_argument("file")
    p.add_argument("--claim", required=True)
    p.add_argument("--method", choices=("primal", "dual", "measures", "all"), default="all")

    p = sub.add_parser("polytope", help="print the (super)martingale measure polytope")
    p.add_argument("file")
    p.add_argument("--project", nargs="+", metavar="VAR", help="keep only these variables (Fourier-Motzkin)")
    p.add_argument("--deep-redundancy", action="store_true", help="prune LP-redundant rows after projecting")

    p = sub.add_parser("arbitrage", help="search for a seller-adapted arbitrage")
    p.add_argument("file")
    p.add_argument("--unconstrained", action="store_true", help="ignore the short-sale restrictions")

    p = sub.add_parser("report", help="price every claim by all methods and cross-check")
    p.add_argument("file")
    return parser


def _emit(out: TextIO, mode: str, document: dict, table: str) -> None:
    if mode in ("both", "json"):
        out.write(json.dumps(document, indent=2, ensure_ascii=False) + "\n")
    if mode == "both":
        out.write("---\n")
    if mode in ("both", "table"):
        out.write(table)


def run_command(argv: Sequence[str], stdout: TextIO | None = None, stderr: TextIO | None = None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    try:
        args = build_parser().parse_args(list(argv))
    except UsageError as exc:
        stderr.write(f"usage error: {exc}\n")
        return EXIT_PARSE
    except SystemExit as exc:  # --help
        return EXIT_OK if not exc.code else EXIT_PARSE

    try:
        text = Path(args.file).read_text(encoding="utf-8")
    except OSError as exc:
        stderr.write(f"parse error: cannot read {args.file}: {exc.strerror}\n")
        return EXIT_PARSE

    try:
        return _dispatch(args, text, stdout, stderr)
    except MarketValidationError as exc:
        stderr.write(f"validation error: {exc}\n")
        for failure in exc.failures:
            stderr.write(f"  {failure}\n")
        return EXIT_INVALID
    except DocumentParseError as exc:
        kind = "value error" if type(exc).__name__ == "DocumentValueError" else "parse error"
        stderr.write(f"{kind}: {exc}\n")
        return EXIT_PARSE
    except InputError as exc:
        stderr.write(f"usage error: {exc}\n")
        return EXIT_PARSE


def _dispatch(args, text: str, stdout: TextIO, stderr: TextIO) -> int:
    if args.command == "validate":
        market, claims = parse_market_document(text, validate=False)
        report = validate_market(market)
        doc = {"command": "validate", **fmt.check_report_json(report)}
        _emit(stdout, args.format, doc, fmt.format_report(report))
        if not report.passed:
            for check in report.failures():
                stderr.write(f"failed: {check.name}\n")
            return EXIT_INVALID
        return EXIT_OK

    market, claims = parse_market_document(text)

    if args.command == "price":
        if args.claim not in claims:
            raise InputError(f"unknown claim {args.claim!r}; available: {sorted(claims)}")
        claim = claims[args.claim]
        methods = list(METHOD_ALIASES.values()) if args.method == "all" else [METHOD_ALIASES[args.method]]
        arb = arbitrage_search(market, respect_constraints=True)
        results = [price(market, claim, m, arbitrage=arb) for m in methods]
        doc = {"command": "price", "claim": args.claim,
               "results": {r.method: fmt.price_result_json(market, r) for r in results}}
        lines = [f"claim {args.claim}"] + [f"  {r.method}: {r.status} {fmt._value(r.value)}" for r in results]
        by_method = {r.method: r for r in results}
        if arb.found:
            doc["arbitrage"] = fmt.arbitrage_json(market, arb)
            lines.append("  arbitrage detected: no superreplication price")
            _emit(stdout, args.format, doc, "\n".join(lines) + "\n")
            stderr.write("arbitrage detected\n")
            return EXIT_ANOMALY
        if "primal" in by_method and "dual_lp" in by_method:
            p, d = by_method["primal"], by_method["dual_lp"]
            equal = p.status == d.status == "optimal" and p.value == d.value
            doc["primal_equals_dual"] = equal
            lines.append(f"  primal == dual: {'yes' if equal else 'NO'}")
        _emit(stdout, args.format, doc, "\n".join(lines) + "\n")
        required = ["primal", "dual_lp"] if args.method == "all" else methods
        bad = [m for m in required if by_method[m].status != "optimal"]
        if bad:
            stderr.write(f"non-optimal outcome for {', '.join(bad)}\n")
            return EXIT_ANOMALY
        return EXIT_OK

    if args.command == "polytope":
        poly = build_measure_polytope(market)
        description = poly.description
        if args.project:
            unknown = [v for v in args.project if v not in description.variables]
            if unknown:
                raise InputError(f"unknown polytope variable(s) {unknown}")
            drop = [v for v in description.variables if v not in args.project]
            description = fourier_motzkin_project(description, drop, deep_redundancy=args.deep_redundancy)
        doc = {"command": "polytope", "scenario_variables": dict(poly.variable_of), **fmt.polytope_json(description)}
        _emit(stdout, args.format, doc, fmt.format_report(description))
        return EXIT_OK

    if args.command == "arbitrage":
        res = arbitrage_search(market, respect_constraints=not args.unconstrained)
        doc = {"command": "arbitrage", **fmt.arbitrage_json(market, res)}
        _emit(stdout, args.format, doc, fmt.format_report(res, market))
        return EXIT_OK

    if args.command == "report":
        reports = full_report(market, claims.values())
        doc = {"command": "report", "claims": [fmt.pricing_report_json(market, r) for r in reports]}
        _emit(stdout, args.format, doc, fmt.format_report(reports) if reports else "no claims\n")
        if any(r.status == "arbitrage" for r in reports):
            stderr.write("arbitrage detected\n")
            return EXIT_ANOMALY
        return EXIT_OK

    raise UsageError(f"unknown command {args.command!r}")  # pragma: no cover


def main() -> None:
    sys.exit(run_command(sys.argv[1:]))


if __name__ == "__main__":
    main()
