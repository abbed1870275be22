"""Text and JSON rendering of pricing results, polytopes and audits."""

from __future__ import annotations

from fractions import Fraction
from math import lcm
from typing import Sequence

from superhedge.lp import Row
from superhedge.market import ArbitrageResult, CheckReport, Market, TradingStrategy
from superhedge.polyhedra import HPolytope
from superhedge.pricing import DualSolution, MeasurePolytope, PriceResult, PricingReport
from superhedge.rational import format_exact, format_rational
from superhedge.scenario import Measure


def render_row(variables: Sequence[str], row: Row) -> str:
    """One inequality with integer coefficients, e.g. ``4*q2 <= 0``."""
    coeffs, rel, rhs = row.coefficients, row.relation, row.rhs
    scale = lcm(*(Fraction(c).denominator for c in (*coeffs, rhs)))
    ints = [int(c * scale) for c in coeffs]
    rhs = rhs * scale
    if rel == "=" and next((c for c in ints if c), 0) < 0:
        ints, rhs = [-c for c in ints], -rhs
    terms = []
    for c, name in zip(ints, variables):
        if not c:
            continue
        mag = abs(c)
        body = name if mag == 1 else f"{mag}*{name}"
        if not terms:
            terms.append(body if c > 0 else f"-{body}")
        else:
            terms.append(f"+ {body}" if c > 0 else f"- {body}")
    lhs = " ".join(terms) if terms else "0"
    return f"{lhs} {rel} {format_rational(rhs)}"


def render_polytope(p: HPolytope | MeasurePolytope) -> list[str]:
    poly = p.description if isinstance(p, MeasurePolytope) else p
    return [render_row(poly.variables, row) for row in poly.rows]


def _table(headers: Sequence[str], rows: Sequence[Sequence[str]]) -> list[str]:
    widths = [max(len(str(x)) for x in col) for col in zip(headers, *rows)]
    fmt = "  ".join(f"{{:<{w}}}" for w in widths)
    lines = [fmt.format(*headers).rstrip(), fmt.format(*("-" * w for w in widths)).rstrip()]
    lines += [fmt.format(*map(str, r)).rstrip() for r in rows]
    return lines


def _value(v: Fraction | None) -> str:
    return "-" if v is None else format_exact(v)


def format_report(obj, market: Market | None = None) -> str:
    """Human-readable rendering; byte-stable for identical inputs."""
    lines: list[str] = []
    if isinstance(obj, (HPolytope, MeasurePolytope)):
        lines = render_polytope(obj)
    elif isinstance(obj, CheckReport):
        rows = [(c.name, "pass" if c.passed else "FAIL", "; ".join(c.witnesses)) for c in obj.checks]
        lines = _table(("check", "result", "witnesses"), rows)
    elif isinstance(obj, ArbitrageResult):
        mode = "respecting short-sale constraints" if obj.respect_constraints else "ignoring short-sale constraints"
        lines.append(f"arbitrage search ({mode}): {'FOUND' if obj.found else 'none'}")
        lines.append(f"optimal expected terminal value: {format_exact(obj.expected_gain)}")
        if obj.found and market is not None:
            lines += _strategy_lines(market, obj.strategy)
            lines.append("terminal values:")
            lines += [f"  {w}: {format_exact(v)}" for w, v in obj.terminal_gains.items()]
    elif isinstance(obj, PricingReport):
        lines = _pricing_lines(obj)
    elif isinstance(obj, (list, tuple)) and all(isinstance(r, PricingReport) for r in obj):
        for k, rep in enumerate(obj):
            if k:
                lines.append("")
            lines += _pricing_lines(rep)
    elif isinstance(obj, PriceResult):
        lines = [f"{obj.method}: {obj.status} {_value(obj.value)}"]
    elif isinstance(obj, Fraction):
        lines = [format_exact(obj)]
    else:
        raise TypeError(f"cannot format {type(obj).__name__}")
    return "\n".join(lines) + "\n"


def _pricing_lines(rep: PricingReport) -> list[str]:
    lines = [f"claim {rep.claim}: {rep.status}"]
    if rep.status == "arbitrage":
        lines.append("  arbitrage detected: no superreplication price")
        return lines
    rows = [(res.method, res.status, _value(res.value)) for res in (rep.primal, rep.dual_lp, rep.measures)]
    lines += ["  " + line for line in _table(("method", "status", "value"), rows)]
    for label, gap in rep.gaps.items():
        lines.append(f"  gap {label}: {format_exact(gap)}")
    for name, ok in rep.checks.items():
        lines.append(f"  check {name}: {'pass' if ok else 'FAIL'}")
    return lines


def _strategy_lines(m: Market, h: TradingStrategy) -> list[str]:
    rows = []
    for t in range(m.horizon):
        for k, block in enumerate(m.seller_filtration[t].ordered_blocks(m.scenarios)):
            for i, asset in enumerate(m.assets):
                rows.append((str(t), "{" + ",".join(block) + "}", asset, format_exact(h.holdings.get((i, t, k), 0))))
    return _table(("t", "atom", "asset", "holding"), rows)


# -- JSON ---------------------------------------------------------------------


def strategy_json(m: Market, h: TradingStrategy) -> list[dict]:
    out = []
    for t in range(m.horizon):
        for k, block in enumerate(m.seller_filtration[t].ordered_blocks(m.scenarios)):
            for i, asset in enumerate(m.assets):
                out.append({"t": t, "atom": list(block), "asset": asset,
                            "holding": format_rational(h.holdings.get((i, t, k), 0))})
    return out


def certificate_json(m: Market, cert) -> object:
    if cert is None:
        return None
    if isinstance(cert, TradingStrategy):
        return {"strategy": strategy_json(m, cert)}
    if isinstance(cert, DualSolution):
        return {
            "y1": {w: format_rational(v) for w, v in cert.y1.items()},
            "y2": {f"{t},{w}": format_rational(v) for (t, w), v in cert.y2.items()},
        }
    if isinstance(cert, Measure):
        return {"measure": {w: format_rational(v) for w, v in cert.weights.items()}}
    raise TypeError(type(cert).__name__)


def price_result_json(m: Market, res: PriceResult) -> dict:
    return {
        "method": res.method,
        "status": res.status,
        "value": None if res.value is None else format_rational(res.value),
        "certificate": certificate_json(m, res.certificate),
    }


def pricing_report_json(m: Market, rep: PricingReport) -> dict:
    out = {"claim": rep.claim, "status": rep.status}
    if rep.status == "arbitrage":
        out["arbitrage"] = arbitrage_json(m, rep.arbitrage)
        return out
    out["results"] = {res.method: price_result_json(m, res) for res in (rep.primal, rep.dual_lp, rep.measures)}
    out["gaps"] = {k: format_rational(v) for k, v in rep.gaps.items()}
    out["checks"] = dict(rep.checks)
    return out


def arbitrage_json(m: Market, res: ArbitrageResult) -> dict:
    out = {
        "found": res.found,
        "respect_constraints": res.respect_constraints,
        "expected_terminal_value": format_rational(res.expected_gain),
    }
    if res.found:
        out["strategy"] = strategy_json(m, res.strategy)
        out["terminal_values"] = {w: format_rational(v) for w, v in res.terminal_gains.items()}
    return out


def check_report_json(report: CheckReport) -> dict:
    return {
        "passed": report.passed,
        "checks": [{"name": c.name, "passed": c.passed, "witnesses": c.witnesses} for c in report.checks],
    }


def polytope_json(p: HPolytope | MeasurePolytope) -> dict:
    poly = p.description if isinstance(p, MeasurePolytope) else p
    return {
        "variables": list(poly.variables),
        "rows": [
            {"coefficients": [format_rational(c) for c in row.coefficients], "relation": row.relation,
             "rhs": format_rational(row.rhs), "text": render_row(poly.variables, row)}
            for row in poly.rows
        ],
    }
