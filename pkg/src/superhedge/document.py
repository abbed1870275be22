"""Reading and writing market documents (JSON, rationals as strings)."""

from __future__ import annotations

import json
from fractions import Fraction
from functools import lru_cache
from importlib import resources
from typing import Mapping

import jsonschema

from superhedge.errors import DocumentParseError, DocumentValueError, InputError, MarketValidationError
from superhedge.market import Claim, Market, validate_market
from superhedge.rational import format_rational, parse_rational
from superhedge.scenario import Filtration, Partition, Process, ScenarioSpace, level_set_partitions


@lru_cache(maxsize=1)
def market_schema() -> dict:
    text = resources.files("superhedge").joinpath("schema/market.schema.json").read_text(encoding="utf-8")
    return json.loads(text)


def _rational(value, where: str) -> Fraction:
    if isinstance(value, int) and not isinstance(value, bool):
        return Fraction(value)
    try:
        return parse_rational(value)
    except ZeroDivisionError:
        raise DocumentValueError("zero denominator", where) from None
    except (ValueError, TypeError):
        raise DocumentValueError(f"not a rational: {value!r}", where) from None


def _path_process(table: Mapping, scenarios, horizon: int, where: str) -> Process:
    times = sorted(int(t) for t in table)
    if times != list(range(horizon + 1)):
        raise DocumentParseError(f"expected times 0..{horizon}, got {times}", where)
    values = {}
    for t_key, row in table.items():
        t = int(t_key)
        if set(row) != set(scenarios):
            missing = sorted(set(scenarios) - set(row))
            extra = sorted(set(row) - set(scenarios))
            raise DocumentParseError(f"scenario keys mismatch (missing {missing}, unknown {extra})", f"{where}.{t_key}")
        for w, v in row.items():
            values[(t, w)] = _rational(v, f"{where}.{t_key}.{w}")
    return Process(horizon, tuple(scenarios), values)


def _explicit_filtration(spec: Mapping, scenarios, horizon: int, where: str) -> Filtration:
    by_time = {int(t): blocks for t, blocks in spec.items()}
    if sorted(by_time) != list(range(horizon + 1)) or len(by_time) != len(spec):
        raise DocumentParseError(f"expected partitions for times 0..{horizon}, got {sorted(spec)}", where)
    parts = []
    for t in range(horizon + 1):
        blocks = by_time[t]
        unknown = sorted({w for b in blocks for w in b} - set(scenarios))
        if unknown:
            raise DocumentParseError(f"unknown scenarios {unknown}", f"{where}.{t}")
        try:
            part = Partition(blocks)
        except InputError as exc:
            raise MarketValidationError(f"{where}.{t}: {exc}", [str(exc)]) from None
        if part.universe != set(scenarios):
            raise MarketValidationError(f"{where}.{t}: blocks do not cover every scenario", ["partition_covers"])
        parts.append(part)
    return _filtration(parts, where)


def _filtration(parts, where: str) -> Filtration:
    try:
        return Filtration(tuple(parts))
    except InputError as exc:
        raise MarketValidationError(f"{where}: {exc}", [str(exc)]) from None


def parse_market_document(text: str, validate: bool = True) -> tuple[Market, dict[str, Claim]]:
    """Parse a market document into a Market and its named claims.

    With ``validate`` the market invariants are enforced and a failure raises
    :class:`MarketValidationError`; without it the caller gets the market as
    written (filtration structure is always enforced).
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DocumentParseError(exc.msg, f"line {exc.lineno}, column {exc.colno}") from None
    try:
        jsonschema.validate(doc, market_schema())
    except jsonschema.ValidationError as exc:
        where = "$" + "".join(f"[{p!r}]" if isinstance(p, int) else f".{p}" for p in exc.absolute_path)
        raise DocumentParseError(exc.message, where) from None

    scenarios = tuple(doc["scenarios"])
    horizon = doc["horizon"]
    probs_raw = doc["probabilities"]
    if set(probs_raw) != set(scenarios):
        raise DocumentParseError("probabilities must list exactly the scenarios", "$.probabilities")
    probs = {w: _rational(v, f"$.probabilities.{w}") for w, v in probs_raw.items()}
    for w, p in probs.items():
        if p <= 0:
            raise DocumentValueError(f"probability must be strictly positive, got {p}", f"$.probabilities.{w}")
    total = sum(probs.values(), Fraction(0))
    if total != 1:
        raise MarketValidationError(f"probabilities sum to {total}, not 1", [f"probabilities_sum = {total}"])
    space = ScenarioSpace(scenarios, probs)

    names = [a["name"] for a in doc["assets"]]
    if len(set(names)) != len(names):
        raise DocumentParseError("asset names must be distinct", "$.assets")
    prices = tuple(
        _path_process(a["prices"], scenarios, horizon, f"$.assets[{k}].prices") for k, a in enumerate(doc["assets"])
    )
    drivers = [
        _path_process(d["values"], scenarios, horizon, f"$.drivers[{k}].values")
        for k, d in enumerate(doc.get("drivers", []))
    ]

    full_spec = doc.get("full_filtration", "generated")
    if full_spec == "generated":
        full = _filtration(level_set_partitions(drivers + list(prices)), "$.full_filtration")
    else:
        full = _explicit_filtration(full_spec, scenarios, horizon, "$.full_filtration")
    seller_spec = doc.get("seller_filtration", "price-generated")
    if seller_spec == "price-generated":
        seller = _filtration(level_set_partitions(list(prices)), "$.seller_filtration")
    else:
        seller = _explicit_filtration(seller_spec, scenarios, horizon, "$.seller_filtration")

    restricted = set()
    for name in doc.get("no_short", []):
        if name not in names:
            raise DocumentParseError(f"unknown asset {name!r}", "$.no_short")
        restricted.add(names.index(name))

    market = Market(space, tuple(names), prices, full, seller, frozenset(restricted))

    claims: dict[str, Claim] = {}
    for cname, payoff in doc.get("claims", {}).items():
        where = f"$.claims.{cname}"
        if set(payoff) != set(scenarios):
            raise DocumentParseError("claim must give a payoff for every scenario", where)
        values = {w: _rational(payoff[w], f"{where}.{w}") for w in scenarios}
        negative = [w for w, v in values.items() if v < 0]
        if negative:
            raise DocumentValueError("claim payoff must be nonnegative", f"{where}.{negative[0]}")
        claims[cname] = Claim(values, cname)

    if validate:
        report = validate_market(market)
        if not report.passed:
            failures = [f"{c.name}: {'; '.join(c.witnesses)}" for c in report.failures()]
            raise MarketValidationError("market violates model invariants", failures)
    return market, claims


def market_to_document(m: Market, claims: Mapping[str, Claim] | None = None) -> dict:
    """Fully explicit document (explicit filtrations, no drivers)."""
    scen = m.scenarios

    def path(proc: Process) -> dict:
        return {str(t): {w: format_rational(proc(t, w)) for w in scen} for t in range(proc.horizon + 1)}

    def parts(filt: Filtration) -> dict:
        return {str(t): [list(b) for b in filt[t].ordered_blocks(scen)] for t in range(len(filt))}

    doc = {
        "scenarios": list(scen),
        "probabilities": {w: format_rational(m.space.prob(w)) for w in scen},
        "horizon": m.horizon,
        "assets": [{"name": a, "prices": path(p)} for a, p in zip(m.assets, m.prices)],
        "full_filtration": parts(m.full_filtration),
        "seller_filtration": parts(m.seller_filtration),
        "no_short": [m.assets[i] for i in sorted(m.short_restricted)],
    }
    if claims:
        doc["claims"] = {name: {w: format_rational(c[w]) for w in scen} for name, c in claims.items()}
    return doc


def serialize_market_document(m: Market, claims: Mapping[str, Claim] | None = None) -> str:
    return json.dumps(market_to_document(m, claims), indent=2, ensure_ascii=False) + "\n"
