"""Seller's superreplication price: primal LP, dual LP and the measure-polytope problem.

The three problems are built from the same market data:

* primal: minimise the initial capital of a seller-adapted, self-financing
  portfolio that dominates the claim, with nonnegative holdings in I1;
* dual: maximise ``E[y1 B]`` over a density ``y1 >= 0`` and free intermediate
  multipliers ``y2^t``, one aggregated constraint per asset and seller atom;
* measures: maximise ``E_Q[B]`` over the probability vectors under which every
  asset is a (super)martingale on the seller's atoms.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, NamedTuple, Sequence

from superhedge.errors import DegenerateDualError, InputError
from superhedge.lp import LinearProgram, LpBuilder, LpOutcome, Row, solve_lp, verify_certificate
from superhedge.market import (
    ArbitrageResult,
    Claim,
    Market,
    StrategyVariables,
    TradingStrategy,
    arbitrage_search,
    check_claim,
    require_valid,
    strategy_audit,
)
from superhedge.polyhedra import HPolytope
from superhedge.scenario import Measure, conditional_expectation

ZERO = Fraction(0)
METHODS = ("primal", "dual_lp", "measures")


# -- primal -------------------------------------------------------------------


@dataclass(frozen=True)
class PrimalProblem:
    lp: LinearProgram
    variables: StrategyVariables

    def strategy(self, outcome: LpOutcome) -> TradingStrategy:
        return self.variables.decode(outcome.solution_map(self.lp))


def build_primal_lp(m: Market, b: Claim) -> PrimalProblem:
    require_valid(m)
    check_claim(m, b)
    T, scen = m.horizon, m.scenarios
    builder = LpBuilder("min")
    builder.add_variable("v", nonnegative=False, cost=1)
    hv = StrategyVariables(m, builder, nonnegative=m.short_restricted)
    for w in scen:
        builder.add_row(hv.value(T, T - 1, w), ">=", b[w], f"superreplication[{w}]")
    for t, w, coeffs in hv.self_financing_rows():
        builder.add_row(coeffs, "=", 0, f"self_financing[t={t},{w}]")
    initial = hv.value(0, 0, scen[0])
    builder.add_row({**initial, "v": -1}, "<=", 0, "budget")
    builder.add_row(initial, ">=", 0, "initial_cost_nonnegative")
    return PrimalProblem(builder.build(), hv)


# -- dual ---------------------------------------------------------------------


@dataclass(frozen=True)
class DualSolution:
    y1: Mapping[str, Fraction]
    y2: Mapping[tuple[int, str], Fraction] = field(default_factory=dict)

    def __post_init__(self):
        if any(v < 0 for v in self.y1.values()):
            raise InputError("y1 must be nonnegative")


@dataclass(frozen=True)
class DualProblem:
    lp: LinearProgram
    y1_names: Mapping[str, str]
    y2_names: Mapping[tuple[int, str], str]

    def solution(self, outcome: LpOutcome) -> DualSolution:
        values = outcome.solution_map(self.lp)
        return DualSolution(
            {w: values[n] for w, n in self.y1_names.items()},
            {key: values[n] for key, n in self.y2_names.items()},
        )

    def assignment(self, d: DualSolution) -> tuple[Fraction, ...]:
        values = {n: d.y1[w] for w, n in self.y1_names.items()}
        values.update({n: d.y2[key] for key, n in self.y2_names.items()})
        return tuple(values[v] for v in self.lp.variables)


def build_dual_lp(m: Market, b: Claim | None = None) -> DualProblem:
    """Aggregated dual: one row per asset and seller atom at each t = 0..T-1.

    Writing ``Y_0 = 1``, ``Y_t = y2^t`` (0 < t < T) and ``Y_T = y1``, the row for
    asset i and atom A of G_t reads
    ``sum_A P Y_t S_i(t) - sum_A P Y_{t+1} S_i(t+1)  (= | >=)  0``
    with ``>=`` exactly when i is short-restricted. At t = 0 the constant part
    moves to the right-hand side.
    """
    require_valid(m)
    if b is not None:
        check_claim(m, b)
    T, scen, P = m.horizon, m.scenarios, m.space.probabilities
    builder = LpBuilder("max")
    y1 = {w: builder.add_variable(f"y1[{w}]", nonnegative=True, cost=P[w] * b[w] if b else 0) for w in scen}
    y2 = {(t, w): builder.add_variable(f"y2[{t},{w}]", nonnegative=False) for t in range(1, T) for w in scen}

    def density(t: int, w: str) -> str:
        return y1[w] if t == T else y2[(t, w)]

    for t in range(T):
        for block in m.seller_filtration[t].ordered_blocks(scen):
            for i, asset in enumerate(m.assets):
                relation = ">=" if i in m.short_restricted else "="
                coeffs: dict[str, Fraction] = {}
                constant = ZERO
                for w in block:
                    if t == 0:
                        constant += P[w] * m.price(i, 0, w)
                    else:
                        coeffs[density(t, w)] = coeffs.get(density(t, w), ZERO) + P[w] * m.price(i, t, w)
                    nxt = density(t + 1, w)
                    coeffs[nxt] = coeffs.get(nxt, ZERO) - P[w] * m.price(i, t + 1, w)
                builder.add_row(coeffs, relation, -constant, f"dual[{asset},t={t},{'+'.join(block)}]")
    return DualProblem(builder.build(), y1, y2)


def dual_violations(m: Market, d: DualSolution) -> list[str]:
    """Rows of the dual LP that ``d`` violates (empty when feasible)."""
    problem = build_dual_lp(m)
    x = problem.assignment(d)
    bad = [f"{problem.lp.variables[j]} < 0" for j, (nn, v) in enumerate(zip(problem.lp.nonnegative, x)) if nn and v < 0]
    for row in problem.lp.rows:
        lhs = problem.lp.row_value(row, x)
        ok = lhs == row.rhs if row.relation == "=" else lhs >= row.rhs
        if not ok:
            bad.append(f"{row.name}: {lhs} {row.relation} {row.rhs} fails")
    return bad


def dual_objective(m: Market, d: DualSolution, b: Claim) -> Fraction:
    P = m.space.probabilities
    return sum((P[w] * d.y1[w] * b[w] for w in m.scenarios), ZERO)


# -- measures -----------------------------------------------------------------


class RowTag(NamedTuple):
    kind: str
    asset: str | None = None
    t: int | None = None
    atom: tuple[str, ...] | None = None
    relation: str | None = None


@dataclass(frozen=True)
class MeasurePolytope:
    description: HPolytope
    tags: tuple[RowTag, ...]
    variable_of: Mapping[str, str]

    @property
    def scenario_of(self) -> dict[str, str]:
        return {v: w for w, v in self.variable_of.items()}

    def contains(self, q: Measure | Mapping[str, Fraction]) -> bool:
        weights = q.weights if isinstance(q, Measure) else q
        return self.description.contains({self.variable_of[w]: weights[w] for w in self.variable_of})

    def measure(self, point: Sequence[Fraction]) -> Measure:
        return Measure(dict(zip(self.variable_of, point)))


def measure_variable_names(scenarios: Sequence[str]) -> dict[str, str]:
    """``q<n>`` when scenario ids share a letter prefix followed by digits, else ``q_<id>``."""
    pattern = re.compile(r"^([^\W\d]*)(\d+)$")
    matches = [pattern.match(w) for w in scenarios]
    if all(matches) and len({mt.group(1) for mt in matches}) == 1 and len({mt.group(2) for mt in matches}) == len(scenarios):
        return {w: f"q{mt.group(2)}" for w, mt in zip(scenarios, matches)}
    return {w: f"q_{w}" for w in scenarios}


def build_measure_polytope(m: Market) -> MeasurePolytope:
    """Normalisation, nonnegativity and one-step (super)martingale rows per seller atom.

    Rows whose coefficients all vanish (e.g. every bond row) are omitted.
    """
    require_valid(m)
    scen = m.scenarios
    names = measure_variable_names(scen)
    pos = {w: j for j, w in enumerate(scen)}
    n = len(scen)
    rows: list[Row] = [Row((Fraction(1),) * n, "=", Fraction(1), "normalization")]
    tags: list[RowTag] = [RowTag("normalization", relation="=")]
    for w in scen:
        coeffs = [ZERO] * n
        coeffs[pos[w]] = Fraction(-1)
        rows.append(Row(tuple(coeffs), "<=", ZERO, f"nonnegative[{w}]"))
        tags.append(RowTag("nonnegativity", atom=(w,), relation="<="))
    for t in range(m.horizon):
        for block in m.seller_filtration[t].ordered_blocks(scen):
            for i, asset in enumerate(m.assets):
                coeffs = [ZERO] * n
                for w in block:
                    coeffs[pos[w]] = m.price(i, t + 1, w) - m.price(i, t, w)
                if not any(coeffs):
                    continue
                rel = "<=" if i in m.short_restricted else "="
                rows.append(Row(tuple(coeffs), rel, ZERO, f"step[{asset},t={t},{'+'.join(block)}]"))
                tags.append(RowTag("asset", asset, t, block, rel))
    poly = HPolytope(tuple(names[w] for w in scen), tuple(rows))
    return MeasurePolytope(poly, tuple(tags), names)


@dataclass
class Violation:
    asset: str
    t: int
    k: int
    atom: tuple[str, ...]
    later: Fraction
    now: Fraction
    relation: str


@dataclass
class MembershipReport:
    violations: list[Violation] = field(default_factory=list)
    checked: int = 0

    @property
    def member(self) -> bool:
        return not self.violations


def check_membership(m: Market, q: Measure | Mapping[str, Fraction]) -> MembershipReport:
    """Check ``E_Q[S_i(t+k) | G_t]`` against ``E_Q[S_i(t) | G_t]`` for every k >= 1.

    Equality is required for unrestricted assets and ``<=`` for assets in I1.
    Conditional expectations on Q-null atoms are 0 on both sides.
    """
    if not isinstance(q, Measure):
        q = Measure(q)
    if set(q.weights) != set(m.scenarios):
        raise InputError("measure must be defined on the market's scenarios")
    T, scen = m.horizon, m.scenarios
    report = MembershipReport()
    for i, asset in enumerate(m.assets):
        rel = "<=" if i in m.short_restricted else "="
        for t in range(T):
            part = m.seller_filtration[t]
            blocks = part.ordered_blocks(scen)
            now = conditional_expectation(m.prices[i].at(t), part, q)
            for k in range(1, T - t + 1):
                later = conditional_expectation(m.prices[i].at(t + k), part, q)
                for block in blocks:
                    w = block[0]
                    report.checked += 1
                    ok = later[w] == now[w] if rel == "=" else later[w] <= now[w]
                    if not ok:
                        report.violations.append(Violation(asset, t, k, block, later[w], now[w], rel))
    return report


def measure_from_dual(m: Market, d: DualSolution) -> Measure:
    P = m.space.probabilities
    mass = sum((P[w] * d.y1[w] for w in m.scenarios), ZERO)
    if mass == 0:
        raise DegenerateDualError("dual point has E[y1] = 0 and carries no measure")
    return Measure({w: P[w] * d.y1[w] / mass for w in m.scenarios})


def dual_from_measure(m: Market, q: Measure) -> DualSolution:
    """Density ``y1 = dQ/dP`` and ``y2^t = E_P[y1 | F_t]``."""
    P = m.space.probabilities
    y1 = {w: q[w] / P[w] for w in m.scenarios}
    y2 = {}
    for t in range(1, m.horizon):
        cond = conditional_expectation(y1, m.full_filtration[t], P)
        for w in m.scenarios:
            y2[(t, w)] = cond[w]
    return DualSolution(y1, y2)


# -- pricing ------------------------------------------------------------------


@dataclass
class PriceResult:
    method: str
    status: str
    value: Fraction | None = None
    certificate: TradingStrategy | DualSolution | Measure | None = None
    lp: LinearProgram | None = None
    outcome: LpOutcome | None = None
    arbitrage: ArbitrageResult | None = None


def price(
    m: Market,
    b: Claim,
    method: str,
    *,
    arbitrage: ArbitrageResult | None = None,
    polytope: MeasurePolytope | None = None,
) -> PriceResult:
    """Solve one of the three pricing problems.

    If the market admits a constraint-respecting arbitrage the result has status
    ``"arbitrage"`` and no value. Pass ``arbitrage`` / ``polytope`` to reuse
    precomputed pieces across claims.
    """
    if method not in METHODS:
        raise InputError(f"unknown pricing method {method!r}; expected one of {METHODS}")
    require_valid(m)
    check_claim(m, b)
    if arbitrage is None:
        arbitrage = arbitrage_search(m, respect_constraints=True)
    if arbitrage.found:
        return PriceResult(method, "arbitrage", arbitrage=arbitrage)

    if method == "primal":
        problem = build_primal_lp(m, b)
        outcome = solve_lp(problem.lp)
        if outcome.status == "infeasible":
            raise AssertionError("primal LP infeasible: holding max B bonds is always feasible")
        if outcome.status == "unbounded":
            return PriceResult(method, "arbitrage", lp=problem.lp, outcome=outcome, arbitrage=arbitrage)
        return PriceResult(method, "optimal", outcome.value, problem.strategy(outcome), problem.lp, outcome, arbitrage)

    if method == "dual_lp":
        dual = build_dual_lp(m, b)
        outcome = solve_lp(dual.lp)
        cert = dual.solution(outcome) if outcome.status == "optimal" else None
        return PriceResult(method, outcome.status, outcome.value, cert, dual.lp, outcome, arbitrage)

    poly = polytope or build_measure_polytope(m)
    lp = poly.description.to_lp({poly.variable_of[w]: b[w] for w in m.scenarios}, "max")
    outcome = solve_lp(lp)
    cert = poly.measure(outcome.primal_solution) if outcome.status == "optimal" else None
    return PriceResult(method, outcome.status, outcome.value, cert, lp, outcome, arbitrage)


@dataclass
class PricingReport:
    claim: str
    status: str
    primal: PriceResult | None = None
    dual_lp: PriceResult | None = None
    measures: PriceResult | None = None
    gaps: dict[str, Fraction] = field(default_factory=dict)
    checks: dict[str, bool] = field(default_factory=dict)
    arbitrage: ArbitrageResult | None = None

    @property
    def consistent(self) -> bool:
        return all(self.checks.values())


def full_report(m: Market, claims: Iterable[Claim]) -> list[PricingReport]:
    """Price every claim by all three methods and cross-check the certificates."""
    claims = list(claims)
    if not claims:
        return []
    require_valid(m)
    arbitrage = arbitrage_search(m, respect_constraints=True)
    if arbitrage.found:
        return [PricingReport(b.name, "arbitrage", arbitrage=arbitrage) for b in claims]
    polytope = build_measure_polytope(m)
    return [_report_one(m, b, arbitrage, polytope) for b in claims]


def _report_one(m: Market, b: Claim, arbitrage: ArbitrageResult, polytope: MeasurePolytope) -> PricingReport:
    results = {meth: price(m, b, meth, arbitrage=arbitrage, polytope=polytope) for meth in METHODS}
    report = PricingReport(b.name, "priced", results["primal"], results["dual_lp"], results["measures"], arbitrage=arbitrage)
    checks = report.checks

    for meth, res in results.items():
        if res.outcome is not None:
            checks[f"{meth}_certificate"] = verify_certificate(res.lp, res.outcome).passed

    primal, dual, meas = results["primal"], results["dual_lp"], results["measures"]
    if primal.status == "optimal":
        checks["strategy_audit"] = strategy_audit(m, primal.certificate, b, primal.value).passed
    pairs = (("primal-dual_lp", primal, dual), ("dual_lp-measures", dual, meas), ("primal-measures", primal, meas))
    for label, left, right in pairs:
        if left.status == "optimal" and right.status == "optimal":
            report.gaps[label] = left.value - right.value
    if "primal-dual_lp" in report.gaps:
        checks["primal_equals_dual_lp"] = report.gaps["primal-dual_lp"] == 0
    if "primal-measures" in report.gaps:
        checks["measures_below_primal"] = report.gaps["primal-measures"] >= 0

    if meas.status == "optimal":
        q = meas.certificate
        checks["measure_membership"] = check_membership(m, q).member
        back = dual_from_measure(m, q)
        checks["dual_from_measure_feasible"] = not dual_violations(m, back)
        checks["dual_from_measure_objective"] = dual_objective(m, back, b) == meas.value
    if dual.status == "optimal" and 0 not in m.short_restricted:
        d = dual.certificate
        try:
            q = measure_from_dual(m, d)
        except DegenerateDualError:
            checks["measure_from_dual_nondegenerate"] = False
        else:
            checks["measure_from_dual_membership"] = check_membership(m, q).member
            checks["measure_from_dual_objective"] = q.expectation(b.payoff) == dual.value
    return report
