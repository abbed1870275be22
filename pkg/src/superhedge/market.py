"""Discounted multi-asset market with a seller filtration and short-sale restrictions."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Iterable, Mapping

from superhedge.errors import InputError
from superhedge.lp import LinearProgram, LpBuilder, LpOutcome, solve_lp
from superhedge.rational import to_fraction
from superhedge.scenario import Filtration, Process, ScenarioSpace, is_adapted, refines

ZERO = Fraction(0)


@dataclass(frozen=True)
class Market:
    """Asset 0 is the bond. ``short_restricted`` holds asset indices (the set I1)."""

    space: ScenarioSpace
    assets: tuple[str, ...]
    prices: tuple[Process, ...]
    full_filtration: Filtration
    seller_filtration: Filtration
    short_restricted: frozenset[int] = frozenset()

    def __post_init__(self):
        assets, prices = tuple(self.assets), tuple(self.prices)
        if len(assets) < 1 or len(assets) != len(prices):
            raise InputError("need one price process per asset, bond first")
        if len(set(assets)) != len(assets):
            raise InputError("asset names must be distinct")
        horizon = prices[0].horizon
        scen = set(self.space.scenarios)
        for name, proc in zip(assets, prices):
            if proc.horizon != horizon:
                raise InputError(f"asset {name!r} has horizon {proc.horizon}, expected {horizon}")
            if set(proc.scenarios) != scen:
                raise InputError(f"asset {name!r} is defined on a different scenario set")
        for label, filt in (("full", self.full_filtration), ("seller", self.seller_filtration)):
            if filt.horizon != horizon:
                raise InputError(f"{label} filtration has horizon {filt.horizon}, expected {horizon}")
            if filt[0].universe != scen:
                raise InputError(f"{label} filtration is over a different scenario set")
        restricted = frozenset(int(i) for i in self.short_restricted)
        if any(i < 0 or i >= len(assets) for i in restricted):
            raise InputError("short-restricted asset index out of range")
        object.__setattr__(self, "assets", assets)
        object.__setattr__(self, "prices", prices)
        object.__setattr__(self, "short_restricted", restricted)

    @property
    def horizon(self) -> int:
        return self.prices[0].horizon

    @property
    def scenarios(self) -> tuple[str, ...]:
        return self.space.scenarios

    def price(self, i: int, t: int, w: str) -> Fraction:
        return self.prices[i](t, w)

    def with_short_restricted(self, indices: Iterable[int]) -> "Market":
        return replace(self, short_restricted=frozenset(indices))

    def with_seller_filtration(self, filtration: Filtration) -> "Market":
        return replace(self, seller_filtration=filtration)


@dataclass(frozen=True)
class Claim:
    payoff: Mapping[str, Fraction]
    name: str = "claim"

    def __post_init__(self):
        payoff = {w: to_fraction(v) for w, v in self.payoff.items()}
        negative = [w for w, v in payoff.items() if v < 0]
        if negative:
            raise InputError(f"claim {self.name!r} is negative in scenario {negative[0]!r}")
        object.__setattr__(self, "payoff", payoff)

    def __getitem__(self, w: str) -> Fraction:
        return self.payoff[w]

    def scaled(self, factor) -> "Claim":
        factor = to_fraction(factor)
        return Claim({w: factor * v for w, v in self.payoff.items()}, self.name)


def check_claim(m: Market, b: Claim) -> None:
    if set(b.payoff) != set(m.scenarios):
        raise InputError(f"claim {b.name!r} must define a payoff for every scenario")


@dataclass(frozen=True)
class TradingStrategy:
    """Holdings keyed by ``(asset index, time, block index of the seller partition)``."""

    holdings: Mapping[tuple[int, int, int], Fraction]

    def get(self, m: Market, i: int, t: int, w: str) -> Fraction:
        return self.holdings.get((i, t, m.seller_filtration[t].block_of(w)), ZERO)

    def portfolio_value(self, m: Market, t_price: int, t_hold: int, w: str) -> Fraction:
        return sum((m.price(i, t_price, w) * self.get(m, i, t_hold, w) for i in range(len(m.assets))), ZERO)

    @classmethod
    def zero(cls, m: Market) -> "TradingStrategy":
        return cls({key: ZERO for key in strategy_keys(m)})


def strategy_keys(m: Market) -> list[tuple[int, int, int]]:
    return [
        (i, t, k)
        for t in range(m.horizon)
        for k in range(len(m.seller_filtration[t]))
        for i in range(len(m.assets))
    ]


@dataclass
class Check:
    name: str
    passed: bool
    witnesses: list[str] = field(default_factory=list)


@dataclass
class CheckReport:
    checks: list[Check] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def __getitem__(self, name: str) -> Check:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def failures(self) -> list[Check]:
        return [c for c in self.checks if not c.passed]

    def add(self, name: str, witnesses: list[str]) -> None:
        self.checks.append(Check(name, not witnesses, witnesses))


def validate_market(m: Market) -> CheckReport:
    report = CheckReport()
    T, scen = m.horizon, m.scenarios
    report.add(
        "bond_discounted",
        [f"({m.assets[0]}, t={t}, {w}) = {m.price(0, t, w)}"
         for t in range(T + 1) for w in scen if m.price(0, t, w) != 1],
    )
    report.add(
        "prices_nonnegative",
        [f"({a}, t={t}, {w}) = {m.price(i, t, w)}"
         for i, a in enumerate(m.assets) for t in range(T + 1) for w in scen if m.price(i, t, w) < 0],
    )
    report.add(
        "prices_not_identically_zero",
        [a for i, a in enumerate(m.assets) if all(m.price(i, t, w) == 0 for t in range(T + 1) for w in scen)],
    )
    adapted = []
    for i, a in enumerate(m.assets):
        for t, k in is_adapted(m.prices[i], m.full_filtration):
            block = ",".join(m.full_filtration[t].ordered_blocks(scen)[k])
            adapted.append(f"({a}, t={t}, {{{block}}})")
    report.add("prices_adapted_to_full", adapted)
    coarser = []
    for t in range(T + 1):
        if not refines(m.seller_filtration[t], m.full_filtration[t]):
            for block in m.full_filtration[t].ordered_blocks(scen):
                if len({m.seller_filtration[t].block_of(w) for w in block}) > 1:
                    coarser.append(f"(t={t}, full atom {{{','.join(block)}}} splits across seller atoms)")
    report.add("seller_coarser_than_full", coarser)
    return report


def require_valid(m: Market) -> None:
    report = validate_market(m)
    if not report.passed:
        names = ", ".join(c.name for c in report.failures())
        raise InputError(f"invalid market: {names}")


def strategy_audit(m: Market, h: TradingStrategy, b: Claim, v) -> CheckReport:
    """Evaluate the four constraints of the seller's problem for a given strategy."""
    v = to_fraction(v)
    T, scen, n = m.horizon, m.scenarios, len(m.assets)
    report = CheckReport()
    report.add(
        "superreplication",
        [f"{w}: {h.portfolio_value(m, T, T - 1, w)} < {b[w]}"
         for w in scen if h.portfolio_value(m, T, T - 1, w) < b[w]],
    )
    sf = []
    for t in range(1, T):
        for w in scen:
            delta = h.portfolio_value(m, t, t, w) - h.portfolio_value(m, t, t - 1, w)
            if delta != 0:
                sf.append(f"t={t}, {w}: S(t).dH(t) = {delta}")
    report.add("self_financing", sf)
    short = []
    for j in sorted(m.short_restricted):
        for t in range(T):
            for k, block in enumerate(m.seller_filtration[t].ordered_blocks(scen)):
                value = h.holdings.get((j, t, k), ZERO)
                if value < 0:
                    short.append(f"({m.assets[j]}, t={t}, {{{','.join(block)}}}) = {value}")
    report.add("no_short_selling", short)
    cost = h.portfolio_value(m, 0, 0, scen[0])
    report.add("budget", [] if cost <= v else [f"S(0).H(0) = {cost} > {v}"])
    unknown = [key for key in h.holdings if key[0] >= n or key[1] >= T]
    report.add("structure", [str(key) for key in unknown])
    return report


class StrategyVariables:
    """Names the LP variables of a seller-adapted strategy and builds its linear expressions."""

    def __init__(self, m: Market, builder: LpBuilder, nonnegative: frozenset[int] = frozenset()):
        self.m = m
        self.names: dict[tuple[int, int, int], str] = {}
        blocks = [m.seller_filtration[t].ordered_blocks(m.scenarios) for t in range(m.horizon)]
        for i, t, k in strategy_keys(m):
            name = f"H[{m.assets[i]},{t},{'+'.join(blocks[t][k])}]"
            builder.add_variable(name, nonnegative=i in nonnegative)
            self.names[(i, t, k)] = name

    def var(self, i: int, t: int, w: str) -> str:
        return self.names[(i, t, self.m.seller_filtration[t].block_of(w))]

    def value(self, t_price: int, t_hold: int, w: str) -> dict[str, Fraction]:
        """Coefficients of ``S(t_price, w) . H(t_hold, w)``."""
        return {self.var(i, t_hold, w): self.m.price(i, t_price, w) for i in range(len(self.m.assets))}

    def self_financing_rows(self) -> list[tuple[int, str, dict[str, Fraction]]]:
        """One ``S(t).dH(t) = 0`` row per distinct coefficient pattern (t = 1..T-1)."""
        rows, seen = [], set()
        for t in range(1, self.m.horizon):
            for w in self.m.scenarios:
                coeffs: dict[str, Fraction] = {}
                for var, c in self.value(t, t, w).items():
                    coeffs[var] = coeffs.get(var, ZERO) + c
                for var, c in self.value(t, t - 1, w).items():
                    coeffs[var] = coeffs.get(var, ZERO) - c
                coeffs = {k: c for k, c in coeffs.items() if c}
                key = frozenset(coeffs.items())
                if coeffs and key not in seen:
                    seen.add(key)
                    rows.append((t, w, coeffs))
        return rows

    def decode(self, solution: Mapping[str, Fraction]) -> TradingStrategy:
        return TradingStrategy({key: solution[name] for key, name in self.names.items()})


@dataclass
class ArbitrageResult:
    found: bool
    respect_constraints: bool
    strategy: TradingStrategy | None
    terminal_gains: dict[str, Fraction] | None
    expected_gain: Fraction
    lp: LinearProgram
    outcome: LpOutcome


def arbitrage_search(m: Market, respect_constraints: bool) -> ArbitrageResult:
    """Look for a seller-adapted arbitrage with holdings boxed to ``|H| <= 1``."""
    require_valid(m)
    T, scen = m.horizon, m.scenarios
    builder = LpBuilder("max")
    restricted = m.short_restricted if respect_constraints else frozenset()
    hv = StrategyVariables(m, builder, nonnegative=restricted)
    for name in hv.names.values():
        builder.add_row({name: 1}, "<=", 1, f"box_upper[{name}]")
    for (i, _, _), name in hv.names.items():
        if i not in restricted:
            builder.add_row({name: 1}, ">=", -1, f"box_lower[{name}]")
    for t, w, coeffs in hv.self_financing_rows():
        builder.add_row(coeffs, "=", 0, f"self_financing[t={t},{w}]")
    builder.add_row(hv.value(0, 0, scen[0]), "<=", 0, "initial_cost")
    objective: dict[str, Fraction] = {}
    for w in scen:
        terminal = hv.value(T, T - 1, w)
        builder.add_row(terminal, ">=", 0, f"terminal_nonnegative[{w}]")
        for var, c in terminal.items():
            objective[var] = objective.get(var, ZERO) + m.space.prob(w) * c
    for var, c in objective.items():
        builder.set_cost(var, c)
    lp = builder.build()
    outcome = solve_lp(lp)
    if outcome.status != "optimal":  # pragma: no cover - the boxed LP is feasible (H = 0) and bounded
        raise AssertionError(f"arbitrage LP returned {outcome.status}")
    if outcome.value > 0:
        strategy = hv.decode(outcome.solution_map(lp))
        gains = {w: strategy.portfolio_value(m, T, T - 1, w) for w in scen}
        return ArbitrageResult(True, respect_constraints, strategy, gains, outcome.value, lp, outcome)
    return ArbitrageResult(False, respect_constraints, None, None, outcome.value, lp, outcome)
