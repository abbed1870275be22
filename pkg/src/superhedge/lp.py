"""Exact-arithmetic linear programming.

A two-phase tableau simplex over rationals. Pivoting follows Bland's rule, with
free variables admitted to the basis first (once basic they never leave, so the
rule still terminates). Every outcome carries a certificate that
:func:`verify_certificate` re-checks with exact arithmetic.

Sign conventions for ``LpOutcome.dual_multipliers`` (shadow prices, one per row
in the caller's order):

* maximize: ``<=`` rows get ``y >= 0``, ``>=`` rows ``y <= 0``
* minimize: ``<=`` rows get ``y <= 0``, ``>=`` rows ``y >= 0``
* ``=`` rows are unrestricted

so that ``sum(y_i * b_i)`` equals the optimal value in both senses.
A Farkas certificate ``f`` has ``f_i >= 0`` on ``<=`` rows and ``f_i <= 0`` on
``>=`` rows; the combined row ``(f^T A) x <= f^T b`` has nonnegative coefficients
on sign-restricted variables, zero on free ones, and a negative right-hand side.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, NamedTuple, Sequence

from superhedge.errors import InputError
from superhedge.rational import to_fraction

RELATIONS = ("<=", "=", ">=")
ZERO = Fraction(0)


class Row(NamedTuple):
    coefficients: tuple[Fraction, ...]
    relation: str
    rhs: Fraction
    name: str = ""


def _coerce_row(row, width: int) -> Row:
    if isinstance(row, Row):
        coeffs, rel, rhs, name = row
    elif len(row) == 4:
        coeffs, rel, rhs, name = row
    else:
        coeffs, rel, rhs = row
        name = ""
    coeffs = tuple(to_fraction(c) for c in coeffs)
    if len(coeffs) != width:
        raise InputError(f"row {name or '?'} has {len(coeffs)} coefficients, expected {width}")
    if rel not in RELATIONS:
        raise InputError(f"unknown relation {rel!r}")
    return Row(coeffs, rel, to_fraction(rhs), name)


@dataclass(frozen=True)
class LinearProgram:
    variables: tuple[str, ...]
    nonnegative: tuple[bool, ...]
    sense: str
    objective: tuple[Fraction, ...]
    rows: tuple[Row, ...]

    def __post_init__(self):
        n = len(self.variables)
        if len(set(self.variables)) != n:
            raise InputError("duplicate variable names")
        if self.sense not in ("max", "min"):
            raise InputError(f"sense must be 'max' or 'min', got {self.sense!r}")
        if len(self.nonnegative) != n or len(self.objective) != n:
            raise InputError("objective / sign flags do not match the variable count")
        object.__setattr__(self, "variables", tuple(self.variables))
        object.__setattr__(self, "nonnegative", tuple(bool(f) for f in self.nonnegative))
        object.__setattr__(self, "objective", tuple(to_fraction(c) for c in self.objective))
        object.__setattr__(self, "rows", tuple(_coerce_row(r, n) for r in self.rows))

    @property
    def index(self) -> dict[str, int]:
        return {name: j for j, name in enumerate(self.variables)}

    def row_value(self, row: Row, x: Sequence[Fraction]) -> Fraction:
        return sum((a * v for a, v in zip(row.coefficients, x) if a), ZERO)

    def objective_value(self, x: Sequence[Fraction]) -> Fraction:
        return sum((c * v for c, v in zip(self.objective, x) if c), ZERO)

    def is_feasible(self, x: Sequence[Fraction]) -> bool:
        if any(nn and v < 0 for nn, v in zip(self.nonnegative, x)):
            return False
        return all(_holds(self.row_value(r, x), r.relation, r.rhs) for r in self.rows)


def _holds(lhs: Fraction, relation: str, rhs: Fraction) -> bool:
    if relation == "<=":
        return lhs <= rhs
    if relation == ">=":
        return lhs >= rhs
    return lhs == rhs


class LpBuilder:
    """Accumulate named variables and sparse rows, then freeze into a LinearProgram."""

    def __init__(self, sense: str = "min"):
        self.sense = sense
        self._names: list[str] = []
        self._nonneg: list[bool] = []
        self._index: dict[str, int] = {}
        self._objective: dict[str, Fraction] = {}
        self._rows: list[tuple[dict[str, Fraction], str, Fraction, str]] = []

    def add_variable(self, name: str, nonnegative: bool = True, cost=0) -> str:
        if name in self._index:
            raise InputError(f"duplicate variable {name!r}")
        self._index[name] = len(self._names)
        self._names.append(name)
        self._nonneg.append(nonnegative)
        if cost:
            self._objective[name] = to_fraction(cost)
        return name

    def set_cost(self, name: str, cost) -> None:
        self._objective[name] = to_fraction(cost)

    def add_row(self, coefficients: Mapping[str, object], relation: str, rhs=0, name: str = "") -> None:
        for var in coefficients:
            if var not in self._index:
                raise InputError(f"row {name!r} uses undeclared variable {var!r}")
        self._rows.append((dict(coefficients), relation, to_fraction(rhs), name))

    def build(self) -> LinearProgram:
        n = len(self._names)
        rows = []
        for coeffs, rel, rhs, name in self._rows:
            dense = [ZERO] * n
            for var, c in coeffs.items():
                dense[self._index[var]] += to_fraction(c)
            rows.append(Row(tuple(dense), rel, rhs, name))
        objective = [self._objective.get(v, ZERO) for v in self._names]
        return LinearProgram(tuple(self._names), tuple(self._nonneg), self.sense, tuple(objective), tuple(rows))


@dataclass(frozen=True)
class LpOutcome:
    """Result of :func:`solve_lp`.

    ``base_point`` accompanies ``ray`` for unbounded problems: a feasible point
    from which the ray improves the objective without limit.
    """

    status: str
    value: Fraction | None = None
    primal_solution: tuple[Fraction, ...] | None = None
    dual_multipliers: tuple[Fraction, ...] | None = None
    infeasibility_certificate: tuple[Fraction, ...] | None = None
    ray: tuple[Fraction, ...] | None = None
    base_point: tuple[Fraction, ...] | None = None
    pivots: int = 0

    def solution_map(self, lp: LinearProgram) -> dict[str, Fraction]:
        if self.primal_solution is None:
            raise InputError(f"no primal solution for status {self.status!r}")
        return dict(zip(lp.variables, self.primal_solution))


class _Unbounded(Exception):
    def __init__(self, column: int, direction: int):
        self.column = column
        self.direction = direction


class _Tableau:
    """Dense tableau ``[A | rhs]`` with a reduced-cost row, maximizing."""

    def __init__(self, matrix: list[list[Fraction]], rhs: list[Fraction], restricted: list[bool], basis: list[int]):
        self.a = matrix
        self.rhs = rhs
        self.restricted = restricted
        self.basis = basis
        self.ncols = len(restricted)
        self.pivots = 0
        self.z: list[Fraction] = []
        self.cost: list[Fraction] = []
        self.value = ZERO

    def set_cost(self, cost: list[Fraction]) -> None:
        self.cost = cost
        z = list(cost)
        value = ZERO
        for r, b in enumerate(self.basis):
            cb = cost[b]
            if cb:
                row = self.a[r]
                for j in range(self.ncols):
                    if row[j]:
                        z[j] -= cb * row[j]
                value += cb * self.rhs[r]
        self.z = z
        self.value = value

    def pivot(self, r: int, j: int) -> None:
        row = self.a[r]
        piv = row[j]
        if piv != 1:
            inv = 1 / piv
            for k in range(self.ncols):
                if row[k]:
                    row[k] *= inv
            self.rhs[r] *= inv
        support = [k for k in range(self.ncols) if row[k]]
        rr = self.rhs[r]
        for i, other in enumerate(self.a):
            if i == r:
                continue
            f = other[j]
            if f:
                for k in support:
                    other[k] -= f * row[k]
                self.rhs[i] -= f * rr
        f = self.z[j]
        if f:
            for k in support:
                self.z[k] -= f * row[k]
            self.value += f * rr
        self.basis[r] = j
        self.pivots += 1

    def run(self, allowed: list[bool]) -> None:
        """Pivot to optimality; raises _Unbounded with the improving column."""
        basic = set(self.basis)
        while True:
            entering = -1
            direction = 1
            for j in range(self.ncols):
                if allowed[j] and not self.restricted[j] and j not in basic and self.z[j]:
                    entering, direction = j, (1 if self.z[j] > 0 else -1)
                    break
            if entering < 0:
                for j in range(self.ncols):
                    if allowed[j] and self.restricted[j] and j not in basic and self.z[j] > 0:
                        entering = j
                        break
            if entering < 0:
                return
            leave = -1
            best = None
            for r, b in enumerate(self.basis):
                if not self.restricted[b]:
                    continue
                step = direction * self.a[r][entering]
                if step > 0:
                    ratio = self.rhs[r] / step
                    if best is None or ratio < best or (ratio == best and b < self.basis[leave]):
                        best, leave = ratio, r
            if leave < 0:
                raise _Unbounded(entering, direction)
            basic.discard(self.basis[leave])
            self.pivot(leave, entering)
            basic.add(entering)


def solve_lp(lp: LinearProgram) -> LpOutcome:
    """Solve ``lp`` exactly and return an outcome with a matching certificate."""
    if not isinstance(lp, LinearProgram):
        raise InputError("solve_lp expects a LinearProgram")
    n = len(lp.variables)
    m = len(lp.rows)

    # Transformed row k = flip[k] * original row k, with rhs >= 0.
    slack_of: list[int | None] = []
    nslack = sum(1 for r in lp.rows if r.relation != "=")
    ncols = n + nslack + m
    matrix: list[list[Fraction]] = []
    rhs: list[Fraction] = []
    flip: list[int] = []
    col = n
    for k, row in enumerate(lp.rows):
        sign = -1 if row.relation == ">=" else 1
        coeffs = [sign * c for c in row.coefficients]
        b = sign * row.rhs
        entries = coeffs + [ZERO] * (nslack + m)
        if row.relation != "=":
            entries[col] = Fraction(1)
            slack_of.append(col)
            col += 1
        else:
            slack_of.append(None)
        if b < 0:
            entries = [-e for e in entries]
            b = -b
            sign = -sign
        entries[n + nslack + k] = Fraction(1)
        matrix.append(entries)
        rhs.append(b)
        flip.append(sign)

    restricted = list(lp.nonnegative) + [True] * (nslack + m)
    art0 = n + nslack
    tab = _Tableau(matrix, rhs, restricted, [art0 + k for k in range(m)])

    phase1 = [ZERO] * (n + nslack) + [Fraction(-1)] * m
    tab.set_cost(phase1)
    try:
        tab.run([True] * ncols)
    except _Unbounded:  # pragma: no cover - phase one is bounded above by zero
        raise AssertionError("phase one cannot be unbounded")
    if tab.value < 0:
        # y_k = cost_k - z_k on the artificial identity columns.
        y = [phase1[art0 + k] - tab.z[art0 + k] for k in range(m)]
        farkas = tuple(y[k] * flip[k] for k in range(m))
        return LpOutcome("infeasible", infeasibility_certificate=farkas, pivots=tab.pivots)

    for r in range(m):
        b = tab.basis[r]
        if b >= art0:
            for j in range(art0):
                if tab.a[r][j]:
                    tab.pivot(r, j)
                    break

    sense = 1 if lp.sense == "max" else -1
    cost = [sense * c for c in lp.objective] + [ZERO] * (nslack + m)
    tab.set_cost(cost)
    allowed = [True] * art0 + [False] * m
    try:
        tab.run(allowed)
    except _Unbounded as exc:
        point = _primal(tab, n)
        ray = [ZERO] * n
        if exc.column < n:
            ray[exc.column] = Fraction(exc.direction)
        for r, b in enumerate(tab.basis):
            if b < n:
                ray[b] = -exc.direction * tab.a[r][exc.column]
        return LpOutcome("unbounded", ray=tuple(ray), base_point=point, pivots=tab.pivots)

    x = _primal(tab, n)
    y = [-tab.z[art0 + k] for k in range(m)]
    duals = tuple(sense * y[k] * flip[k] for k in range(m))
    return LpOutcome(
        "optimal",
        value=lp.objective_value(x),
        primal_solution=x,
        dual_multipliers=duals,
        pivots=tab.pivots,
    )


def _primal(tab: _Tableau, n: int) -> tuple[Fraction, ...]:
    x = [ZERO] * n
    for r, b in enumerate(tab.basis):
        if b < n:
            x[b] = tab.rhs[r]
    return tuple(x)


@dataclass
class CertificateReport:
    status: str
    checks: dict[str, bool] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return bool(self.checks) and all(self.checks.values())

    def failures(self) -> list[str]:
        return [name for name, ok in self.checks.items() if not ok]


def _combine(lp: LinearProgram, weights: Sequence[Fraction]) -> list[Fraction]:
    out = [ZERO] * len(lp.variables)
    for w, row in zip(weights, lp.rows):
        if w:
            for j, a in enumerate(row.coefficients):
                if a:
                    out[j] += w * a
    return out


def verify_certificate(lp: LinearProgram, outcome: LpOutcome) -> CertificateReport:
    """Re-derive every certificate condition of ``outcome`` for ``lp`` exactly."""
    report = CertificateReport(outcome.status)
    checks = report.checks
    n, m = len(lp.variables), len(lp.rows)

    if outcome.status == "optimal":
        x, y = outcome.primal_solution, outcome.dual_multipliers
        checks["fields"] = (
            x is not None and y is not None and outcome.value is not None
            and len(x) == n and len(y) == m
            and outcome.infeasibility_certificate is None and outcome.ray is None
        )
        if not checks["fields"]:
            return report
        checks["primal_feasible"] = lp.is_feasible(x)
        maximize = lp.sense == "max"

        def sign_ok(rel: str, value: Fraction) -> bool:
            if rel == "=":
                return True
            positive = (rel == "<=") == maximize
            return value >= 0 if positive else value <= 0

        checks["dual_signs"] = all(sign_ok(r.relation, v) for r, v in zip(lp.rows, y))
        reduced = [c - a for c, a in zip(lp.objective, _combine(lp, y))]
        checks["dual_feasible"] = all(
            (d <= 0 if maximize else d >= 0) if nn else d == 0
            for d, nn in zip(reduced, lp.nonnegative)
        )
        checks["complementary_slackness"] = all(
            v == 0 or lp.row_value(r, x) == r.rhs for r, v in zip(lp.rows, y)
        ) and all(d == 0 or xv == 0 for d, xv in zip(reduced, x))
        primal_obj = lp.objective_value(x)
        dual_obj = sum((v * r.rhs for r, v in zip(lp.rows, y)), ZERO)
        checks["objective_equality"] = primal_obj == outcome.value == dual_obj
    elif outcome.status == "infeasible":
        f = outcome.infeasibility_certificate
        checks["fields"] = f is not None and len(f) == m and outcome.value is None
        if not checks["fields"]:
            return report
        checks["farkas_signs"] = all(
            r.relation == "=" or (v >= 0 if r.relation == "<=" else v <= 0) for r, v in zip(lp.rows, f)
        )
        combo = _combine(lp, f)
        checks["farkas_coefficients"] = all(
            (c >= 0) if nn else (c == 0) for c, nn in zip(combo, lp.nonnegative)
        )
        checks["farkas_contradiction"] = sum((v * r.rhs for r, v in zip(lp.rows, f)), ZERO) < 0
    elif outcome.status == "unbounded":
        d, p = outcome.ray, outcome.base_point
        checks["fields"] = d is not None and p is not None and len(d) == n and len(p) == n
        if not checks["fields"]:
            return report
        checks["base_point_feasible"] = lp.is_feasible(p)
        checks["ray_recession"] = all(nn is False or dv >= 0 for nn, dv in zip(lp.nonnegative, d)) and all(
            _holds(lp.row_value(r, d), r.relation, ZERO) for r in lp.rows
        )
        gain = lp.objective_value(d)
        checks["ray_improves"] = gain > 0 if lp.sense == "max" else gain < 0
    else:
        checks["known_status"] = False
    return report


def lp_from_rows(
    variables: Iterable[str],
    rows: Iterable,
    objective: Mapping[str, object] | Sequence = (),
    sense: str = "max",
    nonnegative: Sequence[bool] | None = None,
) -> LinearProgram:
    """Convenience constructor with free variables by default.

    Row coefficients may be dense sequences or sparse ``{name: coefficient}`` maps.
    """
    variables = tuple(variables)
    position = {v: j for j, v in enumerate(variables)}
    dense_rows = []
    for row in rows:
        coeffs, *rest = row
        if isinstance(coeffs, Mapping):
            unknown = set(coeffs) - set(position)
            if unknown:
                raise InputError(f"unknown variables {sorted(unknown)}")
            dense = [ZERO] * len(variables)
            for var, c in coeffs.items():
                dense[position[var]] = to_fraction(c)
            coeffs = dense
        dense_rows.append((coeffs, *rest))
    if isinstance(objective, Mapping):
        obj = tuple(to_fraction(objective.get(v, 0)) for v in variables)
    else:
        obj = tuple(to_fraction(c) for c in objective) or (ZERO,) * len(variables)
    flags = tuple(nonnegative) if nonnegative is not None else (False,) * len(variables)
    return LinearProgram(variables, flags, sense, obj, tuple(dense_rows))
