"""H-polytopes over exact rationals: Fourier-Motzkin projection and vertex enumeration."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from math import gcd, lcm
from typing import Iterable, Mapping, Sequence

from superhedge.errors import InputError
from superhedge.lp import LinearProgram, Row, solve_lp
from superhedge.rational import to_fraction

ZERO = Fraction(0)


@dataclass(frozen=True)
class HPolytope:
    """``{x : row.coefficients . x (<= | =) row.rhs}`` over free variables."""

    variables: tuple[str, ...]
    rows: tuple[Row, ...]

    def __post_init__(self):
        n = len(self.variables)
        if len(set(self.variables)) != n:
            raise InputError("duplicate variable names")
        rows = []
        for row in self.rows:
            coeffs, rel, rhs, *rest = row
            coeffs = tuple(to_fraction(c) for c in coeffs)
            if len(coeffs) != n:
                raise InputError(f"row has {len(coeffs)} coefficients, expected {n}")
            if rel == ">=":
                coeffs, rel, rhs = tuple(-c for c in coeffs), "<=", -to_fraction(rhs)
            if rel not in ("<=", "="):
                raise InputError(f"unknown relation {rel!r}")
            rows.append(Row(coeffs, rel, to_fraction(rhs), rest[0] if rest else ""))
        object.__setattr__(self, "variables", tuple(self.variables))
        object.__setattr__(self, "rows", tuple(rows))

    def contains(self, point: Mapping[str, Fraction] | Sequence[Fraction]) -> bool:
        x = self._vector(point)
        for row in self.rows:
            lhs = sum((a * v for a, v in zip(row.coefficients, x) if a), ZERO)
            if row.relation == "=" and lhs != row.rhs:
                return False
            if row.relation == "<=" and lhs > row.rhs:
                return False
        return True

    def _vector(self, point) -> list[Fraction]:
        if isinstance(point, Mapping):
            return [to_fraction(point[v]) for v in self.variables]
        if len(point) != len(self.variables):
            raise InputError("point dimension mismatch")
        return [to_fraction(v) for v in point]

    def is_empty(self) -> bool:
        return solve_lp(self.to_lp()).status == "infeasible"

    def to_lp(self, objective: Mapping[str, object] | None = None, sense: str = "max") -> LinearProgram:
        objective = objective or {}
        obj = tuple(to_fraction(objective.get(v, 0)) for v in self.variables)
        return LinearProgram(self.variables, (False,) * len(self.variables), sense, obj, self.rows)


def canonical_row(coeffs: Sequence[Fraction], relation: str, rhs: Fraction) -> tuple[tuple[int, ...], str, Fraction]:
    """Scale to a primitive integer coefficient vector (positive factor for ``<=``).

    Equalities additionally get a positive leading coefficient. The right-hand
    side is scaled along and may stay fractional.
    """
    nonzero = [c for c in coeffs if c]
    if not nonzero:
        return tuple(0 for _ in coeffs), relation, rhs
    scale = lcm(*(c.denominator for c in nonzero))
    ints = [int(c * scale) for c in coeffs]
    g = 0
    for v in ints:
        g = gcd(g, v)
    factor = Fraction(scale, g)
    if relation == "=" and nonzero[0] < 0:
        factor = -factor
    return tuple(int(c * factor) for c in coeffs), relation, rhs * factor


class _System:
    """Working set of canonical rows during elimination."""

    def __init__(self, width: int):
        self.width = width
        self.leq: dict[tuple[int, ...], Fraction] = {}
        self.eq: dict[tuple[int, ...], Fraction] = {}
        self.empty = False

    def add(self, coeffs: Sequence[Fraction], relation: str, rhs: Fraction) -> None:
        vec, rel, b = canonical_row(coeffs, relation, rhs)
        if not any(vec):
            if (rel == "<=" and b < 0) or (rel == "=" and b != 0):
                self.empty = True
            return
        if rel == "=":
            old = self.eq.get(vec)
            if old is not None and old != b:
                self.empty = True
            self.eq[vec] = b
        else:
            old = self.leq.get(vec)
            if old is None or b < old:
                self.leq[vec] = b


def fourier_motzkin_project(
    p: HPolytope, eliminate: Iterable[str], deep_redundancy: bool = False
) -> HPolytope:
    """Project ``p`` onto the variables not listed in ``eliminate``.

    Equalities involving an eliminated variable are used as substitutions;
    otherwise inequalities are combined pairwise. Duplicate and pairwise
    dominated rows are dropped after each step; with ``deep_redundancy`` every
    surviving inequality implied by the others (checked by an exact LP) is
    removed as well. An empty polytope comes back as the single row ``0 <= -1``.
    """
    eliminate = list(eliminate)
    unknown = [v for v in eliminate if v not in p.variables]
    if unknown:
        raise InputError(f"unknown variable(s) {unknown}")
    drop = set(eliminate)
    keep = [v for v in p.variables if v not in drop]
    index = {v: j for j, v in enumerate(p.variables)}

    system = _System(len(p.variables))
    for row in p.rows:
        system.add(row.coefficients, row.relation, row.rhs)

    for var in eliminate:
        if system.empty:
            break
        j = index[var]
        pivot = next((vec for vec in system.eq if vec[j]), None)
        nxt = _System(system.width)
        if pivot is not None:
            pb = system.eq.pop(pivot)
            pj = pivot[j]
            for rel, rows in (("=", system.eq), ("<=", system.leq)):
                for vec, b in rows.items():
                    f = Fraction(vec[j], pj)
                    nxt.add([a - f * c for a, c in zip(vec, pivot)], rel, b - f * pb)
        else:
            for vec, b in system.eq.items():
                nxt.add(vec, "=", b)
            pos, neg = [], []
            for vec, b in system.leq.items():
                if vec[j] > 0:
                    pos.append((vec, b))
                elif vec[j] < 0:
                    neg.append((vec, b))
                else:
                    nxt.add(vec, "<=", b)
            for (pv, pb), (nv, nb) in itertools.product(pos, neg):
                a, c = -nv[j], pv[j]
                nxt.add([a * x + c * y for x, y in zip(pv, nv)], "<=", a * pb + c * nb)
        nxt.empty = nxt.empty or system.empty
        system = nxt

    if system.empty:
        return HPolytope(tuple(keep), (Row((ZERO,) * len(keep), "<=", Fraction(-1)),))
    keep_idx = [index[v] for v in keep]
    rows = [Row(tuple(Fraction(vec[k]) for k in keep_idx), "=", b) for vec, b in system.eq.items()]
    rows += [Row(tuple(Fraction(vec[k]) for k in keep_idx), "<=", b) for vec, b in system.leq.items()]
    result = HPolytope(tuple(keep), tuple(rows))
    if deep_redundancy:
        result = remove_redundant_rows(result)
    return result


def remove_redundant_rows(p: HPolytope) -> HPolytope:
    """Drop each inequality whose maximum over the remaining rows stays within its bound."""
    if p.is_empty():
        return HPolytope(p.variables, (Row((ZERO,) * len(p.variables), "<=", Fraction(-1)),))
    rows = list(p.rows)
    i = 0
    while i < len(rows):
        row = rows[i]
        if row.relation == "<=":
            others = rows[:i] + rows[i + 1:]
            lp = LinearProgram(p.variables, (False,) * len(p.variables), "max", row.coefficients, tuple(others))
            out = solve_lp(lp)
            if out.status == "optimal" and out.value <= row.rhs:
                rows = others
                continue
        i += 1
    return HPolytope(p.variables, tuple(rows))


def _solve_square(matrix: list[list[Fraction]], rhs: list[Fraction]) -> list[Fraction] | None:
    """Gauss-Jordan on a square system; None when singular."""
    n = len(matrix)
    aug = [list(r) + [b] for r, b in zip(matrix, rhs)]
    for c in range(n):
        piv = next((r for r in range(c, n) if aug[r][c]), None)
        if piv is None:
            return None
        aug[c], aug[piv] = aug[piv], aug[c]
        inv = 1 / aug[c][c]
        aug[c] = [v * inv for v in aug[c]]
        for r in range(n):
            if r != c and aug[r][c]:
                f = aug[r][c]
                aug[r] = [a - f * b for a, b in zip(aug[r], aug[c])]
    return [aug[r][n] for r in range(n)]


def _independent_rows(rows: list[Row]) -> list[Row]:
    """Greedy maximal linearly independent subset, in input order."""
    chosen: list[Row] = []
    reduced: list[tuple[int, list[Fraction]]] = []
    for row in rows:
        vec = list(row.coefficients)
        for lead, basis_vec in reduced:
            if vec[lead]:
                f = vec[lead] / basis_vec[lead]
                vec = [a - f * b for a, b in zip(vec, basis_vec)]
        lead = next((k for k, v in enumerate(vec) if v), None)
        if lead is not None:
            reduced.append((lead, vec))
            chosen.append(row)
    return chosen


def enumerate_vertices(p: HPolytope) -> list[tuple[Fraction, ...]]:
    """All vertices of a pointed polytope by brute force over tight row subsets.

    Intended for small instances (combinatorial in the number of rows).
    """
    n = len(p.variables)
    eqs = [r for r in p.rows if r.relation == "="]
    ineqs = [r for r in p.rows if r.relation == "<="]
    if n == 0:
        return [()] if p.contains(()) else []
    basis = _independent_rows(eqs)
    found: dict[tuple[Fraction, ...], None] = {}
    for extra in itertools.combinations(ineqs, n - len(basis)):
        tight = basis + list(extra)
        x = _solve_square([list(r.coefficients) for r in tight], [r.rhs for r in tight])
        if x is not None and p.contains(x):
            found[tuple(x)] = None
    return sorted(found)
