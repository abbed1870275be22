"""Shared fixtures, independent oracles and the random market generator."""

from __future__ import annotations

import itertools
import random
from fractions import Fraction
from pathlib import Path
from typing import Sequence

import numpy as np

from superhedge.document import parse_market_document
from superhedge.lp import LinearProgram
from superhedge.market import Claim, Market
from superhedge.scenario import Filtration, Partition, Process, ScenarioSpace, conditional_expectation

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"
F = Fraction


def load_fixture(name: str, validate: bool = True):
    return parse_market_document((FIXTURES / name).read_text(encoding="utf-8"), validate=validate)


def five_state():
    return load_fixture("five_state.json")


# -- exact linear algebra used by the oracles ----------------------------------


def exact_solve(matrix: Sequence[Sequence[Fraction]], rhs: Sequence[Fraction]) -> list[Fraction] | None:
    """Gauss-Jordan on a square system; ``None`` when singular."""
    n = len(matrix)
    a = [[F(x) for x in row] + [F(b)] for row, b in zip(matrix, rhs)]
    for col in range(n):
        piv = next((r for r in range(col, n) if a[r][col] != 0), None)
        if piv is None:
            return None
        a[col], a[piv] = a[piv], a[col]
        p = a[col][col]
        a[col] = [x / p for x in a[col]]
        for r in range(n):
            if r != col and a[r][col] != 0:
                f = a[r][col]
                a[r] = [x - f * y for x, y in zip(a[r], a[col])]
    return [a[r][n] for r in range(n)]


def exact_rank(rows: Sequence[Sequence[Fraction]]) -> int:
    a = [list(map(F, r)) for r in rows]
    rank, width = 0, len(a[0]) if a else 0
    for col in range(width):
        piv = next((r for r in range(rank, len(a)) if a[r][col] != 0), None)
        if piv is None:
            continue
        a[rank], a[piv] = a[piv], a[rank]
        for r in range(len(a)):
            if r != rank and a[r][col] != 0:
                f = a[r][col] / a[rank][col]
                a[r] = [x - f * y for x, y in zip(a[r], a[rank])]
        rank += 1
    return rank


# -- basic-feasible-solution enumeration oracle --------------------------------


def _constraints(lp: LinearProgram):
    """All constraints as (a, kind, b) with kind in {'le', 'eq'}: a.x <= b or a.x = b."""
    n = len(lp.variables)
    out = []
    for row in lp.rows:
        a = [F(c) for c in row.coefficients]
        if row.relation == "<=":
            out.append((a, "le", F(row.rhs)))
        elif row.relation == ">=":
            out.append(([-c for c in a], "le", -F(row.rhs)))
        else:
            out.append((a, "eq", F(row.rhs)))
    for j, nonneg in enumerate(lp.nonnegative):
        if nonneg:
            e = [F(0)] * n
            e[j] = F(-1)
            out.append((e, "le", F(0)))
    return out


def _feasible(cons, x) -> bool:
    for a, kind, b in cons:
        lhs = sum(ai * xi for ai, xi in zip(a, x))
        if (kind == "le" and lhs > b) or (kind == "eq" and lhs != b):
            return False
    return True


def bfs_oracle(lp: LinearProgram) -> tuple[str, Fraction | None]:
    """Optimal value of a pointed LP by enumerating every vertex and extreme ray.

    Float screening (batched numpy) discards singular or clearly infeasible
    bases; every surviving candidate is re-solved and re-checked exactly.
    """
    n = len(lp.variables)
    cons = _constraints(lp)
    if exact_rank([a for a, _, _ in cons]) < n:
        raise ValueError("oracle needs a pointed feasible region")
    sign = 1 if lp.sense == "max" else -1
    c = [sign * F(x) for x in lp.objective]
    eq_idx = [k for k, (_, kind, _) in enumerate(cons) if kind == "eq"]
    ineq_idx = [k for k, (_, kind, _) in enumerate(cons) if kind == "le"]
    A = np.array([[float(x) for x in a] for a, _, _ in cons])
    bvec = np.array([float(b) for _, _, b in cons])

    def subsets(size):
        free = size - len(eq_idx)
        if free < 0:
            return []
        return [tuple(eq_idx) + combo for combo in itertools.combinations(ineq_idx, free)]

    # vertices
    best = None
    found_vertex = False
    for chunk in _chunks(subsets(n), 4096):
        idx = np.array(chunk)
        mats = A[idx]
        dets = np.linalg.det(mats)
        ok = np.abs(dets) > 1e-9
        if not ok.any():
            continue
        sols = np.linalg.solve(mats[ok], bvec[idx[ok]][..., None])[..., 0]
        slack = (A @ sols.T).T - bvec
        for combo, x, s in zip(idx[ok], sols, slack):
            if (s[ineq_idx] > 1e-6).any() or (np.abs(s[eq_idx]) > 1e-6).any():
                continue
            exact = exact_solve([cons[k][0] for k in combo], [cons[k][2] for k in combo])
            if exact is None or not _feasible(cons, exact):
                continue
            found_vertex = True
            val = sum(ci * xi for ci, xi in zip(c, exact))
            if best is None or val > best:
                best = val
    if not found_vertex:
        return "infeasible", None
    # extreme rays of the recession cone: n-1 tight homogeneous constraints
    cf = np.array([float(x) for x in c])
    for combo in subsets(n - 1):
        if n > 1:
            sub = A[list(combo)]
            _, sv, vt = np.linalg.svd(sub)
            if len(sv) < n - 1 or sv[-1] < 1e-9:
                continue
            d_f = vt[-1]
            proj = A @ d_f
            eq_ok = np.abs(proj[eq_idx]).max(initial=0) < 1e-7
            up = (proj[ineq_idx] <= 1e-7).all() and cf @ d_f > 1e-9
            down = (proj[ineq_idx] >= -1e-7).all() and cf @ d_f < -1e-9
            if not (eq_ok and (up or down)):
                continue
        mat = [cons[k][0] for k in combo]
        if exact_rank(mat) < n - 1:
            continue
        d = _null_vector(mat, n)
        for direction in (d, [-x for x in d]):
            if all(
                (sum(ai * di for ai, di in zip(a, direction)) <= 0 if kind == "le"
                 else sum(ai * di for ai, di in zip(a, direction)) == 0)
                for a, kind, _ in cons
            ) and sum(ci * di for ci, di in zip(c, direction)) > 0:
                return "unbounded", None
    return "optimal", sign * best


def _chunks(seq, size):
    for k in range(0, len(seq), size):
        yield seq[k:k + size]


def _null_vector(mat, n):
    """A nonzero vector spanning the one-dimensional null space of ``mat``."""
    for j in range(n):
        sub = [[row[k] for k in range(n) if k != j] for row in mat]
        rhs = [-row[j] for row in mat]
        sol = exact_solve(sub, rhs) if len(sub) == n - 1 else None
        if sol is not None:
            d = sol[:j] + [F(1)] + sol[j:]
            return d
    raise AssertionError("null space is not one-dimensional")


# -- five-state primal, built independently of the pricing module ---------------

FIVE_S1 = {
    0: dict.fromkeys(("w1", "w2", "w3", "w4", "w5"), F(6)),
    1: {"w1": F(7), "w2": F(5), "w3": F(9), "w4": F(7), "w5": F(9)},
    2: {"w1": F(3), "w2": F(9), "w3": F(7), "w4": F(8), "w5": F(4)},
}
FIVE_SELLER_ATOMS = (("w1", "w4"), ("w2",), ("w3", "w5"))
FIVE_FULL_ATOMS_T1 = (("w1",), ("w2",), ("w4",), ("w3", "w5"))


def five_state_primal_oracle_lp(payoff: dict[str, Fraction]) -> LinearProgram:
    """Nine-variable primal for five-state with I1 = {bond, stock}, written out by hand.

    Variables: v, H0(0), H1(0), then (H0, H1) on each seller atom at t = 1.
    """
    names = ["v", "H0_0", "H1_0"]
    for k in range(3):
        names += [f"H0_1_{k}", f"H1_1_{k}"]
    atom = {w: k for k, block in enumerate(FIVE_SELLER_ATOMS) for w in block}

    def vec(entries):
        out = [F(0)] * len(names)
        for name, value in entries.items():
            out[names.index(name)] += F(value)
        return tuple(out)

    rows = []
    for w in ("w1", "w2", "w3", "w4", "w5"):
        k = atom[w]
        rows.append((vec({f"H0_1_{k}": 1, f"H1_1_{k}": FIVE_S1[2][w]}), ">=", F(payoff[w])))
    for block in FIVE_FULL_ATOMS_T1:
        w = block[0]
        k = atom[w]
        if block == ("w4",):  # same seller atom and price as w1: identical row
            continue
        rows.append((vec({"H0_0": 1, "H1_0": FIVE_S1[1][w], f"H0_1_{k}": -1, f"H1_1_{k}": -FIVE_S1[1][w]}), "=", F(0)))
    rows.append((vec({"H0_0": 1, "H1_0": 6, "v": -1}), "<=", F(0)))
    rows.append((vec({"H0_0": 1, "H1_0": 6}), ">=", F(0)))
    from superhedge.lp import Row

    return LinearProgram(
        tuple(names),
        (False,) + (True,) * 8,
        "min",
        vec({"v": 1}),
        tuple(Row(a, rel, b) for a, rel, b in rows),
    )


# -- random arbitrage-free market generator ------------------------------------


def random_coarsening(part: Partition, rng: random.Random, order) -> Partition:
    blocks = part.ordered_blocks(order)
    rng.shuffle(blocks)
    groups: list[list[str]] = []
    for block in blocks:
        if groups and rng.random() < 0.5:
            rng.choice(groups).extend(block)
        else:
            groups.append(list(block))
    return Partition(groups)


def join(a: Partition, b: Partition) -> Partition:
    cells: dict[tuple[int, int], list[str]] = {}
    for w in sorted(a.universe):
        cells.setdefault((a.block_of(w), b.block_of(w)), []).append(w)
    return Partition(cells.values())


def random_filtration(scenarios, horizon: int, rng: random.Random) -> Filtration:
    parts = [Partition.discrete(scenarios)]
    for _ in range(horizon - 1):
        parts.append(random_coarsening(parts[-1], rng, scenarios))
    parts.append(Partition.trivial(scenarios))
    return Filtration(tuple(reversed(parts)))


def coarser_filtration(filt: Filtration, rng: random.Random, scenarios) -> Filtration:
    """Blockwise coarser filtration with the same terminal partition."""
    T = len(filt) - 1
    parts = [Partition.trivial(scenarios)]
    for t in range(1, T):
        parts.append(join(parts[-1], random_coarsening(filt[t], rng, scenarios)))
    parts.append(filt[T])
    return Filtration(tuple(parts))


def random_market(rng: random.Random, max_scenarios: int = 8, max_horizon: int = 3, max_risky: int = 2) -> Market:
    n = rng.randint(2, max_scenarios)
    scenarios = tuple(f"w{k}" for k in range(1, n + 1))
    T = rng.randint(1, max_horizon)
    N = rng.randint(1, max_risky)
    weights = [rng.randint(1, 5) for _ in scenarios]
    space = ScenarioSpace(scenarios, {w: F(x, sum(weights)) for w, x in zip(scenarios, weights)})
    full = random_filtration(scenarios, T, rng)
    seller = coarser_filtration(full, rng, scenarios)
    restricted = frozenset(i for i in range(N + 1) if rng.random() < 0.5)

    prices = [Process.constant(1, T, scenarios)]
    for i in range(1, N + 1):
        terminal = {w: F(rng.randint(0, 12)) for w in scenarios}
        if all(v == 0 for v in terminal.values()):
            terminal[scenarios[0]] = F(1)
        values = {}
        drift = dict.fromkeys(scenarios, F(0))
        for t in range(T, -1, -1):
            level = conditional_expectation(terminal, full[t], space.probabilities)
            if t < T and i in restricted:
                # adapted nonnegative push-up of earlier prices: a supermartingale
                step = {}
                for block in full[t]:
                    bump = F(rng.randint(0, 2), rng.randint(1, 2))
                    step.update(dict.fromkeys(block, bump))
                drift = conditional_expectation(drift, full[t], space.probabilities)
                drift = {w: drift[w] + step[w] for w in scenarios}
            for w in scenarios:
                values[(t, w)] = level[w] + drift[w]
        prices.append(Process(T, scenarios, values))
    assets = tuple(["bond"] + [f"S{i}" for i in range(1, N + 1)])
    return Market(space, assets, tuple(prices), full, seller, restricted)


def random_claim(m: Market, rng: random.Random, name: str = "B") -> Claim:
    return Claim({w: F(rng.randint(0, 10)) for w in m.scenarios}, name)


def instances(count: int, seed: int) -> list[Market]:
    rng = random.Random(seed)
    return [random_market(rng) for _ in range(count)]
