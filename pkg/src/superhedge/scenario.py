"""Finite scenario spaces, partition filtrations, processes and conditional expectation."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from superhedge.errors import InputError
from superhedge.rational import to_fraction

ZERO = Fraction(0)


@dataclass(frozen=True)
class ScenarioSpace:
    scenarios: tuple[str, ...]
    probabilities: Mapping[str, Fraction]

    def __post_init__(self):
        scenarios = tuple(self.scenarios)
        if not scenarios:
            raise InputError("scenario space is empty")
        if len(set(scenarios)) != len(scenarios):
            raise InputError("scenario identifiers must be distinct")
        if set(self.probabilities) != set(scenarios):
            raise InputError("probabilities must be given for exactly the listed scenarios")
        probs = {w: to_fraction(self.probabilities[w]) for w in scenarios}
        bad = [w for w, p in probs.items() if p <= 0]
        if bad:
            raise InputError(f"reference probabilities must be strictly positive (scenario {bad[0]})")
        total = sum(probs.values(), ZERO)
        if total != 1:
            raise InputError(f"reference probabilities sum to {total}, not 1")
        object.__setattr__(self, "scenarios", scenarios)
        object.__setattr__(self, "probabilities", probs)

    @classmethod
    def uniform(cls, scenarios: Iterable[str]) -> "ScenarioSpace":
        scenarios = tuple(scenarios)
        return cls(scenarios, {w: Fraction(1, len(scenarios)) for w in scenarios})

    def __len__(self) -> int:
        return len(self.scenarios)

    def __iter__(self):
        return iter(self.scenarios)

    def __contains__(self, w) -> bool:
        return w in self.probabilities

    def prob(self, w: str) -> Fraction:
        return self.probabilities[w]


class Partition:
    """A partition of a finite scenario set into nonempty disjoint blocks.

    Equality ignores block order; :func:`atom_of` indexes blocks in the stored order.
    """

    __slots__ = ("blocks", "_lookup")

    def __init__(self, blocks: Iterable[Iterable[str]]):
        frozen = tuple(frozenset(b) for b in blocks)
        lookup: dict[str, int] = {}
        for k, block in enumerate(frozen):
            if not block:
                raise InputError("partition blocks must be nonempty")
            for w in block:
                if w in lookup:
                    raise InputError(f"scenario {w!r} appears in more than one block")
                lookup[w] = k
        self.blocks = frozen
        self._lookup = lookup

    @classmethod
    def trivial(cls, scenarios: Iterable[str]) -> "Partition":
        return cls([tuple(scenarios)])

    @classmethod
    def discrete(cls, scenarios: Iterable[str]) -> "Partition":
        return cls([(w,) for w in scenarios])

    @classmethod
    def from_labels(cls, labels: Mapping[str, object], order: Sequence[str]) -> "Partition":
        """Group ``order`` by equal label, blocks in order of first appearance."""
        groups: dict[object, list[str]] = {}
        for w in order:
            groups.setdefault(labels[w], []).append(w)
        return cls(groups.values())

    @property
    def universe(self) -> frozenset[str]:
        return frozenset(self._lookup)

    def block_of(self, w: str) -> int:
        return self._lookup[w]

    def ordered_blocks(self, order: Sequence[str]) -> list[tuple[str, ...]]:
        """Blocks with members listed in ``order``."""
        rank = {w: i for i, w in enumerate(order)}
        return [tuple(sorted(b, key=rank.__getitem__)) for b in self.blocks]

    def is_discrete(self) -> bool:
        return all(len(b) == 1 for b in self.blocks)

    def __len__(self) -> int:
        return len(self.blocks)

    def __iter__(self):
        return iter(self.blocks)

    def __eq__(self, other) -> bool:
        return isinstance(other, Partition) and set(self.blocks) == set(other.blocks)

    def __hash__(self) -> int:
        return hash(frozenset(self.blocks))

    def __repr__(self) -> str:
        inner = ", ".join("{" + ",".join(sorted(b)) + "}" for b in self.blocks)
        return f"Partition({inner})"


def refines(coarse: Partition, fine: Partition) -> bool:
    """True iff every block of ``fine`` lies inside a block of ``coarse``."""
    if coarse.universe != fine.universe:
        raise InputError("partitions are over different scenario sets")
    return all(len({coarse.block_of(w) for w in block}) == 1 for block in fine.blocks)


def atom_of(partition: Partition, scenario: str) -> int:
    try:
        return partition.block_of(scenario)
    except KeyError:
        raise InputError(f"unknown scenario {scenario!r}") from None


@dataclass(frozen=True)
class Filtration:
    partitions: tuple[Partition, ...]

    def __post_init__(self):
        parts = tuple(self.partitions)
        if len(parts) < 2:
            raise InputError("a filtration needs at least times 0 and T >= 1")
        universe = parts[0].universe
        for t, part in enumerate(parts):
            if part.universe != universe:
                raise InputError(f"partition at t={t} covers a different scenario set")
        if len(parts[0]) != 1:
            raise InputError("the time-0 partition must be the trivial partition {Omega}")
        if not parts[-1].is_discrete():
            raise InputError("filtration violates G_T = F: the terminal partition is not discrete")
        for t in range(len(parts) - 1):
            if not refines(parts[t], parts[t + 1]):
                raise InputError(f"partition at t={t + 1} does not refine the one at t={t}")
        object.__setattr__(self, "partitions", parts)

    @property
    def horizon(self) -> int:
        return len(self.partitions) - 1

    def __getitem__(self, t: int) -> Partition:
        return self.partitions[t]

    def __len__(self) -> int:
        return len(self.partitions)

    def __iter__(self):
        return iter(self.partitions)


@dataclass(frozen=True)
class Process:
    """Values ``(t, scenario) -> rational`` for ``t = 0..horizon``."""

    horizon: int
    scenarios: tuple[str, ...]
    values: Mapping[tuple[int, str], Fraction]

    def __post_init__(self):
        if self.horizon < 1:
            raise InputError("process horizon must be at least 1")
        scenarios = tuple(self.scenarios)
        values = {}
        for t in range(self.horizon + 1):
            for w in scenarios:
                if (t, w) not in self.values:
                    raise InputError(f"process undefined at (t={t}, {w})")
                values[(t, w)] = to_fraction(self.values[(t, w)])
        if len(values) != len(self.values):
            raise InputError("process has values outside its time/scenario grid")
        object.__setattr__(self, "scenarios", scenarios)
        object.__setattr__(self, "values", values)

    @classmethod
    def from_table(cls, table: Mapping[int, Mapping[str, object]], scenarios: Sequence[str]) -> "Process":
        horizon = max(int(t) for t in table)
        values = {(int(t), w): v for t, row in table.items() for w, v in row.items()}
        return cls(horizon, tuple(scenarios), values)

    @classmethod
    def constant(cls, value, horizon: int, scenarios: Sequence[str]) -> "Process":
        return cls(horizon, tuple(scenarios), {(t, w): value for t in range(horizon + 1) for w in scenarios})

    def __call__(self, t: int, w: str) -> Fraction:
        return self.values[(t, w)]

    def at(self, t: int) -> dict[str, Fraction]:
        return {w: self.values[(t, w)] for w in self.scenarios}

    def table(self) -> dict[int, dict[str, Fraction]]:
        return {t: self.at(t) for t in range(self.horizon + 1)}


@dataclass(frozen=True)
class Measure:
    weights: Mapping[str, Fraction]

    def __post_init__(self):
        weights = {w: to_fraction(v) for w, v in self.weights.items()}
        if any(v < 0 for v in weights.values()):
            raise InputError("measure weights must be nonnegative")
        total = sum(weights.values(), ZERO)
        if total != 1:
            raise InputError(f"measure weights sum to {total}, not 1")
        object.__setattr__(self, "weights", weights)

    def __getitem__(self, w: str) -> Fraction:
        return self.weights[w]

    def expectation(self, x: Mapping[str, Fraction]) -> Fraction:
        return sum((q * x[w] for w, q in self.weights.items() if q), ZERO)


def conditional_expectation(
    x: Mapping[str, Fraction], partition: Partition, q: Measure | Mapping[str, Fraction]
) -> dict[str, Fraction]:
    """Blockwise ``q``-average of ``x``; blocks of zero ``q``-mass evaluate to 0.

    ``q`` may be any nonnegative weight map (it need not be normalised).
    """
    weights = q.weights if isinstance(q, Measure) else q
    out: dict[str, Fraction] = {}
    for block in partition.blocks:
        mass = sum((weights[w] for w in block), ZERO)
        if mass == 0:
            value = ZERO
        else:
            value = sum((weights[w] * to_fraction(x[w]) for w in block), ZERO) / mass
        for w in block:
            out[w] = value
    return {w: out[w] for w in x}


def level_set_partitions(processes: Sequence[Process]) -> list[Partition]:
    """Partitions at each time grouping scenarios by equal joint path up to that time."""
    if not processes:
        raise InputError("need at least one process")
    horizon = processes[0].horizon
    scenarios = processes[0].scenarios
    for proc in processes:
        if proc.horizon != horizon or set(proc.scenarios) != set(scenarios):
            raise InputError("processes must share horizon and scenario set")
    parts = []
    for t in range(horizon + 1):
        labels = {w: tuple(p(s, w) for p in processes for s in range(t + 1)) for w in scenarios}
        parts.append(Partition.from_labels(labels, scenarios))
    return parts


def filtration_from_processes(processes: Sequence[Process]) -> Filtration:
    """The filtration generated by the joint paths of ``processes``.

    Raises if the terminal partition is not discrete.
    """
    parts = level_set_partitions(processes)
    if not parts[-1].is_discrete():
        raise InputError("filtration violates G_T = F: the generated terminal partition is not discrete")
    return Filtration(tuple(parts))


def is_adapted(process: Process, filtration: Filtration) -> list[tuple[int, int]]:
    """Return ``(t, block)`` pairs where ``process`` is not constant on the block."""
    bad = []
    for t in range(process.horizon + 1):
        for k, block in enumerate(filtration[t].blocks):
            if len({process(t, w) for w in block}) > 1:
                bad.append((t, k))
    return bad
