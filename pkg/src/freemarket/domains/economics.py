"""Input-output production domain driven by a sector coefficient table.

Sectors are goods; the table entry a[i][j] is how many units of sector i one
unit of sector j consumes. Recipes are seeded from the table at batch scale
(inputs rounded to whole units), discovery is disabled, and consumption does
not return inputs to circulation. Sectors whose column is all zero are
primitive inputs (labor-like); everything else must be produced by firms.
Final demand from the last table row is spread across agents round-robin so
each sector's requested total per step matches the table exactly.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Optional, Sequence

from ..core import GoodKind, make_composition
from .base import DomainRules, SeededRecipe, ValidationContext

DEFAULT_BATCH = 10
DEFAULT_INITIAL_STOCK = 4


@dataclass(frozen=True)
class IOTable:
    """Square coefficient table plus a final-demand vector."""

    sectors: tuple[str, ...]
    coefficients: tuple[tuple[float, ...], ...]  # coefficients[i][j]: i into j
    final_demand: tuple[float, ...]

    def __post_init__(self):
        n = len(self.sectors)
        if n == 0:
            raise ValueError("table has no sectors")
        if len(set(self.sectors)) != n:
            raise ValueError("duplicate sector names")
        if len(self.coefficients) != n or any(len(r) != n for r in self.coefficients):
            raise ValueError("coefficient matrix is not square")
        if len(self.final_demand) != n:
            raise ValueError("final demand length mismatch")
        if any(a < 0 for row in self.coefficients for a in row):
            raise ValueError("negative coefficient")
        if any(d < 0 for d in self.final_demand):
            raise ValueError("negative final demand")

    @staticmethod
    def from_csv(path) -> "IOTable":
        with open(path, newline="") as fh:
            rows = [row for row in csv.reader(fh)
                    if row and any(cell.strip() for cell in row)]
        if len(rows) < 3:
            raise ValueError("table file needs names, coefficients, and demand")
        names = tuple(cell.strip() for cell in rows[0])
        matrix = tuple(tuple(float(c) for c in row) for row in rows[1:-1])
        demand = tuple(float(c) for c in rows[-1])
        return IOTable(names, matrix, demand)

    def column(self, j: int) -> tuple[float, ...]:
        return tuple(row[j] for row in self.coefficients)

    def is_feasible(self, *, tolerance: float = 1e-9,
                    max_rounds: int = 10000) -> bool:
        """True when required gross output converges (productive table)."""
        n = len(self.sectors)
        if any(sum(self.column(j)) >= 1.0 for j in range(n)):
            return False
        x = list(self.final_demand)
        for _ in range(max_rounds):
            nxt = [self.final_demand[i]
                   + sum(self.coefficients[i][j] * x[j] for j in range(n))
                   for i in range(n)]
            if max(abs(nxt[i] - x[i]) for i in range(n)) < tolerance:
                return True
            x = nxt
        return False


class EconomicsDomain(DomainRules):
    name = "econ"

    def __init__(self, table: IOTable, batch: int = DEFAULT_BATCH,
                 initial_stock: int = DEFAULT_INITIAL_STOCK):
        if batch < 1:
            raise ValueError("econ.batch must be at least 1")
        if initial_stock < 0:
            raise ValueError("econ.initial_stock must not be negative")
        if not table.is_feasible():
            raise ValueError("table is not productive: output never converges")
        self.table = table
        self.batch = int(batch)
        self.initial_stock = int(initial_stock)
        self._kinds = tuple(
            GoodKind(name, make_composition({name: 1})) for name in table.sectors)
        self._primitive = tuple(
            all(a == 0 for a in table.column(j)) for j in range(len(table.sectors)))
        self._seeded = self._build_recipes()

    def _build_recipes(self) -> tuple[SeededRecipe, ...]:
        out = []
        for j, kind in enumerate(self._kinds):
            if self._primitive[j]:
                continue
            inputs: list[GoodKind] = []
            for i, a in enumerate(self.table.column(j)):
                units = round(a * self.batch)
                if a > 0 and units == 0:
                    raise ValueError(
                        f"econ.batch {self.batch} too small: "
                        f"{self.table.sectors[i]} into {kind.kind_id} rounds to zero")
                inputs.extend([self._kinds[i]] * units)
            if not inputs:
                raise ValueError(
                    f"sector {kind.kind_id} has no whole-unit inputs at batch "
                    f"{self.batch}")
            out.append(SeededRecipe(tuple(inputs), kind, -1.0,
                                    product_count=self.batch))
        return tuple(out)

    def sector_kinds(self) -> tuple[GoodKind, ...]:
        return self._kinds

    def primitives(self) -> tuple[GoodKind, ...]:
        return tuple(k for k, p in zip(self._kinds, self._primitive) if p)

    def seeded_recipes(self) -> tuple[SeededRecipe, ...]:
        return self._seeded

    def discovery_enabled(self) -> bool:
        return False

    def is_conservative(self) -> bool:
        return False

    def initial_allocation(self, n_agents, rng) -> list[list[GoodKind]]:
        # agent at pos holds its own sector's stock (pos mod S round-robin)
        s = len(self._kinds)
        return [[self._kinds[pos % s]] * self.initial_stock
                for pos in range(n_agents)]

    def consumer_demand(self, n_agents: int,
                        step: int) -> Optional[dict[int, list[tuple[GoodKind, int]]]]:
        """Sector j consumers are agents at pos = j mod S, staggered so their
        requests sum to exactly floor(step * d[j]) cumulative units."""
        plan: dict[int, list[tuple[GoodKind, int]]] = {}
        s = len(self._kinds)
        for j, kind in enumerate(self._kinds):
            d = self.final_demand_per_step(j)
            if d <= 0:
                continue
            positions = range(j, n_agents, s)
            m = len(positions)
            if m == 0:
                raise ValueError(
                    f"no consumer for {kind.kind_id}: need at least "
                    f"{len(self._kinds)} agents")
            for rank, pos in enumerate(positions):
                want = (self._owed(d, m, rank, step)
                        - self._owed(d, m, rank, step - 1))
                if want > 0:
                    plan.setdefault(pos, []).append((kind, want))
        return plan

    def final_demand_per_step(self, j: int) -> float:
        return self.table.final_demand[j]

    @staticmethod
    def _owed(rate: float, m: int, rank: int, step: int) -> int:
        # cumulative units agent `rank` should have consumed by `step`
        if step <= 0:
            return 0
        total = int(step * rate + 1e-9)
        return (total + rank) // m

    def combine(self, a, b):
        return None

    def validate(self, product, delta_e, context: ValidationContext) -> bool:
        return False

    def params(self) -> dict:
        return {
            "econ.batch": self.batch,
            "econ.initial_stock": self.initial_stock,
            "econ.sectors": ",".join(self.table.sectors),
        }
