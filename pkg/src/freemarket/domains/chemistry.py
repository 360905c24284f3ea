"""Simplified molecular-fragment domain.

Goods are molecular fragments over C, H, N, O with an explicit bond count.
Combination joins two fragments with one new bond, so every reachable
fragment is acyclic (bonds_used == atoms - 1) and free valence is a pure
function of the formula. A proposed product must be exothermic and also pass
a kinetic gate: acceptance probability exp(-barrier / (c * T)) with barrier
b0 + b1 * atoms, so temperature tunes how large a fragment can form in one
discovery event.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

from ..core import Composition, GoodKind, make_composition
from .base import DomainRules, ValidationContext

ELEMENTS = ("C", "H", "N", "O")
VALENCE = {"C": 4, "H": 1, "N": 3, "O": 2}

DEFAULT_ALLOCATION = {"C": 200, "H": 500, "O": 100, "N": 100}
DEFAULT_ATOM_CAP = 20
DEFAULT_E_BOND = 1.0
DEFAULT_B0 = 0.0
DEFAULT_B1 = 0.5
DEFAULT_C = 1.0 / 300.0
DEFAULT_TEMPERATURE = 300.0

_ATOMS = {el: GoodKind.primitive(el) for el in ELEMENTS}


def formula_id(units: dict[str, int]) -> str:
    """Hill-style formula string: C first, then H, N, O; count 1 implicit."""
    parts = []
    for el in ELEMENTS:
        n = units.get(el, 0)
        if n == 0:
            continue
        parts.append(el if n == 1 else f"{el}{n}")
    return "".join(parts)


def make_molecule(units: dict[str, int]) -> GoodKind:
    """GoodKind for an atom-count formula; single atoms are the primitives."""
    clean = {el: int(n) for el, n in units.items() if n}
    if not clean or any(el not in VALENCE for el in clean):
        raise ValueError(f"not a molecular formula: {units!r}")
    total = sum(clean.values())
    if total == 1:
        return _ATOMS[next(iter(clean))]
    return GoodKind(formula_id(clean), make_composition(clean))


@dataclass(frozen=True)
class FormulaGood:
    """Valence bookkeeping view of a fragment."""

    composition: Composition
    bonds_used: int

    @property
    def atoms(self) -> int:
        return sum(n for _el, n in self.composition)

    @property
    def free_valence(self) -> int:
        capacity = sum(VALENCE[el] * n for el, n in self.composition)
        return capacity - 2 * self.bonds_used

    @staticmethod
    def of(kind: GoodKind) -> "FormulaGood":
        atoms = sum(n for _el, n in kind.composition)
        # every reachable fragment is a join tree over single atoms
        bonds = 0 if kind.is_primitive else atoms - 1
        return FormulaGood(kind.composition, bonds)


def acceptance_probability(product: GoodKind, temperature: float, *,
                           b0: float = DEFAULT_B0, b1: float = DEFAULT_B1,
                           c: float = DEFAULT_C) -> float:
    """Kinetic gate: min(1, exp(-(b0 + b1*atoms) / (c*T)))."""
    if temperature <= 0:
        raise ValueError("temperature must be positive")
    atoms = sum(n for _el, n in product.composition)
    barrier = b0 + b1 * atoms
    return min(1.0, math.exp(-barrier / (c * temperature)))


class ChemistryDomain(DomainRules):
    name = "chem"

    def __init__(self, atom_cap: int = DEFAULT_ATOM_CAP,
                 e_bond: float = DEFAULT_E_BOND,
                 b0: float = DEFAULT_B0, b1: float = DEFAULT_B1,
                 c: float = DEFAULT_C,
                 temperature: float = DEFAULT_TEMPERATURE,
                 allocation: Optional[dict[str, int]] = None):
        if atom_cap < 2:
            raise ValueError("chem.atom_cap must be at least 2")
        if temperature <= 0:
            raise ValueError("chem.temperature must be positive")
        if c <= 0:
            raise ValueError("chem.c must be positive")
        if e_bond <= 0:
            raise ValueError("chem.e_bond must be positive")
        self.atom_cap = int(atom_cap)
        self.e_bond = float(e_bond)
        self.b0 = float(b0)
        self.b1 = float(b1)
        self.c = float(c)
        self.temperature = float(temperature)
        self.allocation = dict(allocation) if allocation else dict(DEFAULT_ALLOCATION)
        if any(el not in VALENCE for el in self.allocation):
            raise ValueError(f"unknown element in allocation: {self.allocation}")
        if sum(self.allocation.values()) <= 0:
            raise ValueError("chem.allocation is empty")

    def primitives(self) -> tuple[GoodKind, ...]:
        return tuple(_ATOMS[el] for el in ELEMENTS)

    def initial_allocation(self, n_agents, rng) -> list[list[GoodKind]]:
        pool: list[GoodKind] = []
        for el in ELEMENTS:
            pool.extend([_ATOMS[el]] * self.allocation.get(el, 0))
        order = rng.permutation(len(pool))
        shuffled = [pool[int(i)] for i in order]
        return [shuffled[i::n_agents] for i in range(n_agents)]

    def combine(self, a: GoodKind, b: GoodKind) -> Optional[tuple[GoodKind, float]]:
        fa, fb = FormulaGood.of(a), FormulaGood.of(b)
        if fa.free_valence < 1 or fb.free_valence < 1:
            return None
        if fa.atoms + fb.atoms > self.atom_cap:
            return None
        units = a.units()
        for el, n in b.units().items():
            units[el] = units.get(el, 0) + n
        return make_molecule(units), -self.e_bond

    def validate(self, product, delta_e, context: ValidationContext) -> bool:
        if delta_e >= 0:
            return False
        p = acceptance_probability(product, context.temperature,
                                   b0=self.b0, b1=self.b1, c=self.c)
        return float(context.rng.random()) < p

    def context_temperature(self) -> float:
        return self.temperature

    def params(self) -> dict:
        return {
            "chem.atom_cap": self.atom_cap,
            "chem.e_bond": self.e_bond,
            "chem.b0": self.b0,
            "chem.b1": self.b1,
            "chem.c": self.c,
            "chem.temperature": self.temperature,
            "chem.allocation": ",".join(
                f"{el}:{n}" for el, n in sorted(self.allocation.items())),
        }
