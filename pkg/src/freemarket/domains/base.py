"""Domain plug-in contract.

A domain supplies the physics of a world: its primitive units, the starting
allocation, the pairwise combination law, and the validation rule that decides
whether a proposed transformation enters the recipe book. Domain objects are
immutable after construction; everything stochastic flows through the engine's
seeded stream (handed in via the validation context or allocation call).
"""

from __future__ import annotations

import abc
from dataclasses import dataclass
from typing import TYPE_CHECKING, Optional

if TYPE_CHECKING:
    import numpy as np

from ..core import GoodKind


@dataclass
class ValidationContext:
    """Environment handed to validate(): shared temperature knob plus the
    engine's deterministic RNG stream."""

    temperature: float
    rng: "np.random.Generator"


@dataclass(frozen=True)
class SeededRecipe:
    inputs: tuple[GoodKind, ...]
    product: GoodKind
    delta_e: float
    product_count: int = 1


class DomainRules(abc.ABC):
    """Contract the engine programs against."""

    name: str = "domain"

    @abc.abstractmethod
    def primitives(self) -> tuple[GoodKind, ...]:
        """Primitive kinds, fixed for the lifetime of the domain."""

    @abc.abstractmethod
    def initial_allocation(
        self, n_agents: int, rng: "np.random.Generator"
    ) -> list[list[GoodKind]]:
        """Per-agent starting kinds (instances carry no provenance)."""

    @abc.abstractmethod
    def combine(
        self, a: GoodKind, b: GoodKind
    ) -> Optional[tuple[GoodKind, float]]:
        """Ordered, pure combination law: (product, delta_e) or None when the
        pair does not react. Must never propose a primitive product."""

    @abc.abstractmethod
    def validate(
        self, product: GoodKind, delta_e: float, context: ValidationContext
    ) -> bool:
        """Accept or reject a proposed transformation."""

    def seeded_recipes(self) -> tuple[SeededRecipe, ...]:
        return ()

    def is_conservative(self) -> bool:
        """Whether composition is conserved by every transformation."""
        return True

    def discovery_enabled(self) -> bool:
        """Domains with a fixed seeded technology set (no combination law)
        return False; the engine then forces the discovery budget to zero."""
        return True

    def consumer_demand(
        self, n_agents: int, step: int
    ) -> Optional[dict[int, list[tuple[GoodKind, int]]]]:
        """Exogenous per-agent wishlist plan for this step, or None to use the
        engine's endogenous demand modes."""
        return None

    def context_temperature(self) -> float:
        return 300.0

    def params(self) -> dict:
        """Resolved parameters, for run manifests."""
        return {}
