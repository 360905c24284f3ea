"""Good kinds, recipes, and the append-only recipe book.

The recipe book is the simulation's persistent memory: a monotonically growing
record of every transformation ever validated, indexed by product and by input
kind, with a derived construction depth for every reachable kind. Recipe ids
are dense list indices; once returned, an id resolves to identical content
forever.
"""

from __future__ import annotations

from collections import Counter, deque
from dataclasses import dataclass
from typing import Iterable, Optional

Composition = tuple[tuple[str, int], ...]


def make_composition(units: dict[str, int]) -> Composition:
    """Canonical (sorted, zero-free) form of a primitive-unit multiset."""
    return tuple(sorted((u, int(n)) for u, n in units.items() if n > 0))


@dataclass(frozen=True, eq=False)
class GoodKind:
    """A kind of good.

    Identity is ``kind_id`` (a pure function of composition plus domain
    identity, chosen by the domain). ``composition`` is the multiset of
    primitive units the kind embodies; it drives conservation accounting and
    consumption, not identity.
    """

    kind_id: str
    composition: Composition
    is_primitive: bool = False

    def __eq__(self, other: object) -> bool:
        return isinstance(other, GoodKind) and other.kind_id == self.kind_id

    def __hash__(self) -> int:
        return hash(self.kind_id)

    def __repr__(self) -> str:
        return f"GoodKind({self.kind_id!r})"

    def units(self) -> Counter:
        return Counter(dict(self.composition))

    @staticmethod
    def primitive(unit: str) -> "GoodKind":
        return GoodKind(unit, ((unit, 1),), True)


@dataclass(frozen=True)
class Recipe:
    """One validated transformation. ``inputs`` is the input multiset in
    canonical form (sorted, one entry per unit). Discovered recipes have
    exactly two inputs and product_count 1; seeded recipes may differ."""

    recipe_id: int
    inputs: tuple[GoodKind, ...]
    product: GoodKind
    delta_e: float
    discovered_at: int
    product_count: int = 1
    seeded: bool = False

    def input_counts(self) -> Counter:
        return Counter(self.inputs)


class RecipeBook:
    """Append-only registry of recipes.

    Duplicate (inputs, product) registrations coalesce to the existing id.
    Depth bookkeeping is incremental: registering a recipe can only lower
    depths (or make new kinds reachable), so a relaxation worklist keeps the
    memoized map exact. Single-writer; reads are safe anywhere.
    """

    def __init__(self) -> None:
        self._recipes: list[Recipe] = []
        self._by_key: dict[tuple[tuple[str, ...], str], int] = {}
        self._by_product: dict[str, list[int]] = {}
        self._by_input: dict[str, list[int]] = {}
        self._kinds: dict[str, GoodKind] = {}
        self._depth: dict[str, int] = {}
        self._products: list[GoodKind] = []
        self._products_stale = False

    def __len__(self) -> int:
        return len(self._recipes)

    def recipe(self, recipe_id: int) -> Recipe:
        return self._recipes[recipe_id]

    @property
    def recipes(self) -> tuple[Recipe, ...]:
        return tuple(self._recipes)

    def kind(self, kind_id: str) -> GoodKind:
        return self._kinds[kind_id]

    def has_kind(self, kind_id: str) -> bool:
        return kind_id in self._kinds

    def _note_kind(self, kind: GoodKind) -> None:
        if kind.kind_id not in self._kinds:
            self._kinds[kind.kind_id] = kind
        if kind.is_primitive and kind.kind_id not in self._depth:
            self._depth[kind.kind_id] = 0

    def register(
        self,
        inputs: Iterable[GoodKind],
        product: GoodKind,
        delta_e: float,
        step: int,
        *,
        product_count: int = 1,
        seeded: bool = False,
    ) -> tuple[int, bool]:
        """Register a recipe; returns (recipe_id, is_new).

        Rejects empty input multisets, primitive products, and the degenerate
        identity transformation (input multiset consisting solely of copies of
        the product).
        """
        canon = tuple(sorted(inputs, key=lambda k: k.kind_id))
        if not canon:
            raise ValueError("recipe requires at least one input")
        if product.is_primitive:
            raise ValueError(f"recipe product {product.kind_id!r} is primitive")
        if all(k == product for k in canon):
            raise ValueError("degenerate identity transformation")
        key = (tuple(k.kind_id for k in canon), product.kind_id)
        existing = self._by_key.get(key)
        if existing is not None:
            return existing, False
        rid = len(self._recipes)
        recipe = Recipe(rid, canon, product, float(delta_e), int(step),
                        int(product_count), bool(seeded))
        self._recipes.append(recipe)
        self._by_key[key] = rid
        self._by_product.setdefault(product.kind_id, []).append(rid)
        for kid in {k.kind_id for k in canon}:
            self._by_input.setdefault(kid, []).append(rid)
        for k in canon:
            self._note_kind(k)
        self._note_kind(product)
        self._products_stale = True
        self._relax((rid,))
        return rid, True

    def _relax(self, seed_rids: Iterable[int]) -> None:
        work = deque(seed_rids)
        while work:
            rid = work.popleft()
            r = self._recipes[rid]
            depths = [self._depth.get(k.kind_id) for k in r.inputs]
            if any(d is None for d in depths):
                continue
            candidate = 1 + max(depths)
            current = self._depth.get(r.product.kind_id)
            if current is None or candidate < current:
                self._depth[r.product.kind_id] = candidate
                work.extend(self._by_input.get(r.product.kind_id, ()))

    def min_depth(self, kind: GoodKind) -> Optional[int]:
        """Minimum construction depth of a kind, or None if unreachable from
        primitives through the current book. Primitives are depth 0."""
        if kind.is_primitive:
            return 0
        return self._depth.get(kind.kind_id)

    def depth_map(self) -> dict[str, int]:
        """Live kind_id -> depth map (finite depths only). Treat as read-only."""
        return self._depth

    def recipes_producing(self, kind: GoodKind) -> list[int]:
        return list(self._by_product.get(kind.kind_id, ()))

    def recipes_using(self, kind: GoodKind) -> list[int]:
        return list(self._by_input.get(kind.kind_id, ()))

    def product_kinds(self) -> list[GoodKind]:
        """Distinct product kinds, sorted by kind_id."""
        if self._products_stale:
            seen = {r.product.kind_id: r.product for r in self._recipes}
            self._products = [seen[k] for k in sorted(seen)]
            self._products_stale = False
        return self._products

    def known_goods(self, primitives: Iterable[GoodKind]) -> set[GoodKind]:
        out = set(primitives)
        out.update(r.product for r in self._recipes)
        return out

    def export(self) -> list[dict]:
        """JSON-ready list ordered by recipe id."""
        return [
            {
                "id": r.recipe_id,
                "inputs": [k.kind_id for k in r.inputs],
                "product": r.product.kind_id,
                "delta_e": r.delta_e,
                "discovered_at": r.discovered_at,
                "product_count": r.product_count,
            }
            for r in self._recipes
        ]


def decomposition_parts(
    book: RecipeBook, kind: GoodKind, provenance: Optional[int] = None
) -> tuple[int, tuple[GoodKind, ...]]:
    """Parts an instance of ``kind`` breaks into: the inputs of its provenance
    recipe, or of the lowest-id recipe producing the kind when provenance is
    absent. Returns (recipe_id, parts). Errors on primitives and on kinds with
    no producing recipe."""
    if kind.is_primitive:
        raise ValueError(f"primitive {kind.kind_id!r} does not decompose")
    if provenance is not None:
        recipe = book.recipe(provenance)
        if recipe.product != kind:
            raise ValueError(
                f"provenance {provenance} produces {recipe.product.kind_id!r}, "
                f"not {kind.kind_id!r}"
            )
        return provenance, recipe.inputs
    producing = book.recipes_producing(kind)
    if not producing:
        raise ValueError(f"no recipe produces {kind.kind_id!r}")
    return producing[0], book.recipe(producing[0]).inputs
