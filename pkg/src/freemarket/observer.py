"""Read-only observables over simulation states.

Everything here is pure with respect to the simulation: no observer touches
inventories, the book, or the RNG stream, so runs with and without observers
attached produce identical event logs.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import TYPE_CHECKING, Mapping, Optional

from .core import GoodKind, RecipeBook

if TYPE_CHECKING:
    from .engine import SimulationState


@dataclass(frozen=True)
class CensusSnapshot:
    """Copy counts over all inventories at one instant (between steps)."""

    step: int
    counts: Mapping[GoodKind, int]
    species: int
    objects: int
    max_depth: int


@dataclass(frozen=True)
class DepthBucket:
    species: int
    total_copies: int
    mean_copies: float


@dataclass(frozen=True)
class ObservationRecord:
    step: int
    census: CensusSnapshot
    depth_buckets: dict[int, DepthBucket]
    produced: dict[str, int]


@dataclass(frozen=True)
class RegimeSummary:
    species: int
    objects: int
    max_depth: int
    assembly_a: float


def census(state: "SimulationState") -> CensusSnapshot:
    counts: Counter = Counter()
    for agent in state.agents:
        for kind, total in agent.inventory.kind_counts().items():
            counts[kind] += total
    depths = state.book.depth_map()
    max_depth = 0
    objects = 0
    for kind, n in counts.items():
        if kind.is_primitive:
            continue
        objects += n
        d = depths.get(kind.kind_id)
        if d is not None and d > max_depth:
            max_depth = d
    return CensusSnapshot(step=state.step, counts=dict(counts),
                          species=len(counts), objects=objects,
                          max_depth=max_depth)


def copy_by_depth(snapshot: CensusSnapshot,
                  book: RecipeBook) -> dict[int, DepthBucket]:
    """Species count and mean copies per species, grouped by depth. Kinds
    without a finite depth (possible only in cyclic seeded books) are
    excluded; primitives appear at depth 0."""
    depths = book.depth_map()
    species: Counter = Counter()
    copies: Counter = Counter()
    for kind, n in snapshot.counts.items():
        d = 0 if kind.is_primitive else depths.get(kind.kind_id)
        if d is None:
            continue
        species[d] += 1
        copies[d] += n
    return {
        d: DepthBucket(species[d], copies[d], copies[d] / species[d])
        for d in sorted(species)
    }


def assembly_a(snapshot: CensusSnapshot, book: RecipeBook,
               include_primitives: bool = False) -> float:
    """Assembly measure A = sum_i e^(depth_i) * (n_i - 1) / N_T.

    N_T counts the same population the sum ranges over: non-primitive objects
    by default, everything when include_primitives is set. Errors on an empty
    population."""
    depths = book.depth_map()
    n_total = 0
    terms = []
    for kind, n in snapshot.counts.items():
        if kind.is_primitive and not include_primitives:
            continue
        d = 0 if kind.is_primitive else depths.get(kind.kind_id)
        if d is None:
            continue
        n_total += n
        terms.append((d, n))
    if n_total == 0:
        raise ValueError("assembly measure undefined on an empty population")
    return sum(math.exp(d) * (n - 1) for d, n in terms) / n_total


def amplification(buckets: dict[int, DepthBucket], *, min_depth: int = 1,
                  ) -> Optional[tuple[float, int, int]]:
    """Largest mean-copies ratio between a deeper and a shallower bucket,
    considering depths >= min_depth only. Returns (ratio, d_low, d_high) or
    None when fewer than two eligible buckets exist. A ratio above 1 marks a
    non-monotonic (selection-shaped) copy profile."""
    depths = [d for d in sorted(buckets) if d >= min_depth]
    best: Optional[tuple[float, int, int]] = None
    for i, d in enumerate(depths):
        low = buckets[d].mean_copies
        if low <= 0:
            continue
        for dd in depths[i + 1:]:
            ratio = buckets[dd].mean_copies / low
            if best is None or ratio > best[0]:
                best = (ratio, d, dd)
    return best


def observe(state: "SimulationState") -> ObservationRecord:
    snap = census(state)
    return ObservationRecord(
        step=state.step, census=snap,
        depth_buckets=copy_by_depth(snap, state.book),
        produced=dict(state.produced_last_step))


def regime_summary(records: list[ObservationRecord],
                   book: RecipeBook) -> RegimeSummary:
    """Final-snapshot species/objects/A plus the maximum depth observed at
    any step of the run."""
    if not records:
        return RegimeSummary(0, 0, 0, 0.0)
    final = records[-1].census
    max_depth = max(r.census.max_depth for r in records)
    # cyclic seeded books hold objects whose depth is undefined; they carry
    # no assembly signal, so the measure stays at zero rather than erroring
    depths = book.depth_map()
    measurable = any(not kind.is_primitive
                     and depths.get(kind.kind_id) is not None
                     for kind in final.counts)
    a = assembly_a(final, book) if measurable else 0.0
    return RegimeSummary(species=final.species, objects=final.objects,
                         max_depth=max_depth, assembly_a=a)


# ----------------------------------------------------------------------
# production-network export


def export_network(state: "SimulationState") -> dict:
    """Bipartite production network: kind nodes and recipe nodes, edges
    input -> recipe -> product, plus current firm annotations."""
    snap = census(state)
    depths = state.book.depth_map()
    kinds = {k.kind_id: k for k in state.book.known_goods(state.primitives)}
    for kind in snap.counts:
        kinds.setdefault(kind.kind_id, kind)
    kind_rows = []
    for kid in sorted(kinds):
        kind = kinds[kid]
        d = 0 if kind.is_primitive else depths.get(kid)
        kind_rows.append({
            "id": kid,
            "depth": d,
            "count": snap.counts.get(kind, 0),
            "primitive": kind.is_primitive,
        })
    recipe_rows = []
    edges = []
    for r in state.book.recipes:
        node = f"r{r.recipe_id}"
        recipe_rows.append({
            "id": r.recipe_id,
            "delta_e": r.delta_e,
            "product": r.product.kind_id,
            "inputs": [k.kind_id for k in r.inputs],
            "product_count": r.product_count,
        })
        for kid in sorted({k.kind_id for k in r.inputs}):
            edges.append({"from": kid, "to": node})
        edges.append({"from": node, "to": r.product.kind_id})
    firms = [
        {"position": a.position, "recipe": a.firm.recipe_id,
         "unsold_streak": a.firm.unsold_streak, "opened_at": a.firm.opened_at}
        for a in state.agents if a.firm is not None
    ]
    return {"kinds": kind_rows, "recipes": recipe_rows, "edges": edges,
            "firms": firms}


def network_to_dot(doc: dict) -> str:
    """Render an exported network as a DOT digraph."""
    lines = ["digraph production {", "  rankdir=LR;"]
    for row in doc["kinds"]:
        d = row["depth"]
        depth_txt = "?" if d is None else str(d)
        shape = "doublecircle" if row["primitive"] else "ellipse"
        lines.append(
            f'  "{row["id"]}" [shape={shape}, '
            f'label="{row["id"]}\\nd={depth_txt} n={row["count"]}"];')
    for row in doc["recipes"]:
        lines.append(
            f'  "r{row["id"]}" [shape=box, '
            f'label="r{row["id"]}\\ndE={row["delta_e"]:g}"];')
    for e in doc["edges"]:
        lines.append(f'  "{e["from"]}" -> "{e["to"]}";')
    lines.append("}")
    return "\n".join(lines) + "\n"
