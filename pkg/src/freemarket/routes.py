"""Synthesis-route enumeration over a recipe book.

A route is an ordered recipe tree expanding a target down to primitives.
Enumeration is a deterministic depth-first walk (recipes in id order), capped
at max_routes, then ranked: most exothermic first, then shallower, then fewer
distinct intermediates, ties by recipe-id sequence.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

from .core import GoodKind, RecipeBook

# ("leaf", kind_id) for primitives, (recipe_id, (child, ...)) otherwise
RouteTree = Union[tuple[str, str], tuple[int, tuple]]


@dataclass(frozen=True)
class SynthesisRoute:
    target: GoodKind
    tree: RouteTree
    recipe_ids: tuple[int, ...]      # post-order, repeats included
    delta_profile: tuple[float, ...]  # per executed step, post-order
    total_delta_e: float
    depth: int
    intermediates: int               # distinct non-primitive kinds below the target


def _trees(book: RecipeBook, kind: GoodKind, banned: frozenset[str],
           limit: int) -> list[RouteTree]:
    if kind.is_primitive:
        return [("leaf", kind.kind_id)]
    out: list[RouteTree] = []
    for rid in book.recipes_producing(kind):
        recipe = book.recipe(rid)
        if any(k.kind_id in banned for k in recipe.inputs):
            continue  # expanding would revisit an ancestor kind
        child_lists = []
        feasible = True
        for inp in recipe.inputs:
            subs = _trees(book, inp, banned | {inp.kind_id}, limit)
            if not subs:
                feasible = False
                break
            child_lists.append(subs)
        if not feasible:
            continue
        stack: list[tuple[int, list[RouteTree]]] = [(0, [])]
        while stack:
            i, chosen = stack.pop()
            if i == len(child_lists):
                out.append((rid, tuple(chosen)))
                if len(out) >= limit:
                    return out
                continue
            # push in reverse so enumeration stays in natural order
            for sub in reversed(child_lists[i]):
                stack.append((i + 1, chosen + [sub]))
    return out


def _walk(tree: RouteTree, book: RecipeBook, rids: list[int],
          deltas: list[float], inter: set[str]) -> int:
    """Post-order walk; returns subtree depth."""
    if tree[0] == "leaf":
        return 0
    rid, children = tree
    depth = 0
    for child in children:
        depth = max(depth, _walk(child, book, rids, deltas, inter))
    recipe = book.recipe(rid)
    rids.append(rid)
    deltas.append(recipe.delta_e)
    inter.add(recipe.product.kind_id)
    return depth + 1


def enumerate_routes(book: RecipeBook, target: GoodKind,
                     max_routes: int = 1000) -> list[SynthesisRoute]:
    """All distinct recipe trees producing target (up to max_routes), ranked.

    Errors on a kind the book has never seen. A primitive target yields the
    single zero-step route (it is already on hand); a known composite kind
    with no producing recipe yields no routes at all.
    """
    if max_routes < 1:
        raise ValueError("max_routes must be >= 1")
    if not target.is_primitive and not book.has_kind(target.kind_id):
        raise ValueError(f"unknown target kind {target.kind_id!r}")
    routes = []
    for tree in _trees(book, target, frozenset({target.kind_id}), max_routes):
        rids: list[int] = []
        deltas: list[float] = []
        inter: set[str] = set()
        depth = _walk(tree, book, rids, deltas, inter)
        inter.discard(target.kind_id)
        routes.append(SynthesisRoute(
            target=target, tree=tree, recipe_ids=tuple(rids),
            delta_profile=tuple(deltas), total_delta_e=sum(deltas),
            depth=depth, intermediates=len(inter)))
    routes.sort(key=lambda r: (-abs(r.total_delta_e), r.depth,
                               r.intermediates, r.recipe_ids))
    return routes


def min_route_depth(routes: list[SynthesisRoute]) -> Optional[int]:
    return min((r.depth for r in routes), default=None)


def assembly_joins(book: RecipeBook, target: GoodKind,
                   max_routes: int = 100000) -> Optional[int]:
    """Minimum joining-operation count over the book's recipe trees for the
    target, counting each distinct sub-assembly once (built objects are
    reusable). None when the target has no route. Intended for small objects;
    enumeration is exhaustive."""
    if target.is_primitive:
        return 0
    best: Optional[int] = None
    for tree in _trees(book, target, frozenset({target.kind_id}), max_routes):
        distinct: set = set()

        def collect(node: RouteTree) -> None:
            if node[0] == "leaf":
                return
            distinct.add(node)
            for child in node[1]:
                collect(child)

        collect(tree)
        joins = len(distinct)
        if best is None or joins < best:
            best = joins
    return best
